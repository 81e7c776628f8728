//! Derivative-free Nelder–Mead simplex minimisation.

#[derive(Clone, Debug)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Stop when `f_worst - f_best <= rel_tol * max(|f_best|, abs_floor)`.
    pub rel_tol: f64,
    pub abs_floor: f64,
}

impl NelderMeadOptions {
    /// 200·dim iterations, relative tolerance 1e-6.
    pub fn for_dim(dim: usize) -> Self {
        NelderMeadOptions { max_iter: 200 * dim.max(1), rel_tol: 1e-6, abs_floor: 1e-300 }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimises `f` from `x0` with an initial simplex of per-coordinate `step`s.
/// Non-finite objective values are treated as `+inf`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0usize;
    let mut call = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if n == 0 {
        let v = call(x0, &mut evals);
        return Minimum { point: vec![], value: v, iterations: 0, evaluations: evals, converged: true };
    }
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for k in 0..n {
        let mut p = x0.to_vec();
        p[k] += step[k];
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| call(p, &mut evals)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        // Stable sort keeps ties in their previous order.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let best = values[0];
        let worst = values[n];
        if best.is_finite() && worst - best <= opts.rel_tol * best.abs().max(opts.abs_floor) {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for p in &simplex[..n] {
            for k in 0..n {
                centroid[k] += p[k] / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> { (0..n).map(|k| centroid[k] + t * (simplex[n][k] - centroid[k])).collect() };

        let reflected = along(-alpha);
        let fr = call(&reflected, &mut evals);
        if fr < values[0] {
            let expanded = along(-alpha * gamma);
            let fe = call(&expanded, &mut evals);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[n] {
            let c = along(-alpha * rho);
            let fc = call(&c, &mut evals);
            (c, fc)
        } else {
            let c = along(rho);
            let fc = call(&c, &mut evals);
            (c, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = contracted;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            let p: Vec<f64> = (0..n).map(|k| simplex[0][k] + sigma * (simplex[i][k] - simplex[0][k])).collect();
            values[i] = call(&p, &mut evals);
            simplex[i] = p;
        }
    }
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] < values[best] {
            best = i;
        }
    }
    Minimum { point: simplex[best].clone(), value: values[best], iterations, evaluations: evals, converged }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = NelderMeadOptions { max_iter: 5000, rel_tol: 1e-14, abs_floor: 1e-14 };
        let m = nelder_mead(f, &[-1.2, 1.0], &[0.1, 0.1], &opts);
        assert!(m.converged);
        assert_abs_diff_eq!(m.point[0], 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(m.point[1], 1.0, epsilon = 1e-4);
    }

    #[test]
    fn respects_iteration_cap() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>() + 1.0;
        let opts = NelderMeadOptions { max_iter: 3, rel_tol: 0.0, abs_floor: 0.0 };
        let m = nelder_mead(f, &[5.0, 5.0, 5.0], &[1.0, 1.0, 1.0], &opts);
        assert!(!m.converged);
        assert_eq!(m.iterations, 3);
    }

    #[test]
    fn infinite_regions_are_avoided() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 2.0).powi(2) + 1.0 };
        let m = nelder_mead(f, &[0.5], &[0.5], &NelderMeadOptions { max_iter: 500, rel_tol: 1e-12, abs_floor: 1.0 });
        assert_abs_diff_eq!(m.point[0], 2.0, epsilon = 1e-4);
    }
}
