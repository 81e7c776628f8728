//! Candidate test functions and the search over them.
//!
//! A candidate is a table of `ln g` at the points of a dual view (one table
//! per function for mixed quantities). The objective is any function of those
//! tables; normalisation happens inside it. The search evaluates the scaled
//! base first, then injected tables, then simplex searches over Gaussian and
//! perturbed-base charts, and keeps the best table seen.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::funcrep::RegularSet;
use crate::hfunc::Direction;
use crate::optim::{nelder_mead, NelderMeadOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FamilyKind {
    /// `g = tau * base`, where the base is `F2∘psi*` (or the s-concave `g1`).
    BaseScaled,
    /// `g(y) = exp(-<B(y - mu), y - mu>/2)`, `B = L L^t`.
    GaussianParametric,
    /// `base * exp(linear + quadratic)` in standardised coordinates.
    TabledPerturbation,
}

/// A fixed candidate supplied from outside the search.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub label: String,
    /// `ln g` per block, each aligned with that block's view points.
    pub ln_tables: Vec<Vec<f64>>,
    pub logconcave: bool,
}

#[derive(Clone, Debug)]
pub struct CandidateFamily {
    pub kinds: Vec<FamilyKind>,
    /// Overrides the quantity's own normalisation target when set.
    pub target: Option<f64>,
    pub logconcave_only: bool,
    pub injected: Vec<Candidate>,
    /// Simplex iterations per parameter.
    pub iterations_per_param: usize,
    pub rel_tol: f64,
}

impl Default for CandidateFamily {
    fn default() -> Self {
        Self::all()
    }
}

impl CandidateFamily {
    /// Every kind, positive test functions.
    pub fn all() -> Self {
        CandidateFamily {
            kinds: vec![FamilyKind::BaseScaled, FamilyKind::GaussianParametric, FamilyKind::TabledPerturbation],
            target: None,
            logconcave_only: false,
            injected: Vec::new(),
            iterations_per_param: 200,
            rel_tol: 1e-6,
        }
    }

    /// Every kind, restricted to log-concave tables.
    pub fn logconcave() -> Self {
        CandidateFamily { logconcave_only: true, ..Self::all() }
    }

    pub fn only(kinds: &[FamilyKind]) -> Self {
        CandidateFamily { kinds: kinds.to_vec(), ..Self::all() }
    }

    pub fn with_logconcave_only(mut self, on: bool) -> Self {
        self.logconcave_only = on;
        self
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.target = Some(target);
        self
    }

    pub fn with_candidate(mut self, c: Candidate) -> Self {
        self.injected.push(c);
        self
    }

    pub fn with_iterations_per_param(mut self, k: usize) -> Self {
        self.iterations_per_param = k;
        self
    }

    pub fn has(&self, kind: FamilyKind) -> bool {
        self.kinds.contains(&kind)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VariationalResult {
    pub value: f64,
    /// Which candidate won: `base`, `gaussian/<seed>`, `perturbed`, or an
    /// injected label.
    pub argmin_family: String,
    pub argmin_params: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// `(value - reference) / |reference|` against an analytic or direct
    /// value; NaN when there is none.
    pub bound_gap: f64,
    #[serde(skip)]
    pub ln_tables: Vec<Vec<f64>>,
    #[serde(skip)]
    pub logconcave: bool,
}

impl VariationalResult {
    pub fn with_reference(mut self, reference: f64) -> Self {
        self.bound_gap = (self.value - reference) / reference.abs();
        self
    }

    /// The winning table as a candidate for another search over the same
    /// points.
    pub fn as_candidate(&self, label: &str) -> Candidate {
        Candidate { label: label.to_string(), ln_tables: self.ln_tables.clone(), logconcave: self.logconcave }
    }

    pub(crate) fn scalar(value: f64, label: &str) -> Self {
        VariationalResult {
            value,
            argmin_family: label.to_string(),
            argmin_params: Vec::new(),
            iterations: 0,
            evaluations: 1,
            converged: true,
            bound_gap: f64::NAN,
            ln_tables: Vec::new(),
            logconcave: true,
        }
    }
}

/// Points a block's candidates live on, with the base table.
pub(crate) struct Block<'a> {
    /// Dual points and dual-side weights (Lebesgue measure pushed forward).
    pub view: &'a RegularSet,
    pub ln_base: Vec<f64>,
    pub base_logconcave: bool,
}

/// Weighted mean and covariance of the base distribution over the view.
struct Moments {
    mean: Vec<f64>,
    /// Per-axis standard deviation.
    sd: Vec<f64>,
    cov: DMatrix<f64>,
}

fn moments(block: &Block) -> Moments {
    let v = block.view;
    let n = v.dim;
    let top = block.ln_base.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let p: Vec<f64> = (0..v.len()).map(|i| v.weights[i] * (block.ln_base[i] - top).exp()).collect();
    let total: f64 = p.iter().sum();
    let mut mean = vec![0.0; n];
    for i in 0..v.len() {
        for k in 0..n {
            mean[k] += p[i] * v.position(i)[k] / total;
        }
    }
    let mut cov = DMatrix::<f64>::zeros(n, n);
    for i in 0..v.len() {
        let y = v.position(i);
        for a in 0..n {
            for b in 0..n {
                cov[(a, b)] += p[i] * (y[a] - mean[a]) * (y[b] - mean[b]) / total;
            }
        }
    }
    let sd = (0..n).map(|k| cov[(k, k)].max(1e-12).sqrt()).collect();
    Moments { mean, sd, cov }
}

fn tri_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Lower-triangular matrix from packed entries, diagonal exponentiated when
/// `exp_diag`.
fn unpack_lower(n: usize, p: &[f64], exp_diag: bool) -> DMatrix<f64> {
    let mut l = DMatrix::<f64>::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in 0..=i {
            l[(i, j)] = if i == j && exp_diag { p[k].exp() } else { p[k] };
            k += 1;
        }
    }
    l
}

fn pack_lower(l: &DMatrix<f64>, log_diag: bool) -> Vec<f64> {
    let n = l.nrows();
    let mut out = Vec::with_capacity(tri_len(n));
    for i in 0..n {
        for j in 0..=i {
            out.push(if i == j && log_diag { l[(i, j)].ln() } else { l[(i, j)] });
        }
    }
    out
}

/// `ln g = -|L^t (y - mu)|^2 / 2` with params `[packed L (log diag), mu]`.
fn gaussian_table(view: &RegularSet, p: &[f64], out: &mut Vec<f64>) {
    let n = view.dim;
    let l = unpack_lower(n, &p[..tri_len(n)], true);
    let mu = &p[tri_len(n)..];
    out.clear();
    let mut d = vec![0.0; n];
    for i in 0..view.len() {
        let y = view.position(i);
        for k in 0..n {
            d[k] = y[k] - mu[k];
        }
        let mut q = 0.0;
        for j in 0..n {
            // (L^t d)_j = sum_i L[i][j] d_i
            let mut s = 0.0;
            for i2 in j..n {
                s += l[(i2, j)] * d[i2];
            }
            q += s * s;
        }
        out.push(-0.5 * q);
    }
}

/// Gaussian parameters for precision `B`, centred at `mu`.
fn gaussian_params(b: &DMatrix<f64>, mu: &[f64]) -> Option<Vec<f64>> {
    let l = b.clone().cholesky()?.l();
    let mut p = pack_lower(&l, true);
    p.extend_from_slice(mu);
    Some(p)
}

/// Perturbed base: `ln base + <lin, u> - u^t Q u / 2`, `u` standardised.
/// Log-concave charts use `Q = M M^t`; free charts use a symmetric `Q`.
fn perturbed_table(block: &Block, m: &Moments, p: &[f64], psd: bool, out: &mut Vec<f64>) {
    let view = block.view;
    let n = view.dim;
    let lin = &p[..n];
    let qm = unpack_lower(n, &p[n..n + tri_len(n)], false);
    let q = if psd { &qm * qm.transpose() } else { (&qm + qm.transpose()) * 0.5 };
    out.clear();
    let mut u = vec![0.0; n];
    for i in 0..view.len() {
        let y = view.position(i);
        for k in 0..n {
            u[k] = (y[k] - m.mean[k]) / m.sd[k];
        }
        let mut quad = 0.0;
        let mut l = 0.0;
        for a in 0..n {
            l += lin[a] * u[a];
            for b in 0..n {
                quad += q[(a, b)] * u[a] * u[b];
            }
        }
        out.push(block.ln_base[i] + l - 0.5 * quad);
    }
}

struct Tracker {
    sign: f64,
    best: f64,
    label: String,
    params: Vec<f64>,
    tables: Vec<Vec<f64>>,
    logconcave: bool,
    evaluations: usize,
}

impl Tracker {
    /// Offers a candidate; returns the objective in minimisation form.
    fn offer(&mut self, value: f64, label: &str, params: &[f64], tables: &[Vec<f64>], logconcave: bool) -> f64 {
        self.evaluations += 1;
        if !value.is_finite() {
            return f64::INFINITY;
        }
        let signed = self.sign * value;
        if signed < self.sign * self.best || !self.best.is_finite() {
            self.best = value;
            self.label = label.to_string();
            self.params = params.to_vec();
            self.tables = tables.to_vec();
            self.logconcave = logconcave;
        }
        signed
    }
}

/// Runs the search. `objective` receives one `ln g` table per block.
pub(crate) fn optimize(
    blocks: &[Block],
    direction: Direction,
    family: &CandidateFamily,
    objective: &dyn Fn(&[Vec<f64>]) -> f64,
) -> VariationalResult {
    let sign = match direction {
        Direction::Minimize => 1.0,
        Direction::Maximize => -1.0,
    };
    let mut tr = Tracker {
        sign,
        best: f64::NAN,
        label: String::new(),
        params: Vec::new(),
        tables: Vec::new(),
        logconcave: false,
        evaluations: 0,
    };
    let lc_only = family.logconcave_only;
    let base_ok = blocks.iter().all(|b| b.base_logconcave);
    let mut iterations = 0usize;
    let mut converged = true;

    if family.has(FamilyKind::BaseScaled) && (!lc_only || base_ok) {
        let tables: Vec<Vec<f64>> = blocks.iter().map(|b| b.ln_base.clone()).collect();
        tr.offer(objective(&tables), "base", &[], &tables, base_ok);
    }
    for c in &family.injected {
        let aligned = c.ln_tables.len() == blocks.len()
            && c.ln_tables.iter().zip(blocks).all(|(t, b)| t.len() == b.view.len());
        if aligned && (!lc_only || c.logconcave) {
            tr.offer(objective(&c.ln_tables), &c.label, &[], &c.ln_tables, c.logconcave);
        }
    }

    let stats: Vec<Moments> = blocks.iter().map(moments).collect();
    let mut tables: Vec<Vec<f64>> = vec![Vec::new(); blocks.len()];

    if family.has(FamilyKind::GaussianParametric) {
        let per: Vec<usize> = blocks.iter().map(|b| tri_len(b.view.dim) + b.view.dim).collect();
        let total: usize = per.iter().sum();
        let opts = NelderMeadOptions {
            max_iter: family.iterations_per_param * total.max(1),
            rel_tol: family.rel_tol,
            abs_floor: 1e-300,
        };
        let seeds: [(&str, f64); 3] = [("identity", 0.0), ("base-matched", 1.0), ("wide", 0.25)];
        for (name, scale) in seeds {
            let mut x0 = Vec::with_capacity(total);
            let mut step = Vec::with_capacity(total);
            for (b, m) in blocks.iter().zip(&stats) {
                let n = b.view.dim;
                let p = if scale == 0.0 {
                    gaussian_params(&DMatrix::identity(n, n), &vec![0.0; n])
                } else {
                    m.cov.clone().try_inverse().and_then(|prec| gaussian_params(&(prec * scale), &m.mean))
                };
                let p = p.unwrap_or_else(|| gaussian_params(&DMatrix::identity(n, n), &vec![0.0; n]).unwrap());
                let l = unpack_lower(n, &p[..tri_len(n)], true);
                let width = (0..n).map(|k| 1.0 / l[(k, k)]).sum::<f64>() / n as f64;
                let mut k = 0;
                for i in 0..n {
                    for j in 0..=i {
                        step.push(if i == j { 0.3 } else { 0.3 * l[(i, i)] });
                        k += 1;
                    }
                }
                debug_assert_eq!(k, tri_len(n));
                step.extend(std::iter::repeat_n(0.3 * width, n));
                x0.extend(p);
            }
            let label = format!("gaussian/{name}");
            let run = nelder_mead(
                |x: &[f64]| {
                    let mut off = 0;
                    for (bi, b) in blocks.iter().enumerate() {
                        gaussian_table(b.view, &x[off..off + per[bi]], &mut tables[bi]);
                        off += per[bi];
                    }
                    tr.offer(objective(&tables), &label, x, &tables, true)
                },
                &x0,
                &step,
                &opts,
            );
            iterations += run.iterations;
            converged &= run.converged;
        }
    }

    if family.has(FamilyKind::TabledPerturbation) && (!lc_only || base_ok) {
        let psd = lc_only;
        let per: Vec<usize> = blocks.iter().map(|b| b.view.dim + tri_len(b.view.dim)).collect();
        let total: usize = per.iter().sum();
        let opts = NelderMeadOptions {
            max_iter: family.iterations_per_param * total.max(1),
            rel_tol: family.rel_tol,
            abs_floor: 1e-300,
        };
        let x0 = vec![0.0; total];
        let step = vec![0.2; total];
        let run = nelder_mead(
            |x: &[f64]| {
                let mut off = 0;
                for (bi, b) in blocks.iter().enumerate() {
                    perturbed_table(b, &stats[bi], &x[off..off + per[bi]], psd, &mut tables[bi]);
                    off += per[bi];
                }
                tr.offer(objective(&tables), "perturbed", x, &tables, psd && base_ok)
            },
            &x0,
            &step,
            &opts,
        );
        iterations += run.iterations;
        converged &= run.converged;
    }

    VariationalResult {
        value: tr.best,
        argmin_family: tr.label,
        argmin_params: tr.params,
        iterations,
        evaluations: tr.evaluations,
        converged,
        bound_gap: f64::NAN,
        ln_tables: tr.tables,
        logconcave: tr.logconcave,
    }
}

/// `ln g(y)` of a Gaussian candidate with precision `b` and centre `mu`, for
/// building injected tables.
pub fn gaussian_ln_table(view: &RegularSet, precision: &DMatrix<f64>, mu: &[f64]) -> Option<Vec<f64>> {
    let p = gaussian_params(precision, mu)?;
    let mut out = Vec::new();
    gaussian_table(view, &p, &mut out);
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcrep::{regular_set, FunctionRep, Grid};
    use crate::transforms::legendre_view;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn view() -> RegularSet {
        let psi = FunctionRep::gaussian(2, 1.0).unwrap();
        legendre_view(&regular_set(&psi, &Grid::cube(2, 6.0, 41).unwrap()).unwrap())
    }

    #[test]
    fn gaussian_chart_round_trips() {
        let v = view();
        let b = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let t = gaussian_ln_table(&v, &b, &[0.5, -0.2]).unwrap();
        for i in (0..v.len()).step_by(97) {
            let y = v.position(i);
            let d = [y[0] - 0.5, y[1] + 0.2];
            let q = b[(0, 0)] * d[0] * d[0] + 2.0 * b[(0, 1)] * d[0] * d[1] + b[(1, 1)] * d[1] * d[1];
            assert_relative_eq!(t[i], -0.5 * q, max_relative = 1e-12, epsilon = 1e-14);
        }
    }

    #[test]
    fn search_finds_moment_optimum_and_tracks_best() {
        // minimise the relative entropy-like objective sum w (g - target)^2;
        // the target is itself Gaussian so the chart contains it
        let v = view();
        let target = gaussian_ln_table(&v, &DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 2.0])), &[0.3, 0.0]).unwrap();
        let block = Block { view: &v, ln_base: vec![0.0; v.len()], base_logconcave: true };
        let obj = |t: &[Vec<f64>]| -> f64 {
            (0..v.len()).map(|i| v.weights[i] * (t[0][i].exp() - target[i].exp()).powi(2)).sum::<f64>()
        };
        let fam = CandidateFamily::only(&[FamilyKind::BaseScaled, FamilyKind::GaussianParametric]);
        let r = optimize(&[block], Direction::Minimize, &fam, &obj);
        assert!(r.value < 1e-6, "{}", r.value);
        assert!(r.argmin_family.starts_with("gaussian"));
        assert!(r.value <= obj(&[vec![0.0; v.len()]]));
        assert_relative_eq!(obj(&r.ln_tables), r.value);
    }

    #[test]
    fn injected_candidates_win_when_exact() {
        let v = view();
        let target: Vec<f64> = (0..v.len()).map(|i| -v.position(i)[0].abs()).collect();
        let obj = |t: &[Vec<f64>]| -> f64 { (0..v.len()).map(|i| v.weights[i] * (t[0][i] - target[i]).powi(2)).sum() };
        let fam = CandidateFamily::all().with_candidate(Candidate {
            label: "exact".into(),
            ln_tables: vec![target.clone()],
            logconcave: true,
        });
        let block = Block { view: &v, ln_base: vec![0.0; v.len()], base_logconcave: true };
        let r = optimize(&[block], Direction::Minimize, &fam, &obj);
        assert_eq!(r.value, 0.0);
        assert_eq!(r.argmin_family, "exact");
    }

    #[test]
    fn maximisation_and_logconcave_filter() {
        let v = view();
        let block = || Block { view: &v, ln_base: vec![0.0; v.len()], base_logconcave: false };
        let obj = |t: &[Vec<f64>]| -> f64 { -(t[0][0] - 1.0).powi(2) };
        let fam = CandidateFamily::logconcave().with_candidate(Candidate {
            label: "not-lc".into(),
            ln_tables: vec![vec![1.0; v.len()]],
            logconcave: false,
        });
        let r = optimize(&[block()], Direction::Maximize, &fam, &obj);
        assert_ne!(r.argmin_family, "not-lc");
        assert_ne!(r.argmin_family, "base");
        assert!(r.logconcave);
    }
}
