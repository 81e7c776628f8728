//! Orlicz mixed integrals and the affine / geominimal surface areas of
//! log-concave functions `F(psi)`.
//!
//! Everything is evaluated on the primal regular set `X_psi`. Dual-side
//! integrals `∫ g dy` over the image of the gradient map are sums over the
//! Legendre view, so a test function only needs values at `grad psi(x)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{optimize, Block, Candidate, CandidateFamily, VariationalResult};
use crate::funcrep::{regular_set, FunctionRep, Grid, Kind, RegularSet};
use crate::hfunc::{Direction, OrliczFunction};
use crate::quadrature::{halving_estimate, pairwise_sum, radial_integral, truncated_sum, IntegralResult, WeightFunction};
use crate::transforms::{default_count, legendre_view, log_sum_exp};

/// `(sqrt(2 pi))^n`, the Gaussian mass every test function is scaled to.
pub fn gaussian_mass(n: usize) -> f64 {
    (2.0 * PI).powf(n as f64 / 2.0)
}

/// The grid to integrate on: the given one, the sampled grid of a sampled
/// potential, or the suggested box at the default resolution.
pub fn resolve_grid(psi: &FunctionRep, grid: Option<&Grid>) -> Result<Grid> {
    match grid {
        Some(g) => Ok(g.clone()),
        None => match psi.sampled_grid() {
            Some(g) if psi.map().is_none() => Ok(g.clone()),
            _ => psi.suggested_grid(default_count(psi.dim())),
        },
    }
}

/// A regular set and its Legendre view, computed once and shared by several
/// functionals.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub grid: Grid,
    pub rs: RegularSet,
    pub view: RegularSet,
}

impl Prepared {
    pub fn new(psi: &FunctionRep, grid: Option<&Grid>) -> Result<Self> {
        let grid = resolve_grid(psi, grid)?;
        let rs = regular_set(psi, &grid)?;
        Self::from_regular_set(grid, rs)
    }

    pub fn from_regular_set(grid: Grid, rs: RegularSet) -> Result<Self> {
        if rs.is_empty() {
            return Err(Error::Degenerate("regular set is empty on this grid".into()));
        }
        let view = legendre_view(&rs);
        Ok(Prepared { grid, rs, view })
    }

    pub fn dim(&self) -> usize {
        self.rs.dim
    }

    /// The same data for the conjugate potential: positions and gradients
    /// swap, so the view of this set is the original regular set.
    pub fn conjugate(&self) -> Result<Self> {
        if self.view.hessians.is_empty() {
            return Err(Error::Invalid("conjugate needs tracked Hessians".into()));
        }
        Self::from_regular_set(self.grid.clone(), self.view.clone())
    }

    /// `I(F∘psi) = ∫ F(psi)`.
    pub fn primal_integral(&self, f: &WeightFunction) -> f64 {
        pairwise_sum(&self.primal_terms(f))
    }

    /// `I(F∘psi*) = ∫ F(psi*)` over the gradient image.
    pub fn dual_integral(&self, f: &WeightFunction) -> f64 {
        let v = &self.view;
        let terms: Vec<f64> = (0..v.len()).map(|i| v.weights[i] * f.eval(v.values[i])).collect();
        pairwise_sum(&terms)
    }

    pub(crate) fn primal_terms(&self, f: &WeightFunction) -> Vec<f64> {
        (0..self.rs.len()).map(|i| self.rs.weights[i] * f.eval(self.rs.values[i])).collect()
    }

    /// `ln ∫ g dy` for a table of `ln g` on the view.
    pub(crate) fn ln_dual_mass(&self, ln_g: &[f64]) -> f64 {
        let terms: Vec<f64> = (0..self.view.len()).map(|i| self.view.weights[i].ln() + ln_g[i]).collect();
        log_sum_exp(&terms)
    }

    /// `ln F2(psi*(grad psi))` per point.
    pub(crate) fn ln_base(&self, f2: &WeightFunction) -> Vec<f64> {
        self.view.values.iter().map(|v| f2.ln_eval(*v)).collect()
    }

    pub(crate) fn block(&self, f2: &WeightFunction) -> Block<'_> {
        Block { view: &self.view, ln_base: self.ln_base(f2), base_logconcave: base_is_logconcave(f2) }
    }
}

/// `F2∘psi*` is log-concave when `F2` is non-increasing and log-concave.
pub fn base_is_logconcave(f2: &WeightFunction) -> bool {
    f2.is_decreasing() && f2.is_logconcave()
}

fn check_p(p: f64, n: usize) -> Result<()> {
    if p == -(n as f64) || !p.is_finite() {
        return Err(Error::Invalid(format!("p = {p} is excluded (p must be finite and != -n)")));
    }
    Ok(())
}

fn with_coarse<T>(
    psi: &FunctionRep,
    grid: Option<&Grid>,
    f: impl Fn(&Prepared) -> Result<f64>,
    wrap: impl Fn(&Prepared, f64) -> Result<T>,
) -> Result<(T, f64)> {
    let fine = Prepared::new(psi, grid)?;
    let v = f(&fine)?;
    let coarse = Prepared::new(psi, Some(&fine.grid.coarsened()?)).and_then(|c| f(&c))?;
    Ok((wrap(&fine, v)?, halving_estimate(v, coarse)))
}

fn integral(prep: &Prepared, terms: &[f64]) -> Result<IntegralResult> {
    truncated_sum(&prep.rs, terms)
}

/// Terms of `V_h(psi, g) = ∫ h(g(grad psi) / F2(psi*(grad psi))) F1(psi) dx`.
fn mixed_terms(
    h: &OrliczFunction,
    f1: &WeightFunction,
    f2: &WeightFunction,
    prep: &Prepared,
    g: &dyn Fn(&[f64]) -> f64,
) -> Result<Vec<f64>> {
    let rs = &prep.rs;
    (0..rs.len())
        .map(|i| {
            let y = rs.gradient(i);
            let gy = g(y);
            if !(gy > 0.0) {
                return Err(Error::Invalid(format!("test function is {gy} at {y:?}; h needs a positive argument")));
            }
            let arg = gy / f2.eval(prep.view.values[i]);
            Ok(rs.weights[i] * h.eval(arg) * f1.eval(rs.values[i]))
        })
        .collect()
}

/// `V_h(psi, g)` on prepared data.
pub fn mixed_integral_on(
    h: &OrliczFunction,
    f1: &WeightFunction,
    f2: &WeightFunction,
    prep: &Prepared,
    g: &dyn Fn(&[f64]) -> f64,
) -> Result<IntegralResult> {
    integral(prep, &mixed_terms(h, f1, f2, prep, g)?)
}

/// The Orlicz mixed integral `V_{h,F1,F2}(psi, g)`, with an error estimate
/// from one grid halving.
pub fn mixed_integral(
    h: &OrliczFunction,
    f1: &WeightFunction,
    f2: &WeightFunction,
    psi: &FunctionRep,
    grid: Option<&Grid>,
    g: &dyn Fn(&[f64]) -> f64,
) -> Result<IntegralResult> {
    let (mut out, err) = with_coarse(
        psi,
        grid,
        |p| Ok(pairwise_sum(&mixed_terms(h, f1, f2, p, g)?)),
        |p, _| mixed_integral_on(h, f1, f2, p, g),
    )?;
    out.est_error = err;
    Ok(out)
}

fn vp_terms(p: f64, f1: &WeightFunction, f2: &WeightFunction, prep: &Prepared, g: &dyn Fn(&[f64]) -> f64) -> Result<Vec<f64>> {
    let n = prep.dim() as f64;
    let rs = &prep.rs;
    (0..rs.len())
        .map(|i| {
            let y = rs.gradient(i);
            let gy = g(y);
            if !(gy > 0.0) {
                return Err(Error::Invalid(format!("test function is {gy} at {y:?}")));
            }
            Ok(rs.weights[i] * (f2.eval(prep.view.values[i]) / gy).powf(p / n) * f1.eval(rs.values[i]))
        })
        .collect()
}

/// `V_p(psi, g) = ∫ (F2(psi*(grad psi)) / g(grad psi))^{p/n} F1(psi) dx`.
pub fn vp_on(p: f64, f1: &WeightFunction, f2: &WeightFunction, prep: &Prepared, g: &dyn Fn(&[f64]) -> f64) -> Result<IntegralResult> {
    check_p(p, prep.dim())?;
    integral(prep, &vp_terms(p, f1, f2, prep, g)?)
}

pub fn vp(
    p: f64,
    f1: &WeightFunction,
    f2: &WeightFunction,
    psi: &FunctionRep,
    grid: Option<&Grid>,
    g: &dyn Fn(&[f64]) -> f64,
) -> Result<IntegralResult> {
    check_p(p, psi.dim())?;
    let (mut out, err) = with_coarse(
        psi,
        grid,
        |pr| Ok(pairwise_sum(&vp_terms(p, f1, f2, pr, g)?)),
        |pr, _| vp_on(p, f1, f2, pr, g),
    )?;
    out.est_error = err;
    Ok(out)
}

fn asp_terms(p: f64, f1: &WeightFunction, f2: &WeightFunction, prep: &Prepared) -> Vec<f64> {
    let n = prep.dim() as f64;
    let (a, b) = (n / (n + p), p / (n + p));
    let rs = &prep.rs;
    (0..rs.len())
        .map(|i| {
            let base = f1.eval(rs.values[i]).powf(a);
            if b == 0.0 {
                rs.weights[i] * base
            } else {
                rs.weights[i] * base * (f2.eval(prep.view.values[i]) * rs.hess_dets[i]).powf(b)
            }
        })
        .collect()
}

/// `as_p(psi) = ∫ F1(psi)^{n/(n+p)} (F2(psi*(grad psi)) det ∇²psi)^{p/(n+p)} dx`.
pub fn asp_direct_on(p: f64, f1: &WeightFunction, f2: &WeightFunction, prep: &Prepared) -> Result<IntegralResult> {
    check_p(p, prep.dim())?;
    if let Some(i) = prep.rs.hess_dets.iter().position(|d| !(*d > 0.0)) {
        return Err(Error::Invalid(format!(
            "Hessian determinant {} at {:?}: data is not convex",
            prep.rs.hess_dets[i],
            prep.rs.position(i)
        )));
    }
    integral(prep, &asp_terms(p, f1, f2, prep))
}

pub fn asp_direct(p: f64, f1: &WeightFunction, f2: &WeightFunction, psi: &FunctionRep, grid: Option<&Grid>) -> Result<IntegralResult> {
    check_p(p, psi.dim())?;
    let (mut out, err) = with_coarse(
        psi,
        grid,
        |pr| Ok(pairwise_sum(&asp_terms(p, f1, f2, pr))),
        |pr, _| asp_direct_on(p, f1, f2, pr),
    )?;
    out.est_error = err;
    Ok(out)
}

/// The optimal test function for `as_p`, tabulated at the points
/// `y = grad psi(x)` of the regular set.
#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub dim: usize,
    /// Dual points, flattened.
    pub points: Vec<f64>,
    /// `g0(grad psi(x)) = F2(psi*)^{p/(n+p)} (F1(psi) / det ∇²psi)^{n/(n+p)}`.
    pub values: Vec<f64>,
    /// The same function from the dual-side expression in terms of `psi*`,
    /// where `psi*` has derivatives.
    pub dual_side: Option<Vec<f64>>,
    /// Largest relative disagreement between the two forms.
    pub max_rel_disagreement: f64,
}

fn g0_ln_table(p: f64, f1: &WeightFunction, f2: &WeightFunction, prep: &Prepared) -> Vec<f64> {
    let n = prep.dim() as f64;
    let (a, b) = (p / (n + p), n / (n + p));
    let rs = &prep.rs;
    (0..rs.len())
        .map(|i| a * f2.ln_eval(prep.view.values[i]) + b * (f1.ln_eval(rs.values[i]) - rs.hess_dets[i].ln()))
        .collect()
}

/// `g0(y) = F2(psi*(y))^{p/(n+p)} (F1(<y, grad psi*(y)> - psi*(y)) det ∇²psi*(y))^{n/(n+p)}`.
pub fn g0_dual_side(p: f64, f1: &WeightFunction, f2: &WeightFunction, dual: &FunctionRep, y: &[f64]) -> Option<f64> {
    let n = dual.dim() as f64;
    let d = dual.derivs(y)?;
    let hd = crate::funcrep::det(&d.hessian, dual.dim());
    let primal_value = crate::funcrep::dot(y, &d.gradient) - d.value;
    Some(f2.eval(d.value).powf(p / (n + p)) * (f1.eval(primal_value) * hd).powf(n / (n + p)))
}

pub fn g0_witness_on(p: f64, f1: &WeightFunction, f2: &WeightFunction, prep: &Prepared, dual: Option<&FunctionRep>) -> Result<Witness> {
    check_p(p, prep.dim())?;
    let values: Vec<f64> = g0_ln_table(p, f1, f2, prep).iter().map(|v| v.exp()).collect();
    let dual_side = match dual {
        Some(d) => Some(
            (0..prep.view.len())
                .map(|i| {
                    g0_dual_side(p, f1, f2, d, prep.view.position(i))
                        .ok_or_else(|| Error::Invalid(format!("dual has no Hessian at {:?}", prep.view.position(i))))
                })
                .collect::<Result<Vec<f64>>>()?,
        ),
        None => None,
    };
    let max_rel_disagreement = dual_side
        .as_ref()
        .map(|d| crate::sconcave::rel_disagreement(&values, d))
        .unwrap_or(f64::NAN);
    Ok(Witness { dim: prep.dim(), points: prep.view.positions.clone(), values, dual_side, max_rel_disagreement })
}

/// `g0` on the regular set; the dual-side form is included when `psi` has a
/// closed-form conjugate.
pub fn g0_witness(p: f64, f1: &WeightFunction, f2: &WeightFunction, psi: &FunctionRep, grid: Option<&Grid>) -> Result<Witness> {
    let prep = Prepared::new(psi, grid)?;
    let dual = crate::transforms::closed_form_legendre(psi);
    g0_witness_on(p, f1, f2, &prep, dual.as_ref())
}

/// `g0` as an injectable candidate for searches on `prep`. It is not marked
/// log-concave; callers that know better may set the flag.
pub fn g0_candidate(p: f64, f1: &WeightFunction, f2: &WeightFunction, prep: &Prepared) -> Candidate {
    Candidate { label: "g0".into(), ln_tables: vec![g0_ln_table(p, f1, f2, prep)], logconcave: false }
}

/// `V_p(g)^{n/(n+p)} I(g)^{p/(n+p)}` for a table of `ln g`, in logs.
fn ln_asp_objective(p: f64, ln_f1w: &[f64], ln_base: &[f64], prep: &Prepared, ln_g: &[f64]) -> f64 {
    let n = prep.dim() as f64;
    let terms: Vec<f64> = (0..ln_g.len()).map(|i| ln_f1w[i] + (p / n) * (ln_base[i] - ln_g[i])).collect();
    let ln_vp = log_sum_exp(&terms);
    let ln_i = prep.ln_dual_mass(ln_g);
    (n / (n + p)) * ln_vp + (p / (n + p)) * ln_i
}

fn ln_weighted(prep: &Prepared, f1: &WeightFunction) -> Vec<f64> {
    (0..prep.rs.len()).map(|i| prep.rs.weights[i].ln() + f1.ln_eval(prep.rs.values[i])).collect()
}

/// The variational `as_p`: inf over the family for `p >= 0`, sup for `p < 0`.
/// `bound_gap` is measured against [`asp_direct_on`].
pub fn asp_variational_on(
    p: f64,
    f1: &WeightFunction,
    f2: &WeightFunction,
    prep: &Prepared,
    family: &CandidateFamily,
) -> Result<VariationalResult> {
    check_p(p, prep.dim())?;
    let direct = asp_direct_on(p, f1, f2, prep)?.value;
    if p == 0.0 {
        return Ok(VariationalResult::scalar(prep.primal_integral(f1), "p=0").with_reference(direct));
    }
    let direction = if p > 0.0 { Direction::Minimize } else { Direction::Maximize };
    let block = prep.block(f2);
    let ln_f1w = ln_weighted(prep, f1);
    let ln_base = block.ln_base.clone();
    let objective = |t: &[Vec<f64>]| ln_asp_objective(p, &ln_f1w, &ln_base, prep, &t[0]).exp();
    Ok(optimize(&[block], direction, family, &objective).with_reference(direct))
}

pub fn asp_variational(
    p: f64,
    f1: &WeightFunction,
    f2: &WeightFunction,
    psi: &FunctionRep,
    grid: Option<&Grid>,
    family: &CandidateFamily,
) -> Result<VariationalResult> {
    asp_variational_on(p, f1, f2, &Prepared::new(psi, grid)?, family)
}

/// `V_h(psi, target g / I(g))` for a table of `ln g`.
pub(crate) fn normalized_vh(
    h: &OrliczFunction,
    weights_f1: &[f64],
    ln_base: &[f64],
    ln_target: f64,
    prep: &Prepared,
    ln_g: &[f64],
) -> f64 {
    let shift = ln_target - prep.ln_dual_mass(ln_g);
    let terms: Vec<f64> = (0..ln_g.len())
        .map(|i| {
            if weights_f1[i] == 0.0 {
                0.0
            } else {
                weights_f1[i] * h.eval((shift + ln_g[i] - ln_base[i]).exp())
            }
        })
        .collect();
    pairwise_sum(&terms)
}

fn orlicz_search(
    h: &OrliczFunction,
    f1: &WeightFunction,
    f2: &WeightFunction,
    prep: &Prepared,
    family: &CandidateFamily,
) -> VariationalResult {
    let n = prep.dim();
    let ln_target = family.target.unwrap_or_else(|| gaussian_mass(n)).ln();
    let block = prep.block(f2);
    let wf1 = prep.primal_terms(f1);
    let ln_base = block.ln_base.clone();
    let objective = |t: &[Vec<f64>]| normalized_vh(h, &wf1, &ln_base, ln_target, prep, &t[0]);
    optimize(&[block], h.direction(), family, &objective)
}

/// The Orlicz affine surface area: inf (`h` in Phi) or sup (`h` in Psi) of
/// `V_h` over test functions scaled to mass `(sqrt(2 pi))^n`. The wrapper
/// [`orlicz_as`] also fills `bound_gap` for centred quadratics.
pub fn orlicz_as_on(
    h: &OrliczFunction,
    f1: &WeightFunction,
    f2: &WeightFunction,
    prep: &Prepared,
    family: &CandidateFamily,
) -> Result<VariationalResult> {
    Ok(orlicz_search(h, f1, f2, prep, family))
}

pub fn orlicz_as(
    h: &OrliczFunction,
    f1: &WeightFunction,
    f2: &WeightFunction,
    psi: &FunctionRep,
    grid: Option<&Grid>,
    family: &CandidateFamily,
) -> Result<VariationalResult> {
    let prep = Prepared::new(psi, grid)?;
    let r = orlicz_as_on(h, f1, f2, &prep, family)?;
    Ok(attach_reference(r, h, f1, f2, psi, family, false))
}

/// The Orlicz geominimal surface area: as [`orlicz_as_on`] over log-concave
/// test functions only.
pub fn orlicz_gm_on(
    h: &OrliczFunction,
    f1: &WeightFunction,
    f2: &WeightFunction,
    prep: &Prepared,
    family: &CandidateFamily,
) -> Result<VariationalResult> {
    let fam = family.clone().with_logconcave_only(true);
    Ok(orlicz_search(h, f1, f2, prep, &fam))
}

pub fn orlicz_gm(
    h: &OrliczFunction,
    f1: &WeightFunction,
    f2: &WeightFunction,
    psi: &FunctionRep,
    grid: Option<&Grid>,
    family: &CandidateFamily,
) -> Result<VariationalResult> {
    let prep = Prepared::new(psi, grid)?;
    let r = orlicz_gm_on(h, f1, f2, &prep, family)?;
    Ok(attach_reference(r, h, f1, f2, psi, family, true))
}

fn attach_reference(
    r: VariationalResult,
    h: &OrliczFunction,
    f1: &WeightFunction,
    f2: &WeightFunction,
    psi: &FunctionRep,
    family: &CandidateFamily,
    logconcave: bool,
) -> VariationalResult {
    if family.target.is_some() || (logconcave && !base_is_logconcave(f2)) {
        return r;
    }
    match quadratic_form(psi).and_then(|m| analytic_orlicz_as(h, f1, f2, &m, psi.dim())) {
        Some(v) => r.with_reference(v),
        None => r,
    }
}

/// `M` with `psi(x) = <M x, x>` for centred quadratic closed forms.
pub fn quadratic_form(psi: &FunctionRep) -> Option<DMatrix<f64>> {
    let m = match psi.kind() {
        Kind::Gaussian { dim, c } => DMatrix::identity(*dim, *dim) * (0.5 * c * c),
        Kind::Quadratic { a, offset } if *offset == 0.0 => a.clone(),
        _ => return None,
    };
    match psi.map() {
        None => Some(m),
        Some(map) if map.is_linear() => Some(map.t.transpose() * m * &map.t),
        Some(_) => None,
    }
}

/// The exact value for `psi = <M x, x>` and `F1 = F2 = F`:
/// `I(F∘psi) h((sqrt(2 pi))^n / I(F∘psi*))` with
/// `I(F∘psi) = det(2M)^{-1/2} I(F, 1)` and `I(F∘psi*) = det(2M)^{1/2} I(F, 1)`.
pub fn analytic_orlicz_as(h: &OrliczFunction, f1: &WeightFunction, f2: &WeightFunction, m: &DMatrix<f64>, n: usize) -> Option<f64> {
    if f1.label() != f2.label() {
        return None;
    }
    let root = (m * 2.0).determinant().sqrt();
    let i1 = radial_integral(f1, 1.0, n, None).ok()?.value;
    Some(i1 / root * h.eval(gaussian_mass(n) / (root * i1)))
}

/// `a I(F, c) h((sqrt(2 pi))^n / (c^{2n} b I(F, c)))`: the Orlicz affine and
/// (for radially log-concave `F`) geominimal surface area of
/// `c^2 |x|^2 / 2` with weights `F1 = a F`, `F2 = b F`.
pub fn closed_form_orlicz_as(h: &OrliczFunction, f: &WeightFunction, a: f64, b: f64, c: f64, n: usize) -> Result<f64> {
    let i = radial_integral(f, c, n, None)?.value;
    Ok(a * i * h.eval(gaussian_mass(n) / (c.powi(2 * n as i32) * b * i)))
}

/// `c^{n(p-n)/(n+p)} I(F, 1)`: the `L_p` geominimal surface area of
/// `c^2 |x|^2 / 2` with `F1 = F2 = F`.
pub fn closed_form_gp(p: f64, f: &WeightFunction, c: f64, n: usize) -> Result<f64> {
    check_p(p, n)?;
    let nn = n as f64;
    Ok(c.powf(nn * (p - nn) / (nn + p)) * radial_integral(f, 1.0, n, None)?.value)
}

/// `G_p` computed two ways.
#[derive(Clone, Debug, Serialize)]
pub struct GpResult {
    pub value: f64,
    /// `(sqrt(2 pi))^{np/(n+p)} G_h^{n/(n+p)}` with `h = t^{-p/n}`.
    pub via_geominimal: f64,
    pub discrepancy: f64,
    pub search: VariationalResult,
}

/// `G_p`: inf (`p >= 0`) or sup (`p < 0`) of `V_p(g)^{n/(n+p)} I(g)^{p/(n+p)}`
/// over log-concave `g`. The optimum tables of the direct search and of the
/// Orlicz geominimal search are exchanged before the final values are read.
pub fn gp_on(p: f64, f1: &WeightFunction, f2: &WeightFunction, prep: &Prepared, family: &CandidateFamily) -> Result<GpResult> {
    let n = prep.dim();
    check_p(p, n)?;
    let fam = family.clone().with_logconcave_only(true);
    if p == 0.0 {
        let v = prep.primal_integral(f1);
        return Ok(GpResult { value: v, via_geominimal: v, discrepancy: 0.0, search: VariationalResult::scalar(v, "p=0") });
    }
    let nn = n as f64;
    let h = OrliczFunction::power_p(p, n)?;
    let direct = asp_variational_on(p, f1, f2, prep, &fam)?;
    let gm = orlicz_gm_on(&h, f1, f2, prep, &fam.clone().with_candidate(direct.as_candidate("direct")))?;
    let direct = asp_variational_on(p, f1, f2, prep, &fam.with_candidate(gm.as_candidate("geominimal")))?;
    let via = gaussian_mass(n).powf(p / (nn + p)) * gm.value.powf(nn / (nn + p));
    let discrepancy = ((direct.value - via) / direct.value).abs();
    let mut search = direct;
    search.bound_gap = f64::NAN;
    Ok(GpResult { value: search.value, via_geominimal: via, discrepancy, search })
}

pub fn gp(p: f64, f1: &WeightFunction, f2: &WeightFunction, psi: &FunctionRep, grid: Option<&Grid>, family: &CandidateFamily) -> Result<GpResult> {
    let prep = Prepared::new(psi, grid)?;
    let mut out = gp_on(p, f1, f2, &prep, family)?;
    if base_is_logconcave(f2) && f1.label() == f2.label() {
        if let Some(m) = quadratic_form(psi) {
            let nn = psi.dim() as f64;
            let h = OrliczFunction::power_p(p, psi.dim())?;
            if let Some(g) = analytic_orlicz_as(&h, f1, f2, &m, psi.dim()) {
                let reference = gaussian_mass(psi.dim()).powf(p / (nn + p)) * g.powf(nn / (nn + p));
                out.search = out.search.with_reference(reference);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::FamilyKind;
    use approx::assert_relative_eq;

    fn gauss(c: f64) -> FunctionRep {
        FunctionRep::gaussian(2, c).unwrap()
    }

    #[test]
    fn asp_direct_of_the_gaussian_is_its_mass() {
        let e = WeightFunction::ExpNeg;
        let r = asp_direct(2.0, &e, &e, &gauss(1.0), None).unwrap();
        assert_relative_eq!(r.value, 2.0 * PI, max_relative = 1e-6);
        assert!(r.est_error < 1e-3);
        let p0 = asp_direct(0.0, &e, &e, &gauss(1.0), None).unwrap().value;
        assert_relative_eq!(p0, 2.0 * PI, max_relative = 1e-6);
    }

    #[test]
    fn mixed_integral_at_the_scaled_base() {
        let e = WeightFunction::ExpNeg;
        let h = OrliczFunction::power(2.0).unwrap();
        let psi = FunctionRep::quadratic(DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.7]), 0.0).unwrap();
        let prep = Prepared::new(&psi, None).unwrap();
        let dual = crate::transforms::closed_form_legendre(&psi).unwrap();
        let tau = 1.7;
        let g = |y: &[f64]| tau * (-dual.eval(y).unwrap()).exp();
        let v = mixed_integral_on(&h, &e, &e, &prep, &g).unwrap().value;
        assert_relative_eq!(v, tau * tau * prep.primal_integral(&e), max_relative = 1e-10);
        let one = OrliczFunction::constant(1.0).unwrap();
        let v1 = mixed_integral_on(&one, &e, &e, &prep, &|y: &[f64]| 1.0 + y[0] * y[0]).unwrap().value;
        assert_relative_eq!(v1, prep.primal_integral(&e), max_relative = 1e-10);
    }

    #[test]
    fn vp_agrees_with_the_power_orlicz_integrand() {
        let f1 = WeightFunction::ExpNeg;
        let f2 = WeightFunction::Power { alpha: 3.0 };
        let prep = Prepared::new(&gauss(1.3), None).unwrap();
        let g = |y: &[f64]| (-(y[0] - 0.2).powi(2) - 0.5 * y[1] * y[1]).exp();
        for p in [1.0, 2.0, -1.0, 0.5] {
            let h = OrliczFunction::power_p(p, 2).unwrap();
            let a = vp_on(p, &f1, &f2, &prep, &g).unwrap().value;
            let b = mixed_integral_on(&h, &f1, &f2, &prep, &g).unwrap().value;
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn witness_is_exact_and_forms_agree() {
        let e = WeightFunction::ExpNeg;
        let psi = FunctionRep::quadratic(DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]), 0.0).unwrap();
        let prep = Prepared::new(&psi, None).unwrap();
        for p in [1.0, 2.0, -1.0] {
            let w = g0_witness(p, &e, &e, &psi, None).unwrap();
            assert!(w.max_rel_disagreement < 1e-9, "{}", w.max_rel_disagreement);
            let fam = CandidateFamily::only(&[]).with_candidate(g0_candidate(p, &e, &e, &prep));
            let r = asp_variational_on(p, &e, &e, &prep, &fam).unwrap();
            assert!(r.bound_gap.abs() < 1e-10, "p={p}: {}", r.bound_gap);
        }
    }

    #[test]
    fn gaussian_orlicz_closed_form() {
        let e = WeightFunction::ExpNeg;
        for c in [0.5, 1.0, 2.0] {
            let h = OrliczFunction::power(-0.5).unwrap();
            let fam = CandidateFamily::only(&[FamilyKind::BaseScaled]);
            let r = orlicz_as(&h, &e, &e, &gauss(c), None, &fam).unwrap();
            let exact = c.powi(-2) * h.eval(c.powi(-2)) * 2.0 * PI;
            assert_relative_eq!(r.value, exact, max_relative = 1e-3);
            assert!(r.bound_gap.abs() < 1e-3);
            assert_relative_eq!(closed_form_orlicz_as(&h, &e, 1.0, 1.0, c, 2).unwrap(), exact, max_relative = 1e-10);
        }
    }

    #[test]
    fn full_search_does_not_beat_the_exact_optimum() {
        let e = WeightFunction::ExpNeg;
        let h = OrliczFunction::power(-1.0).unwrap();
        let grid = Grid::cube(2, 7.0, 61).unwrap();
        let r = orlicz_as(&h, &e, &e, &gauss(1.0), Some(&grid), &CandidateFamily::all()).unwrap();
        let exact = 2.0 * PI;
        assert!(r.value <= exact * 1.001);
        assert!(r.value >= exact * 0.99, "{} vs {exact}", r.value);
        let gm = orlicz_gm(&h, &e, &e, &gauss(1.0), Some(&grid), &CandidateFamily::all()).unwrap();
        assert!(gm.value >= r.value - 1e-12);
    }

    #[test]
    fn gp_of_the_gaussian() {
        let e = WeightFunction::ExpNeg;
        let grid = Grid::cube(2, 7.0, 61).unwrap();
        for (c, p) in [(1.0, 1.0), (2.0, 2.0), (0.5, 1.0)] {
            let r = gp(p, &e, &e, &gauss(c), Some(&grid), &CandidateFamily::logconcave()).unwrap();
            let exact = closed_form_gp(p, &e, c, 2).unwrap();
            assert_relative_eq!(r.value, exact, max_relative = 1e-2);
            assert!(r.discrepancy < 1e-6, "{}", r.discrepancy);
        }
    }

    #[test]
    fn excluded_p_is_rejected() {
        let e = WeightFunction::ExpNeg;
        assert!(asp_direct(-2.0, &e, &e, &gauss(1.0), None).is_err());
    }
}
