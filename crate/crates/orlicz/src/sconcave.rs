//! Affine and geominimal surface areas of s-concave functions
//! `f = (1 - s psi)^{1/s}`.
//!
//! With `psi~ = 1 + s<x, grad psi> - s psi`, `q = 1 - s psi` and the gradient
//! map `T = grad psi / psi~`, every quantity is a sum over the primal regular
//! set with the per-point factors
//!
//! * `a = w psi~ q^{1/s - 1}` (the mixed-integral weight),
//! * `b = psi~^{1/s - 1} q` (what multiplies `g(T x)` inside `h`),
//! * `c = w q det ∇²psi / psi~^{n+1}` (the pushforward of `dy`).

use serde::Serialize;

use crate::affine::resolve_grid;
use crate::error::{Error, Result};
use crate::family::{optimize, Block, Candidate, CandidateFamily, VariationalResult};
use crate::funcrep::{dot, FunctionRep, Grid, Kind};
use crate::hfunc::{Direction, OrliczFunction};
use crate::quadrature::{clipped_sum, halving_estimate, omega_ns, pairwise_sum, IntegralResult};
use crate::transforms::{closed_form_s_dual, log_sum_exp, minimise_translation, s_dual, s_pair, SDualPair};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RegularityFlags {
    /// Every regular point has a positive-definite Hessian and `psi~ > 0`,
    /// and at least half the support nodes are regular.
    pub c2_interior: bool,
    /// `f` is negligible on the edge of the grid box, so the support is
    /// inside the grid.
    pub boundary_decay: bool,
}

/// An s-concave function through its potential, with the s-dual data.
#[derive(Clone, Debug)]
pub struct SConcavePair {
    pub s: f64,
    pub pair: SDualPair,
    pub flags: RegularityFlags,
    a: Vec<f64>,
    ln_b: Vec<f64>,
}

impl SConcavePair {
    pub fn new(psi: &FunctionRep, s: f64, grid: Option<&Grid>) -> Result<Self> {
        let grid = resolve_grid(psi, grid)?;
        Self::from_pair(s_pair(psi, s, &grid)?)
    }

    /// Also samples the s-dual on its own grid (closed form when known).
    pub fn with_dual(psi: &FunctionRep, s: f64, grid: Option<&Grid>) -> Result<Self> {
        let grid = resolve_grid(psi, grid)?;
        Self::from_pair(s_dual(psi, s, Some(&grid), None)?)
    }

    pub fn from_pair(pair: SDualPair) -> Result<Self> {
        let s = pair.s;
        let rs = &pair.rs;
        if rs.is_empty() {
            return Err(Error::Degenerate("no regular point in the support".into()));
        }
        let mut a = Vec::with_capacity(rs.len());
        let mut ln_b = Vec::with_capacity(rs.len());
        for i in 0..rs.len() {
            let q = 1.0 - s * rs.values[i];
            let t = pair.psi_tilde[i];
            a.push(rs.weights[i] * t * q.powf(1.0 / s - 1.0));
            ln_b.push((1.0 / s - 1.0) * t.ln() + q.ln());
        }
        let flags = regularity(&pair)?;
        Ok(SConcavePair { s, pair, flags, a, ln_b })
    }

    pub fn dim(&self) -> usize {
        self.pair.dim()
    }

    pub fn psi(&self) -> &FunctionRep {
        &self.pair.primal
    }

    /// `f(x) = (1 - s psi(x))_+^{1/s}`.
    pub fn f(&self, x: &[f64]) -> Result<f64> {
        let v = self.pair.primal.eval(x)?;
        let q = 1.0 - self.s * v;
        Ok(if v.is_finite() && q > 0.0 { q.powf(1.0 / self.s) } else { 0.0 })
    }

    fn coarse(&self) -> Result<SConcavePair> {
        Self::from_pair(self.pair.coarse()?)
    }

    /// `1 + ns`.
    pub fn factor(&self) -> f64 {
        1.0 + self.dim() as f64 * self.s
    }

    /// `I(f) = ∫ (1 - s psi)^{1/s}`.
    pub fn integral_f(&self) -> f64 {
        let rs = &self.pair.rs;
        pairwise_sum(&(0..rs.len()).map(|i| rs.weights[i] * (1.0 - self.s * rs.values[i]).powf(1.0 / self.s)).collect::<Vec<_>>())
    }

    /// `I(f°) = ∫ (1 - s psi*)^{1/s} dy`, using `1 - s psi*(T x) = 1/psi~(x)`.
    pub fn integral_polar(&self) -> f64 {
        let n = self.dim() as f64;
        let s = self.s;
        let rs = &self.pair.rs;
        let terms: Vec<f64> = (0..rs.len())
            .map(|i| {
                let q = 1.0 - s * rs.values[i];
                rs.weights[i] * q * rs.hess_dets[i] * self.pair.psi_tilde[i].powf(-n - 1.0 - 1.0 / s)
            })
            .collect();
        pairwise_sum(&terms)
    }

    /// `I_s(g) = ∫ g dy` over the s-dual domain for a table of `ln g`.
    pub(crate) fn ln_dual_mass(&self, ln_g: &[f64]) -> f64 {
        let v = &self.pair.view;
        log_sum_exp(&(0..v.len()).map(|i| v.weights[i].ln() + ln_g[i]).collect::<Vec<_>>())
    }

    /// `ln g1(T x) = (1 - 1/s) ln psi~ - ln q`, so that `g1 b = 1`.
    pub fn ln_g1(&self) -> Vec<f64> {
        self.ln_b.iter().map(|b| -b).collect()
    }

    /// Whether `g1` is log-concave: known for s-envelopes under a linear map
    /// when `s <= 1/2`.
    pub fn g1_logconcave(&self) -> bool {
        let psi = &self.pair.primal;
        match psi.kind() {
            Kind::SEnvelope { s, .. } => {
                (s - self.s).abs() <= 1e-15 * self.s && self.s <= 0.5 && psi.map().is_none_or(|m| m.is_linear())
            }
            _ => false,
        }
    }

    fn block(&self) -> Block<'_> {
        Block { view: &self.pair.view, ln_base: self.ln_g1(), base_logconcave: self.g1_logconcave() }
    }
}

fn regularity(pair: &SDualPair) -> Result<RegularityFlags> {
    let s = pair.s;
    let values = pair.primal.sample_values(&pair.primal_grid)?;
    let support = values.iter().filter(|v| v.is_finite() && s * **v < 1.0).count();
    let rs = &pair.rs;
    let c2_interior = rs.hess_dets.iter().all(|d| *d > 0.0 && d.is_finite())
        && pair.psi_tilde.iter().all(|t| *t > 0.0)
        && 2 * rs.len() >= support;
    let grid = &pair.primal_grid;
    let f = |v: f64| if v.is_finite() && s * v < 1.0 { (1.0 - s * v).powf(1.0 / s) } else { 0.0 };
    let fmax = values.iter().map(|v| f(*v)).fold(0.0, f64::max);
    let edge_max = (0..grid.len())
        .filter(|&i| grid.multi_index(i).iter().zip(&grid.counts).any(|(&m, &c)| m == 0 || m + 1 == c))
        .map(|i| f(values[i]))
        .fold(0.0, f64::max);
    Ok(RegularityFlags { c2_interior, boundary_decay: edge_max <= 1e-6 * fmax })
}

fn check_p(p: f64, n: usize) -> Result<()> {
    if p == -(n as f64) || !p.is_finite() {
        return Err(Error::Invalid(format!("p = {p} is excluded (p must be finite and != -n)")));
    }
    Ok(())
}

/// `V_h^(s)(psi, g) = ∫ h(g(T x) psi~^{1/s-1} q) psi~ q^{1/s-1} dx`.
pub fn v_s(h: &OrliczFunction, sp: &SConcavePair, g: &dyn Fn(&[f64]) -> f64) -> Result<IntegralResult> {
    let terms = (0..sp.a.len())
        .map(|i| {
            let y = sp.pair.tmap(i);
            let gy = g(y);
            if !(gy > 0.0) {
                return Err(Error::Invalid(format!("test function is {gy} at {y:?}")));
            }
            Ok(sp.a[i] * h.eval(gy * sp.ln_b[i].exp()))
        })
        .collect::<Result<Vec<f64>>>()?;
    clipped_sum(&sp.pair.rs, &terms)
}

fn asp_s_terms(p: f64, sp: &SConcavePair) -> Vec<f64> {
    let n = sp.dim() as f64;
    let s = sp.s;
    let k = p / (n + p);
    let rs = &sp.pair.rs;
    (0..rs.len())
        .map(|i| {
            let q = 1.0 - s * rs.values[i];
            let t = sp.pair.psi_tilde[i];
            rs.weights[i] * q.powf((1.0 / s - 1.0) * n / (n + p)) * rs.hess_dets[i].powf(k) / t.powf(k * (n + 1.0 / s + 1.0) - 1.0)
        })
        .collect()
}

/// `as_p^(s)(psi) = (1/(1+ns)) ∫ q^{(1/s-1) n/(n+p)} det^{p/(n+p)} / psi~^{(p/(n+p))(n+1/s+1) - 1}`.
/// Grid-singular boundary terms are moved to `clipped_mass`; `est_error`
/// comes from one grid halving.
pub fn asp_s_direct(p: f64, sp: &SConcavePair) -> Result<IntegralResult> {
    check_p(p, sp.dim())?;
    let scale = 1.0 / sp.factor();
    let mut out = clipped_sum(&sp.pair.rs, &asp_s_terms(p, sp))?;
    out.value *= scale;
    out.clipped_mass *= scale;
    let coarse = sp.coarse()?;
    let cv = clipped_sum(&coarse.pair.rs, &asp_s_terms(p, &coarse))?.value * scale;
    out.est_error = halving_estimate(out.value, cv);
    Ok(out)
}

/// `g1` in both forms at the points `T x`.
#[derive(Clone, Debug, Serialize)]
pub struct G1Witness {
    pub dim: usize,
    pub points: Vec<f64>,
    /// `psi~^{1 - 1/s} / (1 - s psi)`.
    pub primal_form: Vec<f64>,
    /// `(1 - s psi*)^{1/s - 1} (1 + s<grad psi*, y> - s psi*)`, from the
    /// closed-form s-dual when there is one, else from the dual data carried
    /// by the view.
    pub dual_form: Vec<f64>,
    pub max_rel_disagreement: f64,
}

/// Largest `|a - b| / max(|a|, 1e-6 max|a|)`; the floor keeps rounding
/// noise in vanishing boundary values out of the comparison.
pub(crate) fn rel_disagreement(a: &[f64], b: &[f64]) -> f64 {
    let floor = 1e-6 * a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / x.abs().max(floor)).fold(0.0, f64::max)
}

fn g1_dual(s: f64, value: f64, grad: &[f64], y: &[f64]) -> f64 {
    (1.0 - s * value).powf(1.0 / s - 1.0) * (1.0 + s * dot(grad, y) - s * value)
}

pub fn g1_witness(sp: &SConcavePair) -> Result<G1Witness> {
    let s = sp.s;
    let view = &sp.pair.view;
    let primal_form: Vec<f64> = sp.ln_g1().iter().map(|v| v.exp()).collect();
    let closed = closed_form_s_dual(&sp.pair.primal, s);
    let dual_form = (0..view.len())
        .map(|i| {
            let y = view.position(i);
            match &closed {
                Some(d) => {
                    let dd = d.derivs(y).ok_or_else(|| Error::Invalid(format!("s-dual has no gradient at {y:?}")))?;
                    Ok(g1_dual(s, dd.value, &dd.gradient, y))
                }
                None => Ok(g1_dual(s, view.values[i], view.gradient(i), y)),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let max_rel_disagreement = rel_disagreement(&primal_form, &dual_form);
    Ok(G1Witness { dim: sp.dim(), points: view.positions.clone(), primal_form, dual_form, max_rel_disagreement })
}

/// `ln g0 = (n/(n+p)) ln(a b^{-p/n} / c)`, the exact optimum of the
/// variational `as_p^(s)`.
fn g0_ln_table(p: f64, sp: &SConcavePair) -> Vec<f64> {
    let n = sp.dim() as f64;
    let view = &sp.pair.view;
    (0..sp.a.len()).map(|i| (n / (n + p)) * (sp.a[i].ln() - (p / n) * sp.ln_b[i] - view.weights[i].ln())).collect()
}

pub fn g0_candidate(p: f64, sp: &SConcavePair) -> Candidate {
    Candidate { label: "g0".into(), ln_tables: vec![g0_ln_table(p, sp)], logconcave: false }
}

/// `ln (V_p^(s)(g)^{n/(n+p)} I_s(g)^{p/(n+p)})`.
fn ln_asp_s_objective(p: f64, sp: &SConcavePair, ln_a: &[f64], ln_g: &[f64]) -> f64 {
    let n = sp.dim() as f64;
    let terms: Vec<f64> = (0..ln_g.len()).map(|i| ln_a[i] - (p / n) * (ln_g[i] + sp.ln_b[i])).collect();
    (n / (n + p)) * log_sum_exp(&terms) + (p / (n + p)) * sp.ln_dual_mass(ln_g)
}

/// `(1/(1+ns))` times the inf (`p >= 0`) or sup (`p < 0`) of
/// `V_p^(s)(g)^{n/(n+p)} I_s(g)^{p/(n+p)}`; `bound_gap` against [`asp_s_direct`].
pub fn asp_s_variational(p: f64, sp: &SConcavePair, family: &CandidateFamily) -> Result<VariationalResult> {
    check_p(p, sp.dim())?;
    let direct = asp_s_direct(p, sp)?.value;
    if p == 0.0 {
        return Ok(VariationalResult::scalar(sp.integral_f(), "p=0").with_reference(direct));
    }
    let scale = 1.0 / sp.factor();
    let ln_a: Vec<f64> = sp.a.iter().map(|a| a.ln()).collect();
    let direction = if p > 0.0 { Direction::Minimize } else { Direction::Maximize };
    let objective = |t: &[Vec<f64>]| scale * ln_asp_s_objective(p, sp, &ln_a, &t[0]).exp();
    Ok(optimize(&[sp.block()], direction, family, &objective).with_reference(direct))
}

/// `V_h^(s)` at `target g / I_s(g)`.
fn normalized_vs(h: &OrliczFunction, sp: &SConcavePair, ln_target: f64, ln_g: &[f64]) -> f64 {
    let shift = ln_target - sp.ln_dual_mass(ln_g);
    let terms: Vec<f64> = (0..ln_g.len())
        .map(|i| if sp.a[i] == 0.0 { 0.0 } else { sp.a[i] * h.eval((shift + ln_g[i] + sp.ln_b[i]).exp()) })
        .collect();
    pairwise_sum(&terms)
}

fn orlicz_s_search(h: &OrliczFunction, sp: &SConcavePair, family: &CandidateFamily) -> VariationalResult {
    let target = family.target.unwrap_or_else(|| sp.factor() * omega_ns(sp.dim(), sp.s));
    let ln_target = target.ln();
    let objective = |t: &[Vec<f64>]| normalized_vs(h, sp, ln_target, &t[0]);
    optimize(&[sp.block()], h.direction(), family, &objective)
}

/// The Orlicz `L_h^(s)` affine surface area: test functions scaled to
/// `I_s(g) = (1+ns) ω_{n,s}`. For an unmapped s-envelope `bound_gap` is
/// measured against the closed form.
pub fn orlicz_as_s(h: &OrliczFunction, sp: &SConcavePair, family: &CandidateFamily) -> Result<VariationalResult> {
    let r = orlicz_s_search(h, sp, family);
    Ok(match envelope_scale(sp) {
        Some(c) if family.target.is_none() => r.with_reference(closed_form_orlicz_as_s(h, sp.dim(), sp.s, c)),
        _ => r,
    })
}

/// As [`orlicz_as_s`] over log-concave test functions.
pub fn orlicz_gm_s(h: &OrliczFunction, sp: &SConcavePair, family: &CandidateFamily) -> Result<VariationalResult> {
    let r = orlicz_s_search(h, sp, &family.clone().with_logconcave_only(true));
    Ok(match envelope_scale(sp) {
        Some(c) if family.target.is_none() && sp.s <= 0.5 => r.with_reference(closed_form_orlicz_as_s(h, sp.dim(), sp.s, c)),
        _ => r,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GpSResult {
    pub value: f64,
    /// `ω^{p/(n+p)} (G_h^(s)/(1+ns))^{n/(n+p)}` with `h = t^{-p/n}`.
    pub via_geominimal: f64,
    pub discrepancy: f64,
    pub search: VariationalResult,
}

/// `G_p^(s)`: `(1/(1+ns))` times the inf (`p >= 0`) or sup (`p < 0`) over
/// log-concave test functions, cross-checked against the Orlicz geominimal
/// value for `h = t^{-p/n}`.
pub fn gp_s(p: f64, sp: &SConcavePair, family: &CandidateFamily) -> Result<GpSResult> {
    let n = sp.dim();
    check_p(p, n)?;
    if p == 0.0 {
        let v = sp.integral_f();
        return Ok(GpSResult { value: v, via_geominimal: v, discrepancy: 0.0, search: VariationalResult::scalar(v, "p=0") });
    }
    let fam = family.clone().with_logconcave_only(true);
    let nn = n as f64;
    let h = OrliczFunction::power_p(p, n)?;
    let direct = asp_s_variational(p, sp, &fam)?;
    let gm = orlicz_s_search(&h, sp, &fam.clone().with_candidate(direct.as_candidate("direct")));
    let mut search = asp_s_variational(p, sp, &fam.with_candidate(gm.as_candidate("geominimal")))?;
    let omega = omega_ns(n, sp.s);
    let via = omega.powf(p / (nn + p)) * (gm.value / sp.factor()).powf(nn / (nn + p));
    let discrepancy = ((search.value - via) / search.value).abs();
    search.bound_gap = match envelope_scale(sp) {
        Some(c) if sp.s <= 0.5 => (search.value - closed_form_gp_s(p, n, sp.s, c)) / closed_form_gp_s(p, n, sp.s, c),
        _ => f64::NAN,
    };
    Ok(GpSResult { value: search.value, via_geominimal: via, discrepancy, search })
}

/// `c` when the potential is an unmapped s-envelope matching the pair's `s`.
pub fn envelope_scale(sp: &SConcavePair) -> Option<f64> {
    let psi = &sp.pair.primal;
    match (psi.kind(), psi.map()) {
        (Kind::SEnvelope { s, c, .. }, None) if (s - sp.s).abs() <= 1e-15 * sp.s => Some(*c),
        _ => None,
    }
}

/// `(1+ns) c^{-n} ω_{n,s} h(c^{-n})`.
pub fn closed_form_orlicz_as_s(h: &OrliczFunction, n: usize, s: f64, c: f64) -> f64 {
    let cn = c.powi(-(n as i32));
    (1.0 + n as f64 * s) * cn * omega_ns(n, s) * h.eval(cn)
}

/// `c^{n(p-n)/(n+p)} ω_{n,s}` (valid for `s <= 1/2`).
pub fn closed_form_gp_s(p: f64, n: usize, s: f64, c: f64) -> f64 {
    let nn = n as f64;
    c.powf(nn * (p - nn) / (nn + p)) * omega_ns(n, s)
}

/// `I(k_s^c) = c^{-n} ω_{n,s}`.
pub fn closed_form_integral(n: usize, s: f64, c: f64) -> f64 {
    c.powi(-(n as i32)) * omega_ns(n, s)
}

/// `ln I(f_z°)` for `f_z(x) = f(x + z)`:
/// `∫ q det ∇²psi (psi~ - s<z, grad psi>)^{-n-1-1/s} dx`, `+inf` once the
/// shifted `psi~` is not positive.
fn ln_translated_polar(sp: &SConcavePair, z: &[f64]) -> f64 {
    let n = sp.dim() as f64;
    let s = sp.s;
    let rs = &sp.pair.rs;
    let mut terms = Vec::with_capacity(rs.len());
    for i in 0..rs.len() {
        let t = sp.pair.psi_tilde[i] - s * dot(z, rs.gradient(i));
        if !(t > 0.0) {
            return f64::INFINITY;
        }
        let q = 1.0 - s * rs.values[i];
        terms.push((rs.weights[i] * q * rs.hess_dets[i]).ln() - (n + 1.0 + 1.0 / s) * t.ln());
    }
    log_sum_exp(&terms)
}

/// The translation `z0` minimising `I(f_z) I(f_z°)` (the first factor does
/// not depend on `z`), and the translated potential `x -> psi(x + z0)`.
pub fn s_santalo_center(sp: &SConcavePair) -> Result<(Vec<f64>, FunctionRep)> {
    let scale = sp.pair.rs.radius().max(1e-3);
    let z = minimise_translation(sp.dim(), scale, |z| ln_translated_polar(sp, z))?;
    Ok((z.clone(), sp.pair.primal.translate(&z)?))
}

/// The s-dual as its own pair: closed form when known, else the discrete
/// s-conjugate sampled on the automatic dual grid.
pub fn dual_pair(sp: &SConcavePair) -> Result<SConcavePair> {
    let (dual, grid) = match &sp.pair.dual {
        Some((d, g)) => (d.clone(), g.clone()),
        None => {
            let full = s_dual(&sp.pair.primal, sp.s, Some(&sp.pair.primal_grid), None)?;
            full.dual.ok_or_else(|| Error::Invalid("s-dual was not sampled".into()))?
        }
    };
    let grid = match closed_form_s_dual(&sp.pair.primal, sp.s) {
        Some(_) => dual.suggested_grid(sp.pair.primal_grid.counts[0])?,
        None => grid,
    };
    SConcavePair::new(&dual, sp.s, Some(&grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::FamilyKind;
    use crate::quadrature::integral_f_s;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn env(s: f64, c: f64) -> SConcavePair {
        SConcavePair::new(&FunctionRep::s_envelope(2, s, c).unwrap(), s, None).unwrap()
    }

    #[test]
    fn envelope_integrals() {
        for (s, c) in [(0.25, 1.0), (0.5, 2.0), (0.5, 0.5)] {
            let sp = env(s, c);
            assert_relative_eq!(sp.integral_f(), closed_form_integral(2, s, c), max_relative = 5e-3);
            // the s-dual of an envelope is the reciprocal envelope
            assert_relative_eq!(sp.integral_polar(), closed_form_integral(2, s, 1.0 / c), max_relative = 5e-3);
            assert!(sp.flags.c2_interior && sp.flags.boundary_decay);
            let both = integral_f_s(&sp.pair).unwrap();
            assert!(both.discrepancy < 1e-2 * both.direct.value);
        }
    }

    #[test]
    fn p_zero_is_the_integral_of_f() {
        let sp = env(0.5, 1.0);
        assert_relative_eq!(asp_s_direct(0.0, &sp).unwrap().value, omega_ns(2, 0.5), max_relative = 5e-3);
        let r = asp_s_variational(0.0, &sp, &CandidateFamily::all()).unwrap();
        assert_relative_eq!(r.value, sp.integral_f());
    }

    #[test]
    fn v_s_with_constant_h_is_the_identity_integral() {
        let sp = env(0.25, 1.3);
        let one = OrliczFunction::constant(1.0).unwrap();
        let v = v_s(&one, &sp, &|y: &[f64]| 1.0 + y[0].abs()).unwrap().value;
        assert_relative_eq!(v, sp.factor() * sp.integral_f(), max_relative = 1e-2);
    }

    #[test]
    fn g1_forms_agree_and_match_the_envelope_shape() {
        let (s, c) = (0.25, 1.5);
        let sp = env(s, c);
        let w = g1_witness(&sp).unwrap();
        assert!(w.max_rel_disagreement < 1e-9, "{}", w.max_rel_disagreement);
        for i in (0..sp.pair.view.len()).step_by(113) {
            let y = sp.pair.view.position(i);
            let r2 = (y[0] * y[0] + y[1] * y[1]) / (c * c);
            assert_relative_eq!(w.primal_form[i], (1.0 - s * r2).powf(0.5 / s - 1.0), max_relative = 1e-9);
        }
        let ellipse = FunctionRep::s_envelope(2, s, 1.0).unwrap().compose_linear(&DMatrix::from_row_slice(2, 2, &[1.2, 0.3, 0.0, 0.8])).unwrap();
        let sp = SConcavePair::new(&ellipse, s, None).unwrap();
        assert!(g1_witness(&sp).unwrap().max_rel_disagreement < 1e-9);
    }

    #[test]
    fn witness_reproduces_the_direct_value() {
        let psi = FunctionRep::quadratic(DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.6]), 0.0).unwrap();
        let sp = SConcavePair::new(&psi, 0.5, Some(&Grid::cube(2, 3.0, 81).unwrap())).unwrap();
        for p in [1.0, 2.0, -1.0] {
            let fam = CandidateFamily::only(&[]).with_candidate(g0_candidate(p, &sp));
            let r = asp_s_variational(p, &sp, &fam).unwrap();
            assert!(r.bound_gap.abs() < 1e-10, "p={p}: {}", r.bound_gap);
        }
    }

    #[test]
    fn envelope_closed_forms() {
        let h = OrliczFunction::power(-1.0).unwrap();
        for (s, c) in [(0.25, 0.5), (0.5, 1.0), (0.5, 2.0)] {
            let sp = env(s, c);
            let r = orlicz_as_s(&h, &sp, &CandidateFamily::only(&[FamilyKind::BaseScaled])).unwrap();
            assert!(r.bound_gap.abs() < 1e-2, "s={s} c={c}: {}", r.bound_gap);
            let g = gp_s(1.0, &sp, &CandidateFamily::only(&[FamilyKind::BaseScaled])).unwrap();
            assert!(g.search.bound_gap.abs() < 1e-2, "{}", g.search.bound_gap);
            assert!(g.discrepancy < 1e-9);
        }
    }

    #[test]
    fn centering_an_even_envelope_stays_put() {
        let sp = env(0.5, 1.0);
        let (z, _) = s_santalo_center(&sp).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-3), "{z:?}");
    }

    #[test]
    fn dual_of_an_envelope_is_the_reciprocal() {
        let sp = SConcavePair::with_dual(&FunctionRep::s_envelope(2, 0.5, 2.0).unwrap(), 0.5, None).unwrap();
        let d = dual_pair(&sp).unwrap();
        assert_eq!(envelope_scale(&d), Some(0.5));
    }
}
