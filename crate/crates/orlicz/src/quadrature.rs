//! Weight functions and integrals: grid sums over regular sets, dual-side and
//! pushforward integrals, radial integrals and the s-concave ball constant.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::funcrep::{regular_set, FunctionRep, Grid, RegularSet, SamplePoint};
use crate::special::{ln_gamma, sphere_area};
use crate::transforms::{legendre_view, DualPair, SDualPair};

/// Terms below `EPS_CUT * max` are dropped from grid sums.
pub const EPS_CUT: f64 = 1e-12;
/// s-concave integrand values above `CLIP_RATIO * median` are clipped.
pub const CLIP_RATIO: f64 = 1e12;

/// A positive scalar map `F` applied to potential values.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightFunction {
    /// `e^{-t}`
    ExpNeg,
    /// `(1 + t_+)^{-alpha}`
    Power { alpha: f64 },
    /// `1`
    ConstOne,
    /// `scale * base(t - shift)`
    ScaledShifted { base: Box<WeightFunction>, shift: f64, scale: f64 },
    /// Log-linear interpolation between knots, extrapolated with the end slopes.
    Tabulated { knots: Vec<f64>, ln_values: Vec<f64> },
}

impl WeightFunction {
    pub fn power(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Invalid("power weight needs alpha > 0".into()));
        }
        Ok(WeightFunction::Power { alpha })
    }

    pub fn scaled_shifted(base: WeightFunction, shift: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !shift.is_finite() {
            return Err(Error::Invalid("scaled weight needs scale > 0 and a finite shift".into()));
        }
        Ok(WeightFunction::ScaledShifted { base: Box::new(base), shift, scale })
    }

    pub fn tabulated(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::Invalid("tabulated weight needs at least two knots, one value each".into()));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("tabulated knots must be strictly increasing".into()));
        }
        if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Invalid("tabulated values must be positive and finite".into()));
        }
        Ok(WeightFunction::Tabulated { knots, ln_values: values.iter().map(|v| v.ln()).collect() })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.ln_eval(t).exp()
    }

    /// `ln F(t)`, computed without forming `F(t)` where possible.
    pub fn ln_eval(&self, t: f64) -> f64 {
        match self {
            WeightFunction::ExpNeg => -t,
            WeightFunction::Power { alpha } => -alpha * t.max(0.0).ln_1p(),
            WeightFunction::ConstOne => 0.0,
            WeightFunction::ScaledShifted { base, shift, scale } => scale.ln() + base.ln_eval(t - shift),
            WeightFunction::Tabulated { knots, ln_values } => {
                let k = knots.len();
                let seg = if t <= knots[0] {
                    0
                } else if t >= knots[k - 1] {
                    k - 2
                } else {
                    knots.partition_point(|&x| x <= t) - 1
                };
                let (t0, t1) = (knots[seg], knots[seg + 1]);
                let (v0, v1) = (ln_values[seg], ln_values[seg + 1]);
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// Non-increasing in `t`.
    pub fn is_decreasing(&self) -> bool {
        match self {
            WeightFunction::ExpNeg | WeightFunction::Power { .. } | WeightFunction::ConstOne => true,
            WeightFunction::ScaledShifted { base, .. } => base.is_decreasing(),
            WeightFunction::Tabulated { ln_values, .. } => ln_values.windows(2).all(|w| w[1] <= w[0]),
        }
    }

    /// `ln F` concave.
    pub fn is_logconcave(&self) -> bool {
        match self {
            WeightFunction::ExpNeg | WeightFunction::ConstOne => true,
            WeightFunction::Power { .. } => false,
            WeightFunction::ScaledShifted { base, .. } => base.is_logconcave(),
            WeightFunction::Tabulated { knots, ln_values } => knots.windows(3).zip(ln_values.windows(3)).all(|(t, v)| {
                let s0 = (v[1] - v[0]) / (t[1] - t[0]);
                let s1 = (v[2] - v[1]) / (t[2] - t[1]);
                s1 <= s0 + 1e-12 * (s0.abs() + 1.0)
            }),
        }
    }

    /// Whether `x -> F(|x|^2 / 2)` is log-concave (sufficient test: `F`
    /// non-increasing and log-concave).
    pub fn is_logconcave_radial(&self) -> bool {
        self.is_decreasing() && self.is_logconcave()
    }

    /// Whether `F(c^2 |x|^2 / 2)` is integrable over R^n.
    pub fn integrable_radial(&self, n: usize) -> bool {
        match self {
            WeightFunction::ExpNeg => true,
            WeightFunction::Power { alpha } => 2.0 * alpha > n as f64,
            WeightFunction::ConstOne => false,
            WeightFunction::ScaledShifted { base, .. } => base.integrable_radial(n),
            WeightFunction::Tabulated { knots, ln_values } => {
                let k = knots.len();
                ln_values[k - 1] < ln_values[k - 2]
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            WeightFunction::ExpNeg => "exp".into(),
            WeightFunction::Power { alpha } => format!("power(alpha={alpha})"),
            WeightFunction::ConstOne => "one".into(),
            WeightFunction::ScaledShifted { base, shift, scale } => format!("{scale}*{}(t-{shift})", base.label()),
            WeightFunction::Tabulated { knots, .. } => format!("tabulated({} knots)", knots.len()),
        }
    }
}

/// A positive function on the dual side, evaluated at points of a dual view.
/// `SamplePoint::value` is the dual potential there, `gradient` its gradient.
pub trait TestFunction: Send + Sync {
    fn eval(&self, p: &SamplePoint) -> f64;
    /// True when the function is log-concave by construction.
    fn is_logconcave(&self) -> bool {
        false
    }
}

impl<F: Fn(&SamplePoint) -> f64 + Send + Sync> TestFunction for F {
    fn eval(&self, p: &SamplePoint) -> f64 {
        self(p)
    }
}

/// Wrapper declaring a closure log-concave.
pub struct LogConcave<F>(pub F);

impl<F: Fn(&SamplePoint) -> f64 + Send + Sync> TestFunction for LogConcave<F> {
    fn eval(&self, p: &SamplePoint) -> f64 {
        (self.0)(p)
    }
    fn is_logconcave(&self) -> bool {
        true
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegralResult {
    pub value: f64,
    pub est_error: f64,
    pub truncation_radius: f64,
    pub points_used: usize,
    /// Mass removed by the s-concave boundary clipping rule.
    #[serde(skip_serializing_if = "is_zero")]
    pub clipped_mass: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

/// Fixed-order pairwise (tree) summation; bit-stable for a given input order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Pairwise sum of `f(i)` for `i < len`.
pub fn sum_by(len: usize, f: impl FnMut(usize) -> f64) -> f64 {
    let terms: Vec<f64> = (0..len).map(f).collect();
    pairwise_sum(&terms)
}

/// Sums already-weighted terms over a regular set, dropping those below
/// `EPS_CUT` times the largest.
pub fn truncated_sum(rs: &RegularSet, terms: &[f64]) -> Result<IntegralResult> {
    if let Some(i) = terms.iter().position(|t| !t.is_finite()) {
        return Err(Error::NonFinite(format!("integrand at {:?} is {}", rs.position(i), terms[i])));
    }
    let max = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let cut = EPS_CUT * max;
    let mut kept = Vec::with_capacity(terms.len());
    let mut radius = 0.0f64;
    for (i, t) in terms.iter().enumerate() {
        if t.abs() >= cut && *t != 0.0 {
            kept.push(*t);
            radius = radius.max(crate::funcrep::norm2(rs.position(i)).sqrt());
        }
    }
    // pad by one cell
    let pad = rs.weights.first().map(|w| w.powf(1.0 / rs.dim as f64) * (rs.dim as f64).sqrt()).unwrap_or(0.0);
    Ok(IntegralResult {
        value: pairwise_sum(&kept),
        est_error: 0.0,
        truncation_radius: radius + pad,
        points_used: kept.len(),
        clipped_mass: 0.0,
    })
}

/// Like [`truncated_sum`], but terms above `CLIP_RATIO` times the median are
/// moved into `clipped_mass` instead of the value.
pub fn clipped_sum(rs: &RegularSet, terms: &[f64]) -> Result<IntegralResult> {
    let mut sorted: Vec<f64> = terms.iter().map(|t| t.abs()).filter(|t| t.is_finite()).collect();
    if sorted.is_empty() {
        return truncated_sum(rs, terms);
    }
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    let limit = CLIP_RATIO * median;
    let mut clipped = Vec::new();
    let kept: Vec<f64> = terms
        .iter()
        .map(|&t| {
            if median > 0.0 && (t.abs() > limit || !t.is_finite()) {
                clipped.push(if t.is_finite() { t } else { f64::INFINITY });
                0.0
            } else {
                t
            }
        })
        .collect();
    let mut out = truncated_sum(rs, &kept)?;
    out.clipped_mass = pairwise_sum(&clipped);
    Ok(out)
}

/// Estimate from one halving of the spacing: `|I_h - I_2h|`, floored at the
/// double-precision noise level. Assumes no better than first-order
/// convergence, which is what cells cut by a domain boundary give.
pub(crate) fn halving_estimate(fine: f64, coarse: f64) -> f64 {
    (fine - coarse).abs().max(1e-12 * fine.abs())
}

/// `I(F∘psi) = ∫_{X_psi} F(psi(x)) dx` over a precomputed regular set.
pub fn weight_sum(f: &WeightFunction, rs: &RegularSet) -> Result<IntegralResult> {
    let terms: Vec<f64> = (0..rs.len()).map(|i| rs.weights[i] * f.eval(rs.values[i])).collect();
    truncated_sum(rs, &terms)
}

/// `I(F∘psi)` with an error estimate from the coarsened grid.
pub fn integrate_weight(f: &WeightFunction, psi: &FunctionRep, grid: &Grid) -> Result<IntegralResult> {
    let rs = regular_set(psi, grid)?;
    let mut out = weight_sum(f, &rs)?;
    let coarse = regular_set(psi, &grid.coarsened()?).and_then(|c| weight_sum(f, &c))?;
    out.est_error = halving_estimate(out.value, coarse.value);
    if !(out.value > 0.0) {
        return Err(Error::Invalid("integral is zero: positivity assumption violated".into()));
    }
    Ok(out)
}

/// Sum of `g` over a dual view (points already carry dual-side weights).
pub fn test_sum(g: &dyn TestFunction, view: &RegularSet) -> Result<IntegralResult> {
    let terms: Vec<f64> = (0..view.len()).map(|i| view.weights[i] * g.eval(&view.point(i))).collect();
    if let Some(i) = terms.iter().position(|t| *t < 0.0) {
        return Err(Error::Invalid(format!("test function is negative at {:?}", view.position(i))));
    }
    truncated_sum(view, &terms)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DualMode {
    DualSide,
    Pushforward,
    Both,
}

#[derive(Clone, Debug)]
pub struct DualIntegral {
    pub dual_side: Option<IntegralResult>,
    pub pushforward: Option<IntegralResult>,
}

impl DualIntegral {
    /// The pushforward value when available, else the dual-side value.
    pub fn value(&self) -> f64 {
        self.pushforward.as_ref().or(self.dual_side.as_ref()).map(|r| r.value).unwrap_or(f64::NAN)
    }
}

fn check_modes(out: &DualIntegral) -> Result<()> {
    if let (Some(a), Some(b)) = (&out.dual_side, &out.pushforward) {
        let tol = 3.0 * (a.est_error + b.est_error);
        if (a.value - b.value).abs() > tol {
            return Err(Error::Disagreement(format!(
                "dual-side {} vs pushforward {} (allowed {tol:e})",
                a.value, b.value
            )));
        }
    }
    Ok(())
}

/// `I(g, psi*)`: either `∫_{X_psi*} g(y) dy` on the dual grid, or
/// `∫_{X_psi} g(∇psi(x)) det ∇²psi(x) dx` on the primal grid.
pub fn integrate_dual(g: &dyn TestFunction, pair: &DualPair, mode: DualMode) -> Result<DualIntegral> {
    let mut out = DualIntegral { dual_side: None, pushforward: None };
    if mode != DualMode::Pushforward {
        let fine = regular_set(&pair.dual, &pair.dual_grid).and_then(|rs| test_sum(g, &rs))?;
        let coarse = regular_set(&pair.dual, &pair.dual_grid.coarsened()?).and_then(|rs| test_sum(g, &rs))?;
        let mut r = fine;
        r.est_error = halving_estimate(r.value, coarse.value);
        out.dual_side = Some(r);
    }
    if mode != DualMode::DualSide {
        let push = |grid: &Grid| -> Result<IntegralResult> {
            let rs = regular_set(&pair.primal, grid)?;
            test_sum(g, &legendre_view(&rs))
        };
        let mut r = push(&pair.primal_grid)?;
        let coarse = push(&pair.primal_grid.coarsened()?)?;
        r.est_error = halving_estimate(r.value, coarse.value);
        out.pushforward = Some(r);
    }
    check_modes(&out)?;
    Ok(out)
}

/// `I_s(g)`: `∫ g(y) dy` over the s-dual domain, or the pushforward
/// `∫ g(T_psi x) (1 - s psi) det ∇²psi / psi~^{n+1} dx`.
pub fn integrate_s(g: &dyn TestFunction, sp: &SDualPair, mode: DualMode) -> Result<DualIntegral> {
    let mut out = DualIntegral { dual_side: None, pushforward: None };
    if mode != DualMode::Pushforward {
        let (dual, dual_grid) = sp.dual.as_ref().ok_or_else(|| {
            Error::Invalid("dual-side integration needs the s-dual sampled on a grid".into())
        })?;
        let sum = |grid: &Grid| -> Result<IntegralResult> {
            let rs = regular_set(dual, grid)?;
            let rs = rs.filtered(|i| 1.0 - sp.s * rs.values[i] > 0.0);
            test_sum(g, &rs)
        };
        let mut r = sum(dual_grid)?;
        let coarse = sum(&dual_grid.coarsened()?)?;
        r.est_error = halving_estimate(r.value, coarse.value);
        out.dual_side = Some(r);
    }
    if mode != DualMode::DualSide {
        let mut r = test_sum(g, &sp.view)?;
        let coarse = sp.coarse()?;
        r.est_error = halving_estimate(r.value, test_sum(g, &coarse.view)?.value);
        out.pushforward = Some(r);
    }
    check_modes(&out)?;
    Ok(out)
}

/// `I(f)` for `f = (1 - s psi)^{1/s}` computed directly and through the
/// identity `(1+ns) I(f) = ∫ (1 - s psi)^{1/s - 1} psi~ dx`.
#[derive(Clone, Debug, Serialize)]
pub struct SIntegral {
    pub direct: IntegralResult,
    pub via_identity: IntegralResult,
    pub discrepancy: f64,
}

pub(crate) fn s_direct_terms(s: f64, rs: &RegularSet) -> Vec<f64> {
    (0..rs.len()).map(|i| rs.weights[i] * (1.0 - s * rs.values[i]).powf(1.0 / s)).collect()
}

pub(crate) fn s_identity_terms(s: f64, rs: &RegularSet) -> Vec<f64> {
    (0..rs.len())
        .map(|i| {
            let q = 1.0 - s * rs.values[i];
            let tilde = 1.0 + s * rs.conjugate_value(i);
            rs.weights[i] * q.powf(1.0 / s - 1.0) * tilde
        })
        .collect()
}

/// Half the mass of the terms whose cell may be cut by the support boundary
/// `{s psi = 1}`, located by the linear distance `(1 - s psi) / (s |grad psi|)`.
/// A term that stays finite up to the boundary makes the sum first order
/// with an erratic sign, which one halving can miss.
fn boundary_layer_mass(sp: &SDualPair, terms: &[f64]) -> f64 {
    let spacing = sp.primal_grid.spacing();
    let rs = &sp.rs;
    let layer: Vec<f64> = (0..rs.len())
        .filter_map(|i| {
            let g = rs.gradient(i);
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm > 0.0) {
                return None;
            }
            let half_width: f64 = 0.5 * g.iter().zip(spacing).map(|(v, h)| v.abs() * h).sum::<f64>() / norm;
            let distance = (1.0 - sp.s * rs.values[i]) / (sp.s * norm);
            (distance < half_width).then(|| terms[i].abs())
        })
        .collect();
    0.5 * pairwise_sum(&layer)
}

/// Both computations of `I(f)`, with error estimates from the coarsened grid.
/// Fails when they differ by more than three times the combined estimate.
pub fn integral_f_s(sp: &SDualPair) -> Result<SIntegral> {
    let n = sp.rs.dim as f64;
    let s = sp.s;
    let coarse = sp.coarse()?;
    let mut direct = clipped_sum(&sp.rs, &s_direct_terms(s, &sp.rs))?;
    let cd = clipped_sum(&coarse.rs, &s_direct_terms(s, &coarse.rs))?;
    direct.est_error = halving_estimate(direct.value, cd.value);
    let mut ident = clipped_sum(&sp.rs, &s_identity_terms(s, &sp.rs))?;
    let ci = clipped_sum(&coarse.rs, &s_identity_terms(s, &coarse.rs))?;
    let scale = 1.0 / (1.0 + n * s);
    ident.value *= scale;
    let layer = scale * boundary_layer_mass(sp, &s_identity_terms(s, &sp.rs));
    ident.est_error = halving_estimate(ident.value, ci.value * scale).max(layer);
    let discrepancy = (direct.value - ident.value).abs();
    if discrepancy > 3.0 * (direct.est_error + ident.est_error) {
        return Err(Error::Disagreement(format!(
            "I(f) direct {} vs identity {} (estimates {:e}, {:e})",
            direct.value, ident.value, direct.est_error, ident.est_error
        )));
    }
    Ok(SIntegral { direct, via_identity: ident, discrepancy })
}

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Globally adaptive Gauss–Kronrod quadrature of `f` on `[a, b]`.
pub fn adaptive_integral(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> (f64, f64, usize) {
    let mut parts: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, e) = gk15(&f, a, b);
    parts.push((a, b, v, e));
    let mut evals = 15;
    for _ in 0..4000 {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= rel_tol * total.abs() || err < 1e-300 {
            break;
        }
        let (k, _) = parts
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bk, be), (i, p)| if p.3 > be { (i, p.3) } else { (bk, be) });
        let (lo, hi, _, _) = parts.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        evals += 30;
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
    parts.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let vals: Vec<f64> = parts.iter().map(|p| p.2).collect();
    let errs: Vec<f64> = parts.iter().map(|p| p.3).collect();
    (pairwise_sum(&vals), pairwise_sum(&errs), evals)
}

/// `I(F, c) = ∫_{R^n} F(c^2 |x|^2 / 2) dx` by 1-D radial quadrature,
/// optionally truncated at radius `truncation`.
pub fn radial_integral(f: &WeightFunction, c: f64, n: usize, truncation: Option<f64>) -> Result<IntegralResult> {
    if !(c > 0.0) || n == 0 {
        return Err(Error::Invalid("radial integral needs c > 0 and n >= 1".into()));
    }
    let area = sphere_area(n);
    let p = (n - 1) as i32;
    let radial = |r: f64| f.eval(0.5 * c * c * r * r) * r.powi(p);
    let (value, err, evals, radius) = match truncation {
        Some(r) => {
            let (v, e, k) = adaptive_integral(radial, 0.0, r, 1e-13);
            (v, e, k, r)
        }
        None => {
            if !f.integrable_radial(n) {
                return Err(Error::Divergent(format!("{} is not integrable in dimension {n}", f.label())));
            }
            let mapped = |u: f64| {
                if u >= 1.0 {
                    return 0.0;
                }
                let r = u / (1.0 - u);
                let v = radial(r) / ((1.0 - u) * (1.0 - u));
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            };
            let (v, e, k) = adaptive_integral(mapped, 0.0, 1.0, 1e-13);
            (v, e, k, f64::INFINITY)
        }
    };
    Ok(IntegralResult {
        value: area * value,
        est_error: area * err,
        truncation_radius: radius,
        points_used: evals,
        clipped_mass: 0.0,
    })
}

/// `ω_{n,s} = (π/s)^{n/2} Γ(1 + 1/(2s)) / Γ(1 + n/2 + 1/(2s))`, the integral
/// of `[(1 - s|x|^2)_+]^{1/(2s)}`.
pub fn omega_ns(n: usize, s: f64) -> f64 {
    let h = 1.0 / (2.0 * s);
    let nn = n as f64;
    (std::f64::consts::PI / s).powf(nn / 2.0) * (ln_gamma(1.0 + h) - ln_gamma(1.0 + nn / 2.0 + h)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcrep::FunctionRep;
    use crate::transforms::{legendre, s_dual};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use std::f64::consts::PI;

    #[test]
    fn weight_flags() {
        assert!(WeightFunction::ExpNeg.is_logconcave_radial());
        assert!(!WeightFunction::Power { alpha: 2.0 }.is_logconcave_radial());
        assert!(WeightFunction::Power { alpha: 2.0 }.is_decreasing());
        let t = WeightFunction::tabulated(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.1]).unwrap();
        assert!(t.is_decreasing() && t.is_logconcave());
        assert!(WeightFunction::tabulated(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        let s = WeightFunction::scaled_shifted(WeightFunction::ExpNeg, 1.0, 2.0).unwrap();
        assert_relative_eq!(s.eval(1.0), 2.0, max_relative = 1e-15);
    }

    #[test]
    fn tabulated_extrapolates_log_linearly() {
        let t = WeightFunction::tabulated(vec![0.0, 1.0], vec![1.0, (-1.0f64).exp()]).unwrap();
        assert_relative_eq!(t.eval(5.0), (-5.0f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(t.eval(-2.0), 2.0f64.exp(), max_relative = 1e-12);
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let v: Vec<f64> = (0..1000).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        assert_relative_eq!(pairwise_sum(&v), v.iter().sum::<f64>(), max_relative = 1e-13);
    }

    #[test]
    fn gaussian_weight_integral_is_two_pi() {
        let psi = FunctionRep::gaussian(2, 1.0).unwrap();
        let grid = psi.suggested_grid(81).unwrap();
        let r = integrate_weight(&WeightFunction::ExpNeg, &psi, &grid).unwrap();
        assert_relative_eq!(r.value, 2.0 * PI, max_relative = 1e-6);
        assert!(r.est_error < 1e-6);
    }

    #[test]
    fn quadratic_weight_integral_is_pi() {
        // DERIVED: ∫ e^{-|x|^2} = π by the product of 1-D Gaussian integrals
        let psi = FunctionRep::quadratic(DMatrix::identity(2, 2), 0.0).unwrap();
        let grid = psi.suggested_grid(81).unwrap();
        let r = integrate_weight(&WeightFunction::ExpNeg, &psi, &grid).unwrap();
        assert_relative_eq!(r.value, PI, max_relative = 1e-6);
    }

    #[test]
    fn unit_weight_gives_domain_volume() {
        let e = FunctionRep::s_envelope(2, 0.5, 1.0).unwrap();
        let grid = e.suggested_grid(161).unwrap();
        let r = integrate_weight(&WeightFunction::ConstOne, &e, &grid).unwrap();
        assert_relative_eq!(r.value, 2.0 * PI, max_relative = 5e-3);
        assert!(r.est_error > 0.0);
    }

    #[test]
    fn radial_values() {
        let r = radial_integral(&WeightFunction::ExpNeg, 1.0, 2, None).unwrap();
        assert_relative_eq!(r.value, 2.0 * PI, max_relative = 1e-12);
        let r = radial_integral(&WeightFunction::ExpNeg, 1.0, 3, None).unwrap();
        assert_relative_eq!(r.value, (2.0 * PI).powf(1.5), max_relative = 1e-12);
        let r = radial_integral(&WeightFunction::ConstOne, 1.0, 2, Some(1.5)).unwrap();
        assert_relative_eq!(r.value, PI * 2.25, max_relative = 1e-12);
        assert!(matches!(radial_integral(&WeightFunction::ConstOne, 1.0, 2, None), Err(Error::Divergent(_))));
        assert!(radial_integral(&WeightFunction::Power { alpha: 1.0 }, 1.0, 2, None).is_err());
    }

    #[test]
    fn radial_scaling_law() {
        for f in [
            WeightFunction::ExpNeg,
            WeightFunction::Power { alpha: 2.5 },
            WeightFunction::scaled_shifted(WeightFunction::ExpNeg, 0.7, 3.0).unwrap(),
        ] {
            for n in 1..=3 {
                let a = radial_integral(&f, 1.0, n, None).unwrap().value;
                let b = radial_integral(&f, 2.0, n, None).unwrap().value;
                assert_relative_eq!(b / a, 0.5f64.powi(n as i32), max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn omega_closed_form_and_quadrature() {
        assert_relative_eq!(omega_ns(1, 0.5), 4.0 * 2f64.sqrt() / 3.0, max_relative = 1e-13);
        // DERIVED: 1-D quadrature of (1 - x^2/2)_+
        let (q, _, _) = adaptive_integral(|x: f64| (1.0 - 0.5 * x * x).max(0.0), -2f64.sqrt(), 2f64.sqrt(), 1e-12);
        assert_relative_eq!(omega_ns(1, 0.5), q, max_relative = 1e-10);
        // n = 2, s = 1: ∫ (1 - |x|^2)^{1/2} over the unit disk = 2π/3
        assert_relative_eq!(omega_ns(2, 1.0), 2.0 * PI / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn dual_integral_of_gaussian() {
        let psi = FunctionRep::gaussian(1, 1.0).unwrap();
        let grid = psi.suggested_grid(161).unwrap();
        let pair = legendre(&psi, Some(&grid), None).unwrap();
        let g = |p: &SamplePoint| (-p.value).exp();
        let r = integrate_dual(&g, &pair, DualMode::Both).unwrap();
        assert_relative_eq!(r.value(), (2.0 * PI).sqrt(), max_relative = 1e-6);
    }

    #[test]
    fn dual_modes_agree_on_anisotropic_quadratic() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0]));
        let psi = FunctionRep::quadratic(a, 0.0).unwrap();
        let grid = psi.suggested_grid(81).unwrap();
        let pair = legendre(&psi, Some(&grid), None).unwrap();
        let g = |p: &SamplePoint| (-p.value).exp();
        let r = integrate_dual(&g, &pair, DualMode::Both).unwrap();
        let (a, b) = (r.dual_side.unwrap(), r.pushforward.unwrap());
        assert!((a.value - b.value).abs() <= 2.0 * (a.est_error + b.est_error), "{} vs {}", a.value, b.value);
        // ∫ e^{-ψ*} = ∫ e^{-y1^2/4 - y2^2/8} = 2√π · 2√(2π)
        assert_relative_eq!(b.value, 4.0 * PI * 2f64.sqrt(), max_relative = 1e-6);
    }

    #[test]
    fn s_pushforward_of_one_is_dual_ball_volume() {
        // dual domain of the c = 1 envelope is the ball of radius s^{-1/2}
        let s = 0.5;
        let e = FunctionRep::s_envelope(2, s, 1.0).unwrap();
        let sp = s_dual(&e, s, Some(&e.suggested_grid(161).unwrap()), None).unwrap();
        let one = |_: &SamplePoint| 1.0;
        let r = integrate_s(&one, &sp, DualMode::Pushforward).unwrap();
        assert_relative_eq!(r.value(), PI / s, max_relative = 5e-3);
    }

    #[test]
    fn identity_two_ways_on_envelope() {
        let s = 0.5;
        let e = FunctionRep::s_envelope(1, s, 1.0).unwrap();
        let sp = s_dual(&e, s, Some(&e.suggested_grid(161).unwrap()), None).unwrap();
        let r = integral_f_s(&sp).unwrap();
        assert_relative_eq!(r.direct.value, omega_ns(1, s), max_relative = 2e-3);
        assert_relative_eq!(r.via_identity.value, omega_ns(1, s), max_relative = 2e-2);
    }
}
