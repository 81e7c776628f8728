//! Orlicz functions `h: (0, inf) -> (0, inf)` and their classes: `Phi`
//! (constant or strictly convex) and `Psi` (constant, or increasing and
//! strictly concave).

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum HClass {
    Phi,
    Psi,
    /// `h(t) = t^{-p/n}`; membership in `Phi` or `Psi` follows from `p`.
    PowerP { p: f64, n: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Monotonicity {
    Constant,
    Increasing,
    Decreasing,
    Neither,
}

/// Whether the variational problem for a class is an infimum or a supremum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Clone)]
pub enum HKind {
    Constant(f64),
    /// `t^q`
    Power(f64),
    /// `e^{-a t}`
    ExpDecay(f64),
    /// `ln(1 + t)`
    Log1p,
    Custom { name: String, f: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

impl fmt::Debug for HKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HKind::Constant(k) => write!(f, "Constant({k})"),
            HKind::Power(q) => write!(f, "Power({q})"),
            HKind::ExpDecay(a) => write!(f, "ExpDecay({a})"),
            HKind::Log1p => write!(f, "Log1p"),
            HKind::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct OrliczFunction {
    kind: HKind,
    class: HClass,
    monotonicity: Monotonicity,
    submultiplicative: bool,
}

/// 64 log-spaced sample points on `[1e-3, 1e3]`.
fn class_samples() -> Vec<f64> {
    (0..64).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 63.0)).collect()
}

fn slopes(f: &dyn Fn(f64) -> f64, ts: &[f64]) -> Vec<f64> {
    ts.windows(2).map(|w| (f(w[1]) - f(w[0])) / (w[1] - w[0])).collect()
}

fn monotonicity_of(f: &dyn Fn(f64) -> f64, ts: &[f64]) -> Monotonicity {
    let v: Vec<f64> = ts.iter().map(|t| f(*t)).collect();
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    let tol = 1e-12 * scale;
    if v.windows(2).all(|w| (w[1] - w[0]).abs() <= tol) {
        Monotonicity::Constant
    } else if v.windows(2).all(|w| w[1] > w[0]) {
        Monotonicity::Increasing
    } else if v.windows(2).all(|w| w[1] < w[0]) {
        Monotonicity::Decreasing
    } else {
        Monotonicity::Neither
    }
}

/// Strict convexity (`sign = 1`) or concavity (`sign = -1`) by the
/// divided-difference test: consecutive slopes strictly increase (decrease).
fn strictly_curved(f: &dyn Fn(f64) -> f64, ts: &[f64], sign: f64) -> bool {
    let s = slopes(f, ts);
    s.windows(2).all(|w| sign * (w[1] - w[0]) > 0.0)
}

/// `h(t) h(s) <= h(r)^2` for `r^2 <= t s`, on 16 log-spaced points.
fn submultiplicative_of(f: &dyn Fn(f64) -> f64) -> bool {
    let ts: Vec<f64> = (0..16).map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 15.0)).collect();
    for &t in &ts {
        for &s in &ts {
            let lhs = f(t) * f(s);
            let mut rs: Vec<f64> = ts.iter().cloned().filter(|r| r * r <= t * s).collect();
            rs.push((t * s).sqrt());
            for r in rs {
                let hr = f(r);
                if lhs > hr * hr * (1.0 + 1e-12) {
                    return false;
                }
            }
        }
    }
    true
}

impl OrliczFunction {
    fn build(kind: HKind, class: Option<HClass>) -> Result<Self> {
        let ts = class_samples();
        let f = {
            let kind = kind.clone();
            move |t: f64| eval_kind(&kind, t)
        };
        if let Some(t) = ts.iter().find(|t| !(f(**t) > 0.0) || !f(**t).is_finite()) {
            return Err(Error::Class(format!("h must be positive and finite; h({t}) = {}", f(*t))));
        }
        let monotonicity = monotonicity_of(&f, &ts);
        let convex = strictly_curved(&f, &ts, 1.0);
        let concave = strictly_curved(&f, &ts, -1.0);
        let detected = match monotonicity {
            Monotonicity::Constant => Some(HClass::Phi),
            _ if convex => Some(HClass::Phi),
            Monotonicity::Increasing if concave => Some(HClass::Psi),
            _ => None,
        };
        let class = match (class, detected) {
            (Some(HClass::PowerP { p, n }), Some(_)) => HClass::PowerP { p, n },
            (Some(HClass::Phi), Some(HClass::Phi)) => HClass::Phi,
            (Some(HClass::Psi), Some(HClass::Psi)) => HClass::Psi,
            (Some(HClass::Psi), Some(HClass::Phi)) if monotonicity == Monotonicity::Constant => HClass::Psi,
            (None, Some(c)) => c,
            (Some(want), got) => {
                return Err(Error::Class(format!("h was declared {want:?} but sampling gives {got:?}")));
            }
            (None, None) => {
                return Err(Error::Class(
                    "h is neither constant, strictly convex, nor increasing and strictly concave".into(),
                ))
            }
        };
        let submultiplicative = submultiplicative_of(&f);
        Ok(OrliczFunction { kind, class, monotonicity, submultiplicative })
    }

    pub fn constant(k: f64) -> Result<Self> {
        Self::build(HKind::Constant(k), None)
    }

    /// `t^q`; convex for `q < 0` or `q > 1`, increasing concave for `0 < q < 1`.
    pub fn power(q: f64) -> Result<Self> {
        if q == 0.0 {
            return Self::constant(1.0);
        }
        Self::build(HKind::Power(q), None)
    }

    /// `t^{-p/n}`, the function that turns Orlicz quantities into L_p ones.
    pub fn power_p(p: f64, n: usize) -> Result<Self> {
        if n == 0 || p == -(n as f64) {
            return Err(Error::Class("power_p needs n >= 1 and p != -n".into()));
        }
        let q = -p / n as f64;
        let kind = if q == 0.0 { HKind::Constant(1.0) } else { HKind::Power(q) };
        Self::build(kind, Some(HClass::PowerP { p, n }))
    }

    pub fn exp_decay(a: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::Class("exp_decay needs a > 0".into()));
        }
        Self::build(HKind::ExpDecay(a), None)
    }

    pub fn log1p() -> Result<Self> {
        Self::build(HKind::Log1p, None)
    }

    /// A user-supplied `h`, checked against the declared class.
    pub fn custom(name: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static, class: HClass) -> Result<Self> {
        Self::build(HKind::Custom { name: name.to_string(), f: Arc::new(f) }, Some(class))
    }

    pub fn eval(&self, t: f64) -> f64 {
        eval_kind(&self.kind, t)
    }

    pub fn kind(&self) -> &HKind {
        &self.kind
    }

    pub fn class(&self) -> HClass {
        self.class
    }

    pub fn monotonicity(&self) -> Monotonicity {
        self.monotonicity
    }

    pub fn is_submultiplicative(&self) -> bool {
        self.submultiplicative
    }

    pub fn is_constant(&self) -> bool {
        self.monotonicity == Monotonicity::Constant
    }

    /// Member of `Phi`: constant or strictly convex.
    pub fn in_phi(&self) -> bool {
        match self.class {
            HClass::Phi => true,
            HClass::Psi => self.is_constant(),
            HClass::PowerP { p, n } => {
                let q = -p / n as f64;
                !(0.0 < q && q < 1.0)
            }
        }
    }

    /// Member of `Psi`: constant, or increasing and strictly concave.
    pub fn in_psi(&self) -> bool {
        self.is_constant() || !self.in_phi()
    }

    /// Infimum for `Phi`, supremum for `Psi`; constants count as `Phi`.
    pub fn direction(&self) -> Direction {
        if self.in_phi() {
            Direction::Minimize
        } else {
            Direction::Maximize
        }
    }

    /// `h^{-1}(v)` by bisection on `[1e-12, 1e12]`; requires strict monotonicity.
    pub fn inverse(&self, v: f64) -> Result<f64> {
        let incr = match self.monotonicity {
            Monotonicity::Increasing => true,
            Monotonicity::Decreasing => false,
            _ => return Err(Error::Class(format!("{} is not invertible", self.label()))),
        };
        let (mut lo, mut hi) = (1e-12f64, 1e12f64);
        let (flo, fhi) = (self.eval(lo), self.eval(hi));
        let (vmin, vmax) = if incr { (flo, fhi) } else { (fhi, flo) };
        if !(v >= vmin && v <= vmax) {
            return Err(Error::Class(format!("{v} is outside the range of {} on the search window", self.label())));
        }
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            let above = self.eval(mid) > v;
            if above == incr {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi / lo - 1.0 < 1e-15 {
                break;
            }
        }
        Ok((lo * hi).sqrt())
    }

    pub fn label(&self) -> String {
        match &self.kind {
            HKind::Constant(k) => format!("const({k})"),
            HKind::Power(q) => format!("t^{q}"),
            HKind::ExpDecay(a) => format!("exp(-{a}t)"),
            HKind::Log1p => "ln(1+t)".into(),
            HKind::Custom { name, .. } => name.clone(),
        }
    }
}

fn eval_kind(kind: &HKind, t: f64) -> f64 {
    match kind {
        HKind::Constant(k) => *k,
        HKind::Power(q) => t.powf(*q),
        HKind::ExpDecay(a) => (-a * t).exp(),
        HKind::Log1p => t.ln_1p(),
        HKind::Custom { f, .. } => f(t),
    }
}

/// `H = h ∘ h1^{-1}` as a plain function, for the cyclic inequalities.
pub fn composed_with_inverse<'a>(h: &'a OrliczFunction, h1: &'a OrliczFunction) -> impl Fn(f64) -> Result<f64> + 'a {
    move |t| Ok(h.eval(h1.inverse(t)?))
}

/// Monotonicity and curvature of `H = h ∘ h1^{-1}` sampled on the range of `h1`.
pub fn composed_shape(h: &OrliczFunction, h1: &OrliczFunction) -> Result<(Monotonicity, f64)> {
    let ts = class_samples();
    let mut vs: Vec<f64> = ts.iter().map(|t| h1.eval(*t)).collect();
    vs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vs.dedup();
    let hv: Vec<f64> = vs.iter().map(|v| h.eval(h1.inverse(*v).unwrap_or(f64::NAN))).collect();
    if hv.iter().any(|v| !v.is_finite()) {
        return Err(Error::Class("H is not finite on the sampled range".into()));
    }
    let f = |i: usize| hv[i];
    let mono = if hv.windows(2).all(|w| w[1] > w[0]) {
        Monotonicity::Increasing
    } else if hv.windows(2).all(|w| w[1] < w[0]) {
        Monotonicity::Decreasing
    } else {
        Monotonicity::Neither
    };
    let s: Vec<f64> = (0..vs.len() - 1).map(|i| (f(i + 1) - f(i)) / (vs[i + 1] - vs[i])).collect();
    let convex = s.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs());
    let concave = s.windows(2).all(|w| w[1] <= w[0] + 1e-9 * w[0].abs());
    let curvature = if convex && !concave {
        1.0
    } else if concave && !convex {
        -1.0
    } else {
        0.0
    };
    Ok((mono, curvature))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn classes_of_powers() {
        assert!(OrliczFunction::power(2.0).unwrap().in_phi());
        assert!(OrliczFunction::power(-1.0).unwrap().in_phi());
        let sqrt = OrliczFunction::power(0.5).unwrap();
        assert!(sqrt.in_psi() && !sqrt.in_phi());
        assert_eq!(sqrt.direction(), Direction::Maximize);
        assert!(OrliczFunction::power(1.0).is_err());
        let c = OrliczFunction::constant(2.0).unwrap();
        assert!(c.in_phi() && c.in_psi());
    }

    #[test]
    fn power_p_classes() {
        let h = OrliczFunction::power_p(2.0, 2).unwrap();
        assert!(h.in_phi());
        assert_relative_eq!(h.eval(4.0), 0.25);
        let h = OrliczFunction::power_p(-1.0, 2).unwrap();
        assert!(h.in_psi());
        assert_eq!(h.direction(), Direction::Maximize);
        assert!(OrliczFunction::power_p(-2.0, 2).is_err());
        assert!(OrliczFunction::power_p(0.0, 2).unwrap().is_constant());
    }

    #[test]
    fn custom_class_is_verified() {
        assert!(OrliczFunction::custom("t^2+1", |t| t * t + 1.0, HClass::Phi).is_ok());
        assert!(OrliczFunction::custom("t^2+1", |t| t * t + 1.0, HClass::Psi).is_err());
        assert!(OrliczFunction::custom("sin", |t: f64| 2.0 + t.sin(), HClass::Phi).is_err());
    }

    #[test]
    fn inverse_and_submultiplicativity() {
        let h = OrliczFunction::power(-2.0).unwrap();
        assert_relative_eq!(h.inverse(0.25).unwrap(), 2.0, max_relative = 1e-12);
        assert!(h.is_submultiplicative());
        assert!(!OrliczFunction::power(2.0).unwrap().is_submultiplicative());
        assert!(OrliczFunction::constant(1.0).unwrap().inverse(1.0).is_err());
    }

    #[test]
    fn composed_shapes() {
        let (m, c) = composed_shape(&OrliczFunction::power(2.0).unwrap(), &OrliczFunction::power(0.5).unwrap()).unwrap();
        assert_eq!(m, Monotonicity::Increasing);
        assert_eq!(c, 1.0);
        let (m, c) = composed_shape(&OrliczFunction::power(-1.0).unwrap(), &OrliczFunction::power(-2.0).unwrap()).unwrap();
        assert_eq!(m, Monotonicity::Increasing);
        assert_eq!(c, -1.0);
    }
}
