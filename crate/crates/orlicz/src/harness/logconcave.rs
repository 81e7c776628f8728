//! Checks for convex potentials and the log-concave case.

use nalgebra::DMatrix;

use super::{centred, collect, unimodular_samples, CheckContext, Relation, VerdictReport};
use crate::affine::{
    asp_direct_on, asp_variational_on, base_is_logconcave, closed_form_gp, closed_form_orlicz_as, g0_candidate, gaussian_mass,
    gp_on, mixed_integral_on, orlicz_as_on, orlicz_gm_on, quadratic_form, Prepared,
};
use crate::error::{Error, Result};
use crate::family::VariationalResult;
use crate::funcrep::{FunctionRep, Grid};
use crate::hfunc::{composed_shape, composed_with_inverse, Direction, Monotonicity, OrliczFunction};
use crate::quadrature::{radial_integral, WeightFunction};
use crate::transforms::{breve, closed_form_legendre, discrete_conjugate, legendre};

fn id(group: &str, n: usize, rest: &str) -> String {
    format!("{group}/n{n}/{rest}")
}

fn is_exp(f: &WeightFunction) -> bool {
    match f {
        WeightFunction::ExpNeg => true,
        WeightFunction::ScaledShifted { base, .. } => is_exp(base),
        _ => false,
    }
}

/// `F̆` and `I(F̆, 1)`; exact for two multiples of `e^{-t}`.
fn envelope(f1: &WeightFunction, f2: &WeightFunction, n: usize) -> Result<(WeightFunction, f64)> {
    let fb = match (f1, f2) {
        (WeightFunction::ExpNeg, WeightFunction::ExpNeg) => WeightFunction::ExpNeg,
        _ => breve(f1, f2, (-10.0, 80.0), 901)?,
    };
    let i = radial_integral(&fb, 1.0, n, None)?.value;
    if !(i > 0.0 && i.is_finite()) {
        return Err(Error::Unbounded(format!("I(F-breve, 1) = {i}")));
    }
    Ok((fb, i))
}

/// Discrete conjugate of a quadratic against `<A^{-1} y, y>/4 - a`, the
/// involution error of a sampled quadratic, and the change of variables
/// for `I(F2 o psi*)`.
pub fn check_legendre(ctx: &CheckContext, n: usize) -> Vec<VerdictReport> {
    let prov = "Legendre transform of <Ax,x> + a is <A^-1 y,y>/4 - a";
    collect(&id("transforms", n, "legendre"), prov, legendre_reports(ctx, n))
}

fn legendre_reports(ctx: &CheckContext, n: usize) -> Result<Vec<VerdictReport>> {
    let tol = ctx.tolerances.transform;
    let a = match n {
        1 => DMatrix::from_element(1, 1, 1.5),
        _ => DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 + i as f64 } else { 0.3 }),
    };
    let offset = 0.2;
    let psi = FunctionRep::quadratic(a.clone(), offset)?;
    let ainv = a.clone().try_inverse().ok_or_else(|| Error::Invalid("singular test matrix".into()))?;
    let count = if n == 1 { 2001 } else { 161 };
    let primal = Grid::cube(n, 2.0, count)?;
    let dual = Grid::cube(n, 1.2, 21)?;
    let d = discrete_conjugate(&psi, &primal, &dual)?;
    let mut err = 0.0f64;
    for (j, v) in d.iter().enumerate() {
        let y = nalgebra::DVector::from_vec(dual.node(j));
        let want = 0.25 * (&ainv * &y).dot(&y) - offset;
        err = err.max((v - want).abs());
    }
    let mut out = vec![VerdictReport::new(id("transforms", n, "legendre/quadratic"), "discrete conjugate of a quadratic", err, Relation::Le, tol, 0.0)];

    let coarse = Grid::cube(n, 2.0, if n == 1 { 201 } else { 41 })?;
    let pair = legendre(&psi.sample_on(&coarse)?, None, None)?;
    out.push(VerdictReport::new(
        id("transforms", n, "legendre/involution"),
        "psi** = psi on sampled quadratics, within two grid spacings",
        pair.involution_error,
        Relation::Le,
        2.0 * coarse.max_spacing(),
        0.0,
    ));

    let exp = WeightFunction::ExpNeg;
    let t = match n {
        1 => DMatrix::from_element(1, 1, 0.8),
        _ => DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else if i < j { 0.4 } else { 0.0 }),
    };
    for (label, f) in [("gaussian", FunctionRep::gaussian(n, 1.3)?), ("mapped", FunctionRep::quadratic(a, 0.0)?.compose_linear(&t)?)] {
        let prep = ctx.prepare(&f)?;
        let conj = closed_form_legendre(&f).ok_or_else(|| Error::Invalid("no closed-form conjugate".into()))?;
        let direct = ctx.prepare(&conj)?.primal_integral(&exp);
        out.push(VerdictReport::new(
            id("transforms", n, &format!("dual_integral/{label}")),
            "I(F2 o psi*) over X_psi* equals the pushforward integral over X_psi",
            prep.dual_integral(&exp),
            Relation::Eq,
            direct,
            ctx.tolerances.equality,
        ));
    }
    Ok(out)
}

/// `I(F, c) = c^{-n} I(F, 1)` for every built-in integrable weight.
pub fn check_scaling(ctx: &CheckContext, n: usize) -> Vec<VerdictReport> {
    let prov = "change of variables I(F, c) = c^-n I(F, 1)";
    collect(&id("scaling", n, "weights"), prov, scaling_reports(ctx, n, prov))
}

fn scaling_reports(ctx: &CheckContext, n: usize, prov: &str) -> Result<Vec<VerdictReport>> {
    let exp = WeightFunction::ExpNeg;
    let shifted = WeightFunction::scaled_shifted(WeightFunction::ExpNeg, 0.5, 2.0)?;
    let weights = [exp.clone(),
        WeightFunction::power(n as f64 + 2.0)?,
        shifted.clone(),
        breve(&exp, &shifted, (-10.0, 80.0), 301)?];
    let mut out = Vec::new();
    for w in weights.iter().filter(|w| w.integrable_radial(n)) {
        let one = radial_integral(w, 1.0, n, None)?.value;
        for c in [0.5, 2.0] {
            let lhs = radial_integral(w, c, n, None)?.value;
            out.push(VerdictReport::new(
                id("scaling", n, &format!("{}/c{c}", w.label())),
                prov,
                lhs,
                Relation::Eq,
                c.powi(-(n as i32)) * one,
                ctx.tolerances.scaling,
            ));
        }
    }
    Ok(out)
}

/// Gaussian closed forms: `as = c^{-n} h(c^{-n}) (sqrt(2 pi))^n`, the
/// general `a I(F,c) h(...)` form with `F1 = aF`, `F2 = bF`, and
/// `G_p = c^{n(p-n)/(n+p)} (sqrt(2 pi))^n`.
pub fn check_closed_forms(ctx: &CheckContext, n: usize) -> Vec<VerdictReport> {
    let prov = "Orlicz surface areas of c^2|x|^2/2 in closed form";
    collect(&id("closed_forms", n, "gaussian"), prov, closed_form_reports(ctx, n, prov))
}

fn closed_form_reports(ctx: &CheckContext, n: usize, prov: &str) -> Result<Vec<VerdictReport>> {
    let exp = WeightFunction::ExpNeg;
    let tol = ctx.tolerances.closed_form;
    let hs = [
        ("t^-1/n", OrliczFunction::power_p(1.0, n)?),
        ("t^-2/n", OrliczFunction::power_p(2.0, n)?),
        ("const", OrliczFunction::constant(1.0)?),
        ("t^1/2", OrliczFunction::power(0.5)?),
    ];
    let (a, b) = (2.0, 0.5);
    let f1 = WeightFunction::scaled_shifted(exp.clone(), 0.0, a)?;
    let f2 = WeightFunction::scaled_shifted(exp.clone(), 0.0, b)?;
    let mut out = Vec::new();
    for c in [0.5, 1.0, 2.0] {
        let prep = ctx.prepare(&FunctionRep::gaussian(n, c)?)?;
        for (hl, h) in &hs {
            let want = closed_form_orlicz_as(h, &exp, 1.0, 1.0, c, n)?;
            let asv = orlicz_as_on(h, &exp, &exp, &prep, &ctx.family)?.value;
            out.push(VerdictReport::new(id("closed_forms", n, &format!("as/c{c}/{hl}")), prov, asv, Relation::Eq, want, tol));
            let gm = orlicz_gm_on(h, &exp, &exp, &prep, &ctx.family)?.value;
            out.push(VerdictReport::new(id("closed_forms", n, &format!("gm/c{c}/{hl}")), prov, gm, Relation::Eq, want, tol));
            let want_ab = closed_form_orlicz_as(h, &exp, a, b, c, n)?;
            let ab = orlicz_as_on(h, &f1, &f2, &prep, &ctx.family)?.value;
            out.push(VerdictReport::new(id("closed_forms", n, &format!("as_ab/c{c}/{hl}")), prov, ab, Relation::Eq, want_ab, tol));
        }
        for p in [1.0, 2.0] {
            let g = gp_on(p, &exp, &exp, &prep, &ctx.family)?.value;
            out.push(VerdictReport::new(
                id("closed_forms", n, &format!("gp/c{c}/p{p}")),
                "G_p of c^2|x|^2/2 is c^(n(p-n)/(n+p)) (2 pi)^(n/2)",
                g,
                Relation::Eq,
                closed_form_gp(p, &exp, c, n)?,
                tol,
            ));
        }
    }
    Ok(out)
}

/// The variational `as_p` with the optimal `g0` injected equals the direct
/// integral; without it the search is one-sided (Hölder).
pub fn check_variational(ctx: &CheckContext, psi: &FunctionRep, label: &str, ps: &[f64]) -> Vec<VerdictReport> {
    let n = psi.dim();
    let prov = "variational formula for the L_p affine surface area";
    collect(&id("variational", n, label), prov, variational_reports(ctx, psi, label, ps, prov))
}

fn variational_reports(ctx: &CheckContext, psi: &FunctionRep, label: &str, ps: &[f64], prov: &str) -> Result<Vec<VerdictReport>> {
    let n = psi.dim();
    let exp = WeightFunction::ExpNeg;
    let prep = ctx.prepare(psi)?;
    let tol = ctx.tolerances.equality;
    let mut ps: Vec<f64> = ps.iter().copied().chain([-1.0]).filter(|p| *p != -(n as f64)).collect();
    ps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ps.dedup();
    let mut out = Vec::new();
    for p in ps {
        let direct = asp_direct_on(p, &exp, &exp, &prep)?.value;
        let fam = ctx.family.clone().with_candidate(g0_candidate(p, &exp, &exp, &prep));
        let inj = asp_variational_on(p, &exp, &exp, &prep, &fam)?.value;
        out.push(VerdictReport::new(id("variational", n, &format!("{label}/p{p}/g0")), prov, inj, Relation::Eq, direct, tol));
        let plain = asp_variational_on(p, &exp, &exp, &prep, &ctx.family)?.value;
        let rel = if p > 0.0 { Relation::Ge } else { Relation::Le };
        out.push(VerdictReport::new(id("variational", n, &format!("{label}/p{p}/search")), prov, plain, rel, direct, tol));
    }
    Ok(out)
}

/// A quantity whose value must not change under `psi -> psi o T`, `|det T| = 1`.
#[derive(Clone, Debug)]
pub enum InvariantQuantity {
    /// `V_h(psi o T, g o T^{-t}) = V_h(psi, g)` for a fixed test function `g` with polynomial decay.
    MixedIntegral(OrliczFunction),
    OrliczAs(OrliczFunction),
    OrliczGm(OrliczFunction),
    AspDirect(f64),
    Gp(f64),
}

impl InvariantQuantity {
    pub fn id(&self) -> String {
        match self {
            InvariantQuantity::MixedIntegral(h) => format!("mixed_integral/{}", h.label()),
            InvariantQuantity::OrliczAs(h) => format!("orlicz_as/{}", h.label()),
            InvariantQuantity::OrliczGm(h) => format!("orlicz_gm/{}", h.label()),
            InvariantQuantity::AspDirect(p) => format!("asp_direct/p{p}"),
            InvariantQuantity::Gp(p) => format!("gp/p{p}"),
        }
    }

    /// One of each, with the first `h` of the roster.
    pub fn roster(_n: usize, hs: &[(String, OrliczFunction)]) -> Vec<Self> {
        let mut out = Vec::new();
        if let Some((_, h)) = hs.first() {
            out.push(InvariantQuantity::MixedIntegral(h.clone()));
            out.push(InvariantQuantity::OrliczAs(h.clone()));
            out.push(InvariantQuantity::OrliczGm(h.clone()));
        }
        out.push(InvariantQuantity::AspDirect(2.0));
        out.push(InvariantQuantity::Gp(1.0));
        out
    }

    /// Value on `psi o T` (`T = None` for `psi` itself).
    fn value(&self, ctx: &CheckContext, psi: &FunctionRep, t: Option<&DMatrix<f64>>) -> Result<f64> {
        let exp = WeightFunction::ExpNeg;
        let mapped = match t {
            Some(t) => psi.compose_linear(t)?,
            None => psi.clone(),
        };
        let prep = ctx.prepare(&mapped)?;
        Ok(match self {
            InvariantQuantity::MixedIntegral(h) => {
                let n = psi.dim();
                let tt = match t {
                    Some(t) => t.transpose(),
                    None => DMatrix::identity(n, n),
                };
                // g o T^{-t}(y) = g(T^{-t} y), so evaluate g at T^t-preimages.
                let tinv_t = tt.try_inverse().ok_or_else(|| Error::Invalid("singular map".into()))?;
                let g = move |y: &[f64]| {
                    let u = &tinv_t * nalgebra::DVector::from_column_slice(y);
                    1.0 / (1.0 + u.norm_squared() + 0.3 * u[0])
                };
                mixed_integral_on(h, &exp, &exp, &prep, &g)?.value
            }
            InvariantQuantity::OrliczAs(h) => orlicz_as_on(h, &exp, &exp, &prep, &ctx.family)?.value,
            InvariantQuantity::OrliczGm(h) => orlicz_gm_on(h, &exp, &exp, &prep, &ctx.family)?.value,
            InvariantQuantity::AspDirect(p) => asp_direct_on(*p, &exp, &exp, &prep)?.value,
            InvariantQuantity::Gp(p) => gp_on(*p, &exp, &exp, &prep, &ctx.family)?.value,
        })
    }
}

/// The quantity on `psi` against `psi o T` for `count` seeded unimodular
/// maps, plus a coordinate reflection.
pub fn check_invariance(
    ctx: &CheckContext,
    quantity: &InvariantQuantity,
    psi: &FunctionRep,
    label: &str,
    count: usize,
    seed: u64,
) -> Vec<VerdictReport> {
    let n = psi.dim();
    let base_id = id("invariance", n, &format!("{}/{label}", quantity.id()));
    let prov = "invariance under linear maps with determinant +-1";
    let run = || -> Result<Vec<VerdictReport>> {
        let base = quantity.value(ctx, psi, None)?;
        let mut maps = unimodular_samples(n, count, seed);
        let mut reflection = DMatrix::identity(n, n);
        reflection[(0, 0)] = -1.0;
        maps.push(reflection);
        let mut out = Vec::new();
        for (k, t) in maps.iter().enumerate() {
            let tag = if k == count { "reflect".to_string() } else { format!("T{k:02}") };
            let v = match quantity.value(ctx, psi, Some(t)) {
                Ok(v) => v,
                Err(e) => {
                    out.push(VerdictReport::error(format!("{base_id}/{tag}"), prov, &e));
                    continue;
                }
            };
            out.push(VerdictReport::new(format!("{base_id}/{tag}"), prov, v, Relation::Eq, base, ctx.tolerances.invariance));
        }
        Ok(out)
    };
    collect(&base_id, prov, run())
}

/// `G_p(psi o lambda) = |lambda|^{n(p-n)/(p+n)} G_p(psi)` and
/// `G_p(psi o T) = |det T|^{(p-n)/(p+n)} G_p(psi)`.
pub fn check_homogeneity(ctx: &CheckContext, psi: &FunctionRep, label: &str, ps: &[f64]) -> Vec<VerdictReport> {
    let n = psi.dim();
    let prov = "homogeneity and GL(n) covariance of G_p";
    let run = || -> Result<Vec<VerdictReport>> {
        let exp = WeightFunction::ExpNeg;
        let nn = n as f64;
        let base_prep = ctx.prepare(psi)?;
        let lambda = 1.5;
        let scale = DMatrix::<f64>::identity(n, n) * lambda;
        let mut stretch = DMatrix::<f64>::identity(n, n);
        stretch[(0, 0)] = 2.0;
        let mut out = Vec::new();
        for &p in ps.iter().filter(|p| **p != -nn) {
            let base = gp_on(p, &exp, &exp, &base_prep, &ctx.family)?.value;
            for (tag, t, factor) in [
                ("scale", &scale, lambda.powf(nn * (p - nn) / (p + nn))),
                ("stretch", &stretch, 2f64.powf((p - nn) / (p + nn))),
            ] {
                let prep = ctx.prepare(&psi.compose_linear(t)?)?;
                let v = gp_on(p, &exp, &exp, &prep, &ctx.family)?.value;
                out.push(VerdictReport::new(
                    id("invariance", n, &format!("gp_{tag}/{label}/p{p}")),
                    prov,
                    v,
                    Relation::Eq,
                    factor * base,
                    ctx.tolerances.invariance,
                ));
            }
        }
        Ok(out)
    };
    collect(&id("invariance", n, &format!("gp_scale/{label}")), prov, run())
}

/// `I(F1 o psi) I(F2 o psi*) <= I(F̆, 1)^2` after centring, with equality
/// for quadratics and multiples of `e^{-t}`.
pub fn check_bs(ctx: &CheckContext, psi: &FunctionRep, label: &str, f1: &WeightFunction, f2: &WeightFunction) -> VerdictReport {
    let n = psi.dim();
    let check_id = id("bs", n, &format!("{label}/{}/{}", f1.label(), f2.label()));
    let prov = "functional Blaschke-Santalo inequality";
    let run = || -> Result<VerdictReport> {
        let c = centred(ctx, psi, f2)?;
        let prep = ctx.prepare(&c)?;
        let lhs = prep.primal_integral(f1) * prep.dual_integral(f2);
        let (_, ib) = envelope(f1, f2, n)?;
        let equality = quadratic_form(psi).is_some() && is_exp(f1) && is_exp(f2);
        let rel = if equality { Relation::Eq } else { Relation::Le };
        Ok(VerdictReport::new(check_id.clone(), prov, lhs, rel, ib * ib, ctx.tolerances.inequality))
    };
    run().unwrap_or_else(|e| VerdictReport::error(check_id.clone(), prov, &e))
}

fn search(
    ctx: &CheckContext,
    h: &OrliczFunction,
    f1: &WeightFunction,
    f2: &WeightFunction,
    prep: &Prepared,
    geominimal: bool,
    inject: Option<&VariationalResult>,
) -> Result<VariationalResult> {
    let fam = match inject {
        Some(r) if !r.ln_tables.is_empty() => ctx.family.clone().with_candidate(r.as_candidate("cross")),
        _ => ctx.family.clone(),
    };
    if geominimal {
        orlicz_gm_on(h, f1, f2, prep, &fam)
    } else {
        orlicz_as_on(h, f1, f2, prep, &fam)
    }
}

/// `as <= I(F1 o psi) h((sqrt(2 pi))^n / I(F2 o psi*))` for `h` in Phi (`>=`
/// in Psi), the same for the geominimal area, and `as <= gm` (`>=` in Psi).
pub fn check_prop_bounds(
    ctx: &CheckContext,
    h: &OrliczFunction,
    h_label: &str,
    f1: &WeightFunction,
    f2: &WeightFunction,
    psi: &FunctionRep,
    label: &str,
) -> Vec<VerdictReport> {
    let n = psi.dim();
    let base = id("bounds", n, &format!("{label}/{h_label}"));
    let prov = "Orlicz surface areas bounded by the volume product";
    let run = || -> Result<Vec<VerdictReport>> {
        let prep = ctx.prepare(psi)?;
        let bound = prep.primal_integral(f1) * h.eval(gaussian_mass(n) / prep.dual_integral(f2));
        let rel = if h.direction() == Direction::Minimize { Relation::Le } else { Relation::Ge };
        let tol = ctx.tolerances.inequality;
        let mut out = Vec::new();
        let gm = if base_is_logconcave(f2) { Some(search(ctx, h, f1, f2, &prep, true, None)?) } else { None };
        let asv = search(ctx, h, f1, f2, &prep, false, gm.as_ref())?;
        out.push(VerdictReport::new(format!("{base}/as_vs_bound"), prov, asv.value, rel, bound, tol));
        if let Some(gm) = gm {
            out.push(VerdictReport::new(format!("{base}/gm_vs_bound"), prov, gm.value, rel, bound, tol));
            out.push(VerdictReport::new(
                format!("{base}/as_vs_gm"),
                "ordering of the Orlicz affine and geominimal surface areas",
                asv.value,
                rel,
                gm.value,
                tol,
            ));
        }
        Ok(out)
    };
    collect(&base, prov, run())
}

/// `G_p <= I(f)^{n/(n+p)} I(f°)^{p/(n+p)}` for `p > 0` (`>=` for `p < 0`),
/// and the isoperimetric ratios of `G_p(f) / G_p(gamma_n)` after centring.
pub fn check_gp_bounds(ctx: &CheckContext, psi: &FunctionRep, label: &str, ps: &[f64]) -> Vec<VerdictReport> {
    let n = psi.dim();
    let base = id("bounds", n, &format!("{label}/gp"));
    let prov = "L_p geominimal surface area against volume products";
    let run = || -> Result<Vec<VerdictReport>> {
        let exp = WeightFunction::ExpNeg;
        let nn = n as f64;
        let c = centred(ctx, psi, &exp)?;
        let prep = ctx.prepare(&c)?;
        let i1 = prep.primal_integral(&exp);
        let i2 = prep.dual_integral(&exp);
        let ig = gaussian_mass(n);
        let tol = ctx.tolerances.inequality;
        let mut ps: Vec<f64> = ps.iter().copied().chain([-nn - 1.0]).filter(|p| *p != -nn).collect();
        ps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ps.dedup();
        let mut out = Vec::new();
        for p in ps {
            let g = gp_on(p, &exp, &exp, &prep, &ctx.family)?.value;
            let vol = i1.powf(nn / (nn + p)) * i2.powf(p / (nn + p));
            let rel = if p > 0.0 { Relation::Le } else { Relation::Ge };
            out.push(VerdictReport::new(format!("{base}/p{p}/volume"), prov, g, rel, vol, tol));
            let ratio = g / ig;
            let polar = (i2 / ig).powf((p - nn) / (p + nn));
            let primal = (i1 / ig).powf((nn - p) / (nn + p));
            let (rel, rhs) = if p > 0.0 {
                (Relation::Le, polar.min(primal))
            } else if p > -nn {
                (Relation::Ge, primal)
            } else {
                (Relation::Ge, polar)
            };
            out.push(VerdictReport::new(format!("{base}/p{p}/isoperimetric"), "L_p affine isoperimetric inequalities", ratio, rel, rhs, tol));
        }
        Ok(out)
    };
    collect(&base, prov, run())
}

/// Orlicz affine (and geominimal) surface area against the Gaussian
/// references `|x|^2/(2 c^2)` with `c = ĉ` (any `h` in Phi) and
/// `c^2|x|^2/2` with `c = c̄` (decreasing `h` in Phi, or `h` in Psi with the
/// direction reversed).
pub fn check_isoperimetric(
    ctx: &CheckContext,
    h: &OrliczFunction,
    h_label: &str,
    f1: &WeightFunction,
    f2: &WeightFunction,
    psi: &FunctionRep,
    label: &str,
) -> Vec<VerdictReport> {
    let n = psi.dim();
    let base = id("isoperimetric", n, &format!("{label}/{h_label}"));
    let prov = "Orlicz affine isoperimetric inequality";
    let run = || -> Result<Vec<VerdictReport>> {
        let nn = n as f64;
        let c = centred(ctx, psi, f2)?;
        let prep = ctx.prepare(&c)?;
        let i1 = prep.primal_integral(f1);
        let i2 = prep.dual_integral(f2);
        let (fb, ib) = envelope(f1, f2, n)?;
        let c_hat = (ib / i2).powf(1.0 / nn);
        let c_bar = (ib / i1).powf(1.0 / nn);
        let equality = quadratic_form(psi).is_some() && is_exp(f1) && is_exp(f2);
        let tol = ctx.tolerances.inequality;
        let with_gm = base_is_logconcave(f2) && fb.is_logconcave();
        let gm = if with_gm { Some(search(ctx, h, f1, f2, &prep, true, None)?) } else { None };
        let asv = search(ctx, h, f1, f2, &prep, false, None)?;
        let mut sides = vec![("as", asv.value)];
        if let Some(g) = &gm {
            sides.push(("gm", g.value));
        }
        let mut out = Vec::new();
        if h.in_phi() {
            let rhs = closed_form_orlicz_as(h, &fb, 1.0, 1.0, 1.0 / c_hat, n)?;
            let rel = if equality { Relation::Eq } else { Relation::Le };
            for (tag, v) in &sides {
                out.push(VerdictReport::new(format!("{base}/{tag}/c_hat"), prov, *v, rel, rhs, tol));
            }
        }
        let decreasing = matches!(h.monotonicity(), Monotonicity::Decreasing | Monotonicity::Constant);
        if (h.in_phi() && decreasing) || h.in_psi() {
            let rhs = closed_form_orlicz_as(h, &fb, 1.0, 1.0, c_bar, n)?;
            let rel = if equality {
                Relation::Eq
            } else if h.in_phi() {
                Relation::Le
            } else {
                Relation::Ge
            };
            for (tag, v) in &sides {
                out.push(VerdictReport::new(format!("{base}/{tag}/c_bar"), prov, *v, rel, rhs, tol));
            }
        }
        Ok(out)
    };
    collect(&base, prov, run())
}

/// The condition of the cyclic inequality that `(h, h1)` satisfies under
/// `tag`, or an error naming what failed.
pub(super) fn cyclic_relation(tag: char, h: &OrliczFunction, h1: &OrliczFunction) -> Result<Relation> {
    if tag == '=' {
        return Ok(Relation::Eq);
    }
    let (mono, curv) = composed_shape(h, h1)?;
    let inc = mono == Monotonicity::Increasing;
    let dec = mono == Monotonicity::Decreasing;
    let same = (h.in_phi() && h1.in_phi()) || (h.in_psi() && h1.in_psi());
    let mixed = (h.in_phi() && h1.in_psi()) || (h.in_psi() && h1.in_phi());
    let (ok, rel) = match tag {
        'a' => (h.in_phi() && h1.in_psi() && inc, Relation::Le),
        'b' => (h.in_phi() && h1.in_phi() && dec, Relation::Le),
        'c' => (same && inc && curv < 0.0, Relation::Le),
        'd' => (h.in_psi() && h1.in_phi() && inc, Relation::Ge),
        'e' => (mixed && dec && curv > 0.0, Relation::Ge),
        'f' => (same && inc && curv > 0.0, Relation::Ge),
        _ => return Err(Error::Invalid(format!("unknown cyclic condition `{tag}`"))),
    };
    if !ok {
        return Err(Error::Class(format!("({}, {}) does not satisfy condition {tag} (H is {mono:?}, curvature {curv})", h.label(), h1.label())));
    }
    Ok(rel)
}

/// `as_h / I` against `H(as_{h1} / I)` with `H = h o h1^{-1}`, for the affine
/// and geominimal areas. The search whose direction can close the gap is
/// given the other search's optimum.
#[allow(clippy::too_many_arguments)]
pub fn check_cyclic(
    ctx: &CheckContext,
    tag: char,
    h: &OrliczFunction,
    h1: &OrliczFunction,
    f1: &WeightFunction,
    f2: &WeightFunction,
    psi: &FunctionRep,
    label: &str,
) -> Vec<VerdictReport> {
    let n = psi.dim();
    let base = id("cyclic", n, &format!("{tag}/{label}"));
    let prov = "cyclic inequality for H = h o h1^-1";
    let run = || -> Result<Vec<VerdictReport>> {
        let rel = cyclic_relation(tag, h, h1)?;
        let prep = ctx.prepare(psi)?;
        let i = prep.primal_integral(f1);
        let big_h = composed_with_inverse(h, h1);
        let helps_h = matches!((h.direction(), rel), (Direction::Minimize, Relation::Le) | (Direction::Maximize, Relation::Ge));
        let mut out = Vec::new();
        for geominimal in [false, true] {
            if geominimal && !base_is_logconcave(f2) {
                continue;
            }
            let (a, b) = if helps_h || rel == Relation::Eq {
                let b = search(ctx, h1, f1, f2, &prep, geominimal, None)?;
                (search(ctx, h, f1, f2, &prep, geominimal, Some(&b))?, b)
            } else {
                let a = search(ctx, h, f1, f2, &prep, geominimal, None)?;
                let b = search(ctx, h1, f1, f2, &prep, geominimal, Some(&a))?;
                (a, b)
            };
            let which = if geominimal { "gm" } else { "as" };
            let lhs = a.value / i;
            let rhs = big_h(b.value / i)?;
            out.push(
                VerdictReport::new(format!("{base}/{which}"), prov, lhs, rel, rhs, ctx.tolerances.inequality)
                    .with_note(format!("h = {}, h1 = {}", h.label(), h1.label())),
            );
        }
        Ok(out)
    };
    collect(&base, prov, run())
}

/// `G_p(psi) G_p(psi*) <= [G_p(|x|^2/2)]^2 = I(F̆, 1)^2` for `p > 0` after
/// centring; for `p < 0` the ratio to that value is reported.
pub fn check_santalo_product(
    ctx: &CheckContext,
    p: f64,
    f1: &WeightFunction,
    f2: &WeightFunction,
    psi: &FunctionRep,
    label: &str,
) -> VerdictReport {
    let n = psi.dim();
    let check_id = id("santalo", n, &format!("gp/{label}/p{p}"));
    let prov = "Santalo-type inequality for G_p";
    let run = || -> Result<VerdictReport> {
        let c = centred(ctx, psi, f2)?;
        let prep = ctx.prepare(&c)?;
        let conj = prep.conjugate()?;
        let g = gp_on(p, f1, f2, &prep, &ctx.family)?.value;
        let g_dual = gp_on(p, f2, f1, &conj, &ctx.family)?.value;
        let (_, ib) = envelope(f1, f2, n)?;
        let lhs = g * g_dual;
        let rhs = ib * ib;
        if p < 0.0 {
            return Ok(VerdictReport::new(check_id.clone(), prov, lhs / rhs, Relation::Report, 1.0, 0.0)
                .with_note("ratio to [G_p(gamma_n)]^2; no constructive bound"));
        }
        let equality = quadratic_form(psi).is_some() && is_exp(f1) && is_exp(f2);
        Ok(if equality {
            VerdictReport::new(check_id.clone(), prov, lhs, Relation::Eq, rhs, ctx.tolerances.santalo_product)
        } else {
            VerdictReport::new(check_id.clone(), prov, lhs, Relation::Le, rhs, ctx.tolerances.inequality)
        })
    };
    run().unwrap_or_else(|e| VerdictReport::error(check_id.clone(), prov, &e))
}

/// `as_h(f) as_h(f°) <= [as_h(gamma_n)]^2` and the geominimal analogue for a
/// submultiplicative `h` in Phi (`h = t^{-1/2}`).
pub fn check_orlicz_santalo(ctx: &CheckContext, psi: &FunctionRep, label: &str) -> Vec<VerdictReport> {
    let n = psi.dim();
    let base = id("santalo", n, &format!("orlicz/{label}"));
    let prov = "Santalo-type inequality for submultiplicative h";
    let run = || -> Result<Vec<VerdictReport>> {
        let exp = WeightFunction::ExpNeg;
        let h = OrliczFunction::power(-0.5)?;
        if !(h.in_phi() && h.is_submultiplicative()) {
            return Err(Error::Class(format!("{} is not a submultiplicative member of Phi", h.label())));
        }
        let c = centred(ctx, psi, &exp)?;
        let prep = ctx.prepare(&c)?;
        let conj = prep.conjugate()?;
        let reference = closed_form_orlicz_as(&h, &exp, 1.0, 1.0, 1.0, n)?;
        let equality = quadratic_form(psi).is_some();
        let rel = if equality { Relation::Eq } else { Relation::Le };
        let mut out = Vec::new();
        for geominimal in [false, true] {
            let a = search(ctx, &h, &exp, &exp, &prep, geominimal, None)?.value;
            let b = search(ctx, &h, &exp, &exp, &conj, geominimal, None)?.value;
            let which = if geominimal { "gm" } else { "as" };
            out.push(VerdictReport::new(format!("{base}/{which}"), prov, a * b, rel, reference * reference, ctx.tolerances.santalo_product));
        }
        Ok(out)
    };
    collect(&base, prov, run())
}
