//! Checks for mixed Orlicz areas of several potentials.

use nalgebra::DMatrix;

use super::{centred, collect, perturbed_roster, CheckContext, Relation, VerdictReport};
use crate::affine::{closed_form_orlicz_as, gaussian_mass};
use crate::error::Result;
use crate::family::{Candidate, VariationalResult};
use crate::funcrep::FunctionRep;
use crate::hfunc::{Monotonicity, OrliczFunction};
use crate::mixed::{component_values, ith_mixed_as, joint_candidate, mixed_orlicz_as, mixed_orlicz_gm, union_grid, MixedSpec};
use crate::quadrature::WeightFunction;

fn id(n: usize, rest: &str) -> String {
    format!("mixed/n{n}/{rest}")
}

fn quad(n: usize, diag: &[f64]) -> Result<FunctionRep> {
    FunctionRep::quadratic(DMatrix::from_fn(n, n, |i, j| if i == j { diag[i % diag.len()] } else { 0.0 }), 0.0)
}

/// Two or three distinct potentials: the standard Gaussian, an anisotropic
/// quadratic and (for three) a seeded perturbation.
fn potentials(n: usize, m: usize, seed: u64) -> Result<Vec<FunctionRep>> {
    let mut out = vec![FunctionRep::gaussian(n, 1.0)?, quad(n, &[0.8, 1.6])?];
    if m > 2 {
        out.extend(perturbed_roster(n, 1, 0.6, seed)?);
    }
    out.truncate(m);
    Ok(out)
}

fn spec(ctx: &CheckContext, psis: Vec<FunctionRep>, hs: Vec<OrliczFunction>) -> Result<MixedSpec> {
    let m = psis.len();
    let exp = WeightFunction::ExpNeg;
    let grid = union_grid(&psis, ctx.grids.count(psis[0].dim()))?;
    MixedSpec::new(psis, hs, vec![exp.clone(); m], vec![exp; m], Some(&grid))
}

fn with(ctx: &CheckContext, c: Option<Candidate>) -> crate::family::CandidateFamily {
    match c {
        Some(c) => ctx.family.clone().with_candidate(c),
        None => ctx.family.clone(),
    }
}

/// Equal components give the single area; `i = 0` and `i = n` give the
/// single area of the first and second potential.
pub fn check_mixed_reductions(ctx: &CheckContext, n: usize) -> Vec<VerdictReport> {
    let prov = "reductions of mixed Orlicz areas";
    let run = || -> Result<Vec<VerdictReport>> {
        let tol = ctx.tolerances.equality;
        let h = OrliczFunction::power(-0.5)?;
        let psis = potentials(n, 2, 0)?;
        let mut out = Vec::new();

        let same = spec(ctx, vec![psis[1].clone(); 2], vec![h.clone(); 2])?;
        let single = &component_values(&same, &ctx.family, false)?[0];
        let mixed = mixed_orlicz_as(&same, &with(ctx, joint_candidate(&[single, single], "singles")))?;
        out.push(VerdictReport::new(id(n, "reduce/equal"), prov, mixed.value, Relation::Eq, single.value, tol));

        let two = spec(ctx, psis, vec![h.clone(), OrliczFunction::power(-1.0)?])?;
        let singles = component_values(&two, &ctx.family, false)?;
        let fam = with(ctx, joint_candidate(&[&singles[0], &singles[1]], "singles"));
        for (i, k) in [(0, 0), (n, 1)] {
            let v = ith_mixed_as(&two, i, &fam)?.value;
            out.push(VerdictReport::new(id(n, &format!("reduce/i{i}")), prov, v, Relation::Eq, singles[k].value, tol));
        }
        Ok(out)
    };
    collect(&id(n, "reduce"), prov, run())
}

fn product(values: &[&VariationalResult]) -> f64 {
    values.iter().map(|r| r.value).product()
}

/// `[mixed]^m <= prod singles` for `h` all in Phi or all in Psi, both areas,
/// and the partial products for Psi with `m = 3`, `r = 2`.
pub fn check_af(ctx: &CheckContext, n: usize, seed: u64) -> Vec<VerdictReport> {
    let prov = "Alexander-Fenchel type inequality for mixed Orlicz areas";
    let run = || -> Result<Vec<VerdictReport>> {
        let pow = OrliczFunction::power;
        let tol = ctx.tolerances.inequality;
        let cases: Vec<(&str, Vec<OrliczFunction>)> = vec![
            ("phi", vec![pow(-0.5)?, pow(2.0)?]),
            ("psi", vec![pow(0.5)?, pow(0.25)?]),
            ("phi", vec![pow(-0.5)?, pow(2.0)?, pow(-1.0)?]),
            ("psi", vec![pow(0.5)?, pow(0.25)?, pow(0.5)?]),
        ];
        let mut out = Vec::new();
        for (class, hs) in cases {
            let m = hs.len();
            let sp = spec(ctx, potentials(n, m, seed)?, hs)?;
            for geominimal in [false, true] {
                if geominimal && m > 2 {
                    continue;
                }
                let which = if geominimal { "gm" } else { "as" };
                let search = |fam: &crate::family::CandidateFamily| if geominimal { mixed_orlicz_gm(&sp, fam) } else { mixed_orlicz_as(&sp, fam) };
                let (mixed, singles) = if class == "phi" {
                    let singles = component_values(&sp, &ctx.family, geominimal)?;
                    let refs: Vec<&VariationalResult> = singles.iter().collect();
                    (search(&with(ctx, joint_candidate(&refs, "singles")))?, singles)
                } else {
                    let mixed = search(&ctx.family)?;
                    let singles = (0..m)
                        .map(|k| {
                            let c = Candidate { label: "mixed".into(), ln_tables: vec![mixed.ln_tables[k].clone()], logconcave: mixed.logconcave };
                            let p = sp.prepared(k);
                            let fam = ctx.family.clone().with_candidate(c);
                            if geominimal {
                                crate::affine::orlicz_gm_on(&sp.hs[k], &sp.f1s[k], &sp.f2s[k], p, &fam)
                            } else {
                                crate::affine::orlicz_as_on(&sp.hs[k], &sp.f1s[k], &sp.f2s[k], p, &fam)
                            }
                        })
                        .collect::<Result<Vec<_>>>()?;
                    (mixed, singles)
                };
                let refs: Vec<&VariationalResult> = singles.iter().collect();
                out.push(VerdictReport::new(
                    id(n, &format!("af/{class}/m{m}/{which}")),
                    prov,
                    mixed.value.powi(m as i32),
                    Relation::Le,
                    product(&refs),
                    tol,
                ));
                if class == "psi" && m == 3 && !geominimal {
                    // [mixed]^2 <= prod_{k=2,3} mixed(psi_1, psi_k, psi_k)
                    let mut rhs = 1.0;
                    for k in 1..m {
                        let part = sp.select(&[0, k, k])?;
                        let c = Candidate {
                            label: "mixed".into(),
                            ln_tables: vec![mixed.ln_tables[0].clone(), mixed.ln_tables[k].clone(), mixed.ln_tables[k].clone()],
                            logconcave: mixed.logconcave,
                        };
                        rhs *= mixed_orlicz_as(&part, &ctx.family.clone().with_candidate(c))?.value;
                    }
                    out.push(VerdictReport::new(id(n, "af/psi/m3/r2"), prov, mixed.value.powi(2), Relation::Le, rhs, tol));
                }
            }
        }
        Ok(out)
    };
    collect(&id(n, "af"), prov, run())
}

/// `[mixed]^m` against the product of Gaussian references at `ĉ_i` (any `h`
/// in Phi) and at `c̄_i` (decreasing `h`), after centring every potential.
pub fn check_mixed_isoperimetric(ctx: &CheckContext, n: usize) -> Vec<VerdictReport> {
    let prov = "mixed Orlicz isoperimetric inequality";
    let run = || -> Result<Vec<VerdictReport>> {
        let exp = WeightFunction::ExpNeg;
        let nn = n as f64;
        let ib = gaussian_mass(n);
        let tol = ctx.tolerances.inequality;
        let mut out = Vec::new();
        let pow = OrliczFunction::power;
        for (label, hs) in [("mixed_h", vec![pow(-0.5)?, pow(2.0)?]), ("decreasing", vec![pow(-0.5)?, pow(-1.0)?])] {
            let psis = potentials(n, 2, 0)?.iter().map(|p| centred(ctx, p, &exp)).collect::<Result<Vec<_>>>()?;
            let sp = spec(ctx, psis, hs.clone())?;
            let singles = component_values(&sp, &ctx.family, false)?;
            let refs: Vec<&VariationalResult> = singles.iter().collect();
            let mixed = mixed_orlicz_as(&sp, &with(ctx, joint_candidate(&refs, "singles")))?.value;
            let lhs = mixed.powi(2);
            let mut hat = 1.0;
            let mut bar = 1.0;
            for (k, h) in hs.iter().enumerate() {
                let prep = sp.prepared(k);
                let c_hat = (ib / prep.dual_integral(&exp)).powf(1.0 / nn);
                let c_bar = (ib / prep.primal_integral(&exp)).powf(1.0 / nn);
                hat *= closed_form_orlicz_as(h, &exp, 1.0, 1.0, 1.0 / c_hat, n)?;
                bar *= closed_form_orlicz_as(h, &exp, 1.0, 1.0, c_bar, n)?;
            }
            out.push(VerdictReport::new(id(n, &format!("isoperimetric/{label}/c_hat")), prov, lhs, Relation::Le, hat, tol));
            if hs.iter().all(|h| h.monotonicity() == Monotonicity::Decreasing) {
                out.push(VerdictReport::new(id(n, &format!("isoperimetric/{label}/c_bar")), prov, lhs, Relation::Le, bar, tol));
            }
        }
        Ok(out)
    };
    collect(&id(n, "isoperimetric"), prov, run())
}

/// `[as_j]^{k-i} <= [as_i]^{k-j} [as_k]^{j-i}` for `h` in Psi with
/// `(i, j, k) = (0, 1, 2)`.
pub fn check_interpolation(ctx: &CheckContext, n: usize) -> Vec<VerdictReport> {
    let prov = "interpolation of i-th mixed Orlicz areas";
    let run = || -> Result<Vec<VerdictReport>> {
        let (i, j, k) = (0usize, 1usize, 2usize.min(n));
        let sp = spec(ctx, potentials(n, 2, 0)?, vec![OrliczFunction::power(0.5)?, OrliczFunction::power(0.25)?])?;
        let mid = ith_mixed_as(&sp, j, &ctx.family)?;
        let fam = ctx.family.clone().with_candidate(mid.as_candidate("middle"));
        let lo = ith_mixed_as(&sp, i, &fam)?;
        let hi = ith_mixed_as(&sp, k, &fam)?;
        let lhs = mid.value.powi((k - i) as i32);
        let rhs = lo.value.powi((k - j) as i32) * hi.value.powi((j - i) as i32);
        Ok(vec![VerdictReport::new(id(n, &format!("interpolation/{i}{j}{k}")), prov, lhs, Relation::Le, rhs, ctx.tolerances.inequality)])
    };
    collect(&id(n, "interpolation"), prov, run())
}
