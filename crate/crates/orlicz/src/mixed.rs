//! Mixed quantities of several convex potentials on a shared grid.
//!
//! Each potential keeps its own regular set and Legendre view, so test
//! functions are normalised against the full dual of their own potential.
//! The mixed integrand lives on the intersection of the regular sets.

use std::collections::HashMap;

use crate::affine::{gaussian_mass, resolve_grid, Prepared};
use crate::error::{Error, Result};
use crate::family::{optimize, Candidate, CandidateFamily, VariationalResult};
use crate::funcrep::{FunctionRep, Grid, RegularSet};
use crate::hfunc::{Direction, OrliczFunction};
use crate::quadrature::{halving_estimate, pairwise_sum, truncated_sum, IntegralResult, WeightFunction};
use crate::transforms::default_count;

/// `m` potentials with their own `h`, `F1`, `F2`, prepared on one grid.
#[derive(Clone, Debug)]
pub struct MixedSpec {
    pub psis: Vec<FunctionRep>,
    pub hs: Vec<OrliczFunction>,
    pub f1s: Vec<WeightFunction>,
    pub f2s: Vec<WeightFunction>,
    pub grid: Grid,
    preps: Vec<Prepared>,
    /// Grid points regular for every potential, as a subset of the first
    /// regular set.
    common: RegularSet,
    /// `local[k][j]`: index of common point `j` in the regular set of `psi_k`.
    local: Vec<Vec<usize>>,
    direction: Direction,
}

impl MixedSpec {
    /// Without a grid, uses the smallest box holding every suggested box at
    /// the default resolution.
    pub fn new(
        psis: Vec<FunctionRep>,
        hs: Vec<OrliczFunction>,
        f1s: Vec<WeightFunction>,
        f2s: Vec<WeightFunction>,
        grid: Option<&Grid>,
    ) -> Result<Self> {
        let m = psis.len();
        if m == 0 {
            return Err(Error::Invalid("a mixed quantity needs at least one potential".into()));
        }
        if hs.len() != m || f1s.len() != m || f2s.len() != m {
            return Err(Error::Invalid(format!(
                "got {m} potentials, {} h, {} F1 and {} F2",
                hs.len(),
                f1s.len(),
                f2s.len()
            )));
        }
        let n = psis[0].dim();
        if let Some(p) = psis.iter().find(|p| p.dim() != n) {
            return Err(Error::Invalid(format!("dimensions differ: {n} and {}", p.dim())));
        }
        let direction = if hs.iter().all(|h| h.in_phi()) {
            Direction::Minimize
        } else if hs.iter().all(|h| h.in_psi()) {
            Direction::Maximize
        } else {
            let labels: Vec<String> = hs.iter().map(|h| h.label()).collect();
            return Err(Error::Invalid(format!("h functions must all be in Phi or all in Psi: {labels:?}")));
        };
        let grid = match grid {
            Some(g) => g.clone(),
            None if m == 1 => resolve_grid(&psis[0], None)?,
            None => union_grid(&psis, default_count(psis[0].dim()))?,
        };
        let preps = psis.iter().map(|p| Prepared::new(p, Some(&grid))).collect::<Result<Vec<_>>>()?;
        let (common, local) = intersect(&preps)?;
        Ok(MixedSpec { psis, hs, f1s, f2s, grid, preps, common, local, direction })
    }

    /// One potential repeated `m` times.
    pub fn repeated(m: usize, psi: &FunctionRep, h: &OrliczFunction, f1: &WeightFunction, f2: &WeightFunction, grid: Option<&Grid>) -> Result<Self> {
        Self::new(vec![psi.clone(); m], vec![h.clone(); m], vec![f1.clone(); m], vec![f2.clone(); m], grid)
    }

    pub fn m(&self) -> usize {
        self.psis.len()
    }

    pub fn dim(&self) -> usize {
        self.common.dim
    }

    /// Regular set and view of `psi_k` on the shared grid.
    pub fn prepared(&self, k: usize) -> &Prepared {
        &self.preps[k]
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Number of grid points in the common domain.
    pub fn common_len(&self) -> usize {
        self.common.len()
    }

    /// The same spec with potentials composed with `t`, on `grid`.
    pub fn compose_linear(&self, t: &nalgebra::DMatrix<f64>, grid: Option<&Grid>) -> Result<Self> {
        let psis = self.psis.iter().map(|p| p.compose_linear(t)).collect::<Result<Vec<_>>>()?;
        Self::new(psis, self.hs.clone(), self.f1s.clone(), self.f2s.clone(), grid)
    }

    /// The sub-problem of the listed components, in order (repeats allowed).
    pub fn select(&self, which: &[usize]) -> Result<Self> {
        if let Some(k) = which.iter().find(|&&k| k >= self.m()) {
            return Err(Error::Invalid(format!("component {k} out of range for m = {}", self.m())));
        }
        Self::new(
            which.iter().map(|&k| self.psis[k].clone()).collect(),
            which.iter().map(|&k| self.hs[k].clone()).collect(),
            which.iter().map(|&k| self.f1s[k].clone()).collect(),
            which.iter().map(|&k| self.f2s[k].clone()).collect(),
            Some(&self.grid),
        )
    }

    fn coarsened(&self) -> Result<Self> {
        Self::new(self.psis.clone(), self.hs.clone(), self.f1s.clone(), self.f2s.clone(), Some(&self.grid.coarsened()?))
    }

    /// `w ∏ F1_k(psi_k)^{e_k}` in log form per common point.
    fn ln_prefactor(&self, exps: &[f64]) -> Vec<f64> {
        (0..self.common.len())
            .map(|j| {
                let mut acc = self.common.weights[j].ln();
                for (k, &e) in exps.iter().enumerate() {
                    if e != 0.0 {
                        let rs = &self.preps[k].rs;
                        acc += e * self.f1s[k].ln_eval(rs.values[self.local[k][j]]);
                    }
                }
                acc
            })
            .collect()
    }

    /// Terms of the mixed integrand; `ln_arg(k, i)` is `ln(g_k / F2_k(psi_k*))`
    /// at point `i` of the regular set of `psi_k`.
    fn terms(&self, exps: &[f64], ln_pre: &[f64], ln_arg: &dyn Fn(usize, usize) -> f64) -> Vec<f64> {
        (0..self.common.len())
            .map(|j| {
                let mut acc = ln_pre[j];
                for (k, &e) in exps.iter().enumerate() {
                    if e != 0.0 {
                        acc += e * self.hs[k].eval(ln_arg(k, self.local[k][j]).exp()).ln();
                    }
                }
                acc.exp()
            })
            .collect()
    }
}

/// The smallest box holding every suggested box, at `count` nodes per axis.
pub fn union_grid(psis: &[FunctionRep], count: usize) -> Result<Grid> {
    let n = psis[0].dim();
    let (mut lo, mut hi) = (vec![f64::INFINITY; n], vec![f64::NEG_INFINITY; n]);
    for p in psis {
        let (a, b) = p.suggested_box();
        for d in 0..n {
            lo[d] = lo[d].min(a[d]);
            hi[d] = hi[d].max(b[d]);
        }
    }
    Grid::new(lo, hi, vec![count; n])
}

fn intersect(preps: &[Prepared]) -> Result<(RegularSet, Vec<Vec<usize>>)> {
    let maps: Vec<HashMap<usize, usize>> =
        preps.iter().map(|p| p.rs.indices.iter().enumerate().map(|(i, &g)| (g, i)).collect()).collect();
    let first = &preps[0].rs;
    let common = first.filtered(|i| maps.iter().all(|m| m.contains_key(&first.indices[i])));
    if common.is_empty() {
        return Err(Error::Degenerate("the regular sets have no common point".into()));
    }
    let local = maps.iter().map(|m| common.indices.iter().map(|g| m[g]).collect()).collect();
    Ok((common, local))
}

fn uniform(m: usize) -> Vec<f64> {
    vec![1.0 / m as f64; m]
}

fn ith_exponents(spec: &MixedSpec, i: usize) -> Result<Vec<f64>> {
    let n = spec.dim();
    if spec.m() != 2 {
        return Err(Error::Invalid(format!("the i-th quantities take two potentials, got {}", spec.m())));
    }
    if i > n {
        return Err(Error::Invalid(format!("i = {i} must lie in 0..={n}")));
    }
    Ok(vec![(n - i) as f64 / n as f64, i as f64 / n as f64])
}

fn weighted_v(spec: &MixedSpec, exps: &[f64], gs: &[&dyn Fn(&[f64]) -> f64]) -> Result<f64> {
    if gs.len() != spec.m() {
        return Err(Error::Invalid(format!("got {} test functions for m = {}", gs.len(), spec.m())));
    }
    let mut ln_g: Vec<Vec<f64>> = Vec::with_capacity(gs.len());
    for (k, g) in gs.iter().enumerate() {
        let p = &spec.preps[k];
        let mut t = Vec::with_capacity(p.rs.len());
        for i in 0..p.rs.len() {
            let y = p.rs.gradient(i);
            let v = g(y);
            if !(v > 0.0) {
                return Err(Error::Invalid(format!("test function {k} is {v} at {y:?}; h needs a positive argument")));
            }
            t.push(v.ln() - spec.f2s[k].ln_eval(p.view.values[i]));
        }
        ln_g.push(t);
    }
    let pre = spec.ln_prefactor(exps);
    let terms = spec.terms(exps, &pre, &|k, i| ln_g[k][i]);
    Ok(truncated_sum(&spec.common, &terms)?.value)
}

fn with_halving(spec: &MixedSpec, exps: &[f64], gs: &[&dyn Fn(&[f64]) -> f64]) -> Result<IntegralResult> {
    let fine = weighted_v(spec, exps, gs)?;
    let coarse = spec.coarsened().and_then(|c| weighted_v(&c, exps, gs));
    Ok(IntegralResult {
        value: fine,
        est_error: coarse.map(|c| halving_estimate(fine, c)).unwrap_or(f64::NAN),
        truncation_radius: spec.common.radius(),
        points_used: spec.common.len(),
        clipped_mass: 0.0,
    })
}

/// `∫ ∏_k [h_k(g_k(grad psi_k) / F2_k(psi_k*(grad psi_k))) F1_k(psi_k)]^{1/m} dx`
/// over the common regular set.
pub fn mixed_v(spec: &MixedSpec, gs: &[&dyn Fn(&[f64]) -> f64]) -> Result<IntegralResult> {
    with_halving(spec, &uniform(spec.m()), gs)
}

/// The two-potential integral with exponents `(n - i)/n` and `i/n`.
pub fn ith_mixed_v(spec: &MixedSpec, i: usize, gs: &[&dyn Fn(&[f64]) -> f64]) -> Result<IntegralResult> {
    with_halving(spec, &ith_exponents(spec, i)?, gs)
}

fn search(spec: &MixedSpec, exps: &[f64], family: &CandidateFamily) -> VariationalResult {
    let n = spec.dim();
    let ln_target = family.target.unwrap_or_else(|| gaussian_mass(n)).ln();
    let blocks: Vec<_> = spec.preps.iter().zip(&spec.f2s).map(|(p, f2)| p.block(f2)).collect();
    let pre = spec.ln_prefactor(exps);
    let objective = |tables: &[Vec<f64>]| {
        let shifts: Vec<f64> = spec.preps.iter().zip(tables).map(|(p, t)| ln_target - p.ln_dual_mass(t)).collect();
        let terms = spec.terms(exps, &pre, &|k, i| shifts[k] + tables[k][i] - blocks[k].ln_base[i]);
        pairwise_sum(&terms)
    };
    optimize(&blocks, spec.direction, family, &objective)
}

/// The mixed Orlicz affine surface area: inf (Phi) or sup (Psi) of
/// [`mixed_v`] over test functions each scaled to mass `(sqrt(2 pi))^n`
/// against its own dual, searched jointly.
pub fn mixed_orlicz_as(spec: &MixedSpec, family: &CandidateFamily) -> Result<VariationalResult> {
    Ok(search(spec, &uniform(spec.m()), family))
}

/// As [`mixed_orlicz_as`] over log-concave test functions.
pub fn mixed_orlicz_gm(spec: &MixedSpec, family: &CandidateFamily) -> Result<VariationalResult> {
    Ok(search(spec, &uniform(spec.m()), &family.clone().with_logconcave_only(true)))
}

pub fn ith_mixed_as(spec: &MixedSpec, i: usize, family: &CandidateFamily) -> Result<VariationalResult> {
    Ok(search(spec, &ith_exponents(spec, i)?, family))
}

pub fn ith_mixed_gm(spec: &MixedSpec, i: usize, family: &CandidateFamily) -> Result<VariationalResult> {
    Ok(search(spec, &ith_exponents(spec, i)?, &family.clone().with_logconcave_only(true)))
}

/// A joint candidate built from the best tables of single-potential
/// searches run on the same prepared data.
pub fn joint_candidate(singles: &[&VariationalResult], label: &str) -> Option<Candidate> {
    let mut tables = Vec::with_capacity(singles.len());
    for r in singles {
        tables.push(r.ln_tables.first()?.clone());
    }
    Some(Candidate { label: label.into(), ln_tables: tables, logconcave: singles.iter().all(|r| r.logconcave) })
}

/// The single-potential Orlicz affine (or geominimal) surface areas of every
/// component, on the shared grid.
pub fn component_values(spec: &MixedSpec, family: &CandidateFamily, geominimal: bool) -> Result<Vec<VariationalResult>> {
    (0..spec.m())
        .map(|k| {
            let p = &spec.preps[k];
            if geominimal {
                crate::affine::orlicz_gm_on(&spec.hs[k], &spec.f1s[k], &spec.f2s[k], p, family)
            } else {
                crate::affine::orlicz_as_on(&spec.hs[k], &spec.f1s[k], &spec.f2s[k], p, family)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::{mixed_integral_on, orlicz_as_on};
    use crate::family::FamilyKind;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn grid() -> Grid {
        Grid::cube(2, 5.0, 61).unwrap()
    }

    fn exp_w() -> WeightFunction {
        WeightFunction::ExpNeg
    }

    fn quad(a: f64, b: f64) -> FunctionRep {
        FunctionRep::quadratic(DMatrix::from_row_slice(2, 2, &[a, 0.0, 0.0, b]), 0.0).unwrap()
    }

    #[test]
    fn one_component_is_the_mixed_integral() {
        let psi = quad(0.5, 1.0);
        let h = OrliczFunction::power(-0.5).unwrap();
        let spec = MixedSpec::repeated(1, &psi, &h, &exp_w(), &exp_w(), Some(&grid())).unwrap();
        let g = |y: &[f64]| (-0.3 * (y[0] * y[0] + y[1] * y[1])).exp();
        let mixed = mixed_v(&spec, &[&g]).unwrap().value;
        let single = mixed_integral_on(&h, &exp_w(), &exp_w(), spec.prepared(0), &g).unwrap().value;
        assert_relative_eq!(mixed, single, max_relative = 1e-10);
    }

    #[test]
    fn equal_components_reduce_to_the_single_integral() {
        let psi = quad(0.5, 1.0);
        let h = OrliczFunction::power(2.0).unwrap();
        let spec = MixedSpec::repeated(3, &psi, &h, &exp_w(), &exp_w(), Some(&grid())).unwrap();
        let g = |y: &[f64]| (-0.4 * y[0] * y[0] - 0.2 * y[1] * y[1]).exp();
        let mixed = mixed_v(&spec, &[&g, &g, &g]).unwrap().value;
        let single = mixed_integral_on(&h, &exp_w(), &exp_w(), spec.prepared(0), &g).unwrap().value;
        assert_relative_eq!(mixed, single, max_relative = 1e-10);
    }

    #[test]
    fn mixed_classes_are_rejected() {
        let psi = quad(0.5, 0.5);
        let r = MixedSpec::new(
            vec![psi.clone(), psi],
            vec![OrliczFunction::power(2.0).unwrap(), OrliczFunction::power(0.5).unwrap()],
            vec![exp_w(); 2],
            vec![exp_w(); 2],
            Some(&grid()),
        );
        assert!(r.is_err());
    }

    #[test]
    fn ith_extremes_ignore_the_other_component() {
        let h = OrliczFunction::power(-0.5).unwrap();
        let a = quad(0.5, 1.0);
        let b = quad(1.0, 0.25);
        let spec = MixedSpec::new(vec![a, b], vec![h.clone(); 2], vec![exp_w(); 2], vec![exp_w(); 2], Some(&grid())).unwrap();
        let g1 = |y: &[f64]| (-0.5 * (y[0] * y[0] + y[1] * y[1])).exp();
        let g2 = |y: &[f64]| (-0.1 * y[0] * y[0] - 0.7 * y[1] * y[1]).exp();
        let g3 = |y: &[f64]| (-y[0] * y[0]).exp() + 0.1;
        let at0 = ith_mixed_v(&spec, 0, &[&g1, &g2]).unwrap().value;
        let at0_other = ith_mixed_v(&spec, 0, &[&g1, &g3]).unwrap().value;
        assert_relative_eq!(at0, at0_other, max_relative = 1e-12);
        let at2 = ith_mixed_v(&spec, 2, &[&g1, &g2]).unwrap().value;
        let at2_other = ith_mixed_v(&spec, 2, &[&g3, &g2]).unwrap().value;
        assert_relative_eq!(at2, at2_other, max_relative = 1e-12);
        assert!(ith_mixed_v(&spec, 3, &[&g1, &g2]).is_err());
    }

    #[test]
    fn joint_search_matches_the_single_search_for_equal_inputs() {
        let psi = quad(0.5, 1.0);
        let h = OrliczFunction::power(-0.5).unwrap();
        let spec = MixedSpec::repeated(2, &psi, &h, &exp_w(), &exp_w(), Some(&grid())).unwrap();
        let fam = CandidateFamily::only(&[FamilyKind::BaseScaled]);
        let single = orlicz_as_on(&h, &exp_w(), &exp_w(), spec.prepared(0), &fam).unwrap();
        let mixed = mixed_orlicz_as(&spec, &fam).unwrap();
        assert_relative_eq!(mixed.value, single.value, max_relative = 1e-10);
    }
}
