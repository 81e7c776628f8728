//! Batch verification. Every check computes two sides of an identity or
//! inequality and turns their margin into a [`VerdictReport`].
//!
//! Where a side comes from a variational search, the check injects the
//! winning table of the other side's search into the search whose
//! direction can close the inequality. Each asserted direction then holds
//! for the computed values themselves, not just for the exact optima.

mod logconcave;
mod mixed;
mod sconcave;

pub use logconcave::{
    check_bs, check_closed_forms, check_cyclic, check_gp_bounds, check_homogeneity, check_invariance, check_isoperimetric,
    check_legendre, check_orlicz_santalo, check_prop_bounds, check_santalo_product, check_scaling, check_variational,
    InvariantQuantity,
};
pub use mixed::{check_af, check_interpolation, check_mixed_isoperimetric, check_mixed_reductions};
pub use sconcave::{check_sconcave_duality, check_sconcave_suite, SRoster};

use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::affine::Prepared;
use crate::config::{parse_function, parse_h, GridConfig, TestSuiteConfig, Tolerances};
use crate::error::{Error, Result};
use crate::family::{CandidateFamily, VariationalResult};
use crate::funcrep::{FunctionRep, Grid, Ridge};
use crate::hfunc::OrliczFunction;
use crate::quadrature::WeightFunction;
use crate::transforms::santalo_center;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
    /// Computed and reported without a bound.
    #[serde(rename = "report")]
    Report,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
            Relation::Report => "~",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Flagged,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerdictReport {
    pub check_id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub relation: Relation,
    pub tolerance: f64,
    /// Relative margin in the asserted direction; negative means violated.
    pub slack: f64,
    /// Extra margin granted for optimizer slack; a violation inside it is
    /// flagged instead of failed.
    #[serde(skip_serializing_if = "is_zero")]
    pub allowance: f64,
    pub status: Status,
    pub provenance: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime: Option<f64>,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

/// Signed relative margin of `lhs relation rhs`.
pub fn slack(relation: Relation, lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs());
    let scale = if scale > 0.0 { scale } else { 1.0 };
    match relation {
        Relation::Le => (rhs - lhs) / scale,
        Relation::Ge => (lhs - rhs) / scale,
        Relation::Eq => -(lhs - rhs).abs() / scale,
        Relation::Report => (lhs - rhs) / scale,
    }
}

pub fn judge(relation: Relation, slack: f64, tolerance: f64, allowance: f64) -> Status {
    if relation == Relation::Report {
        return Status::Pass;
    }
    if !slack.is_finite() {
        Status::Fail
    } else if slack >= -tolerance {
        Status::Pass
    } else if allowance > 0.0 && slack >= -(tolerance + allowance) {
        Status::Flagged
    } else {
        Status::Fail
    }
}

impl VerdictReport {
    pub fn new(check_id: impl Into<String>, provenance: &str, lhs: f64, relation: Relation, rhs: f64, tolerance: f64) -> Self {
        let s = slack(relation, lhs, rhs);
        VerdictReport {
            check_id: check_id.into(),
            lhs,
            rhs,
            relation,
            tolerance,
            slack: s,
            allowance: 0.0,
            status: judge(relation, s, tolerance, 0.0),
            provenance: provenance.to_string(),
            note: None,
            runtime: None,
        }
    }

    /// A check that could not be computed.
    pub fn error(check_id: impl Into<String>, provenance: &str, err: &Error) -> Self {
        VerdictReport {
            check_id: check_id.into(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            relation: Relation::Report,
            tolerance: 0.0,
            slack: f64::NAN,
            allowance: 0.0,
            status: Status::Fail,
            provenance: provenance.to_string(),
            note: Some(err.to_string()),
            runtime: None,
        }
    }

    pub fn with_allowance(mut self, allowance: f64) -> Self {
        self.allowance = if allowance.is_finite() { allowance.max(0.0) } else { 0.0 };
        self.status = judge(self.relation, self.slack, self.tolerance, self.allowance);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Largest finite `|bound_gap|` among search results: how far a search is
/// known to sit from its reference.
pub fn search_allowance(results: &[&VariationalResult]) -> f64 {
    results.iter().map(|r| r.bound_gap.abs()).filter(|g| g.is_finite()).fold(0.0, f64::max)
}

/// Collects the reports of one check, turning an error into a failed report.
pub(crate) fn collect(id: &str, provenance: &str, out: Result<Vec<VerdictReport>>) -> Vec<VerdictReport> {
    out.unwrap_or_else(|e| vec![VerdictReport::error(id, provenance, &e)])
}

/// Tolerances, grid sizes and the search family shared by all checks.
#[derive(Clone, Debug)]
pub struct CheckContext {
    pub tolerances: Tolerances,
    pub grids: GridConfig,
    pub family: CandidateFamily,
}

impl Default for CheckContext {
    fn default() -> Self {
        Self::from_config(&TestSuiteConfig::default())
    }
}

/// `exp(-psi)` on the grid edge relative to its peak must stay below this.
const EDGE_LEVEL: f64 = 1e-12;

impl CheckContext {
    pub fn from_config(cfg: &TestSuiteConfig) -> Self {
        CheckContext {
            tolerances: cfg.tolerances.clone(),
            grids: cfg.grid.clone(),
            family: CandidateFamily::all().with_iterations_per_param(cfg.iterations_per_param),
        }
    }

    pub fn grid(&self, psi: &FunctionRep) -> Result<Grid> {
        psi.suggested_grid(self.grids.count(psi.dim()))
    }

    /// Regular set on the suggested grid. When `exp(-psi)` is not negligible
    /// on the edge, the box is widened by half once before giving up.
    pub fn prepare(&self, psi: &FunctionRep) -> Result<Prepared> {
        let grid = self.grid(psi)?;
        if edge_ratio(psi, &grid)? <= EDGE_LEVEL {
            return Prepared::new(psi, Some(&grid));
        }
        let wide = widened(&grid, 1.5)?;
        let ratio = edge_ratio(psi, &wide)?;
        if ratio > EDGE_LEVEL {
            return Err(Error::Invalid(format!("grid coverage insufficient: edge mass ratio {ratio:.3e} after widening")));
        }
        Prepared::new(psi, Some(&wide))
    }
}

fn widened(grid: &Grid, factor: f64) -> Result<Grid> {
    let (lo, hi): (Vec<f64>, Vec<f64>) = grid
        .lower
        .iter()
        .zip(&grid.upper)
        .map(|(l, u)| {
            let mid = 0.5 * (l + u);
            let half = 0.5 * (u - l) * factor;
            (mid - half, mid + half)
        })
        .unzip();
    Grid::new(lo, hi, grid.counts.clone())
}

/// `max_edge exp(-psi) / max exp(-psi)` over grid nodes.
fn edge_ratio(psi: &FunctionRep, grid: &Grid) -> Result<f64> {
    let mut min_all = f64::INFINITY;
    let mut min_edge = f64::INFINITY;
    for i in 0..grid.len() {
        let v = psi.eval(&grid.node(i))?;
        min_all = min_all.min(v);
        let multi = grid.multi_index(i);
        if multi.iter().zip(&grid.counts).any(|(&k, &c)| k == 0 || k + 1 == c) {
            min_edge = min_edge.min(v);
        }
    }
    Ok((min_all - min_edge).exp())
}

/// Random matrix with determinant `±1`: rotations, a unit upper-triangular
/// shear and a diagonal whose entries multiply to `±1`.
pub fn random_unimodular(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let mut t = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            let mut g = DMatrix::<f64>::identity(n, n);
            g[(i, i)] = a.cos();
            g[(j, j)] = a.cos();
            g[(i, j)] = -a.sin();
            g[(j, i)] = a.sin();
            t *= g;
        }
    }
    let mut shear = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            shear[(i, j)] = rng.gen_range(-0.5..0.5);
        }
    }
    let mut diag = DMatrix::<f64>::identity(n, n);
    let mut prod = 1.0;
    for i in 0..n.saturating_sub(1) {
        let d = rng.gen_range(0.75..1.33);
        diag[(i, i)] = d;
        prod *= d;
    }
    let sign = if rng.gen_bool(0.5) { -1.0 } else { 1.0 };
    diag[(n - 1, n - 1)] = sign / prod;
    t * shear * diag
}

/// `count` seeded unimodular maps.
pub fn unimodular_samples(n: usize, count: usize, seed: u64) -> Vec<DMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_unimodular(n, &mut rng)).collect()
}

/// Quadratics `<A x, x>` with random spectrum plus two smooth convex ridges,
/// not yet centred.
pub fn perturbed_roster(n: usize, count: usize, amplitude: f64, seed: u64) -> Result<Vec<FunctionRep>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    (0..count)
        .map(|_| {
            let q = random_unimodular(n, &mut rng).qr().q();
            let eig = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| rng.gen_range(0.4..1.5)));
            let a = &q * eig * q.transpose();
            let a = (&a + a.transpose()) * 0.5;
            let ridges = (0..2)
                .map(|_| {
                    let mut d: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-3);
                    d.iter_mut().for_each(|v| *v /= norm);
                    Ridge { direction: d, offset: rng.gen_range(-1.0..1.0), amplitude: rng.gen_range(0.1..amplitude.max(0.11)) }
                })
                .collect();
            FunctionRep::ridged(FunctionRep::quadratic(a, 0.0)?, ridges)
        })
        .collect()
}

/// Translates `psi` to its Santaló point for `F2`.
pub fn centred(ctx: &CheckContext, psi: &FunctionRep, f2: &WeightFunction) -> Result<FunctionRep> {
    let grid = ctx.grid(psi)?;
    Ok(santalo_center(psi, f2, Some(&grid))?.1)
}

/// One line of the coverage header.
#[derive(Clone, Debug, Serialize)]
pub struct CoverageLine {
    pub group: String,
    pub covered: bool,
    pub description: String,
}

/// Check groups, in run order, with what each covers.
pub const GROUPS: &[(&str, &str)] = &[
    ("transforms", "Legendre and s-dual conjugates against closed forms, conjugate involution, dual-integral change of variables"),
    ("scaling", "scaling law I(F, c) = c^-n I(F, 1) of radial weight integrals"),
    ("closed_forms", "Gaussian closed forms of the Orlicz affine and geominimal surface areas and of G_p"),
    ("variational", "variational L_p affine surface area against the direct integral, with and without the optimal test function"),
    ("invariance", "invariance under determinant +-1 maps of the mixed integral, Orlicz areas, as_p and G_p; homogeneity of G_p"),
    ("bs", "functional Blaschke-Santalo product after centring, with equality for quadratics"),
    ("bounds", "volume-product bounds of the Orlicz areas and G_p; affine <= geominimal ordering; L_p isoperimetric ratios"),
    ("isoperimetric", "Orlicz affine isoperimetric comparisons with the Gaussian of matching volume"),
    ("cyclic", "cyclic inequalities for H = h o h1^-1 under conditions a to f"),
    ("santalo", "Santalo-type products of G_p (p > 0 bounded, p < 0 reported) and of submultiplicative Orlicz areas"),
    ("sconcave", "s-concave functions: ball volume, integral identity, s-duality, closed forms, bounds, cyclic, isoperimetric and Santalo products"),
    ("mixed", "mixed Orlicz areas: reductions, product bound and partial products, mixed isoperimetric bound, i-th interpolation"),
];

/// Items no check covers, with the reason.
pub const NOT_COVERED: &[(&str, &str)] = &[
    ("equality characterisations (only-if direction)", "needs a search over all functions; extremizers are checked forward only"),
    ("inverse Santalo lower bound for p < 0", "its constant is not constructive; the product ratio is reported without a bound"),
];

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub coverage: Vec<CoverageLine>,
    pub reports: Vec<VerdictReport>,
}

impl SuiteReport {
    pub fn count(&self, status: Status) -> usize {
        self.reports.iter().filter(|r| r.status == status).count()
    }

    /// True when no report failed; flagged reports do not count as failures.
    pub fn passed(&self) -> bool {
        self.count(Status::Fail) == 0
    }

    pub fn header(&self) -> String {
        let mut s = String::new();
        for c in &self.coverage {
            let tag = if c.covered { "covered" } else { "skipped (disabled by config)" };
            let _ = writeln!(s, "# {:<13} {tag}: {}", c.group, c.description);
        }
        for (item, reason) in NOT_COVERED {
            let _ = writeln!(s, "# skipped: {item}: {reason}");
        }
        s
    }

    pub fn table(&self) -> String {
        let mut s = self.header();
        let width = self.reports.iter().map(|r| r.check_id.len()).max().unwrap_or(8).max(8);
        let _ = writeln!(s, "{:<width$}  {:>14} {:^6} {:>14}  {:>10}  {:>9}  status", "check", "lhs", "rel", "rhs", "slack", "tol");
        for r in &self.reports {
            let _ = write!(
                s,
                "{:<width$}  {:>14.7e} {:^6} {:>14.7e}  {:>10.3e}  {:>9.2e}  {:?}",
                r.check_id,
                r.lhs,
                r.relation.symbol(),
                r.rhs,
                r.slack,
                r.tolerance,
                r.status
            );
            if let Some(t) = r.runtime {
                let _ = write!(s, "  {t:.3}s");
            }
            if let Some(n) = &r.note {
                let _ = write!(s, "  ({n})");
            }
            s.push('\n');
        }
        let _ = writeln!(
            s,
            "# {} checks: {} pass, {} fail, {} flagged",
            self.reports.len(),
            self.count(Status::Pass),
            self.count(Status::Fail),
            self.count(Status::Flagged)
        );
        s
    }

    /// One JSON object per report.
    pub fn json_lines(&self) -> String {
        let mut s = String::new();
        for r in &self.reports {
            s.push_str(&serde_json::to_string(r).expect("reports serialize"));
            s.push('\n');
        }
        s
    }
}

/// The parsed rosters of one dimension.
struct DimRoster {
    n: usize,
    functions: Vec<(String, FunctionRep)>,
    perturbed: Vec<(String, FunctionRep)>,
    hs: Vec<(String, OrliczFunction)>,
}

fn dim_roster(cfg: &TestSuiteConfig, n: usize) -> Result<DimRoster> {
    let mut functions = Vec::new();
    for spec in &cfg.roster.functions {
        let f = parse_function(spec, n)?;
        if f.dim() == n {
            functions.push((spec.clone(), f));
        }
    }
    let perturbed = perturbed_roster(n, cfg.roster.random_count, cfg.roster.perturbation, cfg.seed)?
        .into_iter()
        .enumerate()
        .map(|(i, f)| (format!("random{i:02}"), f))
        .collect();
    let hs = cfg.roster.hs.iter().map(|s| Ok((s.clone(), parse_h(s, n)?))).collect::<Result<Vec<_>>>()?;
    Ok(DimRoster { n, functions, perturbed, hs })
}

/// Runs every enabled group on every configured dimension. Reports are
/// sorted by `check_id`; `runtime` is only filled when `timings` is set, so
/// the report body is reproducible.
pub fn run_suite(cfg: &TestSuiteConfig, timings: bool) -> Result<SuiteReport> {
    cfg.validate()?;
    let ctx = CheckContext::from_config(cfg);
    let coverage = GROUPS
        .iter()
        .map(|(g, d)| CoverageLine { group: g.to_string(), covered: cfg.runs(g), description: d.to_string() })
        .collect();
    let mut reports = Vec::new();
    let mut run = |group: &str, job: &mut dyn FnMut() -> Vec<VerdictReport>| {
        if !cfg.runs(group) {
            return;
        }
        let start = Instant::now();
        let mut out = job();
        if timings {
            let t = start.elapsed().as_secs_f64();
            out.iter_mut().for_each(|r| r.runtime = Some(t));
        }
        reports.extend(out);
    };
    let exp = WeightFunction::ExpNeg;
    // Search-based checks use the first few perturbed functions only.
    let searched = cfg.roster.searched;
    for &n in &cfg.dims {
        let r = dim_roster(cfg, n)?;
        let psis: Vec<(String, FunctionRep)> =
            r.functions.iter().cloned().chain(r.perturbed.iter().take(searched).cloned()).collect();
        run("transforms", &mut || check_legendre(&ctx, r.n));
        run("scaling", &mut || check_scaling(&ctx, r.n));
        run("closed_forms", &mut || check_closed_forms(&ctx, r.n));
        run("variational", &mut || {
            psis.iter().flat_map(|(l, p)| check_variational(&ctx, p, l, &cfg.roster.ps)).collect()
        });
        run("invariance", &mut || {
            let mut out = Vec::new();
            for (l, p) in &psis {
                for q in InvariantQuantity::roster(n, &r.hs) {
                    out.extend(check_invariance(&ctx, &q, p, l, cfg.transforms.count, cfg.transforms.seed));
                }
                out.extend(check_homogeneity(&ctx, p, l, &cfg.roster.ps));
            }
            out
        });
        run("bs", &mut || {
            let mut out: Vec<VerdictReport> =
                r.functions.iter().chain(&r.perturbed).map(|(l, p)| check_bs(&ctx, p, l, &exp, &exp)).collect();
            // F2 = 2 e^{-(t + 1/2)} keeps F-breve bounded.
            if let Ok(f2) = WeightFunction::scaled_shifted(WeightFunction::ExpNeg, 0.5, 2.0) {
                out.extend(r.functions.iter().chain(r.perturbed.iter().take(searched)).map(|(l, p)| check_bs(&ctx, p, l, &exp, &f2)));
            }
            out
        });
        run("bounds", &mut || {
            let mut out = Vec::new();
            for (l, p) in &psis {
                for (hl, h) in &r.hs {
                    out.extend(check_prop_bounds(&ctx, h, hl, &exp, &exp, p, l));
                }
                out.extend(check_gp_bounds(&ctx, p, l, &cfg.roster.ps));
            }
            out
        });
        run("isoperimetric", &mut || {
            let mut out = Vec::new();
            for (l, p) in &psis {
                for (hl, h) in &r.hs {
                    out.extend(check_isoperimetric(&ctx, h, hl, &exp, &exp, p, l));
                }
            }
            out
        });
        run("cyclic", &mut || {
            let mut out = Vec::new();
            for (l, p) in &psis {
                out.extend(check_cyclic_roster(&ctx, n, p, l));
            }
            out
        });
        run("santalo", &mut || {
            let mut out = Vec::new();
            for (l, p) in &psis {
                for &pp in &cfg.roster.ps {
                    out.push(check_santalo_product(&ctx, pp, &exp, &exp, p, l));
                }
                out.extend(check_orlicz_santalo(&ctx, p, l));
            }
            out
        });
        run("sconcave", &mut || {
            let mut out = check_sconcave_duality(&ctx, n, &cfg.sconcave.s, &cfg.sconcave.c);
            match SRoster::from_config(cfg, n) {
                Ok(sr) => out.extend(check_sconcave_suite(&ctx, &sr)),
                Err(e) => out.push(VerdictReport::error(format!("sconcave/n{n}/roster"), "s-concave roster", &e)),
            }
            out
        });
        run("mixed", &mut || {
            let mut out = check_mixed_reductions(&ctx, n);
            out.extend(check_af(&ctx, n, cfg.seed));
            out.extend(check_mixed_isoperimetric(&ctx, n));
            if n >= 2 {
                out.extend(check_interpolation(&ctx, n));
            }
            out
        });
    }
    reports.sort_by(|a, b| a.check_id.cmp(&b.check_id));
    Ok(SuiteReport { coverage, reports })
}

/// One instantiation of each cyclic condition on `psi`.
fn check_cyclic_roster(ctx: &CheckContext, n: usize, psi: &FunctionRep, label: &str) -> Vec<VerdictReport> {
    let pow = |q: f64| OrliczFunction::power(q);
    let nn = n as f64;
    let cases: Vec<(char, Result<(OrliczFunction, OrliczFunction)>)> = vec![
        ('a', pow(2.0).and_then(|h| Ok((h, pow(0.5)?)))),
        ('b', pow(-1.0).and_then(|h| Ok((h, pow(2.0)?)))),
        ('c', pow(-1.0).and_then(|h| Ok((h, pow(-2.0)?)))),
        ('c', pow(0.25).and_then(|h| Ok((h, pow(0.5)?)))),
        ('d', pow(0.5).and_then(|h| Ok((h, pow(2.0)?)))),
        ('e', pow(-1.0).and_then(|h| Ok((h, pow(0.5)?)))),
        ('e', pow(0.5).and_then(|h| Ok((h, pow(-1.0)?)))),
        ('f', pow(-2.0 / nn).and_then(|h| Ok((h, pow(-1.0 / nn)?)))),
        ('f', pow(0.5).and_then(|h| Ok((h, pow(0.25)?)))),
        ('=', pow(-0.5).map(|h| (h.clone(), h))),
    ];
    let exp = WeightFunction::ExpNeg;
    let mut out = Vec::new();
    for (k, (tag, pair)) in cases.into_iter().enumerate() {
        match pair {
            Ok((h, h1)) => out.extend(check_cyclic(ctx, tag, &h, &h1, &exp, &exp, psi, &format!("{label}/{k}"))),
            Err(e) => out.push(VerdictReport::error(format!("cyclic/{tag}/{label}"), "cyclic inequalities", &e)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unimodular_samples_have_unit_determinant() {
        for n in 1..=3 {
            for t in unimodular_samples(n, 20, 5) {
                assert!((t.determinant().abs() - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(unimodular_samples(2, 3, 9), unimodular_samples(2, 3, 9));
    }

    #[test]
    fn status_follows_slack() {
        let r = VerdictReport::new("x", "p", 1.0, Relation::Le, 0.995, 0.01);
        assert_eq!(r.status, Status::Pass);
        let r = VerdictReport::new("x", "p", 1.0, Relation::Le, 0.9, 0.01);
        assert_eq!(r.status, Status::Fail);
        assert_eq!(r.clone().with_allowance(0.2).status, Status::Flagged);
        let r = VerdictReport::new("x", "p", 1.0, Relation::Ge, 0.9, 0.01);
        assert_eq!(r.status, Status::Pass);
        let r = VerdictReport::new("x", "p", 1.0, Relation::Eq, 1.02, 0.01);
        assert_eq!(r.status, Status::Fail);
        let r = VerdictReport::new("x", "p", f64::NAN, Relation::Le, 1.0, 0.01);
        assert_eq!(r.status, Status::Fail);
        let r = VerdictReport::new("x", "p", 5.0, Relation::Report, 1.0, 0.0);
        assert_eq!(r.status, Status::Pass);
    }

    #[test]
    fn empty_check_list_gives_an_empty_passing_report() {
        let cfg = TestSuiteConfig { checks: Some(Vec::new()), ..TestSuiteConfig::default() };
        let rep = run_suite(&cfg, false).unwrap();
        assert!(rep.reports.is_empty());
        assert!(rep.passed());
        assert!(rep.header().contains("disabled by config"));
    }

    #[test]
    fn prepare_widens_a_tight_box_once() {
        let ctx = CheckContext::default();
        let psi = FunctionRep::gaussian(1, 1.0).unwrap();
        let tight = Grid::cube(1, 3.0, 101).unwrap();
        assert!(edge_ratio(&psi, &tight).unwrap() > EDGE_LEVEL);
        assert!(ctx.prepare(&psi).is_ok());
    }
}
