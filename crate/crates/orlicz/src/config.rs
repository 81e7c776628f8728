//! Inline specs (`gaussian:c=1`, `quad:A=[[1,0],[0,2]],a=0`, ...) and the
//! TOML suite configuration.
//!
//! Function specs:
//!
//! | spec | potential |
//! |------|-----------|
//! | `gaussian:c=1[,n=2]` | `c^2 |x|^2 / 2` |
//! | `quad:A=[[1,0],[0,2]][,a=0]` | `<A x, x> + a` |
//! | `senv:s=0.5[,c=1][,n=2]` | s-envelope `(1 - sqrt(1 - s c^2 |x|^2)) / s` |
//! | `sampled:path=file.csv` | CSV written by the `legendre` subcommand or [`crate::funcrep::write_grid_csv`] |
//!
//! Weight specs: `exp`, `one`, `power:alpha=3`, `scaled:scale=2[,shift=0][,base=exp]`.
//!
//! Orlicz function specs: `power:p=1` (`t^{-p/n}`), `pow:q=2` (`t^q`),
//! `const:k=1`, `expdecay:a=1`, `log1p`.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcrep::{read_grid_csv, FunctionRep, Grid};
use crate::hfunc::OrliczFunction;
use crate::quadrature::WeightFunction;

/// `kind:key=value,...` split into the kind and its keys. Commas inside
/// brackets do not separate keys.
fn split_spec(spec: &str) -> Result<(String, BTreeMap<String, String>)> {
    let spec = spec.trim();
    let (kind, rest) = match spec.split_once(':') {
        Some((k, r)) => (k.trim().to_string(), r),
        None => (spec.to_string(), ""),
    };
    if kind.is_empty() {
        return Err(Error::config(spec, "missing kind before ':'"));
    }
    let mut keys = BTreeMap::new();
    let mut depth = 0i32;
    let mut start = 0;
    let bytes = rest.as_bytes();
    let mut parts = Vec::new();
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            b'[' => depth += 1,
            b']' => depth -= 1,
            b',' if depth == 0 => {
                parts.push(&rest[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(Error::config(spec, "unbalanced brackets"));
    }
    parts.push(&rest[start..]);
    for part in parts.into_iter().map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| Error::config(format!("{kind}:{part}"), "expected key=value"))?;
        if keys.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(Error::config(format!("{kind}:{}", k.trim()), "key given twice"));
        }
    }
    Ok((kind, keys))
}

/// `spec` with `key` set to `value`, added when absent. Used to sweep one
/// parameter of an inline spec.
pub fn set_spec_key(spec: &str, key: &str, value: &str) -> Result<String> {
    let (kind, mut keys) = split_spec(spec)?;
    keys.insert(key.to_string(), value.to_string());
    let body: Vec<String> = keys.iter().map(|(k, v)| format!("{k}={v}")).collect();
    Ok(format!("{kind}:{}", body.join(",")))
}

struct Keys {
    kind: String,
    map: BTreeMap<String, String>,
}

impl Keys {
    fn parse(spec: &str) -> Result<Self> {
        let (kind, map) = split_spec(spec)?;
        Ok(Keys { kind, map })
    }

    fn path(&self, key: &str) -> String {
        format!("{}:{key}", self.kind)
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn number(&mut self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.take(key) {
            Some(v) => v.parse::<f64>().map_err(|e| Error::config(self.path(key), format!("`{v}`: {e}"))),
            None => default.ok_or_else(|| Error::config(self.path(key), "required key is missing")),
        }
    }

    fn count(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.take(key) {
            Some(v) => v.parse::<usize>().map_err(|e| Error::config(self.path(key), format!("`{v}`: {e}"))),
            None => Ok(default),
        }
    }

    /// Fails on keys nobody consumed.
    fn finish(self) -> Result<()> {
        match self.map.keys().next() {
            Some(k) => Err(Error::config(format!("{}:{k}", self.kind), "unknown key")),
            None => Ok(()),
        }
    }
}

/// `[[1,0],[0,2]]`, `[2]` or `2` as a square matrix.
fn parse_matrix(key: &str, s: &str) -> Result<DMatrix<f64>> {
    let bad = |msg: &str| Error::config(key, format!("`{s}`: {msg}"));
    let t = s.trim();
    let rows: Vec<Vec<f64>> = if t.starts_with("[[") {
        let inner = t.strip_prefix('[').and_then(|x| x.strip_suffix(']')).ok_or_else(|| bad("expected [[..],..]"))?;
        inner
            .split("],")
            .map(|r| {
                r.trim()
                    .trim_start_matches('[')
                    .trim_end_matches(']')
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|e| bad(&e.to_string())))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?
    } else {
        let v = t.trim_start_matches('[').trim_end_matches(']').trim().parse::<f64>().map_err(|e| bad(&e.to_string()))?;
        vec![vec![v]]
    };
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(bad("matrix must be square"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// A potential from an inline spec; `dim` fills in a missing `n`.
pub fn parse_function(spec: &str, dim: usize) -> Result<FunctionRep> {
    let mut k = Keys::parse(spec)?;
    let f = match k.kind.as_str() {
        "gaussian" => {
            let c = k.number("c", Some(1.0))?;
            let n = k.count("n", dim)?;
            FunctionRep::gaussian(n, c)
        }
        "quad" => {
            let a = k.take("A").ok_or_else(|| Error::config(k.path("A"), "required key is missing"))?;
            let m = parse_matrix(&k.path("A"), &a)?;
            let offset = k.number("a", Some(0.0))?;
            FunctionRep::quadratic(m, offset)
        }
        "senv" => {
            let s = k.number("s", None)?;
            let c = k.number("c", Some(1.0))?;
            let n = k.count("n", dim)?;
            FunctionRep::s_envelope(n, s, c)
        }
        "sampled" => {
            let path = k.take("path").ok_or_else(|| Error::config(k.path("path"), "required key is missing"))?;
            read_csv(Path::new(&path))
        }
        other => return Err(Error::config(other, "unknown function kind (gaussian, quad, senv, sampled)")),
    }
    .map_err(|e| match e {
        Error::Config { .. } => e,
        other => Error::config(spec, other.to_string()),
    })?;
    k.finish()?;
    Ok(f)
}

/// Reads grid samples, recovering the grid from the distinct coordinates of
/// each column.
pub fn read_csv(path: &Path) -> Result<FunctionRep> {
    let mut r = csv::Reader::from_path(path)?;
    let n = r.headers()?.len().checked_sub(1).filter(|n| *n > 0).ok_or_else(|| Error::Invalid("CSV needs coordinate columns and a value column".into()))?;
    let mut axes: Vec<Vec<f64>> = vec![Vec::new(); n];
    for rec in r.records() {
        let rec = rec?;
        for (k, axis) in axes.iter_mut().enumerate() {
            let v: f64 = rec.get(k).unwrap_or("").trim().parse().map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
            axis.push(v);
        }
    }
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    let mut counts = Vec::with_capacity(n);
    for axis in &mut axes {
        axis.sort_by(|a, b| a.partial_cmp(b).unwrap());
        axis.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        lower.push(axis[0]);
        upper.push(axis[axis.len() - 1]);
        counts.push(axis.len());
    }
    let grid = Grid::new(lower, upper, counts)?;
    read_grid_csv(&grid, path)
}

pub fn parse_weight(spec: &str) -> Result<WeightFunction> {
    let mut k = Keys::parse(spec)?;
    let w = match k.kind.as_str() {
        "exp" => WeightFunction::ExpNeg,
        "one" => WeightFunction::ConstOne,
        "power" => {
            let alpha = k.number("alpha", None)?;
            WeightFunction::power(alpha).map_err(|e| Error::config(k.path("alpha"), e.to_string()))?
        }
        "scaled" => {
            let scale = k.number("scale", None)?;
            let shift = k.number("shift", Some(0.0))?;
            let base = match k.take("base").as_deref() {
                None | Some("exp") => WeightFunction::ExpNeg,
                Some("one") => WeightFunction::ConstOne,
                Some(other) => return Err(Error::config(k.path("base"), format!("`{other}`: expected exp or one"))),
            };
            WeightFunction::scaled_shifted(base, shift, scale).map_err(|e| Error::config(spec, e.to_string()))?
        }
        other => return Err(Error::config(other, "unknown weight kind (exp, one, power, scaled)")),
    };
    k.finish()?;
    Ok(w)
}

/// An Orlicz function from an inline spec; `dim` is the `n` in `t^{-p/n}`.
pub fn parse_h(spec: &str, dim: usize) -> Result<OrliczFunction> {
    let mut k = Keys::parse(spec)?;
    let h = match k.kind.as_str() {
        "power" => {
            let p = k.number("p", None)?;
            OrliczFunction::power_p(p, dim)
        }
        "pow" => OrliczFunction::power(k.number("q", None)?),
        "const" => OrliczFunction::constant(k.number("k", Some(1.0))?),
        "expdecay" => OrliczFunction::exp_decay(k.number("a", Some(1.0))?),
        "log1p" => OrliczFunction::log1p(),
        other => return Err(Error::config(other, "unknown h kind (power, pow, const, expdecay, log1p)")),
    }
    .map_err(|e| match e {
        Error::Config { .. } => e,
        other => Error::config(spec, other.to_string()),
    })?;
    k.finish()?;
    Ok(h)
}

/// Relative tolerances per check class.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub equality: f64,
    /// Closed-form values of the log-concave Orlicz areas.
    pub closed_form: f64,
    pub inequality: f64,
    pub invariance: f64,
    pub scaling: f64,
    /// Absolute sup-norm error of conjugates and maps.
    pub transform: f64,
    pub ball: f64,
    pub santalo_product: f64,
    /// Multiple of the combined halving estimates allowed between two
    /// computations of the same integral.
    pub est_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            equality: 0.02,
            closed_form: 0.01,
            inequality: 0.01,
            invariance: 0.01,
            scaling: 1e-6,
            transform: 1e-3,
            ball: 0.005,
            santalo_product: 0.015,
            est_factor: 3.0,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Nodes per axis in one dimension.
    pub count_1d: usize,
    /// Nodes per axis in two dimensions.
    pub count_2d: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { count_1d: 401, count_2d: 81 }
    }
}

impl GridConfig {
    pub fn count(&self, dim: usize) -> usize {
        match dim {
            1 => self.count_1d,
            2 => self.count_2d,
            _ => crate::transforms::default_count(dim),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Roster {
    /// Inline function specs; each is used in the dimensions it fits.
    pub functions: Vec<String>,
    pub hs: Vec<String>,
    /// Exponents for the L_p quantities.
    pub ps: Vec<f64>,
    /// Randomly perturbed centred log-concave functions per dimension.
    pub random_count: usize,
    /// How many of the perturbed functions also run the search-based checks.
    pub searched: usize,
    /// Largest ridge amplitude of the perturbations.
    pub perturbation: f64,
}

impl Default for Roster {
    fn default() -> Self {
        Roster {
            functions: vec!["gaussian:c=1".into(), "quad:A=[[1,0],[0,3]],a=0".into(), "quad:A=[[0.5]],a=0".into()],
            hs: vec!["pow:q=-0.5".into(), "pow:q=2".into(), "pow:q=0.5".into()],
            ps: vec![1.0, 2.0, -0.5],
            random_count: 20,
            searched: 2,
            perturbation: 0.6,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransformSamples {
    /// Random determinant-±1 maps per invariance check.
    pub count: usize,
    pub seed: u64,
}

impl Default for TransformSamples {
    fn default() -> Self {
        TransformSamples { count: 10, seed: 11 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SConcaveConfig {
    pub s: Vec<f64>,
    pub c: Vec<f64>,
    pub hs: Vec<String>,
    pub ps: Vec<f64>,
}

impl Default for SConcaveConfig {
    fn default() -> Self {
        SConcaveConfig {
            s: vec![0.25, 0.5],
            c: vec![0.5, 1.0, 2.0],
            hs: vec!["pow:q=-0.5".into(), "pow:q=0.5".into()],
            ps: vec![1.0],
        }
    }
}

/// The batch verification run.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct TestSuiteConfig {
    pub seed: u64,
    pub dims: Vec<usize>,
    /// Check groups to run; absent means all, empty means none.
    pub checks: Option<Vec<String>>,
    pub iterations_per_param: usize,
    pub grid: GridConfig,
    pub tolerances: Tolerances,
    pub roster: Roster,
    pub transforms: TransformSamples,
    pub sconcave: SConcaveConfig,
}

impl Default for TestSuiteConfig {
    fn default() -> Self {
        TestSuiteConfig {
            seed: 7,
            dims: vec![1, 2],
            checks: None,
            iterations_per_param: 200,
            grid: GridConfig::default(),
            tolerances: Tolerances::default(),
            roster: Roster::default(),
            transforms: TransformSamples::default(),
            sconcave: SConcaveConfig::default(),
        }
    }
}

impl TestSuiteConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: TestSuiteConfig = toml::from_str(text).map_err(|e| {
            let key = e.span().map(|s| text[s].lines().next().unwrap_or("").to_string()).unwrap_or_default();
            Error::config(key, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(d) = self.dims.iter().find(|d| !(1..=2).contains(*d)) {
            return Err(Error::config("dims", format!("dimension {d} is outside 1..=2")));
        }
        if self.grid.count_1d < 9 || self.grid.count_2d < 9 {
            return Err(Error::config("grid", "counts must be at least 9"));
        }
        for (i, g) in self.checks.iter().flatten().enumerate() {
            if !crate::harness::GROUPS.iter().any(|(name, _)| name == g) {
                let names: Vec<&str> = crate::harness::GROUPS.iter().map(|(name, _)| *name).collect();
                return Err(Error::config(format!("checks[{i}]"), format!("unknown group `{g}` (one of {})", names.join(", "))));
            }
        }
        if self.iterations_per_param == 0 {
            return Err(Error::config("iterations_per_param", "must be positive"));
        }
        for (i, s) in self.sconcave.s.iter().enumerate() {
            if !(*s > 0.0) {
                return Err(Error::config(format!("sconcave.s[{i}]"), "s must be positive"));
            }
        }
        for (i, c) in self.sconcave.c.iter().enumerate() {
            if !(*c > 0.0) {
                return Err(Error::config(format!("sconcave.c[{i}]"), "c must be positive"));
            }
        }
        for (i, f) in self.roster.functions.iter().enumerate() {
            let (kind, _) = split_spec(f).map_err(|e| Error::config(format!("roster.functions[{i}]"), e.to_string()))?;
            if kind != "sampled" {
                parse_function(f, 2).map_err(|e| Error::config(format!("roster.functions[{i}]"), e.to_string()))?;
            }
        }
        for (i, h) in self.roster.hs.iter().chain(&self.sconcave.hs).enumerate() {
            parse_h(h, 2).map_err(|e| Error::config(format!("hs[{i}]"), e.to_string()))?;
        }
        Ok(())
    }

    /// Whether a check group is enabled.
    pub fn runs(&self, group: &str) -> bool {
        self.checks.as_ref().is_none_or(|c| c.iter().any(|g| g == group))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn function_specs() {
        let g = parse_function("gaussian:c=2", 2).unwrap();
        assert_relative_eq!(g.eval(&[1.0, 0.0]).unwrap(), 2.0);
        let q = parse_function("quad:A=[[1,0],[0,2]],a=1", 2).unwrap();
        assert_relative_eq!(q.eval(&[1.0, 1.0]).unwrap(), 4.0);
        let q1 = parse_function("quad:A=3", 1).unwrap();
        assert_relative_eq!(q1.eval(&[2.0]).unwrap(), 12.0);
        let e = parse_function("senv:s=0.5,c=1,n=1", 3).unwrap();
        assert_eq!(e.dim(), 1);
    }

    #[test]
    fn bad_specs_name_the_key() {
        let err = parse_function("gaussian:c=x", 2).unwrap_err().to_string();
        assert!(err.contains("gaussian:c"), "{err}");
        let err = parse_function("gaussian:d=1", 2).unwrap_err().to_string();
        assert!(err.contains("gaussian:d"), "{err}");
        assert!(parse_function("quad:A=[[1,2],[3]]", 2).is_err());
        assert!(parse_function("cube:r=1", 2).is_err());
        assert!(parse_h("pow:q=1", 2).is_err());
    }

    #[test]
    fn spec_keys_can_be_replaced() {
        let s = set_spec_key("quad:A=[[1,0],[0,2]],a=0", "a", "1.5").unwrap();
        assert_eq!(parse_function(&s, 2).unwrap().eval(&[0.0, 0.0]).unwrap(), 1.5);
        assert_eq!(set_spec_key("gaussian", "c", "2").unwrap(), "gaussian:c=2");
    }

    #[test]
    fn weight_and_h_specs() {
        assert_eq!(parse_weight("exp").unwrap(), WeightFunction::ExpNeg);
        assert_eq!(parse_weight("power:alpha=3").unwrap(), WeightFunction::Power { alpha: 3.0 });
        let s = parse_weight("scaled:scale=2,shift=1").unwrap();
        assert_relative_eq!(s.eval(1.0), 2.0);
        assert!(parse_weight("power").is_err());
        let h = parse_h("power:p=1", 2).unwrap();
        assert_relative_eq!(h.eval(4.0), 0.5);
        assert!(parse_h("log1p", 2).unwrap().in_psi());
    }

    #[test]
    fn toml_rejects_unknown_keys() {
        let err = TestSuiteConfig::from_toml("seed = 1\nbogus = 2\n").unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
        let err = TestSuiteConfig::from_toml("[grid]\ncount_3d = 5\n").unwrap_err().to_string();
        assert!(err.contains("count_3d"), "{err}");
        let cfg = TestSuiteConfig::from_toml("seed = 3\ndims = [2]\n[tolerances]\nequality = 0.05\n").unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.tolerances.inequality, 0.01);
        assert!(TestSuiteConfig::from_toml("dims = [4]").is_err());
        let err = TestSuiteConfig::from_toml("checks = [\"bs\", \"nope\"]").unwrap_err().to_string();
        assert!(err.contains("checks[1]"), "{err}");
    }
}
