//! `orlicz`: desk computations and batch verification for Orlicz affine and
//! geominimal surface areas.
//!
//! Exit status: 0 on success, 1 when a check fails or a computation errors,
//! 2 on a usage or config error.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use orlicz::affine::{analytic_orlicz_as, asp_direct_on, asp_variational_on, gaussian_mass, gp_on, orlicz_as_on, orlicz_gm_on, quadratic_form};
use orlicz::config::{parse_function, parse_h, parse_weight, set_spec_key, TestSuiteConfig};
use orlicz::harness::{run_suite, CheckContext, Status, GROUPS};
use orlicz::mixed::{component_values, ith_mixed_as, ith_mixed_gm, mixed_orlicz_as, mixed_orlicz_gm, union_grid, MixedSpec};
use orlicz::quadrature::integral_f_s;
use orlicz::sconcave::{asp_s_direct, asp_s_variational, envelope_scale, gp_s, orlicz_as_s, orlicz_gm_s, s_santalo_center, SConcavePair};
use orlicz::transforms::{discrete_conjugate, discrete_s_conjugate, legendre, s_dual};
use orlicz::{Error, FunctionRep, Grid, OrliczFunction, WeightFunction};

use output::{render, Format, Record};

#[derive(Parser, Debug)]
#[command(name = "orlicz", version, about = "Orlicz and L_p affine/geominimal surface areas of log-concave and s-concave functions")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML config; its grid, tolerances, search iterations and seed apply to
    /// every subcommand.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Output file. For `legendre` and `sdual` it receives the sampled dual
    /// as CSV and the summary still goes to stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Nodes per axis for every dimension (overrides grid.count_1d/count_2d).
    #[arg(long, global = true, value_name = "COUNT")]
    grid: Option<usize>,
    /// Overrides one config key, e.g. `--set tolerances.equality=0.05`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Records per-check runtimes in `verify` output.
    #[arg(long, global = true)]
    timings: bool,
}

/// Inputs shared by the single-function subcommands.
#[derive(Args, Debug)]
struct FunctionArgs {
    /// Potential: gaussian:c=1[,n=2] | quad:A=[[..]][,a=0] | senv:s=..[,c=1][,n=2] | sampled:path=file.csv
    #[arg(long)]
    psi: String,
    /// Dimension for specs without their own `n`.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Sweeps one key of the --psi spec: KEY=START:STOP:COUNT, one output row
    /// per point.
    #[arg(long, value_name = "KEY=START:STOP:COUNT")]
    sweep: Option<String>,
}

#[derive(Args, Debug)]
struct Weights {
    /// exp | one | power:alpha=.. | scaled:scale=..[,shift=0][,base=exp]
    #[arg(long = "F1", default_value = "exp")]
    f1: String,
    #[arg(long = "F2", default_value = "exp")]
    f2: String,
}

#[derive(Args, Debug)]
struct DualGrid {
    /// Half-width of the dual grid box (automatic when absent).
    #[arg(long)]
    dual_radius: Option<f64>,
    /// Nodes per axis of the dual grid.
    #[arg(long, default_value_t = 41)]
    dual_count: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Legendre transform of a potential on a dual grid.
    Legendre {
        #[command(flatten)]
        f: FunctionArgs,
        #[command(flatten)]
        dual: DualGrid,
    },
    /// s-dual of a potential on a dual grid.
    Sdual {
        #[command(flatten)]
        f: FunctionArgs,
        #[arg(long)]
        s: f64,
        #[command(flatten)]
        dual: DualGrid,
    },
    /// I(F o psi) and I(F o psi*); with --s, I(f) of f = (1 - s psi)^(1/s) two ways.
    Integrate {
        #[command(flatten)]
        f: FunctionArgs,
        #[arg(long = "F", default_value = "exp")]
        weight: String,
        #[arg(long)]
        s: Option<f64>,
    },
    /// L_p affine surface area, direct and variational.
    Asp {
        #[command(flatten)]
        f: FunctionArgs,
        #[arg(long, allow_hyphen_values = true)]
        p: f64,
        #[command(flatten)]
        w: Weights,
        /// Uses the s-concave version.
        #[arg(long)]
        s: Option<f64>,
    },
    /// Orlicz affine surface area.
    OrliczAs {
        #[command(flatten)]
        f: FunctionArgs,
        /// power:p=.. (t^(-p/n)) | pow:q=.. (t^q) | const:k=1 | expdecay:a=1 | log1p
        #[arg(long)]
        h: String,
        #[command(flatten)]
        w: Weights,
        #[arg(long)]
        s: Option<f64>,
    },
    /// Orlicz geominimal surface area.
    OrliczGm {
        #[command(flatten)]
        f: FunctionArgs,
        #[arg(long)]
        h: String,
        #[command(flatten)]
        w: Weights,
        #[arg(long)]
        s: Option<f64>,
    },
    /// L_p geominimal surface area G_p.
    Gp {
        #[command(flatten)]
        f: FunctionArgs,
        #[arg(long, allow_hyphen_values = true)]
        p: f64,
        #[command(flatten)]
        w: Weights,
        #[arg(long)]
        s: Option<f64>,
    },
    /// Summary of an s-concave function: regularity, I(f), I(f°), Santaló point.
    Sconcave {
        #[command(flatten)]
        f: FunctionArgs,
        #[arg(long)]
        s: f64,
    },
    /// Mixed Orlicz affine (or geominimal) surface area of several potentials.
    Mixed {
        /// Repeat once per component.
        #[arg(long, required = true)]
        psi: Vec<String>,
        /// One per component, or a single h for all.
        #[arg(long, required = true)]
        h: Vec<String>,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// The i-th mixed area of two potentials.
        #[arg(long)]
        i: Option<usize>,
        #[arg(long)]
        gm: bool,
    },
    /// Runs the verification suite.
    Verify {
        /// Comma-separated check groups (default: the config's, else all).
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
    },
}

/// Errors that exit with status 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// Config and spec errors are usage errors; everything else is a failed
/// computation.
fn exit_status(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() || matches!(err.downcast_ref::<Error>(), Some(Error::Config { .. })) {
        2
    } else {
        1
    }
}

fn config_help() -> String {
    let mut lines = vec!["Config keys (TOML, also accepted by --set) and defaults:".to_string()];
    let value = toml::Value::try_from(TestSuiteConfig::default()).expect("default config serializes");
    flatten("", &value, &mut lines);
    let names: Vec<&str> = GROUPS.iter().map(|(g, _)| *g).collect();
    lines.push(format!("  checks = all of [{}]", names.join(", ")));
    lines.join("\n")
}

fn flatten(prefix: &str, value: &toml::Value, out: &mut Vec<String>) {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        v => out.push(format!("  {prefix} = {v}")),
    }
}

/// Sets a dotted key in the serialized config and re-validates the result,
/// so unknown keys are rejected by name.
fn apply_set(cfg: TestSuiteConfig, assignment: &str) -> Result<TestSuiteConfig> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| usage(format!("--set `{assignment}`: expected KEY=VALUE")))?;
    let key = key.trim();
    let parsed: toml::Value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let mut root = toml::Value::try_from(cfg)?;
    let mut node = &mut root;
    let parts: Vec<&str> = key.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        node = node
            .as_table_mut()
            .and_then(|t| t.get_mut(*part))
            .ok_or_else(|| Error::Config { key: key.to_string(), msg: "unknown config key".into() })?;
    }
    let table = node.as_table_mut().ok_or_else(|| Error::Config { key: key.to_string(), msg: "not a table".into() })?;
    table.insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(TestSuiteConfig::from_toml(&toml::to_string(&root)?)?)
}

fn load_config(common: &Common) -> Result<TestSuiteConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            TestSuiteConfig::from_toml(&text)?
        }
        None => TestSuiteConfig::default(),
    };
    for s in &common.set {
        cfg = apply_set(cfg, s)?;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(g) = common.grid {
        cfg.grid.count_1d = g;
        cfg.grid.count_2d = g;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// The psi specs to evaluate: one, or one per sweep point with the swept
/// value as the first column.
fn sweep_points(f: &FunctionArgs) -> Result<Vec<(Option<(String, f64)>, String)>> {
    let Some(sweep) = &f.sweep else {
        return Ok(vec![(None, f.psi.clone())]);
    };
    let bad = || usage(format!("--sweep `{sweep}`: expected KEY=START:STOP:COUNT"));
    let (key, range) = sweep.split_once('=').ok_or_else(bad)?;
    let parts: Vec<&str> = range.split(':').collect();
    let [start, stop, count] = parts[..] else { return Err(bad()) };
    let start: f64 = start.trim().parse().map_err(|_| bad())?;
    let stop: f64 = stop.trim().parse().map_err(|_| bad())?;
    let count: usize = count.trim().parse().map_err(|_| bad())?;
    if count == 0 {
        return Err(bad());
    }
    (0..count)
        .map(|k| {
            let v = if count == 1 { start } else { start + (stop - start) * k as f64 / (count - 1) as f64 };
            let spec = set_spec_key(&f.psi, key.trim(), &format!("{v}"))?;
            Ok((Some((key.trim().to_string(), v)), spec))
        })
        .collect()
}

/// Runs `compute` at every sweep point.
fn swept(f: &FunctionArgs, mut compute: impl FnMut(&FunctionRep) -> Result<Record>) -> Result<Vec<Record>> {
    sweep_points(f)?
        .into_iter()
        .map(|(point, spec)| {
            let psi = parse_function(&spec, f.dim)?;
            let rec = compute(&psi)?;
            Ok(match point {
                Some((k, v)) => Record(std::iter::once((k, output::Field::Num(v))).chain(rec.0).collect()),
                None => rec,
            })
        })
        .collect()
}

fn dual_grid(dim: usize, dual: &DualGrid) -> Result<Option<Grid>> {
    Ok(match dual.dual_radius {
        Some(r) => Some(Grid::cube(dim, r, dual.dual_count)?),
        None => None,
    })
}

/// Largest `|a - b|` over nodes where both are finite.
fn sup_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).filter(|(x, y)| x.is_finite() && y.is_finite()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn search_fields(rec: Record, r: &orlicz::family::VariationalResult) -> Record {
    rec.num("bound_gap", r.bound_gap)
        .text("argmin_family", r.argmin_family.clone())
        .int("iterations", r.iterations)
        .int("evaluations", r.evaluations)
        .flag("converged", r.converged)
}

fn s_pair(ctx: &CheckContext, psi: &FunctionRep, s: f64) -> Result<SConcavePair> {
    Ok(SConcavePair::new(psi, s, Some(&ctx.grid(psi)?))?)
}

enum Area {
    Affine,
    Geominimal,
}

fn orlicz_area(ctx: &CheckContext, area: &Area, f: &FunctionArgs, h: &str, w: &Weights, s: Option<f64>) -> Result<Vec<Record>> {
    let f1 = parse_weight(&w.f1)?;
    let f2 = parse_weight(&w.f2)?;
    swept(f, |psi| {
        let n = psi.dim();
        let h = parse_h(h, n)?;
        let rec = Record::default().text("h", h.label());
        if let Some(s) = s {
            let sp = s_pair(ctx, psi, s)?;
            let r = match area {
                Area::Affine => orlicz_as_s(&h, &sp, &ctx.family)?,
                Area::Geominimal => orlicz_gm_s(&h, &sp, &ctx.family)?,
            };
            return Ok(search_fields(rec.num("value", r.value), &r));
        }
        let prep = ctx.prepare(psi)?;
        let mut r = match area {
            Area::Affine => orlicz_as_on(&h, &f1, &f2, &prep, &ctx.family)?,
            Area::Geominimal => orlicz_gm_on(&h, &f1, &f2, &prep, &ctx.family)?,
        };
        let closed = quadratic_form(psi).and_then(|m| analytic_orlicz_as(&h, &f1, &f2, &m, n)).unwrap_or(f64::NAN);
        if closed.is_finite() {
            r = r.with_reference(closed);
        }
        Ok(search_fields(rec.num("value", r.value).num("closed_form", closed), &r))
    })
}

fn run(cli: Cli) -> Result<(String, bool)> {
    let cfg = load_config(&cli.common)?;
    let ctx = CheckContext::from_config(&cfg);
    let format = cli.common.format;
    let records = match &cli.command {
        Command::Legendre { f, dual } => {
            let psi = parse_function(&f.psi, f.dim)?;
            let primal = ctx.grid(&psi)?;
            let pair = legendre(&psi, Some(&primal), dual_grid(psi.dim(), dual)?.as_ref())?;
            let values = pair.dual.sample_values(&pair.dual_grid)?;
            let mut rec = Record::default()
                .int("dim", psi.dim())
                .int("dual_nodes", pair.dual_grid.len())
                .num("dual_spacing", pair.dual_grid.max_spacing())
                .num("involution_error", pair.involution_error);
            if psi.is_closed_form() {
                let discrete = discrete_conjugate(&psi, &primal, &pair.dual_grid)?;
                rec = rec.num("discrete_sup_error", sup_gap(&values, &discrete));
            }
            if let Some(out) = &cli.common.out {
                pair.dual.write_csv(&pair.dual_grid, out)?;
                rec = rec.text("written", out.display().to_string());
            }
            return Ok((render(&[rec], format)?, true));
        }
        Command::Sdual { f, s, dual } => {
            let psi = parse_function(&f.psi, f.dim)?;
            let primal = ctx.grid(&psi)?;
            let pair = s_dual(&psi, *s, Some(&primal), dual_grid(psi.dim(), dual)?.as_ref())?;
            let (dual_fn, grid) = pair.dual.as_ref().ok_or_else(|| anyhow!("s-dual was not sampled"))?;
            let values = dual_fn.sample_values(grid)?;
            let mut rec = Record::default()
                .int("dim", psi.dim())
                .num("s", *s)
                .int("regular_points", pair.rs.len())
                .int("dual_nodes", grid.len());
            if psi.is_closed_form() {
                let discrete = discrete_s_conjugate(&psi, *s, &primal, grid)?;
                rec = rec.num("discrete_sup_error", sup_gap(&values, &discrete));
            }
            if let Some(out) = &cli.common.out {
                dual_fn.write_csv(grid, out)?;
                rec = rec.text("written", out.display().to_string());
            }
            return Ok((render(&[rec], format)?, true));
        }
        Command::Integrate { f, weight, s } => {
            let w = parse_weight(weight)?;
            swept(f, |psi| match s {
                Some(s) => {
                    let sp = s_pair(&ctx, psi, *s)?;
                    let both = integral_f_s(&sp.pair)?;
                    Ok(Record::default()
                        .num("integral", both.direct.value)
                        .num("est_error", both.direct.est_error)
                        .num("via_identity", both.via_identity.value)
                        .num("identity_est_error", both.via_identity.est_error)
                        .num("discrepancy", both.discrepancy)
                        .num("polar_integral", sp.integral_polar()))
                }
                None => {
                    let prep = ctx.prepare(psi)?;
                    let primal = prep.primal_integral(&w);
                    let dual = prep.dual_integral(&w);
                    let product = primal * dual;
                    Ok(Record::default()
                        .num("integral", primal)
                        .num("dual_integral", dual)
                        .num("product", product)
                        .num("product_over_bound", product / gaussian_mass(psi.dim()).powi(2)))
                }
            })?
        }
        Command::Asp { f, p, w, s } => {
            let f1 = parse_weight(&w.f1)?;
            let f2 = parse_weight(&w.f2)?;
            swept(f, |psi| {
                if let Some(s) = s {
                    let sp = s_pair(&ctx, psi, *s)?;
                    let direct = asp_s_direct(*p, &sp)?;
                    let r = asp_s_variational(*p, &sp, &ctx.family)?;
                    return Ok(search_fields(Record::default().num("direct", direct.value).num("variational", r.value), &r));
                }
                let prep = ctx.prepare(psi)?;
                let direct = asp_direct_on(*p, &f1, &f2, &prep)?;
                let r = asp_variational_on(*p, &f1, &f2, &prep, &ctx.family)?;
                Ok(search_fields(
                    Record::default().num("direct", direct.value).num("est_error", direct.est_error).num("variational", r.value),
                    &r,
                ))
            })?
        }
        Command::OrliczAs { f, h, w, s } => orlicz_area(&ctx, &Area::Affine, f, h, w, *s)?,
        Command::OrliczGm { f, h, w, s } => orlicz_area(&ctx, &Area::Geominimal, f, h, w, *s)?,
        Command::Gp { f, p, w, s } => {
            let f1 = parse_weight(&w.f1)?;
            let f2 = parse_weight(&w.f2)?;
            swept(f, |psi| {
                let (value, via, discrepancy, search) = match s {
                    Some(s) => {
                        let r = gp_s(*p, &s_pair(&ctx, psi, *s)?, &ctx.family)?;
                        (r.value, r.via_geominimal, r.discrepancy, r.search)
                    }
                    None => {
                        let r = gp_on(*p, &f1, &f2, &ctx.prepare(psi)?, &ctx.family)?;
                        (r.value, r.via_geominimal, r.discrepancy, r.search)
                    }
                };
                Ok(search_fields(
                    Record::default().num("value", value).num("via_geominimal", via).num("discrepancy", discrepancy),
                    &search,
                ))
            })?
        }
        Command::Sconcave { f, s } => swept(f, |psi| {
            let sp = s_pair(&ctx, psi, *s)?;
            let (center, _) = s_santalo_center(&sp)?;
            let center: Vec<String> = center.iter().map(|c| format!("{c}")).collect();
            Ok(Record::default()
                .num("s", *s)
                .flag("c2_interior", sp.flags.c2_interior)
                .flag("boundary_decay", sp.flags.boundary_decay)
                .flag("g1_logconcave", sp.g1_logconcave())
                .num("envelope_c", envelope_scale(&sp).unwrap_or(f64::NAN))
                .num("integral", sp.integral_f())
                .num("polar_integral", sp.integral_polar())
                .num("product", sp.integral_f() * sp.integral_polar())
                .text("santalo_point", center.join(" ")))
        })?,
        Command::Mixed { psi, h, dim, i, gm } => {
            let psis = psi.iter().map(|s| parse_function(s, *dim)).collect::<orlicz::Result<Vec<_>>>()?;
            let m = psis.len();
            if m < 2 {
                bail!(usage("mixed needs at least two --psi"));
            }
            let n = psis[0].dim();
            if h.len() != 1 && h.len() != m {
                bail!(usage(format!("give one --h or {m}")));
            }
            let hs = (0..m).map(|k| parse_h(&h[k.min(h.len() - 1)], n)).collect::<orlicz::Result<Vec<OrliczFunction>>>()?;
            let exp = WeightFunction::ExpNeg;
            let grid = union_grid(&psis, ctx.grids.count(n))?;
            let spec = MixedSpec::new(psis, hs, vec![exp.clone(); m], vec![exp; m], Some(&grid))?;
            let r = match (i, gm) {
                (Some(i), false) => ith_mixed_as(&spec, *i, &ctx.family)?,
                (Some(i), true) => ith_mixed_gm(&spec, *i, &ctx.family)?,
                (None, false) => mixed_orlicz_as(&spec, &ctx.family)?,
                (None, true) => mixed_orlicz_gm(&spec, &ctx.family)?,
            };
            let singles = component_values(&spec, &ctx.family, *gm)?;
            let mut rec = Record::default().num("value", r.value);
            for (k, single) in singles.iter().enumerate() {
                rec = rec.num(&format!("single_{k}"), single.value);
            }
            let product: f64 = singles.iter().map(|s| s.value).product();
            vec![search_fields(rec.num("power_over_product", r.value.powi(m as i32) / product), &r)]
        }
        Command::Verify { checks, dims } => {
            let mut cfg = cfg;
            if let Some(c) = checks {
                cfg.checks = Some(c.clone());
            }
            if let Some(d) = dims {
                cfg.dims = d.clone();
            }
            cfg.validate()?;
            let report = run_suite(&cfg, cli.common.timings)?;
            let text = match format {
                Format::Table => report.table(),
                Format::Json => report.json_lines(),
                Format::Csv => {
                    let rows: Vec<Record> = report
                        .reports
                        .iter()
                        .map(|r| {
                            Record::default()
                                .text("check_id", r.check_id.clone())
                                .num("lhs", r.lhs)
                                .text("relation", r.relation.symbol())
                                .num("rhs", r.rhs)
                                .num("slack", r.slack)
                                .num("tolerance", r.tolerance)
                                .text("status", format!("{:?}", r.status).to_lowercase())
                                .text("note", r.note.clone().unwrap_or_default())
                        })
                        .collect();
                    render(&rows, Format::Csv)?
                }
            };
            if report.count(Status::Fail) > 0 {
                eprintln!("{} of {} checks failed", report.count(Status::Fail), report.reports.len());
            }
            return Ok((text, report.passed()));
        }
    };
    Ok((render(&records, format)?, true))
}

fn write_output(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let matches = Cli::command().after_help(config_help()).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    // legendre/sdual write their samples to --out themselves.
    let out = match cli.command {
        Command::Legendre { .. } | Command::Sdual { .. } => None,
        _ => cli.common.out.clone(),
    };
    match run(cli).and_then(|(text, passed)| write_output(&text, out.as_deref()).map(|_| passed)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_status(&e))
        }
    }
}
