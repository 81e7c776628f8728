//! Acceptance gate: twelve criteria, one PASS/FAIL line each. Runs without
//! the libtest harness so the lines print on success too.

use std::process::ExitCode;
use std::time::Instant;

use orlicz::config::TestSuiteConfig;
use orlicz::harness::{check_santalo_product, run_suite, CheckContext, Status, VerdictReport};
use orlicz::{FunctionRep, WeightFunction};

struct Outcome {
    number: usize,
    name: &'static str,
    reports: Vec<VerdictReport>,
    /// Flagged reports count as passing.
    allow_flagged: bool,
    /// A requirement beyond the reports, with its failure message.
    extra: Option<String>,
}

impl Outcome {
    fn failures(&self) -> Vec<&VerdictReport> {
        self.reports
            .iter()
            .filter(|r| r.status == Status::Fail || (r.status == Status::Flagged && !self.allow_flagged))
            .collect()
    }

    fn passed(&self) -> bool {
        !self.reports.is_empty() && self.failures().is_empty() && self.extra.is_none()
    }

    fn line(&self) -> String {
        let flagged = self.reports.iter().filter(|r| r.status == Status::Flagged).count();
        let mut s = format!(
            "[{}] {:>2}. {}: {} checks, {} failed, {} flagged",
            if self.passed() { "PASS" } else { "FAIL" },
            self.number,
            self.name,
            self.reports.len(),
            self.failures().len(),
            flagged
        );
        if let Some(e) = &self.extra {
            s.push_str(&format!("; {e}"));
        }
        for r in self.failures().iter().take(5) {
            s.push_str(&format!("\n       {} lhs={:e} {} rhs={:e} slack={:.3e}", r.check_id, r.lhs, r.relation.symbol(), r.rhs, r.slack));
            if let Some(n) = &r.note {
                s.push_str(&format!(" ({n})"));
            }
        }
        s
    }
}

fn select(reports: &[VerdictReport], keep: impl Fn(&str) -> bool) -> Vec<VerdictReport> {
    reports.iter().filter(|r| keep(&r.check_id)).cloned().collect()
}

fn group(id: &str) -> &str {
    id.split('/').next().unwrap_or("")
}

/// `sconcave/n2/env/s0.5/c1/as/..` splits into the entry part and the rest.
fn envelope_check(id: &str) -> Option<&str> {
    let parts: Vec<&str> = id.splitn(6, '/').collect();
    (parts.len() == 6 && parts[0] == "sconcave" && parts[2] == "env").then(|| parts[5])
}

fn outcome(number: usize, name: &'static str, reports: Vec<VerdictReport>) -> Outcome {
    Outcome { number, name, reports, allow_flagged: false, extra: None }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let base = TestSuiteConfig::default();
    let ctx = CheckContext::from_config(&base);
    let mut outcomes = Vec::new();

    // Everything except invariance runs once on the default roster; the
    // criteria below partition its reports.
    let cfg = TestSuiteConfig {
        checks: Some(
            ["transforms", "scaling", "closed_forms", "variational", "bs", "bounds", "isoperimetric", "cyclic", "santalo", "sconcave", "mixed"]
                .map(String::from)
                .to_vec(),
        ),
        ..base.clone()
    };
    let suite = run_suite(&cfg, false).expect("default suite runs").reports;

    outcomes.push(outcome(1, "Legendre oracle and involution", select(&suite, |id| id.starts_with("transforms/") && id.contains("/legendre/"))));
    outcomes.push(outcome(
        2,
        "Gaussian closed form of the Orlicz affine surface area",
        select(&suite, |id| id.starts_with("closed_forms/") && id.split('/').nth(2) == Some("as")),
    ));
    outcomes.push(outcome(3, "variational as_p against the direct integral", select(&suite, |id| group(id) == "variational")));
    outcomes.push(outcome(4, "scaling law of weight integrals", select(&suite, |id| group(id) == "scaling")));

    let inv_cfg = TestSuiteConfig {
        checks: Some(vec!["invariance".into()]),
        roster: orlicz::config::Roster { searched: 0, ..base.roster.clone() },
        ..base.clone()
    };
    let invariance = run_suite(&inv_cfg, false).expect("invariance runs").reports;
    outcomes.push(outcome(5, "invariance under determinant +-1 maps", invariance));

    outcomes.push(outcome(6, "functional Blaschke-Santalo inequality", select(&suite, |id| group(id) == "bs")));

    let exp = WeightFunction::ExpNeg;
    let mut santalo = Vec::new();
    for n in 1..=2 {
        let gaussian = FunctionRep::gaussian(n, 1.0).expect("gaussian");
        for p in [1.0, 2.0] {
            santalo.push(check_santalo_product(&ctx, p, &exp, &exp, &gaussian, "gaussian"));
        }
    }
    outcomes.push(outcome(7, "Santalo product of G_p for the Gaussian", santalo));

    outcomes.push(outcome(
        8,
        "s-concave ball values and envelope closed forms",
        select(&suite, |id| {
            id.contains("/ball/")
                || envelope_check(id).is_some_and(|rest| {
                    rest.starts_with("as/") || rest.starts_with("gm/") || rest == "integral" || (rest.starts_with("gp/") && rest.matches('/').count() == 1)
                })
        }),
    ));
    outcomes.push(outcome(9, "two computations of the s-concave integral", select(&suite, |id| id.starts_with("sconcave/") && id.ends_with("/identity"))));
    outcomes.push(outcome(10, "s-duality identities", select(&suite, |id| id.contains("/duality/"))));

    let inequalities = select(&suite, |id| matches!(group(id), "bounds" | "isoperimetric" | "cyclic" | "santalo" | "sconcave" | "mixed"));
    let missing: Vec<char> =
        "abcdef".chars().filter(|t| !inequalities.iter().any(|r| r.check_id.starts_with("cyclic/") && r.check_id.split('/').nth(2) == Some(&t.to_string()))).collect();
    let has_interpolation = inequalities.iter().any(|r| r.check_id.contains("/interpolation/"));
    let extra = match (missing.is_empty(), has_interpolation) {
        (true, true) => None,
        (false, _) => Some(format!("no cyclic instance for conditions {missing:?}")),
        (true, false) => Some("no interpolation check".into()),
    };
    outcomes.push(Outcome { number: 11, name: "inequality suite", reports: inequalities, allow_flagged: true, extra });

    let quick = TestSuiteConfig::load(&std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/quick.cfg")).expect("quick config");
    let first = run_suite(&quick, false).expect("first run");
    let second = run_suite(&quick, false).expect("second run");
    let same = first.json_lines() == second.json_lines();
    let mut det = outcome(12, "determinism of the JSON-lines body", first.reports);
    if !same {
        det.extra = Some("two runs differ".into());
    }
    outcomes.push(det);

    let mut all = true;
    for o in &outcomes {
        println!("{}", o.line());
        all &= o.passed();
    }
    println!("acceptance: {} in {:.0}s", if all { "all criteria pass" } else { "FAILED" }, start.elapsed().as_secs_f64());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
