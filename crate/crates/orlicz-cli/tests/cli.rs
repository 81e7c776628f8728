use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use orlicz::config::read_csv;

fn orlicz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orlicz")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// A numeric field of a one-record JSON output.
fn json_field(out: &Output, key: &str) -> f64 {
    let v: serde_json::Value = serde_json::from_str(stdout(out).trim()).expect("json record");
    v[key].as_f64().unwrap_or(f64::NAN)
}

#[test]
fn help_lists_subcommands_and_config_keys() {
    let out = orlicz(&["--help"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for cmd in ["legendre", "sdual", "integrate", "asp", "orlicz-as", "orlicz-gm", "gp", "sconcave", "mixed", "verify"] {
        assert!(text.contains(cmd), "missing subcommand {cmd}");
    }
    let defaults = toml::Value::try_from(orlicz::config::TestSuiteConfig::default()).unwrap();
    for (section, table) in defaults.as_table().unwrap() {
        match table.as_table() {
            Some(t) => {
                for key in t.keys() {
                    assert!(text.contains(&format!("{section}.{key} = ")), "missing {section}.{key}");
                }
            }
            None => assert!(text.contains(&format!("{section} = ")), "missing {section}"),
        }
    }
    assert!(text.contains("checks = "));
}

#[test]
fn gaussian_orlicz_area_matches_closed_form() {
    // h(t) = t^{-2/n} at c = 1 gives h(1) (sqrt(2 pi))^n = 2 pi for n = 2.
    let out = orlicz(&["orlicz-as", "--psi", "gaussian:c=1", "--h", "power:p=2", "--F1", "exp", "--F2", "exp", "--format", "json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v = json_field(&out, "value");
    assert!((v - 2.0 * std::f64::consts::PI).abs() < 0.01 * v, "{v}");
}

#[test]
fn legendre_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dual.csv");
    let out = orlicz(&["legendre", "--psi", "quad:A=[[1,0],[0,2]],a=0", "--dual-radius", "2", "--dual-count", "21", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));

    let text = std::fs::read_to_string(&path).unwrap();
    let mut rows = text.lines();
    assert_eq!(rows.next(), Some("x1,x2,value"));
    let rows: Vec<Vec<f64>> = rows.map(|r| r.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 21 * 21);
    for r in &rows {
        let exact = 0.25 * (r[0] * r[0] + r[1] * r[1] / 2.0);
        assert!((r[2] - exact).abs() <= 1e-12 * (1.0 + exact), "{r:?}");
    }

    let back = read_csv(&path).unwrap();
    for r in &rows {
        assert_eq!(back.eval(&r[..2]).unwrap(), r[2]);
    }
}

#[test]
fn sweep_gives_one_csv_row_per_point() {
    let out = orlicz(&["asp", "--psi", "gaussian", "--dim", "1", "--p", "1", "--sweep", "c=0.5:2:4", "--format", "csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("c,direct,"));
    assert!(lines[1].starts_with("0.5,") && lines[4].starts_with("2,"));
}

#[test]
fn malformed_input_exits_2_naming_the_key() {
    let out = orlicz(&["integrate", "--psi", "gaussian:c=oops"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("gaussian:c"));

    let out = orlicz(&["integrate", "--psi", "gaussian", "--set", "tolerances.bogus=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bogus"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "seed = 1\n[grid]\ncount_5d = 3\n").unwrap();
    let out = orlicz(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("count_5d"), "{}", stderr(&out));

    assert_eq!(orlicz(&["nosuch"]).status.code(), Some(2));
}

#[test]
fn verify_exit_status_follows_the_checks() {
    let quick = configs().join("quick.cfg");
    let quick = quick.to_str().unwrap();
    let out = orlicz(&["verify", "--config", quick, "--checks", "transforms,scaling", "--format", "json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    for line in stdout(&out).lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["status"], "pass");
    }

    // An equality tolerance below rounding cannot be met by two quadratures.
    let out = orlicz(&["verify", "--config", quick, "--checks", "transforms", "--set", "tolerances.equality=1e-18"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sconcave_subcommand_reports_the_envelope() {
    let out = orlicz(&["sconcave", "--psi", "senv:s=0.5,c=1", "--s", "0.5", "--dim", "1", "--format", "json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    // omega_{1,1/2} = 4 sqrt 2 / 3
    let v = json_field(&out, "integral");
    assert!((v - 4.0 * 2f64.sqrt() / 3.0).abs() < 0.005 * v, "{v}");
}

#[test]
fn verify_json_is_byte_identical_across_runs() {
    let quick = configs().join("quick.cfg");
    let args = ["verify", "--config", quick.to_str().unwrap(), "--format", "json"];
    let (a, b) = (orlicz(&args), orlicz(&args));
    assert!(a.status.success() && b.status.success());
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}
