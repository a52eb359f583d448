use std::fs::{self, File};
use std::path::Path;
use std::process::{Command, Output};

use tsdp_core::privacy::PrivacyMethod;
use tsdp_core::report::{read_curve_json, read_curves_csv, read_summaries, read_traces};

fn tsdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsdp"))
        .args(args)
        .output()
        .expect("spawn tsdp")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"{
  "instance": {"arms": [
    {"kind": "bernoulli", "p": 0.7},
    {"kind": "trunc_exp", "lambda": 2.0},
    {"kind": "bernoulli", "p": 0.2}
  ]},
  "horizon": 3000,
  "runs": 3,
  "seed": 42,
  "configs": [
    {"label": "plain", "b": 0, "c": 1},
    {"label": "target", "b": 20, "eta": 3},
    {"label": "too-many-prepulls", "b": 5000, "c": 1}
  ]
}"#;

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn simulate(config: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["simulate", "--config", config, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    tsdp(&args)
}

#[test]
fn simulate_writes_parseable_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("run");
    let o = simulate(&cfg, &out, &["--workers", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("too-many-prepulls"));

    let traces = read_traces(File::open(out.join("traces.csv")).unwrap()).unwrap();
    assert!(traces.iter().all(|r| r.config_label == "plain" || r.config_label == "target"));
    assert_eq!(traces.iter().filter(|r| r.config_label == "plain").count() % 3, 0);
    assert!(traces.iter().any(|r| r.t == 3000));

    let means = read_traces(File::open(out.join("mean_traces.csv")).unwrap()).unwrap();
    assert!(means.iter().all(|r| r.run_id == "mean"));

    let summary = read_summaries(File::open(out.join("summary.csv")).unwrap()).unwrap();
    assert_eq!(summary.len(), 2);
    let target = summary.iter().find(|s| s.config_label == "target").unwrap();
    assert!((target.eta - 3.0).abs() < 1e-9);
    assert!((target.c - 3000.0 / (9.0 * 21.0)).abs() < 1e-6);

    let meta: serde_json::Value =
        serde_json::from_reader(File::open(out.join("run_metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["skipped"].as_array().unwrap().len(), 1);
}

#[test]
fn simulate_is_reproducible_and_refuses_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(simulate(&cfg, &a, &["--workers", "1"]).status.success());
    assert!(simulate(&cfg, &b, &["--workers", "3"]).status.success());
    for f in ["traces.csv", "mean_traces.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }

    let again = simulate(&cfg, &a, &[]);
    assert!(!again.status.success());
    assert!(stderr(&again).contains("--force"));
    assert!(simulate(&cfg, &a, &["--force"]).status.success());

    let c = dir.path().join("c");
    assert!(simulate(&cfg, &c, &["--seed", "43"]).status.success());
    assert_ne!(fs::read(a.join("traces.csv")).unwrap(), fs::read(c.join("traces.csv")).unwrap());
}

#[test]
fn simulate_rejects_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write_config(
        dir.path(),
        r#"{"instance": {"arms": [{"kind": "bernoulli", "p": 0.5}, {"kind": "bernoulli", "p": 0.4}]},
            "horizon": 100, "configs": []}"#,
    );
    let o = simulate(&empty, &dir.path().join("e"), &[]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("no configurations"), "{}", stderr(&o));

    let bad = write_config(
        dir.path(),
        r#"{"instance": {"arms": [{"kind": "bernoulli", "p": 0.5}, {"kind": "poisson", "p": 0.4}]},
            "horizon": 100, "configs": [{"label": "x", "b": 0, "c": 1}]}"#,
    );
    let o = simulate(&bad, &dir.path().join("m"), &[]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("instance.arms[1]"), "{err}");
    assert!(err.contains("poisson"), "{err}");
}

#[test]
fn privacy_curve_all_methods() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p");
    let o = tsdp(&[
        "privacy-curve", "--method", "all", "--T", "1000", "--N", "10",
        "--delta-min", "1e-8", "--delta-max", "1e-2", "--points", "50",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_curves_csv(File::open(out.join("privacy_curves.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 150);
    let eps = |m: PrivacyMethod| -> Vec<f64> {
        rows.iter().filter(|r| r.method == m).map(|r| r.epsilon.unwrap()).collect()
    };
    let (g, r, a) = (eps(PrivacyMethod::Gdp), eps(PrivacyMethod::Rdp), eps(PrivacyMethod::AdvDp));
    for i in 0..50 {
        assert!(g[i] <= r[i] && r[i] < a[i], "point {i}");
    }
    for m in PrivacyMethod::ALL {
        let curve = read_curve_json(File::open(out.join(format!("privacy_{m}.json"))).unwrap()).unwrap();
        assert_eq!(curve.points.len(), 50);
    }
}

#[test]
fn privacy_curve_prepulls_reduce_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let mut last = f64::INFINITY;
    for b in ["0", "10", "100"] {
        let out = dir.path().join(format!("b{b}"));
        let o = tsdp(&[
            "privacy-curve", "--method", "gdp", "--T", "1000", "--N", "2", "--b", b, "--c", "1",
            "--gdp-path", "modified", "--delta-min", "1e-6", "--delta-max", "1e-6",
            "--points", "1", "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let curve = read_curve_json(File::open(out.join("privacy_gdp.json")).unwrap()).unwrap();
        assert_eq!(curve.points.len(), 1);
        let eps = curve.points[0].epsilon.unwrap();
        assert!(eps < last, "b={b}: {eps} !< {last}");
        last = eps;
    }
}

#[test]
fn privacy_curve_reads_config_section() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/privacy_comparison.json");
    let out = dir.path().join("p");
    let o = tsdp(&["privacy-curve", "--config", cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_curves_csv(File::open(out.join("privacy_curves.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 150);
    assert!(rows.iter().all(|r| r.horizon == 1000 && r.num_arms == 2));
}

#[test]
fn solve_params_table() {
    let o = tsdp(&["solve-params", "--eta", "1", "--T", "100000", "--N", "5", "--b", "0,99,999,30000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "b,c,eta,feasible,reason");
    assert!(lines[1].starts_with("0,100000,1,true"), "{}", lines[1]);
    assert!(lines[2].starts_with("99,1000,1,true"), "{}", lines[2]);
    assert!(lines[3].starts_with("999,100,1,true"), "{}", lines[3]);
    assert!(lines[4].starts_with("30000,") && lines[4].contains("false"), "{}", lines[4]);

    let o = tsdp(&["solve-params", "--eta", "316.2277660168379", "--T", "100000", "--N", "5", "--b", "0"]);
    let text = stdout(&o);
    assert!(text.lines().nth(1).unwrap().starts_with("0,1,"), "{text}");
}

#[test]
fn rnm_demo_matches_closed_form() {
    let o = tsdp(&["rnm-demo", "--values", "1,0", "--sigmas", "1,1", "--trials", "100000", "--seed", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let freq: f64 = row[3].parse().unwrap();
    let analytic: f64 = row[4].parse().unwrap();
    assert!((analytic - 0.760249).abs() < 1e-5, "{analytic}");
    assert!((freq - analytic).abs() < 0.01, "{freq}");

    let bad = tsdp(&["rnm-demo", "--values", "1,0", "--sigmas", "1,-1"]);
    assert!(!bad.status.success());
}
