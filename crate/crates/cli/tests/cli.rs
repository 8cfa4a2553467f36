use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pinned-osb"))
        .args(args)
        .env("PINNED_OSB_WORKERS", "1")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_column(file: &Path, col: usize) -> Vec<f64> {
    fs::read_to_string(file)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn solve_matches_closed_form_and_call_reflects() {
    let tmp = tempfile::tempdir().unwrap();
    let put = tmp.path().join("put");
    let call = tmp.path().join("call");
    let base = [
        "solve",
        "--lambda",
        "0",
        "--strike",
        "10",
        "--horizon",
        "1",
        "--sigma",
        "1",
        "--nodes",
        "200",
    ];
    assert!(run(&[&base[..], &["--out", s(&put)]].concat())
        .status
        .success());
    assert!(
        run(&[&base[..], &["--side", "call", "--out", s(&call)]].concat())
            .status
            .success()
    );
    let t = csv_column(&put.join("boundary.csv"), 0);
    let p = csv_column(&put.join("boundary.csv"), 1);
    let c = csv_column(&call.join("boundary.csv"), 1);
    let err = t
        .iter()
        .zip(&p)
        .map(|(t, b)| (b - (10.0 - 0.8399 * (1.0 - t).sqrt())).abs())
        .fold(0.0, f64::max);
    assert!(err <= 0.02, "{err}");
    assert!(p.iter().zip(&c).all(|(p, c)| *c == 20.0 - p));
    let m = manifest(&put);
    assert!(m["error"].is_null());
    assert!(m["outputs"]["boundary.csv"]
        .as_str()
        .unwrap()
        .starts_with("sha256:"));
    assert!(put.join("boundary.json").exists());
}

#[test]
fn missing_flag_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "solve",
        "--strike",
        "10",
        "--horizon",
        "1",
        "--out",
        s(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solver_failure_names_the_node_and_writes_a_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "solve",
        "--strike",
        "10",
        "--horizon",
        "1",
        "--sigma",
        "1",
        "--lambda",
        "5",
        "--nodes",
        "2",
        "--grid",
        "uniform",
        "--out",
        s(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("node 1"));
    assert!(manifest(tmp.path())["error"]
        .as_str()
        .unwrap()
        .contains("node 1"));
}

#[test]
fn straight_line_path_is_degenerate() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("line.csv");
    let mut text = String::from("t,x\n");
    for k in 0..=10 {
        let t = k as f64 / 10.0;
        text.push_str(&format!("{t},{}\n", 9.0 + t));
    }
    fs::write(&path, text).unwrap();
    let out = run(&[
        "infer",
        "--path",
        s(&path),
        "--strike",
        "10",
        "--horizon",
        "1",
        "--out",
        s(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate"));
}

#[test]
fn infer_prints_estimate_and_extreme_alpha_collapses_band() {
    let tmp = tempfile::tempdir().unwrap();
    let sampled = tmp.path().join("p");
    assert!(run(&[
        "sample",
        "--strike",
        "10",
        "--horizon",
        "1",
        "--sigma",
        "1",
        "--x0",
        "10",
        "--steps",
        "200",
        "--seed",
        "12",
        "--out",
        s(&sampled),
    ])
    .status
    .success());
    let dir = tmp.path().join("i");
    let out = run(&[
        "infer",
        "--path",
        s(&sampled.join("path.csv")),
        "--strike",
        "10",
        "--horizon",
        "1",
        "--alpha",
        "0.9999",
        "--out",
        s(&dir),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    let sigma: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("sigma_hat = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(sigma > 0.8 && sigma < 1.2);
    assert!(stdout.contains("n = 199"));
    let lower = csv_column(&dir.join("band.csv"), 1);
    let upper = csv_column(&dir.join("band.csv"), 3);
    assert!(lower
        .iter()
        .zip(&upper)
        .all(|(l, u)| (u - l) / 2.0 < 1e-3 * 10.0));
}

#[test]
fn invalid_study_config_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"spec":{"S":10,"T":1,"sigma":1,"lambda":0},"x0":10,"n":66,"nodes":200,"replications":5,"alpha":0.05,"seed":1,"replicas":3}"#,
    )
    .unwrap();
    let out = run(&[
        "study",
        "--kind",
        "coverage",
        "--config",
        s(&cfg),
        "--out",
        s(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("replicas"));
}

#[test]
fn single_replication_payoff_study_flags_variance() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"spec":{"S":10,"T":1,"sigma":1,"lambda":0},"x0":10,"nodes":50,"frequency":1,"replications":40,"quantiles":[0.4],"eval_nodes":[25],"seed":2}"#,
    )
    .unwrap();
    let dir = tmp.path().join("o");
    let out = run(&[
        "study",
        "--kind",
        "payoff",
        "--config",
        s(&cfg),
        "--replications",
        "1",
        "--out",
        s(&dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(dir.join("payoff.csv")).unwrap();
    assert!(text.starts_with("t,q,rule,mean,variance,se,count,failures\n"));
    assert!(text
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(4) == Some("NaN")));
    assert_eq!(manifest(&dir)["config"]["study"]["replications"], 1);
}

fn pinned_bundle(dir: &Path) {
    fs::create_dir_all(dir).unwrap();
    fs::write(dir.join("meta.csv"), "id,strike,expiry\nA,50,10\n").unwrap();
    let prices = [
        50.0, 50.5, 49.8, 49.0, 48.2, 48.9, 49.6, 50.1, 49.9, 50.2, 50.5,
    ];
    let mut path = String::from("t,x\n");
    for (i, x) in prices.iter().enumerate() {
        path.push_str(&format!("{i},{x}\n"));
    }
    fs::write(dir.join("path_A.csv"), path).unwrap();
    fs::write(dir.join("oi_A.csv"), "day,oi\n0,1\n1,2\n").unwrap();
}

#[test]
fn data_command_hand_trace_and_relative_profit() {
    let tmp = tempfile::tempdir().unwrap();
    let bundle = tmp.path().join("b");
    pinned_bundle(&bundle);
    let flat = tmp.path().join("flat.csv");
    fs::write(&flat, "t,b\n0,0.975\n0.5,0.975\n1,0.975\n").unwrap();
    let dir = tmp.path().join("o");
    let out = run(&[
        "data",
        "--bundle",
        s(&bundle),
        "--strategy",
        &format!("x={}", s(&flat)),
        "--strategy",
        &format!("y={}", s(&flat)),
        "--rhos",
        "0.2",
        "--thresholds",
        "0.005,0.02",
        "--compare",
        "x,y",
        "--out",
        s(&dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    // Deviance |50.5/50 − 1| = 0.01; split at index 2; first normalised
    // price at or below 0.975 is 48.2/50 at index 4.
    let aggregate = fs::read_to_string(dir.join("aggregate.csv")).unwrap();
    let expected = 1.0 - 48.2 / 50.0;
    let lines: Vec<&str> = aggregate.lines().collect();
    assert_eq!(lines[0], "p,strategy,mean_profit");
    assert_eq!(lines[1], "0.005,*,empty");
    let x: f64 = lines[2].strip_prefix("0.02,x,").unwrap().parse().unwrap();
    assert!((x - expected).abs() < 1e-15);
    let relative = fs::read_to_string(dir.join("relative.csv")).unwrap();
    assert_eq!(relative, "p,relative_profit\n0.005,empty\n0.02,0\n");
    let m = manifest(&dir);
    assert!(m["inputs"]
        .as_object()
        .unwrap()
        .keys()
        .any(|k| k.ends_with("path_A.csv")));
}

#[test]
fn malformed_bundle_file_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let bundle = tmp.path().join("b");
    pinned_bundle(&bundle);
    fs::write(bundle.join("path_A.csv"), "t,price\n0,1\n").unwrap();
    let out = run(&[
        "data",
        "--bundle",
        s(&bundle),
        "--out",
        s(&tmp.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("path_A.csv"));
}
