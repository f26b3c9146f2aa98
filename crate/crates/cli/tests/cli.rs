use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_globalcoupling"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn records(out: &Output) -> Vec<Value> {
    stdout(out).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn ground_state_summary_and_profile() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("profile.csv");
    let out = run(&["ground-state", "--n", "1", "--p", "3", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rec = &records(&out)[0];
    assert!((rec["u0"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-6);
    assert!((rec["alpha"].as_f64().unwrap() - 4.0).abs() < 1e-5);

    let csv = fs::read_to_string(&path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r,u,du"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    assert!((first[1] - 2f64.sqrt()).abs() < 1e-6);
    assert_eq!(first[2], 0.0);
}

#[test]
fn ground_state_formats_carry_the_same_numbers() {
    let json = records(&run(&["ground-state", "--n", "1", "--p", "3"]))[0].clone();
    let csv = stdout(&run(&["ground-state", "--n", "1", "--p", "3", "--format", "csv"]));
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    for (key, cell) in header.iter().zip(row) {
        match &json[*key] {
            Value::Number(x) => assert_eq!(x.as_f64().unwrap(), cell.parse::<f64>().unwrap(), "{key}"),
            Value::String(s) => assert_eq!(s, cell),
            other => panic!("unexpected {other}"),
        }
    }
}

#[test]
fn supercritical_ground_state_exits_with_nonexistence() {
    let out = run(&["ground-state", "--n", "3", "--p", "5"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("critical"));
}

#[test]
fn classify_examples() {
    let out = run(&["classify", "--n", "1", "--p", "2", "--k", "0.03"]);
    assert_eq!(out.status.code(), Some(0));
    let rec = &records(&out)[0];
    assert_eq!(rec["theorem_item"], "1-3");
    assert_eq!(rec["omegas"].as_array().unwrap().len(), 2);
    assert!((rec["k_star"].as_f64().unwrap() - 0.064150).abs() < 1e-6);

    let out = run(&["classify", "--n", "1", "--p", "2", "--k", "0.10"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(records(&out)[0]["theorem_item"], "1-1");

    let out = run(&["classify", "--n", "4", "--p", "3", "--k", "1"]);
    assert_eq!(out.status.code(), Some(3));
    let rec = &records(&out)[0];
    assert_eq!((rec["theorem_item"].as_str(), rec["count"].as_u64()), (Some("4-1"), Some(0)));
}

#[test]
fn rational_exponent_lands_on_the_saturating_case() {
    let rec = &records(&run(&["classify", "--n", "1", "--p", "7/3", "--k", "0.1"]))[0];
    assert_eq!(rec["case_tag"], "SaturatingOne");
    assert_eq!(rec["p"], "7/3");
}

#[test]
fn sweep_crosses_the_fold() {
    let out = run(&["sweep", "--n", "1", "--p", "2", "--k-range", "0.01:0.1:10"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,count,omega1,omega2"));
    let counts: Vec<u32> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(counts.first(), Some(&2));
    assert_eq!(counts.last(), Some(&0));
    assert!(counts.contains(&1));
    assert!(counts.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn sweep_unique_case_and_spacing() {
    let text = stdout(&run(&["sweep", "--n", "1", "--p", "3", "--k-range", "0.1:2:5"]));
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[1], "1");
        assert!(cells[3].is_empty());
    }
    let log = stdout(&run(&["sweep", "--n", "1", "--p", "3", "--k-range", "1:100:3", "--spacing", "log"]));
    let ks: Vec<f64> = log.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ks.len(), 3);
    assert!((ks[1] - 10.0).abs() < 1e-12);
}

#[test]
fn usage_errors() {
    for args in [
        &["sweep", "--n", "1", "--p", "2", "--k-range", "0.1:0.1:5"][..],
        &["sweep", "--n", "1", "--p", "2", "--k-range", "0.1:1:1"],
        &["classify", "--n", "1", "--p", "abc", "--k", "1"],
        &["classify", "--n", "1", "--p", "2"],
        &["classify", "--n", "1", "--p", "2", "--k", "-1"],
        &["classify", "--n", "1", "--p", "1", "--k", "1"],
    ] {
        assert_eq!(run(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn verify_examples() {
    let out = run(&["verify", "--n", "1", "--p", "3", "--k", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let recs = records(&out);
    assert_eq!(recs.len(), 1);
    assert!((recs[0]["omega"].as_f64().unwrap() - (1.0 + 2f64.sqrt()).powi(2)).abs() < 1e-9);

    assert_eq!(run(&["verify", "--n", "1", "--p", "2", "--k", "0.10"]).status.code(), Some(3));
    assert_eq!(run(&["verify", "--n", "3", "--p", "5", "--k", "0.5"]).status.code(), Some(3));
}

#[test]
fn verify_flags_an_exceeded_threshold() {
    let out = run(&["verify", "--n", "1", "--p", "3", "--k", "0.5", "--identity-tol", "1e-20"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(records(&out).len(), 1);
}

#[test]
fn solve_with_general_coupling_exponent() {
    let std = records(&run(&["solve", "--n", "1", "--p", "3", "--k", "0.5"]));
    assert!((std[0]["omega"].as_f64().unwrap() - 5.828427124746).abs() < 1e-8);
    let quartic = run(&["solve", "--n", "1", "--p", "3", "--k", "0.05", "--r-exp", "4"]);
    assert_eq!(quartic.status.code(), Some(0));
    assert_eq!(records(&quartic).len(), 2);
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for (i, args) in [
        &["sweep", "--n", "1", "--p", "2", "--k-range", "0.01:0.1:25"][..],
        &["verify", "--n", "1", "--p", "2", "--k", "0.03"],
        &["ground-state", "--n", "2", "--p", "3"],
    ]
    .iter()
    .enumerate()
    {
        let files: Vec<Vec<u8>> = (0..2)
            .map(|j| {
                let path = dir.path().join(format!("{i}-{j}.out"));
                let mut full = args.to_vec();
                full.extend(["--output", path.to_str().unwrap()]);
                assert!(run(&full).status.success());
                fs::read(&path).unwrap()
            })
            .collect();
        assert!(!files[0].is_empty());
        assert_eq!(files[0], files[1], "{args:?}");
    }
}
