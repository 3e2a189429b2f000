use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_slice-forge"));
    c.env_remove("SLICE_FORGE_JOBS");
    c
}

fn run(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(stdin.unwrap_or("").as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

/// Rational coefficients of a serialized series, keyed by degree.
fn coeffs(v: &Value) -> Vec<(i64, String)> {
    let mut out: Vec<(i64, String)> = v["coeffs"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, c)| (k.parse().unwrap(), c["coords"][0].as_str().unwrap().to_string()))
        .collect();
    out.sort();
    out
}

#[test]
fn gauss_of_the_big_cell_fixture() {
    let out = run(
        &["gauss"],
        Some(r#"{"g":{"rows":[["1","z^-1"],["z^-1","1 + z^-2"]]},"floor":9}"#),
    );
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    // z^-1/(1 + z^-2) = Σ (-1)^k z^{-1-2k}
    let geometric: Vec<(i64, String)> = (0..5)
        .map(|k| (-1 - 2 * k, if k % 2 == 0 { "1/1" } else { "-1/1" }.to_string()))
        .rev()
        .collect();
    let x01 = &v["x"]["entries"][1];
    let y10 = &v["y"]["entries"][2];
    let prec = x01["prec"].as_i64().unwrap();
    assert!(prec >= 9);
    let window = |c: Vec<(i64, String)>| c.into_iter().filter(|(d, _)| *d >= -9).collect::<Vec<_>>();
    assert_eq!(window(coeffs(x01)), geometric);
    assert_eq!(window(coeffs(y10)), geometric);
    assert_eq!(
        coeffs(&v["t"]["entries"][3]),
        vec![(-2, "1/1".into()), (0, "1/1".into())]
    );
}

#[test]
fn gauss_outside_the_big_cell_is_an_error() {
    let out = run(&["gauss"], Some(r#"{"g":{"rows":[["0","1"],["1","0"]]}}"#));
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["error"]["kind"], "NotInBigCell");
}

#[test]
fn malformed_input_is_an_error() {
    let out = run(&["split"], Some("{"));
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["error"]["kind"], "Parse");
}

#[test]
fn retract_of_the_fixture() {
    let out = run(&["retract"], Some(r#"{"g":{"rows":[["1","z^2 + 1"],["0","z"]]}}"#));
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let g = &v["g"]["entries"];
    assert_eq!(coeffs(&g[0]), vec![(0, "1/1".into())]);
    assert_eq!(coeffs(&g[1]), vec![(0, "1/1".into())]);
    assert_eq!(coeffs(&g[2]), vec![]);
    assert_eq!(coeffs(&g[3]), vec![(1, "1/1".into())]);
}

#[test]
fn retract_with_a_bad_witness_is_predicate_false() {
    let input = r#"{"point":{"g":{"rows":[["1","z^2 + 1"],["0","z"]]},
        "witness":{"orbit":{"p":{"rows":[["z","2"],["1","0"]]},"lam":[1,0],"q":{"rows":[["0","1"],["1","1"]]}}}},
        "mu":[0,1],"floor":8}"#;
    let out = run(&["retract"], Some(input));
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["witnesses_valid"], false);
}

#[test]
fn lift_batch_of_fifty() {
    let out = run(
        &[
            "lift", "--n", "2", "--lambda", "1,0", "--mu", "0,1", "--tower", "3", "--trials", "50", "--seed", "7",
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let l = lines(&out);
    assert_eq!(l.len(), 51);
    assert!(l[..50]
        .iter()
        .all(|r| r["ok"] == true && r["report"]["steps"].as_array().unwrap().len() == 2));
    assert_eq!(l[50]["summary"]["passed"], 50);
}

#[test]
fn lift_over_a_free_square_zero_ring() {
    let out = run(
        &[
            "lift", "--lambda", "2,0", "--mu", "1,1", "--ring", "fsz(Q,2)", "--trials", "3",
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let l = lines(&out);
    assert_eq!(l[0]["report"]["steps"][0]["step"]["total"]["kind"], "free_square_zero");
}

#[test]
fn strata_with_containment() {
    let out = run(&["strata", "--lambda", "(2,0)", "--mu", "(0,2)", "--trials", "4"], None);
    assert_eq!(out.status.code(), Some(0));
    let l = lines(&out);
    let table = &l[l.len() - 2];
    assert_eq!(table["strata"], serde_json::json!([[2, 0], [1, 1]]));
    // every point satisfies the bound of its own stratum and of (2,0)
    assert_eq!(table["containment"][0][0], 4);
    assert_eq!(table["containment"][1], serde_json::json!([4, 4]));
}

#[test]
fn tangent_at_the_canonical_point() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("point.json");
    std::fs::write(
        &path,
        r#"{"g":{"rows":[["1","1"],["0","z"]]},
            "witness":{"orbit":{"p":{"rows":[["0","1"],["1","0"]]},"lam":[1,0],"q":{"rows":[["0","1"],["1","1"]]}}}}"#,
    )
    .unwrap();
    let out = run(&["tangent", "--mu", "0,1", "--input", path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let l = lines(&out);
    assert_eq!(l.len(), 2);
    assert_eq!(l[0]["report"]["corank"], 2);
    assert_eq!(l[0]["report"]["stable"], true);
}

#[test]
fn config_file_and_output_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let out_path = dir.path().join("out.ndjson");
    std::fs::write(&cfg, r#"{"lam":[1,0,0],"mu":[0,0,1],"trials":3,"seed":11}"#).unwrap();
    let out = run(
        &[
            "sample",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_path.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(text.lines().count(), 4);
    // flags override the file
    let out = run(&["sample", "--config", cfg.to_str().unwrap(), "--trials", "1"], None);
    assert_eq!(lines(&out).len(), 2);
    // a config for another command is rejected
    std::fs::write(&cfg, r#"{"command":"lift","lam":[1,0]}"#).unwrap();
    let out = run(&["sample", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn batch_output_is_deterministic_across_runs_and_threads() {
    let args = [
        "sample", "--lambda", "2,0", "--mu", "0,2", "--trials", "8", "--seed", "3",
    ];
    let a = run(&args, None);
    let b = run(&args, None);
    assert_eq!(a.stdout, b.stdout);
    let mut c = bin();
    let c = c.args(args).env("SLICE_FORGE_JOBS", "3").output().unwrap();
    assert_eq!(a.stdout, c.stdout);
    let d = run(&[&args[..], &["--jobs", "1"]].concat(), None);
    assert_eq!(a.stdout, d.stdout);
    let e = run(
        &[
            "sample", "--lambda", "2,0", "--mu", "0,2", "--trials", "8", "--seed", "4",
        ],
        None,
    );
    assert_ne!(a.stdout, e.stdout);
}

#[test]
fn per_trial_errors_stay_in_the_stream() {
    // window 1 cannot see every constraint of W^(2,0)_(0,2)
    let out = run(
        &[
            "tangent", "--lambda", "2,0", "--mu", "0,2", "--trials", "2", "--window", "1",
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(3));
    let l = lines(&out);
    assert_eq!(l.len(), 3);
    assert!(l[..2].iter().all(|r| r["error"]["kind"] == "UnstableWindow"));
    assert_eq!(l[2]["summary"]["errors"], 2);
}

#[test]
fn selftest_quick_passes_and_is_reproducible() {
    let a = run(&["selftest", "--quick"], None);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stdout));
    let text = String::from_utf8_lossy(&a.stdout);
    assert!(text.contains("PASS fixtures.gauss"));
    assert!(text.lines().last().unwrap().starts_with("selftest:"));
    let b = run(&["selftest", "--quick"], None);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn corrupted_fixture_names_the_suite() {
    let builtin = include_str!("../../core/fixtures/selftest.json");
    let corrupted = builtin.replace(
        r#""expected": { "g": { "rows": [["1", "1"]"#,
        r#""expected": { "g": { "rows": [["1", "-1"]"#,
    );
    assert_ne!(corrupted, builtin);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fixtures.json");
    std::fs::write(&path, corrupted).unwrap();
    let out = run(&["selftest", "--quick", "--fixtures", path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("FAIL fixtures.retract"), "{text}");
}
