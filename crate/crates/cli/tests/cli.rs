use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bellshrink::shrinkage::EstimatorKind;
use bellshrink_cli::exit;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bellshrink"))
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/football_like.csv")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn validator() -> jsonschema::Validator {
    let text =
        fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/report.schema.json"))
            .unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn assert_valid(report: &Value) {
    let v = validator();
    let errors: Vec<String> = v.iter_errors(report).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

fn write_temp(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn reports_validate_against_schema() {
    let f = fixture();
    let f = f.to_str().unwrap();
    for args in [
        vec!["fit", "--input", f, "--format", "json"],
        vec![
            "fit",
            "--input",
            f,
            "--format",
            "json",
            "--estimators",
            "mle",
            "--seed",
            "4",
            "--timestamp",
        ],
        vec!["diagnose", "--input", f, "--format", "json"],
        vec!["compare", "--input", f, "--format", "json"],
        vec![
            "compare", "--input", f, "--format", "json", "--k", "0.5", "--d", "-0.5",
        ],
    ] {
        let report = json_of(&run(&args));
        assert_eq!(report["schema_version"], "1.0.0");
        assert_valid(&report);
    }
}

#[test]
fn out_file_matches_json_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested/report.json");
    let f = fixture();
    let o = run(&[
        "compare",
        "--input",
        f.to_str().unwrap(),
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(fs::read(&out).unwrap(), o.stdout);
}

#[test]
fn mle_only_fit() {
    let f = fixture();
    let r = json_of(&run(&[
        "fit",
        "--input",
        f.to_str().unwrap(),
        "--estimators",
        "mle",
        "--format",
        "json",
    ]));
    let est = r["estimators"].as_array().unwrap();
    assert_eq!(est.len(), 1);
    assert_eq!(est[0]["estimator"], "MLE");
    assert!(est[0]["k"].is_null());
    assert_eq!(r["inputs"]["coefficients"][0], "(Intercept)");
    assert_eq!(r["inputs"]["p"], 7);
}

#[test]
fn overrides_are_verbatim() {
    let f = fixture();
    let r = json_of(&run(&[
        "fit",
        "--input",
        f.to_str().unwrap(),
        "--k",
        "1.0",
        "--d",
        "0.0",
        "--format",
        "json",
        "--no-intercept",
    ]));
    for e in r["estimators"].as_array().unwrap().iter().skip(1) {
        assert_eq!(e["k"].as_f64(), Some(1.0));
        assert_eq!(e["d"].as_f64(), Some(0.0));
        assert_eq!(e["k_source"], "override");
        assert_eq!(e["d_source"], "override");
        assert!(e["mse"].as_f64().unwrap().is_finite());
    }
}

#[test]
fn compare_shape_and_reductions() {
    let f = fixture();
    let r = json_of(&run(&[
        "compare",
        "--input",
        f.to_str().unwrap(),
        "--format",
        "json",
    ]));
    assert_eq!(r["inputs"]["intercept"], false);
    let kinds: Vec<&str> = r["estimators"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["estimator"].as_str().unwrap())
        .collect();
    assert_eq!(kinds, ["MLE", "LTE", "AULTE", "MAULTE"]);
    assert_eq!(r["estimators"][0]["squared_bias"].as_f64(), Some(0.0));
    assert_eq!(r["theorems"].as_array().unwrap().len(), 7);

    // at d = −k both almost-unbiased estimators collapse onto the MLE
    let r = json_of(&run(&[
        "compare",
        "--input",
        f.to_str().unwrap(),
        "--format",
        "json",
        "--k",
        "0.7",
        "--d",
        "-0.7",
    ]));
    let mle = &r["estimators"][0];
    for i in [2, 3] {
        let e = &r["estimators"][i];
        assert_eq!(e["squared_bias"].as_f64(), Some(0.0));
        let (a, b) = (e["mse"].as_f64().unwrap(), mle["mse"].as_f64().unwrap());
        assert!((a - b).abs() <= 1e-12 * b);
        for (x, y) in e["coefficients"]
            .as_array()
            .unwrap()
            .iter()
            .zip(mle["coefficients"].as_array().unwrap())
        {
            assert!((x.as_f64().unwrap() - y.as_f64().unwrap()).abs() < 1e-12);
        }
    }
}

#[test]
fn compare_csv_is_table_shaped() {
    let f = fixture();
    let o = run(&["compare", "--input", f.to_str().unwrap(), "--format", "csv"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "term,MLE,LTE,AULTE,MAULTE");
    assert!(lines.iter().any(|l| l.starts_with("MSE,")));
    assert!(lines.iter().any(|l| l.starts_with("SB,0,")));
}

#[test]
fn curve_csv() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("curve.csv");
    let f = fixture();
    let o = run(&[
        "compare",
        "--input",
        f.to_str().unwrap(),
        "--curve",
        curve.to_str().unwrap(),
        "--curve-points",
        "11",
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(curve).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert!(text.starts_with("d,MLE,LTE,AULTE,MAULTE\n"));
}

#[test]
fn diagnose_orthogonal_design() {
    // Hadamard columns with a constant response: β̂ = 0, Ŵ ∝ I, so CN = 1.
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("y,a,b,c\n");
    for _ in 0..5 {
        for row in ["1,1,1", "-1,1,-1", "1,-1,-1", "-1,-1,1"] {
            csv.push_str(&format!("1,{row}\n"));
        }
    }
    let p = write_temp(dir.path(), "orth.csv", &csv);
    let r = json_of(&run(&[
        "diagnose",
        "--input",
        p.to_str().unwrap(),
        "--format",
        "json",
    ]));
    let cn = r["diagnostics"]["condition_number"].as_f64().unwrap();
    assert!((cn - 1.0).abs() < 1e-8, "{cn}");
    assert_eq!(r["diagnostics"]["severe"], false);
    assert!(r["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn diagnose_warns_on_collinear_fixture() {
    let f = fixture();
    let o = run(&[
        "diagnose",
        "--input",
        f.to_str().unwrap(),
        "--format",
        "json",
    ]);
    let r = json_of(&o);
    assert_eq!(r["diagnostics"]["severe"], true);
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning: condition number"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let missing = run(&[
        "fit",
        "--input",
        write_temp(d, "a.csv", "y,a\n1,2\n2,3\n0,1\n")
            .to_str()
            .unwrap(),
        "--features",
        "b",
    ]);
    assert_eq!(missing.status.code(), Some(exit::SCHEMA));
    let frac = run(&[
        "fit",
        "--input",
        write_temp(d, "b.csv", "y,a\n1,2\n2.5,3\n0,1\n")
            .to_str()
            .unwrap(),
    ]);
    assert_eq!(frac.status.code(), Some(exit::VALIDATION));
    assert!(String::from_utf8_lossy(&frac.stderr).contains("row 2"));
    let dup = run(&[
        "compare",
        "--input",
        write_temp(d, "c.csv", "y,a,b\n1,2,2\n2,3,3\n0,1,1\n4,0.5,0.5\n")
            .to_str()
            .unwrap(),
    ]);
    assert_eq!(dup.status.code(), Some(exit::COLLINEARITY));
    let bad_k = run(&["fit", "--input", fixture().to_str().unwrap(), "--k", "-1"]);
    assert_eq!(bad_k.status.code(), Some(exit::VALIDATION));
    let cfg = write_temp(
        d,
        "cfg.json",
        r#"{"n":50,"p":2,"rho":0.5,"seed":1,"colour":"red"}"#,
    );
    let unknown = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        d.join("o").to_str().unwrap(),
    ]);
    assert_eq!(unknown.status.code(), Some(exit::SCHEMA));
    let nofile = run(&["fit", "--input", d.join("absent.csv").to_str().unwrap()]);
    assert_eq!(nofile.status.code(), Some(exit::OTHER));
}

#[test]
fn sample_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = run(&[
        "sample",
        "--n",
        "100",
        "--p",
        "4",
        "--rho",
        "0.9",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("y,x1,x2,x3,x4"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 100);
    assert!(rows
        .iter()
        .all(|r| r.split(',').count() == 5 && r.split(',').next().unwrap().parse::<u64>().is_ok()));

    let data = bellshrink_cli::io::parse_dataset(
        &out,
        &bellshrink_cli::io::ColumnSpec {
            response: "y".into(),
            features: None,
            intercept: false,
        },
    )
    .unwrap();
    let mut rng = bellshrink::Rng::new(3);
    let x = bellshrink::simulation::gen_design(&mut rng, 100, 4, 0.9, false).unwrap();
    let y = bellshrink::simulation::gen_response(&mut rng, &x, &[0.5; 4]).unwrap();
    assert_eq!(data.x(), &x);
    assert_eq!(data.y(), y);
}

#[test]
fn simulate_smoke_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_temp(
        dir.path(),
        "cfg.json",
        r#"{"n":80,"p":3,"rho":0.9,"seed":5,"n_reps":10}"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, threads) in [(&a, "1"), (&b, "3")] {
        let o = bin()
            .args([
                "simulate",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .env("BELLSHRINK_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let csv_a = fs::read(a.with_extension("csv")).unwrap();
    assert_eq!(csv_a, fs::read(b.with_extension("csv")).unwrap());
    assert_eq!(
        fs::read(a.with_extension("json")).unwrap(),
        fs::read(b.with_extension("json")).unwrap()
    );
    let text = String::from_utf8(csv_a).unwrap();
    assert_eq!(text.lines().count(), 2);
    let json: Value = serde_json::from_slice(&fs::read(a.with_extension("json")).unwrap()).unwrap();
    assert_eq!(json["config"]["seed"], 5);
    assert_eq!(
        json["rows"][0]["stats"].as_array().unwrap().len(),
        EstimatorKind::ALL.len()
    );
}

#[test]
fn bad_thread_env_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_temp(
        dir.path(),
        "cfg.json",
        r#"{"n":30,"p":2,"rho":0.5,"seed":5,"n_reps":2}"#,
    );
    let o = bin()
        .args([
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().join("o").to_str().unwrap(),
        ])
        .env("BELLSHRINK_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(exit::VALIDATION));
}
