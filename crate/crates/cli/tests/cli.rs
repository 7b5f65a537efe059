use std::path::Path;
use std::process::{Command, Output};

fn lebedev(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lebedev")).args(args).output().expect("spawn lebedev")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(csv_text: &str) -> Vec<Vec<String>> {
    csv_text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let o = lebedev(&["kernel", "--tau", "1", "--x", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--alpha"));
    assert_eq!(lebedev(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn forward_writes_one_row_per_tau() {
    let o = lebedev(&["forward", "--alpha", "0.5", "--tau", "0:6:25", "--function", "exp"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert_eq!(s.lines().next().unwrap(), "tau,value,err_est,converged");
    let r = rows(&s);
    assert_eq!(r.len(), 25);
    assert_eq!(r[24][0], "6.0");
    assert!(r.iter().all(|row| row[3] == "true"));
}

#[test]
fn forward_methods_agree() {
    let get = |m: &str| -> Vec<f64> {
        let o = lebedev(&["forward", "--alpha", "0.25", "--tau", "0,1,2.5", "--function", "gauss", "--method", m]);
        assert_eq!(o.status.code(), Some(0), "{m}: {}", String::from_utf8_lossy(&o.stderr));
        rows(&stdout(&o)).iter().map(|r| r[1].parse().unwrap()).collect()
    };
    let d = get("direct");
    for m in ["composition", "mellin"] {
        for (a, b) in d.iter().zip(get(m)) {
            assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()), "{m}: {a} vs {b}");
        }
    }
}

#[test]
fn config_file_merges_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "format = \"json\"\n[kernel]\nalpha = 0.25\nroute = \"cosh\"\n").unwrap();
    let o = lebedev(&["kernel", "--config", path(&cfg), "--tau", "1", "--x", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["metadata"]["route"], "cosh");
    assert_eq!(v["rows"][0]["alpha"], 0.25);

    let o = lebedev(&["kernel", "--config", path(&cfg), "--alpha", "0.75", "--format", "csv", "--tau", "1", "--x", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(rows(&stdout(&o))[0][0], "0.75");

    std::fs::write(&cfg, "bogus = 1\n").unwrap();
    let o = lebedev(&["kernel", "--config", path(&cfg), "--alpha", "0", "--tau", "1", "--x", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn forward_output_feeds_invert_unmodified() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.csv");
    let o = lebedev(&[
        "forward", "--alpha", "0.5", "--tau", "0:120:961", "--function", "moment(0.5)", "--method", "mellin", "-o", path(&f),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let o = lebedev(&["invert", "--alpha", "0.5", "--input", path(&f), "--x", "0.5,1,2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for r in rows(&stdout(&o)) {
        let (x, v): (f64, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap());
        let exact = x * (1.5 - x) * (-x).exp();
        assert!((v - exact).abs() < 1e-4, "x = {x}: {v} vs {exact}");
    }
}

#[test]
fn output_is_deterministic() {
    let args = ["verify", "--suite", "properties", "--cases", "4", "--seed", "11"];
    let (a, b) = (lebedev(&args), lebedev(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = lebedev(&["verify", "--suite", "properties", "--cases", "4", "--seed", "12"]);
    assert_ne!(a.stdout, c.stdout);

    let args = ["kernel", "--alpha", "0.3", "--tau", "0:4:9", "--x", "0.5:3:6", "--format", "json"];
    assert_eq!(lebedev(&args).stdout, lebedev(&args).stdout);
}

#[test]
fn json_document_shape() {
    let o = lebedev(&["adjoint", "--alpha", "0.5", "--x", "0.5,1", "--function", "gauss", "--format", "json", "--output", "-"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "adjoint");
    assert_eq!(v["columns"], serde_json::json!(["x", "value", "err_est", "converged"]));
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert!(v["metadata"]["tolerances"]["rel_tol"].is_number());
}

#[test]
fn precondition_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.csv");
    std::fs::write(&f, "tau,value\n0,1\n1,0.5\n2,0.25\n3,0.125\n").unwrap();
    for args in [
        vec!["invert", "--alpha", "1.5", "--input", path(&f), "--x", "1"],
        vec!["kernel", "--alpha", "0.5", "--tau", "1", "--x", "1", "--tol", "1"],
        vec!["forward", "--alpha", "0.5", "--tau", "1", "--function", "sin"],
        vec!["pde", "--n", "1", "--r", "1", "--theta", "7"],
        vec!["kernel", "--alpha", "0.5", "--tau", "2:1:3", "--x", "1"],
    ] {
        let o = lebedev(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"), "{args:?}");
    }
}

#[test]
fn invert_adjoint_recovers_gaussian() {
    let o = lebedev(&["invert-adjoint", "--alpha", "0.5", "--x", "1", "--function", "gauss"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = &rows(&stdout(&o))[0];
    let v: f64 = r[1].parse().unwrap();
    assert!((v - (-1.0f64).exp()).abs() < 2e-3, "{v}");
}

#[test]
fn pde_field_and_residual() {
    let o = lebedev(&["pde", "--n", "2", "--r", "0.8:1.2:5", "--theta", "0:0.4:5", "--residual", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 9);
    assert!(v["summary"]["max_residual"].as_f64().unwrap() < 0.1);

    let o = lebedev(&["pde", "--n", "-2", "--r", "1", "--theta", "0,0.5"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(rows(&stdout(&o)).len(), 2);
}

#[test]
fn verify_identities_pass() {
    let o = lebedev(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let s = stdout(&o);
    assert_eq!(s.lines().next().unwrap(), "check,value,tolerance,pass");
    assert!(s.lines().skip(1).all(|l| l.ends_with(",true")));
}
