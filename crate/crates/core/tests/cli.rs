use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nhresponse")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Data rows of CSV output keyed by column name.
fn rows(csv: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let data = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    (header, data)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name} in {header:?}"))
}

fn metadata(csv: &str) -> Vec<(String, String)> {
    csv.lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_owned(), v.to_owned()))
        .collect()
}

#[test]
fn rejects_too_few_points() {
    let o = run(&["sigma", "--points", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("points"));
}

#[test]
fn rejects_unknown_framework_and_lists_choices() {
    let o = run(&["sigma", "--framework", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for name in ["standard", "phqm-j", "phqm-tilde", "postselected"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn rejects_unstable_standard_point() {
    let o = run(&["sigma-dc", "--m", "2", "--gamma", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!stderr(&o).is_empty());
}

#[test]
fn output_is_deterministic() {
    let args = ["sigma", "--framework", "phqm-j", "--m", "0.6", "--points", "4"];
    let (a, b) = (run(&args), run(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn metadata_records_every_parameter() {
    let o = run(&["osr", "--m", "0.5", "--framework", "phqm-tilde"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let meta = metadata(&stdout(&o));
    let keys: Vec<&str> = meta.iter().map(|(k, _)| k.as_str()).collect();
    for key in [
        "command", "framework", "v_f", "delta", "m", "mu", "gamma", "delta0", "temperature", "rel_tol", "abs_tol",
        "max_subdivisions", "tail_map", "units",
    ] {
        assert!(keys.contains(&key), "missing {key}: {keys:?}");
    }
    assert!(meta.contains(&("framework".into(), "phqm-tilde".into())));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"m": 0.3, "gamma": 2.0, "framework": "phqm-j"}"#).unwrap();
    let o = run(&["sigma-dc", "--config", cfg.to_str().unwrap(), "--m", "0.6"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let meta = metadata(&stdout(&o));
    let get = |k: &str| meta.iter().find(|(key, _)| key == k).unwrap().1.parse::<f64>().unwrap();
    assert_eq!(get("m"), 0.6);
    assert_eq!(get("gamma"), 2.0);
}

#[test]
fn config_rejects_unknown_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"mass": 0.3}"#).unwrap();
    assert_eq!(run(&["osr", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn json_output_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("osr.json");
    let o = run(&["osr", "--m", "0.5", "--framework", "phqm-tilde", "--format", "json", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["metadata"]["command"], "osr");
    let cols: Vec<&str> = v["columns"].as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect();
    let row = v["rows"][0].as_array().unwrap();
    let at = |name: &str| row[cols.iter().position(|c| *c == name).unwrap()].as_f64().unwrap();
    assert!((at("optical_sum") - at("closed_form")).abs() < 1e-6);
}

#[test]
fn validate_passes_for_default_configuration() {
    let o = run(&["validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains(" 0 failed"));
}

#[test]
fn validate_flags_tampered_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"m": 0.6, "gamma": 0.5, "framework": "standard"}"#).unwrap();
    let o = run(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.contains("FAIL") && l.contains("gamma=0.5")), "{text}");
}

#[test]
fn tachyonic_spectrum_has_imaginary_energies() {
    let o = run(&["spectral", "--m", "1.3", "--points", "3", "--omega-points", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, data) = rows(&stdout(&o));
    let (k, im) = (column(&header, "k"), column(&header, "im_xi_plus"));
    let at_k0: Vec<&Vec<f64>> = data.iter().filter(|r| r[k] == 0.0).collect();
    assert!(!at_k0.is_empty());
    for r in at_k0 {
        assert!((r[im].abs() - 0.69f64.sqrt()).abs() < 1e-9);
    }
    // Far from k = 0 the bands are real again.
    assert!(data.iter().filter(|r| r[k].abs() == 3.0).all(|r| r[im] == 0.0));
}

#[test]
fn dc_sweep_matches_closed_form() {
    let o = run(&["sigma-dc", "--framework", "standard", "--sweep", "m", "--start", "0", "--stop", "0.9", "--points", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, data) = rows(&stdout(&o));
    let (num, closed) = (column(&header, "sigma_dc"), column(&header, "closed_form"));
    assert_eq!(data.len(), 4);
    for r in &data {
        assert!((r[num] - r[closed]).abs() < 1e-6 * r[closed]);
    }
    assert!((data[0][num] - 2.25 / 3.25f64.powf(1.5)).abs() < 1e-6);
}

#[test]
fn transformed_current_gains_optical_weight_near_linear_point() {
    let o = run(&["osr", "--framework", "phqm-tilde", "--sweep", "m", "--start", "0.75", "--stop", "0.99", "--points", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, data) = rows(&stdout(&o));
    let s = column(&header, "optical_sum");
    assert!(data[2][s] > data[0][s] && data[2][s] > 1.0, "{data:?}");
}
