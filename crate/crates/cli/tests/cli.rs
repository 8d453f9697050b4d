use std::path::Path;
use std::process::{Command, Output};

fn qelab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qelab"))
        .args(args)
        .arg(format!("--output-dir={}", out.display()))
        .output()
        .expect("binary runs")
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let mut rd = csv::Reader::from_path(path).unwrap();
    let idx = rd.headers().unwrap().iter().position(|h| h == name).unwrap();
    rd.records().map(|r| r.unwrap()[idx].parse().unwrap()).collect()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn km_compare_is_close_for_a_large_graph() {
    let dir = tempfile::tempdir().unwrap();
    let o = qelab(&["km-compare", "--q=2", "--sizes=1000"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let d = column(&dir.path().join("km_summary.csv"), "sup_cdf_distance");
    assert!(d[0] < 0.05, "{d:?}");
    let m = manifest(dir.path());
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(m["config"]["sizes"], serde_json::json!([1000]));
    assert!(m["tasks"].as_array().unwrap().iter().all(|t| t["error"].is_null()));
}

#[test]
fn nb_spectrum_on_petersen() {
    let dir = tempfile::tempdir().unwrap();
    let o = qelab(&["nb-spectrum", "--graph=petersen"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let err = column(&dir.path().join("nb_pairing.csv"), "abs_error");
    assert_eq!(err.len(), 30);
    assert!(err.iter().all(|&e| e < 1e-8));
}

#[test]
fn invalid_weights_exit_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = qelab(&["anis-density", "--p=0.5,0.3,0.3"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`p`"));
    let o = qelab(&["variance", "--sizes=200,100"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`sizes`"));
}

#[test]
fn flags_require_equals() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_qelab")).args(["generate", "--q", "2"]).current_dir(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"q": 2, "sizes": [30, 40], "seeds": [5, 6]}"#).unwrap();
    let out = dir.path().join("out");
    let o = qelab(&["geometry", &format!("--config={}", cfg.display()), "--seeds=9"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(manifest(&out)["config"]["seeds"], serde_json::json!([9]));
    assert_eq!(column(&out.join("geometry.csv"), "n"), vec![30.0, 40.0]);

    std::fs::write(&cfg, r#"{"q": 2, "colour": "red"}"#).unwrap();
    let o = qelab(&["geometry", &format!("--config={}", cfg.display())], &out);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unlabelled_graph_for_anisotropic_transfer_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = qelab(&["transfer-decay", "--graph=petersen"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(manifest(dir.path())["tasks"].as_array().unwrap().iter().any(|t| !t["error"].is_null()));
}

#[test]
fn reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<_> = ["--jobs=1", "--jobs=4"]
        .iter()
        .map(|jobs| {
            let o = qelab(&["anis-variance", "--p=0.5,0.3,0.2", "--sizes=40,60,80", "--seeds=1,2", jobs], dir.path());
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            let d = std::fs::read_to_string(dir.path().join("decay.csv")).unwrap();
            let h = manifest(dir.path())["config_hash"].clone();
            (d, h)
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn every_command_runs_on_a_small_input() {
    let cases: &[&[&str]] = &[
        &["generate", "--sizes=20"],
        &["spectrum", "--sizes=20"],
        &["operators-selftest", "--sizes=20"],
        &["variance", "--sizes=30,40,50"],
        &["nb-variance", "--sizes=20"],
        &["flow-average", "--sizes=20", "--times=5", "--shell-cap=2"],
        &["anis-green", "--p=0.5,0.3,0.2", "--lambda-grid=-0.9,0.9,7", "--eta=0.01"],
        &["anis-density", "--p=0.5,0.3,0.2", "--lambda-grid=0.2,0.8,4"],
        &["anis-cylinders", "--p=0.5,0.3,0.2", "--lambda-grid=0.2,0.8,4", "--depth=2"],
        &["transfer-decay", "--p=0.5,0.3,0.2", "--sizes=20", "--lambda-grid=0.5,0.5,1", "--shells=1"],
    ];
    for args in cases {
        let dir = tempfile::tempdir().unwrap();
        let o = qelab(args, dir.path());
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let files = manifest(dir.path())["files"].as_array().unwrap().clone();
        assert!(!files.is_empty());
        for f in files {
            assert!(dir.path().join(f.as_str().unwrap()).exists());
        }
    }
}
