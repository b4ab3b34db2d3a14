use std::fs;
use std::process::Command;

fn reconlab(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_reconlab"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn selftest_succeeds() {
    let (code, stdout, _) = reconlab(&["spectral", "selftest"]);
    assert_eq!(code, 0);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 4);
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "kind = sns_energy\nbogus = 1\n").unwrap();
    let (code, _, stderr) = reconlab(&["--config", bad.to_str().unwrap(), "sns", "run"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("bogus"));

    let wrong = dir.path().join("wrong.cfg");
    fs::write(&wrong, "kind = sns_energy\n").unwrap();
    let (code, _, _) = reconlab(&["--config", wrong.to_str().unwrap(), "advdiff", "sweep"]);
    assert_eq!(code, 2);
}

#[test]
fn numerical_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let rows = dir.path().join("rows.csv");
    fs::write(&rows, "group,label,eta,status,error,t_star\npositivity,a,0.01,ok,,3\n").unwrap();
    let (code, _, _) = reconlab(&["fit", "--rows", rows.to_str().unwrap()]);
    assert_eq!(code, 3);
}

#[test]
fn sweep_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let rows = dir.path().join("rows.csv");
    let mut text = String::from("# synthetic\ngroup,label,eta,status,error,t_star\n");
    for eta in [1e-2, 3e-3, 1e-3, 3e-4] {
        let t = 2.0 * f64::ln(eta).abs() / eta.sqrt();
        text.push_str(&format!("positivity,eta={eta},{eta},ok,,{t}\n"));
    }
    text.push_str("positivity,eta=1e-4,0.0001,failed,\"boom, twice\",\n");
    fs::write(&rows, text).unwrap();
    let (code, stdout, _) = reconlab(&["fit", "--rows", rows.to_str().unwrap()]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["best"], "accelerated");
    assert_eq!(v["etas"].as_array().unwrap().len(), 4);
}

#[test]
fn topo_scan_writes_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("a.cfg");
    fs::write(&cfg, "kind = theoremA_reconnection\ngrid3 = 16\n").unwrap();
    let (code, stdout, _) = reconlab(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "topo", "scan"]);
    assert_eq!(code, 0, "{stdout}");
    let zeros = fs::read_to_string(dir.path().join("zeros.jsonl")).unwrap();
    assert_eq!(zeros.lines().count(), 8);
}
