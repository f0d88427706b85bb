use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hicomsfem"));
    c.env("HICOMSFEM_THREADS", "2");
    c
}

fn run(args: &[&str]) -> std::process::Output {
    let out = bin().args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn layout_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        run(&["layout", "--n", "36", "--radius", "0.07", "--seed", "1", "--out", d.to_str().unwrap()]);
    }
    assert_eq!(read(a.join("geometry.json")), read(b.join("geometry.json")));
    let geom: serde_json::Value = serde_json::from_str(&read(a.join("geometry.json"))).unwrap();
    assert_eq!(geom["inclusions"].as_array().unwrap().len(), 36);
    let manifest: serde_json::Value = serde_json::from_str(&read(a.join("manifest.json"))).unwrap();
    assert_eq!(manifest["command"], "layout");
}

#[test]
fn empty_layout_and_bad_pattern() {
    let dir = tempfile::tempdir().unwrap();
    run(&["layout", "--n", "0", "--out", dir.path().to_str().unwrap()]);
    let out = bin().args(["layout", "--n", "3", "--pattern", "spiral"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn sweep_delta_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(
        &cfg,
        r#"{
            "schema_version": 1,
            "geometry": {"layout": {"n": 7, "radius": 0.1, "pattern": "rings"}},
            "h": 0.045,
            "mode": "sweep-delta",
            "delta": [0.1, 0.3],
            "output": "run"
        }"#,
    )
    .unwrap();
    for sub in ["x", "y"] {
        let out = dir.path().join(sub);
        run(&["sweep-delta", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "4"]);
    }
    let a = read(dir.path().join("x/sweep_delta.csv"));
    assert!(a.starts_with("delta,e_u0,e_u00,e_uc\n"));
    assert_eq!(a.lines().count(), 3);
    assert_eq!(a, read(dir.path().join("y/sweep_delta.csv")));
}

#[test]
fn mesh_then_fine_solve_from_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    run(&["layout", "--n", "1", "--radius", "0.2", "--out", d]);
    let geom = dir.path().join("geometry.json");
    run(&["mesh", "--geometry", geom.to_str().unwrap(), "--h", "0.08", "--out", d]);
    assert!(dir.path().join("mesh.txt").exists());
    let out = dir.path().join("fine");
    let o = run(&[
        "solve-fine",
        "--geometry",
        geom.to_str().unwrap(),
        "--h",
        "0.08",
        "--eta",
        "100",
        "--out",
        out.to_str().unwrap(),
    ]);
    let listed = String::from_utf8(o.stdout).unwrap();
    assert!(listed.lines().any(|l| l.ends_with("fine.vtk")));
    assert!(out.join("manifest.json").exists());
}

#[test]
fn missing_inputs_fail() {
    let out = bin().args(["sweep-eta", "--eta", "10"]).output().unwrap();
    assert!(!out.status.success());
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"schema_version": 1, "geometry": {"file": "nope.json"}, "h": 0.1, "mode": "fine", "eta": [1]}"#)
        .unwrap();
    let out = bin().args(["solve-fine", "--config", cfg.to_str().unwrap()]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not exist"));
}
