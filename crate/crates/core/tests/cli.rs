use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scene(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenes").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conewave"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn check_on_square_passes_all_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("check");
    let o = run(&["--out", s(&out), "check", s(&scene("square.json")), "--assumption", "all"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for k in 1..=3 {
        assert_eq!(json(&out.join(format!("assumption{k}.json")))["verdict"], "Pass");
    }
    let t0 = json(&out.join("assumption1.json"))["certificates"][0]["T0"].as_f64().unwrap();
    assert!(t0.is_finite() && t0 > 0.0);
}

#[test]
fn check_on_slits_fails_collinearity() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("slit");
    let o = run(&["--out", s(&out), "check", s(&scene("slits.json")), "--assumption", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&out.join("assumption2.json"))["verdict"], "Fail");
}

#[test]
fn missing_scene_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--out", s(dir.path()), "check", s(&dir.path().join("none.json"))]);
    assert_eq!(o.status.code(), Some(64));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(64));
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, "[1, 2").unwrap();
    let o = run(&["--config", s(&cfg), "check", s(&scene("square.json"))]);
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn config_file_replays_a_run_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let o = run(&["--out", s(&a), "--seed", "3", "check", s(&scene("square.json")), "--assumption", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let b = dir.path().join("b");
    let o = run(&["--config", s(&a.join("config.json")), "--out", s(&b)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        std::fs::read(a.join("assumption1.json")).unwrap(),
        std::fs::read(b.join("assumption1.json")).unwrap()
    );
    let c = dir.path().join("c");
    let o = run(&["--config", s(&a.join("config.json")), "--out", s(&c), "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&c.join("config.json"))["seed"], "9");
}

#[test]
fn manifest_hashes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dbl");
    let surf = out.join("surface.json");
    let o = run(&["--out", s(&out), "scene", "double", s(&scene("square.json")), "-o", s(&surf)]);
    assert_eq!(o.status.code(), Some(0));
    let m = json(&out.join("manifest.json"));
    let files = m["files"].as_array().unwrap();
    assert_eq!(files.len(), 2);
    for f in files {
        let p = Path::new(f["path"].as_str().unwrap());
        let p = if p.is_absolute() { p.to_path_buf() } else { out.join(p) };
        let bytes = std::fs::read(&p).unwrap();
        use sha2::Digest;
        assert_eq!(hex::encode(sha2::Sha256::digest(&bytes)), f["sha256"].as_str().unwrap());
    }
    // The doubled surface is itself a valid input.
    let o = run(&["--out", s(&dir.path().join("c")), "check", s(&surf), "--assumption", "3"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn csv_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("t{k}"));
        let o = run(&[
            "--out",
            s(&out),
            "trace",
            s(&scene("figure1.json")),
            "--start",
            "0,0,0,0",
            "--policy",
            "fan:4",
            "--horizon",
            "14",
        ]);
        assert_eq!(o.status.code(), Some(0));
        let out2 = dir.path().join(format!("w{k}"));
        let o = run(&["--out", s(&out2), "words", s(&scene("square.json")), "--scan", "ledger", "--s", "1/2"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        csv.push((std::fs::read(out.join("chains.csv")).unwrap(), std::fs::read(out2.join("ledger.csv")).unwrap()));
    }
    assert_eq!(csv[0], csv[1]);
    assert!(String::from_utf8_lossy(&csv[0].1).starts_with("word,times,tags,rule,outputOrder\n"));
}

#[test]
fn fdtd_writes_probe_and_arrival_tables() {
    let dir = tempfile::tempdir().unwrap();
    let probes = dir.path().join("probes.txt");
    std::fs::write(&probes, "x,y\n0,1.4\n-1.2,0.9,1\n").unwrap();
    let out = dir.path().join("f");
    let o = run(&[
        "--out",
        s(&out),
        "fdtd",
        s(&scene("square.json")),
        "--h",
        "0.03125",
        "--T",
        "2",
        "--source",
        "-1.2,0.3,1",
        "--probes",
        s(&probes),
        "--doubled",
        "--snapshot",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let probes_csv = std::fs::read_to_string(out.join("probes.csv")).unwrap();
    assert!(probes_csv.starts_with("t,probeId,u,dudt,E_chi,"));
    let arrivals = std::fs::read_to_string(out.join("arrivals.csv")).unwrap();
    assert_eq!(arrivals.lines().count(), 3);
    assert!(out.join("snapshot_sheet1.bin").exists());
    // A CFL violation is an error, not a usage problem.
    let o = run(&["--out", s(&out), "fdtd", s(&scene("square.json")), "--h", "0.1", "--dt", "0.2", "--source", "-1.2,0.3,1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_sections_follow_the_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("bundle");
    let trace = bundle.join("trace");
    let o = run(&[
        "--out",
        s(&trace),
        "trace",
        s(&scene("square.json")),
        "--start",
        "-1.5,0.2,0.1,0",
        "--horizon",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(0));

    let r1 = dir.path().join("r1");
    assert_eq!(run(&["--out", s(&r1), "report", s(&bundle)]).status.code(), Some(0));
    let md = std::fs::read_to_string(r1.join("summary.md")).unwrap();
    assert!(md.contains("## Trajectories"));
    assert!(!md.contains("## Assumptions") && !md.contains("Two-obstacle"));

    let o = run(&["--out", s(&bundle.join("check")), "check", s(&scene("square.json"))]);
    assert_eq!(o.status.code(), Some(0));
    let r2 = dir.path().join("r2");
    assert_eq!(run(&["--out", s(&r2), "report", s(&bundle)]).status.code(), Some(0));
    let md = std::fs::read_to_string(r2.join("summary.md")).unwrap();
    assert!(md.contains("## Assumptions") && md.contains("T0 ="));
    let fig = std::fs::read_to_string(r2.join("figure1.svg")).unwrap();
    assert!(fig.contains("stroke-dasharray"));

    // Tampering is reported.
    std::fs::write(bundle.join("check/assumption2.json"), "{}").unwrap();
    let o = run(&["--out", s(&dir.path().join("r3")), "report", s(&bundle)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("hash mismatch"));

    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    assert_eq!(run(&["--out", s(&dir.path().join("r4")), "report", s(&empty)]).status.code(), Some(2));
}
