use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_liftfield"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn help_exits_zero() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    for sub in ["train", "basis", "simulate", "optimize-shape", "bench-hash", "oracle", "serve"] {
        assert!(stdout(&o).contains(sub), "{sub} missing from help");
    }
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = run(&["simulate", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(run(&[]).status.code(), Some(2));
}

#[test]
fn invalid_scene_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "version = 1\ndim = 2\nsurprise = true\n").unwrap();
    let out = dir.path().join("x.ckpt");
    let o = run(&["train", "--scene", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
}

#[test]
fn bench_hash_prints_pass() {
    let o = run(&["bench-hash"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).lines().any(|l| l.starts_with("PASS equality check")), "{}", stdout(&o));
}

#[test]
fn train_basis_simulate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let scene = fixture("bar_1d.toml");
    let scene = scene.to_str().unwrap();
    for ckpt in ["a.ckpt", "b.ckpt"] {
        let o = run(&["train", "--scene", scene, "--out", &p(ckpt), "--epochs", "3", "--seed", "9", "--trace", &p("trace.csv")]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(p("a.ckpt")).unwrap(), std::fs::read(p("b.ckpt")).unwrap());
    let trace = std::fs::read_to_string(p("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 4);

    let o = run(&["basis", "--scene", scene, "--checkpoint", &p("a.ckpt"), "--out", &p("phi.csv"), "--points", "64"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let phi = std::fs::read_to_string(p("phi.csv")).unwrap();
    assert_eq!(phi.lines().next().unwrap(), "x,phi0,phi1,phi2,dphi0_dx,dphi1_dx,dphi2_dx");
    assert_eq!(phi.lines().count(), 65);

    let o = run(&["simulate", "--scene", scene, "--checkpoint", &p("a.ckpt"), "--out", &p("t.ndjson"), "--steps", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let traj = liftfield::scenes_io::import_trajectory(p("t.ndjson")).unwrap();
    assert_eq!(traj.frames.len(), 5);

    // a checkpoint trained for another scene is rejected
    let o = run(&["simulate", "--scene", fixture("crease_square.toml").to_str().unwrap(), "--checkpoint", &p("a.ckpt"), "--out", &p("u.ndjson")]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn oracle_writes_modes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("modes.csv");
    let cache = dir.path().join("cache");
    let bar = fixture("bar_1d.toml");
    let args = [
        "oracle",
        "--scene",
        bar.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--k",
        "3",
        "--cache",
        cache.to_str().unwrap(),
    ];
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("eigenvalues"));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 402);
    // second run hits the cache and reports the same numbers
    assert_eq!(stdout(&run(&args)), stdout(&o));
    let kirigami = run(&["oracle", "--scene", fixture("kirigami.toml").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(kirigami.status.code(), Some(3));
}
