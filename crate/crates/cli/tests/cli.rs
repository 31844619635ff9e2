use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use roadgrowth_cli::commands::checkpoints;
use roadgrowth_cli::manifest::{manifest_path, read_value};

fn dir(name: &str) -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roadgrowth")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(d: &PathBuf, rel: &str) -> String {
    d.join(rel).to_str().unwrap().to_string()
}

#[test]
fn evaluating_the_observed_map_is_perfect() {
    let d = dir("perfect");
    let (s, o) = (p(&d, "s"), p(&d, "o"));
    ok(&["synth", "--seed", "1", "--out", &s]);
    let t2 = p(&d, "s/t2.asc");
    let stdout = ok(&["evaluate", "--scenario", &s, "--pred", &t2, "--out", &o]);
    assert!(stdout.contains("FoM=1"), "{stdout}");
    assert!(stdout.contains("OA=1"), "{stdout}");
    assert!(d.join("o/metrics.csv").is_file());
    assert!(d.join("o/errors.ppm").is_file());
}

#[test]
fn exit_codes() {
    let d = dir("codes");
    let s = p(&d, "s");
    ok(&["synth", "--out", &s]);

    // bad configuration
    let out = run(&["pbr", "--scenario", &s, "--rep-size", "3", "--out", &p(&d, "o")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kind=validation"));

    // missing input
    let out = run(&["index", "--roads", &p(&d, "nope.geojson"), "--scenario", &s, "--out", &p(&d, "o")]);
    assert_eq!(out.status.code(), Some(2));

    // malformed grid
    fs::write(d.join("bad.asc"), "ncols 2\nnrows 2\n").unwrap();
    let out = run(&["evaluate", "--scenario", &s, "--pred", &p(&d, "bad.asc"), "--out", &p(&d, "o")]);
    assert_eq!(out.status.code(), Some(2));

    // usage
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kind=usage"));
    assert_eq!(run(&["--help"]).status.code(), Some(0));

    // output directory that cannot be created
    fs::write(d.join("file"), "x").unwrap();
    let out = run(&["synth", "--out", &p(&d, "file/sub")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let d = dir("config");
    let cfg = d.join("run.cfg");
    fs::write(&cfg, "# synthetic settings\nrows = 20\ncols=24\nseed=5\n").unwrap();
    let (a, b) = (p(&d, "a"), p(&d, "b"));
    ok(&["--config", cfg.to_str().unwrap(), "synth", "--out", &a]);
    ok(&["--config", cfg.to_str().unwrap(), "synth", "--cols", "30", "--out", &b]);
    let header = |path: String| fs::read_to_string(path).unwrap().lines().take(2).collect::<Vec<_>>().join(" ");
    assert_eq!(header(p(&d, "a/t0.asc")), "ncols 24 nrows 20");
    assert_eq!(header(p(&d, "b/t0.asc")), "ncols 30 nrows 20");

    fs::write(&cfg, "no_such_key=1\n").unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "synth", "--out", &a]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn manifests_chain_to_upstream_stages() {
    let d = dir("manifest");
    let (s, o) = (p(&d, "s"), p(&d, "o"));
    ok(&["synth", "--rows", "24", "--cols", "24", "--n-roads", "4", "--out", &s]);
    ok(&["pbr", "--scenario", &s, "--out", &o]);
    ok(&["train-road", "--scenario", &s, "--out", &o, "--epochs", "2"]);
    let out = d.join("o");
    let pbr_hash = read_value(&manifest_path(&out, "pbr"), "config_hash").unwrap().unwrap();
    let train = manifest_path(&out, "train-road");
    assert_eq!(read_value(&train, "upstream.pbr.stage").unwrap().as_deref(), Some("pbr"));
    assert_eq!(read_value(&train, "upstream.pbr.config_hash").unwrap(), Some(pbr_hash));
    assert!(read_value(&train, "timestamp").unwrap().is_some());
}

#[test]
fn sweep_checkpoints() {
    assert_eq!(checkpoints(50, 10), vec![10, 20, 30, 40, 50]);
    assert_eq!(checkpoints(25, 10), vec![10, 20, 25]);
    assert_eq!(checkpoints(5, 0), vec![1, 2, 3, 4, 5]);
    assert_eq!(checkpoints(0, 10), vec![0]);
}
