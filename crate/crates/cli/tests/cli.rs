use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_puppet-audit"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn call(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn validate_prints_resolved_spec() {
    let spec = fixture("small_spec.json");
    let o = call(&["validate", "--spec", spec.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["resamples"], 2000);
    assert_eq!(
        doc["experiment"]["config_a"]["training_set"]
            .as_array()
            .unwrap()
            .len(),
        6
    );
}

#[test]
fn validation_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("small_spec.json")).unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        text.replace("\"watch_fraction\": 0.1", "\"watch_fraction\": 0"),
    )
    .unwrap();
    let o = call(&["validate", "--spec", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("config_b.watch_fraction"),
        "{}",
        stderr(&o)
    );

    std::fs::write(
        &bad,
        text.replace("\"rng_seed\": 3", "\"rng_seed\": 3, \"extra\": true"),
    )
    .unwrap();
    let o = call(&[
        "run",
        "--spec",
        bad.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("extra"), "{}", stderr(&o));

    assert_eq!(call(&["analyze", "--bogus"]).status.code(), Some(1));
    assert_eq!(call(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_run_directory_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = call(&[
        "analyze",
        "--out",
        dir.path().join("nope").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_analyze_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let spec = fixture("small_spec.json");
    let o = call(&["run", "--spec", spec.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("group a: 4/4 complete trees"));
    assert!(dir.path().join("trees/b_03.json").exists());

    let o = call(&["analyze", "--out", out, "--resamples", "2000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let md = stdout(&o);
    assert!(md.starts_with("| Fixed | Varied |"), "{md}");
    assert!(md.contains("watch: W=100% vs W=10%"));
    assert!(dir.path().join("report.csv").exists());

    let o = call(&[
        "analyze",
        "--out",
        out,
        "--split",
        "--characteristic",
        "pop",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("[set 2]"));

    let o = call(&[
        "analyze",
        "--out",
        out,
        "--slice",
        "depth",
        "--characteristic",
        "div",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("depth: 1 vs 3"));

    let o = call(&["report", "--out", out, "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    assert!(csv.starts_with("fixed,varied,"));
    assert_eq!(csv.lines().count(), 2);

    let o = call(&["report", "--out", out, "--format", "text"]);
    assert!(stdout(&o).starts_with("Fixed"));
}

#[test]
fn too_few_trees_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("small_spec.json")).unwrap();
    let spec = dir.path().join("spec.in.json");
    // Two trees per group is enough for a plain comparison but not a split.
    std::fs::write(
        &spec,
        text.replace("\"n_trees_per_group\": 4", "\"n_trees_per_group\": 2"),
    )
    .unwrap();
    let out = dir.path().join("run");
    let o = call(&[
        "run",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = call(&["analyze", "--out", out.to_str().unwrap(), "--split"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let spec = fixture("small_spec.json");
    let (x, y) = (dir.path().join("x"), dir.path().join("y"));
    for d in [&x, &y] {
        let o = call(&[
            "run",
            "--spec",
            spec.to_str().unwrap(),
            "--out",
            d.to_str().unwrap(),
            "--seed",
            "99",
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["spec.json", "trees/a_00.json", "trees/b_03.json"] {
        assert_eq!(
            std::fs::read(x.join(f)).unwrap(),
            std::fs::read(y.join(f)).unwrap(),
            "{f}"
        );
    }
    for d in [&x, &y] {
        call(&["analyze", "--out", d.to_str().unwrap()]);
    }
    assert_eq!(
        std::fs::read(x.join("report.json")).unwrap(),
        std::fs::read(y.join("report.json")).unwrap()
    );
}

#[test]
fn world_gen_writes_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("world.json");
    let spec = fixture("small_spec.json");
    let o = call(&[
        "world",
        "gen",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(out).unwrap()).unwrap();
    assert_eq!(doc["videos"].as_array().unwrap().len(), 400);
    assert_eq!(doc["seed"], 5);
}
