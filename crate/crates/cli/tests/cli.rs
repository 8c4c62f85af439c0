use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn l22(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_l22"))
        .args(args)
        .current_dir(dir)
        .env_remove("L22_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn embed_cube_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    assert!(l22(
        &[
            "gen",
            "--kind",
            "hypercube",
            "--dim",
            "3",
            "-o",
            "cube.json"
        ],
        dir.path()
    )
    .status
    .success());
    let first = l22(
        &["embed", "-i", "cube.json", "--eta", "0.5", "--seed", "0"],
        dir.path(),
    );
    let second = l22(
        &["embed", "-i", "cube.json", "--eta", "0.5", "--seed", "0"],
        dir.path(),
    );
    assert_eq!(first.stdout, second.stdout);

    let mut got = json(&first);
    got.as_object_mut().unwrap().remove("meta");
    let golden: Value = serde_json::from_str(include_str!("golden/embed_cube3.json")).unwrap();
    assert_eq!(got, golden);
    // the witness is a single vertex, so values are Hamming weights
    let values: Vec<f64> = (0..8u32).map(|v| v.count_ones() as f64).collect();
    assert_eq!(got["values"], serde_json::json!(values));
}

#[test]
fn cut_on_path() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("p4.edges"),
        "graph 4\n1 2 1\n2 3 1\n3 4 1\n",
    )
    .unwrap();
    let v = json(&l22(&["cut", "-i", "p4.edges"], dir.path()));
    assert_eq!(v["phi"], 0.25);
    assert_eq!(v["cut"], serde_json::json!([1, 2]));
    assert!(v["phi_sdp"].as_f64().unwrap() <= 0.25 + 1e-5);
    let o = json(&l22(&["oracle", "-i", "p4.edges"], dir.path()));
    assert_eq!(o["phi"], 0.25);
}

#[test]
fn meta_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&l22(
        &["gen", "--kind", "simplex", "--n", "4", "--seed", "9"],
        dir.path(),
    ));
    assert_eq!(v["n"], 4);
    assert_eq!(v["meta"]["seed"], 9);
    assert_eq!(v["meta"]["config"]["command"], "gen");
    assert_eq!(v["meta"]["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn generated_sets_round_trip_through_check() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec![
            "gen",
            "--kind",
            "hypercube-subset",
            "--dim",
            "5",
            "--size",
            "12",
            "-o",
            "a.json",
        ],
        vec![
            "gen",
            "--kind",
            "counterexample",
            "--dim",
            "3",
            "--copies",
            "4",
            "-o",
            "a.json",
        ],
        vec![
            "gen",
            "--kind",
            "planted",
            "--rank",
            "2",
            "--dim",
            "5",
            "--noise-kind",
            "binary",
            "-o",
            "a.json",
        ],
    ] {
        assert!(l22(&args, dir.path()).status.success());
        let v = json(&l22(&["check", "-i", "a.json"], dir.path()));
        assert_eq!(v["exact_valid"], true);
        assert_eq!(v["beta"], 1.0);
    }
}

#[test]
fn validation_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("line.csv"), "0\n1\n2\n3\n").unwrap();
    let out = l22(&["embed", "-i", "line.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "InvalidMetric");
    assert!(out.stdout.is_empty());

    std::fs::write(dir.path().join("loop.edges"), "graph 3\n1 1 1\n").unwrap();
    let out = l22(&["spectrum", "-i", "loop.edges"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    std::fs::write(
        dir.path().join("big.edges"),
        format!(
            "graph 40\n{}",
            (1..40)
                .map(|i| format!("{i} {} 1\n", i + 1))
                .collect::<String>()
        ),
    )
    .unwrap();
    let out = l22(&["sdp", "-i", "big.edges"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "TooLarge");
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    assert!(l22(
        &["gen", "--kind", "hypercube", "--dim", "7", "-o", "c.json"],
        dir.path()
    )
    .status
    .success());
    let auto = l22(&["embed", "-i", "c.json", "--seed", "3"], dir.path());
    let one = Command::new(env!("CARGO_BIN_EXE_l22"))
        .args(["embed", "-i", "c.json", "--seed", "3"])
        .current_dir(dir.path())
        .env("L22_THREADS", "1")
        .output()
        .unwrap();
    assert!(auto.status.success() && one.status.success());
    assert_eq!(auto.stdout, one.stdout);
}

#[test]
fn distortion_and_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("two.csv"), "0,0\n1,1\n").unwrap();
    let v = json(&l22(
        &["distortion", "-i", "two.csv", "--witness", "1"],
        dir.path(),
    ));
    assert_eq!(v["report"]["avg_ratio"], 1.0);
    assert_eq!(v["report"]["worst_ratio"], 1.0);

    assert!(l22(
        &["gen", "--kind", "cycle", "--n", "8", "-o", "c8.edges"],
        dir.path()
    )
    .status
    .success());
    let s = json(&l22(&["spectrum", "-i", "c8.edges"], dir.path()));
    let l2 = s["lambda"][1].as_f64().unwrap();
    assert!((l2 - (1.0 - (std::f64::consts::PI / 4.0).cos())).abs() < 1e-10);
}

#[test]
fn output_file_replaces_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    std::fs::write(&path, "stale").unwrap();
    let out = l22(
        &["gen", "--kind", "simplex", "--n", "3", "-o", "out.json"],
        dir.path(),
    );
    assert!(out.status.success() && out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["n"], 3);
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 1);
}
