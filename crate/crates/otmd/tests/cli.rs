//! The `otmd` binary end to end.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn otmd(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_otmd"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn grid(dir: &Path) {
    ok(&otmd(&["gen-grid", "--rows", "3", "--cols", "3", "--steps", "60", "--out", "grid.json"], dir));
}

#[test]
fn modes_produce_identical_dumps() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    grid(d);
    ok(&otmd(&["run", "--scenario", "grid.json", "--dump", "seq.csv", "--metrics", "m.json"], d));
    ok(&otmd(&["run", "--scenario", "grid.json", "--mode", "local", "--n", "3", "--dump", "local.csv"], d));
    ok(&otmd(&["run", "--scenario", "grid.json", "--mode", "tcp", "--n", "2", "--dump", "tcp.csv"], d));
    ok(&otmd(
        &["run", "--scenario", "grid.json", "--mode", "tcp", "--n", "3", "--spawn-local", "--dump", "spawn.csv"],
        d,
    ));
    let seq = fs::read_to_string(d.join("seq.csv")).unwrap();
    assert!(seq.starts_with("step,link,lane_group,cell,vehicle_type,next_link,vehicles\n"));
    assert!(seq.lines().count() > 10);
    for other in ["local.csv", "tcp.csv", "spawn.csv"] {
        assert_eq!(seq, fs::read_to_string(d.join(other)).unwrap(), "{other}");
        let out = ok(&otmd(&["diff", "--a", "seq.csv", "--b", other], d));
        assert!(out.contains("equal"), "{out}");
    }
    let metrics: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("m.json")).unwrap()).unwrap();
    assert_eq!(metrics["steps"].as_array().unwrap().len(), 60);
}

#[test]
fn partition_files_drive_a_run_and_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    grid(d);
    ok(&otmd(&["partition", "--scenario", "grid.json", "--n", "3", "--seed", "5", "--out-dir", "p1"], d));
    ok(&otmd(&["partition", "--scenario", "grid.json", "--n", "3", "--seed", "5", "--out-dir", "p2"], d));
    let mut names: Vec<String> = fs::read_dir(d.join("p1"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.contains(&"partition.txt".to_string()));
    assert!(names.contains(&"metagraph.json".to_string()));
    assert!(names.contains(&"fragment_2.json".to_string()));
    assert!(names.contains(&"decoders_2.json".to_string()));
    for name in &names {
        assert_eq!(
            fs::read(d.join("p1").join(name)).unwrap(),
            fs::read(d.join("p2").join(name)).unwrap(),
            "{name}"
        );
    }

    ok(&otmd(&["run", "--scenario", "grid.json", "--dump", "seq.csv"], d));
    ok(&otmd(&["run", "--fragments-dir", "p1", "--mode", "local", "--dump", "frag.csv"], d));
    ok(&otmd(
        &["run", "--scenario", "grid.json", "--mode", "local", "--partition", "p1/partition.txt", "--dump", "imp.csv"],
        d,
    ));
    let seq = fs::read(d.join("seq.csv")).unwrap();
    assert_eq!(seq, fs::read(d.join("frag.csv")).unwrap());
    assert_eq!(seq, fs::read(d.join("imp.csv")).unwrap());
}

#[test]
fn config_file_supplies_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    grid(d);
    fs::write(
        d.join("run.json"),
        r#"{"scenario": "grid.json", "mode": "local", "n": 2, "steps": 20, "dump": "cfg.csv"}"#,
    )
    .unwrap();
    ok(&otmd(&["--config", "run.json", "run"], d));
    let text = fs::read_to_string(d.join("cfg.csv")).unwrap();
    assert!(text.lines().last().unwrap().starts_with("20,"));
    // explicit flags win over the file
    ok(&otmd(&["--config", "run.json", "run", "--steps", "30"], d));
    let text = fs::read_to_string(d.join("cfg.csv")).unwrap();
    assert!(text.lines().last().unwrap().starts_with("30,"));
}

#[test]
fn diff_reports_first_divergence() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let header = "step,link,lane_group,cell,vehicle_type,next_link,vehicles\n";
    fs::write(d.join("a.csv"), format!("{header}10,4,0,1,0,7,2.5\n10,4,0,2,0,7,1.0\n")).unwrap();
    fs::write(d.join("b.csv"), format!("{header}10,4,0,1,0,7,2.5\n10,4,0,2,0,7,1.0000001\n")).unwrap();
    let out = otmd(&["diff", "--a", "a.csv", "--b", "b.csv"], d);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("step 10, link 4, lane group 0, cell 2"), "{text}");
    ok(&otmd(&["diff", "--a", "a.csv", "--b", "b.csv", "--tol", "1e-6"], d));
}

#[test]
fn input_errors_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    grid(d);
    let out = otmd(&["run", "--scenario", "grid.json", "--steps", "0"], d);
    assert_eq!(out.status.code(), Some(2));
    fs::write(d.join("bad.json"), "{\"nodes\": [").unwrap();
    let out = otmd(&["run", "--scenario", "bad.json"], d);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 1"), "{err}");
}

#[test]
fn bench_table_starts_with_serial_row() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    grid(d);
    let out = ok(&otmd(
        &["bench", "--scenario", "grid.json", "--n-list", "1,2", "--steps", "10", "--out", "bench.json"],
        d,
    ));
    assert!(out.contains("speed-up"), "{out}");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("bench.json")).unwrap()).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows[0]["n"], 1);
    assert_eq!(rows[0]["speedup"], 1.0);
}
