use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn citedistill(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_citedistill"))
        .arg("--quiet")
        .args(args)
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_distill_validate() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("dump");
    let out = dir.path().join("out");
    let gen = citedistill(&[
        "generate",
        "--output",
        path(&dump),
        "--seed",
        "4",
        "--publications",
        "120",
        "--relations",
        "400",
        "--missing",
        "doi=0.5",
    ]);
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));
    assert!(dump.join("manifest.json").exists());

    let run = citedistill(&[
        "distill",
        "--input",
        path(&dump),
        "--output",
        path(&out),
        "--threads",
        "1",
        "--dedup-edges",
        "--headers",
    ]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(run.stdout.is_empty());
    assert!(fs::read_to_string(out.join("citations.csv"))
        .unwrap()
        .starts_with("source,target\n"));

    let check = citedistill(&["validate", "--output", path(&out), "--input", path(&dump)]);
    assert_eq!(
        check.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&check.stdout)
    );
}

#[test]
fn validation_failure_exits_one_with_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("dump");
    let out = dir.path().join("out");
    assert!(citedistill(&[
        "generate",
        "--output",
        path(&dump),
        "--publications",
        "30",
        "--relations",
        "60"
    ])
    .status
    .success());
    assert!(
        citedistill(&["distill", "--input", path(&dump), "--output", path(&out)])
            .status
            .success()
    );
    fs::write(out.join("citations.csv"), "0,999\n").unwrap();
    let check = citedistill(&["validate", "--output", path(&out)]);
    assert_eq!(check.status.code(), Some(1));
    let lines: Vec<serde_json::Value> = String::from_utf8(check.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(lines.iter().any(|v| v["check"] == "edgeEndpointInNodeSet"));
    assert!(lines.iter().any(|v| v["check"] == "citationRowsMatchReport"));
}

#[test]
fn usage_and_io_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let empty = citedistill(&[
        "distill",
        "--input",
        path(dir.path()),
        "--output",
        path(&dir.path().join("o")),
    ]);
    assert_eq!(empty.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&empty.stderr).contains("no publication part files"));
    assert_eq!(citedistill(&["distill"]).status.code(), Some(2));
    assert_eq!(
        citedistill(&["validate", "--output", path(&dir.path().join("missing"))])
            .status
            .code(),
        Some(2)
    );
    let bad = citedistill(&[
        "generate",
        "--output",
        path(&dir.path().join("g")),
        "--cites-fraction",
        "2",
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn generate_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(&config, r#"{"seed": 1, "nPublications": 0, "nRelations": 0}"#).unwrap();
    let dump = dir.path().join("dump");
    assert!(
        citedistill(&["generate", "--output", path(&dump), "--config", path(&config)])
            .status
            .success()
    );
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dump.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["publications"].as_array().unwrap().len(), 0);
    assert_eq!(manifest["expectedEdges"].as_array().unwrap().len(), 0);
}
