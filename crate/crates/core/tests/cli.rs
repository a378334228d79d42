use std::path::Path;
use std::process::{Command, Output};

use ecocache::harness::{parse_results, Format, SolveBundle};

fn ecocache(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ecocache")).args(args).output().expect("binary runs")
}

fn path_str(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn solve_then_verify_each_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    for (algorithm, mode) in [("exact", "p1"), ("gsac", "p2"), ("greedy", "p1"), ("random", "p2"), ("nocache", "p1")] {
        let bundle = dir.path().join(format!("{algorithm}.json"));
        let out = ecocache(&[
            "solve", "--algorithm", algorithm, "--mode", mode, "--contents", "15", "--requests", "30",
            "--seed", "4", "--out", path_str(&bundle),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let checked = ecocache(&["verify", path_str(&bundle)]);
        let report = String::from_utf8_lossy(&checked.stdout);
        assert!(checked.status.success(), "{algorithm}: {report}");
        assert!(report.trim_end().ends_with("verified"));
    }
}

#[test]
fn verify_rejects_a_tampered_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("b.json");
    let out = ecocache(&["solve", "--algorithm", "greedy", "--contents", "10", "--requests", "20", "--out", path_str(&bundle)]);
    assert!(out.status.success());
    let mut parsed = SolveBundle::parse(&std::fs::read_to_string(&bundle).unwrap()).unwrap();
    let (content, node) = parsed.solution.placement.pairs().next().expect("greedy caches something");
    parsed.solution.placement.set(content, node, false);
    std::fs::write(&bundle, parsed.to_json().unwrap()).unwrap();
    let checked = ecocache(&["verify", path_str(&bundle)]);
    assert_eq!(checked.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&checked.stdout).contains("FAILED"));
}

#[test]
fn pinned_scenario_and_exported_topology() {
    let dir = tempfile::tempdir().unwrap();
    let topology = dir.path().join("line.json");
    let out = ecocache(&["topology", "export", "--topology", "tree10", "--space", "2", "--out", path_str(&topology)]);
    assert!(out.status.success());

    let bundle = dir.path().join("first.json");
    let out = ecocache(&[
        "solve", "--topology", path_str(&topology), "--contents", "8", "--requests", "12", "--out", path_str(&bundle),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = SolveBundle::parse(&std::fs::read_to_string(&bundle).unwrap()).unwrap();
    assert!(first.topology.nodes.iter().skip(1).all(|n| n.storage_bits == 16_000_000_000));

    // the same scenario replayed from file gives the same optimum
    let scenario = dir.path().join("scenario.json");
    std::fs::write(&scenario, serde_json::to_string(&first.scenario).unwrap()).unwrap();
    let replay = dir.path().join("replay.json");
    let out = ecocache(&[
        "solve", "--topology", path_str(&topology), "--scenario", path_str(&scenario), "--out", path_str(&replay),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let second = SolveBundle::parse(&std::fs::read_to_string(&replay).unwrap()).unwrap();
    assert_eq!(second.solution.energy, first.solution.energy);
}

#[test]
fn sweep_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rows.csv");
    let common = ["sweep", "--contents", "10", "--requests", "20", "--iterations", "2", "--algorithms", "gsac,nocache"];
    let out = ecocache(&[&common[..], &["--axis", "space", "--values", "0.25,1", "--out", path_str(&csv)]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = parse_results(&std::fs::read_to_string(&csv).unwrap(), Format::Csv).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.sweep_axis == "space" && r.iterations == 2));

    let out = ecocache(&[&common[..], &["--format", "json", "--literal"]].concat());
    assert!(out.status.success());
    let rows = parse_results(&String::from_utf8_lossy(&out.stdout), Format::Json).unwrap();
    assert_eq!(rows.len(), 2);
}

#[test]
fn bad_arguments_fail_cleanly() {
    assert!(!ecocache(&["solve", "--strict", "--literal"]).status.success());
    assert!(!ecocache(&["solve", "--topology", "ring12"]).status.success());
    assert!(!ecocache(&["sweep", "--iterations", "0"]).status.success());
    assert!(!ecocache(&["sweep", "--axis", "accuracy", "--values", "1.5"]).status.success());
    let out = ecocache(&["solve", "--algorithm", "lru"]);
    assert!(!out.status.success());
}
