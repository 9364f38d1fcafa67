use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;

use serde_json::{json, Value};
use society_cli::*;
use society_core::policy::chat::{CannedTransport, ChatError};

/// Every file under `root`, keyed by relative path.
fn dir_contents(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in walkdir::WalkDir::new(root) {
        let entry = entry.unwrap();
        if entry.file_type().is_file() {
            let rel = entry.path().strip_prefix(root).unwrap().display().to_string();
            out.insert(rel, std::fs::read(entry.path()).unwrap());
        }
    }
    out
}

fn cfg(dir: &Path, constitution: &str, runs: usize) -> RunConfig {
    RunConfig { constitution: constitution.into(), runs, output_dir: dir.to_path_buf(), ..Default::default() }
}

fn simulate(dir: &Path, constitution: &str, runs: usize) -> SimulateOutcome {
    run_simulate(&cfg(dir, constitution, runs)).unwrap()
}

#[test]
fn simulate_hhh_ten_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = simulate(tmp.path(), "hhh", 10);
    assert_eq!(out.log_paths.len(), 10);
    assert_eq!(out.seeds, (42..52).collect::<Vec<u64>>());
    assert!(out.log_paths.iter().all(|p| p.exists()));
    let v = out.report.rows[0].mean.v;
    assert!((v - 1.0 / 3.0).abs() < 1e-4, "V = {v}");
    for f in ["config.yaml", "constitution.toml", "summary.json", "summary.txt"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    // The snapshot regenerates the run.
    let snap = RunConfig::load(&tmp.path().join("config.yaml")).unwrap();
    let again = tempfile::tempdir().unwrap();
    let rerun = run_simulate(&RunConfig { output_dir: again.path().to_path_buf(), ..snap }).unwrap();
    assert_eq!(dir_contents(tmp.path()), dir_contents(again.path()));
    assert_eq!(rerun.report, out.report);
}

#[test]
fn simulate_c_star_has_no_conflict() {
    let tmp = tempfile::tempdir().unwrap();
    let out = simulate(tmp.path(), "c_star", 1);
    assert_eq!(out.metrics[0].conflict_attempts, 0);
}

#[test]
fn simulate_rejections() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_simulate(&cfg(tmp.path(), "hhh", 0)).is_err());
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "not a constitution").unwrap();
    assert!(run_simulate(&cfg(&tmp.path().join("o"), bad.to_str().unwrap(), 1)).is_err());
    // A regular file where the output directory should go.
    let file = tmp.path().join("occupied");
    std::fs::write(&file, "").unwrap();
    let err = run_simulate(&cfg(&file, "hhh", 1)).unwrap_err();
    assert!(format!("{err:#}").contains("output directory"), "{err:#}");
}

#[test]
fn simulate_with_stubbed_language_model_agents() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = cfg(tmp.path(), "c_star", 1);
    c.agent_policies = BTreeMap::from([(1, PolicyKind::Llm), (4, PolicyKind::Llm)]);
    let stub = Arc::new(CannedTransport::tool_call("rest", json!({})));
    let out = run_simulate_with(&c, Some(stub.clone())).unwrap();
    assert!(stub.calls() >= 10);
    assert_eq!(run_replay(&out.log_paths[0]).unwrap().divergence, None);
    // Without a transport the run refuses to start.
    assert!(run_simulate_with(&c, None).is_err());
}

fn evolve_cfg(dir: &Path, iterations: u32) -> RunConfig {
    let mut c = cfg(dir, "hhh", 1);
    c.general.max_iterations = iterations;
    c
}

#[test]
fn evolve_mock_is_elitist_and_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_evolve(&evolve_cfg(a.path(), 5), &mut Vec::new()).unwrap();
    let rb = run_evolve(&evolve_cfg(b.path(), 5), &mut Vec::new()).unwrap();
    assert!(ra.result.best.fitness >= ra.result.initial.fitness);
    assert_eq!(ra.result, rb.result);
    assert_eq!(dir_contents(a.path()), dir_contents(b.path()));
    for f in ["config.yaml", "history.jsonl", "archive.json", "best.toml", "curve.tsv", "summary.json", "initial.toml"]
    {
        assert!(a.path().join(f).exists(), "{f}");
    }
    let history = std::fs::read_to_string(a.path().join("history.jsonl")).unwrap();
    assert_eq!(history.lines().count(), 5);
    assert!(a.path().join(evolve::eval_log_name(0, 0, 0)).exists());
    assert!(a.path().join(evolve::eval_log_name(5, 2, 1)).exists());
    let best = load_constitution(a.path().join("best.toml").to_str().unwrap()).unwrap();
    assert_eq!(best, ra.result.best.constitution);
}

#[test]
fn evolve_progress_lists_running_best() {
    let tmp = tempfile::tempdir().unwrap();
    let mut progress = Vec::new();
    run_evolve(&evolve_cfg(tmp.path(), 3), &mut progress).unwrap();
    let text = String::from_utf8(progress).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("iter")).count(), 3);
    let curve = std::fs::read_to_string(tmp.path().join("curve.tsv")).unwrap();
    assert_eq!(curve.lines().count(), 5);
}

#[test]
fn unreachable_mutator_without_fallback_aborts() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = evolve_cfg(tmp.path(), 2);
    c.mutator = MutatorKind::Llm;
    c.allow_fallback = false;
    let down = || Arc::new(CannedTransport::new(vec![Err(ChatError::Transport("connection refused".into()))]));
    let err = run_evolve_with(&c, Some(down()), &mut Vec::new()).unwrap_err();
    assert!(err.to_string().contains("fallback is disabled"), "{err}");

    c.allow_fallback = true;
    let out = run_evolve_with(&c, Some(down()), &mut Vec::new()).unwrap();
    assert!(out.result.history.iter().flat_map(|r| &r.steps).all(|s| s.fallback));
}

#[test]
fn analyze_round_trips_simulate_output() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(&tmp.path().join("c"), "c_star", 10);
    let one = run_analyze(&[tmp.path().join("c")], &Default::default(), 0.95).unwrap();
    assert_eq!(one.logs_read, 10);
    assert!(one.warnings.is_empty(), "{:?}", one.warnings);
    assert!(one.analysis.summaries[0].ci.is_some());
    assert!(one.analysis.pairwise.is_empty());

    simulate(&tmp.path().join("z"), "zero_sum", 10);
    let two = run_analyze(&[tmp.path().to_path_buf()], &Default::default(), 0.95).unwrap();
    assert_eq!(two.logs_read, 20);
    assert_eq!(two.analysis.pairwise.len(), 1);
    assert_eq!(two.analysis.pairwise[0].a, "c_star");
    assert!(two.analysis.sensitivity.is_some());
    assert!(two.to_text().contains("Mann-Whitney"));
}

#[test]
fn analyze_skips_corrupt_lines_with_warning() {
    let tmp = tempfile::tempdir().unwrap();
    let out = simulate(tmp.path(), "hhh", 3);
    let text = std::fs::read_to_string(&out.log_paths[1]).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[5] = "{\"record\": \"turn\", garbage";
    std::fs::write(&out.log_paths[1], lines.join("\n")).unwrap();
    let report = run_analyze(&[tmp.path().to_path_buf()], &Default::default(), 0.95).unwrap();
    assert!(!report.warnings.is_empty());
    assert_eq!(report.logs_read, 2);
}

#[test]
fn analyze_splits_mixed_configs() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(&tmp.path().join("a"), "hhh", 2);
    let mut c = cfg(&tmp.path().join("b"), "hhh", 2);
    c.world.attack_success_prob = 0.5;
    run_simulate(&c).unwrap();
    let report = run_analyze(&[tmp.path().to_path_buf()], &Default::default(), 0.95).unwrap();
    assert!(report.warnings.iter().any(|w| w.contains("spans 2 world configs")));
    assert_eq!(report.analysis.summaries.len(), 2);
    assert!(run_analyze(&[tmp.path().join("missing")], &Default::default(), 0.95).is_err());
}

fn tamper(path: &Path) -> (PathBuf, u32) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let mut hit = None;
    'outer: for (i, line) in lines.iter().enumerate() {
        if line["record"] != "turn" {
            continue;
        }
        for (agent, outcome) in line["events"]["outcomes"].as_object().unwrap() {
            let kind = outcome["action"]["kind"].as_str().unwrap();
            if outcome["status"] == "succeeded" && (kind == "MOVE" || kind == "GATHER") {
                hit = Some((i, agent.clone(), line["turn"].as_u64().unwrap() as u32));
                break 'outer;
            }
        }
    }
    let (i, agent, turn) = hit.expect("log has a successful move or gather");
    lines[i]["actions"][&agent] = json!({"kind": "REST"});
    let out = path.with_extension("tampered.jsonl");
    let body: Vec<String> = lines.iter().map(|v| v.to_string()).collect();
    std::fs::write(&out, body.join("\n") + "\n").unwrap();
    (out, turn)
}

#[test]
fn replay_verifies_and_detects_tampering() {
    let tmp = tempfile::tempdir().unwrap();
    let out = simulate(tmp.path(), "c_star", 1);
    let ok = run_replay(&out.log_paths[0]).unwrap();
    assert!(ok.verified());
    assert_eq!(ok.verified_turns, 40);
    let (bad, turn) = tamper(&out.log_paths[0]);
    let r = run_replay(&bad).unwrap();
    assert_eq!(r.divergence.unwrap().turn, turn);
}

#[test]
fn replay_warns_on_engine_version_mismatch() {
    let tmp = tempfile::tempdir().unwrap();
    let out = simulate(tmp.path(), "hhh", 1);
    let text = std::fs::read_to_string(&out.log_paths[0]).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut header: Value = serde_json::from_str(&lines[0]).unwrap();
    header["engine_version"] = json!("0.0.1");
    lines[0] = header.to_string();
    std::fs::write(&out.log_paths[0], lines.join("\n")).unwrap();
    let r = run_replay(&out.log_paths[0]).unwrap();
    assert!(r.verified());
    assert!(r.warnings.iter().any(|w| w.contains("0.0.1")));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_society");
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("s");
    let status = Command::new(bin)
        .args(["simulate", "--constitution", "c_star", "-n", "2", "--seed", "7", "-o"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let log = dir.join("logs").join(simulate::log_name(0));
    let ok = Command::new(bin).arg("replay").arg(&log).output().unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("verified 40 turns"));

    let (bad, turn) = tamper(&log);
    let diverged = Command::new(bin).arg("replay").arg(&bad).output().unwrap();
    assert_eq!(diverged.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&diverged.stderr).contains(&format!("turn {turn}")));

    let zero = Command::new(bin).args(["simulate", "-n", "0", "-o"]).arg(tmp.path().join("z")).output().unwrap();
    assert_eq!(zero.status.code(), Some(1));

    let analyze =
        Command::new(bin).arg("analyze").arg(&dir).arg("--json").arg(tmp.path().join("a.json")).output().unwrap();
    assert!(analyze.status.success(), "{}", String::from_utf8_lossy(&analyze.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("a.json")).unwrap()).unwrap();
    assert_eq!(report["logs_read"], 2);
}
