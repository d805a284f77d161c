mod common;

use std::fs;
use std::path::PathBuf;

use frontal_nav::report::report_dir;
use frontal_nav::run::{run_batch, RunConfig, RunError, RunManifest};

use common::fixtures;

fn suite_config(suite: &str, out: &std::path::Path, parallel: usize) -> RunConfig {
    let mut cfg = RunConfig::from_file(fixtures().join("suites").join(suite).join("run.json")).unwrap();
    cfg.out = out.to_path_buf();
    cfg.parallel = parallel;
    cfg
}

#[test]
fn config_paths_are_resolved_against_the_file() {
    let cfg = RunConfig::from_file(fixtures().join("suites/ideal/run.json")).unwrap();
    let dir = fixtures().join("suites/ideal");
    assert_eq!(cfg.episodes, [dir.join("episodes")]);
    assert_eq!(cfg.scripts, [dir.join("script.json")]);
    assert_eq!(cfg.worlds, dir.join("../../worlds"));
    cfg.validate().unwrap();
}

#[test]
fn invalid_configs_are_rejected_before_running() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"episodes": ["x"], "colour": "blue"}"#).unwrap();
    assert!(matches!(RunConfig::from_file(&bad), Err(RunError::ConfigFile { .. })));

    let base = suite_config("conformance", tmp.path(), 1);
    let cases: Vec<(RunConfig, &str)> = vec![
        (RunConfig { parallel: 0, ..base.clone() }, "parallel"),
        (RunConfig { episodes: vec![], ..base.clone() }, "no episodes"),
        (RunConfig { episodes: vec![PathBuf::from("/nonexistent")], ..base.clone() }, "does not exist"),
        (RunConfig { scripts: vec![], ..base.clone() }, "script"),
        (RunConfig { worlds: tmp.path().join("none"), ..base.clone() }, "worlds"),
    ];
    for (cfg, needle) in cases {
        let err = run_batch(&cfg).unwrap_err().to_string();
        assert!(err.contains(needle), "{err:?} lacks {needle:?}");
    }
}

#[test]
fn duplicate_episode_ids_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let src = fixtures().join("suites/ideal/episodes/ideal-01-straight.json");
    fs::copy(&src, tmp.path().join("a.json")).unwrap();
    fs::copy(&src, tmp.path().join("b.json")).unwrap();
    let mut cfg = suite_config("ideal", &tmp.path().join("out"), 1);
    cfg.episodes = vec![tmp.path().join("a.json"), tmp.path().join("b.json")];
    let err = run_batch(&cfg).unwrap_err().to_string();
    assert!(err.contains("appears twice"), "{err}");
}

#[test]
fn report_from_traces_matches_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let summary = run_batch(&suite_config("adversarial", tmp.path(), 3)).unwrap();
    assert_eq!(summary.failures(), 0);
    assert_eq!(report_dir(tmp.path()).unwrap(), summary.report);
    assert_eq!(report_dir(&tmp.path().join("traces")).unwrap(), summary.report);

    let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(&summary.manifest_path).unwrap()).unwrap();
    assert_eq!(manifest.episodes, summary.results);
    assert_eq!(manifest.tool, "frontal-nav");
}

#[test]
fn parallel_runs_write_identical_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_batch(&suite_config("conformance", a.path(), 1)).unwrap();
    run_batch(&suite_config("conformance", b.path(), 4)).unwrap();
    for entry in fs::read_dir(a.path().join("traces")).unwrap() {
        let p = entry.unwrap().path();
        let other = b.path().join("traces").join(p.file_name().unwrap());
        assert_eq!(fs::read(&p).unwrap(), fs::read(other).unwrap(), "{}", p.display());
    }
}

#[test]
fn recorded_script_replays_to_the_same_traces() {
    let first = tempfile::tempdir().unwrap();
    let mut cfg = suite_config("adversarial", first.path(), 2);
    cfg.record = true;
    run_batch(&cfg).unwrap();
    let recorded = first.path().join("recorded_script.json");
    assert!(recorded.is_file());

    let second = tempfile::tempdir().unwrap();
    let mut replay = suite_config("adversarial", second.path(), 2);
    replay.scripts = vec![recorded];
    run_batch(&replay).unwrap();
    for entry in fs::read_dir(first.path().join("traces")).unwrap() {
        let p = entry.unwrap().path();
        let other = second.path().join("traces").join(p.file_name().unwrap());
        assert_eq!(fs::read(&p).unwrap(), fs::read(other).unwrap());
    }
}

#[test]
fn episode_failures_do_not_abort_the_batch() {
    let tmp = tempfile::tempdir().unwrap();
    let entries: Vec<serde_json::Value> =
        serde_json::from_str(&fs::read_to_string(fixtures().join("suites/conformance/script.json")).unwrap()).unwrap();
    let kept: Vec<_> = entries.into_iter().filter(|e| e["episode"] != "conf-05-normal").collect();
    let script = tmp.path().join("partial.json");
    fs::write(&script, serde_json::to_string(&kept).unwrap()).unwrap();
    let mut cfg = suite_config("conformance", &tmp.path().join("out"), 2);
    cfg.scripts = vec![script];
    let summary = run_batch(&cfg).unwrap();
    assert_eq!(summary.failures(), 1);
    let failed: Vec<_> = summary.results.iter().filter(|r| r.failed()).map(|r| r.episode.as_str()).collect();
    assert_eq!(failed, ["conf-05-normal"]);
    assert_eq!(summary.report.episodes.len(), 5);
}
