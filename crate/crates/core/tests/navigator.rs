mod common;

use frontal_nav::backend::{load_script, ScriptedProvider};
use frontal_nav::navigator::{render_timeline, run_episode, EpisodeTrace, NavConfig, StopReason, TraceEvent};

use common::{assert_golden, fixtures, suite_episode};

#[test]
fn missing_script_entry_is_a_configuration_failure() {
    let (spec, world, _) = suite_episode("ideal", "ideal-03-t-junction");
    let entries = load_script(fixtures().join("suites/ideal/script.json")).unwrap();
    let truncated = ScriptedProvider::new(
        entries
            .into_iter()
            .filter(|e| e.key.episode == spec.id && e.key.ordinal < 3),
    )
    .unwrap();
    let (outcome, trace) = run_episode(&spec, &world, &truncated, &NavConfig::default()).unwrap();
    assert_eq!(outcome.stop_reason, StopReason::ProviderFailure);
    assert!(outcome.configuration_error);
    assert!(outcome.failure.as_deref().unwrap().contains("decision 3"), "{:?}", outcome.failure);
    trace.check_grammar().unwrap();
    assert_eq!(trace.decisions(), 4, "the failed decision is still recorded");
    assert!(matches!(trace.events.last(), Some(TraceEvent::Stop { reason: StopReason::ProviderFailure, .. })));
}

#[test]
fn trace_survives_a_jsonl_round_trip() {
    for (suite, id) in [("ideal", "ideal-05-two-corridor"), ("adversarial", "adv-03-confused"), ("conformance", "conf-03-stuck")] {
        let (spec, world, script) = suite_episode(suite, id);
        let (outcome, trace) = run_episode(&spec, &world, &script, &NavConfig::default()).unwrap();
        let text = trace.to_jsonl();
        let back = EpisodeTrace::read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(back, trace, "{id}");
        assert_eq!(back.to_jsonl(), text);
        back.check_grammar().unwrap();
        let path: Vec<_> = outcome.path.iter().map(|p| p.position()).collect();
        assert_eq!(back.path(), path, "{id}");
        assert_eq!(back.stop_reason(), Some(outcome.stop_reason));
    }
}

#[test]
fn budget_ends_after_the_configured_decisions() {
    let (spec, world, script) = suite_episode("conformance", "conf-04-budget");
    for max_steps in [25, 10, 1] {
        let cfg = NavConfig { max_steps, ..NavConfig::default() };
        let (outcome, trace) = run_episode(&spec, &world, &script, &cfg).unwrap();
        assert_eq!(outcome.stop_reason, StopReason::BudgetExhausted);
        assert_eq!(trace.decisions(), max_steps);
        assert_eq!(outcome.path.len(), max_steps + 1);
    }
}

#[test]
fn stuck_episode_shifts_once() {
    let (spec, world, script) = suite_episode("conformance", "conf-03-stuck");
    let (_, trace) = run_episode(&spec, &world, &script, &NavConfig::default()).unwrap();
    let shifts = trace.events.iter().filter(|e| matches!(e, TraceEvent::StuckShift { .. })).count();
    assert_eq!(shifts, 1);
}

#[test]
fn tampered_traces_fail_the_grammar_check() {
    let (spec, world, script) = suite_episode("ideal", "ideal-01-straight");
    let (_, mut trace) = run_episode(&spec, &world, &script, &NavConfig::default()).unwrap();
    let first_action = trace
        .events
        .iter()
        .position(|e| matches!(e, TraceEvent::ActionExecuted { .. }))
        .unwrap();
    let dup = trace.events[first_action].clone();
    trace.events.insert(first_action, dup);
    assert!(trace.check_grammar().is_err());
    trace.events.remove(first_action);
    trace.events.pop();
    assert!(trace.check_grammar().is_err());
}

#[test]
fn timelines_match_golden_copies() {
    for (suite, id) in [("adversarial", "adv-03-confused"), ("conformance", "conf-03-stuck")] {
        let (spec, world, script) = suite_episode(suite, id);
        let (_, trace) = run_episode(&spec, &world, &script, &NavConfig::default()).unwrap();
        assert_golden(&format!("{id}.timeline.txt"), &render_timeline(&trace));
    }
}
