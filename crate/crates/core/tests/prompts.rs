mod common;

use frontal_nav::navigator::{run_episode, NavConfig};
use frontal_nav::prompting::{DecisionKind, PromptBundle};

use common::{assert_golden, suite_episode, Capture};

fn prompt_at(suite: &str, id: &str, ordinal: usize) -> PromptBundle {
    let (spec, world, script) = suite_episode(suite, id);
    let capture = Capture::new(script);
    run_episode(&spec, &world, &capture, &NavConfig::default()).unwrap();
    capture
        .requests()
        .into_iter()
        .find(|(k, _, _)| k.ordinal == ordinal && k.attempt == 0)
        .map(|(_, p, _)| p)
        .unwrap()
}

fn render(p: &PromptBundle) -> String {
    let images: Vec<String> = p.images.iter().map(|i| format!("{:?}", i.view)).collect();
    format!(
        "kind: {}\nimages: {}\n\n=== system ===\n{}\n\n=== user ===\n{}\n",
        p.kind.as_str(),
        images.join(" "),
        p.system_text,
        p.user_text
    )
}

#[test]
fn initial_prompt_snapshot() {
    let p = prompt_at("ideal", "ideal-05-two-corridor", 0);
    assert_eq!(p.kind, DecisionKind::Initial);
    assert_eq!(p.images.len(), 12);
    assert_golden("initial_prompt.txt", &render(&p));
}

#[test]
fn step_prompt_snapshot() {
    let p = prompt_at("ideal", "ideal-03-t-junction", 1);
    assert_eq!(p.kind, DecisionKind::Step);
    assert_eq!(p.images.len(), 3);
    assert_golden("step_prompt.txt", &render(&p));
}

#[test]
fn disambiguation_prompt_snapshot() {
    let p = prompt_at("adversarial", "adv-03-confused", 3);
    assert_eq!(p.kind, DecisionKind::Disambiguation);
    assert_eq!(p.images.len(), 12);
    assert_golden("disambiguation_prompt.txt", &render(&p));
}

#[test]
fn reprompts_reuse_the_original_prompt() {
    let (spec, world, script) = suite_episode("adversarial", "adv-04-noisy-output");
    let capture = Capture::new(script);
    run_episode(&spec, &world, &capture, &NavConfig::default()).unwrap();
    let seen = capture.requests();
    for (k, p, corrections) in &seen {
        assert_eq!(*corrections, k.attempt);
        if k.attempt > 0 {
            let (_, first, _) = seen.iter().find(|(o, _, _)| o.ordinal == k.ordinal && o.attempt == 0).unwrap();
            assert_eq!(first, p);
        }
    }
    assert_eq!(seen.iter().filter(|(k, _, _)| k.attempt > 0).count(), 3);
}
