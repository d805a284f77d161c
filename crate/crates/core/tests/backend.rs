mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Instant;

use frontal_nav::backend::{
    with_parse_retry, Correction, DecisionProvider, DecisionRequest, ProviderConfig, ProviderError, ProviderFailure,
    RecordingProvider, RemoteProvider, RequestKey, ScriptEntry, ScriptError, ScriptedProvider,
};
use frontal_nav::navigator::{run_episode, NavConfig};
use frontal_nav::prompting::{parse_step_decision, DecisionKind, ImageAttachment, PromptBundle};
use frontal_nav::semantics::ViewId;

use common::{suite_episode, Capture};

fn key(ordinal: usize, attempt: usize) -> RequestKey {
    RequestKey {
        episode: "ep".into(),
        ordinal,
        kind: DecisionKind::Step,
        attempt,
    }
}

fn prompt() -> PromptBundle {
    PromptBundle {
        kind: DecisionKind::Step,
        system_text: "system".into(),
        user_text: "user".into(),
        images: vec![ImageAttachment::png(ViewId::Front, &[137, 80, 78, 71])],
    }
}

fn entry(ordinal: usize, attempt: usize, raw: &str) -> ScriptEntry {
    ScriptEntry {
        key: key(ordinal, attempt),
        raw_text: raw.into(),
    }
}

const VALID_STEP: &str = r#"{"Thought": "ahead", "Selected Image": 2, "Action Options": "C", "Degree": null,
  "Safe Distance": 1.0, "Confuse": false,
  "Updated History": {"Trajectory Summary": "s", "Instruction Progress": []}}"#;

#[test]
fn scripted_provider_replays_by_key() {
    let p = ScriptedProvider::new([entry(0, 0, "a"), entry(1, 0, "b"), entry(1, 1, "c")]).unwrap();
    let pb = prompt();
    let ask = |k: &RequestKey| {
        p.decide(&DecisionRequest {
            key: k,
            prompt: &pb,
            corrections: &[],
        })
    };
    assert_eq!(ask(&key(1, 1)).unwrap().raw_text, "c");
    let resp = ask(&key(0, 0)).unwrap();
    assert_eq!((resp.raw_text.as_str(), resp.latency, resp.requests), ("a", 0.0, 1));
    match ask(&key(2, 0)) {
        Err(ProviderError::Configuration(m)) => assert!(m.contains("decision 2"), "{m}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn duplicate_script_keys_are_rejected() {
    let err = ScriptedProvider::new([entry(0, 0, "a"), entry(0, 0, "b")]).unwrap_err();
    assert!(matches!(err, ScriptError::Duplicate(k) if k == key(0, 0)));
}

#[test]
fn script_entries_read_flat_json() {
    let text = r#"[{"episode": "ep", "ordinal": 3, "kind": "disambiguation", "raw_text": "x"}]"#;
    let entries: Vec<ScriptEntry> = serde_json::from_str(text).unwrap();
    assert_eq!(entries[0].key.attempt, 0);
    assert_eq!(entries[0].key.kind, DecisionKind::Disambiguation);
}

#[test]
fn retry_recovers_after_malformed_answers() {
    let p = Capture::new(ScriptedProvider::new([entry(0, 0, "no json here"), entry(0, 1, "{\"Thought\": 1}"), entry(0, 2, VALID_STEP)]).unwrap());
    let (result, attempts) = with_parse_retry(&p, &key(0, 0), &prompt(), 2, parse_step_decision);
    assert_eq!(result.unwrap().action_option, "C");
    assert_eq!(attempts.len(), 3);
    assert!(attempts[0].error.is_some() && attempts[1].error.is_some() && attempts[2].error.is_none());
    let seen = p.requests();
    let shape: Vec<_> = seen.iter().map(|(k, _, corrections)| (k.attempt, *corrections)).collect();
    assert_eq!(shape, [(0, 0), (1, 1), (2, 2)]);
}

#[test]
fn retry_gives_up_after_the_limit() {
    let p = ScriptedProvider::new([entry(0, 0, "x"), entry(0, 1, "y"), entry(0, 2, "z")]).unwrap();
    let (result, attempts) = with_parse_retry(&p, &key(0, 0), &prompt(), 1, parse_step_decision);
    assert!(matches!(result, Err(ProviderFailure::Parse { reprompts: 1, .. })));
    assert_eq!(attempts.len(), 2);
}

#[test]
fn retry_surfaces_provider_errors() {
    let p = ScriptedProvider::new([entry(0, 0, "x")]).unwrap();
    let (result, attempts) = with_parse_retry(&p, &key(0, 0), &prompt(), 3, parse_step_decision);
    let err = result.unwrap_err();
    assert!(err.is_configuration(), "{err}");
    assert_eq!(attempts.len(), 1);
}

#[test]
fn recording_is_transparent_and_replayable() {
    let (spec, world, script) = suite_episode("adversarial", "adv-04-noisy-output");
    let cfg = NavConfig::default();
    let (direct, direct_trace) = run_episode(&spec, &world, &script, &cfg).unwrap();

    let recorder = RecordingProvider::new(script);
    let (recorded, recorded_trace) = run_episode(&spec, &world, &recorder, &cfg).unwrap();
    assert_eq!(direct_trace.to_jsonl(), recorded_trace.to_jsonl());
    assert_eq!(direct.metrics, recorded.metrics);

    let entries = recorder.entries();
    assert!(entries.iter().any(|e| e.key.attempt > 0), "re-prompts are recorded");
    let replay = ScriptedProvider::new(serde_json::from_str::<Vec<ScriptEntry>>(&recorder.to_json()).unwrap()).unwrap();
    assert_eq!(replay.len(), entries.len());
    let (_, replay_trace) = run_episode(&spec, &world, &replay, &cfg).unwrap();
    assert_eq!(direct_trace.to_jsonl(), replay_trace.to_jsonl());
}

// ------------------------------------------------------------------ remote

struct Stub {
    url: String,
    bodies: Arc<Mutex<Vec<(String, String)>>>,
}

/// Serves the canned `(status, extra headers, body)` responses in order, one
/// per connection, and records each request's headers and body.
fn stub(responses: Vec<(u16, &'static str, String)>) -> Stub {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let bodies = Arc::new(Mutex::new(Vec::new()));
    let log = bodies.clone();
    thread::spawn(move || {
        for (status, headers, body) in responses {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut head = String::new();
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                head.push_str(&line);
            }
            let mut buf = vec![0; length];
            reader.read_exact(&mut buf).unwrap();
            log.lock().unwrap().push((head, String::from_utf8(buf).unwrap()));
            let reply = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\n{headers}Connection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(reply.as_bytes()).unwrap();
        }
    });
    Stub { url, bodies }
}

fn completion(text: &str) -> String {
    serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": text}}],
        "usage": {"prompt_tokens": 11, "completion_tokens": 7}
    })
    .to_string()
}

fn remote(url: &str, key_env: Option<&str>) -> RemoteProvider {
    RemoteProvider::new(ProviderConfig {
        endpoint: url.into(),
        api_key_env: key_env.map(String::from),
        backoff_initial: 0.01,
        backoff_max: 0.02,
        max_retries: 2,
        timeout: 5.0,
        ..ProviderConfig::default()
    })
    .unwrap()
}

#[test]
fn remote_retries_server_errors_then_succeeds() {
    let s = stub(vec![
        (503, "", "{}".into()),
        (429, "Retry-After: 0\r\n", "{}".into()),
        (200, "", completion(VALID_STEP)),
    ]);
    std::env::set_var("FRONTAL_NAV_TEST_KEY", "sk-test");
    let p = remote(&s.url, Some("FRONTAL_NAV_TEST_KEY"));
    let corrections = [Correction {
        rejected: "bad".into(),
        message: "fix it".into(),
    }];
    let resp = p
        .decide(&DecisionRequest {
            key: &key(0, 1),
            prompt: &prompt(),
            corrections: &corrections,
        })
        .unwrap();
    assert_eq!(resp.raw_text, VALID_STEP);
    assert_eq!(resp.requests, 3);
    assert_eq!(resp.usage.unwrap().completion_tokens, 7);

    let seen = s.bodies.lock().unwrap();
    assert_eq!(seen.len(), 3);
    let (head, body) = &seen[2];
    assert!(head.to_ascii_lowercase().contains("authorization: bearer sk-test"), "{head}");
    let v: serde_json::Value = serde_json::from_str(body).unwrap();
    assert_eq!(v["model"], "gpt-4o-2024-08-06");
    assert_eq!(v["temperature"], 0.0);
    let roles: Vec<_> = v["messages"].as_array().unwrap().iter().map(|m| m["role"].as_str().unwrap()).collect();
    assert_eq!(roles, ["system", "user", "assistant", "user"]);
    let url = v["messages"][1]["content"][1]["image_url"]["url"].as_str().unwrap();
    assert!(url.starts_with("data:image/png;base64,"), "{url}");
}

#[test]
fn remote_client_errors_are_not_retried() {
    let s = stub(vec![(400, "", "{\"error\": \"bad request\"}".into())]);
    let p = remote(&s.url, None);
    let err = p
        .decide(&DecisionRequest {
            key: &key(0, 0),
            prompt: &prompt(),
            corrections: &[],
        })
        .unwrap_err();
    assert!(matches!(err, ProviderError::InvalidResponse(ref m) if m.contains("400")), "{err}");
    assert_eq!(s.bodies.lock().unwrap().len(), 1);
}

#[test]
fn remote_gives_up_after_max_retries() {
    let s = stub(vec![(500, "", "{}".into()), (502, "", "{}".into()), (503, "", "{}".into())]);
    let p = remote(&s.url, None);
    let started = Instant::now();
    let err = p
        .decide(&DecisionRequest {
            key: &key(0, 0),
            prompt: &prompt(),
            corrections: &[],
        })
        .unwrap_err();
    assert!(matches!(err, ProviderError::Exhausted { requests: 3, .. }), "{err}");
    assert!(started.elapsed().as_secs_f64() >= 0.03, "backoff waits between attempts");
}

#[test]
fn remote_needs_its_key_variable() {
    let err = RemoteProvider::new(ProviderConfig {
        api_key_env: Some("FRONTAL_NAV_SURELY_UNSET_VARIABLE".into()),
        ..ProviderConfig::default()
    })
    .unwrap_err();
    assert!(matches!(err, ProviderError::Configuration(_)));
}
