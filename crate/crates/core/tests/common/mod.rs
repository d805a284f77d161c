#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use frontal_nav::backend::{
    load_script, DecisionProvider, DecisionRequest, ProviderError, ProviderResponse, RequestKey, ScriptedProvider,
};
use frontal_nav::prompting::PromptBundle;
use frontal_nav::simworld::{load_episode, load_world, EpisodeSpec, WorldMap};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn world(name: &str) -> WorldMap {
    load_world(fixtures().join("worlds").join(format!("{name}.json"))).unwrap()
}

/// An episode of a bundled suite with its world and the suite's script.
pub fn suite_episode(suite: &str, id: &str) -> (EpisodeSpec, WorldMap, ScriptedProvider) {
    let dir = fixtures().join("suites").join(suite);
    let spec = load_episode(dir.join("episodes").join(format!("{id}.json"))).unwrap();
    let world = world(&spec.world);
    let script = ScriptedProvider::new(load_script(dir.join("script.json")).unwrap()).unwrap();
    (spec, world, script)
}

/// Delegates to `inner` and keeps every request it saw.
pub struct Capture<P> {
    pub inner: P,
    pub seen: Mutex<Vec<(RequestKey, PromptBundle, usize)>>,
}

impl<P> Capture<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            seen: Mutex::new(Vec::new()),
        }
    }

    pub fn requests(&self) -> Vec<(RequestKey, PromptBundle, usize)> {
        self.seen.lock().unwrap().clone()
    }
}

impl<P: DecisionProvider> DecisionProvider for Capture<P> {
    fn decide(&self, req: &DecisionRequest<'_>) -> Result<ProviderResponse, ProviderError> {
        self.seen
            .lock()
            .unwrap()
            .push((req.key.clone(), req.prompt.clone(), req.corrections.len()));
        self.inner.decide(req)
    }
}

/// Compares `actual` with a file under tests/golden, rewriting the file
/// instead when `UPDATE_GOLDEN=1`.
pub fn assert_golden(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var("UPDATE_GOLDEN").as_deref() == Ok("1") {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e}; run with UPDATE_GOLDEN=1 to create it", path.display()));
    assert!(
        expected == actual,
        "{} differs from the golden copy; run with UPDATE_GOLDEN=1 after checking the change\n--- actual ---\n{actual}",
        path.display()
    );
}
