//! Batch execution: configuration, episode loading, parallel workers, trace
//! files and the run manifest.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{DecisionProvider, ProviderConfig, ProviderError, RecordingProvider, RemoteProvider, ScriptError, ScriptedProvider};
use crate::metrics::{EpisodeMetrics, MetricReport};
use crate::navigator::{EpisodeOutcome, NavConfig, Navigator, StopReason, TraceLine};
use crate::prompting::{PromptError, TemplateSet};
use crate::simworld::{collect_json_files, load_episode, load_world, EpisodeSpec, LoadError, WorldMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Scripted,
    Remote,
}

/// Everything a batch run needs. Relative paths in a config file are
/// resolved against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Episode files or directories of episode files.
    pub episodes: Vec<PathBuf>,
    /// Directory of world files; episodes name their world.
    pub worlds: PathBuf,
    pub provider: ProviderKind,
    /// Script files for the scripted provider.
    pub scripts: Vec<PathBuf>,
    pub remote: ProviderConfig,
    /// Also write every provider answer as `recorded_script.json`.
    pub record: bool,
    pub navigator: NavConfig,
    /// Template directory; the bundled templates are used when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub templates: Option<PathBuf>,
    pub out: PathBuf,
    /// Episodes run at once.
    pub parallel: usize,
    /// Seed for sampled fixtures; runs themselves involve no randomness.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            episodes: Vec::new(),
            worlds: PathBuf::from("worlds"),
            provider: ProviderKind::Scripted,
            scripts: Vec::new(),
            remote: ProviderConfig::default(),
            record: false,
            navigator: NavConfig::default(),
            templates: None,
            out: PathBuf::from("out"),
            parallel: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config {path}: {message}")]
    ConfigFile { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl RunConfig {
    /// Reads a JSON config file, resolving its relative paths.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, RunError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|e| RunError::ConfigFile {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.episodes.iter_mut().for_each(fix);
        self.scripts.iter_mut().for_each(fix);
        fix(&mut self.worlds);
        fix(&mut self.out);
        if let Some(t) = self.templates.as_mut() {
            fix(t);
        }
    }

    /// Checks everything that can be checked before an episode starts.
    pub fn validate(&self) -> Result<(), RunError> {
        let invalid = |m: String| Err(RunError::Invalid(m));
        if self.parallel == 0 {
            return invalid("parallel must be at least 1".into());
        }
        if self.episodes.is_empty() {
            return invalid("no episodes given".into());
        }
        for p in &self.episodes {
            if !p.exists() {
                return invalid(format!("episode path {} does not exist", p.display()));
            }
        }
        if !self.worlds.is_dir() {
            return invalid(format!("worlds directory {} does not exist", self.worlds.display()));
        }
        if let Some(t) = &self.templates {
            if !t.is_dir() {
                return invalid(format!("template directory {} does not exist", t.display()));
            }
        }
        match self.provider {
            ProviderKind::Scripted if self.scripts.is_empty() => {
                return invalid("the scripted provider needs at least one script file".into())
            }
            ProviderKind::Scripted => {
                for s in &self.scripts {
                    if !s.is_file() {
                        return invalid(format!("script {} does not exist", s.display()));
                    }
                }
            }
            ProviderKind::Remote => self.remote.validate()?,
        }
        self.navigator.validate().map_err(RunError::Invalid)
    }
}

/// Loads every world file in `dir`, keyed by world name.
pub fn load_worlds(dir: &Path) -> Result<BTreeMap<String, WorldMap>, RunError> {
    let mut out = BTreeMap::new();
    for path in collect_json_files(&[dir.to_path_buf()])? {
        let w = load_world(&path)?;
        if let Some(prev) = out.insert(w.name.clone(), w) {
            return Err(RunError::Invalid(format!("two world files define {:?}", prev.name)));
        }
    }
    Ok(out)
}

/// Loads episodes sorted by id, checking each against its world.
pub fn load_episodes(paths: &[PathBuf], worlds: &BTreeMap<String, WorldMap>) -> Result<Vec<EpisodeSpec>, RunError> {
    let mut eps: Vec<EpisodeSpec> = Vec::new();
    for path in collect_json_files(paths)? {
        let e = load_episode(&path)?;
        let world = worlds
            .get(&e.world)
            .ok_or_else(|| RunError::Invalid(format!("{}: unknown world {:?}", path.display(), e.world)))?;
        e.validate_in(world)
            .map_err(|m| RunError::Invalid(format!("{}: {m}", path.display())))?;
        eps.push(e);
    }
    eps.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = eps.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(RunError::Invalid(format!("episode id {:?} appears twice", w[0].id)));
    }
    Ok(eps)
}

/// Result of one episode in a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub episode: String,
    pub trace: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_reason: Option<StopReason>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<EpisodeMetrics>,
    /// Provider failure or internal error, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl EpisodeResult {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Written to `manifest.json` after a run. Holds no timestamps, so identical
/// runs give identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub task_version: String,
    pub config: RunConfig,
    pub episodes: Vec<EpisodeResult>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub results: Vec<EpisodeResult>,
    pub report: MetricReport,
    pub manifest_path: PathBuf,
}

impl RunSummary {
    pub fn failures(&self) -> usize {
        self.results.iter().filter(|r| r.failed()).count()
    }
}

fn build_provider(cfg: &RunConfig) -> Result<Box<dyn DecisionProvider>, RunError> {
    Ok(match cfg.provider {
        ProviderKind::Scripted => Box::new(ScriptedProvider::from_files(&cfg.scripts)?),
        ProviderKind::Remote => Box::new(RemoteProvider::new(cfg.remote.clone())?),
    })
}

fn run_one(nav: &Navigator<'_>, spec: &EpisodeSpec, trace_path: &Path) -> Result<EpisodeOutcome, String> {
    let file = File::create(trace_path).map_err(|e| format!("{}: {e}", trace_path.display()))?;
    let mut w = BufWriter::new(file);
    let mut sink = |line: &TraceLine| -> io::Result<()> {
        writeln!(w, "{}", line.to_json())?;
        w.flush()
    };
    nav.run(spec, &mut sink).map(|(o, _)| o).map_err(|e| e.to_string())
}

/// Runs every episode and writes `traces/<id>.jsonl` plus `manifest.json`
/// under the output directory.
pub fn run_batch(cfg: &RunConfig) -> Result<RunSummary, RunError> {
    cfg.validate()?;
    let worlds = load_worlds(&cfg.worlds)?;
    let episodes = load_episodes(&cfg.episodes, &worlds)?;
    let templates = match &cfg.templates {
        Some(dir) => TemplateSet::load_dir(dir)?,
        None => TemplateSet::builtin(),
    };
    let base = build_provider(cfg)?;
    let recorder = cfg.record.then(|| RecordingProvider::new(&*base));
    let provider: &dyn DecisionProvider = match &recorder {
        Some(r) => r,
        None => &*base,
    };

    let traces = cfg.out.join("traces");
    fs::create_dir_all(&traces).map_err(io_err(&traces))?;

    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<EpisodeResult>>> = Mutex::new(vec![None; episodes.len()]);
    thread::scope(|s| {
        for _ in 0..cfg.parallel.min(episodes.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(spec) = episodes.get(i) else { break };
                let world = &worlds[&spec.world];
                let nav = Navigator {
                    world,
                    provider,
                    cfg: &cfg.navigator,
                    templates: &templates,
                    tagger: &cfg.navigator.tagger,
                };
                let rel = PathBuf::from("traces").join(format!("{}.jsonl", spec.id));
                let result = match run_one(&nav, spec, &cfg.out.join(&rel)) {
                    Ok(o) => EpisodeResult {
                        episode: spec.id.clone(),
                        trace: rel,
                        stop_reason: Some(o.stop_reason),
                        error: o.failure.clone(),
                        metrics: Some(o.metrics),
                    },
                    Err(e) => {
                        log::error!("episode {}: {e}", spec.id);
                        EpisodeResult {
                            episode: spec.id.clone(),
                            trace: rel,
                            stop_reason: None,
                            metrics: None,
                            error: Some(e),
                        }
                    }
                };
                log::info!("episode {} finished: {:?}", spec.id, result.stop_reason);
                slots.lock().expect("result slots")[i] = Some(result);
            });
        }
    });
    let results: Vec<EpisodeResult> = slots
        .into_inner()
        .expect("result slots")
        .into_iter()
        .map(|r| r.expect("every episode produces a result"))
        .collect();

    if let Some(r) = &recorder {
        let path = cfg.out.join("recorded_script.json");
        fs::write(&path, r.to_json()).map_err(io_err(&path))?;
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        task_version: templates.task.version.clone(),
        config: cfg.clone(),
        episodes: results.clone(),
    };
    let manifest_path = cfg.out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, text + "\n").map_err(io_err(&manifest_path))?;

    let report = MetricReport::new(results.iter().filter_map(|r| r.metrics.clone()).collect());
    Ok(RunSummary {
        results,
        report,
        manifest_path,
    })
}
