//! Episode audit log, written as JSON lines.
//!
//! Line 1 is a `header`, then one `event` per line, and finally a `metrics`
//! line once the episode is scored. Every line is a JSON object with a
//! `type` field; event lines also carry an `event` field.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::Attempt;
use crate::geom::Vec2;
use crate::metrics::EpisodeMetrics;
use crate::perception::DirectionalBin;
use crate::prompting::{DecisionKind, DisambiguationDecision, InitialDecision, StepDecision};
use crate::semantics::ViewId;
use crate::simworld::{ActionCommand, AgentPose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub episode: String,
    pub world: String,
    pub instruction: String,
    pub start: AgentPose,
    pub goal: Vec2,
    pub success_radius: f64,
    pub reference_path: Vec<Vec2>,
    /// Geodesic start-to-goal length, meters; absent when unreachable.
    pub shortest_path: Option<f64>,
}

/// One panoramic view as summarized for the provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewSummary {
    pub view: ViewId,
    /// Degrees counter-clockwise from the agent heading.
    pub yaw: f64,
    pub objects: Vec<String>,
    pub distance: Option<f64>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontalView {
    pub view: ViewId,
    pub objects: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParsedDecision {
    Initial(InitialDecision),
    Step(StepDecision),
    Disambiguation(DisambiguationDecision),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    AgentStop,
    BudgetExhausted,
    ProviderFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    InitialScan {
        pose: AgentPose,
        renders: usize,
        views: Vec<ViewSummary>,
    },
    StepObservation {
        step: usize,
        pose: AgentPose,
        views: Vec<FrontalView>,
        bins: Vec<DirectionalBin>,
        spatial: Vec<String>,
    },
    Decision {
        ordinal: usize,
        kind: DecisionKind,
        attempts: Vec<Attempt>,
        parsed: Option<ParsedDecision>,
    },
    ActionExecuted {
        command: ActionCommand,
        pre: AgentPose,
        post: AgentPose,
        clamped: bool,
    },
    ConfuseRescan {
        pose: AgentPose,
        renders: usize,
        views: Vec<ViewSummary>,
    },
    StuckShift {
        command: ActionCommand,
        pre: AgentPose,
        post: AgentPose,
        clamped: bool,
    },
    Stop {
        reason: StopReason,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        detail: Option<String>,
    },
    BudgetExhausted {
        decisions: usize,
    },
}

impl TraceEvent {
    pub fn name(&self) -> &'static str {
        match self {
            TraceEvent::InitialScan { .. } => "initial_scan",
            TraceEvent::StepObservation { .. } => "step_observation",
            TraceEvent::Decision { .. } => "decision",
            TraceEvent::ActionExecuted { .. } => "action_executed",
            TraceEvent::ConfuseRescan { .. } => "confuse_rescan",
            TraceEvent::StuckShift { .. } => "stuck_shift",
            TraceEvent::Stop { .. } => "stop",
            TraceEvent::BudgetExhausted { .. } => "budget_exhausted",
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, TraceEvent::Stop { .. } | TraceEvent::BudgetExhausted { .. })
    }
}

/// One line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TraceLine {
    Header(TraceHeader),
    Event(TraceEvent),
    Metrics(EpisodeMetrics),
}

impl TraceLine {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace lines serialize")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub header: TraceHeader,
    pub events: Vec<TraceEvent>,
    pub metrics: Option<EpisodeMetrics>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl EpisodeTrace {
    pub fn lines(&self) -> impl Iterator<Item = TraceLine> + '_ {
        std::iter::once(TraceLine::Header(self.header.clone()))
            .chain(self.events.iter().cloned().map(TraceLine::Event))
            .chain(self.metrics.clone().map(TraceLine::Metrics))
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for l in self.lines() {
            let _ = writeln!(out, "{}", l.to_json());
        }
        out
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> io::Result<()> {
        w.write_all(self.to_jsonl().as_bytes())
    }

    /// Parses a trace file; errors name the 1-based line.
    pub fn read_jsonl(r: impl BufRead) -> Result<Self, TraceError> {
        let mut header = None;
        let mut events = Vec::new();
        let mut metrics = None;
        for (i, line) in r.lines().enumerate() {
            let n = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| TraceError::Malformed { line: n, message };
            let parsed: TraceLine = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
            match parsed {
                TraceLine::Header(h) if header.is_none() && n == 1 => header = Some(h),
                TraceLine::Header(_) => return Err(bad("header must be the first line, and only once".into())),
                _ if header.is_none() => return Err(bad("trace does not start with a header".into())),
                TraceLine::Event(_) if metrics.is_some() => return Err(bad("event after the metrics line".into())),
                TraceLine::Event(e) => events.push(e),
                TraceLine::Metrics(_) if metrics.is_some() => return Err(bad("second metrics line".into())),
                TraceLine::Metrics(m) => metrics = Some(m),
            }
        }
        let header = header.ok_or(TraceError::Malformed {
            line: 1,
            message: "empty trace".into(),
        })?;
        Ok(Self {
            header,
            events,
            metrics,
        })
    }

    /// Number of Decision events.
    pub fn decisions(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, TraceEvent::Decision { .. })).count()
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        match self.events.last()? {
            TraceEvent::Stop { reason, .. } => Some(*reason),
            TraceEvent::BudgetExhausted { .. } => Some(StopReason::BudgetExhausted),
            _ => None,
        }
    }

    /// Agent positions: the start, then the end of every executed motion.
    pub fn path(&self) -> Vec<Vec2> {
        let mut path = vec![self.header.start.position()];
        for e in &self.events {
            if let TraceEvent::ActionExecuted { post, .. } | TraceEvent::StuckShift { post, .. } = e {
                path.push(post.position());
            }
        }
        path
    }

    /// Checks the event grammar: one initial scan first, one terminal event
    /// last, and each decision resolved before the next one. A step decision
    /// that reports confusion is resolved by the rescan and the
    /// disambiguation decision that follows it.
    pub fn check_grammar(&self) -> Result<(), String> {
        let ev = &self.events;
        if !matches!(ev.first(), Some(TraceEvent::InitialScan { .. })) {
            return Err("first event must be the initial scan".into());
        }
        let scans = ev.iter().filter(|e| matches!(e, TraceEvent::InitialScan { .. })).count();
        if scans != 1 {
            return Err(format!("{scans} initial scans"));
        }
        match ev.iter().position(TraceEvent::is_terminal) {
            Some(i) if i == ev.len() - 1 => {}
            Some(i) => return Err(format!("terminal event at index {i} is not last")),
            None => return Err("no terminal event".into()),
        }
        let mut open: Option<(usize, bool)> = None;
        for (i, e) in ev.iter().enumerate() {
            match e {
                TraceEvent::Decision { parsed, .. } => {
                    if let Some((at, confused)) = open {
                        if !confused {
                            return Err(format!("decision at index {at} has no action before index {i}"));
                        }
                    }
                    let confused = matches!(parsed, Some(ParsedDecision::Step(d)) if d.confuse && d.action_option != "F");
                    open = Some((i, confused));
                }
                TraceEvent::ActionExecuted { .. } => {
                    match open.take() {
                        Some((_, false)) => {}
                        Some((at, true)) => return Err(format!("confused decision at index {at} executed directly")),
                        None => {
                            return Err(format!("action at index {i} without a decision"));
                        }
                    }
                }
                TraceEvent::ConfuseRescan { .. } => match open {
                    Some((_, true)) => {}
                    _ => return Err(format!("rescan at index {i} not preceded by a confused decision")),
                },
                _ => {}
            }
        }
        Ok(())
    }
}

/// Human-readable timeline of a trace.
pub fn render_timeline(trace: &EpisodeTrace) -> String {
    let h = &trace.header;
    let pose = |p: &AgentPose| format!("({:.2}, {:.2}) @ {:.1}°", p.x, p.z, p.heading);
    let mut out = String::new();
    let _ = writeln!(out, "episode {} in world {}", h.episode, h.world);
    let _ = writeln!(out, "instruction: {}", h.instruction);
    let _ = writeln!(
        out,
        "start {}  goal ({:.2}, {:.2})  radius {:.1} m",
        pose(&h.start),
        h.goal.x,
        h.goal.z,
        h.success_radius
    );
    for (i, e) in trace.events.iter().enumerate() {
        let _ = write!(out, "[{i:>3}] ");
        let _ = match e {
            TraceEvent::InitialScan { pose: p, renders, views } => {
                writeln!(out, "initial scan at {}: {renders} renders", pose(p)).and_then(|_| {
                    views.iter().try_for_each(|v| writeln!(out, "        {}: {}", v.view, v.text))
                })
            }
            TraceEvent::StepObservation { step, pose: p, spatial, views, .. } => {
                let objects: Vec<String> = views.iter().map(|v| format!("{}: {}", v.view, v.objects.join(", "))).collect();
                writeln!(out, "step {step} observation at {}", pose(p))
                    .and_then(|_| spatial.iter().try_for_each(|s| writeln!(out, "        {s}")))
                    .and_then(|_| writeln!(out, "        objects [{}]", objects.join("; ")))
            }
            TraceEvent::Decision { ordinal, kind, attempts, parsed } => {
                let retries = attempts.len().saturating_sub(1);
                let summary = match parsed {
                    Some(ParsedDecision::Initial(d)) => {
                        format!("image {}, safe {:.2} m; thought: {}", d.selected_image, d.safe_distance, d.thought)
                    }
                    Some(ParsedDecision::Step(d)) => format!(
                        "option {}, image {}, safe {:.2} m, confuse {}; thought: {}",
                        d.action_option, d.selected_image, d.safe_distance, d.confuse, d.thought
                    ),
                    Some(ParsedDecision::Disambiguation(d)) => {
                        format!("image {}, safe {:.2} m", d.selected_image, d.safe_distance)
                    }
                    None => "no valid answer".to_string(),
                };
                writeln!(out, "decision #{ordinal} ({kind}, {retries} re-prompts): {summary}")
            }
            TraceEvent::ActionExecuted { command, pre, post, clamped } => writeln!(
                out,
                "action turn {:+.1}° forward {:.2} m: {} -> {}{}",
                command.turn,
                command.forward,
                pose(pre),
                pose(post),
                if *clamped { " (clamped)" } else { "" }
            ),
            TraceEvent::ConfuseRescan { pose: p, renders, views } => {
                writeln!(out, "confused: rescan at {} with {renders} renders", pose(p)).and_then(|_| {
                    views.iter().try_for_each(|v| writeln!(out, "        {}: {}", v.view, v.text))
                })
            }
            TraceEvent::StuckShift { command, pre, post, .. } => writeln!(
                out,
                "stuck: shift turn {:+.1}° forward {:.2} m: {} -> {}",
                command.turn,
                command.forward,
                pose(pre),
                pose(post)
            ),
            TraceEvent::Stop { reason, detail } => match detail {
                Some(d) => writeln!(out, "stop: {reason:?} ({d})"),
                None => writeln!(out, "stop: {reason:?}"),
            },
            TraceEvent::BudgetExhausted { decisions } => writeln!(out, "budget exhausted after {decisions} decisions"),
        };
    }
    if let Some(m) = &trace.metrics {
        let _ = writeln!(
            out,
            "metrics: TL {:.2}  NE {:.2}  nDTW {:.3}  SR {}  SPL {:.3}",
            m.tl,
            m.ne,
            m.ndtw,
            m.success * 100,
            m.spl
        );
    }
    out
}
