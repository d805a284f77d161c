//! The episode state machine.
//!
//! An episode starts with a 12-view scan and an initial decision, then loops
//! over frontal observations and step decisions until the provider picks the
//! stop option, the decision budget runs out, or the provider fails. A step
//! decision flagged as confused triggers a fresh 12-view scan and a
//! disambiguation decision. If two consecutive frontal observations produce
//! identical spatial sentences, the agent makes a small rightward shift
//! before acting.

mod trace;

pub use trace::{
    render_timeline, EpisodeTrace, FrontalView, ParsedDecision, StopReason, TraceError, TraceEvent, TraceHeader,
    TraceLine, ViewSummary,
};

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{with_parse_retry, Attempt, DecisionProvider, ProviderFailure, RequestKey};
use crate::geom::signed_deg;
use crate::metrics::{EpisodeMetrics, EpisodeRecord};
use crate::perception::{
    bin_frontal, bin_index, central_half, column_ground_distances, panoramic_view_distance, project_depth,
    render_frontal_text, render_panoramic_text_with, DirectionalBin, PerceptionError, ScanOrder,
    SpatialDescriptionSet, Thresholds,
};
use crate::prompting::{
    build_disambiguation_prompt, build_initial_prompt, build_step_prompt, parse_disambiguation_decision,
    parse_initial_decision, parse_step_decision_with, ActionOptionSet, DecisionKind, ImageAttachment,
    InitialDecision, Instruction, NavContext, ParseError, PromptError, StepDecision, TemplateSet, ViewSet,
};
use crate::semantics::{FixtureTagger, ObjectList, Observation, Tagger, ViewId};
use crate::simworld::{
    execute_action, geodesic_distance, render_depth, render_schematic, ActionCommand, AgentPose, EpisodeSpec,
    RenderSettings, SimError, WorldMap,
};

/// Navigator settings. Every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NavConfig {
    /// Decisions allowed per episode, initial and disambiguation included.
    pub max_steps: usize,
    /// Kept between the executed forward distance and measured clearance, meters.
    pub safety_margin: f64,
    /// Minimum distance to any wall during motion, meters.
    pub collision_margin: f64,
    /// Turn of the stuck shift, degrees counter-clockwise (negative is right).
    pub stuck_turn: f64,
    /// Forward distance of the stuck shift, meters.
    pub stuck_forward: f64,
    /// Center crop applied to frontal depth frames.
    pub center_crop: f64,
    pub thresholds: Thresholds,
    pub frontal: RenderSettings,
    pub panoramic: RenderSettings,
    pub scan_order: ScanOrder,
    pub tagger: FixtureTagger,
    pub options: ActionOptionSet,
    /// Corrective re-prompts after an unusable answer.
    pub max_reprompts: usize,
    /// Occupancy grid cell size for shortest paths, meters.
    pub geodesic_resolution: f64,
    /// Attach schematic renders to prompts.
    pub attach_images: bool,
}

impl Default for NavConfig {
    fn default() -> Self {
        Self {
            max_steps: 25,
            safety_margin: 0.3,
            collision_margin: 0.2,
            stuck_turn: -30.0,
            stuck_forward: 0.25,
            center_crop: 0.8,
            thresholds: Thresholds::default(),
            frontal: RenderSettings::frontal(),
            panoramic: RenderSettings::panoramic(),
            scan_order: ScanOrder::CounterClockwise,
            tagger: FixtureTagger::default(),
            options: ActionOptionSet::canonical(),
            max_reprompts: 2,
            geodesic_resolution: 0.1,
            attach_images: true,
        }
    }
}

impl NavConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.thresholds.validate().map_err(|e| e.to_string())?;
        self.frontal.intrinsics.validate().map_err(|e| format!("frontal: {e}"))?;
        self.panoramic.intrinsics.validate().map_err(|e| format!("panoramic: {e}"))?;
        let nonneg = [
            ("safety_margin", self.safety_margin),
            ("collision_margin", self.collision_margin),
            ("stuck_forward", self.stuck_forward),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("{name} must be a non-negative number"));
            }
        }
        if !(self.center_crop > 0.0 && self.center_crop <= 1.0) {
            return Err("center_crop must lie in (0, 1]".into());
        }
        if self.geodesic_resolution.is_nan() || self.geodesic_resolution <= 0.0 {
            return Err("geodesic_resolution must be positive".into());
        }
        if self.stuck_turn.abs() > 180.0 {
            return Err("stuck_turn must lie in [-180, 180]".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum NavError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("invalid episode: {0}")]
    Episode(String),
    #[error("writing trace: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub final_pose: AgentPose,
    pub path: Vec<AgentPose>,
    pub stop_reason: StopReason,
    /// Set when the provider failed, or was misconfigured.
    pub failure: Option<String>,
    /// True when the failure was a configuration problem such as a missing
    /// script entry.
    pub configuration_error: bool,
    pub metrics: EpisodeMetrics,
}

/// What the step decision asks the agent to do.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepAction {
    Move(ActionCommand),
    Stop,
}

fn clamp_forward(safe: f64, clearance: Option<f64>, margin: f64) -> f64 {
    match clearance {
        Some(c) => safe.min(c - margin).max(0.0),
        None => 0.0,
    }
}

/// Turn toward the selected panoramic view and move at most the provider's
/// safe distance, kept `safety_margin` short of that view's clearance.
pub fn apply_initial_decision(
    selected_image: u8,
    safe_distance: f64,
    view_means: &[Option<f64>],
    order: ScanOrder,
    safety_margin: f64,
) -> ActionCommand {
    let i = selected_image as usize;
    let turn = order.turn_to(i).expect("parser guarantees 1..=12");
    let clearance = view_means.get(i - 1).copied().flatten();
    ActionCommand::new(turn, clamp_forward(safe_distance, clearance, safety_margin))
}

/// Maps a step decision to a motion using the bin that faces the option's
/// turn.
pub fn apply_step_decision(
    d: &StepDecision,
    bins: &[DirectionalBin; 5],
    options: &ActionOptionSet,
    safety_margin: f64,
) -> StepAction {
    let opt = options.get(&d.action_option).expect("parser guarantees a known option");
    if opt.stop {
        return StepAction::Stop;
    }
    // bins use right-positive angles
    let clearance = bin_index(-opt.turn).and_then(|b| bins[b].mean());
    StepAction::Move(ActionCommand::new(
        opt.turn,
        clamp_forward(d.safe_distance, clearance, safety_margin),
    ))
}

/// True when every sentence of two frontal description sets is identical.
pub fn detect_stuck(prev: &SpatialDescriptionSet, cur: &SpatialDescriptionSet) -> bool {
    prev.mode == cur.mode && prev.texts().eq(cur.texts())
}

struct Panorama {
    views: ViewSet,
    means: Vec<Option<f64>>,
    summaries: Vec<ViewSummary>,
}

struct Frontal {
    views: ViewSet,
    bins: [DirectionalBin; 5],
    summaries: Vec<FrontalView>,
}

/// Yaw (degrees counter-clockwise) of the three frontal views.
const FRONTAL_YAW: [f64; 3] = [30.0, 0.0, -30.0];

/// Runs episodes in one world with one provider.
pub struct Navigator<'a> {
    pub world: &'a WorldMap,
    pub provider: &'a dyn DecisionProvider,
    pub cfg: &'a NavConfig,
    pub templates: &'a TemplateSet,
    pub tagger: &'a dyn Tagger,
}

impl<'a> Navigator<'a> {
    fn image(&self, view: ViewId, pose: &AgentPose, yaw: f64, rs: &RenderSettings) -> Option<ImageAttachment> {
        self.cfg
            .attach_images
            .then(|| ImageAttachment::png(view, &render_schematic(self.world, pose, yaw, rs)))
    }

    fn tags(&self, view: ViewId, yaw: f64, pose: &AgentPose) -> ObjectList {
        self.tagger.tag(&Observation {
            view,
            yaw,
            pose: *pose,
            world: self.world,
        })
    }

    fn observe_panorama(&self, pose: &AgentPose) -> Result<Panorama, NavError> {
        let rs = &self.cfg.panoramic;
        let (lo, hi) = central_half(rs.intrinsics.width);
        let mut objects = Vec::with_capacity(12);
        let mut images = Vec::with_capacity(12);
        let mut means = Vec::with_capacity(12);
        for view in ViewId::panoramic() {
            let ViewId::Panoramic(i) = view else { unreachable!() };
            let yaw = self.cfg.scan_order.view_angle(i as usize)? as f64;
            let frame = render_depth(self.world, pose, yaw, rs)?;
            let grid = project_depth(&frame, &rs.intrinsics, 1.0)?;
            let cd = column_ground_distances(&grid, frame.heading_offset)?;
            means.push(panoramic_view_distance(&cd, lo, hi)?);
            objects.push(self.tags(view, yaw, pose));
            images.extend(self.image(view, pose, yaw, rs));
        }
        let spatial = render_panoramic_text_with(&means, &self.cfg.thresholds, self.cfg.scan_order)?;
        let summaries = objects
            .iter()
            .zip(&means)
            .zip(&spatial.entries)
            .map(|((o, m), e)| ViewSummary {
                view: o.view,
                yaw: self.cfg.scan_order.view_angle(o.view.image_number()).unwrap_or(0) as f64,
                objects: o.tags.clone(),
                distance: *m,
                text: e.text.clone(),
            })
            .collect();
        Ok(Panorama {
            views: ViewSet {
                objects,
                spatial,
                images,
            },
            means,
            summaries,
        })
    }

    fn observe_frontal(&self, pose: &AgentPose) -> Result<Frontal, NavError> {
        let rs = &self.cfg.frontal;
        let mut cds = Vec::with_capacity(3);
        let mut objects = Vec::with_capacity(3);
        let mut images = Vec::with_capacity(3);
        for (view, yaw) in ViewId::FRONTAL.into_iter().zip(FRONTAL_YAW) {
            let frame = render_depth(self.world, pose, yaw, rs)?;
            let grid = project_depth(&frame, &rs.intrinsics, self.cfg.center_crop)?;
            cds.push(column_ground_distances(&grid, frame.heading_offset)?);
            objects.push(self.tags(view, yaw, pose));
            images.extend(self.image(view, pose, yaw, rs));
        }
        let bins = bin_frontal(&cds, &rs.intrinsics)?;
        let spatial = render_frontal_text(&bins, &self.cfg.thresholds);
        let summaries = objects
            .iter()
            .map(|o| FrontalView {
                view: o.view,
                objects: o.tags.clone(),
            })
            .collect();
        Ok(Frontal {
            views: ViewSet {
                objects,
                spatial,
                images,
            },
            bins,
            summaries,
        })
    }

    /// Runs one episode. `on_line` sees every trace line as soon as it exists,
    /// so a caller can persist the trace incrementally.
    pub fn run(
        &self,
        spec: &EpisodeSpec,
        on_line: &mut dyn FnMut(&TraceLine) -> io::Result<()>,
    ) -> Result<(EpisodeOutcome, EpisodeTrace), NavError> {
        spec.validate_in(self.world).map_err(NavError::Episode)?;
        let instruction = Instruction::new(spec.instruction.clone(), spec.subgoals.clone())?;
        let shortest = geodesic_distance(
            self.world,
            spec.start.position(),
            spec.goal,
            self.cfg.geodesic_resolution,
            self.cfg.collision_margin,
        );
        let header = TraceHeader {
            episode: spec.id.clone(),
            world: spec.world.clone(),
            instruction: spec.instruction.clone(),
            start: spec.start,
            goal: spec.goal,
            success_radius: spec.success_radius,
            reference_path: spec.reference(),
            shortest_path: shortest.is_finite().then_some(shortest),
        };
        on_line(&TraceLine::Header(header.clone()))?;
        let mut run = Run {
            nav: self,
            spec,
            instruction,
            events: Vec::new(),
            on_line,
            pose: spec.start,
            path: vec![spec.start],
            decisions: 0,
        };
        let (reason, failure, configuration_error) = run.drive()?;
        let Run { events, path, pose, on_line, .. } = run;

        let positions: Vec<_> = path.iter().map(AgentPose::position).collect();
        let reference = spec.reference();
        let metrics = EpisodeMetrics::compute(&EpisodeRecord {
            episode: &spec.id,
            path: &positions,
            goal: spec.goal,
            reference: &reference,
            success_radius: spec.success_radius,
            shortest: header.shortest_path.unwrap_or(0.0),
        });
        on_line(&TraceLine::Metrics(metrics.clone()))?;
        Ok((
            EpisodeOutcome {
                final_pose: pose,
                path,
                stop_reason: reason,
                failure,
                configuration_error,
                metrics: metrics.clone(),
            },
            EpisodeTrace {
                header,
                events,
                metrics: Some(metrics),
            },
        ))
    }
}

/// Mutable state of one running episode.
struct Run<'n, 'a, 's> {
    nav: &'n Navigator<'a>,
    spec: &'s EpisodeSpec,
    instruction: Instruction,
    events: Vec<TraceEvent>,
    on_line: &'n mut dyn FnMut(&TraceLine) -> io::Result<()>,
    pose: AgentPose,
    path: Vec<AgentPose>,
    decisions: usize,
}

type Ending = (StopReason, Option<String>, bool);

impl Run<'_, '_, '_> {
    fn emit(&mut self, e: TraceEvent) -> io::Result<()> {
        (self.on_line)(&TraceLine::Event(e.clone()))?;
        self.events.push(e);
        Ok(())
    }

    fn budget_left(&self) -> bool {
        self.decisions < self.nav.cfg.max_steps
    }

    fn exhausted(&mut self) -> Result<Ending, NavError> {
        self.emit(TraceEvent::BudgetExhausted {
            decisions: self.decisions,
        })?;
        Ok((StopReason::BudgetExhausted, None, false))
    }

    fn fail(&mut self, f: ProviderFailure) -> Result<Ending, NavError> {
        let detail = f.to_string();
        log::warn!("episode {}: {detail}", self.spec.id);
        self.emit(TraceEvent::Stop {
            reason: StopReason::ProviderFailure,
            detail: Some(detail.clone()),
        })?;
        Ok((StopReason::ProviderFailure, Some(detail), f.is_configuration()))
    }

    fn decide<T>(
        &mut self,
        kind: DecisionKind,
        prompt: &crate::prompting::PromptBundle,
        parse: impl Fn(&str) -> Result<T, ParseError>,
        wrap: impl Fn(&T) -> ParsedDecision,
    ) -> Result<Result<T, ProviderFailure>, NavError> {
        let key = RequestKey {
            episode: self.spec.id.clone(),
            ordinal: self.decisions,
            kind,
            attempt: 0,
        };
        let (result, attempts): (_, Vec<Attempt>) =
            with_parse_retry(self.nav.provider, &key, prompt, self.nav.cfg.max_reprompts, parse);
        self.emit(TraceEvent::Decision {
            ordinal: self.decisions,
            kind,
            attempts,
            parsed: result.as_ref().ok().map(&wrap),
        })?;
        self.decisions += 1;
        Ok(result)
    }

    fn execute(&mut self, cmd: ActionCommand, shift: bool) -> Result<(), NavError> {
        let pre = self.pose;
        let (post, clamped) = execute_action(self.nav.world, &pre, &cmd, self.nav.cfg.collision_margin);
        self.pose = post;
        self.path.push(post);
        let e = if shift {
            TraceEvent::StuckShift {
                command: cmd,
                pre,
                post,
                clamped,
            }
        } else {
            TraceEvent::ActionExecuted {
                command: cmd,
                pre,
                post,
                clamped,
            }
        };
        Ok(self.emit(e)?)
    }

    fn drive(&mut self) -> Result<Ending, NavError> {
        let nav = self.nav;
        let cfg = nav.cfg;
        let pano = nav.observe_panorama(&self.pose)?;
        self.emit(TraceEvent::InitialScan {
            pose: self.pose,
            renders: 12,
            views: pano.summaries.clone(),
        })?;
        if !self.budget_left() {
            return self.exhausted();
        }
        let prompt = build_initial_prompt(nav.templates, &self.instruction, &pano.views, cfg.scan_order)?;
        let subgoals = self.instruction.subgoals.len();
        let initial = self.decide(
            DecisionKind::Initial,
            &prompt,
            |raw| {
                let d = parse_initial_decision(raw)?;
                check_subgoal_count(&d, subgoals)?;
                Ok(d)
            },
            |d| ParsedDecision::Initial(d.clone()),
        )?;
        let initial = match initial {
            Ok(d) => d,
            Err(f) => return self.fail(f),
        };
        let mut ctx = NavContext::from_initial(&initial);
        ctx.observe(&pano.views.objects);
        let cmd = apply_initial_decision(
            initial.selected_image,
            initial.safe_distance,
            &pano.means,
            cfg.scan_order,
            cfg.safety_margin,
        );
        self.execute(cmd, false)?;

        let mut previous_spatial: Option<SpatialDescriptionSet> = None;
        let mut step = 0;
        loop {
            if !self.budget_left() {
                return self.exhausted();
            }
            step += 1;
            let obs = nav.observe_frontal(&self.pose)?;
            self.emit(TraceEvent::StepObservation {
                step,
                pose: self.pose,
                views: obs.summaries.clone(),
                bins: obs.bins.to_vec(),
                spatial: obs.views.spatial.texts().map(str::to_string).collect(),
            })?;
            ctx.observe(&obs.views.objects);
            let prompt = build_step_prompt(nav.templates, &self.instruction, &obs.views, &ctx, &cfg.options)?;
            let check_ctx = ctx.clone();
            let d = self.decide(
                DecisionKind::Step,
                &prompt,
                |raw| {
                    let d = parse_step_decision_with(raw, &cfg.options)?;
                    check_ctx.check_history(&d.updated_history)?;
                    Ok(d)
                },
                |d| ParsedDecision::Step(d.clone()),
            )?;
            let d = match d {
                Ok(d) => d,
                Err(f) => return self.fail(f),
            };
            ctx.merge_history(&d.updated_history).expect("checked while parsing");
            let action = apply_step_decision(&d, &obs.bins, &cfg.options, cfg.safety_margin);
            let StepAction::Move(cmd) = action else {
                self.emit(TraceEvent::Stop {
                    reason: StopReason::AgentStop,
                    detail: None,
                })?;
                return Ok((StopReason::AgentStop, None, false));
            };
            if previous_spatial
                .as_ref()
                .is_some_and(|prev| detect_stuck(prev, &obs.views.spatial))
            {
                self.execute(stuck_shift(cfg), true)?;
            }
            previous_spatial = Some(obs.views.spatial);

            if !d.confuse {
                self.execute(cmd, false)?;
                ctx.previous_thought = Some(d.thought);
                ctx.previous_selected_image = Some(d.selected_image);
                continue;
            }

            if !self.budget_left() {
                return self.exhausted();
            }
            let pano = nav.observe_panorama(&self.pose)?;
            self.emit(TraceEvent::ConfuseRescan {
                pose: self.pose,
                renders: 12,
                views: pano.summaries.clone(),
            })?;
            ctx.observe(&pano.views.objects);
            let prompt =
                build_disambiguation_prompt(nav.templates, &self.instruction, &pano.views, &ctx, cfg.scan_order)?;
            let check_ctx = ctx.clone();
            let dd = self.decide(
                DecisionKind::Disambiguation,
                &prompt,
                |raw| {
                    let d = parse_disambiguation_decision(raw)?;
                    check_ctx.check_history(&d.updated_history)?;
                    Ok(d)
                },
                |d| ParsedDecision::Disambiguation(d.clone()),
            )?;
            let dd = match dd {
                Ok(d) => d,
                Err(f) => return self.fail(f),
            };
            ctx.merge_history(&dd.updated_history).expect("checked while parsing");
            let cmd = apply_initial_decision(
                dd.selected_image,
                dd.safe_distance,
                &pano.means,
                cfg.scan_order,
                cfg.safety_margin,
            );
            self.execute(cmd, false)?;
            previous_spatial = None;
            ctx.previous_thought = None;
            ctx.previous_selected_image = None;
        }
    }
}

fn check_subgoal_count(d: &InitialDecision, expected: usize) -> Result<(), ParseError> {
    if expected > 0 && d.instruction_progress.len() != expected {
        return Err(ParseError::schema(
            "Instruction Progress",
            format!("expected {expected} subgoals, got {}", d.instruction_progress.len()),
            &serde_json::to_string(&d.instruction_progress).unwrap_or_default(),
        ));
    }
    Ok(())
}

/// Runs one episode with the bundled templates and the fixture tagger,
/// keeping the trace in memory.
pub fn run_episode(
    spec: &EpisodeSpec,
    world: &WorldMap,
    provider: &dyn DecisionProvider,
    cfg: &NavConfig,
) -> Result<(EpisodeOutcome, EpisodeTrace), NavError> {
    let templates = TemplateSet::builtin();
    let nav = Navigator {
        world,
        provider,
        cfg,
        templates: &templates,
        tagger: &cfg.tagger,
    };
    nav.run(spec, &mut |_| Ok(()))
}

/// Signed turn that the stuck shift applies, normalized.
pub fn stuck_shift(cfg: &NavConfig) -> ActionCommand {
    ActionCommand::new(signed_deg(cfg.stuck_turn), cfg.stuck_forward)
}
