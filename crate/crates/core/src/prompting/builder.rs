use std::collections::BTreeMap;
use std::fmt;

use base64::Engine;
use serde::{Deserialize, Serialize};

use super::context::NavContext;
use super::decision::{ActionOptionSet, ParseError, SubgoalStatus};
use super::template::TemplateSet;
use super::PromptError;
use crate::perception::{ScanOrder, SpatialDescriptionSet, SpatialMode};
use crate::semantics::{ObjectList, ViewId};

/// The navigation instruction, optionally pre-split into subgoals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instruction {
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subgoals: Vec<String>,
}

impl Instruction {
    pub fn new(text: impl Into<String>, subgoals: Vec<String>) -> Result<Self, PromptError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(PromptError::EmptyInstruction);
        }
        Ok(Self { text, subgoals })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionKind {
    Initial,
    Step,
    Disambiguation,
}

impl DecisionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DecisionKind::Initial => "initial",
            DecisionKind::Step => "step",
            DecisionKind::Disambiguation => "disambiguation",
        }
    }

    /// Number of images the prompt carries.
    pub fn image_count(self) -> usize {
        match self {
            DecisionKind::Step => 3,
            _ => 12,
        }
    }
}

impl fmt::Display for DecisionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An encoded image sent alongside the prompt text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageAttachment {
    pub view: ViewId,
    pub media_type: String,
    pub data_base64: String,
}

impl ImageAttachment {
    pub fn png(view: ViewId, bytes: &[u8]) -> Self {
        Self {
            view,
            media_type: "image/png".into(),
            data_base64: base64::engine::general_purpose::STANDARD.encode(bytes),
        }
    }

    pub fn data_url(&self) -> String {
        format!("data:{};base64,{}", self.media_type, self.data_base64)
    }
}

/// Everything the provider sees for one decision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub kind: DecisionKind,
    pub system_text: String,
    pub user_text: String,
    pub images: Vec<ImageAttachment>,
}

/// Per-view observations: object lists and images in view order, plus the
/// spatial sentences (5 for frontal, 12 for panoramic).
#[derive(Debug, Clone, PartialEq)]
pub struct ViewSet {
    pub objects: Vec<ObjectList>,
    pub spatial: SpatialDescriptionSet,
    pub images: Vec<ImageAttachment>,
}

impl ViewSet {
    fn check(&self, kind: DecisionKind) -> Result<(), PromptError> {
        let (mode, views) = match kind {
            DecisionKind::Step => (SpatialMode::Frontal5, 3),
            _ => (SpatialMode::Panoramic12, 12),
        };
        if self.spatial.mode != mode {
            return Err(PromptError::Mode {
                expected: mode,
                got: self.spatial.mode,
            });
        }
        let counts = [
            ("spatial descriptions", mode.count(), self.spatial.entries.len()),
            ("object lists", views, self.objects.len()),
            ("images", kind.image_count(), self.images.len()),
        ];
        for (what, expected, got) in counts {
            if expected != got {
                return Err(PromptError::Cardinality { what, expected, got });
            }
        }
        Ok(())
    }
}

fn tags(list: &ObjectList) -> String {
    if list.tags.is_empty() {
        "none detected".into()
    } else {
        list.tags.join(", ")
    }
}

fn panoramic_views(views: &ViewSet, order: ScanOrder) -> String {
    let mut out = String::new();
    for (i, (objects, entry)) in views.objects.iter().zip(&views.spatial.entries).enumerate() {
        let label = order.label(i + 1).expect("twelve views");
        out.push_str(&format!(
            "Image {} ({label}):\n  Objects: {}\n  Space: {}\n",
            i + 1,
            tags(objects),
            entry.text
        ));
    }
    out.trim_end().to_string()
}

fn frontal_views(views: &ViewSet) -> String {
    let names = ["left view, 30° to the left", "front view", "right view, 30° to the right"];
    views
        .objects
        .iter()
        .zip(names)
        .enumerate()
        .map(|(i, (objects, name))| format!("Image {} ({name}): objects: {}", i + 1, tags(objects)))
        .collect::<Vec<_>>()
        .join("\n")
}

fn bullet_lines<'a>(lines: impl Iterator<Item = &'a str>) -> String {
    lines.map(|l| format!("- {l}")).collect::<Vec<_>>().join("\n")
}

fn progress(items: &[SubgoalStatus]) -> String {
    if items.is_empty() {
        return "(no subgoals recorded)".into();
    }
    items
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{}. {} [{}]", i + 1, s.subgoal, s.status.as_str()))
        .collect::<Vec<_>>()
        .join("\n")
}

fn subgoal_hint(instr: &Instruction) -> String {
    if instr.subgoals.is_empty() {
        "Split the instruction into ordered subgoals.".into()
    } else {
        let list = instr
            .subgoals
            .iter()
            .enumerate()
            .map(|(i, s)| format!("{}. {s}", i + 1))
            .collect::<Vec<_>>()
            .join("\n");
        format!("Use exactly these subgoals, in this order:\n{list}")
    }
}

const PROGRESS_SCHEMA: &str =
    r#"[{"Subgoal": "<text>", "Status": "<Completed | In Progress | Not Started>"}, ...]"#;

fn initial_schema() -> String {
    format!(
        "{{\n  \"Thought\": \"<text>\",\n  \"Selected Image\": <integer 1-12>,\n  \"Safe Distance\": <meters, number >= 0>,\n  \"Trajectory Summary\": \"<text>\",\n  \"Instruction Progress\": {PROGRESS_SCHEMA}\n}}"
    )
}

fn step_schema(options: &ActionOptionSet) -> String {
    let degrees: Vec<String> = options.degrees().iter().map(u32::to_string).collect();
    format!(
        "{{\n  \"Thought\": \"<text>\",\n  \"Selected Image\": <integer 1-3>,\n  \"Action Options\": \"<one of {}>\",\n  \"Degree\": <{} | null>,\n  \"Safe Distance\": <meters, number >= 0>,\n  \"Confuse\": <true | false>,\n  \"Updated History\": {{\n    \"Trajectory Summary\": \"<text>\",\n    \"Instruction Progress\": {PROGRESS_SCHEMA}\n  }}\n}}",
        options.labels().join(", "),
        degrees.join(" | ")
    )
}

fn disambiguation_schema() -> String {
    format!(
        "{{\n  \"Selected Image\": <integer 1-12>,\n  \"Safe Distance\": <meters, number >= 0>,\n  \"Updated History\": {{\n    \"Trajectory Summary\": \"<text>\",\n    \"Instruction Progress\": {PROGRESS_SCHEMA}\n  }}\n}}"
    )
}

fn system_text(t: &TemplateSet) -> Result<String, PromptError> {
    t.system.render(&BTreeMap::from([
        ("task", t.task.text.clone()),
        ("task_version", t.task.version.clone()),
    ]))
}

fn bundle(kind: DecisionKind, t: &TemplateSet, user_text: String, views: &ViewSet) -> Result<PromptBundle, PromptError> {
    Ok(PromptBundle {
        kind,
        system_text: system_text(t)?,
        user_text,
        images: views.images.clone(),
    })
}

/// Prompt for the first decision, from the 12-view panorama.
pub fn build_initial_prompt(
    t: &TemplateSet,
    instr: &Instruction,
    views: &ViewSet,
    order: ScanOrder,
) -> Result<PromptBundle, PromptError> {
    views.check(DecisionKind::Initial)?;
    let vars = BTreeMap::from([
        ("instruction", instr.text.clone()),
        ("subgoals", subgoal_hint(instr)),
        ("views", panoramic_views(views, order)),
        ("schema", initial_schema()),
    ]);
    bundle(DecisionKind::Initial, t, t.initial.render(&vars)?, views)
}

/// Prompt for a step decision from the three frontal views.
pub fn build_step_prompt(
    t: &TemplateSet,
    instr: &Instruction,
    views: &ViewSet,
    ctx: &NavContext,
    options: &ActionOptionSet,
) -> Result<PromptBundle, PromptError> {
    views.check(DecisionKind::Step)?;
    let past = match (&ctx.previous_thought, ctx.previous_selected_image) {
        (Some(thought), image) => t.past_recall.render(&BTreeMap::from([
            ("previous_thought", thought.clone()),
            ("previous_image", image.map_or_else(|| "none".to_string(), |i| i.to_string())),
        ]))?,
        (None, _) => t.past_recall_first.render(&BTreeMap::new())?,
    };
    let observed = if ctx.observed_objects.is_empty() {
        "none yet".to_string()
    } else {
        ctx.observed_objects.iter().cloned().collect::<Vec<_>>().join(", ")
    };
    let option_lines = options
        .options
        .iter()
        .map(|o| format!("{}: {}", o.label, o.description))
        .collect::<Vec<_>>()
        .join("\n");
    let vars = BTreeMap::from([
        ("instruction", instr.text.clone()),
        ("views", frontal_views(views)),
        ("spatial", bullet_lines(views.spatial.texts())),
        ("observed_objects", observed),
        ("trajectory_summary", ctx.trajectory_summary.clone()),
        ("instruction_progress", progress(&ctx.instruction_progress)),
        ("past_recall", past.trim_end().to_string()),
        ("options", option_lines),
        ("schema", step_schema(options)),
    ]);
    bundle(DecisionKind::Step, t, t.step.render(&vars)?, views)
}

/// Prompt for re-orientation after the provider reported confusion.
pub fn build_disambiguation_prompt(
    t: &TemplateSet,
    instr: &Instruction,
    views: &ViewSet,
    ctx: &NavContext,
    order: ScanOrder,
) -> Result<PromptBundle, PromptError> {
    views.check(DecisionKind::Disambiguation)?;
    if ctx.trajectory_summary.trim().is_empty() {
        return Err(PromptError::MissingHistory);
    }
    let vars = BTreeMap::from([
        ("instruction", instr.text.clone()),
        ("views", panoramic_views(views, order)),
        ("trajectory_summary", ctx.trajectory_summary.clone()),
        ("instruction_progress", progress(&ctx.instruction_progress)),
        ("schema", disambiguation_schema()),
    ]);
    bundle(DecisionKind::Disambiguation, t, t.disambiguation.render(&vars)?, views)
}

/// Follow-up user message after a rejected answer.
pub fn correction_message(err: &ParseError) -> String {
    format!(
        "Your previous answer could not be used: {err}. Reply again with exactly one JSON object that follows the required schema, using the exact field names."
    )
}
