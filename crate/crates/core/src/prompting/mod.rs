//! Prompt construction for the three decision kinds and strict parsing of
//! the provider's structured answers.
//!
//! Wording lives in plain-text templates (see [`TemplateSet`]); the output
//! schemas shown to the provider are generated here so they cannot drift
//! from the parsers.

mod builder;
mod context;
mod decision;
mod extract;
mod template;

pub use builder::{
    build_disambiguation_prompt, build_initial_prompt, build_step_prompt, correction_message, DecisionKind,
    ImageAttachment, Instruction, PromptBundle, ViewSet,
};
pub use context::NavContext;
pub use decision::{
    parse_disambiguation_decision, parse_initial_decision, parse_step_decision, parse_step_decision_with,
    to_canonical_json, ActionOption, ActionOptionSet, DisambiguationDecision, History, InitialDecision, ParseError,
    Status, StepDecision, SubgoalStatus,
};
pub use extract::first_json_object;
pub use template::{TaskDescription, Template, TemplateSet};

use thiserror::Error;

use crate::perception::SpatialMode;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PromptError {
    #[error("template {name}: {message}")]
    Template { name: String, message: String },
    #[error("{what}: expected {expected}, got {got}")]
    Cardinality {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("spatial descriptions are {got:?}, expected {expected:?}")]
    Mode { expected: SpatialMode, got: SpatialMode },
    #[error("disambiguation needs a non-empty trajectory summary")]
    MissingHistory,
    #[error("instruction text is empty")]
    EmptyInstruction,
}
