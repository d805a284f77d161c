//! Zero-shot vision-and-language navigation from three frontal depth views.
//!
//! Depth frames become short spatial sentences ([`perception`]), visible
//! objects become tag lists ([`semantics`]), and both are packed into
//! structured prompts ([`prompting`]) for a pluggable decision provider
//! ([`backend`]). The [`navigator`] runs the episode loop inside a 2D
//! simulated world ([`simworld`]) and [`metrics`] scores the result.

pub mod backend;
pub mod geom;
pub mod metrics;
pub mod navigator;
pub mod perception;
pub mod prompting;
pub mod report;
pub mod run;
pub mod semantics;
pub mod simworld;
