use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::decision::{History, InitialDecision, ParseError, Status, SubgoalStatus};
use crate::semantics::ObjectList;

/// What the provider is reminded of at every step.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NavContext {
    pub trajectory_summary: String,
    pub instruction_progress: Vec<SubgoalStatus>,
    pub previous_selected_image: Option<u8>,
    /// Reasoning behind the last step action, including its prediction.
    pub previous_thought: Option<String>,
    /// Every tag seen so far in the episode.
    pub observed_objects: BTreeSet<String>,
}

impl NavContext {
    /// Context after the initial decision. The initial thought describes a
    /// panoramic choice, so it is not carried into the first step's recall.
    pub fn from_initial(d: &InitialDecision) -> Self {
        Self {
            trajectory_summary: d.trajectory_summary.clone(),
            instruction_progress: d.instruction_progress.clone(),
            ..Self::default()
        }
    }

    pub fn observe<'a>(&mut self, lists: impl IntoIterator<Item = &'a ObjectList>) {
        for l in lists {
            self.observed_objects.extend(l.tags.iter().cloned());
        }
    }

    /// Rejects a history that changes the number of subgoals or moves a
    /// completed subgoal back to an earlier status.
    pub fn check_history(&self, h: &History) -> Result<(), ParseError> {
        const F: &str = "Instruction Progress";
        let fragment = serde_json::to_string(h).unwrap_or_default();
        if self.instruction_progress.is_empty() {
            return Ok(());
        }
        if h.instruction_progress.len() != self.instruction_progress.len() {
            return Err(ParseError::schema(
                F,
                format!(
                    "expected {} subgoals, got {}",
                    self.instruction_progress.len(),
                    h.instruction_progress.len()
                ),
                &fragment,
            ));
        }
        for (i, (old, new)) in self.instruction_progress.iter().zip(&h.instruction_progress).enumerate() {
            if old.status == Status::Completed && new.status != Status::Completed {
                return Err(ParseError::schema(
                    F,
                    format!("subgoal {} ({:?}) was Completed and cannot become {}", i + 1, old.subgoal, new.status.as_str()),
                    &fragment,
                ));
            }
        }
        Ok(())
    }

    pub fn merge_history(&mut self, h: &History) -> Result<(), ParseError> {
        self.check_history(h)?;
        self.trajectory_summary = h.trajectory_summary.clone();
        self.instruction_progress = h.instruction_progress.clone();
        Ok(())
    }
}
