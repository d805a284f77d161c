//! Per-view semantic object lists behind a pluggable tagger.
//!
//! The bundled [`FixtureTagger`] reads ground truth from the world instead of
//! running a recognition model.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::simworld::{visible_objects, AgentPose, WorldMap};

/// Which camera view an observation came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViewId {
    Left,
    Front,
    Right,
    /// Panoramic view 1..=12.
    Panoramic(u8),
}

impl ViewId {
    pub const FRONTAL: [ViewId; 3] = [ViewId::Left, ViewId::Front, ViewId::Right];

    /// Yaw relative to the agent heading, degrees counter-clockwise, for the
    /// default counter-clockwise panoramic scan.
    pub fn yaw(self) -> f64 {
        match self {
            ViewId::Left => 30.0,
            ViewId::Front => 0.0,
            ViewId::Right => -30.0,
            ViewId::Panoramic(i) => 30.0 * (i as f64 - 1.0),
        }
    }

    /// 1-based image number as shown to the decision provider.
    pub fn image_number(self) -> usize {
        match self {
            ViewId::Left => 1,
            ViewId::Front => 2,
            ViewId::Right => 3,
            ViewId::Panoramic(i) => i as usize,
        }
    }

    pub fn panoramic() -> impl Iterator<Item = ViewId> {
        (1..=12).map(ViewId::Panoramic)
    }
}

impl fmt::Display for ViewId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViewId::Left => f.write_str("left"),
            ViewId::Front => f.write_str("front"),
            ViewId::Right => f.write_str("right"),
            ViewId::Panoramic(i) => write!(f, "view {i}"),
        }
    }
}

/// Ordered, de-duplicated object tags seen in one view.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectList {
    pub view: ViewId,
    pub tags: Vec<String>,
}

impl ObjectList {
    /// Keeps the first occurrence of each tag; drops empty ones and lowercases.
    pub fn new(view: ViewId, tags: impl IntoIterator<Item = String>) -> Self {
        let mut out: Vec<String> = Vec::new();
        for t in tags {
            let t = t.trim().to_lowercase();
            if !t.is_empty() && !out.contains(&t) {
                out.push(t);
            }
        }
        Self { view, tags: out }
    }
}

/// What a tagger gets to look at.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub view: ViewId,
    /// View yaw relative to the agent heading, degrees counter-clockwise.
    pub yaw: f64,
    pub pose: AgentPose,
    pub world: &'a WorldMap,
}

pub trait Tagger: Send + Sync {
    fn tag(&self, obs: &Observation<'_>) -> ObjectList;
}

/// Ground-truth tagger: lists objects whose centers fall within the view
/// frustum and range and are not occluded along the center ray.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixtureTagger {
    /// Horizontal field of view, degrees.
    pub hfov: f64,
    /// Meters.
    pub max_range: f64,
}

impl Default for FixtureTagger {
    fn default() -> Self {
        Self {
            hfov: 60.0,
            max_range: 8.0,
        }
    }
}

impl Tagger for FixtureTagger {
    fn tag(&self, obs: &Observation<'_>) -> ObjectList {
        tag_objects_fixture(obs.world, &obs.pose, obs.view, obs.yaw, self.hfov, self.max_range)
    }
}

/// Objects visible from `pose` in a view yawed `heading_offset` degrees
/// counter-clockwise, nearest first.
pub fn tag_objects_fixture(
    world: &WorldMap,
    pose: &AgentPose,
    view: ViewId,
    heading_offset: f64,
    hfov: f64,
    max_range: f64,
) -> ObjectList {
    let seen = visible_objects(world, pose, heading_offset, hfov, max_range);
    ObjectList::new(view, seen.into_iter().map(|(o, ..)| o.tag.clone()))
}
