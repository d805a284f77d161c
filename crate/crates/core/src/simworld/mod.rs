//! Synthetic 2D indoor worlds.
//!
//! Walls are vertical and floor-to-ceiling, so a depth image is constant
//! down each column and the whole scene reduces to planar ray casting. The
//! module renders depth frames and schematic RGB views, executes motion with
//! collision clamping, and computes grid geodesics for SPL.

mod geodesic;
mod motion;
mod render;
mod schematic;
mod world;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{normalize_deg, Vec2};

pub use geodesic::{geodesic_distance, OccupancyGrid};
pub use motion::{execute_action, ActionCommand};
pub use render::{cast_ray, column_ranges, render_depth, RenderSettings};
pub use schematic::{render_schematic, visible_objects};
pub use world::{
    collect_json_files, load_episode, load_episode_in, load_world, parse_episode, parse_world, Bounds,
    EpisodeSpec, WorldMap, WorldObject,
};

/// Agent position and heading in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentPose {
    pub x: f64,
    pub z: f64,
    /// Degrees, counter-clockwise positive, in `[0, 360)`.
    pub heading: f64,
}

impl AgentPose {
    pub fn new(x: f64, z: f64, heading: f64) -> Self {
        Self {
            x,
            z,
            heading: normalize_deg(heading),
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.z)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.z.is_finite() && self.heading.is_finite()
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Syntax {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}:{line}: field `{field}`: {message}", path.display())]
    Invalid {
        path: PathBuf,
        field: String,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("pose ({x:.3}, {z:.3}) is outside the world bounds")]
    OutOfBounds { x: f64, z: f64 },
    #[error(transparent)]
    Perception(#[from] crate::perception::PerceptionError),
}
