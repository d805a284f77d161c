use serde::{Deserialize, Serialize};

use super::{AgentPose, WorldMap};
use crate::geom::{Segment, Vec2};

/// Low-level motion: rotate, then drive straight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionCommand {
    /// Degrees, counter-clockwise positive, within [-180, 180].
    pub turn: f64,
    /// Meters, never negative.
    pub forward: f64,
}

impl ActionCommand {
    pub const fn new(turn: f64, forward: f64) -> Self {
        Self { turn, forward }
    }
}

/// Slack kept between the clamped stopping point and the margin boundary.
const CONTACT_SLACK: f64 = 1e-9;

/// Parameter at which a disk of radius `margin` moving from `p` along unit
/// `dir` first touches `wall`, or `None` if it never does.
fn first_contact(p: Vec2, dir: Vec2, wall: &Segment, margin: f64) -> Option<f64> {
    let mut roots: Vec<f64> = Vec::with_capacity(6);
    let ab = wall.b - wall.a;
    let len = ab.norm();
    let axis = ab.scale(1.0 / len);
    let normal = Vec2::new(-axis.z, axis.x);

    // sides of the capsule: offset lines at ±margin, inside the segment span
    let h0 = normal.dot(p - wall.a);
    let rate = normal.dot(dir);
    if rate.abs() > 1e-15 {
        for side in [-margin, margin] {
            let s = (side - h0) / rate;
            let along = axis.dot(p + dir.scale(s) - wall.a);
            if (0.0..=len).contains(&along) {
                roots.push(s);
            }
        }
    }
    // rounded caps
    for c in [wall.a, wall.b] {
        let rel = p - c;
        let b = dir.dot(rel);
        let disc = b * b - (rel.dot(rel) - margin * margin);
        if disc >= 0.0 {
            let sq = disc.sqrt();
            roots.push(-b - sq);
            roots.push(-b + sq);
        }
    }
    let s_in = roots.iter().copied().fold(f64::INFINITY, f64::min);
    let s_out = roots.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if roots.is_empty() || s_out < 0.0 {
        return None;
    }
    if s_in >= 0.0 {
        return Some(s_in);
    }
    // already inside the margin: only motion that does not close in is free
    let ap = p - wall.a;
    let t = (ap.dot(ab) / (len * len)).clamp(0.0, 1.0);
    let away = p - (wall.a + ab.scale(t));
    if dir.dot(away) >= 0.0 {
        None
    } else {
        Some(0.0)
    }
}

/// Rotates by `cmd.turn`, then advances up to `cmd.forward` meters along the
/// new heading, stopping short of any point closer than `collision_margin` to
/// a wall or the world bounds. Returns the new pose and whether the forward
/// motion was truncated.
pub fn execute_action(world: &WorldMap, pose: &AgentPose, cmd: &ActionCommand, collision_margin: f64) -> (AgentPose, bool) {
    let heading = crate::geom::normalize_deg(pose.heading + cmd.turn);
    let forward = cmd.forward.max(0.0);
    if forward == 0.0 {
        return (AgentPose { heading, ..*pose }, false);
    }
    let dir = Vec2::from_heading(heading);
    let p = pose.position();
    let contact = world
        .obstacles()
        .filter_map(|w| first_contact(p, dir, &w, collision_margin))
        .fold(f64::INFINITY, f64::min);
    let (advance, clamped) = if contact < forward {
        ((contact - CONTACT_SLACK).max(0.0), true)
    } else {
        (forward, false)
    };
    let q = p + dir.scale(advance);
    (AgentPose { x: q.x, z: q.z, heading }, clamped)
}
