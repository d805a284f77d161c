use serde::{Deserialize, Serialize};

use super::{AgentPose, SimError, WorldMap};
use crate::geom::{signed_deg, Vec2};
use crate::perception::{CameraIntrinsics, DepthFrame};

/// Camera and sensor range for one kind of view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderSettings {
    pub intrinsics: CameraIntrinsics,
    /// Depth reported where no wall is seen, meters.
    pub max_range: f64,
}

impl RenderSettings {
    /// 128×96, 60° HFOV: three views at −30/0/+30 tile −60..+60.
    pub fn frontal() -> Self {
        Self {
            intrinsics: CameraIntrinsics::from_hfov(128, 96, 60.0),
            max_range: 10.0,
        }
    }

    /// 256×192, 60° HFOV, matching the [64, 192) central-half window.
    pub fn panoramic() -> Self {
        Self {
            intrinsics: CameraIntrinsics::from_hfov(256, 192, 60.0),
            max_range: 10.0,
        }
    }
}

/// Distance along the ray from `origin` at world angle `angle_deg` to the
/// nearest wall or bound edge.
pub fn cast_ray(world: &WorldMap, origin: Vec2, angle_deg: f64) -> Option<f64> {
    let dir = Vec2::from_heading(angle_deg);
    world
        .obstacles()
        .filter_map(|w| w.ray_hit(origin, dir))
        .min_by(f64::total_cmp)
}

/// World angle of the ray through column `j` for a view yawed
/// `heading_offset` degrees counter-clockwise from the agent heading.
/// Columns to the right of center turn clockwise.
fn column_angle(pose: &AgentPose, heading_offset: f64, intr: &CameraIntrinsics, j: usize) -> f64 {
    pose.heading + heading_offset - intr.column_azimuth(j)
}

/// Ray range per column, `None` where nothing is hit.
pub fn column_ranges(world: &WorldMap, pose: &AgentPose, heading_offset: f64, rs: &RenderSettings) -> Vec<Option<f64>> {
    let intr = &rs.intrinsics;
    (0..intr.width)
        .map(|j| cast_ray(world, pose.position(), column_angle(pose, heading_offset, intr, j)))
        .collect()
}

/// Renders a depth frame for a view yawed `heading_offset` degrees
/// counter-clockwise from the agent heading.
///
/// Depth is the perpendicular (optical-axis) range to the nearest wall,
/// capped at `max_range`, and is identical down each column. The frame's own
/// `heading_offset` is stored in the perception convention (right positive).
pub fn render_depth(
    world: &WorldMap,
    pose: &AgentPose,
    heading_offset: f64,
    rs: &RenderSettings,
) -> Result<DepthFrame, SimError> {
    if !world.bounds.contains(pose.position()) {
        return Err(SimError::OutOfBounds { x: pose.x, z: pose.z });
    }
    let intr = &rs.intrinsics;
    let column_depth: Vec<f64> = column_ranges(world, pose, heading_offset, rs)
        .into_iter()
        .enumerate()
        .map(|(j, r)| match r {
            Some(r) => {
                let t = intr.column_tangent(j);
                (r / (1.0 + t * t).sqrt()).min(rs.max_range)
            }
            None => rs.max_range,
        })
        .collect();
    let mut depths = Vec::with_capacity(intr.width * intr.height);
    for _ in 0..intr.height {
        depths.extend_from_slice(&column_depth);
    }
    Ok(DepthFrame::new(
        intr.width,
        intr.height,
        depths,
        signed_deg(-heading_offset),
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Segment;
    use crate::simworld::Bounds;

    fn world(walls: Vec<Segment>) -> WorldMap {
        WorldMap {
            name: "t".into(),
            bounds: Bounds {
                min: Vec2::new(-50.0, -50.0),
                max: Vec2::new(50.0, 50.0),
            },
            walls,
            objects: vec![],
        }
    }

    fn odd_camera() -> RenderSettings {
        RenderSettings {
            intrinsics: CameraIntrinsics::from_hfov(65, 4, 60.0),
            max_range: 10.0,
        }
    }

    #[test]
    fn wall_straight_ahead() {
        let w = world(vec![Segment::new(Vec2::new(3.0, -5.0), Vec2::new(3.0, 5.0))]);
        let rs = RenderSettings::frontal();
        let f = render_depth(&w, &AgentPose::new(0.0, 0.0, 0.0), 0.0, &rs).unwrap();
        for j in 0..f.width {
            assert!((f.depth(j, 0) - 3.0).abs() < 1e-9);
            assert_eq!(f.depth(j, 0), f.depth(j, f.height - 1));
        }
    }

    #[test]
    fn empty_direction_reports_max_range() {
        let w = world(vec![]);
        let f = render_depth(&w, &AgentPose::new(0.0, 0.0, 0.0), 0.0, &odd_camera()).unwrap();
        assert_eq!(f.depth(32, 0), 10.0);
    }

    #[test]
    fn oblique_wall_matches_closed_form() {
        // wall along x + z = 4; facing +x from the origin, the ray along the
        // axis meets it at x = 4, perpendicular depth 4
        let w = world(vec![Segment::new(Vec2::new(4.0, 0.0), Vec2::new(0.0, 4.0))]);
        let f = render_depth(&w, &AgentPose::new(0.0, 0.0, 0.0), 0.0, &odd_camera()).unwrap();
        assert!((f.depth(32, 0) - 4.0).abs() < 1e-9);

        // same wall seen from a heading of 45°: ray hits at distance 4/√2
        let f = render_depth(&w, &AgentPose::new(0.0, 0.0, 45.0), 0.0, &odd_camera()).unwrap();
        assert!((f.depth(32, 0) - 4.0 / 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn left_offset_looks_counter_clockwise() {
        let w = world(vec![
            Segment::new(Vec2::new(-40.0, 2.0), Vec2::new(40.0, 2.0)),
            Segment::new(Vec2::new(-40.0, -7.0), Vec2::new(40.0, -7.0)),
        ]);
        let rs = odd_camera();
        let pose = AgentPose::new(0.0, 0.0, 0.0);
        let left = render_depth(&w, &pose, 90.0, &rs).unwrap();
        let right = render_depth(&w, &pose, -90.0, &rs).unwrap();
        assert!((left.depth(32, 0) - 2.0).abs() < 1e-9);
        assert!((right.depth(32, 0) - 7.0).abs() < 1e-9);
        assert_eq!(left.heading_offset, -90.0);
        // rightmost column of the forward view looks clockwise (toward -z)
        let fwd = column_ranges(&w, &pose, 0.0, &rs);
        let az = rs.intrinsics.column_azimuth(64).to_radians();
        assert!((fwd[64].unwrap() - 7.0 / az.sin()).abs() < 1e-9);
    }

    #[test]
    fn out_of_bounds_pose_is_rejected() {
        let w = world(vec![]);
        let err = render_depth(&w, &AgentPose::new(99.0, 0.0, 0.0), 0.0, &odd_camera()).unwrap_err();
        assert!(matches!(err, SimError::OutOfBounds { .. }));
    }
}
