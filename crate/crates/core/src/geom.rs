//! Planar geometry shared by the renderer, the navigator and the metrics.

use serde::{Deserialize, Serialize};

/// A point or vector on the ground plane, in meters.
///
/// `x` and `z` span the floor; heading 0° points along +x and 90° along +z.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub z: f64,
}

impl Vec2 {
    pub const fn new(x: f64, z: f64) -> Self {
        Self { x, z }
    }

    /// Unit vector for a heading in degrees (counter-clockwise from +x).
    pub fn from_heading(deg: f64) -> Self {
        let r = deg.to_radians();
        Self::new(r.cos(), r.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.z * o.z
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.z - self.z * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.z)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.z * s)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.z.is_finite()
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.z + o.z)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.z - o.z)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.z]
    }
}

/// A wall segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[Vec2; 2]", into = "[Vec2; 2]")]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub const fn new(a: Vec2, b: Vec2) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    /// Closest distance from `p` to any point of the segment.
    pub fn distance_to(&self, p: Vec2) -> f64 {
        let ab = self.b - self.a;
        let len2 = ab.dot(ab);
        if len2 == 0.0 {
            return p.distance(self.a);
        }
        let t = ((p - self.a).dot(ab) / len2).clamp(0.0, 1.0);
        p.distance(self.a + ab.scale(t))
    }

    /// Parameter `t > 0` along the ray `origin + t·dir` where it crosses the
    /// segment, if it does. `dir` need not be normalized.
    pub fn ray_hit(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        let seg = self.b - self.a;
        let denom = dir.cross(seg);
        if denom.abs() < 1e-12 {
            return None;
        }
        let rel = self.a - origin;
        let t = rel.cross(seg) / denom;
        let u = rel.cross(dir) / denom;
        if t > 1e-12 && (-1e-12..=1.0 + 1e-12).contains(&u) {
            Some(t)
        } else {
            None
        }
    }
}

impl From<[Vec2; 2]> for Segment {
    fn from(a: [Vec2; 2]) -> Self {
        Segment::new(a[0], a[1])
    }
}

impl From<Segment> for [Vec2; 2] {
    fn from(s: Segment) -> Self {
        [s.a, s.b]
    }
}

/// Wraps an angle into `[0, 360)`.
pub fn normalize_deg(deg: f64) -> f64 {
    let d = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360.0 for tiny negative inputs
    if d >= 360.0 {
        0.0
    } else {
        d
    }
}

/// Wraps an angle into `(-180, 180]`.
pub fn signed_deg(deg: f64) -> f64 {
    let d = normalize_deg(deg);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_wrapping() {
        assert_eq!(normalize_deg(-30.0), 330.0);
        assert_eq!(normalize_deg(720.0), 0.0);
        assert_eq!(signed_deg(270.0), -90.0);
        assert_eq!(signed_deg(180.0), 180.0);
        assert_eq!(signed_deg(-180.0), 180.0);
        assert_eq!(normalize_deg(-1e-18), 0.0);
    }

    #[test]
    fn ray_hits_perpendicular_wall() {
        let wall = Segment::new(Vec2::new(3.0, -1.0), Vec2::new(3.0, 1.0));
        let t = wall.ray_hit(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)).unwrap();
        assert!((t - 3.0).abs() < 1e-12);
        assert!(wall.ray_hit(Vec2::new(0.0, 0.0), Vec2::new(-1.0, 0.0)).is_none());
        assert!(wall.ray_hit(Vec2::new(0.0, 5.0), Vec2::new(1.0, 0.0)).is_none());
    }

    #[test]
    fn point_segment_distance() {
        let wall = Segment::new(Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0));
        assert_eq!(wall.distance_to(Vec2::new(1.0, 1.5)), 1.5);
        assert_eq!(wall.distance_to(Vec2::new(5.0, 4.0)), 5.0);
    }
}
