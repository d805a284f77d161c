use image::{ImageFormat, Rgb, RgbImage};

use super::{cast_ray, AgentPose, RenderSettings, WorldMap, WorldObject};
use crate::geom::signed_deg;

const CAMERA_HEIGHT: f64 = 1.25;
const WALL_HEIGHT: f64 = 2.5;
const OBJECT_HEIGHT: f64 = 1.0;

/// Objects whose centers are inside the view frustum, within `max_range`, and
/// not hidden behind a wall along the center ray. Returned with their
/// distance and azimuth (degrees, counter-clockwise from the view axis),
/// nearest first.
pub fn visible_objects<'w>(
    world: &'w WorldMap,
    pose: &AgentPose,
    heading_offset: f64,
    hfov: f64,
    max_range: f64,
) -> Vec<(&'w WorldObject, f64, f64)> {
    let eye = pose.position();
    let axis = pose.heading + heading_offset;
    let mut seen: Vec<_> = world
        .objects
        .iter()
        .filter_map(|o| {
            let rel = o.center - eye;
            let dist = rel.norm();
            if dist > max_range {
                return None;
            }
            let azimuth = if dist == 0.0 {
                0.0
            } else {
                signed_deg(rel.z.atan2(rel.x).to_degrees() - axis)
            };
            if azimuth.abs() > hfov / 2.0 {
                return None;
            }
            let dir = rel.scale(1.0 / dist.max(f64::MIN_POSITIVE));
            let blocked = world
                .walls
                .iter()
                .any(|w| w.ray_hit(eye, dir).is_some_and(|t| t < dist - 1e-9));
            (!blocked).then_some((o, dist, azimuth))
        })
        .collect();
    seen.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.tag.cmp(&b.0.tag)));
    seen
}

fn tag_color(tag: &str) -> Rgb<u8> {
    // FNV-1a, spread over saturated hues
    let h = tag.bytes().fold(0xcbf29ce484222325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100000001b3));
    let c = |s: u32| 60 + ((h >> s) & 0xff) as u8 % 180;
    Rgb([c(0), c(16), c(32)])
}

/// Flat-shaded schematic RGB view: light ceiling, gray walls darkening with
/// distance, brown floor and objects as colored boxes. Returned PNG-encoded.
pub fn render_schematic(world: &WorldMap, pose: &AgentPose, heading_offset: f64, rs: &RenderSettings) -> Vec<u8> {
    let intr = &rs.intrinsics;
    let (w, h) = (intr.width as u32, intr.height as u32);
    let mut img = RgbImage::new(w, h);
    let mut wall_depth = vec![rs.max_range; intr.width];
    for (j, slot) in wall_depth.iter_mut().enumerate() {
        let angle = pose.heading + heading_offset - intr.column_azimuth(j);
        let t = intr.column_tangent(j);
        let z = cast_ray(world, pose.position(), angle)
            .map(|r| r / (1.0 + t * t).sqrt())
            .unwrap_or(f64::INFINITY)
            .min(rs.max_range);
        *slot = z;
        let top = intr.cy - intr.fy * (WALL_HEIGHT - CAMERA_HEIGHT) / z;
        let bottom = intr.cy + intr.fy * CAMERA_HEIGHT / z;
        let shade = (40.0 + 160.0 * (-z / 5.0).exp()) as u8;
        for v in 0..h {
            let vf = v as f64;
            let px = if vf < top {
                Rgb([205, 205, 215])
            } else if vf <= bottom {
                Rgb([shade, shade, shade])
            } else {
                Rgb([120, 100, 80])
            };
            img.put_pixel(j as u32, v, px);
        }
    }

    let mut objects = visible_objects(world, pose, heading_offset, intr.hfov, rs.max_range);
    objects.reverse();
    for (obj, dist, azimuth) in objects {
        let rad = azimuth.to_radians();
        let depth = dist * rad.cos();
        if depth <= 1e-6 {
            continue;
        }
        let u = intr.cx - intr.fx * rad.tan();
        let half = intr.fx * obj.radius / depth;
        let top = intr.cy + intr.fy * (CAMERA_HEIGHT - OBJECT_HEIGHT) / depth;
        let bottom = intr.cy + intr.fy * CAMERA_HEIGHT / depth;
        let color = tag_color(&obj.tag);
        let u0 = (u - half).floor().max(0.0) as u32;
        let u1 = ((u + half).ceil().max(0.0) as u32).min(w);
        let v0 = top.floor().max(0.0) as u32;
        let v1 = (bottom.ceil().max(0.0) as u32).min(h);
        for x in u0..u1 {
            if depth >= wall_depth[x as usize] {
                continue;
            }
            for y in v0..v1 {
                img.put_pixel(x, y, color);
            }
        }
    }

    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png).expect("PNG encoding to memory cannot fail");
    out.into_inner()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Segment, Vec2};
    use crate::simworld::Bounds;

    fn scene() -> WorldMap {
        WorldMap {
            name: "s".into(),
            bounds: Bounds {
                min: Vec2::new(-10.0, -10.0),
                max: Vec2::new(10.0, 10.0),
            },
            walls: vec![Segment::new(Vec2::new(3.0, 1.0), Vec2::new(3.0, 3.0))],
            objects: vec![
                WorldObject {
                    tag: "sofa".into(),
                    center: Vec2::new(2.0, 0.0),
                    radius: 0.4,
                },
                WorldObject {
                    tag: "lamp".into(),
                    center: Vec2::new(5.0, 2.0),
                    radius: 0.2,
                },
            ],
        }
    }

    #[test]
    fn occluded_object_is_hidden() {
        let w = scene();
        let pose = AgentPose::new(0.0, 0.0, 0.0);
        let tags: Vec<_> = visible_objects(&w, &pose, 0.0, 60.0, 8.0)
            .into_iter()
            .map(|(o, ..)| o.tag.as_str())
            .collect();
        assert_eq!(tags, vec!["sofa"]);
    }

    #[test]
    fn schematic_is_a_deterministic_png() {
        let w = scene();
        let pose = AgentPose::new(0.0, 0.0, 0.0);
        let rs = RenderSettings::frontal();
        let a = render_schematic(&w, &pose, 0.0, &rs);
        let b = render_schematic(&w, &pose, 0.0, &rs);
        assert_eq!(a, b);
        assert_eq!(&a[1..4], b"PNG");
        let decoded = image::load_from_memory(&a).unwrap().to_rgb8();
        assert_eq!(decoded.dimensions(), (128, 96));
        // the sofa sits on the axis, below the horizon
        assert_eq!(*decoded.get_pixel(64, 80), tag_color("sofa"));
    }
}
