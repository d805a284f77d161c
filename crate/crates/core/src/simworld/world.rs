use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use super::{AgentPose, LoadError};
use crate::geom::{Segment, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Vec2,
    pub max: Vec2,
}

impl Bounds {
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.z >= self.min.z && p.z <= self.max.z
    }

    /// The four edges, counter-clockwise from the lower-left corner.
    pub fn edges(&self) -> [Segment; 4] {
        let (a, c) = (self.min, self.max);
        let b = Vec2::new(c.x, a.z);
        let d = Vec2::new(a.x, c.z);
        [Segment::new(a, b), Segment::new(b, c), Segment::new(c, d), Segment::new(d, a)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldObject {
    pub tag: String,
    pub center: Vec2,
    pub radius: f64,
}

/// Static synthetic environment: vertical walls and labeled objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldMap {
    pub name: String,
    pub bounds: Bounds,
    pub walls: Vec<Segment>,
    #[serde(default)]
    pub objects: Vec<WorldObject>,
}

impl WorldMap {
    /// Walls plus the bounding rectangle; what the agent can collide with.
    pub fn obstacles(&self) -> impl Iterator<Item = Segment> + '_ {
        self.walls.iter().copied().chain(self.bounds.edges())
    }

    /// Checks the invariants that loading enforces.
    pub fn validate(&self) -> Result<(), String> {
        if !(self.bounds.min.x < self.bounds.max.x && self.bounds.min.z < self.bounds.max.z) {
            return Err("bounds: min must be strictly below max".into());
        }
        for (i, w) in self.walls.iter().enumerate() {
            check_wall(w, &self.bounds).map_err(|m| format!("walls[{i}]: {m}"))?;
        }
        for (i, o) in self.objects.iter().enumerate() {
            check_object(o, &self.bounds).map_err(|m| format!("objects[{i}]: {m}"))?;
        }
        Ok(())
    }
}

fn check_wall(w: &Segment, bounds: &Bounds) -> Result<(), String> {
    if !(w.a.is_finite() && w.b.is_finite()) {
        return Err("non-finite coordinate".into());
    }
    if w.length() <= 0.0 {
        return Err("wall has zero length".into());
    }
    if !bounds.contains(w.a) || !bounds.contains(w.b) {
        return Err("wall leaves the bounds".into());
    }
    Ok(())
}

fn check_object(o: &WorldObject, bounds: &Bounds) -> Result<(), String> {
    if o.tag.is_empty() || o.tag != o.tag.to_lowercase() {
        return Err(format!("tag {:?} must be a non-empty lowercase string", o.tag));
    }
    if !(o.radius > 0.0 && o.radius.is_finite()) {
        return Err("radius must be positive".into());
    }
    if !bounds.contains(o.center) {
        return Err("object center outside the bounds".into());
    }
    Ok(())
}

/// One navigation task: where to start, where to go, and what to read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub id: String,
    /// Name of the world the episode runs in.
    pub world: String,
    pub start: AgentPose,
    pub goal: Vec2,
    pub instruction: String,
    /// Optional pre-split subgoals of the instruction.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subgoals: Vec<String>,
    /// Ground-truth route for nDTW; defaults to the straight start-goal pair.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reference_path: Vec<Vec2>,
    #[serde(default = "default_success_radius")]
    pub success_radius: f64,
}

fn default_success_radius() -> f64 {
    3.0
}

impl EpisodeSpec {
    pub fn reference(&self) -> Vec<Vec2> {
        if self.reference_path.is_empty() {
            vec![self.start.position(), self.goal]
        } else {
            self.reference_path.clone()
        }
    }

    pub fn validate_in(&self, world: &WorldMap) -> Result<(), String> {
        if self.world != world.name {
            return Err(format!("episode expects world {:?}, got {:?}", self.world, world.name));
        }
        if !world.bounds.contains(self.start.position()) {
            return Err("start: outside world bounds".into());
        }
        if !world.bounds.contains(self.goal) {
            return Err("goal: outside world bounds".into());
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct RawWorld<'a> {
    name: String,
    bounds: Bounds,
    #[serde(borrow)]
    walls: Vec<&'a RawValue>,
    #[serde(default, borrow)]
    objects: Vec<&'a RawValue>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEpisode<'a> {
    id: String,
    world: String,
    #[serde(borrow)]
    start: &'a RawValue,
    #[serde(borrow)]
    goal: &'a RawValue,
    instruction: String,
    #[serde(default)]
    subgoals: Vec<String>,
    #[serde(default)]
    reference_path: Vec<Vec2>,
    #[serde(default = "default_success_radius")]
    success_radius: f64,
}

/// 1-based line of `fragment`, which must borrow from `input`.
fn line_of(input: &str, fragment: &str) -> usize {
    let offset = (fragment.as_ptr() as usize).saturating_sub(input.as_ptr() as usize);
    input[..offset.min(input.len())].matches('\n').count() + 1
}

struct Source<'a> {
    path: &'a Path,
    text: &'a str,
}

impl<'a> Source<'a> {
    fn syntax(&self, e: serde_json::Error) -> LoadError {
        LoadError::Syntax {
            path: self.path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        }
    }

    fn invalid(&self, field: impl Into<String>, at: &str, message: impl Into<String>) -> LoadError {
        LoadError::Invalid {
            path: self.path.to_path_buf(),
            field: field.into(),
            line: line_of(self.text, at),
            message: message.into(),
        }
    }

    fn parse<T: DeserializeOwned>(&self, field: &str, raw: &RawValue) -> Result<T, LoadError> {
        serde_json::from_str(raw.get()).map_err(|e| self.invalid(field, raw.get(), e.to_string()))
    }
}

fn read(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_world(path: &Path, text: &str) -> Result<WorldMap, LoadError> {
    let src = Source { path, text };
    let raw: RawWorld = serde_json::from_str(text).map_err(|e| src.syntax(e))?;
    let bounds = raw.bounds;
    if !(bounds.min.x < bounds.max.x && bounds.min.z < bounds.max.z) {
        return Err(src.invalid("bounds", text, "min must be strictly below max"));
    }
    let mut walls = Vec::with_capacity(raw.walls.len());
    for (i, w) in raw.walls.iter().enumerate() {
        let field = format!("walls[{i}]");
        let seg: Segment = src.parse(&field, w)?;
        check_wall(&seg, &bounds).map_err(|m| src.invalid(&field, w.get(), m))?;
        walls.push(seg);
    }
    let mut objects = Vec::with_capacity(raw.objects.len());
    for (i, o) in raw.objects.iter().enumerate() {
        let field = format!("objects[{i}]");
        let obj: WorldObject = src.parse(&field, o)?;
        check_object(&obj, &bounds).map_err(|m| src.invalid(&field, o.get(), m))?;
        objects.push(obj);
    }
    Ok(WorldMap {
        name: raw.name,
        bounds,
        walls,
        objects,
    })
}

pub fn load_world(path: impl AsRef<Path>) -> Result<WorldMap, LoadError> {
    let path = path.as_ref();
    parse_world(path, &read(path)?)
}

/// Parses an episode file. Bounds checks need the world, see
/// [`EpisodeSpec::validate_in`]; everything else is checked here.
pub fn parse_episode(path: &Path, text: &str) -> Result<EpisodeSpec, LoadError> {
    let src = Source { path, text };
    let raw: RawEpisode = serde_json::from_str(text).map_err(|e| src.syntax(e))?;
    let mut start: AgentPose = src.parse("start", raw.start)?;
    if !start.is_finite() {
        return Err(src.invalid("start", raw.start.get(), "non-finite pose"));
    }
    start.heading = crate::geom::normalize_deg(start.heading);
    let goal: Vec2 = src.parse("goal", raw.goal)?;
    if !goal.is_finite() {
        return Err(src.invalid("goal", raw.goal.get(), "non-finite goal"));
    }
    if raw.instruction.trim().is_empty() {
        return Err(src.invalid("instruction", text, "instruction text is empty"));
    }
    if !(raw.success_radius > 0.0 && raw.success_radius.is_finite()) {
        return Err(src.invalid("success_radius", text, "success radius must be positive"));
    }
    Ok(EpisodeSpec {
        id: raw.id,
        world: raw.world,
        start,
        goal,
        instruction: raw.instruction,
        subgoals: raw.subgoals,
        reference_path: raw.reference_path,
        success_radius: raw.success_radius,
    })
}

/// Loads an episode and checks it against `world`, reporting the offending
/// field with its line.
pub fn load_episode_in(path: impl AsRef<Path>, world: &WorldMap) -> Result<EpisodeSpec, LoadError> {
    let path = path.as_ref();
    let text = read(path)?;
    let ep = parse_episode(path, &text)?;
    if let Err(message) = ep.validate_in(world) {
        let field = message.split(':').next().unwrap_or("episode").to_string();
        let needle = format!("\"{field}\"");
        let at = text.find(&needle).map(|i| &text[i..]).unwrap_or(&text);
        return Err(LoadError::Invalid {
            path: path.to_path_buf(),
            field,
            line: line_of(&text, at),
            message,
        });
    }
    Ok(ep)
}

pub fn load_episode(path: impl AsRef<Path>) -> Result<EpisodeSpec, LoadError> {
    let path = path.as_ref();
    parse_episode(path, &read(path)?)
}

/// Expands a mix of episode files and directories (non-recursive, `*.json`,
/// sorted by file name).
pub fn collect_json_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>, LoadError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let entries = fs::read_dir(p).map_err(|source| LoadError::Io {
                path: p.clone(),
                source,
            })?;
            let mut files: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json"))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const WORLD: &str = r#"{
  "name": "box",
  "bounds": {"min": [0, 0], "max": [4, 4]},
  "walls": [
    [[1, 1], [3, 1]],
    [[2, 2], [2, 2]]
  ],
  "objects": [{"tag": "chair", "center": [3, 3], "radius": 0.3}]
}"#;

    #[test]
    fn zero_length_wall_names_field_and_line() {
        let err = parse_world(Path::new("box.json"), WORLD).unwrap_err();
        match err {
            LoadError::Invalid { field, line, .. } => {
                assert_eq!(field, "walls[1]");
                assert_eq!(line, 6);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn uppercase_tag_rejected() {
        let text = WORLD.replace("[[2, 2], [2, 2]]", "[[2, 2], [2, 3]]").replace("chair", "Chair");
        let err = parse_world(Path::new("box.json"), &text).unwrap_err();
        assert!(matches!(err, LoadError::Invalid { ref field, line: 8, .. } if field == "objects[0]"), "{err:?}");
    }

    #[test]
    fn syntax_errors_carry_line() {
        let err = parse_world(Path::new("x.json"), "{\n\"name\": \"a\",\n oops }").unwrap_err();
        assert!(matches!(err, LoadError::Syntax { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn goal_outside_bounds_is_rejected() {
        let world = parse_world(Path::new("box.json"), &WORLD.replace("[[2, 2], [2, 2]]", "[[2, 2], [2, 3]]")).unwrap();
        let ep = r#"{
  "id": "e", "world": "box",
  "start": {"x": 0.5, "z": 0.5, "heading": -90},
  "goal": [9, 9],
  "instruction": "go"
}"#;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.json");
        fs::write(&path, ep).unwrap();
        let err = load_episode_in(&path, &world).unwrap_err();
        assert!(matches!(err, LoadError::Invalid { ref field, line: 4, .. } if field == "goal"), "{err:?}");
        let parsed = load_episode(&path).unwrap();
        assert_eq!(parsed.start.heading, 270.0);
        assert_eq!(parsed.success_radius, 3.0);
        assert_eq!(parsed.reference(), vec![Vec2::new(0.5, 0.5), Vec2::new(9.0, 9.0)]);
    }
}
