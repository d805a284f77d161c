//! Structured decisions returned by the provider, and their strict parsers.
//!
//! Canonical field names are `"Thought"`, `"Selected Image"`,
//! `"Action Options"`, `"Degree"`, `"Safe Distance"`, `"Confuse"`,
//! `"Updated History"`, `"Trajectory Summary"` and `"Instruction Progress"`.
//! Keys are matched after lowercasing and dropping everything but letters and
//! digits, so `selected_image` and `SelectedImage` are accepted too. Values
//! are never coerced: `"2"` is not an image index and `"true"` is not a
//! boolean.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use super::extract::first_json_object;

const FRAGMENT_LIMIT: usize = 400;

fn clip(s: &str) -> String {
    if s.len() <= FRAGMENT_LIMIT {
        return s.to_string();
    }
    let mut end = FRAGMENT_LIMIT;
    while !s.is_char_boundary(end) {
        end -= 1;
    }
    format!("{}…", &s[..end])
}

/// Why a provider answer was rejected. Each variant keeps the offending
/// fragment so it can be quoted back in a corrective re-prompt.
#[derive(Debug, Clone, Error, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParseError {
    #[error("no JSON object found in the response: {fragment}")]
    MalformedOutput { fragment: String },
    #[error("field \"{field}\": {reason} (in {fragment})")]
    SchemaViolation {
        field: String,
        reason: String,
        fragment: String,
    },
    #[error("field \"{field}\": {reason} (in {fragment})")]
    RangeViolation {
        field: String,
        reason: String,
        fragment: String,
    },
}

impl ParseError {
    pub fn schema(field: &str, reason: impl Into<String>, fragment: &str) -> Self {
        ParseError::SchemaViolation {
            field: field.to_string(),
            reason: reason.into(),
            fragment: clip(fragment),
        }
    }

    pub fn range(field: &str, reason: impl Into<String>, fragment: &str) -> Self {
        ParseError::RangeViolation {
            field: field.to_string(),
            reason: reason.into(),
            fragment: clip(fragment),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "Completed")]
    Completed,
    #[serde(rename = "In Progress")]
    InProgress,
    #[serde(rename = "Not Started")]
    NotStarted,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Completed => "Completed",
            Status::InProgress => "In Progress",
            Status::NotStarted => "Not Started",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgoalStatus {
    #[serde(rename = "Subgoal")]
    pub subgoal: String,
    #[serde(rename = "Status")]
    pub status: Status,
}

impl SubgoalStatus {
    pub fn new(subgoal: impl Into<String>, status: Status) -> Self {
        Self {
            subgoal: subgoal.into(),
            status,
        }
    }
}

/// Navigation history carried between steps.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct History {
    #[serde(rename = "Trajectory Summary")]
    pub trajectory_summary: String,
    #[serde(rename = "Instruction Progress")]
    pub instruction_progress: Vec<SubgoalStatus>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialDecision {
    #[serde(rename = "Thought")]
    pub thought: String,
    #[serde(rename = "Selected Image")]
    pub selected_image: u8,
    #[serde(rename = "Safe Distance")]
    pub safe_distance: f64,
    #[serde(rename = "Trajectory Summary")]
    pub trajectory_summary: String,
    #[serde(rename = "Instruction Progress")]
    pub instruction_progress: Vec<SubgoalStatus>,
}

impl InitialDecision {
    pub fn history(&self) -> History {
        History {
            trajectory_summary: self.trajectory_summary.clone(),
            instruction_progress: self.instruction_progress.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDecision {
    #[serde(rename = "Thought")]
    pub thought: String,
    #[serde(rename = "Selected Image")]
    pub selected_image: u8,
    #[serde(rename = "Action Options")]
    pub action_option: String,
    #[serde(rename = "Degree")]
    pub degree: Option<u32>,
    #[serde(rename = "Safe Distance")]
    pub safe_distance: f64,
    #[serde(rename = "Confuse")]
    pub confuse: bool,
    #[serde(rename = "Updated History")]
    pub updated_history: History,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisambiguationDecision {
    #[serde(rename = "Selected Image")]
    pub selected_image: u8,
    #[serde(rename = "Safe Distance")]
    pub safe_distance: f64,
    #[serde(rename = "Updated History")]
    pub updated_history: History,
}

/// One labeled high-level action the provider can pick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionOption {
    pub label: String,
    /// Degrees, counter-clockwise positive.
    pub turn: f64,
    pub stop: bool,
    pub description: String,
}

/// The labeled choices offered at each step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionOptionSet {
    pub options: Vec<ActionOption>,
}

impl ActionOptionSet {
    /// A–E mirror the five spatial bins, F stops.
    pub fn canonical() -> Self {
        let mv = |label: &str, turn: f64, description: &str| ActionOption {
            label: label.into(),
            turn,
            stop: false,
            description: description.into(),
        };
        Self {
            options: vec![
                mv("A", 60.0, "turn left 60° and move forward"),
                mv("B", 30.0, "turn left 30° and move forward"),
                mv("C", 0.0, "move forward"),
                mv("D", -30.0, "turn right 30° and move forward"),
                mv("E", -60.0, "turn right 60° and move forward"),
                ActionOption {
                    label: "F".into(),
                    turn: 0.0,
                    stop: true,
                    description: "stop, the destination has been reached".into(),
                },
            ],
        }
    }

    pub fn get(&self, label: &str) -> Option<&ActionOption> {
        self.options.iter().find(|o| o.label == label)
    }

    /// Non-zero turn magnitudes the `Degree` field may take.
    pub fn degrees(&self) -> Vec<u32> {
        let mut d: Vec<u32> = self
            .options
            .iter()
            .filter(|o| !o.stop && o.turn != 0.0)
            .map(|o| o.turn.abs().round() as u32)
            .collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    pub fn labels(&self) -> Vec<&str> {
        self.options.iter().map(|o| o.label.as_str()).collect()
    }
}

impl Default for ActionOptionSet {
    fn default() -> Self {
        Self::canonical()
    }
}

fn normalize_key(k: &str) -> String {
    k.chars().filter(char::is_ascii_alphanumeric).map(|c| c.to_ascii_lowercase()).collect()
}

/// Canonical field name for a normalized key.
fn canonical(norm: &str) -> Option<&'static str> {
    Some(match norm {
        "thought" | "thoughts" => "Thought",
        "selectedimage" => "Selected Image",
        "actionoptions" | "actionoption" => "Action Options",
        "degree" | "degrees" => "Degree",
        "safedistance" => "Safe Distance",
        "confuse" | "confused" => "Confuse",
        "updatedhistory" => "Updated History",
        "trajectorysummary" => "Trajectory Summary",
        "instructionprogress" => "Instruction Progress",
        "subgoal" => "Subgoal",
        "status" => "Status",
        _ => return None,
    })
}

/// An object whose keys have been mapped to canonical names.
struct Fields<'a> {
    map: Map<String, Value>,
    fragment: &'a str,
}

impl<'a> Fields<'a> {
    fn new(obj: &Map<String, Value>, fragment: &'a str) -> Result<Self, ParseError> {
        let mut map = Map::new();
        for (k, v) in obj {
            if let Some(name) = canonical(&normalize_key(k)) {
                if map.insert(name.to_string(), v.clone()).is_some() {
                    return Err(ParseError::schema(name, "field given more than once", fragment));
                }
            }
        }
        Ok(Self { map, fragment })
    }

    fn required(&self, field: &str) -> Result<&Value, ParseError> {
        self.map
            .get(field)
            .ok_or_else(|| ParseError::schema(field, "missing required field", self.fragment))
    }

    fn string(&self, field: &str) -> Result<String, ParseError> {
        match self.required(field)? {
            Value::String(s) => Ok(s.clone()),
            other => Err(ParseError::schema(field, format!("expected a string, got {other}"), self.fragment)),
        }
    }

    fn boolean(&self, field: &str) -> Result<bool, ParseError> {
        match self.required(field)? {
            Value::Bool(b) => Ok(*b),
            other => Err(ParseError::schema(field, format!("expected true or false, got {other}"), self.fragment)),
        }
    }

    fn image(&self, field: &str, max: u8) -> Result<u8, ParseError> {
        let v = self.required(field)?;
        let n = integer(v).ok_or_else(|| ParseError::schema(field, format!("expected an integer, got {v}"), self.fragment))?;
        if !(1..=max as i64).contains(&n) {
            return Err(ParseError::range(field, format!("{n} is outside 1..={max}"), self.fragment));
        }
        Ok(n as u8)
    }

    fn distance(&self, field: &str) -> Result<f64, ParseError> {
        let v = self.required(field)?;
        let d = v
            .as_f64()
            .ok_or_else(|| ParseError::schema(field, format!("expected a number, got {v}"), self.fragment))?;
        if !(d.is_finite() && d >= 0.0) {
            return Err(ParseError::range(field, format!("{d} is not a finite non-negative distance"), self.fragment));
        }
        Ok(d)
    }

    fn history(&self, field: &str) -> Result<History, ParseError> {
        match self.required(field)? {
            Value::Object(obj) => {
                let inner = Fields::new(obj, self.fragment)?;
                Ok(History {
                    trajectory_summary: inner.string("Trajectory Summary")?,
                    instruction_progress: inner.progress()?,
                })
            }
            other => Err(ParseError::schema(field, format!("expected an object, got {other}"), self.fragment)),
        }
    }

    fn progress(&self) -> Result<Vec<SubgoalStatus>, ParseError> {
        const F: &str = "Instruction Progress";
        let bad = |why: String| ParseError::schema(F, why, self.fragment);
        match self.required(F)? {
            Value::Array(items) => items
                .iter()
                .map(|item| {
                    let Value::Object(obj) = item else {
                        return Err(bad(format!("expected {{\"Subgoal\", \"Status\"}} objects, got {item}")));
                    };
                    let f = Fields::new(obj, self.fragment)?;
                    let subgoal = f.string("Subgoal")?;
                    let status = match f.required("Status")? {
                        Value::String(s) => parse_status(s).ok_or_else(|| bad(format!("unknown status {s:?}")))?,
                        other => return Err(bad(format!("status must be a string, got {other}"))),
                    };
                    Ok(SubgoalStatus { subgoal, status })
                })
                .collect(),
            // {"subgoal text": "Status", ...} in document order
            Value::Object(obj) => obj
                .iter()
                .map(|(k, v)| match v {
                    Value::String(s) => Ok(SubgoalStatus {
                        subgoal: k.clone(),
                        status: parse_status(s).ok_or_else(|| bad(format!("unknown status {s:?}")))?,
                    }),
                    other => Err(bad(format!("status must be a string, got {other}"))),
                })
                .collect(),
            other => Err(bad(format!("expected a list of subgoals, got {other}"))),
        }
    }
}

fn integer(v: &Value) -> Option<i64> {
    if let Some(n) = v.as_i64() {
        return Some(n);
    }
    v.as_f64().filter(|f| f.fract() == 0.0 && f.abs() < 1e9).map(|f| f as i64)
}

fn parse_status(s: &str) -> Option<Status> {
    match normalize_key(s).as_str() {
        "completed" | "complete" | "done" => Some(Status::Completed),
        "inprogress" => Some(Status::InProgress),
        "notstarted" => Some(Status::NotStarted),
        _ => None,
    }
}

fn locate(raw: &str) -> Result<(Map<String, Value>, &str), ParseError> {
    first_json_object(raw).ok_or_else(|| ParseError::MalformedOutput { fragment: clip(raw) })
}

pub fn parse_initial_decision(raw: &str) -> Result<InitialDecision, ParseError> {
    let (obj, frag) = locate(raw)?;
    let f = Fields::new(&obj, frag)?;
    let d = InitialDecision {
        thought: f.string("Thought")?,
        selected_image: f.image("Selected Image", 12)?,
        safe_distance: f.distance("Safe Distance")?,
        trajectory_summary: f.string("Trajectory Summary")?,
        instruction_progress: f.progress()?,
    };
    let in_progress = d.instruction_progress.iter().filter(|s| s.status == Status::InProgress).count();
    let completed = d.instruction_progress.iter().any(|s| s.status == Status::Completed);
    if in_progress != 1 || completed {
        return Err(ParseError::schema(
            "Instruction Progress",
            "initially exactly one subgoal must be In Progress and none Completed",
            frag,
        ));
    }
    Ok(d)
}

pub fn parse_step_decision(raw: &str) -> Result<StepDecision, ParseError> {
    parse_step_decision_with(raw, &ActionOptionSet::canonical())
}

/// Parses a step decision against a specific option set.
pub fn parse_step_decision_with(raw: &str, options: &ActionOptionSet) -> Result<StepDecision, ParseError> {
    let (obj, frag) = locate(raw)?;
    let f = Fields::new(&obj, frag)?;
    let thought = f.string("Thought")?;
    let selected_image = f.image("Selected Image", 3)?;
    let action_option = f.string("Action Options")?.trim().to_string();
    if options.get(&action_option).is_none() {
        return Err(ParseError::schema(
            "Action Options",
            format!("unknown option {action_option:?}; expected one of {}", options.labels().join(", ")),
            frag,
        ));
    }
    let degree = match f.required("Degree")? {
        Value::Null => None,
        v => {
            let n = integer(v)
                .ok_or_else(|| ParseError::schema("Degree", format!("expected an integer or null, got {v}"), frag))?;
            let allowed = options.degrees();
            if n < 0 || !allowed.contains(&(n as u32)) {
                return Err(ParseError::range("Degree", format!("{n} is not one of {allowed:?} or null"), frag));
            }
            Some(n as u32)
        }
    };
    Ok(StepDecision {
        thought,
        selected_image,
        action_option,
        degree,
        safe_distance: f.distance("Safe Distance")?,
        confuse: f.boolean("Confuse")?,
        updated_history: f.history("Updated History")?,
    })
}

pub fn parse_disambiguation_decision(raw: &str) -> Result<DisambiguationDecision, ParseError> {
    let (obj, frag) = locate(raw)?;
    let f = Fields::new(&obj, frag)?;
    Ok(DisambiguationDecision {
        selected_image: f.image("Selected Image", 12)?,
        safe_distance: f.distance("Safe Distance")?,
        updated_history: f.history("Updated History")?,
    })
}

/// Canonical JSON text of a decision.
pub fn to_canonical_json<T: Serialize>(decision: &T) -> String {
    serde_json::to_string_pretty(decision).expect("decisions always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn step_json() -> &'static str {
        r#"{
  "Thought": "The hallway continues ahead.",
  "Selected Image": 2,
  "Action Options": "A",
  "Degree": null,
  "Safe Distance": 1.5,
  "Confuse": false,
  "Updated History": {
    "Trajectory Summary": "Left the bedroom.",
    "Instruction Progress": [
      {"Subgoal": "leave the bedroom", "Status": "Completed"},
      {"Subgoal": "walk down the hall", "Status": "In Progress"}
    ]
  }
}"#
    }

    #[test]
    fn canonical_step_round_trips() {
        let d = parse_step_decision(step_json()).unwrap();
        assert_eq!(d.selected_image, 2);
        assert_eq!(d.action_option, "A");
        assert_eq!(d.degree, None);
        assert_eq!(d.safe_distance, 1.5);
        assert!(!d.confuse);
        assert_eq!(parse_step_decision(&to_canonical_json(&d)).unwrap(), d);
    }

    #[test]
    fn step_image_out_of_range() {
        let raw = step_json().replace("\"Selected Image\": 2", "\"Selected Image\": 9");
        assert!(matches!(
            parse_step_decision(&raw),
            Err(ParseError::RangeViolation { ref field, .. }) if field == "Selected Image"
        ));
    }

    #[test]
    fn fenced_equals_bare() {
        let fenced = format!("Here is my answer: ```json {} ```", step_json());
        assert_eq!(parse_step_decision(&fenced).unwrap(), parse_step_decision(step_json()).unwrap());
    }

    #[test]
    fn key_variants_are_normalized() {
        let raw = step_json()
            .replace("\"Selected Image\"", "\"selected_image\"")
            .replace("\"Safe Distance\"", "\"SafeDistance\"")
            .replace("\"Action Options\"", "\"action option\"");
        assert_eq!(parse_step_decision(&raw).unwrap(), parse_step_decision(step_json()).unwrap());
    }

    #[test]
    fn no_coercion_and_no_defaults() {
        let raw = step_json().replace("\"Confuse\": false", "\"Confuse\": \"false\"");
        assert!(matches!(parse_step_decision(&raw), Err(ParseError::SchemaViolation { ref field, .. }) if field == "Confuse"));
        let raw = step_json().replace("\"Confuse\": false,", "");
        assert!(matches!(parse_step_decision(&raw), Err(ParseError::SchemaViolation { ref field, ref reason, .. })
            if field == "Confuse" && reason.contains("missing")));
        let raw = step_json().replace("\"Selected Image\": 2", "\"Selected Image\": \"2\"");
        assert!(matches!(parse_step_decision(&raw), Err(ParseError::SchemaViolation { .. })));
    }

    #[test]
    fn degree_rules() {
        let raw = step_json().replace("\"Degree\": null", "\"Degree\": 45");
        assert!(matches!(parse_step_decision(&raw), Err(ParseError::RangeViolation { ref field, .. }) if field == "Degree"));
        let raw = step_json().replace("\"Degree\": null", "\"Degree\": 60");
        assert_eq!(parse_step_decision(&raw).unwrap().degree, Some(60));
        let raw = step_json().replace("\"Action Options\": \"A\"", "\"Action Options\": \"Z\"");
        assert!(matches!(parse_step_decision(&raw), Err(ParseError::SchemaViolation { ref field, .. }) if field == "Action Options"));
    }

    #[test]
    fn malformed_output() {
        assert!(matches!(parse_step_decision("I think we should go left."), Err(ParseError::MalformedOutput { .. })));
    }

    #[test]
    fn duplicate_after_normalization() {
        let raw = r#"{"Selected Image": 1, "selected_image": 2, "Safe Distance": 1, "Updated History": {}}"#;
        assert!(matches!(parse_disambiguation_decision(raw), Err(ParseError::SchemaViolation { ref reason, .. }) if reason.contains("more than once")));
    }

    #[test]
    fn initial_progress_rule() {
        let ok = r#"{"Thought": "t", "Selected Image": 12, "Safe Distance": 2.0, "Trajectory Summary": "s",
            "Instruction Progress": [{"Subgoal": "a", "Status": "In Progress"}, {"Subgoal": "b", "Status": "Not Started"}]}"#;
        let d = parse_initial_decision(ok).unwrap();
        assert_eq!(d.selected_image, 12);
        let bad = ok.replace("\"Not Started\"", "\"Completed\"");
        assert!(parse_initial_decision(&bad).is_err());
        let bad = ok.replace("\"In Progress\"", "\"Not Started\"");
        assert!(parse_initial_decision(&bad).is_err());
        let bad = ok.replace("12", "13");
        assert!(matches!(parse_initial_decision(&bad), Err(ParseError::RangeViolation { .. })));
        let bad = ok.replace("2.0", "-1");
        assert!(matches!(parse_initial_decision(&bad), Err(ParseError::RangeViolation { .. })));
    }

    #[test]
    fn progress_as_map_keeps_order() {
        let raw = r#"{"Selected Image": 4, "Safe Distance": 1.0, "Updated History": {"Trajectory Summary": "x",
            "Instruction Progress": {"zeta": "Completed", "alpha": "in_progress"}}}"#;
        let d = parse_disambiguation_decision(raw).unwrap();
        assert_eq!(d.updated_history.instruction_progress[0], SubgoalStatus::new("zeta", Status::Completed));
        assert_eq!(d.updated_history.instruction_progress[1].status, Status::InProgress);
    }

    fn status() -> impl Strategy<Value = Status> {
        prop_oneof![Just(Status::Completed), Just(Status::InProgress), Just(Status::NotStarted)]
    }

    fn history() -> impl Strategy<Value = History> {
        (".{0,40}", proptest::collection::vec((".{1,20}", status()), 0..4)).prop_map(|(s, items)| History {
            trajectory_summary: s,
            instruction_progress: items.into_iter().map(|(g, st)| SubgoalStatus::new(g, st)).collect(),
        })
    }

    proptest! {
        #[test]
        fn step_round_trip(
            thought in ".{0,60}", img in 1u8..=3, opt in 0usize..6,
            deg in prop_oneof![Just(None), Just(Some(30u32)), Just(Some(60u32))],
            dist in 0.0f64..20.0, confuse in any::<bool>(), h in history(),
        ) {
            let d = StepDecision {
                thought, selected_image: img,
                action_option: ["A", "B", "C", "D", "E", "F"][opt].to_string(),
                degree: deg, safe_distance: dist, confuse, updated_history: h,
            };
            prop_assert_eq!(parse_step_decision(&to_canonical_json(&d)).unwrap(), d);
        }

        #[test]
        fn disambiguation_round_trip(img in 1u8..=12, dist in 0.0f64..20.0, h in history()) {
            let d = DisambiguationDecision { selected_image: img, safe_distance: dist, updated_history: h };
            prop_assert_eq!(parse_disambiguation_decision(&to_canonical_json(&d)).unwrap(), d);
        }

        #[test]
        fn initial_round_trip(thought in ".{0,60}", img in 1u8..=12, dist in 0.0f64..20.0, rest in 0usize..4) {
            let mut progress = vec![SubgoalStatus::new("first", Status::InProgress)];
            progress.extend((0..rest).map(|i| SubgoalStatus::new(format!("sub {i}"), Status::NotStarted)));
            let d = InitialDecision {
                thought, selected_image: img, safe_distance: dist,
                trajectory_summary: "start".into(), instruction_progress: progress,
            };
            prop_assert_eq!(parse_initial_decision(&to_canonical_json(&d)).unwrap(), d);
        }
    }
}
