//! Plain-text templates with `{{name}}` placeholders.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::PromptError;

#[derive(Debug, Clone, PartialEq)]
enum Piece {
    Text(String),
    Slot(String),
}

/// A parsed template. Placeholders are `{{name}}` with `name` made of
/// lowercase letters, digits and underscores; surrounding spaces are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    name: String,
    pieces: Vec<Piece>,
}

impl Template {
    pub fn parse(name: &str, text: &str) -> Result<Self, PromptError> {
        let err = |msg: String| PromptError::Template {
            name: name.to_string(),
            message: msg,
        };
        let mut pieces = Vec::new();
        let mut rest = text;
        while let Some(open) = rest.find("{{") {
            if open > 0 {
                pieces.push(Piece::Text(rest[..open].to_string()));
            }
            let after = &rest[open + 2..];
            let close = after.find("}}").ok_or_else(|| err("unterminated placeholder".into()))?;
            let slot = after[..close].trim();
            if slot.is_empty() || !slot.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_') {
                return Err(err(format!("bad placeholder name {slot:?}")));
            }
            pieces.push(Piece::Slot(slot.to_string()));
            rest = &after[close + 2..];
        }
        if !rest.is_empty() {
            pieces.push(Piece::Text(rest.to_string()));
        }
        Ok(Self {
            name: name.to_string(),
            pieces,
        })
    }

    pub fn placeholders(&self) -> impl Iterator<Item = &str> {
        self.pieces.iter().filter_map(|p| match p {
            Piece::Slot(s) => Some(s.as_str()),
            Piece::Text(_) => None,
        })
    }

    /// Fills every placeholder; a placeholder without a value is an error.
    pub fn render(&self, vars: &BTreeMap<&str, String>) -> Result<String, PromptError> {
        let mut out = String::new();
        for p in &self.pieces {
            match p {
                Piece::Text(t) => out.push_str(t),
                Piece::Slot(s) => out.push_str(vars.get(s.as_str()).ok_or_else(|| PromptError::Template {
                    name: self.name.clone(),
                    message: format!("no value for placeholder {{{{{s}}}}}"),
                })?),
            }
        }
        Ok(out)
    }
}

/// The task description shown to the provider, with a version identifier.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskDescription {
    pub version: String,
    pub text: String,
}

impl TaskDescription {
    /// Reads a `version: <id>` first line followed by the text.
    pub fn parse(raw: &str) -> Result<Self, PromptError> {
        let (first, body) = raw.split_once('\n').unwrap_or((raw, ""));
        let version = first
            .strip_prefix("version:")
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .ok_or_else(|| PromptError::Template {
                name: "task".into(),
                message: "first line must be `version: <id>`".into(),
            })?;
        Ok(Self {
            version: version.to_string(),
            text: body.trim().to_string(),
        })
    }
}

const FILES: [&str; 7] = [
    "system.txt",
    "task.txt",
    "initial.txt",
    "step.txt",
    "disambiguation.txt",
    "past_recall.txt",
    "past_recall_first.txt",
];

/// All prompt wording, loaded once.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateSet {
    pub system: Template,
    pub task: TaskDescription,
    pub initial: Template,
    pub step: Template,
    pub disambiguation: Template,
    pub past_recall: Template,
    pub past_recall_first: Template,
}

impl TemplateSet {
    /// Templates compiled into the crate.
    pub fn builtin() -> Self {
        let texts = [
            include_str!("../../templates/system.txt"),
            include_str!("../../templates/task.txt"),
            include_str!("../../templates/initial.txt"),
            include_str!("../../templates/step.txt"),
            include_str!("../../templates/disambiguation.txt"),
            include_str!("../../templates/past_recall.txt"),
            include_str!("../../templates/past_recall_first.txt"),
        ];
        Self::from_texts(texts).expect("bundled templates are well-formed")
    }

    /// Reads every template from `dir`; all seven files must exist.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, PromptError> {
        let dir = dir.as_ref();
        let mut texts: [String; 7] = Default::default();
        for (slot, file) in texts.iter_mut().zip(FILES) {
            let path = dir.join(file);
            *slot = fs::read_to_string(&path).map_err(|e| PromptError::Template {
                name: path.display().to_string(),
                message: e.to_string(),
            })?;
        }
        Self::from_texts(texts.each_ref().map(String::as_str))
    }

    fn from_texts(t: [&str; 7]) -> Result<Self, PromptError> {
        Ok(Self {
            system: Template::parse("system", t[0])?,
            task: TaskDescription::parse(t[1])?,
            initial: Template::parse("initial", t[2])?,
            step: Template::parse("step", t[3])?,
            disambiguation: Template::parse("disambiguation", t[4])?,
            past_recall: Template::parse("past_recall", t[5])?,
            past_recall_first: Template::parse("past_recall_first", t[6])?,
        })
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fills_placeholders() {
        let t = Template::parse("t", "Hello {{ who }}, step {{n}}.").unwrap();
        let vars = BTreeMap::from([("who", "agent".to_string()), ("n", "3".to_string())]);
        assert_eq!(t.render(&vars).unwrap(), "Hello agent, step 3.");
        assert_eq!(t.placeholders().collect::<Vec<_>>(), vec!["who", "n"]);
    }

    #[test]
    fn missing_value_is_an_error() {
        let t = Template::parse("t", "{{a}}{{b}}").unwrap();
        let vars = BTreeMap::from([("a", String::new())]);
        assert!(matches!(t.render(&vars), Err(PromptError::Template { .. })));
    }

    #[test]
    fn malformed_templates() {
        assert!(Template::parse("t", "oops {{never").is_err());
        assert!(Template::parse("t", "{{Bad Name}}").is_err());
    }

    #[test]
    fn task_needs_version_line() {
        let t = TaskDescription::parse("version: x/2\nDo things.\n").unwrap();
        assert_eq!(t.version, "x/2");
        assert_eq!(t.text, "Do things.");
        assert!(TaskDescription::parse("Do things.").is_err());
    }

    #[test]
    fn builtin_set_round_trips_through_a_directory() {
        let dir = tempfile::tempdir().unwrap();
        let b = TemplateSet::builtin();
        for (file, text) in FILES.iter().zip([
            include_str!("../../templates/system.txt"),
            include_str!("../../templates/task.txt"),
            include_str!("../../templates/initial.txt"),
            include_str!("../../templates/step.txt"),
            include_str!("../../templates/disambiguation.txt"),
            include_str!("../../templates/past_recall.txt"),
            include_str!("../../templates/past_recall_first.txt"),
        ]) {
            fs::write(dir.path().join(file), text).unwrap();
        }
        assert_eq!(TemplateSet::load_dir(dir.path()).unwrap(), b);
        fs::remove_file(dir.path().join("step.txt")).unwrap();
        assert!(TemplateSet::load_dir(dir.path()).is_err());
    }
}
