//! Locating a JSON object inside decorated provider output.
//!
//! Providers wrap their answer in prose, markdown fences or both. The rule
//! here is fixed: scan left to right for `{`, take the balanced span up to
//! the matching `}` (string literals and escapes respected), and return the
//! first span that parses as a JSON object. Fence markers sit outside any
//! braces, so fenced and bare answers yield the same object.

use serde_json::{Map, Value};

/// End (exclusive) of the balanced object starting at `start`, if any.
fn balanced_end(bytes: &[u8], start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

/// First well-formed JSON object in `raw`, with the text span it came from.
pub fn first_json_object(raw: &str) -> Option<(Map<String, Value>, &str)> {
    let bytes = raw.as_bytes();
    let mut from = 0;
    while let Some(rel) = raw[from..].find('{') {
        let start = from + rel;
        if let Some(end) = balanced_end(bytes, start) {
            let span = &raw[start..end];
            if let Ok(Value::Object(map)) = serde_json::from_str::<Value>(span) {
                return Some((map, span));
            }
        }
        from = start + 1;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_object() {
        let (m, span) = first_json_object(r#"{"a": 1}"#).unwrap();
        assert_eq!(m["a"], 1);
        assert_eq!(span, r#"{"a": 1}"#);
    }

    #[test]
    fn fenced_and_decorated() {
        let raw = "Here is my answer: ```json\n{\"a\": {\"b\": \"}\"}}\n``` hope it helps {";
        let (m, _) = first_json_object(raw).unwrap();
        assert_eq!(m["a"]["b"], "}");
    }

    #[test]
    fn skips_non_json_braces() {
        let raw = "Consider {this} first, then {\"ok\": true}";
        let (m, _) = first_json_object(raw).unwrap();
        assert_eq!(m["ok"], true);
    }

    #[test]
    fn escaped_quotes_inside_strings() {
        let raw = r#"{"t": "say \"{\" loudly", "n": 2}"#;
        let (m, _) = first_json_object(raw).unwrap();
        assert_eq!(m["n"], 2);
    }

    #[test]
    fn nothing_found() {
        assert!(first_json_object("no json here").is_none());
        assert!(first_json_object("[1, 2, 3]").is_none());
        assert!(first_json_object("{\"a\": ").is_none());
    }
}
