//! Parsing of the annotator's JSON answer into an [`LlmAnnotation`].
//!
//! The envelope is lenient: surrounding prose, markdown fences, a missing
//! comma between members or a trailing comma are tolerated (the prompt's own
//! output example omits a comma). The payload is strict: every category and
//! subtopic string must resolve through the taxonomy.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::taxonomy::{validate_spans, BinaryLabel, Category, SpanLabel, Taxonomy, Violation};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum ParseFailure {
    #[error("empty response body")]
    EmptyBody,
    #[error("no JSON object in response")]
    NoJsonObject,
    #[error("invalid JSON: {0}")]
    InvalidJson(String),
    #[error("missing overall_category")]
    MissingOverall,
    #[error("overall_category must be \"toxic\" or \"non-toxic\", got {0:?}")]
    InvalidOverall(String),
    #[error("overall_category is toxic but spans are missing or empty")]
    MissingSpans,
    #[error("overall_category is non-toxic but spans are present")]
    UnexpectedSpans,
    #[error("span {index}: {message}")]
    InvalidSpan { index: usize, message: String },
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
    #[error("unknown subtopic {0:?}")]
    UnknownSubtopic(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmAnnotation {
    pub record_id: String,
    pub overall: BinaryLabel,
    /// Empty iff `overall` is non-toxic.
    pub spans: Vec<SpanLabel>,
    pub violations: Vec<Violation>,
    pub raw: String,
}

impl LlmAnnotation {
    /// Union of span categories.
    pub fn categories(&self) -> BTreeSet<Category> {
        self.spans.iter().flat_map(|s| s.categories.iter().copied()).collect()
    }

    pub fn subtopics(&self) -> BTreeSet<crate::taxonomy::Subtopic> {
        self.spans.iter().flat_map(|s| s.subtopics.iter().copied()).collect()
    }

    /// Line-level label: non-toxic, or the most severe span category.
    pub fn primary_label(&self) -> Category {
        match self.overall {
            BinaryLabel::NonToxic => Category::NonToxic,
            BinaryLabel::Toxic => {
                Category::most_severe(self.categories().iter()).unwrap_or(Category::NonToxic)
            }
        }
    }

    /// Canonical JSON in the prompt's output format.
    pub fn to_canonical_json(&self) -> String {
        let mut obj = Map::new();
        obj.insert("overall_category".into(), self.overall.as_str().into());
        if self.overall.is_toxic() {
            let spans: Vec<Value> = self
                .spans
                .iter()
                .map(|s| {
                    let mut m = Map::new();
                    m.insert("text".into(), s.text.clone().into());
                    m.insert(
                        "category".into(),
                        s.categories.iter().map(|c| Value::from(c.display_name())).collect(),
                    );
                    if !s.subtopics.is_empty() {
                        m.insert(
                            "subtopic".into(),
                            s.subtopics.iter().map(|t| Value::from(t.display_name())).collect(),
                        );
                    }
                    Value::Object(m)
                })
                .collect();
            obj.insert("spans".into(), Value::Array(spans));
        }
        Value::Object(obj).to_string()
    }
}

/// Finds the balanced `{...}` block starting at byte `start`.
fn balanced_object(s: &str, start: usize) -> Option<&str> {
    let mut depth = 0usize;
    let mut in_str = false;
    let mut esc = false;
    for (i, ch) in s[start..].char_indices() {
        if in_str {
            if esc {
                esc = false;
            } else if ch == '\\' {
                esc = true;
            } else if ch == '"' {
                in_str = false;
            }
            continue;
        }
        match ch {
            '"' => in_str = true,
            '{' => depth += 1,
            '}' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(&s[start..start + i + 1]);
                }
            }
            _ => {}
        }
    }
    None
}

#[derive(Clone, Copy, PartialEq)]
enum Prev {
    Start,
    Open,
    Comma,
    Colon,
    ValueEnd,
}

/// Inserts missing commas between adjacent values and drops trailing
/// commas. Text inside strings is never altered.
pub fn repair_json(src: &str) -> String {
    let chars: Vec<char> = src.chars().collect();
    let mut out = String::with_capacity(src.len() + 8);
    let mut prev = Prev::Start;
    let mut comma_at: Option<usize> = None;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            _ if c.is_whitespace() => {
                out.push(c);
                i += 1;
            }
            '"' => {
                if prev == Prev::ValueEnd {
                    out.push(',');
                }
                out.push('"');
                i += 1;
                let mut esc = false;
                while i < chars.len() {
                    let d = chars[i];
                    out.push(d);
                    i += 1;
                    if esc {
                        esc = false;
                    } else if d == '\\' {
                        esc = true;
                    } else if d == '"' {
                        break;
                    }
                }
                prev = Prev::ValueEnd;
            }
            '{' | '[' => {
                if prev == Prev::ValueEnd {
                    out.push(',');
                }
                out.push(c);
                prev = Prev::Open;
                i += 1;
            }
            '}' | ']' => {
                if prev == Prev::Comma {
                    if let Some(pos) = comma_at.take() {
                        out.remove(pos);
                    }
                }
                out.push(c);
                prev = Prev::ValueEnd;
                i += 1;
            }
            ',' => {
                if prev != Prev::Comma && prev != Prev::Open {
                    comma_at = Some(out.len());
                    out.push(',');
                    prev = Prev::Comma;
                }
                i += 1;
            }
            ':' => {
                out.push(':');
                prev = Prev::Colon;
                i += 1;
            }
            _ => {
                if prev == Prev::ValueEnd {
                    out.push(',');
                }
                while i < chars.len() {
                    let d = chars[i];
                    if d.is_whitespace() || matches!(d, ',' | ':' | '{' | '}' | '[' | ']' | '"') {
                        break;
                    }
                    out.push(d);
                    i += 1;
                }
                prev = Prev::ValueEnd;
            }
        }
    }
    out
}

/// Returns the first `{...}` block in `text` that parses as a JSON object,
/// strictly or after [`repair_json`].
pub fn extract_json_object(text: &str) -> Result<Map<String, Value>, ParseFailure> {
    let mut first_error = None;
    for (start, _) in text.match_indices('{') {
        let Some(candidate) = balanced_object(text, start) else {
            continue;
        };
        match serde_json::from_str::<Value>(candidate) {
            Ok(Value::Object(m)) => return Ok(m),
            Ok(_) => {}
            Err(e) => {
                if let Ok(Value::Object(m)) = serde_json::from_str::<Value>(&repair_json(candidate)) {
                    return Ok(m);
                }
                first_error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    Err(match first_error {
        Some(e) => ParseFailure::InvalidJson(e),
        None => ParseFailure::NoJsonObject,
    })
}

fn string_list(v: Option<&Value>, index: usize, field: &str) -> Result<Vec<String>, ParseFailure> {
    match v {
        None | Some(Value::Null) => Ok(Vec::new()),
        Some(Value::String(s)) => Ok(if s.trim().is_empty() { vec![] } else { vec![s.clone()] }),
        Some(Value::Array(items)) => items
            .iter()
            .filter(|x| !matches!(x, Value::String(s) if s.trim().is_empty()))
            .map(|x| match x {
                Value::String(s) => Ok(s.clone()),
                other => Err(ParseFailure::InvalidSpan {
                    index,
                    message: format!("{field} entries must be strings, got {other}"),
                }),
            })
            .collect(),
        Some(other) => Err(ParseFailure::InvalidSpan {
            index,
            message: format!("{field} must be a string or list, got {other}"),
        }),
    }
}

fn parse_span(tax: &Taxonomy, index: usize, v: &Value) -> Result<SpanLabel, ParseFailure> {
    let obj = v.as_object().ok_or_else(|| ParseFailure::InvalidSpan {
        index,
        message: "span must be an object".into(),
    })?;
    let text = match obj.get("text") {
        Some(Value::String(s)) => s.clone(),
        _ => {
            return Err(ParseFailure::InvalidSpan {
                index,
                message: "missing text".into(),
            })
        }
    };
    let mut categories = BTreeSet::new();
    let mut subtopics = BTreeSet::new();
    let cat_field = obj.get("category").or_else(|| obj.get("categories"));
    for label in string_list(cat_field, index, "category")? {
        match tax.parse_category(&label) {
            Ok(Category::NonToxic) => {
                return Err(ParseFailure::InvalidSpan {
                    index,
                    message: "non-toxic is not a span category".into(),
                })
            }
            Ok(c) => {
                categories.insert(c);
            }
            Err(_) => match tax.parse_subtopic(&label) {
                Ok(s) => {
                    subtopics.insert(s);
                }
                Err(_) => return Err(ParseFailure::UnknownCategory(label)),
            },
        }
    }
    let sub_field = obj.get("subtopic").or_else(|| obj.get("subtopics"));
    for label in string_list(sub_field, index, "subtopic")? {
        let s = tax
            .parse_subtopic(&label)
            .map_err(|_| ParseFailure::UnknownSubtopic(label))?;
        subtopics.insert(s);
    }
    // subtopics only refine the controversial category
    if !subtopics.is_empty() {
        categories.insert(Category::Controversial);
    }
    if categories.is_empty() {
        return Err(ParseFailure::InvalidSpan {
            index,
            message: "no category".into(),
        });
    }
    Ok(SpanLabel {
        text,
        categories,
        subtopics,
    })
}

pub fn parse_response_with(
    tax: &Taxonomy,
    record_id: &str,
    body_text: &str,
) -> Result<LlmAnnotation, ParseFailure> {
    if body_text.trim().is_empty() {
        return Err(ParseFailure::EmptyBody);
    }
    let obj = extract_json_object(body_text)?;
    let overall = match obj.get("overall_category") {
        None | Some(Value::Null) => return Err(ParseFailure::MissingOverall),
        Some(Value::String(s)) => {
            BinaryLabel::from_wire(s).ok_or_else(|| ParseFailure::InvalidOverall(s.clone()))?
        }
        Some(other) => return Err(ParseFailure::InvalidOverall(other.to_string())),
    };
    let raw_spans: &[Value] = match obj.get("spans") {
        None | Some(Value::Null) => &[],
        Some(Value::Array(items)) => items,
        Some(_) => {
            return Err(ParseFailure::InvalidSpan {
                index: 0,
                message: "spans must be a list".into(),
            })
        }
    };
    match overall {
        BinaryLabel::Toxic if raw_spans.is_empty() => return Err(ParseFailure::MissingSpans),
        BinaryLabel::NonToxic if !raw_spans.is_empty() => return Err(ParseFailure::UnexpectedSpans),
        _ => {}
    }
    let mut spans: Vec<SpanLabel> = Vec::with_capacity(raw_spans.len());
    for (i, v) in raw_spans.iter().enumerate() {
        let span = parse_span(tax, i, v)?;
        if !spans.contains(&span) {
            spans.push(span);
        }
    }
    let violations = validate_spans(&spans);
    Ok(LlmAnnotation {
        record_id: record_id.to_string(),
        overall,
        spans,
        violations,
        raw: body_text.to_string(),
    })
}

/// Parses with the bundled taxonomy.
pub fn parse_response(record_id: &str, body_text: &str) -> Result<LlmAnnotation, ParseFailure> {
    parse_response_with(Taxonomy::shared(), record_id, body_text)
}
