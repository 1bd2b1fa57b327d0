//! IOB tag parsing, IOB1 to IOB2 conversion and IOB2 validation.

use std::fmt;

use crate::error::{Error, Result};

/// A syntactically valid IOB tag borrowed from its string form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag<'a> {
    Outside,
    Begin(&'a str),
    Inside(&'a str),
}

impl<'a> Tag<'a> {
    /// `O`, `B-<type>` or `I-<type>` with a non-empty type; anything else is `None`.
    pub fn parse(tag: &'a str) -> Option<Self> {
        if tag == "O" {
            return Some(Tag::Outside);
        }
        let (prefix, kind) = tag.split_once('-')?;
        if kind.is_empty() || kind.chars().any(char::is_whitespace) {
            return None;
        }
        match prefix {
            "B" => Some(Tag::Begin(kind)),
            "I" => Some(Tag::Inside(kind)),
            _ => None,
        }
    }

    pub fn entity_type(self) -> Option<&'a str> {
        match self {
            Tag::Outside => None,
            Tag::Begin(t) | Tag::Inside(t) => Some(t),
        }
    }
}

impl fmt::Display for Tag<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Outside => f.write_str("O"),
            Tag::Begin(t) => write!(f, "B-{t}"),
            Tag::Inside(t) => write!(f, "I-{t}"),
        }
    }
}

pub(crate) fn parse_tag(tag: &str) -> Result<Tag<'_>> {
    Tag::parse(tag).ok_or_else(|| Error::Format(format!("invalid tag {tag:?}")))
}

/// Rewrite IOB1 tags as IOB2: an `I-x` that does not continue an `x` entity
/// opens a new one and becomes `B-x`.
pub fn iob1_to_iob2<S: AsRef<str>>(labels: &[S]) -> Result<Vec<String>> {
    let mut out = Vec::with_capacity(labels.len());
    let mut prev: Option<&str> = None;
    for label in labels {
        let tag = parse_tag(label.as_ref())?;
        let converted = match tag {
            Tag::Inside(t) if prev != Some(t) => Tag::Begin(t),
            other => other,
        };
        prev = tag.entity_type();
        out.push(converted.to_string());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    /// Not `O`, `B-x` or `I-x`.
    Malformed,
    /// `I-x` after `O` or at sequence start.
    InsideWithoutHead,
    /// `I-x` continuing an entity of another type.
    TypeMismatch { expected: String, found: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub position: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ViolationKind::Malformed => write!(f, "position {}: malformed tag", self.position),
            ViolationKind::InsideWithoutHead => {
                write!(
                    f,
                    "position {}: I- tag without a preceding head",
                    self.position
                )
            }
            ViolationKind::TypeMismatch { expected, found } => write!(
                f,
                "position {}: I-{found} continues an entity of type {expected}",
                self.position
            ),
        }
    }
}

/// Every position where the sequence breaks IOB2. Empty means valid.
pub fn validate_iob2<S: AsRef<str>>(labels: &[S]) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut prev: Option<&str> = None;
    for (position, label) in labels.iter().enumerate() {
        let Some(tag) = Tag::parse(label.as_ref()) else {
            violations.push(Violation {
                position,
                kind: ViolationKind::Malformed,
            });
            prev = None;
            continue;
        };
        if let Tag::Inside(t) = tag {
            match prev {
                None => violations.push(Violation {
                    position,
                    kind: ViolationKind::InsideWithoutHead,
                }),
                Some(p) if p != t => violations.push(Violation {
                    position,
                    kind: ViolationKind::TypeMismatch {
                        expected: p.to_string(),
                        found: t.to_string(),
                    },
                }),
                Some(_) => {}
            }
        }
        prev = tag.entity_type();
    }
    violations
}

/// An entity mention covering tokens `start..=end`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub kind: String,
}

/// Entity spans of a valid IOB2 sequence.
pub fn iob2_spans<S: AsRef<str>>(labels: &[S]) -> Result<Vec<Span>> {
    let mut spans: Vec<Span> = Vec::new();
    let mut open = false;
    for (i, label) in labels.iter().enumerate() {
        match parse_tag(label.as_ref())? {
            Tag::Outside => open = false,
            Tag::Begin(t) => {
                spans.push(Span {
                    start: i,
                    end: i,
                    kind: t.to_string(),
                });
                open = true;
            }
            Tag::Inside(t) => match spans.last_mut() {
                Some(span) if open && span.kind == t => span.end = i,
                _ => {
                    return Err(Error::Format(format!(
                        "position {i}: {} does not continue an entity",
                        label.as_ref()
                    )))
                }
            },
        }
    }
    Ok(spans)
}

/// Turn orphan `I-x` tags into `B-x` so the sequence is valid IOB2.
pub fn repair_iob2(labels: &mut [String]) {
    let mut prev: Option<String> = None;
    for label in labels.iter_mut() {
        let (fixed, kind) = match Tag::parse(label) {
            Some(Tag::Inside(t)) if prev.as_deref() != Some(t) => {
                (Some(format!("B-{t}")), Some(t.to_string()))
            }
            Some(tag) => (None, tag.entity_type().map(str::to_string)),
            None => (None, None),
        };
        if let Some(fixed) = fixed {
            *label = fixed;
        }
        prev = kind;
    }
}
