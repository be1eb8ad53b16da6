//! Classifier input assembly with a game-type token and context truncation.
//!
//! A sequence is a list of segments: one game token, the context lines, one
//! separator and the current line. The game token goes either first or right
//! before the current line. When the sequence is over budget, context lines
//! are dropped oldest first; the current line is never cut.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::transfer::UnifiedRow;

pub const DEFAULT_MAX_LEN: usize = 512;
pub const SEPARATOR: &str = "[SEP]";
/// Length of the game token and of the separator, whatever their spelling.
pub const SPECIAL_SEGMENT_UNITS: usize = 1;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SoftPromptError {
    #[error("record {id}: current line needs {units} units but only {budget} are available")]
    CurrentLineTooLong { id: String, units: usize, budget: usize },
    #[error("no game token mapped for origin {0:?}")]
    UnmappedOrigin(String),
    #[error("unknown game token {0:?}")]
    UnknownToken(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GameToken {
    #[serde(rename = "GAME_1")]
    Game1,
    #[serde(rename = "GAME_2")]
    Game2,
    #[serde(rename = "MLSNT")]
    Mlsnt,
    /// For inference when the game is not known.
    #[serde(rename = "GAME_UNKNOWN")]
    GameUnknown,
}

impl GameToken {
    pub const ALL: [GameToken; 4] = [
        GameToken::Game1,
        GameToken::Game2,
        GameToken::Mlsnt,
        GameToken::GameUnknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GameToken::Game1 => "GAME_1",
            GameToken::Game2 => "GAME_2",
            GameToken::Mlsnt => "MLSNT",
            GameToken::GameUnknown => "GAME_UNKNOWN",
        }
    }
}

impl fmt::Display for GameToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GameToken {
    type Err = SoftPromptError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GameToken::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| SoftPromptError::UnknownToken(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    #[default]
    BeforeContext,
    BeforeCurrentLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    GameToken,
    ContextLine,
    Separator,
    CurrentLine,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub text: String,
}

impl Segment {
    fn new(kind: SegmentKind, text: &str) -> Self {
        Segment {
            kind,
            text: text.to_string(),
        }
    }
}

/// Default length function: `ceil(chars / 4)`.
pub fn chars_div4(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssembleConfig {
    pub placement: Placement,
    pub max_len: usize,
}

impl Default for AssembleConfig {
    fn default() -> Self {
        AssembleConfig {
            placement: Placement::BeforeContext,
            max_len: DEFAULT_MAX_LEN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssembledSequence {
    pub id: String,
    pub token: GameToken,
    pub placement: Placement,
    pub segments: Vec<Segment>,
    pub length_units: usize,
    /// Context lines removed to fit the budget.
    pub dropped_context: usize,
}

impl AssembledSequence {
    pub fn current_line(&self) -> &str {
        self.segments
            .iter()
            .find(|s| s.kind == SegmentKind::CurrentLine)
            .map(|s| s.text.as_str())
            .expect("always present")
    }

    pub fn context_lines(&self) -> usize {
        self.segments
            .iter()
            .filter(|s| s.kind == SegmentKind::ContextLine)
            .count()
    }
}

/// Assembles one sequence. `context` is oldest first.
pub fn assemble(
    id: &str,
    text: &str,
    context: &[String],
    token: GameToken,
    cfg: &AssembleConfig,
    length_fn: &dyn Fn(&str) -> usize,
) -> Result<AssembledSequence, SoftPromptError> {
    let fixed = 2 * SPECIAL_SEGMENT_UNITS;
    let line_units = length_fn(text);
    let budget = cfg.max_len.saturating_sub(fixed);
    if line_units > budget {
        return Err(SoftPromptError::CurrentLineTooLong {
            id: id.to_string(),
            units: line_units,
            budget,
        });
    }
    // longest suffix of the context that fits
    let mut remaining = budget - line_units;
    let mut first_kept = context.len();
    for (i, line) in context.iter().enumerate().rev() {
        let u = length_fn(line);
        if u > remaining {
            break;
        }
        remaining -= u;
        first_kept = i;
    }
    let kept = &context[first_kept..];

    let mut segments = Vec::with_capacity(kept.len() + 3);
    let game = Segment::new(SegmentKind::GameToken, token.as_str());
    if cfg.placement == Placement::BeforeContext {
        segments.push(game.clone());
    }
    segments.extend(kept.iter().map(|c| Segment::new(SegmentKind::ContextLine, c)));
    segments.push(Segment::new(SegmentKind::Separator, SEPARATOR));
    if cfg.placement == Placement::BeforeCurrentLine {
        segments.push(game);
    }
    segments.push(Segment::new(SegmentKind::CurrentLine, text));

    Ok(AssembledSequence {
        id: id.to_string(),
        token,
        placement: cfg.placement,
        segments,
        length_units: budget - remaining + fixed,
        dropped_context: first_kept,
    })
}

/// A training or inference line tagged with the dataset it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub origin: String,
    pub text: String,
    #[serde(default)]
    pub context: Vec<String>,
    /// Passed through to the output untouched.
    #[serde(default)]
    pub labels: serde_json::Value,
}

impl CorpusRecord {
    /// A unified-dataset row, labelled with its final binary label and
    /// categories.
    pub fn from_unified(row: &UnifiedRow, origin: &str) -> Self {
        CorpusRecord {
            id: row.id.clone(),
            origin: origin.to_string(),
            text: row.text.clone(),
            context: row.context.clone(),
            labels: serde_json::json!({
                "final_binary": row.final_binary,
                "final_categories": row.final_categories,
            }),
        }
    }
}

/// Output line for training stacks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRow {
    pub id: String,
    pub token: GameToken,
    pub segments: Vec<Segment>,
    pub labels: serde_json::Value,
}

/// Assembles every record with its origin's token, or with `override_token`
/// for all records (inference with an unknown game). Order is preserved.
pub fn build_corpus(
    records: &[CorpusRecord],
    token_map: &BTreeMap<String, GameToken>,
    override_token: Option<GameToken>,
    cfg: &AssembleConfig,
    length_fn: &dyn Fn(&str) -> usize,
) -> Result<Vec<CorpusRow>, SoftPromptError> {
    records
        .iter()
        .map(|r| {
            let token = match override_token {
                Some(t) => t,
                None => *token_map
                    .get(&r.origin)
                    .ok_or_else(|| SoftPromptError::UnmappedOrigin(r.origin.clone()))?,
            };
            let seq = assemble(&r.id, &r.text, &r.context, token, cfg, length_fn)?;
            Ok(CorpusRow {
                id: seq.id,
                token,
                segments: seq.segments,
                labels: r.labels.clone(),
            })
        })
        .collect()
}

/// Default origin mapping: the two game corpora and the unified dataset.
pub fn default_token_map() -> BTreeMap<String, GameToken> {
    [
        ("GAME_1", GameToken::Game1),
        ("GAME_2", GameToken::Game2),
        ("MLSNT", GameToken::Mlsnt),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}
