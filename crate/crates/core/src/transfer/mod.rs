//! Human/LLM agreement filter and final label assignment.
//!
//! A record is kept only when the annotator's overall label equals the
//! record's human binary label. Kept toxic records take the union of their
//! span categories as final categories. Everything else is discarded with a
//! reason: disagreement, parse failure, or API failure.

mod emit;
mod stats;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::annotator::RawResponse;
use crate::ingest::ChatRecord;
use crate::parse::{parse_response_with, LlmAnnotation, ParseFailure};
use crate::prompting::PromptVersion;
use crate::taxonomy::{BinaryLabel, Category, Subtopic, Taxonomy};

pub use emit::{
    emit_discards, emit_unified, read_unified, DiscardRow, EmitError, EmitManifest, EmitOptions,
    UnifiedRow,
};
pub use stats::{
    compute_source_stats, reconcile_with_published, release_stats, ReconcileRow, ReleaseStats,
    SourceStats,
};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TransferError {
    #[error("no annotation outcome for record {0}")]
    MissingAnnotation(String),
}

/// What the annotation step produced for one record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnnotationOutcome {
    Annotated(LlmAnnotation),
    ParseFailure(ParseFailure),
    ApiFailure(String),
}

/// Parses every response; api failures stay api failures.
pub fn outcomes_from_responses(
    tax: &Taxonomy,
    responses: &[RawResponse],
) -> BTreeMap<String, AnnotationOutcome> {
    responses
        .iter()
        .map(|r| {
            let outcome = if !r.is_ok() {
                AnnotationOutcome::ApiFailure(r.error.clone().unwrap_or_default())
            } else {
                match parse_response_with(tax, &r.record_id, &r.body_text) {
                    Ok(a) => AnnotationOutcome::Annotated(a),
                    Err(e) => AnnotationOutcome::ParseFailure(e),
                }
            };
            (r.record_id.clone(), outcome)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub model: String,
    pub prompt_version: PromptVersion,
    pub temperature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Kept,
    Discarded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscardReason {
    Disagreement,
    ParseFailure,
    ApiFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferredRecord {
    #[serde(flatten)]
    pub record: ChatRecord,
    pub llm: Option<LlmAnnotation>,
    pub verdict: Verdict,
    pub discard_reason: Option<DiscardReason>,
    /// Parse or API error text for failure discards.
    pub discard_detail: Option<String>,
    /// Set only for kept records.
    pub final_binary: Option<BinaryLabel>,
    /// Union of span categories; non-empty exactly for kept toxic records.
    pub final_categories: BTreeSet<Category>,
    pub final_subtopics: BTreeSet<Subtopic>,
    pub provenance: Provenance,
}

impl TransferredRecord {
    pub fn is_kept(&self) -> bool {
        self.verdict == Verdict::Kept
    }

    pub fn llm_binary(&self) -> Option<BinaryLabel> {
        self.llm.as_ref().map(|a| a.overall)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Partition {
    /// Ordered by record id.
    pub kept: Vec<TransferredRecord>,
    /// Ordered by record id.
    pub discarded: Vec<TransferredRecord>,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.kept.len() + self.discarded.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &TransferredRecord> {
        self.kept.iter().chain(self.discarded.iter())
    }
}

fn judge(
    record: &ChatRecord,
    outcome: &AnnotationOutcome,
    provenance: &Provenance,
) -> TransferredRecord {
    let mut out = TransferredRecord {
        record: record.clone(),
        llm: None,
        verdict: Verdict::Discarded,
        discard_reason: None,
        discard_detail: None,
        final_binary: None,
        final_categories: BTreeSet::new(),
        final_subtopics: BTreeSet::new(),
        provenance: provenance.clone(),
    };
    match outcome {
        AnnotationOutcome::ApiFailure(e) => {
            out.discard_reason = Some(DiscardReason::ApiFailure);
            out.discard_detail = Some(e.clone());
        }
        AnnotationOutcome::ParseFailure(e) => {
            out.discard_reason = Some(DiscardReason::ParseFailure);
            out.discard_detail = Some(e.to_string());
        }
        AnnotationOutcome::Annotated(a) => {
            if a.overall == record.human_binary {
                out.verdict = Verdict::Kept;
                out.final_binary = Some(a.overall);
                if a.overall.is_toxic() {
                    out.final_categories = a.categories();
                    out.final_subtopics = a.subtopics();
                }
            } else {
                out.discard_reason = Some(DiscardReason::Disagreement);
            }
            out.llm = Some(a.clone());
        }
    }
    out
}

/// Partitions `records` into kept and discarded. Every record needs an
/// outcome; both halves are ordered by record id.
pub fn apply_agreement_filter(
    records: &[ChatRecord],
    outcomes: &BTreeMap<String, AnnotationOutcome>,
    provenance: &Provenance,
) -> Result<Partition, TransferError> {
    let mut partition = Partition::default();
    for record in records {
        let outcome = outcomes
            .get(&record.id)
            .ok_or_else(|| TransferError::MissingAnnotation(record.id.clone()))?;
        let t = judge(record, outcome, provenance);
        if t.is_kept() {
            partition.kept.push(t);
        } else {
            partition.discarded.push(t);
        }
    }
    partition.kept.sort_by(|a, b| a.record.id.cmp(&b.record.id));
    partition.discarded.sort_by(|a, b| a.record.id.cmp(&b.record.id));
    Ok(partition)
}
