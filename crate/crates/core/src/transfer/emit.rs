//! Unified JSONL output, its manifest, and the discard sidecar.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DiscardReason, TransferredRecord};
use crate::prompting::PromptVersion;
use crate::taxonomy::{BinaryLabel, Category, SpanLabel, Subtopic};
use crate::util::{read_jsonl, JsonlError};

/// One line of the unified dataset. Field names are part of the format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnifiedRow {
    pub id: String,
    pub source: String,
    pub language: String,
    pub text: String,
    pub context: Vec<String>,
    pub human_binary: BinaryLabel,
    pub llm_binary: BinaryLabel,
    pub final_binary: BinaryLabel,
    /// Severity order.
    pub final_categories: Vec<Category>,
    pub subtopics: Vec<Subtopic>,
    pub prompt_version: PromptVersion,
    pub temperature: f64,
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spans: Option<Vec<SpanLabel>>,
}

impl UnifiedRow {
    /// `None` unless the record was kept.
    pub fn from_record(t: &TransferredRecord, include_spans: bool) -> Option<UnifiedRow> {
        let llm = t.llm.as_ref()?;
        let final_binary = t.final_binary?;
        Some(UnifiedRow {
            id: t.record.id.clone(),
            source: t.record.source.clone(),
            language: t.record.language.clone(),
            text: t.record.text.clone(),
            context: t.record.context.clone(),
            human_binary: t.record.human_binary,
            llm_binary: llm.overall,
            final_binary,
            final_categories: t.final_categories.iter().copied().collect(),
            subtopics: t.final_subtopics.iter().copied().collect(),
            prompt_version: t.provenance.prompt_version,
            temperature: t.provenance.temperature,
            model: t.provenance.model.clone(),
            spans: include_spans.then(|| llm.spans.clone()),
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmitOptions {
    pub include_spans: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmitManifest {
    /// False when writing stopped early; counts then cover the rows written.
    pub valid: bool,
    pub rows: usize,
    pub per_source: BTreeMap<String, usize>,
    pub per_language: BTreeMap<String, usize>,
    /// sha256 of the bytes written.
    pub checksum: String,
}

#[derive(Debug, thiserror::Error)]
pub enum EmitError {
    #[error("record {0} was not kept and cannot be emitted")]
    NotKept(String),
    #[error("write failed after {} rows: {source}", manifest.rows)]
    Io {
        manifest: EmitManifest,
        #[source]
        source: io::Error,
    },
}

/// Writes one JSONL row per kept record, in the given order.
pub fn emit_unified<W: Write>(
    kept: &[TransferredRecord],
    mut sink: W,
    opts: EmitOptions,
) -> Result<EmitManifest, EmitError> {
    let rows = kept
        .iter()
        .map(|t| {
            UnifiedRow::from_record(t, opts.include_spans)
                .ok_or_else(|| EmitError::NotKept(t.record.id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut manifest = EmitManifest::default();
    let mut hasher = Sha256::new();
    let mut line = Vec::new();
    for row in &rows {
        line.clear();
        serde_json::to_writer(&mut line, row).expect("row serializes");
        line.push(b'\n');
        if let Err(source) = sink.write_all(&line) {
            manifest.checksum = hex::encode(hasher.finalize());
            return Err(EmitError::Io { manifest, source });
        }
        hasher.update(&line);
        manifest.rows += 1;
        *manifest.per_source.entry(row.source.clone()).or_default() += 1;
        *manifest.per_language.entry(row.language.clone()).or_default() += 1;
    }
    manifest.checksum = hex::encode(hasher.finalize());
    if let Err(source) = sink.flush() {
        return Err(EmitError::Io { manifest, source });
    }
    manifest.valid = true;
    Ok(manifest)
}

pub fn read_unified<R: BufRead>(r: R) -> Result<Vec<UnifiedRow>, JsonlError> {
    read_jsonl(r)
}

/// Sidecar row for a discarded record, for later human review.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscardRow {
    pub id: String,
    pub source: String,
    pub language: String,
    pub text: String,
    pub context: Vec<String>,
    pub original_label: String,
    pub human_binary: BinaryLabel,
    pub llm_binary: Option<BinaryLabel>,
    pub reason: DiscardReason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Writes discarded records; kept records in the input are skipped.
/// Returns the number of rows written.
pub fn emit_discards<W: Write>(discarded: &[TransferredRecord], mut sink: W) -> io::Result<usize> {
    let mut n = 0;
    for t in discarded {
        let Some(reason) = t.discard_reason else {
            continue;
        };
        let row = DiscardRow {
            id: t.record.id.clone(),
            source: t.record.source.clone(),
            language: t.record.language.clone(),
            text: t.record.text.clone(),
            context: t.record.context.clone(),
            original_label: t.record.original_label.clone(),
            human_binary: t.record.human_binary,
            llm_binary: t.llm_binary(),
            reason,
            detail: t.discard_detail.clone(),
        };
        serde_json::to_writer(&mut sink, &row)?;
        sink.write_all(b"\n")?;
        n += 1;
    }
    sink.flush()?;
    Ok(n)
}
