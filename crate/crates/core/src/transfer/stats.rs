//! Per-source line counts, discard rates and toxicity before/after filtering.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DiscardReason, Partition};
use crate::published::PublishedSource;
use crate::taxonomy::BinaryLabel;
use crate::util::Percent;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceStats {
    pub source: String,
    pub language: String,
    pub original_lines: u64,
    /// Records whose request succeeded (parse failures included).
    pub annotated_lines: u64,
    pub processed_lines: u64,
    /// `1 - processed / original`.
    pub pct_discarded: Option<Percent>,
    /// `1 - processed / annotated`.
    pub pct_discarded_of_annotated: Option<Percent>,
    pub original_toxicity_pct: Option<Percent>,
    pub processed_toxicity_pct: Option<Percent>,
    /// Difference of the two rounded toxicity figures.
    pub delta: Option<Percent>,
}

#[derive(Default)]
struct Tally {
    language: String,
    total: u64,
    toxic: u64,
    annotated: u64,
    kept: u64,
    kept_toxic: u64,
}

/// One row per source seen in either `partition` or `original_counts`, in
/// source-name order. `original_counts` overrides the line count of a source
/// (rows dropped at ingest still count as original lines); sources missing
/// from it use their record count. Empty denominators give `None`.
pub fn compute_source_stats(
    partition: &Partition,
    original_counts: &BTreeMap<String, u64>,
) -> Vec<SourceStats> {
    let mut tallies: BTreeMap<&str, Tally> = BTreeMap::new();
    for t in partition.iter() {
        let e = tallies.entry(&t.record.source).or_default();
        if e.language.is_empty() {
            e.language = t.record.language.clone();
        }
        e.total += 1;
        e.toxic += t.record.human_binary.is_toxic() as u64;
        e.annotated += (t.discard_reason != Some(DiscardReason::ApiFailure)) as u64;
        if t.is_kept() {
            e.kept += 1;
            e.kept_toxic += (t.final_binary == Some(BinaryLabel::Toxic)) as u64;
        }
    }
    for name in original_counts.keys() {
        tallies.entry(name).or_default();
    }
    tallies
        .into_iter()
        .map(|(source, t)| {
            let original = original_counts.get(source).copied().unwrap_or(t.total).max(t.total);
            let original_tox = Percent::ratio(t.toxic, t.total);
            let processed_tox = Percent::ratio(t.kept_toxic, t.kept);
            SourceStats {
                source: source.to_string(),
                language: t.language,
                original_lines: original,
                annotated_lines: t.annotated,
                processed_lines: t.kept,
                pct_discarded: Percent::ratio(original - t.kept, original),
                pct_discarded_of_annotated: Percent::ratio(t.annotated - t.kept, t.annotated),
                original_toxicity_pct: original_tox,
                processed_toxicity_pct: processed_tox,
                delta: original_tox.zip(processed_tox).map(|(o, p)| p - o),
            }
        })
        .collect()
}

/// Line count and toxicity of one source inside a released unified dataset.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseStats {
    pub lines: u64,
    /// `None` when the release carries no binary label.
    pub toxic: Option<u64>,
}

impl ReleaseStats {
    pub fn toxicity_pct(&self) -> Option<Percent> {
        self.toxic.and_then(|t| Percent::ratio(t, self.lines))
    }
}

/// Groups `(source, label)` pairs of a released dataset. Pass `None` labels
/// when the release lacks a binary column; toxicity is then unavailable.
pub fn release_stats<'a, I>(rows: I) -> BTreeMap<String, ReleaseStats>
where
    I: IntoIterator<Item = (&'a str, Option<BinaryLabel>)>,
{
    let mut out: BTreeMap<String, ReleaseStats> = BTreeMap::new();
    let mut labelled: BTreeMap<String, bool> = BTreeMap::new();
    for (source, label) in rows {
        let e = out.entry(source.to_string()).or_default();
        e.lines += 1;
        let all = labelled.entry(source.to_string()).or_insert(true);
        match label {
            Some(l) => *e.toxic.get_or_insert(0) += l.is_toxic() as u64,
            None => *all = false,
        }
    }
    for (source, all) in labelled {
        if !all {
            out.get_mut(&source).expect("same keys").toxic = None;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconcileRow {
    pub source: String,
    pub expected_lines: u64,
    pub actual_lines: Option<u64>,
    pub lines_match: bool,
    pub expected_toxicity: Percent,
    pub actual_toxicity: Option<Percent>,
    /// `None` when toxicity cannot be computed from the release.
    pub toxicity_within: Option<bool>,
}

impl ReconcileRow {
    pub fn passed(&self) -> bool {
        self.lines_match && self.toxicity_within != Some(false)
    }
}

/// Compares release statistics against published figures. Source names
/// match case-insensitively; `tolerance` is in percentage points.
pub fn reconcile_with_published(
    release: &BTreeMap<String, ReleaseStats>,
    published: &[PublishedSource],
    tolerance: Percent,
) -> Vec<ReconcileRow> {
    published
        .iter()
        .map(|p| {
            let found = release
                .iter()
                .find(|(k, _)| k.eq_ignore_ascii_case(p.name))
                .map(|(_, v)| v);
            let actual_toxicity = found.and_then(ReleaseStats::toxicity_pct);
            ReconcileRow {
                source: p.name.to_string(),
                expected_lines: p.processed_lines,
                actual_lines: found.map(|f| f.lines),
                lines_match: found.map(|f| f.lines) == Some(p.processed_lines),
                expected_toxicity: p.processed_toxicity,
                actual_toxicity,
                toxicity_within: actual_toxicity.map(|a| {
                    (a - p.processed_toxicity).hundredths().abs() <= tolerance.hundredths()
                }),
            }
        })
        .collect()
}
