//! F1 scores (per class, macro, weighted, token level) and evaluation of an
//! annotator on gold data under the agreement filters.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::parse::LlmAnnotation;
use crate::taxonomy::{BinaryLabel, Category};
use crate::util::round2;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no samples to score")]
    EmptyInput,
    #[error("gold and prediction lengths differ ({gold} vs {pred})")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("sequence {0}: gold and prediction lengths differ")]
    ShapeMismatch(usize),
    #[error("gold record {0} is toxic but has no category")]
    InvalidGold(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    Macro,
    Weighted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct F1Options<L> {
    /// Classes scored even if absent from both gold and predictions.
    pub classes: Vec<L>,
    /// Count classes with no gold support in the macro mean (as their F1,
    /// which is 0). Off by default: such classes are left out.
    pub include_zero_support: bool,
}

impl<L> Default for F1Options<L> {
    fn default() -> Self {
        F1Options {
            classes: Vec::new(),
            include_zero_support: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore<L> {
    pub label: L,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold occurrences.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Report<L> {
    /// Ordered by label.
    pub per_class: Vec<ClassScore<L>>,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub samples: usize,
}

impl<L: PartialEq> F1Report<L> {
    pub fn score(&self, averaging: Averaging) -> f64 {
        match averaging {
            Averaging::Macro => self.macro_f1,
            Averaging::Weighted => self.weighted_f1,
        }
    }

    pub fn class(&self, label: &L) -> Option<&ClassScore<L>> {
        self.per_class.iter().find(|c| &c.label == label)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class, macro and weighted F1 of `pred` against `gold`.
pub fn f1_scores<L: Ord + Clone>(
    gold: &[L],
    pred: &[L],
    opts: &F1Options<L>,
) -> Result<F1Report<L>, MetricsError> {
    if gold.len() != pred.len() {
        return Err(MetricsError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    if gold.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    // (true positives, gold count, predicted count)
    let mut counts: BTreeMap<&L, (usize, usize, usize)> = BTreeMap::new();
    for c in &opts.classes {
        counts.entry(c).or_default();
    }
    for (g, p) in gold.iter().zip(pred) {
        counts.entry(g).or_default().1 += 1;
        counts.entry(p).or_default().2 += 1;
        if g == p {
            counts.get_mut(g).expect("inserted").0 += 1;
        }
    }
    let per_class: Vec<ClassScore<L>> = counts
        .into_iter()
        .map(|(label, (tp, g, p))| {
            let precision = ratio(tp, p);
            let recall = ratio(tp, g);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassScore {
                label: label.clone(),
                precision,
                recall,
                f1,
                support: g,
            }
        })
        .collect();

    let averaged: Vec<f64> = per_class
        .iter()
        .filter(|c| opts.include_zero_support || c.support > 0)
        .map(|c| c.f1)
        .collect();
    let macro_f1 = averaged.iter().sum::<f64>() / averaged.len() as f64;
    let weighted_f1 =
        per_class.iter().map(|c| c.f1 * c.support as f64).sum::<f64>() / gold.len() as f64;
    Ok(F1Report {
        per_class,
        macro_f1,
        weighted_f1,
        samples: gold.len(),
    })
}

/// Token-level F1: sequences are flattened and scored as one sample set.
pub fn token_f1<L: Ord + Clone>(
    gold: &[Vec<L>],
    pred: &[Vec<L>],
    opts: &F1Options<L>,
) -> Result<F1Report<L>, MetricsError> {
    if gold.len() != pred.len() {
        return Err(MetricsError::ShapeMismatch(gold.len().min(pred.len())));
    }
    if let Some(i) = gold.iter().zip(pred).position(|(g, p)| g.len() != p.len()) {
        return Err(MetricsError::ShapeMismatch(i));
    }
    let g: Vec<L> = gold.iter().flatten().cloned().collect();
    let p: Vec<L> = pred.iter().flatten().cloned().collect();
    f1_scores(&g, &p, opts)
}

/// Mean of per-game scores, rounded to two decimals.
pub fn overall_score(per_game: &[f64]) -> Option<f64> {
    if per_game.is_empty() {
        return None;
    }
    Some(round2(per_game.iter().sum::<f64>() / per_game.len() as f64))
}

/// Gold line label for filtered evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldRecord {
    pub record_id: String,
    pub binary: BinaryLabel,
    /// Empty for non-toxic lines.
    pub categories: BTreeSet<Category>,
}

impl GoldRecord {
    /// Most severe category, or non-toxic.
    pub fn primary_label(&self) -> Result<Category, MetricsError> {
        match self.binary {
            BinaryLabel::NonToxic => Ok(Category::NonToxic),
            BinaryLabel::Toxic => Category::most_severe(self.categories.iter())
                .filter(|c| c.is_toxic())
                .ok_or_else(|| MetricsError::InvalidGold(self.record_id.clone())),
        }
    }
}

/// Which records the "LLM toxic" subset holds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LlmToxicBasis {
    /// Records the annotator called toxic.
    #[default]
    Predicted,
    /// Records the gold label calls toxic.
    Gold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetScore {
    pub size: usize,
    /// Weighted class-wise F1; `None` for an empty subset.
    pub weighted_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub no_filter: SubsetScore,
    pub llm_toxic: SubsetScore,
    pub agreed_toxic: SubsetScore,
    pub agreed_labels: SubsetScore,
    pub llm_toxic_basis: LlmToxicBasis,
    /// Gold records without a usable annotation.
    pub excluded: usize,
}

impl FilterReport {
    pub fn columns(&self) -> [(&'static str, &SubsetScore); 4] {
        [
            ("No Filter", &self.no_filter),
            ("LLM \"Toxic\"", &self.llm_toxic),
            ("Agreed Toxic", &self.agreed_toxic),
            ("Agreed Labels", &self.agreed_labels),
        ]
    }
}

fn subset_score(pairs: &[(Category, Category)]) -> SubsetScore {
    let (gold, pred): (Vec<_>, Vec<_>) = pairs.iter().copied().unzip();
    SubsetScore {
        size: pairs.len(),
        weighted_f1: f1_scores(&gold, &pred, &F1Options::default())
            .ok()
            .map(|r| r.weighted_f1),
    }
}

/// Weighted class-wise F1 of the annotator on four subsets of `gold`:
/// everything, the "LLM toxic" records, records both call toxic, and records
/// where both binary labels agree. Lines are compared by primary category.
/// Gold records missing from `annotations` are excluded and counted.
pub fn filtered_evaluation(
    gold: &[GoldRecord],
    annotations: &BTreeMap<String, LlmAnnotation>,
    basis: LlmToxicBasis,
) -> Result<FilterReport, MetricsError> {
    let mut all = Vec::new();
    let mut llm_toxic = Vec::new();
    let mut agreed_toxic = Vec::new();
    let mut agreed_labels = Vec::new();
    let mut excluded = 0;
    for g in gold {
        let Some(a) = annotations.get(&g.record_id) else {
            excluded += 1;
            continue;
        };
        let pair = (g.primary_label()?, a.primary_label());
        all.push(pair);
        let in_llm_toxic = match basis {
            LlmToxicBasis::Predicted => a.overall.is_toxic(),
            LlmToxicBasis::Gold => g.binary.is_toxic(),
        };
        if in_llm_toxic {
            llm_toxic.push(pair);
        }
        if g.binary == a.overall {
            agreed_labels.push(pair);
            if g.binary.is_toxic() {
                agreed_toxic.push(pair);
            }
        }
    }
    Ok(FilterReport {
        no_filter: subset_score(&all),
        llm_toxic: subset_score(&llm_toxic),
        agreed_toxic: subset_score(&agreed_toxic),
        agreed_labels: subset_score(&agreed_labels),
        llm_toxic_basis: basis,
        excluded,
    })
}

fn cell(score: &SubsetScore) -> String {
    match score.weighted_f1 {
        Some(f) => format!("{:.2}", round2(f * 100.0)),
        None => "-".to_string(),
    }
}

/// Aligned plain-text table, one row per labelled report, scores in percent.
pub fn render_filter_table(rows: &[(&str, &FilterReport)]) -> String {
    let head = ["Run", "No Filter", "LLM \"Toxic\"", "Agreed Toxic", "Agreed Labels"];
    let body: Vec<[String; 5]> = rows
        .iter()
        .map(|(name, r)| {
            let c = r.columns();
            [
                name.to_string(),
                cell(c[0].1),
                cell(c[1].1),
                cell(c[2].1),
                cell(c[3].1),
            ]
        })
        .collect();
    let mut widths = head.map(|h| h.chars().count());
    for row in &body {
        for (w, v) in widths.iter_mut().zip(row) {
            *w = (*w).max(v.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, v)| {
                if i == 0 {
                    format!("{v:<w$}", w = widths[i])
                } else {
                    format!("{v:>w$}", w = widths[i])
                }
            })
            .collect();
        let _ = writeln!(out, "{}", parts.join(" | ").trim_end());
    };
    line(&mut out, &head.map(String::from));
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    let _ = writeln!(out, "{}", rule.join("-+-"));
    for row in &body {
        line(&mut out, row);
    }
    out
}
