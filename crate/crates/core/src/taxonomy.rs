//! Toxic-category taxonomy: the eight toxic categories, the fourteen
//! controversial-topic subtopics, label normalization and span rules.
//!
//! Severity rank follows the listing order of the moderation prompt
//! (1 = most severe). The prompt's printed numbering repeats "6", so the
//! order of appearance is what counts, not the printed number.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Default taxonomy document shipped with the crate.
pub const DEFAULT_TAXONOMY_JSON: &str = include_str!("../assets/taxonomy.v1.json");

/// Version of the taxonomy document format this crate understands.
pub const TAXONOMY_DOC_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TaxonomyError {
    #[error("unknown category: {0:?}")]
    UnknownCategory(String),
    #[error("unknown subtopic: {0:?}")]
    UnknownSubtopic(String),
    #[error("category is not toxic")]
    NotToxic,
    #[error("invalid taxonomy document: {0}")]
    InvalidDocument(String),
}

/// Line- or span-level label of the taxonomy, including the distinguished
/// non-toxic label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    ThreatsLifeThreatening,
    MinorEndangerment,
    ThreatsNonLifeThreatening,
    Hate,
    SexualContentHarassment,
    Extremism,
    Insults,
    Controversial,
    NonToxic,
}

impl Category {
    /// Toxic categories in severity order.
    pub const TOXIC: [Category; 8] = [
        Category::ThreatsLifeThreatening,
        Category::MinorEndangerment,
        Category::ThreatsNonLifeThreatening,
        Category::Hate,
        Category::SexualContentHarassment,
        Category::Extremism,
        Category::Insults,
        Category::Controversial,
    ];

    /// All nine labels: the toxic categories followed by non-toxic.
    pub const ALL: [Category; 9] = [
        Category::ThreatsLifeThreatening,
        Category::MinorEndangerment,
        Category::ThreatsNonLifeThreatening,
        Category::Hate,
        Category::SexualContentHarassment,
        Category::Extremism,
        Category::Insults,
        Category::Controversial,
        Category::NonToxic,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            Category::ThreatsLifeThreatening => "Threats (Life Threatening)",
            Category::MinorEndangerment => "Minor Endangerment",
            Category::ThreatsNonLifeThreatening => "Threats (Non-Life Threatening)",
            Category::Hate => "Hate",
            Category::SexualContentHarassment => "Sexual Content / Harassment",
            Category::Extremism => "Extremism",
            Category::Insults => "Insults",
            Category::Controversial => "Controversial / Potentially Toxic Topic",
            Category::NonToxic => "Non-Toxic",
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Category::ThreatsLifeThreatening => "threats_life_threatening",
            Category::MinorEndangerment => "minor_endangerment",
            Category::ThreatsNonLifeThreatening => "threats_non_life_threatening",
            Category::Hate => "hate",
            Category::SexualContentHarassment => "sexual_content_harassment",
            Category::Extremism => "extremism",
            Category::Insults => "insults",
            Category::Controversial => "controversial",
            Category::NonToxic => "non_toxic",
        }
    }

    pub fn is_toxic(self) -> bool {
        self != Category::NonToxic
    }

    /// 1-based severity rank; errors on the non-toxic label.
    pub fn severity_rank(self) -> Result<u8, TaxonomyError> {
        Category::TOXIC
            .iter()
            .position(|c| *c == self)
            .map(|i| i as u8 + 1)
            .ok_or(TaxonomyError::NotToxic)
    }

    /// Next toxic category in severity order, `None` for the last one and for non-toxic.
    pub fn next_toxic(self) -> Option<Category> {
        let rank = self.severity_rank().ok()? as usize;
        Category::TOXIC.get(rank).copied()
    }

    /// Most severe member of a set of categories. Non-toxic only wins when
    /// nothing toxic is present.
    pub fn most_severe<'a, I>(categories: I) -> Option<Category>
    where
        I: IntoIterator<Item = &'a Category>,
    {
        categories.into_iter().copied().min()
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

/// Refinement of [`Category::Controversial`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subtopic {
    Abortion,
    Religion,
    Politics,
    VulgarContent,
    ShockingDisgustingContent,
    HardDrugs,
    Alcohol,
    Pii,
    Trolling,
    Cheating,
    ScamsAndAdvertisements,
    Spamming,
    Competitors,
    OtherOffensiveContent,
}

impl Subtopic {
    pub const ALL: [Subtopic; 14] = [
        Subtopic::Abortion,
        Subtopic::Religion,
        Subtopic::Politics,
        Subtopic::VulgarContent,
        Subtopic::ShockingDisgustingContent,
        Subtopic::HardDrugs,
        Subtopic::Alcohol,
        Subtopic::Pii,
        Subtopic::Trolling,
        Subtopic::Cheating,
        Subtopic::ScamsAndAdvertisements,
        Subtopic::Spamming,
        Subtopic::Competitors,
        Subtopic::OtherOffensiveContent,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            Subtopic::Abortion => "Abortion",
            Subtopic::Religion => "Religion",
            Subtopic::Politics => "Politics",
            Subtopic::VulgarContent => "Vulgar Content",
            Subtopic::ShockingDisgustingContent => "Shocking / Disgusting Content",
            Subtopic::HardDrugs => "Hard Drugs",
            Subtopic::Alcohol => "Alcohol",
            Subtopic::Pii => "PII",
            Subtopic::Trolling => "Trolling",
            Subtopic::Cheating => "Cheating",
            Subtopic::ScamsAndAdvertisements => "Scams and Advertisements",
            Subtopic::Spamming => "Spamming",
            Subtopic::Competitors => "Competitors",
            Subtopic::OtherOffensiveContent => "Other Offensive Content",
        }
    }

    /// Letter used in the prompt listing (a through n).
    pub fn letter(self) -> char {
        let idx = Subtopic::ALL.iter().position(|s| *s == self).unwrap_or(0);
        (b'a' + idx as u8) as char
    }

    pub fn id(self) -> String {
        self.display_name()
            .to_ascii_lowercase()
            .replace(" / ", "_")
            .replace(' ', "_")
    }
}

impl fmt::Display for Subtopic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

// Categories and subtopics serialize as their display names.
macro_rules! display_name_serde {
    ($ty:ty, $all:expr, $err:ident) => {
        impl Serialize for $ty {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.display_name())
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let raw = String::deserialize(d)?;
                let key = normalize_label(&raw);
                $all.iter()
                    .copied()
                    .find(|c| normalize_label(c.display_name()) == key)
                    .ok_or_else(|| serde::de::Error::custom(TaxonomyError::$err(raw)))
            }
        }
    };
}

display_name_serde!(Category, Category::ALL, UnknownCategory);
display_name_serde!(Subtopic, Subtopic::ALL, UnknownSubtopic);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BinaryLabel {
    #[serde(rename = "toxic")]
    Toxic,
    #[serde(rename = "non-toxic")]
    NonToxic,
}

impl BinaryLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            BinaryLabel::Toxic => "toxic",
            BinaryLabel::NonToxic => "non-toxic",
        }
    }

    pub fn is_toxic(self) -> bool {
        self == BinaryLabel::Toxic
    }

    /// Exact match on the two wire strings.
    pub fn from_wire(s: &str) -> Option<BinaryLabel> {
        match s {
            "toxic" => Some(BinaryLabel::Toxic),
            "non-toxic" => Some(BinaryLabel::NonToxic),
            _ => None,
        }
    }
}

impl fmt::Display for BinaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Normalization key for label matching.
///
/// Lowercases, collapses whitespace runs to one space, and removes spaces
/// adjacent to `/`, `(` and `)`. So `"Sexual Content/Harassment"`,
/// `"sexual content / harassment"` and `" Sexual  Content /Harassment "` all
/// map to `"sexual content/harassment"`.
pub fn normalize_label(s: &str) -> String {
    let collapsed = s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    let mut out = String::with_capacity(collapsed.len());
    let chars: Vec<char> = collapsed.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if c == ' ' {
            let prev = i.checked_sub(1).map(|j| chars[j]);
            let next = chars.get(i + 1).copied();
            let sticky = |x: Option<char>| matches!(x, Some('/') | Some('(') | Some(')'));
            if sticky(prev) || sticky(next) {
                continue;
            }
        }
        out.push(c);
    }
    out
}

/// One span with its categories, as returned by the annotator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpanLabel {
    pub text: String,
    pub categories: BTreeSet<Category>,
    #[serde(default)]
    pub subtopics: BTreeSet<Subtopic>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Hard,
    Soft,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Both threat categories on the same span.
    ExclusivityViolation { span_index: usize },
    /// Controversial topic without any subtopic.
    MissingSubtopic { span_index: usize },
    /// Extremism without the Politics subtopic on the same span.
    ExtremismWithoutPolitics { span_index: usize },
}

impl Violation {
    pub fn severity(&self) -> Severity {
        match self {
            Violation::ExclusivityViolation { .. } | Violation::MissingSubtopic { .. } => {
                Severity::Hard
            }
            Violation::ExtremismWithoutPolitics { .. } => Severity::Soft,
        }
    }
}

/// Checks the span co-occurrence rules. Output is ordered by span index,
/// then by rule.
pub fn validate_spans(spans: &[SpanLabel]) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, span) in spans.iter().enumerate() {
        let cats = &span.categories;
        if cats.contains(&Category::ThreatsLifeThreatening)
            && cats.contains(&Category::ThreatsNonLifeThreatening)
        {
            out.push(Violation::ExclusivityViolation { span_index: i });
        }
        if cats.contains(&Category::Controversial) && span.subtopics.is_empty() {
            out.push(Violation::MissingSubtopic { span_index: i });
        }
        if cats.contains(&Category::Extremism) && !span.subtopics.contains(&Subtopic::Politics) {
            out.push(Violation::ExtremismWithoutPolitics { span_index: i });
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CategoryEntry {
    id: String,
    display_name: String,
    #[serde(default)]
    severity_rank: Option<u8>,
    #[serde(default)]
    aliases: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SubtopicEntry {
    id: String,
    letter: String,
    display_name: String,
    #[serde(default)]
    aliases: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TaxonomyDocument {
    version: u32,
    categories: Vec<CategoryEntry>,
    subtopics: Vec<SubtopicEntry>,
}

/// Label lookup tables. The category and subtopic sets are fixed; a
/// taxonomy document may only add alias strings.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    categories: BTreeMap<String, Category>,
    subtopics: BTreeMap<String, Subtopic>,
}

impl Default for Taxonomy {
    fn default() -> Self {
        Taxonomy::from_json(DEFAULT_TAXONOMY_JSON).expect("bundled taxonomy is valid")
    }
}

impl Taxonomy {
    /// Process-wide instance of the bundled taxonomy.
    pub fn shared() -> &'static Taxonomy {
        static SHARED: std::sync::OnceLock<Taxonomy> = std::sync::OnceLock::new();
        SHARED.get_or_init(Taxonomy::default)
    }

    /// Built-in tables with display names only, no aliases.
    pub fn builtin() -> Self {
        let categories = Category::ALL
            .iter()
            .map(|c| (normalize_label(c.display_name()), *c))
            .collect();
        let subtopics = Subtopic::ALL
            .iter()
            .map(|s| (normalize_label(s.display_name()), *s))
            .collect();
        Taxonomy {
            categories,
            subtopics,
        }
    }

    pub fn load(path: &Path) -> Result<Self, TaxonomyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TaxonomyError::InvalidDocument(format!("{}: {e}", path.display())))?;
        Taxonomy::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, TaxonomyError> {
        let doc: TaxonomyDocument = serde_json::from_str(text)
            .map_err(|e| TaxonomyError::InvalidDocument(e.to_string()))?;
        if doc.version != TAXONOMY_DOC_VERSION {
            return Err(TaxonomyError::InvalidDocument(format!(
                "unsupported version {}",
                doc.version
            )));
        }
        let mut tax = Taxonomy::builtin();

        if doc.categories.len() != Category::ALL.len() {
            return Err(TaxonomyError::InvalidDocument(format!(
                "expected {} categories, found {}",
                Category::ALL.len(),
                doc.categories.len()
            )));
        }
        for cat in Category::ALL {
            let entry = doc
                .categories
                .iter()
                .find(|e| e.id == cat.id())
                .ok_or_else(|| TaxonomyError::InvalidDocument(format!("missing {}", cat.id())))?;
            if entry.display_name != cat.display_name() {
                return Err(TaxonomyError::InvalidDocument(format!(
                    "display name of {} must be {:?}",
                    cat.id(),
                    cat.display_name()
                )));
            }
            if entry.severity_rank != cat.severity_rank().ok() {
                return Err(TaxonomyError::InvalidDocument(format!(
                    "severity rank of {} cannot be changed",
                    cat.id()
                )));
            }
            for alias in &entry.aliases {
                insert_alias(&mut tax.categories, alias, cat)?;
            }
        }

        if doc.subtopics.len() != Subtopic::ALL.len() {
            return Err(TaxonomyError::InvalidDocument(format!(
                "expected {} subtopics, found {}",
                Subtopic::ALL.len(),
                doc.subtopics.len()
            )));
        }
        for sub in Subtopic::ALL {
            let entry = doc
                .subtopics
                .iter()
                .find(|e| e.id == sub.id())
                .ok_or_else(|| TaxonomyError::InvalidDocument(format!("missing {}", sub.id())))?;
            if entry.display_name != sub.display_name() || entry.letter != sub.letter().to_string()
            {
                return Err(TaxonomyError::InvalidDocument(format!(
                    "subtopic {} does not match the built-in table",
                    sub.id()
                )));
            }
            for alias in &entry.aliases {
                insert_alias(&mut tax.subtopics, alias, sub)?;
            }
        }
        Ok(tax)
    }

    pub fn parse_category(&self, label_text: &str) -> Result<Category, TaxonomyError> {
        self.categories
            .get(&normalize_label(label_text))
            .copied()
            .ok_or_else(|| TaxonomyError::UnknownCategory(label_text.to_string()))
    }

    pub fn parse_subtopic(&self, label_text: &str) -> Result<Subtopic, TaxonomyError> {
        self.subtopics
            .get(&normalize_label(label_text))
            .copied()
            .ok_or_else(|| TaxonomyError::UnknownSubtopic(label_text.to_string()))
    }

    /// Serializes the built-in taxonomy as a version-1 document (no aliases).
    pub fn builtin_document() -> String {
        let doc = TaxonomyDocument {
            version: TAXONOMY_DOC_VERSION,
            categories: Category::ALL
                .iter()
                .map(|c| CategoryEntry {
                    id: c.id().to_string(),
                    display_name: c.display_name().to_string(),
                    severity_rank: c.severity_rank().ok(),
                    aliases: Vec::new(),
                })
                .collect(),
            subtopics: Subtopic::ALL
                .iter()
                .map(|s| SubtopicEntry {
                    id: s.id(),
                    letter: s.letter().to_string(),
                    display_name: s.display_name().to_string(),
                    aliases: Vec::new(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("serializable")
    }
}

fn insert_alias<T: Copy + PartialEq + fmt::Debug>(
    table: &mut BTreeMap<String, T>,
    alias: &str,
    target: T,
) -> Result<(), TaxonomyError> {
    let key = normalize_label(alias);
    if key.is_empty() {
        return Err(TaxonomyError::InvalidDocument("empty alias".into()));
    }
    match table.get(&key) {
        Some(prev) if *prev != target => Err(TaxonomyError::InvalidDocument(format!(
            "alias {alias:?} already maps to {prev:?}"
        ))),
        _ => {
            table.insert(key, target);
            Ok(())
        }
    }
}

/// Parses a label with the default taxonomy.
pub fn parse_category(label_text: &str) -> Result<Category, TaxonomyError> {
    Taxonomy::shared().parse_category(label_text)
}

pub fn severity_rank(category: Category) -> Result<u8, TaxonomyError> {
    category.severity_rank()
}
