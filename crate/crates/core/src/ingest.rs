//! Loading human-annotated source datasets into [`ChatRecord`]s.
//!
//! Sources are described by a [`SourceDescriptor`] (usually one entry of a
//! [`Registry`] file). Each descriptor names the text/label/context columns
//! and a total mapping from the dataset's native labels onto
//! [`BinaryLabel`].

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::taxonomy::BinaryLabel;
use crate::util::{sha256_hex, Percent};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{source_name}: row {row}: {message}")]
    Format {
        source_name: String,
        row: usize,
        message: String,
    },
    #[error("{source_name}: unmapped label {label:?}")]
    UnmappedLabel { source_name: String, label: String },
    #[error("registry: {0}")]
    Registry(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    Csv,
    Tsv,
    Jsonl,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub text: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceDescriptor {
    pub name: String,
    pub language: String,
    #[serde(default)]
    pub platform: String,
    #[serde(default)]
    pub task: String,
    pub path: PathBuf,
    pub format: SourceFormat,
    pub columns: ColumnMap,
    pub binarization: BTreeMap<String, BinaryLabel>,
}

/// One source line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatRecord {
    pub id: String,
    pub source: String,
    pub language: String,
    pub text: String,
    pub context: Vec<String>,
    pub original_label: String,
    pub human_binary: BinaryLabel,
}

impl ChatRecord {
    /// Stable id: source name, zero-padded row ordinal and a content hash.
    /// Ids of one source sort in row order.
    pub fn make_id(source: &str, ordinal: usize, text: &str, context: &[String]) -> String {
        let mut content = String::with_capacity(text.len() + 16);
        for line in context {
            content.push_str(line);
            content.push('\u{1f}');
        }
        content.push('\u{1e}');
        content.push_str(text);
        let digest = sha256_hex(content.as_bytes());
        format!("{source}-{ordinal:07}-{}", &digest[..12])
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub source: String,
    pub raw_rows: usize,
    pub loaded: usize,
    pub dropped_empty: usize,
    pub dropped_encoding: usize,
}

impl LoadReport {
    pub fn dropped(&self) -> usize {
        self.dropped_empty + self.dropped_encoding
    }
}

#[derive(Debug, Clone)]
pub struct LoadedSource {
    pub records: Vec<ChatRecord>,
    pub report: LoadReport,
}

/// Key of an optional catch-all entry in a binarization map.
pub const ANY_LABEL: &str = "*";

/// Exact lookup; the `"*"` entry, when a mapping declares one, covers every
/// other label.
pub fn binarize(
    original_label: &str,
    mapping: &BTreeMap<String, BinaryLabel>,
) -> Result<BinaryLabel, IngestError> {
    mapping
        .get(original_label)
        .or_else(|| mapping.get(ANY_LABEL))
        .copied()
        .ok_or_else(|| IngestError::UnmappedLabel {
            source_name: String::new(),
            label: original_label.to_string(),
        })
}

/// Raw row after column extraction; `None` fields failed UTF-8 decoding.
struct RawRow {
    text: Option<String>,
    label: Option<String>,
    context: Option<Vec<String>>,
}

/// Context cell: a JSON array of strings, or newline-separated lines.
fn parse_context_cell(cell: &str) -> Vec<String> {
    let trimmed = cell.trim();
    if trimmed.is_empty() {
        return Vec::new();
    }
    if trimmed.starts_with('[') {
        if let Ok(lines) = serde_json::from_str::<Vec<String>>(trimmed) {
            return lines;
        }
    }
    cell.lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::to_string)
        .collect()
}

fn json_scalar_to_string(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        serde_json::Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn read_delimited(
    desc: &SourceDescriptor,
    bytes: &[u8],
    delimiter: u8,
) -> Result<Vec<RawRow>, IngestError> {
    let fmt_err = |row: usize, message: String| IngestError::Format {
        source_name: desc.name.clone(),
        row,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .from_reader(bytes);
    let headers: Vec<String> = reader
        .byte_headers()
        .map_err(|e| fmt_err(0, e.to_string()))?
        .iter()
        .map(|h| String::from_utf8_lossy(h).trim_start_matches('\u{feff}').trim().to_string())
        .collect();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| fmt_err(0, format!("missing column {name:?}")))
    };
    let text_col = col(&desc.columns.text)?;
    let label_col = col(&desc.columns.label)?;
    let context_col = desc.columns.context.as_deref().map(col).transpose()?;

    let mut rows = Vec::new();
    for (i, rec) in reader.byte_records().enumerate() {
        let rec = rec.map_err(|e| fmt_err(i + 1, e.to_string()))?;
        let field = |c: usize| -> Option<String> {
            std::str::from_utf8(rec.get(c).unwrap_or_default())
                .ok()
                .map(str::to_string)
        };
        rows.push(RawRow {
            text: field(text_col),
            label: field(label_col),
            context: match context_col {
                Some(c) => field(c).map(|s| parse_context_cell(&s)),
                None => Some(Vec::new()),
            },
        });
    }
    Ok(rows)
}

fn read_jsonl_rows(desc: &SourceDescriptor, bytes: &[u8]) -> Result<Vec<RawRow>, IngestError> {
    let mut rows = Vec::new();
    for line in bytes.split(|b| *b == b'\n') {
        let line = line.strip_suffix(b"\r").unwrap_or(line);
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let row_no = rows.len() + 1;
        let Ok(text) = std::str::from_utf8(line) else {
            rows.push(RawRow {
                text: None,
                label: None,
                context: None,
            });
            continue;
        };
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| IngestError::Format {
                source_name: desc.name.clone(),
                row: row_no,
                message: e.to_string(),
            })?;
        let obj = value.as_object().ok_or_else(|| IngestError::Format {
            source_name: desc.name.clone(),
            row: row_no,
            message: "expected a JSON object".into(),
        })?;
        let get = |k: &str| obj.get(k).and_then(json_scalar_to_string);
        let context = match desc.columns.context.as_deref().and_then(|k| obj.get(k)) {
            Some(serde_json::Value::Array(items)) => {
                items.iter().filter_map(json_scalar_to_string).collect()
            }
            Some(serde_json::Value::String(s)) => parse_context_cell(s),
            _ => Vec::new(),
        };
        rows.push(RawRow {
            text: Some(get(&desc.columns.text).unwrap_or_default()),
            label: Some(get(&desc.columns.label).unwrap_or_default()),
            context: Some(context),
        });
    }
    Ok(rows)
}

/// Loads one source. Empty-text rows and rows that are not valid UTF-8 are
/// dropped and counted in the report; every other row becomes a record.
pub fn load_source(desc: &SourceDescriptor) -> Result<LoadedSource, IngestError> {
    let bytes = std::fs::read(&desc.path).map_err(|source| IngestError::Io {
        path: desc.path.clone(),
        source,
    })?;
    load_source_bytes(desc, &bytes)
}

pub fn load_source_bytes(desc: &SourceDescriptor, bytes: &[u8]) -> Result<LoadedSource, IngestError> {
    let rows = match desc.format {
        SourceFormat::Csv => read_delimited(desc, bytes, b',')?,
        SourceFormat::Tsv => read_delimited(desc, bytes, b'\t')?,
        SourceFormat::Jsonl => read_jsonl_rows(desc, bytes)?,
    };
    let mut report = LoadReport {
        source: desc.name.clone(),
        raw_rows: rows.len(),
        ..LoadReport::default()
    };
    let mut records = Vec::with_capacity(rows.len());
    for (i, row) in rows.into_iter().enumerate() {
        let (Some(text), Some(label), Some(context)) = (row.text, row.label, row.context) else {
            report.dropped_encoding += 1;
            continue;
        };
        if text.trim().is_empty() {
            report.dropped_empty += 1;
            continue;
        }
        let label = label.trim().to_string();
        let human_binary =
            binarize(&label, &desc.binarization).map_err(|_| IngestError::UnmappedLabel {
                source_name: desc.name.clone(),
                label: label.clone(),
            })?;
        records.push(ChatRecord {
            id: ChatRecord::make_id(&desc.name, i + 1, &text, &context),
            source: desc.name.clone(),
            language: desc.language.clone(),
            text,
            context,
            original_label: label,
            human_binary,
        });
    }
    report.loaded = records.len();
    Ok(LoadedSource { records, report })
}

/// Loads sources concurrently; results keep the input order.
pub fn load_sources(descs: &[SourceDescriptor]) -> Vec<Result<LoadedSource, IngestError>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = descs
            .iter()
            .map(|d| scope.spawn(move || load_source(d)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("loader thread panicked"))
            .collect()
    })
}

/// Collection of source descriptors, read from TOML or JSON.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Registry {
    #[serde(default)]
    pub sources: Vec<SourceDescriptor>,
}

impl Registry {
    /// Reads a registry; relative source paths resolve against the registry's directory.
    pub fn load(path: &Path) -> Result<Registry, IngestError> {
        let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut reg: Registry = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => {
                serde_json::from_str(&text).map_err(|e| IngestError::Registry(e.to_string()))?
            }
            _ => toml::from_str(&text).map_err(|e| IngestError::Registry(e.to_string()))?,
        };
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for s in &mut reg.sources {
            if s.path.is_relative() {
                s.path = base.join(&s.path);
            }
        }
        reg.validate()?;
        Ok(reg)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.sources {
            if s.name.is_empty() {
                return Err(IngestError::Registry("source with empty name".into()));
            }
            if !seen.insert(s.name.as_str()) {
                return Err(IngestError::Registry(format!("duplicate source {:?}", s.name)));
            }
        }
        Ok(())
    }

    pub fn select(&self, name: Option<&str>) -> Result<Vec<SourceDescriptor>, IngestError> {
        match name {
            None => Ok(self.sources.clone()),
            Some(n) => self
                .sources
                .iter()
                .find(|s| s.name == n)
                .cloned()
                .map(|s| vec![s])
                .ok_or_else(|| IngestError::Registry(format!("unknown source {n:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryRow {
    pub name: String,
    pub language: String,
    pub lines: usize,
    pub toxic: usize,
    /// `None` for a source with no loaded rows.
    pub toxicity_pct: Option<Percent>,
}

pub fn registry_row(name: &str, language: &str, records: &[ChatRecord]) -> RegistryRow {
    let toxic = records.iter().filter(|r| r.human_binary.is_toxic()).count();
    RegistryRow {
        name: name.to_string(),
        language: language.to_string(),
        lines: records.len(),
        toxic,
        toxicity_pct: Percent::ratio(toxic as u64, records.len() as u64),
    }
}

/// Per-source line counts and original toxicity.
pub fn registry_report(descs: &[SourceDescriptor]) -> Result<Vec<RegistryRow>, IngestError> {
    load_sources(descs)
        .into_iter()
        .zip(descs)
        .map(|(loaded, d)| loaded.map(|l| registry_row(&d.name, &d.language, &l.records)))
        .collect()
}

/// Reads canonical ChatRecord JSONL.
pub fn read_records<R: BufRead>(r: R) -> Result<Vec<ChatRecord>, crate::util::JsonlError> {
    crate::util::read_jsonl(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desc(format: SourceFormat, context: Option<&str>) -> SourceDescriptor {
        SourceDescriptor {
            name: "T".into(),
            language: "en".into(),
            platform: String::new(),
            task: String::new(),
            path: PathBuf::from("unused"),
            format,
            columns: ColumnMap {
                text: "text".into(),
                label: "label".into(),
                context: context.map(str::to_string),
            },
            binarization: [
                ("offensive".to_string(), BinaryLabel::Toxic),
                ("none".to_string(), BinaryLabel::NonToxic),
            ]
            .into_iter()
            .collect(),
        }
    }

    #[test]
    fn binarize_examples() {
        let m = desc(SourceFormat::Csv, None).binarization;
        assert_eq!(binarize("offensive", &m).unwrap(), BinaryLabel::Toxic);
        assert_eq!(binarize("none", &m).unwrap(), BinaryLabel::NonToxic);
        assert!(matches!(
            binarize("hateful", &m),
            Err(IngestError::UnmappedLabel { label, .. }) if label == "hateful"
        ));
        let mut m = m;
        m.insert(ANY_LABEL.into(), BinaryLabel::Toxic);
        assert_eq!(binarize("hateful", &m).unwrap(), BinaryLabel::Toxic);
        assert_eq!(binarize("none", &m).unwrap(), BinaryLabel::NonToxic);
    }

    #[test]
    fn csv_two_rows() {
        let data = b"text,label\nhello,none\n\"you, idiot\",offensive\n";
        let l = load_source_bytes(&desc(SourceFormat::Csv, None), data).unwrap();
        assert_eq!(l.records.len(), 2);
        assert_eq!(l.records[1].text, "you, idiot");
        assert_eq!(l.records[1].human_binary, BinaryLabel::Toxic);
        assert!(l.records[0].context.is_empty());
        assert!(l.records[0].id < l.records[1].id);
    }

    #[test]
    fn unmapped_label_is_hard_error() {
        let data = b"text,label\nhello,none\nwhat,huh?\n";
        let err = load_source_bytes(&desc(SourceFormat::Csv, None), data).unwrap_err();
        assert!(matches!(err, IngestError::UnmappedLabel { label, .. } if label == "huh?"));
    }

    #[test]
    fn empty_and_undecodable_rows_dropped() {
        let mut data = b"text,label\n  ,none\nok,none\n".to_vec();
        data.extend_from_slice(b"bad\xff\xfe,none\n");
        let l = load_source_bytes(&desc(SourceFormat::Csv, None), &data).unwrap();
        assert_eq!(l.report.raw_rows, 3);
        assert_eq!(l.report.loaded, 1);
        assert_eq!(l.report.dropped_empty, 1);
        assert_eq!(l.report.dropped_encoding, 1);
        assert_eq!(l.report.loaded + l.report.dropped(), l.report.raw_rows);
    }

    #[test]
    fn malformed_row_reports_row_number() {
        let data = b"text,label\nhello,none\nx,none,extra\n";
        let err = load_source_bytes(&desc(SourceFormat::Csv, None), data).unwrap_err();
        assert!(matches!(err, IngestError::Format { row: 2, .. }), "{err}");
    }

    #[test]
    fn missing_column() {
        let data = b"body,label\nhello,none\n";
        let err = load_source_bytes(&desc(SourceFormat::Csv, None), data).unwrap_err();
        assert!(matches!(err, IngestError::Format { row: 0, .. }));
    }

    #[test]
    fn tsv_with_context() {
        let data = b"text\tlabel\tctx\nhi\tnone\t\"[\"\"a\"\",\"\"b\"\"]\"\nyo\tnone\tline1\n";
        let l = load_source_bytes(&desc(SourceFormat::Tsv, Some("ctx")), data).unwrap();
        assert_eq!(l.records[0].context, vec!["a", "b"]);
        assert_eq!(l.records[1].context, vec!["line1"]);
    }

    #[test]
    fn jsonl_rows() {
        let data = b"{\"text\":\"a\",\"label\":\"none\",\"ctx\":[\"p\"]}\n\n{\"text\":\"b\",\"label\":\"offensive\"}\n";
        let l = load_source_bytes(&desc(SourceFormat::Jsonl, Some("ctx")), data).unwrap();
        assert_eq!(l.report.raw_rows, 2);
        assert_eq!(l.records[0].context, vec!["p"]);
        assert_eq!(l.records[1].human_binary, BinaryLabel::Toxic);
    }

    #[test]
    fn jsonl_numeric_labels() {
        let mut d = desc(SourceFormat::Jsonl, None);
        d.binarization = [("1".to_string(), BinaryLabel::Toxic), ("0".to_string(), BinaryLabel::NonToxic)]
            .into_iter()
            .collect();
        let l = load_source_bytes(&d, b"{\"text\":\"a\",\"label\":1}\n{\"text\":\"b\",\"label\":0}\n").unwrap();
        assert_eq!(l.records[0].human_binary, BinaryLabel::Toxic);
        assert_eq!(l.records[1].original_label, "0");
    }

    #[test]
    fn ids_stable_across_reloads() {
        let data = b"text,label\nhello,none\nbye,offensive\n";
        let a = load_source_bytes(&desc(SourceFormat::Csv, None), data).unwrap();
        let b = load_source_bytes(&desc(SourceFormat::Csv, None), data).unwrap();
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn registry_row_toxicity() {
        let d = desc(SourceFormat::Csv, None);
        let mut csv = String::from("text,label\n");
        for i in 0..10 {
            csv.push_str(&format!("t{i},{}\n", if i < 3 { "offensive" } else { "none" }));
        }
        let l = load_source_bytes(&d, csv.as_bytes()).unwrap();
        let row = registry_row("T", "en", &l.records);
        assert_eq!(row.toxicity_pct.unwrap().to_string(), "30.00%");

        let one = load_source_bytes(&d, b"text,label\nx,offensive\n").unwrap();
        assert_eq!(registry_row("T", "en", &one.records).toxicity_pct.unwrap().hundredths(), 10_000);
        assert_eq!(registry_row("T", "en", &[]).toxicity_pct, None);
    }

    #[test]
    fn canonical_jsonl_field_names() {
        let l = load_source_bytes(&desc(SourceFormat::Csv, None), b"text,label\nhi,none\n").unwrap();
        let v: serde_json::Value = serde_json::to_value(&l.records[0]).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        let mut expected = vec!["id", "source", "language", "text", "context", "original_label", "human_binary"];
        expected.sort();
        let mut got = keys.clone();
        got.sort();
        assert_eq!(got, expected);
        assert_eq!(v["human_binary"], "non-toxic");
    }

    #[test]
    fn registry_toml_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.csv"), "text,label\nx,none\n").unwrap();
        let reg = r#"
[[sources]]
name = "A"
language = "fr"
path = "a.csv"
format = "csv"
columns = { text = "text", label = "label" }
binarization = { none = "non-toxic", offensive = "toxic" }
"#;
        let p = dir.path().join("registry.toml");
        std::fs::write(&p, reg).unwrap();
        let r = Registry::load(&p).unwrap();
        assert_eq!(r.sources[0].path, dir.path().join("a.csv"));
        let rows = registry_report(&r.sources).unwrap();
        assert_eq!(rows[0].lines, 1);
        assert!(r.select(Some("B")).is_err());
    }
}
