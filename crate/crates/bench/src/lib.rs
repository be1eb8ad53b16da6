//! Deterministic synthetic inputs for the benchmarks.

use std::collections::BTreeMap;

use labelbridge::parse::LlmAnnotation;
use labelbridge::taxonomy::{BinaryLabel, Category, SpanLabel};
use labelbridge::transfer::AnnotationOutcome;
use labelbridge::ChatRecord;

/// Small LCG; benchmarks only need repeatable, cheap variety.
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Lcg(seed ^ 0x9e37_79b9_7f4a_7c15)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.0 >> 33
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }
}

pub fn labels(n: usize, classes: u64, seed: u64) -> Vec<u32> {
    let mut rng = Lcg::new(seed);
    (0..n).map(|_| rng.below(classes) as u32).collect()
}

pub fn records(n: usize, seed: u64) -> Vec<ChatRecord> {
    let mut rng = Lcg::new(seed);
    (0..n)
        .map(|i| {
            let toxic = rng.below(2) == 0;
            ChatRecord {
                id: format!("S-{i:07}"),
                source: "S".into(),
                language: "en".into(),
                text: format!("line number {i} with some chat text"),
                context: (0..rng.below(6)).map(|j| format!("context line {j} for {i}")).collect(),
                original_label: if toxic { "1" } else { "0" }.into(),
                human_binary: if toxic { BinaryLabel::Toxic } else { BinaryLabel::NonToxic },
            }
        })
        .collect()
}

/// Agreeing, disagreeing, parse-failed and api-failed outcomes in rough
/// production proportions.
pub fn outcomes(records: &[ChatRecord], seed: u64) -> BTreeMap<String, AnnotationOutcome> {
    let mut rng = Lcg::new(seed);
    records
        .iter()
        .map(|r| {
            let roll = rng.below(100);
            let outcome = if roll < 3 {
                AnnotationOutcome::ApiFailure("timeout".into())
            } else if roll < 6 {
                AnnotationOutcome::ParseFailure(labelbridge::ParseFailure::MissingSpans)
            } else {
                let overall = if roll < 30 {
                    match r.human_binary {
                        BinaryLabel::Toxic => BinaryLabel::NonToxic,
                        BinaryLabel::NonToxic => BinaryLabel::Toxic,
                    }
                } else {
                    r.human_binary
                };
                let spans = if overall.is_toxic() {
                    vec![SpanLabel {
                        text: r.text.clone(),
                        categories: [Category::Insults].into_iter().collect(),
                        subtopics: Default::default(),
                    }]
                } else {
                    Vec::new()
                };
                AnnotationOutcome::Annotated(LlmAnnotation {
                    record_id: r.id.clone(),
                    overall,
                    spans,
                    violations: Vec::new(),
                    raw: String::new(),
                })
            };
            (r.id.clone(), outcome)
        })
        .collect()
}

pub fn response_bodies(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| match i % 3 {
            0 => "{\"overall_category\": \"non-toxic\"}".to_string(),
            1 => format!(
                "{{\"overall_category\": \"toxic\", \"spans\": [{{\"text\": \"word{i}\", \"category\": [\"Insults\", \"Hate\"]}}]}}"
            ),
            _ => format!(
                "Sure!\n```json\n{{\"overall_category\": \"toxic\", \"spans\": [{{\"text\": \"w{i}\", \"category\": [\"Controversial / Potentially Toxic Topic\"], \"subtopic\": [\"a\"]}}]}}\n```"
            ),
        })
        .collect()
}
