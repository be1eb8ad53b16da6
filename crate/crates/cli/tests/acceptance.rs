//! Acceptance suite: one PASS/FAIL/BLOCKED line per criterion.
//!
//! Tolerances are fixed here, next to each check. Criterion 2 needs the
//! public MLSNT release; point `MLSNT_RELEASE` at its JSONL to run it.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use labelbridge::annotator::{
    annotate_batch, estimate_cost, CharsDiv4, ClientConfig, FailurePlan, MockBackend, MockFallback, PricingConfig,
    ResponseStatus,
};
use labelbridge::metrics::{f1_scores, filtered_evaluation, render_filter_table, F1Options, GoldRecord, LlmToxicBasis};
use labelbridge::published::PUBLISHED;
use labelbridge::sampler::{availability, draw_samples, plan_quotas, PoolRecord};
use labelbridge::softprompt::{assemble, chars_div4, AssembleConfig, GameToken, Placement, SegmentKind, SoftPromptError};
use labelbridge::transfer::{
    apply_agreement_filter, reconcile_with_published, release_stats, AnnotationOutcome, DiscardReason, Provenance,
};
use labelbridge::util::{sha256_hex, Percent};
use labelbridge::{
    build_request, parse_response, render_system_prompt, BinaryLabel, Category, ChatRecord, LlmAnnotation,
    ParseFailure, PromptVersion, SpanLabel,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const F1_TOLERANCE: f64 = 1e-9;
const RELEASE_TOXICITY_TOLERANCE: Percent = Percent::from_hundredths(20);
const FILTER_GAP_POINTS: f64 = 30.0;
const COST_BAND: (f64, f64) = (0.5, 2.0);
const COLD_PUBLISHED_COST: f64 = 3.64;
const COLD_LINES: usize = 37_480;
/// Assumed mean COLD line length in characters for the desk estimate.
const COLD_MEAN_CHARS: usize = 40;

enum Outcome {
    Pass(String),
    Blocked(String),
}

type Check = fn() -> Outcome;

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome::Pass(detail.into())
}

fn provenance() -> Provenance {
    Provenance {
        model: "gpt-4o-mini".into(),
        prompt_version: PromptVersion::V1,
        temperature: 0.7,
    }
}

// ---------------------------------------------------------------- 1

fn prompt_fidelity() -> Outcome {
    let prompt = render_system_prompt("v1").unwrap();
    assert_eq!(prompt.len(), 5008);
    assert_eq!(
        sha256_hex(prompt.as_bytes()),
        "ac2a4e1e4e6c2cb3ad9edb80d7291e290c637cfa20f8e65683de7ecfef82f5ce"
    );
    // Both output examples as printed in the prompt, byte for byte.
    let toxic = "{\"overall_category\": \"toxic\"\n \"spans\": [\n    {\"text\": \"retard\", \"category\": [\"Insults\"]}\n ]\n}";
    let non_toxic = "{\"overall_category\": \"non-toxic\"}";
    assert!(prompt.contains(non_toxic));
    let a = parse_response("ex1", toxic).unwrap();
    assert_eq!(a.overall, BinaryLabel::Toxic);
    assert_eq!(a.spans.len(), 1);
    assert_eq!(a.spans[0].text, "retard");
    assert_eq!(a.categories(), BTreeSet::from([Category::Insults]));
    let b = parse_response("ex2", non_toxic).unwrap();
    assert_eq!(b.overall, BinaryLabel::NonToxic);
    assert!(b.spans.is_empty());
    pass("v1 prompt sha256 ac2a4e1e…, 5008 bytes; both output examples parse")
}

// ---------------------------------------------------------------- 2

fn label_from_json(v: &serde_json::Value) -> Option<BinaryLabel> {
    match v {
        serde_json::Value::String(s) => match s.to_ascii_lowercase().as_str() {
            "toxic" | "1" | "true" => Some(BinaryLabel::Toxic),
            "non-toxic" | "nontoxic" | "0" | "false" => Some(BinaryLabel::NonToxic),
            _ => None,
        },
        serde_json::Value::Bool(b) => Some(if *b { BinaryLabel::Toxic } else { BinaryLabel::NonToxic }),
        serde_json::Value::Number(n) => match n.as_i64() {
            Some(1) => Some(BinaryLabel::Toxic),
            Some(0) => Some(BinaryLabel::NonToxic),
            _ => None,
        },
        _ => None,
    }
}

/// Internal consistency of the published figures; needs no data.
fn published_consistency() -> String {
    let mut inexact = Vec::new();
    for s in &PUBLISHED {
        assert!((s.processed_toxicity - s.original_toxicity - s.delta).hundredths().abs() <= 1, "{}", s.name);
        let implied = Percent::ratio(s.processed_lines, s.original_lines).unwrap().complement();
        let gap = (implied - s.pct_discarded).hundredths().abs();
        assert!(gap <= 50, "{}: discard rate off by {gap} hundredths", s.name);
        if gap > 0 {
            inexact.push(s.name);
        }
    }
    format!(
        "{} sources, deltas consistent; discard rates exact except {}",
        PUBLISHED.len(),
        inexact.join(", ")
    )
}

fn release_reconciliation() -> Outcome {
    let desk = published_consistency();
    let Ok(path) = std::env::var("MLSNT_RELEASE") else {
        return Outcome::Blocked(format!("MLSNT_RELEASE not set (public release not available offline); desk check ok: {desk}"));
    };
    let source_field = std::env::var("MLSNT_SOURCE_FIELD").unwrap_or_else(|_| "source".into());
    let label_field = std::env::var("MLSNT_LABEL_FIELD").unwrap_or_else(|_| "label".into());
    let text = std::fs::read_to_string(&path).unwrap();
    let rows: Vec<serde_json::Value> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let pairs: Vec<(String, Option<BinaryLabel>)> = rows
        .iter()
        .map(|r| {
            let source = r[source_field.as_str()].as_str().expect("source field").to_string();
            (source, r.get(label_field.as_str()).and_then(label_from_json))
        })
        .collect();
    let stats = release_stats(pairs.iter().map(|(s, l)| (s.as_str(), *l)));
    let report = reconcile_with_published(&stats, &PUBLISHED, RELEASE_TOXICITY_TOLERANCE);
    let failed: Vec<_> = report.iter().filter(|r| !r.passed()).map(|r| r.source.as_str()).collect();
    let degraded = report.iter().filter(|r| r.toxicity_within.is_none()).count();
    assert!(failed.is_empty(), "sources off: {failed:?}");
    pass(format!(
        "15/15 processed line counts exact, toxicity within ±0.20 ({degraded} sources line-count only)"
    ))
}

// ---------------------------------------------------------------- 3

fn synthetic_records(rng: &mut ChaCha8Rng, n: usize) -> Vec<ChatRecord> {
    (0..n)
        .map(|i| {
            let toxic = rng.gen_bool(0.4);
            ChatRecord {
                id: format!("SYN-{i:07}"),
                source: ["A", "B", "C"][i % 3].into(),
                language: "en".into(),
                text: format!("line {i}"),
                context: vec![],
                original_label: if toxic { "1" } else { "0" }.into(),
                human_binary: if toxic { BinaryLabel::Toxic } else { BinaryLabel::NonToxic },
            }
        })
        .collect()
}

fn random_outcome(rng: &mut ChaCha8Rng, id: &str) -> AnnotationOutcome {
    match rng.gen_range(0..10) {
        0 => AnnotationOutcome::ApiFailure("scripted".into()),
        1 => AnnotationOutcome::ParseFailure(ParseFailure::MissingSpans),
        _ => {
            let toxic = rng.gen_bool(0.5);
            let spans = if toxic {
                (0..rng.gen_range(1..4))
                    .map(|k| {
                        let n = rng.gen_range(1..3);
                        SpanLabel {
                            text: format!("s{k}"),
                            categories: Category::TOXIC.choose_multiple(rng, n).copied().collect(),
                            subtopics: BTreeSet::new(),
                        }
                    })
                    .collect()
            } else {
                vec![]
            };
            AnnotationOutcome::Annotated(LlmAnnotation {
                record_id: id.into(),
                overall: if toxic { BinaryLabel::Toxic } else { BinaryLabel::NonToxic },
                spans,
                violations: vec![],
                raw: String::new(),
            })
        }
    }
}

fn filter_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let records = synthetic_records(&mut rng, 1_000);
    let outcomes: BTreeMap<String, AnnotationOutcome> =
        records.iter().map(|r| (r.id.clone(), random_outcome(&mut rng, &r.id))).collect();
    let part = apply_agreement_filter(&records, &outcomes, &provenance()).unwrap();
    assert_eq!(part.kept.len() + part.discarded.len(), 1_000);

    // Brute force: walk records in input order and decide each one directly.
    let mut kept = BTreeMap::new();
    let mut discarded = BTreeMap::new();
    for r in &records {
        match &outcomes[&r.id] {
            AnnotationOutcome::Annotated(a) if a.overall == r.human_binary => {
                let mut cats = BTreeSet::new();
                if a.overall == BinaryLabel::Toxic {
                    for s in &a.spans {
                        cats.extend(s.categories.iter().copied());
                    }
                }
                kept.insert(r.id.clone(), cats);
            }
            AnnotationOutcome::Annotated(_) => {
                discarded.insert(r.id.clone(), DiscardReason::Disagreement);
            }
            AnnotationOutcome::ParseFailure(_) => {
                discarded.insert(r.id.clone(), DiscardReason::ParseFailure);
            }
            AnnotationOutcome::ApiFailure(_) => {
                discarded.insert(r.id.clone(), DiscardReason::ApiFailure);
            }
        }
    }
    let got_kept: BTreeMap<_, _> =
        part.kept.iter().map(|t| (t.record.id.clone(), t.final_categories.clone())).collect();
    let got_discarded: BTreeMap<_, _> =
        part.discarded.iter().map(|t| (t.record.id.clone(), t.discard_reason.unwrap())).collect();
    assert_eq!(got_kept, kept);
    assert_eq!(got_discarded, discarded);
    for t in &part.kept {
        assert_eq!(t.final_binary, Some(t.record.human_binary));
    }

    // Filtering the kept set again changes nothing.
    let kept_records: Vec<ChatRecord> = part.kept.iter().map(|t| t.record.clone()).collect();
    let again = apply_agreement_filter(&kept_records, &outcomes, &provenance()).unwrap();
    assert!(again.discarded.is_empty());
    assert_eq!(again.kept, part.kept);
    pass(format!(
        "1000 records: {} kept / {} discarded, identical to brute force; idempotent",
        part.kept.len(),
        part.discarded.len()
    ))
}

// ---------------------------------------------------------------- 4

struct OracleScores {
    per_class: BTreeMap<u8, (f64, f64, f64, usize)>,
    macro_f1: f64,
    weighted_f1: f64,
}

fn confusion_oracle(gold: &[u8], pred: &[u8], include_zero_support: bool) -> OracleScores {
    let classes: BTreeSet<u8> = gold.iter().chain(pred).copied().collect();
    let k = 256;
    let mut m = vec![vec![0usize; k]; k];
    for (g, p) in gold.iter().zip(pred) {
        m[*g as usize][*p as usize] += 1;
    }
    let mut per_class = BTreeMap::new();
    for &c in &classes {
        let c = c as usize;
        let tp = m[c][c];
        let row: usize = m[c].iter().sum();
        let col: usize = m.iter().map(|r| r[c]).sum();
        let precision = if col == 0 { 0.0 } else { tp as f64 / col as f64 };
        let recall = if row == 0 { 0.0 } else { tp as f64 / row as f64 };
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        per_class.insert(c as u8, (precision, recall, f1, row));
    }
    let counted: Vec<f64> = per_class
        .values()
        .filter(|(_, _, _, s)| include_zero_support || *s > 0)
        .map(|(_, _, f, _)| *f)
        .collect();
    let macro_f1 = counted.iter().sum::<f64>() / counted.len() as f64;
    let weighted_f1 =
        per_class.values().map(|(_, _, f, s)| f * *s as f64).sum::<f64>() / gold.len() as f64;
    OracleScores {
        per_class,
        macro_f1,
        weighted_f1,
    }
}

fn metrics_oracle() -> Outcome {
    let close = |a: f64, b: f64| (a - b).abs() <= F1_TOLERANCE;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for instance in 0..1_000 {
        let classes = rng.gen_range(1..=6u8);
        let n = rng.gen_range(1..=200);
        let gold: Vec<u8> = (0..n).map(|_| rng.gen_range(0..classes)).collect();
        let pred: Vec<u8> = (0..n).map(|_| rng.gen_range(0..classes)).collect();
        let include_zero_support = instance % 2 == 1;
        let opts = F1Options {
            classes: Vec::new(),
            include_zero_support,
        };
        let got = f1_scores(&gold, &pred, &opts).unwrap();
        let want = confusion_oracle(&gold, &pred, include_zero_support);
        assert!(close(got.macro_f1, want.macro_f1), "instance {instance}: macro");
        assert!(close(got.weighted_f1, want.weighted_f1), "instance {instance}: weighted");
        assert_eq!(got.per_class.len(), want.per_class.len());
        for c in &got.per_class {
            let (p, r, f, s) = want.per_class[&c.label];
            assert!(close(c.precision, p) && close(c.recall, r) && close(c.f1, f) && c.support == s);
        }
    }
    let report = f1_scores(&["A", "A", "B", "C"], &["A", "B", "B", "C"], &F1Options::default()).unwrap();
    assert!(close(report.macro_f1, 7.0 / 9.0));
    assert!(close(report.weighted_f1, 3.0 / 4.0));
    pass("1000 random instances match confusion-matrix oracle to 1e-9; hand example macro 7/9, weighted 3/4")
}

// ---------------------------------------------------------------- 5

fn annotation(id: &str, overall: BinaryLabel, category: Option<Category>) -> LlmAnnotation {
    LlmAnnotation {
        record_id: id.into(),
        overall,
        spans: category
            .map(|c| {
                vec![SpanLabel {
                    text: "x".into(),
                    categories: BTreeSet::from([c]),
                    subtopics: BTreeSet::new(),
                }]
            })
            .unwrap_or_default(),
        violations: vec![],
        raw: String::new(),
    }
}

fn filtered_pattern() -> Outcome {
    // Gold toxic lines the annotator also calls toxic get the right category;
    // gold non-toxic lines it calls toxic land in a toxic category, which the
    // weighted score over the "LLM toxic" subset cannot recover from.
    let cats = [Category::Hate, Category::Insults, Category::SexualContentHarassment];
    let mut gold = Vec::new();
    let mut ann = BTreeMap::new();
    for i in 0..400 {
        let id = format!("g{i:04}");
        let c = cats[i % 3];
        let (g, a) = match i % 4 {
            // agreed toxic, right category
            0 => (
                GoldRecord { record_id: id.clone(), binary: BinaryLabel::Toxic, categories: BTreeSet::from([c]) },
                annotation(&id, BinaryLabel::Toxic, Some(c)),
            ),
            // annotator toxic, gold non-toxic
            1 => (
                GoldRecord { record_id: id.clone(), binary: BinaryLabel::NonToxic, categories: BTreeSet::new() },
                annotation(&id, BinaryLabel::Toxic, Some(c)),
            ),
            // agreed non-toxic
            2 => (
                GoldRecord { record_id: id.clone(), binary: BinaryLabel::NonToxic, categories: BTreeSet::new() },
                annotation(&id, BinaryLabel::NonToxic, None),
            ),
            // gold toxic, annotator misses it
            _ => (
                GoldRecord { record_id: id.clone(), binary: BinaryLabel::Toxic, categories: BTreeSet::from([c]) },
                annotation(&id, BinaryLabel::NonToxic, None),
            ),
        };
        gold.push(g);
        ann.insert(id, a);
    }
    gold.push(GoldRecord {
        record_id: "unannotated".into(),
        binary: BinaryLabel::NonToxic,
        categories: BTreeSet::new(),
    });
    let r = filtered_evaluation(&gold, &ann, LlmToxicBasis::Predicted).unwrap();
    let agreed = r.agreed_toxic.weighted_f1.unwrap() * 100.0;
    let llm = r.llm_toxic.weighted_f1.unwrap() * 100.0;
    assert!(agreed - llm >= FILTER_GAP_POINTS, "gap {agreed:.2} - {llm:.2}");

    // Subset inclusion: agreed toxic ⊆ LLM toxic, agreed toxic ⊆ agreed labels ⊆ all.
    assert_eq!(r.excluded, 1);
    assert_eq!(r.no_filter.size, 400);
    assert!(r.agreed_toxic.size <= r.llm_toxic.size);
    assert!(r.agreed_toxic.size <= r.agreed_labels.size);
    assert!(r.agreed_labels.size <= r.no_filter.size);
    assert!(r.llm_toxic.size <= r.no_filter.size);
    assert_eq!((r.llm_toxic.size, r.agreed_toxic.size, r.agreed_labels.size), (200, 100, 200));

    // Agreed-labels by direct recomputation.
    let (g, p): (Vec<Category>, Vec<Category>) = gold
        .iter()
        .filter_map(|g| ann.get(&g.record_id).map(|a| (g, a)))
        .filter(|(g, a)| g.binary == a.overall)
        .map(|(g, a)| (g.primary_label().unwrap(), a.primary_label()))
        .unzip();
    let direct = f1_scores(&g, &p, &F1Options::default()).unwrap().weighted_f1;
    assert!((direct - r.agreed_labels.weighted_f1.unwrap()).abs() <= F1_TOLERANCE);

    let table = render_filter_table(&[("synthetic", &r)]);
    assert!(table.starts_with("Run"));
    pass(format!("agreed toxic {agreed:.2} vs LLM toxic {llm:.2} (gap ≥ 30); inclusion invariants hold"))
}

// ---------------------------------------------------------------- 6

fn pool(per_label: &BTreeMap<Category, usize>) -> Vec<PoolRecord> {
    let mut out = Vec::new();
    for (c, n) in per_label {
        for i in 0..*n {
            out.push(PoolRecord {
                id: format!("{}-{i:05}", c.id()),
                game: "g".into(),
                language: "en".into(),
                text: format!("line {i}"),
                context: vec![],
                predicted: *c,
            });
        }
    }
    out
}

fn sampler() -> Outcome {
    let abundant: BTreeMap<Category, usize> = Category::ALL.iter().map(|c| (*c, 120)).collect();
    let pool_a = pool(&abundant);
    let plan = plan_quotas(&availability(&pool_a), 50, 0.2);
    let set = draw_samples(&pool_a, &plan, 11);
    assert_eq!(set.samples.len(), 450);
    for c in Category::ALL {
        assert_eq!(set.samples.iter().filter(|s| s.predicted == c).count(), 50);
    }
    let ids: BTreeSet<_> = set.samples.iter().map(|s| &s.id).collect();
    assert_eq!(ids.len(), 450);

    let mut short = abundant.clone();
    short.insert(Category::Hate, 30);
    let plan = plan_quotas(&short, 50, 0.2);
    assert_eq!(plan.target(Category::Hate), 30);
    assert_eq!(plan.target(Category::SexualContentHarassment), 54);
    assert_eq!(plan.target(Category::NonToxic), 66);
    assert_eq!(plan.total(), 450);

    let again = draw_samples(&pool_a, &plan_quotas(&availability(&pool_a), 50, 0.2), 11);
    assert_eq!(again.samples, set.samples);
    pass("abundant pool → 450 (50 × 9); Hate=30 → 30/54/66; same seed, same draw")
}

// ---------------------------------------------------------------- 7

fn random_line(rng: &mut ChaCha8Rng, max_chars: usize) -> String {
    let n = rng.gen_range(1..=max_chars);
    (0..n).map(|_| *b"ab z".choose(rng).unwrap() as char).collect::<String>() + "."
}

fn softprompt() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut too_long = 0;
    for i in 0..10_000 {
        let text = random_line(&mut rng, 200);
        let context: Vec<String> = (0..rng.gen_range(0..12)).map(|_| random_line(&mut rng, 120)).collect();
        let token = *GameToken::ALL.choose(&mut rng).unwrap();
        let max_len = rng.gen_range(4..160);
        let id = format!("r{i}");
        let cfg = AssembleConfig { placement: Placement::BeforeContext, max_len };
        match assemble(&id, &text, &context, token, &cfg, &chars_div4) {
            Err(SoftPromptError::CurrentLineTooLong { units, budget, .. }) => {
                assert!(units > budget && budget == max_len.saturating_sub(2));
                too_long += 1;
                continue;
            }
            Err(e) => panic!("{e}"),
            Ok(seq) => {
                assert_eq!(seq.segments[0].kind, SegmentKind::GameToken);
                assert_eq!(seq.segments[0].text, token.as_str());
                assert_eq!(seq.current_line(), text);
                assert!(seq.length_units <= max_len);
                let kept: Vec<&str> = seq
                    .segments
                    .iter()
                    .filter(|s| s.kind == SegmentKind::ContextLine)
                    .map(|s| s.text.as_str())
                    .collect();
                let suffix: Vec<&str> = context[context.len() - kept.len()..].iter().map(String::as_str).collect();
                assert_eq!(kept, suffix);
                assert_eq!(seq.dropped_context + kept.len(), context.len());

                let wider = AssembleConfig { max_len: max_len + rng.gen_range(1..64), ..cfg };
                let more = assemble(&id, &text, &context, token, &wider, &chars_div4).unwrap();
                assert!(more.dropped_context <= seq.dropped_context);
                assert_eq!(more.current_line(), text);
            }
        }
    }
    pass(format!(
        "10000 random records: token first, current line intact, truncation monotone ({too_long} rejected as too long)"
    ))
}

// ---------------------------------------------------------------- 8

fn annotator() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let records = synthetic_records(&mut rng, 1_000);
    let mut backend = MockBackend::new(MockFallback::Fail);
    let mut expected = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        backend = backend.with_body(&r.id, "{\"overall_category\": \"non-toxic\"}");
        let (plan, want) = match i % 7 {
            0 => (Some(FailurePlan::Permanent), (ResponseStatus::ApiFailure, 3)),
            1 => (Some(FailurePlan::Transient(1)), (ResponseStatus::Ok, 2)),
            2 => (Some(FailurePlan::Transient(2)), (ResponseStatus::Ok, 3)),
            3 => (Some(FailurePlan::Transient(3)), (ResponseStatus::ApiFailure, 3)),
            _ => (None, (ResponseStatus::Ok, 1)),
        };
        if let Some(p) = plan {
            backend = backend.with_failure(&r.id, p);
        }
        expected.insert(r.id.clone(), want);
    }
    let mut shuffled = records.clone();
    shuffled.shuffle(&mut rng);
    let requests: Vec<_> = shuffled
        .iter()
        .map(|r| build_request(r, &Default::default()).unwrap())
        .collect();
    let mut runs = Vec::new();
    for p in [1, 4, 16] {
        let cfg = ClientConfig {
            parallelism: p,
            max_attempts: 3,
            base_delay_ms: 0,
            max_delay_ms: 0,
            jitter_seed: 1,
        };
        let out = annotate_batch(&backend, &requests, &cfg, &CharsDiv4);
        assert_eq!(out.len(), 1_000);
        assert!(out.windows(2).all(|w| w[0].record_id < w[1].record_id));
        for r in &out {
            assert_eq!((r.status, r.attempts), expected[&r.record_id], "{}", r.record_id);
            assert_eq!(r.error.is_some(), r.status == ResponseStatus::ApiFailure);
        }
        runs.push(out);
    }
    assert!(runs.windows(2).all(|w| w[0] == w[1]));
    let failures = runs[0].iter().filter(|r| !r.is_ok()).count();
    let retries: u32 = runs[0].iter().map(|r| r.attempts - 1).sum();

    // Cost is additive over record sets.
    let pricing = PricingConfig::default();
    let (a, b) = records.split_at(377);
    let whole = estimate_cost(&records, PromptVersion::V1, &pricing, &CharsDiv4);
    let parts = [a, b].map(|s| estimate_cost(s, PromptVersion::V1, &pricing, &CharsDiv4));
    assert_eq!(whole.input_tokens, parts[0].input_tokens + parts[1].input_tokens);
    assert_eq!(whole.output_tokens, parts[0].output_tokens + parts[1].output_tokens);
    assert!((whole.total - parts[0].total - parts[1].total).abs() < 1e-9);
    let doubled = [records.clone(), records.clone()].concat();
    let twice = estimate_cost(&doubled, PromptVersion::V1, &pricing, &CharsDiv4);
    assert!((twice.total - 2.0 * whole.total).abs() < 1e-9);

    let line: String = "这是一条用来估算费用的中文评论内容".chars().cycle().take(COLD_MEAN_CHARS).collect();
    let cold: Vec<ChatRecord> = (0..COLD_LINES)
        .map(|i| ChatRecord {
            id: format!("COLD-{i:07}"),
            source: "COLD".into(),
            language: "zh-Hans".into(),
            text: line.clone(),
            context: vec![],
            original_label: "0".into(),
            human_binary: BinaryLabel::NonToxic,
        })
        .collect();
    let est = estimate_cost(&cold, PromptVersion::V1, &pricing, &CharsDiv4);
    let (lo, hi) = (COST_BAND.0 * COLD_PUBLISHED_COST, COST_BAND.1 * COLD_PUBLISHED_COST);
    assert!((lo..=hi).contains(&est.total), "COLD estimate ${:.2}", est.total);
    pass(format!(
        "P∈{{1,4,16}} identical and ordered; {failures} failures, {retries} retries as scripted; cost additive; COLD ${:.2} in [{lo:.2}, {hi:.2}]",
        est.total
    ))
}

// ---------------------------------------------------------------- 9

fn golden_run() -> Outcome {
    let demo = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/demo");
    let golden = demo.join("golden");
    let names = ["transfer_responses.jsonl", "mlsnt.jsonl", "discarded.jsonl", "stats.json", "manifest.transfer.json"];
    for _ in 0..2 {
        let out = tempfile::tempdir().unwrap();
        let run = Command::new(env!("CARGO_BIN_EXE_labelbridge"))
            .args(["--config", demo.join("run.toml").to_str().unwrap(), "--mock", "--out"])
            .arg(out.path())
            .arg("transfer")
            .env("RUST_LOG", "error")
            .output()
            .unwrap();
        assert!(run.status.success());
        for n in names {
            assert!(std::fs::read(out.path().join(n)).unwrap() == std::fs::read(golden.join(n)).unwrap(), "{n}");
        }
    }
    pass("two runs of `transfer --mock` on the 50-record fixture are byte-identical to the goldens")
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("prompt fidelity", prompt_fidelity),
        ("MLSNT release reconciliation", release_reconciliation),
        ("filter oracle equivalence", filter_oracle),
        ("metrics oracle equivalence", metrics_oracle),
        ("filtered-evaluation pattern", filtered_pattern),
        ("sampler quotas", sampler),
        ("soft-prompt assembly", softprompt),
        ("annotator robustness", annotator),
        ("end-to-end golden run", golden_run),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check));
        let ms = start.elapsed().as_millis();
        match result {
            Ok(Outcome::Pass(d)) => println!("criterion {}: PASS    {name} ({ms} ms): {d}", i + 1),
            Ok(Outcome::Blocked(d)) => println!("criterion {}: BLOCKED {name}: {d}", i + 1),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("criterion {}: FAIL    {name} ({ms} ms): {msg}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
