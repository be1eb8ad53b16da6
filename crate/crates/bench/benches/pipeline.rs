use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use labelbridge::metrics::{f1_scores, F1Options};
use labelbridge::softprompt::{assemble, chars_div4, AssembleConfig, GameToken};
use labelbridge::transfer::{apply_agreement_filter, Provenance};
use labelbridge::{parse_response, PromptVersion};
use labelbridge_bench::{labels, outcomes, records, response_bodies};

fn bench_f1(c: &mut Criterion) {
    let mut group = c.benchmark_group("f1_scores");
    for n in [1_000, 100_000] {
        let gold = labels(n, 9, 1);
        let pred = labels(n, 9, 2);
        let opts = F1Options::default();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| f1_scores(black_box(&gold), black_box(&pred), &opts).unwrap())
        });
    }
    group.finish();
}

fn bench_parse(c: &mut Criterion) {
    let bodies = response_bodies(300);
    c.bench_function("parse_response/300", |b| {
        b.iter(|| {
            for (i, body) in bodies.iter().enumerate() {
                let _ = black_box(parse_response(&i.to_string(), body));
            }
        })
    });
}

fn bench_assemble(c: &mut Criterion) {
    let recs = records(1_000, 3);
    let cfg = AssembleConfig {
        max_len: 24,
        ..AssembleConfig::default()
    };
    c.bench_function("assemble/1000", |b| {
        b.iter(|| {
            for r in &recs {
                let _ = black_box(assemble(&r.id, &r.text, &r.context, GameToken::Mlsnt, &cfg, &chars_div4));
            }
        })
    });
}

fn bench_filter(c: &mut Criterion) {
    let recs = records(50_000, 4);
    let outs = outcomes(&recs, 5);
    let prov = Provenance {
        model: "gpt-4o-mini".into(),
        prompt_version: PromptVersion::V1,
        temperature: 0.7,
    };
    c.bench_function("agreement_filter/50000", |b| {
        b.iter(|| apply_agreement_filter(black_box(&recs), black_box(&outs), &prov).unwrap())
    });
}

criterion_group!(benches, bench_f1, bench_parse, bench_assemble, bench_filter);
criterion_main!(benches);
