use std::collections::BTreeMap;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use labelbridge::annotator::{
    annotate_batch, estimate_cost, response_cost, CharsDiv4, CompletionBackend, HttpBackend,
    MockBackend, RawResponse,
};
use labelbridge::ingest::{load_sources, registry_row, ChatRecord, LoadReport, Registry};
use labelbridge::metrics::{
    f1_scores, filtered_evaluation, render_filter_table, token_f1, F1Options, GoldRecord,
    LlmToxicBasis,
};
use labelbridge::prompting::build_request;
use labelbridge::sampler::{sample_by_group, write_annotation_sheet, PoolRecord};
use labelbridge::softprompt::{build_corpus, chars_div4, CorpusRecord};
use labelbridge::taxonomy::Taxonomy;
use labelbridge::transfer::{
    apply_agreement_filter, compute_source_stats, emit_discards, emit_unified,
    outcomes_from_responses, AnnotationOutcome, EmitOptions, Provenance, UnifiedRow,
};
use labelbridge::util::{read_jsonl, to_jsonl_string};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::manifest::Outputs;

struct Loaded {
    language: String,
    records: Vec<ChatRecord>,
    report: LoadReport,
}

fn all_records(loaded: &[Loaded]) -> Vec<ChatRecord> {
    loaded.iter().flat_map(|l| l.records.iter().cloned()).collect()
}

pub struct Ctx {
    pub cfg: RunConfig,
    pub source: Option<String>,
    pub mock: bool,
}

impl Ctx {
    fn outputs(&self, command: &'static str) -> Result<Outputs, CliError> {
        Outputs::new(&self.cfg.output_dir, command, self.cfg.content_hash(), self.cfg.seed)
    }

    fn taxonomy(&self) -> Result<Taxonomy, CliError> {
        match &self.cfg.taxonomy {
            None => Ok(Taxonomy::builtin()),
            Some(p) => Taxonomy::load(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display()))),
        }
    }

    /// Loads the selected sources; records keep registry order.
    fn load(&self, out: &mut Outputs) -> Result<Vec<Loaded>, CliError> {
        let path = self
            .cfg
            .registry
            .as_ref()
            .ok_or_else(|| CliError::Config("no registry configured".into()))?;
        let registry = Registry::load(path)?;
        out.input(path)?;
        let descs = registry.select(self.source.as_deref())?;
        let mut loaded = Vec::new();
        for (desc, result) in descs.iter().zip(load_sources(&descs)) {
            let source = result?;
            out.input(&desc.path)?;
            tracing::info!(source = %desc.name, loaded = source.report.loaded, dropped = source.report.dropped(), "loaded source");
            loaded.push(Loaded {
                language: desc.language.clone(),
                records: source.records,
                report: source.report,
            });
        }
        Ok(loaded)
    }

    fn backend(&self, out: &mut Outputs) -> Result<Box<dyn CompletionBackend>, CliError> {
        if self.mock {
            let backend = match &self.cfg.mock.fixture {
                Some(p) => {
                    out.input(p)?;
                    let file = std::fs::File::open(p)?;
                    MockBackend::from_jsonl(BufReader::new(file), self.cfg.mock_fallback())?
                }
                None => MockBackend::new(self.cfg.mock_fallback()),
            };
            return Ok(Box::new(backend));
        }
        let http = HttpBackend::new(&self.cfg.endpoint).map_err(|e| CliError::Endpoint(e.to_string()))?;
        if !http.has_credentials() {
            return Err(CliError::Endpoint(format!(
                "credential variable {} is not set (use --mock for an offline run)",
                self.cfg.endpoint.api_key_env
            )));
        }
        Ok(Box::new(http))
    }

    fn annotate(&self, records: &[ChatRecord], out: &mut Outputs) -> Result<Vec<RawResponse>, CliError> {
        let backend = self.backend(out)?;
        let requests = records
            .iter()
            .map(|r| build_request(r, &self.cfg.request))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Data(e.to_string()))?;
        let responses = annotate_batch(backend.as_ref(), &requests, &self.cfg.client_config(), &CharsDiv4);
        if !responses.is_empty() && responses.iter().all(|r| !r.is_ok()) {
            let first = responses[0].error.clone().unwrap_or_default();
            return Err(CliError::Endpoint(format!("every request failed; first error: {first}")));
        }
        Ok(responses)
    }
}

fn read_file<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    read_jsonl(BufReader::new(file)).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn response_summary(responses: &[RawResponse], ctx: &Ctx) -> serde_json::Value {
    let ok = responses.iter().filter(|r| r.is_ok()).count();
    let retries: u32 = responses.iter().map(|r| r.attempts.saturating_sub(1)).sum();
    json!({
        "requests": responses.len(),
        "ok": ok,
        "api_failures": responses.len() - ok,
        "retries": retries,
        "cost": response_cost(responses, &ctx.cfg.pricing),
    })
}

pub fn ingest(ctx: &Ctx) -> Result<serde_json::Value, CliError> {
    let mut out = ctx.outputs("ingest")?;
    let loaded = ctx.load(&mut out)?;
    let records = all_records(&loaded);
    let rows: Vec<_> = loaded
        .iter()
        .map(|l| json!({ "load": l.report, "report": registry_row(&l.report.source, &l.language, &l.records) }))
        .collect();
    out.write("records.jsonl", to_jsonl_string(&records).as_bytes())?;
    out.write_json("ingest_report.json", &rows)?;
    let summary = json!({ "records": records.len(), "sources": loaded.len() });
    out.finish(summary.clone())?;
    Ok(summary)
}

pub fn cost(ctx: &Ctx) -> Result<serde_json::Value, CliError> {
    let mut out = ctx.outputs("cost")?;
    let records = all_records(&ctx.load(&mut out)?);
    let est = estimate_cost(&records, ctx.cfg.request.prompt_version, &ctx.cfg.pricing, &CharsDiv4);
    out.write_json("cost.json", &est)?;
    let summary = json!({ "records": est.records, "total": est.total });
    out.finish(summary.clone())?;
    Ok(summary)
}

pub fn annotate(ctx: &Ctx) -> Result<serde_json::Value, CliError> {
    let mut out = ctx.outputs("annotate")?;
    let records = all_records(&ctx.load(&mut out)?);
    let responses = ctx.annotate(&records, &mut out)?;
    out.write("responses.jsonl", to_jsonl_string(&responses).as_bytes())?;
    let summary = response_summary(&responses, ctx);
    out.finish(summary.clone())?;
    Ok(summary)
}

pub fn transfer(ctx: &Ctx, responses_path: Option<&Path>) -> Result<serde_json::Value, CliError> {
    let mut out = ctx.outputs("transfer")?;
    let tax = ctx.taxonomy()?;
    let loaded = ctx.load(&mut out)?;
    let records = all_records(&loaded);
    let responses = match responses_path {
        Some(p) => {
            out.input(p)?;
            read_file::<RawResponse>(p)?
        }
        None => {
            let r = ctx.annotate(&records, &mut out)?;
            out.write("transfer_responses.jsonl", to_jsonl_string(&r).as_bytes())?;
            r
        }
    };
    let outcomes = outcomes_from_responses(&tax, &responses);
    let provenance = Provenance {
        model: ctx.cfg.request.model_name.clone(),
        prompt_version: ctx.cfg.request.prompt_version,
        temperature: ctx.cfg.request.temperature,
    };
    let partition = apply_agreement_filter(&records, &outcomes, &provenance)
        .map_err(|e| CliError::Data(e.to_string()))?;

    let mut unified = Vec::new();
    let opts = EmitOptions {
        include_spans: ctx.cfg.transfer.include_spans,
    };
    let emitted = emit_unified(&partition.kept, &mut unified, opts).map_err(|e| CliError::Data(e.to_string()))?;
    out.write("mlsnt.jsonl", &unified)?;

    let mut discarded = Vec::new();
    emit_discards(&partition.discarded, &mut discarded)?;
    out.write("discarded.jsonl", &discarded)?;

    let original: BTreeMap<String, u64> = loaded
        .iter()
        .map(|l| (l.report.source.clone(), l.report.raw_rows as u64))
        .collect();
    let stats = compute_source_stats(&partition, &original);
    out.write_json("stats.json", &stats)?;

    let parse_failures = outcomes
        .values()
        .filter(|o| matches!(o, AnnotationOutcome::ParseFailure(_)))
        .count();
    let summary = json!({
        "records": records.len(),
        "kept": partition.kept.len(),
        "discarded": partition.discarded.len(),
        "parse_failures": parse_failures,
        "responses": response_summary(&responses, ctx),
        "unified": emitted,
    });
    out.finish(summary.clone())?;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EvalMode {
    /// Gold line labels vs. annotator responses, under the agreement filters.
    Filter,
    /// One label per line: `{"id", "label"}` rows.
    Labels,
    /// Token label sequences: `{"id", "labels": [...]}` rows.
    Tokens,
}

#[derive(Deserialize)]
struct LabelRow {
    id: String,
    label: String,
}

#[derive(Deserialize)]
struct TokenRow {
    id: String,
    labels: Vec<String>,
}

fn join_by_id<T, F: Fn(&T) -> &str>(gold: Vec<T>, pred: Vec<T>, id: F) -> Result<Vec<(T, T)>, CliError> {
    let mut pred: BTreeMap<String, T> = pred.into_iter().map(|p| (id(&p).to_string(), p)).collect();
    gold.into_iter()
        .map(|g| {
            let key = id(&g).to_string();
            pred.remove(&key)
                .map(|p| (g, p))
                .ok_or_else(|| CliError::Data(format!("no prediction for {key}")))
        })
        .collect()
}

pub struct EvalArgs<'a> {
    pub gold: &'a Path,
    pub pred: &'a Path,
    pub mode: EvalMode,
    pub gold_basis: bool,
    pub include_zero_support: bool,
}

pub fn eval(ctx: &Ctx, args: &EvalArgs) -> Result<serde_json::Value, CliError> {
    let mut out = ctx.outputs("eval")?;
    out.input(args.gold)?;
    out.input(args.pred)?;
    let metric_err = |e: labelbridge::metrics::MetricsError| CliError::Data(e.to_string());
    let opts = F1Options {
        classes: Vec::new(),
        include_zero_support: args.include_zero_support,
    };
    let summary = match args.mode {
        EvalMode::Filter => {
            let tax = ctx.taxonomy()?;
            let gold: Vec<GoldRecord> = read_file(args.gold)?;
            let responses: Vec<RawResponse> = read_file(args.pred)?;
            let outcomes = outcomes_from_responses(&tax, &responses);
            let failed = outcomes
                .values()
                .filter(|o| !matches!(o, AnnotationOutcome::Annotated(_)))
                .count();
            let annotations = outcomes
                .into_iter()
                .filter_map(|(k, o)| match o {
                    AnnotationOutcome::Annotated(a) => Some((k, a)),
                    _ => None,
                })
                .collect();
            let basis = if args.gold_basis { LlmToxicBasis::Gold } else { LlmToxicBasis::Predicted };
            let report = filtered_evaluation(&gold, &annotations, basis).map_err(metric_err)?;
            out.write_json("eval.json", &report)?;
            out.write("eval.txt", render_filter_table(&[("run", &report)]).as_bytes())?;
            json!({ "mode": "filter", "report": report, "failed_annotations": failed })
        }
        EvalMode::Labels => {
            let pairs = join_by_id(read_file::<LabelRow>(args.gold)?, read_file(args.pred)?, |r| &r.id)?;
            let (g, p): (Vec<_>, Vec<_>) = pairs.into_iter().map(|(g, p)| (g.label, p.label)).unzip();
            let report = f1_scores(&g, &p, &opts).map_err(metric_err)?;
            out.write_json("f1.json", &report)?;
            json!({ "mode": "labels", "macro_f1": report.macro_f1, "weighted_f1": report.weighted_f1 })
        }
        EvalMode::Tokens => {
            let pairs = join_by_id(read_file::<TokenRow>(args.gold)?, read_file(args.pred)?, |r| &r.id)?;
            let (g, p): (Vec<_>, Vec<_>) = pairs.into_iter().map(|(g, p)| (g.labels, p.labels)).unzip();
            let report = token_f1(&g, &p, &opts).map_err(metric_err)?;
            out.write_json("f1.json", &report)?;
            json!({ "mode": "tokens", "macro_f1": report.macro_f1, "weighted_f1": report.weighted_f1 })
        }
    };
    out.finish(summary.clone())?;
    Ok(summary)
}

fn file_stem_part(s: &str) -> String {
    let cleaned: String = s
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect();
    if cleaned.is_empty() {
        "none".into()
    } else {
        cleaned
    }
}

pub fn sample(ctx: &Ctx, pool_path: &Path) -> Result<serde_json::Value, CliError> {
    let mut out = ctx.outputs("sample")?;
    out.input(pool_path)?;
    let pool: Vec<PoolRecord> = read_file(pool_path)?;
    let groups = sample_by_group(&pool, ctx.cfg.sample.base_target, ctx.cfg.sample.next_fraction, ctx.cfg.seed);
    let mut summary = Vec::new();
    for ((game, language), (plan, set)) in &groups {
        let stem = format!("sample_{}_{}", file_stem_part(game), file_stem_part(language));
        out.write(&format!("{stem}.jsonl"), to_jsonl_string(&set.samples).as_bytes())?;
        let mut sheet = Vec::new();
        write_annotation_sheet(&set.samples, &mut sheet).map_err(|e| CliError::Data(e.to_string()))?;
        out.write(&format!("{stem}.csv"), &sheet)?;
        summary.push(json!({
            "game": game,
            "language": language,
            "plan": plan,
            "drawn": set.drawn,
            "underfilled": set.underfilled,
        }));
    }
    let summary = json!({ "groups": summary });
    out.finish(summary.clone())?;
    Ok(summary)
}

pub fn assemble(ctx: &Ctx, input: &Path, unified_origin: Option<&str>) -> Result<serde_json::Value, CliError> {
    let mut out = ctx.outputs("assemble")?;
    out.input(input)?;
    let records: Vec<CorpusRecord> = match unified_origin {
        Some(origin) => read_file::<UnifiedRow>(input)?
            .iter()
            .map(|r| CorpusRecord::from_unified(r, origin))
            .collect(),
        None => read_file(input)?,
    };
    let a = &ctx.cfg.assemble;
    let rows = build_corpus(&records, &a.token_map, a.override_token, &a.layout, &chars_div4)
        .map_err(|e| CliError::Data(e.to_string()))?;
    out.write("corpus.jsonl", to_jsonl_string(&rows).as_bytes())?;
    let summary = json!({ "records": rows.len(), "placement": a.layout.placement, "max_len": a.layout.max_len });
    out.finish(summary.clone())?;
    Ok(summary)
}

pub fn resolve_against_cwd(p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        std::env::current_dir().map(|d| d.join(p)).unwrap_or_else(|_| p.to_path_buf())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_names_are_file_safe() {
        assert_eq!(file_stem_part("Game 1/EU"), "Game_1_EU");
        assert_eq!(file_stem_part("pt-BR"), "pt-BR");
        assert_eq!(file_stem_part(""), "none");
    }
}
