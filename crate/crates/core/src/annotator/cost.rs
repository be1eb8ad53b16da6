//! Token-based cost estimation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{RawResponse, TokenEstimator};
use crate::ingest::ChatRecord;
use crate::prompting::{render_user_message, PromptVersion};

/// Prices in currency units per million tokens.
///
/// Defaults are the gpt-4o-mini batch-API rates (USD 0.075 input, 0.30
/// output), the way an offline relabeling job is normally submitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PricingConfig {
    pub input_price: f64,
    pub output_price: f64,
    /// Output tokens assumed per request before any response is known.
    pub expected_output_tokens: u64,
}

impl Default for PricingConfig {
    fn default() -> Self {
        PricingConfig {
            input_price: 0.075,
            output_price: 0.30,
            expected_output_tokens: 32,
        }
    }
}

impl PricingConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.input_price >= 0.0 && self.output_price >= 0.0) {
            return Err("prices must be non-negative".into());
        }
        Ok(())
    }

    pub fn cost(&self, input_tokens: u64, output_tokens: u64) -> f64 {
        (input_tokens as f64 * self.input_price + output_tokens as f64 * self.output_price) / 1e6
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceCost {
    pub records: usize,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub cost: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub records: usize,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub total: f64,
    pub per_source: BTreeMap<String, SourceCost>,
}

/// Estimated cost of annotating `records` with one completion each.
pub fn estimate_cost(
    records: &[ChatRecord],
    version: PromptVersion,
    pricing: &PricingConfig,
    estimator: &dyn TokenEstimator,
) -> CostEstimate {
    let system_tokens = estimator.estimate(version.system_text());
    let mut est = CostEstimate::default();
    for r in records {
        let input = system_tokens + estimator.estimate(&render_user_message(&r.text, &r.context));
        let entry = est.per_source.entry(r.source.clone()).or_default();
        entry.records += 1;
        entry.input_tokens += input;
        entry.output_tokens += pricing.expected_output_tokens;
    }
    for s in est.per_source.values_mut() {
        s.cost = pricing.cost(s.input_tokens, s.output_tokens);
        est.records += s.records;
        est.input_tokens += s.input_tokens;
        est.output_tokens += s.output_tokens;
    }
    est.total = pricing.cost(est.input_tokens, est.output_tokens);
    est
}

/// Cost of responses already received, from their token counts. Failed
/// requests are charged one prompt.
pub fn response_cost(responses: &[RawResponse], pricing: &PricingConfig) -> f64 {
    let input: u64 = responses.iter().map(|r| r.input_tokens).sum();
    let output: u64 = responses.iter().map(|r| r.output_tokens).sum();
    pricing.cost(input, output)
}
