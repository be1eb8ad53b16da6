//! Stratified evaluation-set sampling with quota spillover.
//!
//! Every label starts with the same base quota. Walking the toxic categories
//! from most to least severe, a category's shortfall (quota minus what is
//! available) is moved on: a fraction (20% by default, rounded half-up) to
//! the next toxic category and the rest to non-toxic. The last toxic
//! category spills entirely to non-toxic, whose quota is finally capped at
//! its availability.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::taxonomy::Category;

pub const DEFAULT_BASE_TARGET: usize = 50;
pub const DEFAULT_NEXT_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotaPlan {
    /// Final per-label targets, all nine labels present.
    pub targets: BTreeMap<Category, usize>,
    pub base_target: usize,
    /// Share of a shortfall moved to the next toxic category.
    pub next_fraction: f64,
    /// Shortfall each toxic category passed on; non-toxic holds the amount
    /// cut by its own availability cap.
    pub shortfalls: BTreeMap<Category, usize>,
}

impl QuotaPlan {
    pub fn total(&self) -> usize {
        self.targets.values().sum()
    }

    pub fn target(&self, label: Category) -> usize {
        self.targets.get(&label).copied().unwrap_or(0)
    }
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5 + 1e-9).floor().max(0.0) as usize
}

/// Computes per-label quotas. Labels missing from `available` count as 0.
pub fn plan_quotas(
    available: &BTreeMap<Category, usize>,
    base_target: usize,
    next_fraction: f64,
) -> QuotaPlan {
    let avail = |c: Category| available.get(&c).copied().unwrap_or(0);
    let mut targets: BTreeMap<Category, usize> =
        Category::ALL.iter().map(|c| (*c, base_target)).collect();
    let mut shortfalls = BTreeMap::new();
    for &cat in Category::TOXIC.iter() {
        let target = targets[&cat];
        let shortfall = target.saturating_sub(avail(cat));
        if shortfall == 0 {
            continue;
        }
        *targets.get_mut(&cat).expect("all labels") -= shortfall;
        shortfalls.insert(cat, shortfall);
        let to_next = match cat.next_toxic() {
            Some(next) => {
                let n = round_half_up(next_fraction * shortfall as f64).min(shortfall);
                *targets.get_mut(&next).expect("all labels") += n;
                n
            }
            None => 0,
        };
        *targets.get_mut(&Category::NonToxic).expect("all labels") += shortfall - to_next;
    }
    let nt = targets.get_mut(&Category::NonToxic).expect("all labels");
    let cut = nt.saturating_sub(avail(Category::NonToxic));
    if cut > 0 {
        *nt -= cut;
        shortfalls.insert(Category::NonToxic, cut);
    }
    QuotaPlan {
        targets,
        base_target,
        next_fraction,
        shortfalls,
    }
}

/// A classifier-labelled line eligible for human evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolRecord {
    pub id: String,
    #[serde(default)]
    pub game: String,
    #[serde(default)]
    pub language: String,
    pub text: String,
    #[serde(default)]
    pub context: Vec<String>,
    pub predicted: Category,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSet {
    /// Deterministically shuffled.
    pub samples: Vec<PoolRecord>,
    pub drawn: BTreeMap<Category, usize>,
    /// Labels whose stratum was smaller than the plan asked for.
    pub underfilled: BTreeMap<Category, usize>,
}

/// Draws `plan.targets[label]` records per predicted label, uniformly
/// without replacement, then shuffles the union. Records sharing an id are
/// considered once (first occurrence wins).
pub fn draw_samples(pool: &[PoolRecord], plan: &QuotaPlan, seed: u64) -> EvaluationSet {
    let mut seen = BTreeSet::new();
    let mut strata: BTreeMap<Category, Vec<&PoolRecord>> = BTreeMap::new();
    for r in pool {
        if seen.insert(r.id.as_str()) {
            strata.entry(r.predicted).or_default().push(r);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(plan.total());
    let mut drawn = BTreeMap::new();
    let mut underfilled = BTreeMap::new();
    for (&label, &target) in &plan.targets {
        let mut stratum = strata.remove(&label).unwrap_or_default();
        stratum.sort_by(|a, b| a.id.cmp(&b.id));
        let take = target.min(stratum.len());
        if take < target {
            underfilled.insert(label, target - take);
        }
        let picks = rand::seq::index::sample(&mut rng, stratum.len(), take);
        let mut picked: Vec<usize> = picks.into_vec();
        picked.sort_unstable();
        samples.extend(picked.into_iter().map(|i| stratum[i].clone()));
        drawn.insert(label, take);
    }
    samples.shuffle(&mut rng);
    EvaluationSet {
        samples,
        drawn,
        underfilled,
    }
}

/// Counts of each predicted label in a pool (unique ids).
pub fn availability(pool: &[PoolRecord]) -> BTreeMap<Category, usize> {
    let mut seen = BTreeSet::new();
    let mut out = BTreeMap::new();
    for r in pool.iter().filter(|r| seen.insert(r.id.as_str())) {
        *out.entry(r.predicted).or_insert(0) += 1;
    }
    out
}

/// Plans and draws one set per (game, language) group. Each group's
/// generator is seeded from `seed` and the group key.
pub fn sample_by_group(
    pool: &[PoolRecord],
    base_target: usize,
    next_fraction: f64,
    seed: u64,
) -> BTreeMap<(String, String), (QuotaPlan, EvaluationSet)> {
    let mut groups: BTreeMap<(String, String), Vec<PoolRecord>> = BTreeMap::new();
    for r in pool {
        groups
            .entry((r.game.clone(), r.language.clone()))
            .or_default()
            .push(r.clone());
    }
    groups
        .into_iter()
        .map(|(key, members)| {
            let plan = plan_quotas(&availability(&members), base_target, next_fraction);
            let group_seed = group_seed(seed, &key.0, &key.1);
            let set = draw_samples(&members, &plan, group_seed);
            (key, (plan, set))
        })
        .collect()
}

fn group_seed(seed: u64, game: &str, language: &str) -> u64 {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(game.as_bytes());
    h.update([0u8]);
    h.update(language.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Annotation sheet: id, text, context (newline-joined), predicted label and
/// an empty gold column.
pub fn write_annotation_sheet<W: Write>(samples: &[PoolRecord], sink: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["id", "text", "context", "predicted_label", "gold_label"])?;
    for s in samples {
        w.write_record([
            s.id.as_str(),
            s.text.as_str(),
            s.context.join("\n").as_str(),
            s.predicted.display_name(),
            "",
        ])?;
    }
    w.flush()?;
    Ok(())
}
