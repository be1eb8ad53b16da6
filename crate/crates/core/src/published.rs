//! Published per-source figures for the MLSNT release and its 15 source
//! corpora, used as reconciliation targets.

use crate::util::Percent;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PublishedSource {
    pub name: &'static str,
    pub language: &'static str,
    pub task: &'static str,
    pub platform: &'static str,
    /// Lines in the human-annotated source.
    pub original_lines: u64,
    /// Estimated annotation cost in US cents.
    pub cost_cents: u64,
    /// Lines kept after the agreement filter.
    pub processed_lines: u64,
    pub pct_discarded: Percent,
    pub original_toxicity: Percent,
    pub processed_toxicity: Percent,
    pub delta: Percent,
}

const fn p(h: i64) -> Percent {
    Percent::from_hundredths(h)
}

#[rustfmt::skip]
pub const PUBLISHED: [PublishedSource; 15] = [
    PublishedSource { name: "COLD", language: "zh-Hans", task: "Offensive", platform: "Zhihu, Weibo, etc. (SNS)", original_lines: 37_480, cost_cents: 364, processed_lines: 20_087, pct_discarded: p(4618), original_toxicity: p(4803), processed_toxicity: p(6067), delta: p(1264) },
    PublishedSource { name: "SWSR", language: "zh-Hans", task: "Sexism", platform: "Weibo (SNS)", original_lines: 8_969, cost_cents: 89, processed_lines: 5_708, pct_discarded: p(3632), original_toxicity: p(3450), processed_toxicity: p(4785), delta: p(1335) },
    PublishedSource { name: "TOXICN", language: "zh-Hans", task: "Toxicity & more", platform: "Zhihu, Tieba (SNS)", original_lines: 12_011, cost_cents: 115, processed_lines: 8_500, pct_discarded: p(2923), original_toxicity: p(5379), processed_toxicity: p(5651), delta: p(271) },
    PublishedSource { name: "TOCAB", language: "zh-Hant", task: "Profanity", platform: "PTT, a famous BBS site", original_lines: 104_002, cost_cents: 978, processed_lines: 65_263, pct_discarded: p(3725), original_toxicity: p(1448), processed_toxicity: p(894), delta: p(-554) },
    PublishedSource { name: "MLMA", language: "fr", task: "Hate", platform: "Twitter", original_lines: 4_014, cost_cents: 38, processed_lines: 3_203, pct_discarded: p(2020), original_toxicity: p(7955), processed_toxicity: p(9357), delta: p(1402) },
    PublishedSource { name: "GAHD", language: "de", task: "Hate", platform: "News, synthetic data", original_lines: 10_996, cost_cents: 104, processed_lines: 7_886, pct_discarded: p(2828), original_toxicity: p(4243), processed_toxicity: p(5588), delta: p(1345) },
    PublishedSource { name: "GERM_EVAL", language: "de", task: "Offensive", platform: "Twitter", original_lines: 8_407, cost_cents: 81, processed_lines: 4_546, pct_discarded: p(4593), original_toxicity: p(3376), processed_toxicity: p(5370), delta: p(1994) },
    PublishedSource { name: "HASOC", language: "de", task: "Offensive, Hate", platform: "Twitter and Facebook", original_lines: 4_669, cost_cents: 45, processed_lines: 1_431, pct_discarded: p(6935), original_toxicity: p(1163), processed_toxicity: p(3242), delta: p(2079) },
    PublishedSource { name: "Inspection_AI", language: "ja", task: "Toxicity", platform: "--", original_lines: 437, cost_cents: 4, processed_lines: 324, pct_discarded: p(2586), original_toxicity: p(3593), processed_toxicity: p(1698), delta: p(-1895) },
    PublishedSource { name: "LLM_JP", language: "ja", task: "Toxicity", platform: "-- (long form text)", original_lines: 1_847, cost_cents: 51, processed_lines: 1_662, pct_discarded: p(1002), original_toxicity: p(4472), processed_toxicity: p(4543), delta: p(71) },
    PublishedSource { name: "OffCom", language: "pt-BR", task: "Offensive", platform: "Posts", original_lines: 1_033, cost_cents: 10, processed_lines: 577, pct_discarded: p(4414), original_toxicity: p(1955), processed_toxicity: p(2686), delta: p(731) },
    PublishedSource { name: "OLID", language: "pt-BR", task: "Toxicity", platform: "Twitter, YouTube, and more", original_lines: 6_952, cost_cents: 66, processed_lines: 5_534, pct_discarded: p(2040), original_toxicity: p(8539), processed_toxicity: p(9400), delta: p(862) },
    PublishedSource { name: "ToLD", language: "pt-BR", task: "Offensive", platform: "Twitter", original_lines: 21_000, cost_cents: 199, processed_lines: 15_065, pct_discarded: p(2826), original_toxicity: p(4407), processed_toxicity: p(4998), delta: p(591) },
    PublishedSource { name: "Abusive", language: "ru", task: "Abusive", platform: "Video comments", original_lines: 2_000, cost_cents: 20, processed_lines: 1_184, pct_discarded: p(4080), original_toxicity: p(3270), processed_toxicity: p(5397), delta: p(2127) },
    PublishedSource { name: "South_Park", language: "ru", task: "Hate Speech", platform: "South Park (video subtitles)", original_lines: 15_875, cost_cents: 157, processed_lines: 13_155, pct_discarded: p(1713), original_toxicity: p(3283), processed_toxicity: p(3269), delta: p(-14) },
];

pub fn published(name: &str) -> Option<&'static PublishedSource> {
    PUBLISHED.iter().find(|s| s.name.eq_ignore_ascii_case(name))
}
