//! Toxicity label transfer: re-annotate human-labelled corpora with an LLM
//! into a fixed category taxonomy, keep the lines where the LLM's binary
//! verdict agrees with the human one, and build evaluation and training
//! artifacts from the result.

pub mod annotator;
pub mod ingest;
pub mod metrics;
pub mod parse;
pub mod prompting;
pub mod published;
pub mod sampler;
pub mod softprompt;
pub mod taxonomy;
pub mod transfer;
pub mod util;

pub use annotator::{annotate_batch, ClientConfig, CompletionBackend, RawResponse};
pub use ingest::{ChatRecord, Registry, SourceDescriptor};
pub use parse::{parse_response, LlmAnnotation, ParseFailure};
pub use prompting::{build_request, render_system_prompt, AnnotationRequest, PromptVersion};
pub use taxonomy::{BinaryLabel, Category, SpanLabel, Subtopic, Taxonomy};
pub use transfer::{apply_agreement_filter, Partition, SourceStats, TransferredRecord};
pub use util::Percent;
