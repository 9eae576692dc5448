//! Agreement@k evaluation for token-level feature attributions.
//!
//! Given per-token attribution profiles from several methods (and optionally
//! human token annotations), this crate selects the top-k tokens of each
//! profile, either with a fixed k or with a dynamic, peak-derived k, and
//! measures how much the selections agree. It also selects the most central
//! model run from several runs by average pairwise difference.
//!
//! Modules:
//! - [`profile`]: domain types, corpus ingestion and validation
//! - [`topk`]: fixed and dynamic top-k selection
//! - [`agreement`]: relevance and agreement@k at sentence and dataset level
//! - [`runs`]: average pairwise difference and median-run selection
//! - [`report`]: delta, length-bias and selection tables plus CSV/JSON output
//! - [`synth`]: seeded synthetic corpora

pub mod agreement;
pub mod profile;
pub mod report;
pub mod runs;
pub mod synth;
pub mod topk;

pub use agreement::{
    agreement_curve, agreement_dataset, agreement_sentence, human_relevance,
    method_human_agreement, method_pair_agreement, relevance, AgreementEntry, AgreementError,
    CombineMode, Evaluator, PairSpec, RelevanceVector, SelectionOptions, SelectorSpec,
};
pub use profile::{
    load_corpus, read_corpus, zero_punctuation, AttributionInstance, Corpus, IngestMode,
    InstanceRecord, KSpec, LoadError, LoadedCorpus, PunctuationSet,
};
pub use runs::{apd_select, average_difference, build_run_matrix, ApdSelection, RunMatrix};
pub use topk::{detect_peaks, dynamic_topk, fixed_topk, ScoreTransform, TieBreak, TopKSelection};
