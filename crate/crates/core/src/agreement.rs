//! Token relevance and agreement@k.
//!
//! Relevance of a token is the fraction of selector entities (method top-k
//! sets or human annotators) that contain it. Sentence agreement is the mean
//! relevance over tokens with nonzero relevance, and dataset agreement is the
//! plain mean of sentence agreements.
//!
//! Relevance is stored as integer counts over a common denominator so that
//! sentence agreement is a single rational division.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::profile::{Corpus, KSpec};
use crate::topk::{self, ScoreTransform, TieBreak, TopKError, TopKSelection};

/// Selector label used for the human annotator group in reports.
pub const HUMAN: &str = "human";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgreementError {
    #[error("relevance needs at least one selector")]
    NoSelectors,
    #[error("selected index {index} is out of range for sentence length {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("no annotator selections given")]
    NoAnnotators,
    #[error("annotator {annotator} has {actual} marks, expected {expected}")]
    RaggedAnnotators {
        annotator: usize,
        expected: usize,
        actual: usize,
    },
    #[error("agreement is undefined: no token has nonzero relevance")]
    Undefined,
    #[error("cannot average an empty list of sentence scores")]
    EmptyDataset,
    #[error("unknown method '{0}'")]
    UnknownMethod(String),
    #[error("pairwise agreement needs at least two methods, corpus has {0}")]
    TooFewMethods(usize),
    #[error("no instance carries human annotations")]
    NoAnnotatedInstances,
    #[error("no instance could be scored for {0}")]
    NothingScored(String),
    #[error("empty list of k values")]
    EmptyKValues,
    #[error(transparent)]
    TopK(#[from] TopKError),
}

impl AgreementError {
    /// Errors caused by how the caller named things rather than by the data.
    pub fn is_usage_error(&self) -> bool {
        matches!(
            self,
            Self::UnknownMethod(_) | Self::TooFewMethods(_) | Self::EmptyKValues
        )
    }
}

/// Per-token relevance, `counts[i] / resolution`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelevanceVector {
    counts: Vec<u32>,
    resolution: u32,
    selector_count: usize,
}

impl RelevanceVector {
    pub fn values(&self) -> Vec<f64> {
        let r = f64::from(self.resolution);
        self.counts.iter().map(|&c| f64::from(c) / r).collect()
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Every value is an integer multiple of `1 / resolution`.
    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    /// Number of selector entities combined.
    pub fn selector_count(&self) -> usize {
        self.selector_count
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

fn add_selection(
    counts: &mut [u32],
    selection: &[usize],
    weight: u32,
) -> Result<(), AgreementError> {
    let n = counts.len();
    let mut seen = vec![false; n];
    for &index in selection {
        if index >= n {
            return Err(AgreementError::IndexOutOfRange { index, n });
        }
        if !std::mem::replace(&mut seen[index], true) {
            counts[index] += weight;
        }
    }
    Ok(())
}

fn add_annotators<S: AsRef<[u8]>>(
    counts: &mut [u32],
    annotators: &[S],
) -> Result<(), AgreementError> {
    let n = counts.len();
    for (annotator, marks) in annotators.iter().enumerate() {
        let marks = marks.as_ref();
        if marks.len() != n {
            return Err(AgreementError::RaggedAnnotators {
                annotator,
                expected: n,
                actual: marks.len(),
            });
        }
        for (count, &mark) in counts.iter_mut().zip(marks) {
            *count += u32::from(mark != 0);
        }
    }
    Ok(())
}

/// Fraction of the `m` selections containing each of the `n` positions.
pub fn relevance<S: AsRef<[usize]>>(
    selections: &[S],
    n: usize,
) -> Result<RelevanceVector, AgreementError> {
    if selections.is_empty() {
        return Err(AgreementError::NoSelectors);
    }
    let mut counts = vec![0u32; n];
    for selection in selections {
        add_selection(&mut counts, selection.as_ref(), 1)?;
    }
    Ok(RelevanceVector {
        counts,
        resolution: selections.len() as u32,
        selector_count: selections.len(),
    })
}

/// Fraction of annotators marking each token.
pub fn human_relevance<S: AsRef<[u8]>>(
    annotators: &[S],
) -> Result<RelevanceVector, AgreementError> {
    let first = annotators.first().ok_or(AgreementError::NoAnnotators)?;
    let mut counts = vec![0u32; first.as_ref().len()];
    add_annotators(&mut counts, annotators)?;
    Ok(RelevanceVector {
        counts,
        resolution: annotators.len() as u32,
        selector_count: annotators.len(),
    })
}

/// How a single method's selection is combined with several annotators.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum CombineMode {
    /// Each annotator is one more selector: `m = 1 + annotators`.
    #[default]
    AnnotatorsAsEntities,
    /// Two entities, the method (0 or 1) and the human ratio, averaged.
    TwoEntityAverage,
}

impl fmt::Display for CombineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::AnnotatorsAsEntities => "entities",
            Self::TwoEntityAverage => "average",
        })
    }
}

impl FromStr for CombineMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "entities" => Ok(Self::AnnotatorsAsEntities),
            "average" => Ok(Self::TwoEntityAverage),
            other => Err(format!(
                "unknown combine mode '{other}', expected entities or average"
            )),
        }
    }
}

/// Relevance of a method selection taken together with human annotators.
pub fn method_human_relevance<S: AsRef<[u8]>>(
    selection: &[usize],
    annotators: &[S],
    mode: CombineMode,
) -> Result<RelevanceVector, AgreementError> {
    let first = annotators.first().ok_or(AgreementError::NoAnnotators)?;
    let h = annotators.len() as u32;
    let mut counts = vec![0u32; first.as_ref().len()];
    add_annotators(&mut counts, annotators)?;
    let (weight, resolution, selector_count) = match mode {
        CombineMode::AnnotatorsAsEntities => (1, h + 1, annotators.len() + 1),
        // (indicator + c/h) / 2 == (h * indicator + c) / 2h
        CombineMode::TwoEntityAverage => (h, 2 * h, 2),
    };
    add_selection(&mut counts, selection, weight)?;
    Ok(RelevanceVector {
        counts,
        resolution,
        selector_count,
    })
}

/// Mean relevance over tokens with nonzero relevance.
pub fn agreement_sentence(relevance: &RelevanceVector) -> Result<f64, AgreementError> {
    let (total, nonzero) = relevance
        .counts
        .iter()
        .filter(|&&c| c > 0)
        .fold((0u64, 0u64), |(t, n), &c| (t + u64::from(c), n + 1));
    if nonzero == 0 {
        return Err(AgreementError::Undefined);
    }
    Ok(total as f64 / (f64::from(relevance.resolution) * nonzero as f64))
}

/// Arithmetic mean of sentence agreements, summed in list order.
pub fn agreement_dataset(sentence_scores: &[f64]) -> Result<f64, AgreementError> {
    if sentence_scores.is_empty() {
        return Err(AgreementError::EmptyDataset);
    }
    Ok(sentence_scores.iter().sum::<f64>() / sentence_scores.len() as f64)
}

/// The two sides being compared.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum PairSpec {
    Methods(String, String),
    Human(String),
}

impl PairSpec {
    pub fn labels(&self) -> (&str, &str) {
        match self {
            Self::Methods(a, b) => (a, b),
            Self::Human(m) => (m, HUMAN),
        }
    }
}

/// Which pairs a report covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SelectorSpec {
    AllPairs,
    Pair(String, String),
    Human(String),
    AllHuman,
}

impl SelectorSpec {
    /// Concrete pairs in canonical order; all-pairs yields `a < b`.
    pub fn expand(&self, corpus: &Corpus) -> Result<Vec<PairSpec>, AgreementError> {
        let check = |name: &str| {
            corpus
                .method_index(name)
                .map(|_| name.to_owned())
                .ok_or_else(|| AgreementError::UnknownMethod(name.to_owned()))
        };
        let methods = corpus.method_names();
        Ok(match self {
            Self::AllPairs => {
                if methods.len() < 2 {
                    return Err(AgreementError::TooFewMethods(methods.len()));
                }
                let mut pairs = Vec::new();
                for (i, a) in methods.iter().enumerate() {
                    for b in &methods[i + 1..] {
                        pairs.push(PairSpec::Methods(a.clone(), b.clone()));
                    }
                }
                pairs
            }
            Self::Pair(a, b) => vec![PairSpec::Methods(check(a)?, check(b)?)],
            Self::Human(m) => vec![PairSpec::Human(check(m)?)],
            Self::AllHuman => methods.iter().cloned().map(PairSpec::Human).collect(),
        })
    }
}

/// Tie and score-transform settings shared by every selection in a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SelectionOptions {
    pub tie: TieBreak,
    pub transform: ScoreTransform,
}

/// Per-method summary of selection sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct KStats {
    pub method: String,
    pub mean: f64,
    /// Population standard deviation.
    pub sd: f64,
    /// Instances where the dynamic selection fell back to the argmax.
    pub fallbacks: usize,
}

/// Dataset-level agreement for one pair under one k specification.
#[derive(Debug, Clone, PartialEq)]
pub struct AgreementEntry {
    pub selector_a: String,
    pub selector_b: String,
    pub k_spec: KSpec,
    /// Set for method-human entries only.
    pub combine: Option<CombineMode>,
    pub mean_agreement: f64,
    pub n_instances: usize,
    /// Instances left out: no annotations, or agreement undefined.
    pub skipped: usize,
    /// Filled for dynamic k only, one element per method in the pair.
    pub k_stats: Vec<KStats>,
}

/// Computes and caches selections per (k spec, method) for one corpus.
pub struct Evaluator<'c> {
    corpus: &'c Corpus,
    options: SelectionOptions,
    combine: CombineMode,
    cache: BTreeMap<(KSpec, usize), Vec<TopKSelection>>,
}

impl<'c> Evaluator<'c> {
    pub fn new(corpus: &'c Corpus, options: SelectionOptions, combine: CombineMode) -> Self {
        Self {
            corpus,
            options,
            combine,
            cache: BTreeMap::new(),
        }
    }

    pub fn corpus(&self) -> &'c Corpus {
        self.corpus
    }

    fn method_index(&self, name: &str) -> Result<usize, AgreementError> {
        self.corpus
            .method_index(name)
            .ok_or_else(|| AgreementError::UnknownMethod(name.to_owned()))
    }

    fn ensure(&mut self, spec: KSpec, method: usize) -> Result<(), AgreementError> {
        if self.cache.contains_key(&(spec, method)) {
            return Ok(());
        }
        let name = &self.corpus.method_names()[method];
        let options = self.options;
        let selections = self
            .corpus
            .instances()
            .par_iter()
            .enumerate()
            .map(|(i, instance)| {
                let scores = instance
                    .scores(name)
                    .expect("corpus method sets are uniform");
                let scores = options.transform.apply(scores);
                topk::select(&scores, spec, options.tie.for_cell(i, method))
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.cache.insert((spec, method), selections);
        Ok(())
    }

    /// Selections of `method` under `spec`, one per instance in corpus order.
    pub fn selections(
        &mut self,
        method: &str,
        spec: KSpec,
    ) -> Result<&[TopKSelection], AgreementError> {
        let index = self.method_index(method)?;
        self.ensure(spec, index)?;
        Ok(&self.cache[&(spec, index)])
    }

    /// Sentence agreement per instance; `None` where the instance is skipped.
    pub fn sentence_scores(
        &mut self,
        pair: &PairSpec,
        spec: KSpec,
    ) -> Result<Vec<Option<f64>>, AgreementError> {
        match pair {
            PairSpec::Methods(a, b) => {
                let (ia, ib) = (self.method_index(a)?, self.method_index(b)?);
                self.ensure(spec, ia)?;
                self.ensure(spec, ib)?;
                let (sa, sb) = (&self.cache[&(spec, ia)], &self.cache[&(spec, ib)]);
                self.corpus
                    .instances()
                    .par_iter()
                    .zip(sa.par_iter().zip(sb))
                    .map(|(instance, (a, b))| {
                        let r = relevance(&[a, b], instance.len())?;
                        agreement_sentence(&r).map(Some)
                    })
                    .collect()
            }
            PairSpec::Human(m) => {
                let im = self.method_index(m)?;
                self.ensure(spec, im)?;
                if self.corpus.annotated_count() == 0 {
                    return Err(AgreementError::NoAnnotatedInstances);
                }
                let combine = self.combine;
                let selections = &self.cache[&(spec, im)];
                self.corpus
                    .instances()
                    .par_iter()
                    .zip(selections)
                    .map(|(instance, sel)| match instance.human() {
                        Some(human) if !human.is_empty() => {
                            let r = method_human_relevance(sel.indices(), human, combine)?;
                            match agreement_sentence(&r) {
                                Ok(score) => Ok(Some(score)),
                                Err(AgreementError::Undefined) => Ok(None),
                                Err(e) => Err(e),
                            }
                        }
                        _ => Ok(None),
                    })
                    .collect()
            }
        }
    }

    /// Dataset agreement over the whole corpus.
    pub fn entry(
        &mut self,
        pair: &PairSpec,
        spec: KSpec,
    ) -> Result<AgreementEntry, AgreementError> {
        let all: Vec<usize> = (0..self.corpus.len()).collect();
        self.entry_over(pair, spec, &all)
    }

    /// Dataset agreement restricted to the instance positions in `subset`.
    pub fn entry_over(
        &mut self,
        pair: &PairSpec,
        spec: KSpec,
        subset: &[usize],
    ) -> Result<AgreementEntry, AgreementError> {
        let scores = self.sentence_scores(pair, spec)?;
        let kept: Vec<f64> = subset.iter().filter_map(|&i| scores[i]).collect();
        let (a, b) = pair.labels();
        if kept.is_empty() {
            return Err(AgreementError::NothingScored(format!(
                "{a} vs {b} at {spec}"
            )));
        }
        let mean_agreement = agreement_dataset(&kept)?;
        let k_stats = if spec.is_dynamic() {
            let methods: Vec<&str> = match pair {
                PairSpec::Methods(a, b) => vec![a, b],
                PairSpec::Human(m) => vec![m],
            };
            methods
                .into_iter()
                .map(|m| {
                    let selections = self.selections(m, spec)?;
                    Ok(k_stats(m, subset.iter().map(|&i| &selections[i])))
                })
                .collect::<Result<_, AgreementError>>()?
        } else {
            Vec::new()
        };
        Ok(AgreementEntry {
            selector_a: a.to_owned(),
            selector_b: b.to_owned(),
            k_spec: spec,
            combine: matches!(pair, PairSpec::Human(_)).then_some(self.combine),
            mean_agreement,
            n_instances: kept.len(),
            skipped: subset.len() - kept.len(),
            k_stats,
        })
    }

    /// Selection-size summary of `method` under `spec` over the whole corpus.
    pub fn method_k_stats(&mut self, method: &str, spec: KSpec) -> Result<KStats, AgreementError> {
        let selections = self.selections(method, spec)?;
        Ok(k_stats(method, selections.iter()))
    }
}

fn k_stats<'a>(method: &str, selections: impl Iterator<Item = &'a TopKSelection>) -> KStats {
    let mut ks = Vec::new();
    let mut fallbacks = 0;
    for sel in selections {
        ks.push(sel.k() as f64);
        fallbacks += usize::from(sel.fallback_used());
    }
    let n = ks.len().max(1) as f64;
    let mean = ks.iter().sum::<f64>() / n;
    let var = ks.iter().map(|k| (k - mean) * (k - mean)).sum::<f64>() / n;
    KStats {
        method: method.to_owned(),
        mean,
        sd: var.sqrt(),
        fallbacks,
    }
}

/// Dataset agreement between two methods. Under dynamic k each method uses
/// its own peak-derived k on every instance.
pub fn method_pair_agreement(
    corpus: &Corpus,
    method_a: &str,
    method_b: &str,
    k_spec: KSpec,
    options: SelectionOptions,
) -> Result<AgreementEntry, AgreementError> {
    Evaluator::new(corpus, options, CombineMode::default()).entry(
        &PairSpec::Methods(method_a.to_owned(), method_b.to_owned()),
        k_spec,
    )
}

/// Dataset agreement between a method and the human annotators. Instances
/// without annotations are skipped and counted.
pub fn method_human_agreement(
    corpus: &Corpus,
    method: &str,
    k_spec: KSpec,
    combine: CombineMode,
    options: SelectionOptions,
) -> Result<AgreementEntry, AgreementError> {
    Evaluator::new(corpus, options, combine).entry(&PairSpec::Human(method.to_owned()), k_spec)
}

/// One fixed-k entry per value in `k_values`, in the given order.
pub fn agreement_curve(
    corpus: &Corpus,
    pair: &PairSpec,
    k_values: &[usize],
    combine: CombineMode,
    options: SelectionOptions,
) -> Result<Vec<AgreementEntry>, AgreementError> {
    if k_values.is_empty() {
        return Err(AgreementError::EmptyKValues);
    }
    let mut evaluator = Evaluator::new(corpus, options, combine);
    k_values
        .iter()
        .map(|&k| {
            let spec = KSpec::fixed(k).map_err(|_| TopKError::ZeroK)?;
            evaluator.entry(pair, spec)
        })
        .collect()
}
