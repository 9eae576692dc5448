//! Report tables built on top of the agreement metrics: dynamic-vs-fixed
//! deltas, sentence-length bias, and per-instance selections.

mod output;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::agreement::{AgreementError, Evaluator, PairSpec, SelectorSpec};
use crate::profile::KSpec;
use crate::topk::TopKError;

pub use output::{
    fmt6, write_agreement, write_apd, write_bias, write_delta, write_topk, write_validation,
    Format, InputInfo, ReportMetadata, ValidationSummary,
};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Agreement(#[from] AgreementError),
    #[error("length bin {lo}..={hi} contains no instances")]
    EmptyBin { lo: usize, hi: usize },
    #[error("bin boundaries must be strictly increasing, got {0:?}")]
    BadBoundaries(Vec<usize>),
    #[error("quantile binning needs at least one bin")]
    ZeroBins,
    #[error("corpus has no instances")]
    EmptyCorpus,
    #[error("empty list of k values")]
    NoKValues,
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("json output failed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("write failed: {0}")]
    Io(#[from] std::io::Error),
}

impl ReportError {
    pub fn is_usage_error(&self) -> bool {
        match self {
            Self::Agreement(e) => e.is_usage_error(),
            Self::BadBoundaries(_) | Self::ZeroBins | Self::NoKValues => true,
            _ => false,
        }
    }

    pub fn is_io_error(&self) -> bool {
        match self {
            Self::Io(_) | Self::Json(_) => true,
            Self::Csv(e) => matches!(e.kind(), csv::ErrorKind::Io(_)),
            _ => false,
        }
    }
}

/// How several method-method agreements for one method are folded together.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Aggregate {
    #[default]
    Sum,
    Mean,
}

impl fmt::Display for Aggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sum => "sum",
            Self::Mean => "mean",
        })
    }
}

impl FromStr for Aggregate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sum" => Ok(Self::Sum),
            "mean" => Ok(Self::Mean),
            other => Err(format!("unknown aggregate '{other}', expected sum or mean")),
        }
    }
}

/// One (method, fixed k) comparison against dynamic k.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaRow {
    pub method: String,
    /// What the method was compared with: another method, `human`, or
    /// `methods:sum` / `methods:mean` for the aggregate over all other methods.
    pub reference: String,
    pub fixed_k: usize,
    pub mean_agreement_fixed: f64,
    pub mean_agreement_dynamic: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeltaTable {
    pub rows: Vec<DeltaRow>,
}

/// Agreement under dynamic k minus agreement under each fixed k.
///
/// With [`SelectorSpec::AllPairs`] every method gets one row per k, holding
/// its agreements with all other methods folded by `aggregate`.
pub fn delta_table(
    evaluator: &mut Evaluator<'_>,
    selectors: &SelectorSpec,
    fixed_ks: &[usize],
    aggregate: Aggregate,
) -> Result<DeltaTable, ReportError> {
    if fixed_ks.is_empty() {
        return Err(ReportError::NoKValues);
    }
    let fixed_specs = fixed_ks
        .iter()
        .map(|&k| KSpec::fixed(k).map_err(|_| AgreementError::TopK(TopKError::ZeroK)))
        .collect::<Result<Vec<_>, _>>()?;
    let corpus = evaluator.corpus();

    // (method, reference, pairs folded into the row)
    let groups: Vec<(String, String, Vec<PairSpec>)> = match selectors {
        SelectorSpec::AllPairs => {
            let pairs = SelectorSpec::AllPairs.expand(corpus)?;
            corpus
                .method_names()
                .iter()
                .map(|m| {
                    let mine = pairs
                        .iter()
                        .filter(|p| matches!(p, PairSpec::Methods(a, b) if a == m || b == m))
                        .cloned()
                        .collect();
                    (m.clone(), format!("methods:{aggregate}"), mine)
                })
                .collect()
        }
        other => other
            .expand(corpus)?
            .into_iter()
            .map(|pair| {
                let (a, b) = pair.labels();
                (a.to_owned(), b.to_owned(), vec![pair])
            })
            .collect(),
    };

    let fold = |evaluator: &mut Evaluator<'_>, pairs: &[PairSpec], spec: KSpec| {
        let mut total = 0.0;
        for pair in pairs {
            total += evaluator.entry(pair, spec)?.mean_agreement;
        }
        Ok::<_, ReportError>(match aggregate {
            Aggregate::Sum => total,
            Aggregate::Mean => total / pairs.len() as f64,
        })
    };

    let mut rows = Vec::new();
    for (method, reference, pairs) in &groups {
        let dynamic = fold(evaluator, pairs, KSpec::Dynamic)?;
        for spec in &fixed_specs {
            let fixed = fold(evaluator, pairs, *spec)?;
            rows.push(DeltaRow {
                method: method.clone(),
                reference: reference.clone(),
                fixed_k: spec.fixed_k().expect("fixed spec"),
                mean_agreement_fixed: fixed,
                mean_agreement_dynamic: dynamic,
                delta: dynamic - fixed,
            });
        }
    }
    Ok(DeltaTable { rows })
}

/// Length binning for the sentence-length bias report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Binning {
    /// Roughly equal-count bins; coinciding cut points are merged.
    Quantile(usize),
    /// Inclusive upper edges starting from length 1; a final bin takes
    /// everything above the last edge.
    Explicit(Vec<usize>),
}

impl Default for Binning {
    fn default() -> Self {
        Self::Quantile(5)
    }
}

impl FromStr for Binning {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(q) = s.strip_prefix("quantile:") {
            return q
                .parse()
                .map(Self::Quantile)
                .map_err(|_| format!("bad bin count in '{s}'"));
        }
        s.split(',')
            .map(|edge| edge.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map(Self::Explicit)
            .map_err(|_| {
                format!("bad bins '{s}', expected quantile:Q or comma-separated upper edges")
            })
    }
}

/// Inclusive token-count range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct LengthBin {
    pub lo: usize,
    pub hi: usize,
}

impl LengthBin {
    pub fn contains(&self, len: usize) -> bool {
        (self.lo..=self.hi).contains(&len)
    }
}

impl fmt::Display for LengthBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo, self.hi)
    }
}

/// Bins covering `[min(lengths), max(lengths)]` without gaps or overlap.
pub fn length_bins(lengths: &[usize], binning: &Binning) -> Result<Vec<LengthBin>, ReportError> {
    let mut sorted = lengths.to_vec();
    sorted.sort_unstable();
    let (&min, &max) = match (sorted.first(), sorted.last()) {
        (Some(min), Some(max)) => (min, max),
        _ => return Err(ReportError::EmptyCorpus),
    };
    let uppers: Vec<usize> = match binning {
        Binning::Quantile(0) => return Err(ReportError::ZeroBins),
        Binning::Quantile(q) => {
            let d = sorted.len();
            let mut edges: Vec<usize> = (1..*q).map(|j| sorted[(j * d).div_ceil(*q) - 1]).collect();
            edges.push(max);
            edges.dedup();
            edges
        }
        Binning::Explicit(edges) => {
            if edges.windows(2).any(|w| w[0] >= w[1]) {
                return Err(ReportError::BadBoundaries(edges.clone()));
            }
            let mut uppers: Vec<usize> = edges.clone();
            if uppers.last().is_none_or(|&last| last < max) {
                uppers.push(max);
            }
            uppers
        }
    };
    let mut bins = Vec::with_capacity(uppers.len());
    let mut lo = match binning {
        Binning::Quantile(_) => min,
        Binning::Explicit(_) => 1,
    };
    for hi in uppers {
        let bin = LengthBin { lo, hi };
        if hi < lo || !sorted.iter().any(|&l| bin.contains(l)) {
            return Err(ReportError::EmptyBin { lo, hi });
        }
        bins.push(bin);
        lo = hi + 1;
    }
    Ok(bins)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasRow {
    pub bin: LengthBin,
    pub k_spec: KSpec,
    /// Mean over method pairs of the pair's dataset agreement within the bin.
    pub mean_agreement: f64,
    pub n_instances: usize,
    pub n_pairs: usize,
}

/// Method-method agreement per (length bin, k), long format.
pub fn length_bias(
    evaluator: &mut Evaluator<'_>,
    binning: &Binning,
    k_specs: &[KSpec],
) -> Result<Vec<BiasRow>, ReportError> {
    if k_specs.is_empty() {
        return Err(ReportError::NoKValues);
    }
    let corpus = evaluator.corpus();
    let pairs = SelectorSpec::AllPairs.expand(corpus)?;
    let lengths: Vec<usize> = corpus.instances().iter().map(|i| i.len()).collect();
    let bins = length_bins(&lengths, binning)?;
    let mut rows = Vec::new();
    for bin in bins {
        let members: Vec<usize> = (0..lengths.len())
            .filter(|&i| bin.contains(lengths[i]))
            .collect();
        for &spec in k_specs {
            let mut total = 0.0;
            for pair in &pairs {
                total += evaluator.entry_over(pair, spec, &members)?.mean_agreement;
            }
            rows.push(BiasRow {
                bin,
                k_spec: spec,
                mean_agreement: total / pairs.len() as f64,
                n_instances: members.len(),
                n_pairs: pairs.len(),
            });
        }
    }
    Ok(rows)
}

/// Selection of one method on one instance, with the selected tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct TopKRecord {
    pub instance_id: String,
    pub method: String,
    pub k_spec: KSpec,
    pub k: usize,
    pub fallback_used: bool,
    pub indices: Vec<usize>,
    pub tokens: Vec<String>,
}

/// One record per (instance, method, k spec), in that nesting order.
pub fn topk_records(
    evaluator: &mut Evaluator<'_>,
    k_specs: &[KSpec],
) -> Result<Vec<TopKRecord>, ReportError> {
    if k_specs.is_empty() {
        return Err(ReportError::NoKValues);
    }
    let corpus = evaluator.corpus();
    let mut table = Vec::new();
    for method in corpus.method_names() {
        for &spec in k_specs {
            table.push(evaluator.selections(method, spec)?.to_vec());
        }
    }
    let mut records = Vec::new();
    for (i, instance) in corpus.instances().iter().enumerate() {
        let mut column = table.iter();
        for method in corpus.method_names() {
            for &spec in k_specs {
                let sel = &column.next().expect("one column per (method, spec)")[i];
                records.push(TopKRecord {
                    instance_id: instance.id().to_owned(),
                    method: method.clone(),
                    k_spec: spec,
                    k: sel.k(),
                    fallback_used: sel.fallback_used(),
                    indices: sel.indices().to_vec(),
                    tokens: sel
                        .indices()
                        .iter()
                        .map(|&t| instance.tokens()[t].clone())
                        .collect(),
                });
            }
        }
    }
    Ok(records)
}
