//! Fixed and dynamic top-k selection over a single attribution profile.
//!
//! Dynamic k counts the strict interior local maxima of the profile that also
//! lie above the profile mean. Boundary tokens are never peaks and plateaus
//! never produce one. When a profile has no qualifying peak the selection
//! falls back to the single global maximum.

use std::borrow::Cow;
use std::cmp::Ordering;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::profile::KSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum TopKError {
    #[error("score vector is empty")]
    EmptyScores,
    #[error("k must be at least 1")]
    ZeroK,
}

/// How equal scores at the selection boundary are ordered.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum TieBreak {
    #[default]
    EarliestIndex,
    SeededRandom(u64),
}

impl TieBreak {
    /// Independent tie stream for one (instance, method) cell so that corpus
    /// results do not depend on evaluation order.
    pub fn for_cell(self, instance: usize, method: usize) -> Self {
        match self {
            Self::EarliestIndex => Self::EarliestIndex,
            Self::SeededRandom(seed) => {
                let cell = ((instance as u64) << 16) ^ method as u64;
                Self::SeededRandom(splitmix64(seed ^ splitmix64(cell)))
            }
        }
    }
}

impl fmt::Display for TieBreak {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EarliestIndex => f.write_str("earliest"),
            Self::SeededRandom(seed) => write!(f, "random({seed})"),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Optional rectification applied to scores before selection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ScoreTransform {
    #[default]
    Raw,
    Absolute,
}

impl ScoreTransform {
    pub fn apply(self, scores: &[f64]) -> Cow<'_, [f64]> {
        match self {
            Self::Raw => Cow::Borrowed(scores),
            Self::Absolute => Cow::Owned(scores.iter().map(|s| s.abs()).collect()),
        }
    }
}

impl fmt::Display for ScoreTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Raw => "raw",
            Self::Absolute => "abs",
        })
    }
}

/// Selected token positions for one (method, instance) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopKSelection {
    indices: Vec<usize>,
    mode: KSpec,
    fallback_used: bool,
}

impl TopKSelection {
    /// Selected positions in ascending order.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn k(&self) -> usize {
        self.indices.len()
    }

    pub fn mode(&self) -> KSpec {
        self.mode
    }

    /// Dynamic selections only: true when no peak qualified.
    pub fn fallback_used(&self) -> bool {
        self.fallback_used
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }
}

impl AsRef<[usize]> for TopKSelection {
    fn as_ref(&self) -> &[usize] {
        &self.indices
    }
}

fn descending(scores: &[f64], a: usize, b: usize) -> Ordering {
    scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal)
}

/// The `min(k, n)` highest-scoring positions.
pub fn fixed_topk(scores: &[f64], k: usize, tie: TieBreak) -> Result<TopKSelection, TopKError> {
    if scores.is_empty() {
        return Err(TopKError::EmptyScores);
    }
    let spec = KSpec::fixed(k).map_err(|_| TopKError::ZeroK)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    match tie {
        TieBreak::EarliestIndex => {
            order.sort_by(|&a, &b| descending(scores, a, b).then(a.cmp(&b)));
        }
        TieBreak::SeededRandom(seed) => {
            // a shuffled stable sort leaves equal scores in random relative order
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            order.sort_by(|&a, &b| descending(scores, a, b));
        }
    }
    order.truncate(k.min(scores.len()));
    order.sort_unstable();
    Ok(TopKSelection {
        indices: order,
        mode: spec,
        fallback_used: false,
    })
}

/// Interior positions strictly above both neighbours and strictly above the
/// profile mean, in ascending order.
pub fn detect_peaks(scores: &[f64]) -> Vec<usize> {
    if scores.len() < 3 {
        return Vec::new();
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    scores
        .windows(3)
        .enumerate()
        .filter(|(_, w)| w[1] > w[0] && w[1] > w[2] && w[1] > mean)
        .map(|(i, _)| i + 1)
        .collect()
}

/// Peak-derived selection, or the earliest global argmax when there is no peak.
pub fn dynamic_topk(scores: &[f64]) -> Result<TopKSelection, TopKError> {
    if scores.is_empty() {
        return Err(TopKError::EmptyScores);
    }
    let peaks = detect_peaks(scores);
    if !peaks.is_empty() {
        return Ok(TopKSelection {
            indices: peaks,
            mode: KSpec::Dynamic,
            fallback_used: false,
        });
    }
    let argmax =
        (1..scores.len()).fold(0, |best, i| if scores[i] > scores[best] { i } else { best });
    Ok(TopKSelection {
        indices: vec![argmax],
        mode: KSpec::Dynamic,
        fallback_used: true,
    })
}

/// Dispatches on `spec`. The tie rule only affects fixed selections.
pub fn select(scores: &[f64], spec: KSpec, tie: TieBreak) -> Result<TopKSelection, TopKError> {
    match spec {
        KSpec::Fixed(k) => fixed_topk(scores, k.get(), tie),
        KSpec::Dynamic => dynamic_topk(scores),
    }
}
