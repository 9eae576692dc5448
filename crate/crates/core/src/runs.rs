//! Average Pairwise Difference between attribution matrices of several model
//! runs, and selection of the most central ("median") run.
//!
//! A run matrix has one row per (instance, method) in canonical order:
//! instances in corpus order, methods sorted by name. Rows are zero-padded to
//! the longest sentence.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use thiserror::Error;

use crate::profile::Corpus;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApdError {
    #[error("matrix '{a}' is {a_shape:?} but '{b}' is {b_shape:?}")]
    DimensionMismatch {
        a: String,
        b: String,
        a_shape: (usize, usize),
        b_shape: (usize, usize),
    },
    #[error("run selection needs at least two runs, got {0}")]
    TooFewRuns(usize),
    #[error("duplicate run id '{0}'")]
    DuplicateRunId(String),
    #[error("matrix data has {actual} values, expected {rows}x{cols}")]
    BadShape {
        rows: usize,
        cols: usize,
        actual: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignmentError {
    #[error("run '{run}' has {actual} instances, expected {expected}")]
    InstanceCount {
        run: String,
        expected: usize,
        actual: usize,
    },
    #[error("run '{run}' instance #{position} is '{actual}', expected '{expected}'")]
    InstanceId {
        run: String,
        position: usize,
        expected: String,
        actual: String,
    },
    #[error("run '{run}' methods {actual:?} differ from {expected:?}")]
    Methods {
        run: String,
        expected: Vec<String>,
        actual: Vec<String>,
    },
    #[error("run '{run}' instance '{id}' has {actual} tokens, expected {expected}")]
    TokenCount {
        run: String,
        id: String,
        expected: usize,
        actual: usize,
    },
}

/// Dense row-major attribution matrix of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMatrix {
    run_id: String,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RunMatrix {
    pub fn new(
        run_id: impl Into<String>,
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    ) -> Result<Self, ApdError> {
        if data.len() != rows * cols {
            return Err(ApdError::BadShape {
                rows,
                cols,
                actual: data.len(),
            });
        }
        Ok(Self {
            run_id: run_id.into(),
            rows,
            cols,
            data,
        })
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Stacks every (instance, method) profile, zero-padded to the corpus
/// maximum sentence length.
pub fn build_run_matrix(corpus: &Corpus, run_id: impl Into<String>) -> RunMatrix {
    let cols = corpus.max_len();
    let methods = corpus.method_names();
    let rows = corpus.len() * methods.len();
    let mut data = vec![0.0; rows * cols];
    let mut r = 0;
    for instance in corpus.instances() {
        for method in methods {
            let scores = instance
                .scores(method)
                .expect("corpus method sets are uniform");
            data[r * cols..r * cols + scores.len()].copy_from_slice(scores);
            r += 1;
        }
    }
    RunMatrix {
        run_id: run_id.into(),
        rows,
        cols,
        data,
    }
}

/// Checks that `other` covers the same instances, methods and sentence
/// lengths as `reference`.
pub fn check_aligned(reference: &Corpus, other: &Corpus, run: &str) -> Result<(), AlignmentError> {
    if reference.len() != other.len() {
        return Err(AlignmentError::InstanceCount {
            run: run.to_owned(),
            expected: reference.len(),
            actual: other.len(),
        });
    }
    if reference.method_names() != other.method_names() {
        return Err(AlignmentError::Methods {
            run: run.to_owned(),
            expected: reference.method_names().to_vec(),
            actual: other.method_names().to_vec(),
        });
    }
    for (position, (a, b)) in reference
        .instances()
        .iter()
        .zip(other.instances())
        .enumerate()
    {
        if a.id() != b.id() {
            return Err(AlignmentError::InstanceId {
                run: run.to_owned(),
                position,
                expected: a.id().to_owned(),
                actual: b.id().to_owned(),
            });
        }
        if a.len() != b.len() {
            return Err(AlignmentError::TokenCount {
                run: run.to_owned(),
                id: a.id().to_owned(),
                expected: a.len(),
                actual: b.len(),
            });
        }
    }
    Ok(())
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Mean element-wise absolute difference.
pub fn average_difference(t1: &RunMatrix, t2: &RunMatrix) -> Result<f64, ApdError> {
    if t1.shape() != t2.shape() {
        return Err(ApdError::DimensionMismatch {
            a: t1.run_id.clone(),
            b: t2.run_id.clone(),
            a_shape: t1.shape(),
            b_shape: t2.shape(),
        });
    }
    if t1.data.is_empty() {
        return Ok(0.0);
    }
    let total = compensated_sum(t1.data.iter().zip(&t2.data).map(|(a, b)| (a - b).abs()));
    Ok(total / t1.data.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApdSelection {
    /// APD per run id.
    pub scores: BTreeMap<String, f64>,
    /// Run with the lowest APD; ties go to the lexicographically smallest id.
    pub selected: String,
    /// Number of AD evaluations performed, `p(p-1)/2` for `p` runs.
    pub comparisons: usize,
}

/// Lowest score, ties broken by lexicographic run id.
pub fn lowest_apd(scores: &BTreeMap<String, f64>) -> Option<&str> {
    scores
        .iter()
        .fold(None::<(&String, f64)>, |best, (id, &score)| match best {
            Some((_, b)) if b <= score => best,
            _ => Some((id, score)),
        })
        .map(|(id, _)| id.as_str())
}

/// APD of each run against all the others, and the most central run.
///
/// Runs are processed in run-id order internally so the result does not
/// depend on the order of `runs`.
pub fn apd_select(runs: &[RunMatrix]) -> Result<ApdSelection, ApdError> {
    let p = runs.len();
    if p < 2 {
        return Err(ApdError::TooFewRuns(p));
    }
    let mut seen = BTreeSet::new();
    for run in runs {
        if !seen.insert(run.run_id.as_str()) {
            return Err(ApdError::DuplicateRunId(run.run_id.clone()));
        }
    }
    let mut order: Vec<&RunMatrix> = runs.iter().collect();
    order.sort_by(|a, b| a.run_id.cmp(&b.run_id));

    let pairs: Vec<(usize, usize)> = (0..p)
        .flat_map(|i| (i + 1..p).map(move |j| (i, j)))
        .collect();
    let distances = pairs
        .par_iter()
        .map(|&(i, j)| average_difference(order[i], order[j]))
        .collect::<Result<Vec<_>, _>>()?;

    let mut per_run = vec![Vec::with_capacity(p - 1); p];
    for (&(i, j), &d) in pairs.iter().zip(&distances) {
        per_run[i].push(d);
        per_run[j].push(d);
    }
    let scores: BTreeMap<String, f64> = order
        .iter()
        .zip(&per_run)
        .map(|(run, ds)| {
            (
                run.run_id.clone(),
                compensated_sum(ds.iter().copied()) / (p - 1) as f64,
            )
        })
        .collect();
    let selected = lowest_apd(&scores).expect("at least two runs").to_owned();
    Ok(ApdSelection {
        scores,
        selected,
        comparisons: pairs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{AttributionInstance, InstanceRecord};
    use proptest::prelude::*;

    type Rows<'a> = [(&'a str, Vec<(&'a str, Vec<f64>)>)];

    fn corpus(spec: &Rows<'_>) -> Corpus {
        Corpus::new(
            spec.iter()
                .map(|(id, methods)| {
                    let n = methods[0].1.len();
                    AttributionInstance::try_from(InstanceRecord {
                        id: id.to_string(),
                        tokens: (0..n).map(|i| format!("w{i}")).collect(),
                        attributions: methods
                            .iter()
                            .map(|(m, s)| (m.to_string(), s.clone()))
                            .collect(),
                        human: None,
                        gold_label: None,
                        predicted_label: None,
                    })
                    .unwrap()
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn matrix_pads_short_rows() {
        let c = corpus(&[
            (
                "a",
                vec![("m1", vec![1.0, 2.0, 3.0]), ("m2", vec![4.0, 5.0, 6.0])],
            ),
            ("b", vec![("m1", vec![7.0, 8.0]), ("m2", vec![9.0, 10.0])]),
        ]);
        let t = build_run_matrix(&c, "r");
        assert_eq!(t.shape(), (4, 3));
        assert_eq!(t.row(0), [1.0, 2.0, 3.0]);
        assert_eq!(t.row(1), [4.0, 5.0, 6.0]);
        assert_eq!(t.row(2), [7.0, 8.0, 0.0]);
        assert_eq!(t.row(3), [9.0, 10.0, 0.0]);
    }

    #[test]
    fn single_profile_matrix_is_the_vector() {
        let c = corpus(&[("a", vec![("m", vec![0.1, -0.2, 0.3])])]);
        let t = build_run_matrix(&c, "r");
        assert_eq!(t.shape(), (1, 3));
        assert_eq!(t.as_slice(), [0.1, -0.2, 0.3]);
    }

    #[test]
    fn method_order_is_canonical() {
        let x = corpus(&[("a", vec![("z", vec![1.0]), ("b", vec![2.0])])]);
        let y = corpus(&[("a", vec![("b", vec![2.0]), ("z", vec![1.0])])]);
        assert_eq!(build_run_matrix(&x, "r"), build_run_matrix(&y, "r"));
        assert_eq!(build_run_matrix(&x, "r").as_slice(), [2.0, 1.0]);
    }

    #[test]
    fn average_difference_examples() {
        let t1 = RunMatrix::new("1", 1, 2, vec![0.0, 1.0]).unwrap();
        let t2 = RunMatrix::new("2", 1, 2, vec![1.0, 1.0]).unwrap();
        assert_eq!(average_difference(&t1, &t2).unwrap(), 0.5);
        assert_eq!(average_difference(&t1, &t1).unwrap(), 0.0);
        let t3 = RunMatrix::new("3", 2, 1, vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            average_difference(&t1, &t3),
            Err(ApdError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            RunMatrix::new("x", 2, 2, vec![0.0]),
            Err(ApdError::BadShape { .. })
        ));
    }

    #[test]
    fn lowest_apd_on_ten_runs() {
        let table = [
            ("run_1", 0.00613),
            ("run_2", 0.00620),
            ("run_3", 0.00611),
            ("run_4", 0.00599),
            ("run_5", 0.00606),
            ("run_6", 0.00628),
            ("run_7", 0.00614),
            ("run_8", 0.00595),
            ("run_9", 0.00604),
            ("run_10", 0.00621),
        ];
        let scores = table.iter().map(|(r, s)| (r.to_string(), *s)).collect();
        assert_eq!(lowest_apd(&scores), Some("run_8"));
    }

    #[test]
    fn two_runs_tie_lexicographically() {
        let a = RunMatrix::new("beta", 1, 2, vec![0.0, 1.0]).unwrap();
        let b = RunMatrix::new("alpha", 1, 2, vec![1.0, 1.0]).unwrap();
        let sel = apd_select(&[a, b]).unwrap();
        assert_eq!(sel.scores["alpha"], 0.5);
        assert_eq!(sel.scores["beta"], 0.5);
        assert_eq!(sel.selected, "alpha");
        assert_eq!(sel.comparisons, 1);
    }

    #[test]
    fn apd_errors() {
        let a = RunMatrix::new("a", 1, 1, vec![0.0]).unwrap();
        assert_eq!(
            apd_select(std::slice::from_ref(&a)),
            Err(ApdError::TooFewRuns(1))
        );
        assert_eq!(
            apd_select(&[a.clone(), a]),
            Err(ApdError::DuplicateRunId("a".into()))
        );
    }

    #[test]
    fn alignment_checks() {
        let base = corpus(&[("a", vec![("m", vec![1.0, 2.0])])]);
        assert!(check_aligned(&base, &base, "r").is_ok());
        let renamed = corpus(&[("b", vec![("m", vec![1.0, 2.0])])]);
        assert!(matches!(
            check_aligned(&base, &renamed, "r"),
            Err(AlignmentError::InstanceId { .. })
        ));
        let shorter = corpus(&[("a", vec![("m", vec![1.0])])]);
        assert!(matches!(
            check_aligned(&base, &shorter, "r"),
            Err(AlignmentError::TokenCount { .. })
        ));
        let other_method = corpus(&[("a", vec![("n", vec![1.0, 2.0])])]);
        assert!(matches!(
            check_aligned(&base, &other_method, "r"),
            Err(AlignmentError::Methods { .. })
        ));
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let values = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(values.into_iter()), 2.0);
    }

    fn matrix_triple() -> impl Strategy<Value = [Vec<f64>; 3]> {
        (1usize..20).prop_flat_map(|len| {
            let v = || prop::collection::vec(-1.0f64..1.0, len);
            (v(), v(), v()).prop_map(|(a, b, c)| [a, b, c])
        })
    }

    proptest! {
        #[test]
        fn apd_is_permutation_invariant(seed in any::<u64>(), p in 2usize..6) {
            use rand::{seq::SliceRandom, Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut runs: Vec<RunMatrix> = (0..p)
                .map(|i| RunMatrix::new(format!("run_{i}"), 2, 3, (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap())
                .collect();
            let first = apd_select(&runs).unwrap();
            runs.shuffle(&mut rng);
            prop_assert_eq!(apd_select(&runs).unwrap(), first);
        }

        #[test]
        fn average_difference_is_a_metric([a, b, c] in matrix_triple()) {
            let n = a.len();
            let (ta, tb, tc) = (
                RunMatrix::new("a", 1, n, a).unwrap(),
                RunMatrix::new("b", 1, n, b).unwrap(),
                RunMatrix::new("c", 1, n, c).unwrap(),
            );
            let ab = average_difference(&ta, &tb).unwrap();
            prop_assert_eq!(ab, average_difference(&tb, &ta).unwrap());
            prop_assert!(ab >= 0.0);
            prop_assert!(ab <= average_difference(&ta, &tc).unwrap() + average_difference(&tc, &tb).unwrap() + 1e-12);
        }
    }
}
