//! Brute-force reference implementations used as test oracles.
//!
//! Nothing here calls into the selection or agreement code of the crate; the
//! corpus types are only used to read scores and annotations.

#![allow(dead_code)]

use dynk_core::{Corpus, KSpec};

/// Tests every index against the peak definition directly.
pub fn peaks(scores: &[f64]) -> Vec<usize> {
    let n = scores.len();
    let mut total = 0.0;
    for s in scores {
        total += s;
    }
    let mean = total / n as f64;
    let mut out = Vec::new();
    for i in 0..n {
        let has_left = i >= 1;
        let has_right = i + 1 < n;
        if !(has_left && has_right) {
            continue;
        }
        if scores[i] > scores[i - 1] && scores[i] > scores[i + 1] && scores[i] > mean {
            out.push(i);
        }
    }
    out
}

/// Position `i` is selected iff fewer than `k` positions outrank it, where
/// `j` outranks `i` when it scores higher or ties with a smaller index.
pub fn fixed_topk(scores: &[f64], k: usize) -> Vec<usize> {
    (0..scores.len())
        .filter(|&i| {
            let outranked_by = (0..scores.len())
                .filter(|&j| scores[j] > scores[i] || (scores[j] == scores[i] && j < i))
                .count();
            outranked_by < k
        })
        .collect()
}

pub fn dynamic_topk(scores: &[f64]) -> (Vec<usize>, bool) {
    let p = peaks(scores);
    if !p.is_empty() {
        return (p, false);
    }
    let mut max = f64::NEG_INFINITY;
    for &s in scores {
        if s > max {
            max = s;
        }
    }
    let first = scores.iter().position(|&s| s == max).unwrap();
    (vec![first], true)
}

pub fn select(scores: &[f64], spec: KSpec) -> Vec<usize> {
    match spec {
        KSpec::Fixed(k) => fixed_topk(scores, k.get()),
        KSpec::Dynamic => dynamic_topk(scores).0,
    }
}

/// Relevance by direct summation of per-selector indicators.
pub fn relevance(selections: &[Vec<usize>], n: usize) -> Vec<f64> {
    let m = selections.len() as f64;
    (0..n)
        .map(|i| {
            let mut hits = 0.0;
            for sel in selections {
                if sel.contains(&i) {
                    hits += 1.0;
                }
            }
            hits / m
        })
        .collect()
}

/// Mean of the nonzero relevance values, `None` if there are none.
pub fn sentence_agreement(relevance: &[f64]) -> Option<f64> {
    let mut total = 0.0;
    let mut nonzero = 0usize;
    for &r in relevance {
        if r > 0.0 {
            total += r;
            nonzero += 1;
        }
    }
    (nonzero > 0).then(|| total / nonzero as f64)
}

pub fn mean(values: &[f64]) -> f64 {
    let mut total = 0.0;
    for v in values {
        total += v;
    }
    total / values.len() as f64
}

/// Dataset agreement of two methods, earliest-index ties, raw scores.
pub fn pair_dataset(corpus: &Corpus, a: &str, b: &str, spec: KSpec) -> f64 {
    let per: Vec<f64> = corpus
        .instances()
        .iter()
        .map(|inst| {
            let sa = select(inst.scores(a).unwrap(), spec);
            let sb = select(inst.scores(b).unwrap(), spec);
            sentence_agreement(&relevance(&[sa, sb], inst.len())).unwrap()
        })
        .collect();
    mean(&per)
}

/// Method vs annotators, each annotator one selector entity.
pub fn human_entities_sentence(method: &[usize], annotators: &[Vec<u8>]) -> Option<f64> {
    let mut selections = vec![method.to_vec()];
    for marks in annotators {
        selections.push((0..marks.len()).filter(|&i| marks[i] == 1).collect());
    }
    sentence_agreement(&relevance(&selections, annotators[0].len()))
}

/// Method indicator and annotator ratio, averaged.
pub fn human_average_sentence(method: &[usize], annotators: &[Vec<u8>]) -> Option<f64> {
    let n = annotators[0].len();
    let h = annotators.len() as f64;
    let r: Vec<f64> = (0..n)
        .map(|i| {
            let ind = if method.contains(&i) { 1.0 } else { 0.0 };
            let ratio = annotators.iter().filter(|a| a[i] == 1).count() as f64 / h;
            (ind + ratio) / 2.0
        })
        .collect();
    sentence_agreement(&r)
}

/// Element-wise double loop over equally shaped row sets.
pub fn average_difference(t1: &[Vec<f64>], t2: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for r in 0..t1.len() {
        for c in 0..t1[r].len() {
            total += (t1[r][c] - t2[r][c]).abs();
            count += 1;
        }
    }
    total / count as f64
}

/// APD of every run, computing each ordered pair separately.
pub fn apd(runs: &[Vec<Vec<f64>>]) -> Vec<f64> {
    (0..runs.len())
        .map(|i| {
            let others: Vec<f64> = (0..runs.len())
                .filter(|&j| j != i)
                .map(|j| average_difference(&runs[i], &runs[j]))
                .collect();
            mean(&others)
        })
        .collect()
}

/// Padded matrix rows: instances in order, methods sorted by name.
pub fn matrix_rows(corpus: &Corpus) -> Vec<Vec<f64>> {
    let width = corpus
        .instances()
        .iter()
        .map(|i| i.len())
        .max()
        .unwrap_or(0);
    let mut methods: Vec<&String> = corpus.method_names().iter().collect();
    methods.sort();
    let mut rows = Vec::new();
    for inst in corpus.instances() {
        for m in &methods {
            let mut row = inst.scores(m).unwrap().to_vec();
            row.resize(width, 0.0);
            rows.push(row);
        }
    }
    rows
}
