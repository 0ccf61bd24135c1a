//! One-dimensional outlier removal for characteristic ranges.

use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsolationForestParams {
    pub trees: usize,
    pub max_samples: usize,
    /// Fraction of the values dropped as outliers.
    pub contamination: f64,
    pub seed: u64,
}

impl Default for IsolationForestParams {
    fn default() -> Self {
        Self {
            trees: 100,
            max_samples: 256,
            contamination: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutlierRemover {
    IsolationForest(IsolationForestParams),
    /// Tukey fence: keep `[Q1 - k·IQR, Q3 + k·IQR]`.
    IqrFence { k: f64 },
    Keep,
}

impl Default for OutlierRemover {
    fn default() -> Self {
        OutlierRemover::IsolationForest(IsolationForestParams::default())
    }
}

impl OutlierRemover {
    pub fn iqr() -> Self {
        OutlierRemover::IqrFence { k: 1.5 }
    }

    /// The values that survive, in their original order.
    pub fn retain(&self, values: &[f64]) -> Vec<f64> {
        match *self {
            OutlierRemover::Keep => values.to_vec(),
            OutlierRemover::IqrFence { k } => {
                if values.is_empty() {
                    return Vec::new();
                }
                let mut sorted = values.to_vec();
                sorted.sort_by(f64::total_cmp);
                let q1 = quantile(&sorted, 0.25);
                let q3 = quantile(&sorted, 0.75);
                let iqr = q3 - q1;
                let (lo, hi) = (q1 - k * iqr, q3 + k * iqr);
                values.iter().copied().filter(|v| (lo..=hi).contains(v)).collect()
            }
            OutlierRemover::IsolationForest(params) => {
                let scores = isolation_scores(values, &params);
                let drop = (params.contamination * values.len() as f64) as usize;
                let mut order: Vec<usize> = (0..values.len()).collect();
                order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
                let mut keep = alloc::vec![true; values.len()];
                for &i in order.iter().take(drop) {
                    keep[i] = false;
                }
                values
                    .iter()
                    .zip(keep)
                    .filter_map(|(v, k)| k.then_some(*v))
                    .collect()
            }
        }
    }
}

/// Linear-interpolation quantile of sorted data (numpy's default).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = libm::ceil(pos) as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

enum Node {
    Leaf { size: usize },
    Split { at: f64, left: Box<Node>, right: Box<Node> },
}

/// Average path length of an unsuccessful BST search over `n` points.
fn average_path_length(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let n = n as f64;
            2.0 * (libm::log(n - 1.0) + 0.577_215_664_901_532_9) - 2.0 * (n - 1.0) / n
        }
    }
}

fn grow(sample: &mut [f64], depth: usize, limit: usize, rng: &mut ChaCha8Rng) -> Node {
    if depth >= limit || sample.len() <= 1 {
        return Node::Leaf { size: sample.len() };
    }
    let (lo, hi) = sample
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if lo == hi {
        return Node::Leaf { size: sample.len() };
    }
    let at = rng.gen_range(lo..hi);
    // partition in place: left holds values <= at, both sides non-empty
    let mut mid = 0;
    for i in 0..sample.len() {
        if sample[i] <= at {
            sample.swap(i, mid);
            mid += 1;
        }
    }
    let (l, r) = sample.split_at_mut(mid);
    Node::Split {
        at,
        left: Box::new(grow(l, depth + 1, limit, rng)),
        right: Box::new(grow(r, depth + 1, limit, rng)),
    }
}

fn path_length(node: &Node, x: f64, depth: usize) -> f64 {
    match node {
        Node::Leaf { size } => depth as f64 + average_path_length(*size),
        Node::Split { at, left, right } => {
            if x <= *at {
                path_length(left, x, depth + 1)
            } else {
                path_length(right, x, depth + 1)
            }
        }
    }
}

/// Isolation-forest anomaly scores in `(0, 1]`; higher is more anomalous.
pub fn isolation_scores(values: &[f64], params: &IsolationForestParams) -> Vec<f64> {
    let n = values.len();
    let psi = params.max_samples.min(n);
    if psi <= 1 || params.trees == 0 {
        return alloc::vec![0.0; n];
    }
    let limit = libm::ceil(libm::log2(psi as f64)) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut totals = alloc::vec![0.0; n];
    for _ in 0..params.trees {
        let mut sample: Vec<f64> = rand::seq::index::sample(&mut rng, n, psi)
            .into_iter()
            .map(|i| values[i])
            .collect();
        let tree = grow(&mut sample, 0, limit, &mut rng);
        for (t, &x) in totals.iter_mut().zip(values) {
            *t += path_length(&tree, x, 0);
        }
    }
    let c = average_path_length(psi);
    totals
        .into_iter()
        .map(|t| libm::exp2(-(t / params.trees as f64) / c))
        .collect()
}
