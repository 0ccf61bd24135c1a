//! Unsupervised outlier scoring of candidate feature vectors.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use super::features::{FeatureVector, NO_DISTANCE};
use super::{Candidate, CandidateSource, RankedSuggestion, SuggestConfig};
use crate::interpret::quantile;
use crate::vector::euclidean;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Detector {
    /// Distance to the k-th nearest neighbour.
    #[default]
    Knn,
    /// Local outlier factor.
    Lof,
}

impl Detector {
    pub fn name(self) -> &'static str {
        match self {
            Detector::Knn => "knn",
            Detector::Lof => "lof",
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Detector {
    type Err = alloc::string::String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "knn" => Ok(Detector::Knn),
            "lof" => Ok(Detector::Lof),
            other => Err(alloc::format!("unknown detector {other:?} (expected knn or lof)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum RankError {
    #[error("no candidates to rank")]
    Empty,
    #[error("candidate has no features")]
    MissingFeatures,
}

/// Neighbourhood size for `n` points: `max(5, ⌈0.03 n⌉)`, at most `n − 1`.
pub fn neighborhood_size(n: usize) -> usize {
    let k = libm::ceil(0.03 * n as f64) as usize;
    k.max(5).min(n.saturating_sub(1))
}

/// Raw matrix rows: six numeric features, one-hot source, LM score (NaN
/// when absent) and an LM-score presence flag.
pub fn raw_row(f: &FeatureVector) -> Vec<f64> {
    let one_hot = |s: CandidateSource| if f.source == s { 1.0 } else { 0.0 };
    vec![
        f.dist_to_closest_seed,
        f.extra_property_overlap,
        f.min_label_levenshtein,
        f.min_label_embed_distance,
        f.type_overlap,
        f.seed_neighbor_fraction,
        one_hot(CandidateSource::Embedding),
        one_hot(CandidateSource::Lm),
        one_hot(CandidateSource::Both),
        f.lm_score.unwrap_or(f64::NAN),
        if f.lm_score.is_some() { 1.0 } else { 0.0 },
    ]
}

/// Per-column min-max scaling to `[0, 1]`; constant columns become 0.
/// NaN entries are left out of the bounds and scale to 0.
///
/// In column 0, [`NO_DISTANCE`] entries are first replaced by
/// `max + (max − min)` of the finite entries so they read as "farther than
/// any seen" without flattening the rest of the column.
pub fn scale_columns(rows: &mut [Vec<f64>]) {
    let Some(width) = rows.first().map(Vec::len) else { return };
    let finite: Vec<f64> = rows.iter().map(|r| r[0]).filter(|x| *x != NO_DISTANCE).collect();
    if finite.len() < rows.len() {
        let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let far = if finite.is_empty() {
            0.0
        } else if hi > lo {
            hi + (hi - lo)
        } else {
            hi + 1.0
        };
        for r in rows.iter_mut().filter(|r| r[0] == NO_DISTANCE) {
            r[0] = far;
        }
    }
    for j in 0..width {
        let present = rows.iter().map(|r| r[j]).filter(|x| !x.is_nan());
        let (lo, hi) = present.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
        let span = hi - lo;
        for r in rows.iter_mut() {
            r[j] = if span > 0.0 && !r[j].is_nan() {
                quantize((r[j] - lo) / span)
            } else {
                0.0
            };
        }
    }
}

/// Rounds to a 1e-9 grid so that ulp-level noise from rescaled inputs
/// does not reorder equal candidates.
fn quantize(x: f64) -> f64 {
    libm::round(x * 1e9) / 1e9
}

fn distance_matrix(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let x = euclidean(&rows[i], &rows[j]);
            d[i][j] = x;
            d[j][i] = x;
        }
    }
    d
}

/// Indices of the `k` nearest other points to `i`, ties by index.
fn knn(d: &[Vec<f64>], i: usize, k: usize) -> Vec<usize> {
    let mut others: Vec<usize> = (0..d.len()).filter(|&j| j != i).collect();
    others.sort_by(|&a, &b| d[i][a].total_cmp(&d[i][b]).then(a.cmp(&b)));
    others.truncate(k);
    others
}

/// Raw outlier scores (higher is more outlying) for an already-scaled
/// matrix.
pub fn outlier_scores(rows: &[Vec<f64>], detector: Detector) -> Vec<f64> {
    let n = rows.len();
    let k = neighborhood_size(n);
    if k == 0 {
        return vec![0.0; n];
    }
    let d = distance_matrix(rows);
    let hoods: Vec<Vec<usize>> = (0..n).map(|i| knn(&d, i, k)).collect();
    let k_dist: Vec<f64> = (0..n).map(|i| d[i][*hoods[i].last().unwrap_or(&i)]).collect();
    match detector {
        Detector::Knn => k_dist,
        Detector::Lof => {
            let lrd: Vec<f64> = (0..n)
                .map(|i| {
                    let reach: f64 = hoods[i].iter().map(|&o| k_dist[o].max(d[i][o])).sum();
                    1.0 / (reach / hoods[i].len() as f64 + 1e-10)
                })
                .collect();
            (0..n)
                .map(|i| {
                    let mean: f64 = hoods[i].iter().map(|&o| lrd[o]).sum::<f64>() / hoods[i].len() as f64;
                    mean / lrd[i]
                })
                .collect()
        }
    }
}

/// Maps raw scores to `[0, 1]` monotonically, sending the
/// `(1 − contamination)` quantile to 0.5. Constant scores map to 1.
pub fn normalize_scores(raw: &[f64], contamination: f64) -> Vec<f64> {
    let mut sorted = raw.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (Some(&lo), Some(&hi)) = (sorted.first(), sorted.last()) else {
        return Vec::new();
    };
    if hi <= lo {
        return vec![1.0; raw.len()];
    }
    let theta = quantile(&sorted, 1.0 - contamination.clamp(0.0, 1.0));
    raw.iter()
        .map(|&s| {
            let v = if s <= theta {
                if theta > lo {
                    0.5 * (s - lo) / (theta - lo)
                } else {
                    0.5
                }
            } else {
                0.5 + 0.5 * (s - theta) / (hi - theta)
            };
            v.clamp(0.0, 1.0)
        })
        .collect()
}

/// Scores candidates with the configured detector and sorts them by
/// descending score, ties by id. The result does not depend on the input
/// order.
pub fn rank_candidates(cands: &[Candidate], config: &SuggestConfig) -> Result<Vec<RankedSuggestion>, RankError> {
    if cands.is_empty() {
        return Err(RankError::Empty);
    }
    let mut sorted: Vec<&Candidate> = cands.iter().collect();
    sorted.sort_by(|a, b| a.entity.cmp(&b.entity));
    let mut rows = sorted
        .iter()
        .map(|c| c.features.as_ref().map(raw_row).ok_or(RankError::MissingFeatures))
        .collect::<Result<Vec<_>, _>>()?;
    scale_columns(&mut rows);
    let raw = outlier_scores(&rows, config.detector);
    let scores = normalize_scores(&raw, config.contamination);
    let mut out: Vec<RankedSuggestion> = sorted
        .into_iter()
        .zip(scores)
        .map(|(c, score)| RankedSuggestion {
            entity: c.entity.clone(),
            score,
            source: c.source,
        })
        .collect();
    out.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.entity.cmp(&b.entity)));
    Ok(out)
}
