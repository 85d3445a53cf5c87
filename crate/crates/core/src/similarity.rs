//! Exponential similarity scores and comparable-player pools.

use serde::{Deserialize, Serialize};

use crate::characteristics::{
    shared_batter_cells, shared_pitch_types, BatterProfile, PitcherProfile, N_BATTER_FEATURES,
    N_PITCHER_FEATURES,
};
use crate::ingest::{Hand, PitchType, PlayerId};

/// Leaderboards show this many players; every eligible player still enters
/// the density weights.
pub const LEADERBOARD_SIZE: usize = 10;

/// Slider positions steering the diagonal metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricWeights {
    /// Share of the pitcher metric on stuff (velocity, spin, movement); the
    /// rest goes to release geometry.
    pub pitcher_stuff_ratio: f64,
    /// Share of the batter metric on launch conditions; the rest goes to
    /// batted-ball direction.
    pub batter_launch_ratio: f64,
}

impl Default for MetricWeights {
    fn default() -> Self {
        Self {
            pitcher_stuff_ratio: 0.85,
            batter_launch_ratio: 0.75,
        }
    }
}

impl MetricWeights {
    pub fn pitcher_metric(&self) -> MetricDiagonal {
        slider_to_metric(self.pitcher_stuff_ratio, FeatureGroups::PITCHER)
    }

    pub fn batter_metric(&self) -> MetricDiagonal {
        slider_to_metric(self.batter_launch_ratio, FeatureGroups::BATTER)
    }
}

/// Two contiguous feature groups: the first `first` features, then `second`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureGroups {
    pub first: usize,
    pub second: usize,
}

impl FeatureGroups {
    /// stuff = {velocity, spin, break_h, break_v};
    /// release = {launch_h, launch_v, release_pos_x, release_pos_z, extension}
    pub const PITCHER: FeatureGroups = FeatureGroups { first: 4, second: 5 };
    /// launch = {exit velocity, launch angle}; location = {pull, middle, oppo}
    pub const BATTER: FeatureGroups = FeatureGroups { first: 2, second: 3 };
}

/// Diagonal of a weight matrix over one cell's features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDiagonal {
    pub entries: Vec<f64>,
    /// The slider value was outside [0, 1] and was clamped.
    pub clamped: bool,
}

impl MetricDiagonal {
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            entries: self.entries.iter().map(|v| v * c).collect(),
            clamped: self.clamped,
        }
    }
}

/// Splits the slider mass evenly within each group: `ratio / |A|` for the
/// first group, `(1 - ratio) / |B|` for the second.
pub fn slider_to_metric(ratio: f64, groups: FeatureGroups) -> MetricDiagonal {
    let clamped_ratio = if ratio.is_nan() {
        0.5
    } else {
        ratio.clamp(0.0, 1.0)
    };
    let clamped = clamped_ratio != ratio;
    let a = clamped_ratio / groups.first as f64;
    let b = (1.0 - clamped_ratio) / groups.second as f64;
    let mut entries = vec![a; groups.first];
    entries.extend(std::iter::repeat_n(b, groups.second));
    MetricDiagonal { entries, clamped }
}

/// `exp(-sqrt((a - b)' V (a - b)))` for diagonal `V`.
pub fn similarity_score(a: &[f64], b: &[f64], v: &[f64]) -> f64 {
    debug_assert!(a.len() == b.len() && a.len() == v.len());
    let d2: f64 = a
        .iter()
        .zip(b)
        .zip(v)
        .map(|((x, y), w)| w * (x - y) * (x - y))
        .sum();
    (-d2.sqrt()).exp()
}

/// Features present in both players, with their metric entries rescaled by
/// `features_per_cell / n_shared` so players sharing more cells are not
/// penalized for the longer vector.
struct Aligned {
    a: Vec<f64>,
    b: Vec<f64>,
    v: Vec<f64>,
}

impl Aligned {
    fn new() -> Self {
        Self {
            a: Vec::new(),
            b: Vec::new(),
            v: Vec::new(),
        }
    }

    fn push_cell(&mut self, a: &[Option<f64>], b: &[Option<f64>], metric: &[f64]) {
        for ((x, y), w) in a.iter().zip(b).zip(metric) {
            if let (Some(x), Some(y)) = (x, y) {
                self.a.push(*x);
                self.b.push(*y);
                self.v.push(*w);
            }
        }
    }

    fn score(mut self, features_per_cell: usize) -> Option<f64> {
        if self.a.is_empty() {
            return None;
        }
        let scale = features_per_cell as f64 / self.a.len() as f64;
        self.v.iter_mut().for_each(|w| *w *= scale);
        Some(similarity_score(&self.a, &self.b, &self.v))
    }
}

/// Score between two pitchers over their shared pitch types.
pub fn pitcher_similarity(
    target: &PitcherProfile,
    candidate: &PitcherProfile,
    metric: &MetricDiagonal,
) -> Option<f64> {
    let mut aligned = Aligned::new();
    for t in shared_pitch_types(target, candidate) {
        aligned.push_cell(
            &target.pitches[&t].standardized,
            &candidate.pitches[&t].standardized,
            &metric.entries,
        );
    }
    aligned.score(N_PITCHER_FEATURES)
}

/// Score between two batters over shared cells against `pitcher_hand`.
pub fn batter_similarity(
    target: &BatterProfile,
    candidate: &BatterProfile,
    pitcher_hand: Hand,
    metric: &MetricDiagonal,
) -> Option<f64> {
    let mut aligned = Aligned::new();
    for t in shared_batter_cells(target, candidate, pitcher_hand) {
        aligned.push_cell(
            &target.cells[&(pitcher_hand, t)].standardized,
            &candidate.cells[&(pitcher_hand, t)].standardized,
            &metric.entries,
        );
    }
    aligned.score(N_BATTER_FEATURES)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub player_id: PlayerId,
    pub score: f64,
    pub weight: f64,
    /// Balls in play between this player and the study opponent.
    pub n_matchup: usize,
    pub shared_types: Vec<PitchType>,
}

/// Comparable players ranked by score, weights normalized over the pool.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimilarityPool {
    pub entries: Vec<PoolEntry>,
}

/// A scored candidate before normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate {
    pub player_id: PlayerId,
    pub score: f64,
    pub n_matchup: usize,
    pub shared_types: Vec<PitchType>,
}

impl SimilarityPool {
    /// Sorts by score (ties by id) and sets `w = s / sum(s)`.
    /// Candidates whose score underflowed to zero are dropped.
    pub fn from_scores(candidates: Vec<ScoredCandidate>) -> Self {
        let mut kept: Vec<ScoredCandidate> = candidates.into_iter().filter(|c| c.score > 0.0).collect();
        kept.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.player_id.cmp(&b.player_id))
        });
        let total: f64 = kept.iter().map(|c| c.score).sum();
        let entries = kept
            .into_iter()
            .map(|c| PoolEntry {
                weight: c.score / total,
                player_id: c.player_id,
                score: c.score,
                n_matchup: c.n_matchup,
                shared_types: c.shared_types,
            })
            .collect();
        Self { entries }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn top(&self, n: usize) -> &[PoolEntry] {
        &self.entries[..n.min(self.entries.len())]
    }

    /// `sum_j s_j^2 n_j`: the similarity-discounted matchup sample size.
    pub fn effective_matchups(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.score * e.score * e.n_matchup as f64)
            .sum()
    }

    pub fn weight_of(&self, id: &PlayerId) -> Option<f64> {
        self.entries.iter().find(|e| &e.player_id == id).map(|e| e.weight)
    }
}

/// Scores every candidate against the target pitcher and normalizes.
pub fn build_pitcher_pool<'a>(
    target: &PitcherProfile,
    candidates: impl IntoIterator<Item = &'a PitcherProfile>,
    metric: &MetricDiagonal,
    matchups: impl Fn(&PlayerId) -> usize,
) -> SimilarityPool {
    let scored = candidates
        .into_iter()
        .filter_map(|c| {
            let score = pitcher_similarity(target, c, metric)?;
            Some(ScoredCandidate {
                n_matchup: matchups(&c.pitcher_id),
                player_id: c.pitcher_id.clone(),
                score,
                shared_types: shared_pitch_types(target, c),
            })
        })
        .collect();
    SimilarityPool::from_scores(scored)
}

/// Scores every candidate against the target batter, comparing only cells
/// against `pitcher_hand`.
pub fn build_batter_pool<'a>(
    target: &BatterProfile,
    candidates: impl IntoIterator<Item = &'a BatterProfile>,
    pitcher_hand: Hand,
    metric: &MetricDiagonal,
    matchups: impl Fn(&PlayerId) -> usize,
) -> SimilarityPool {
    let scored = candidates
        .into_iter()
        .filter_map(|c| {
            let score = batter_similarity(target, c, pitcher_hand, metric)?;
            Some(ScoredCandidate {
                n_matchup: matchups(&c.batter_id),
                player_id: c.batter_id.clone(),
                score,
                shared_types: shared_batter_cells(target, c, pitcher_hand),
            })
        })
        .collect();
    SimilarityPool::from_scores(scored)
}
