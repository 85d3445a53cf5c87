//! Direct and synthetic matchup densities and their blend.
//!
//! For a study batter and pitcher three densities are estimated over the
//! common grid: the direct matchup, the batter against a synthetic pitcher
//! (pool pitchers weighted by similarity), and the pitcher against a
//! synthetic batter. Each is built per pitch type and mixed by the study
//! pitcher's usage. The blend weights are
//! `lambda_x = sqrt(n_x) / (sqrt(n) + sqrt(n_p) + sqrt(n_b))` with
//! `n_p = sum_j s_j^2 n_j` (and likewise `n_b`).

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::characteristics::{eligible_batters, eligible_pitchers, ProfileTables};
use crate::density::{kde2, kde2_weighted, mix, select_bandwidth, DensityGrid, FieldGrid};
use crate::error::{Result, SeamError};
use crate::ingest::{PitchRecord, PitchType, PlayerId};
use crate::similarity::{build_batter_pool, build_pitcher_pool, MetricWeights, SimilarityPool};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlendWeights {
    pub lambda: f64,
    pub lambda_p: f64,
    pub lambda_b: f64,
    /// Direct matchup balls in play.
    pub n: f64,
    pub n_p: f64,
    pub n_b: f64,
}

impl BlendWeights {
    pub fn from_counts(n: f64, n_p: f64, n_b: f64) -> Result<Self> {
        for v in [n, n_p, n_b] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SeamError::InvalidArgument(format!(
                    "sample sizes must be finite and nonnegative, got {v}"
                )));
            }
        }
        let (r, rp, rb) = (n.sqrt(), n_p.sqrt(), n_b.sqrt());
        let total = r + rp + rb;
        if total == 0.0 {
            return Err(SeamError::InsufficientData);
        }
        Ok(Self {
            lambda: r / total,
            lambda_p: rp / total,
            lambda_b: rb / total,
            n,
            n_p,
            n_b,
        })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.lambda, self.lambda_p, self.lambda_b]
    }
}

/// Blend weights from the direct sample size and the two pools.
pub fn compute_lambda(
    n: usize,
    pitcher_pool: &SimilarityPool,
    batter_pool: &SimilarityPool,
) -> Result<BlendWeights> {
    BlendWeights::from_counts(
        n as f64,
        pitcher_pool.effective_matchups(),
        batter_pool.effective_matchups(),
    )
}

/// Pitch type and landing point of one ball in play.
pub type TypedLanding = (PitchType, [f64; 2]);

/// Balls in play per (pitcher, batter) pair, in record order.
#[derive(Debug, Clone, Default)]
pub struct MatchupIndex {
    pairs: HashMap<(PlayerId, PlayerId), Vec<TypedLanding>>,
}

impl MatchupIndex {
    pub fn build<'a>(records: impl IntoIterator<Item = &'a PitchRecord>) -> Self {
        let mut pairs: HashMap<(PlayerId, PlayerId), Vec<TypedLanding>> = HashMap::new();
        for r in records {
            if let Some(p) = r.landing() {
                pairs
                    .entry((r.pitcher_id.clone(), r.batter_id.clone()))
                    .or_default()
                    .push((r.pitch_type, p));
            }
        }
        Self { pairs }
    }

    pub fn insert(&mut self, pitcher: &PlayerId, batter: &PlayerId, t: PitchType, point: [f64; 2]) {
        self.pairs
            .entry((pitcher.clone(), batter.clone()))
            .or_default()
            .push((t, point));
    }

    pub fn balls_in_play(&self, pitcher: &PlayerId, batter: &PlayerId) -> &[TypedLanding] {
        self.pairs
            .get(&(pitcher.clone(), batter.clone()))
            .map_or(&[], Vec::as_slice)
    }

    /// Balls in play on pitch types in `repertoire`.
    pub fn count(
        &self,
        pitcher: &PlayerId,
        batter: &PlayerId,
        repertoire: &BTreeMap<PitchType, f64>,
    ) -> usize {
        self.balls_in_play(pitcher, batter)
            .iter()
            .filter(|(t, _)| repertoire.contains_key(t))
            .count()
    }
}

#[derive(Debug, Clone, Default)]
struct WeightedSample {
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

/// Per-pitch-type KDEs mixed by usage, renormalized over the types that have
/// points. `None` when no type has any.
fn usage_mixed_density(
    samples: BTreeMap<PitchType, WeightedSample>,
    usage: &BTreeMap<PitchType, f64>,
    weighted: bool,
    grid: &FieldGrid,
) -> Result<Option<DensityGrid>> {
    let mut parts = Vec::new();
    let mut n_points = 0usize;
    for (t, sample) in samples {
        let u = usage.get(&t).copied().unwrap_or(0.0);
        if u <= 0.0 || sample.points.is_empty() {
            continue;
        }
        n_points += sample.points.len();
        let density = if weighted {
            let bw = select_bandwidth(&sample.points, Some(&sample.weights), grid)?;
            kde2_weighted(&sample.points, &sample.weights, &bw.bandwidth, grid)?
        } else {
            let bw = select_bandwidth(&sample.points, None, grid)?;
            kde2(&sample.points, &bw.bandwidth, grid)?
        };
        parts.push((density, u));
    }
    if parts.is_empty() {
        return Ok(None);
    }
    let total: f64 = parts.iter().map(|p| p.1).sum();
    let coefficients: Vec<f64> = parts.iter().map(|p| p.1 / total).collect();
    let grids: Vec<&DensityGrid> = parts.iter().map(|p| &p.0).collect();
    let mut mixed = mix(&grids, &coefficients)?;
    mixed.n_effective = n_points as f64;
    Ok(Some(mixed))
}

/// The direct batter-vs-pitcher density.
pub fn direct_density(
    index: &MatchupIndex,
    pitcher: &PlayerId,
    batter: &PlayerId,
    usage: &BTreeMap<PitchType, f64>,
    grid: &FieldGrid,
) -> Result<Option<DensityGrid>> {
    let mut samples: BTreeMap<PitchType, WeightedSample> = BTreeMap::new();
    for (t, p) in index.balls_in_play(pitcher, batter) {
        let s = samples.entry(*t).or_default();
        s.points.push(*p);
        s.weights.push(1.0);
    }
    usage_mixed_density(samples, usage, false, grid)
}

/// Pools the matchup points of every pool player. Within a pitch type, the
/// points of player `j` each carry `w_j / n_j` so that player `j` contributes
/// `w_j` of the mass, as a weighted average of per-player densities would.
fn pooled_samples<'a>(
    pool: &SimilarityPool,
    points_for: impl Fn(&PlayerId) -> &'a [(PitchType, [f64; 2])],
    usage: &BTreeMap<PitchType, f64>,
) -> BTreeMap<PitchType, WeightedSample> {
    let mut samples: BTreeMap<PitchType, WeightedSample> = BTreeMap::new();
    for entry in &pool.entries {
        let mut per_type: BTreeMap<PitchType, Vec<[f64; 2]>> = BTreeMap::new();
        for (t, p) in points_for(&entry.player_id) {
            if usage.contains_key(t) {
                per_type.entry(*t).or_default().push(*p);
            }
        }
        for (t, pts) in per_type {
            let w = entry.weight / pts.len() as f64;
            let s = samples.entry(t).or_default();
            s.weights.extend(std::iter::repeat_n(w, pts.len()));
            s.points.extend(pts);
        }
    }
    samples
}

/// The study batter against the synthetic pitcher.
pub fn synth_pitcher_density(
    index: &MatchupIndex,
    batter: &PlayerId,
    pitcher_pool: &SimilarityPool,
    usage: &BTreeMap<PitchType, f64>,
    grid: &FieldGrid,
) -> Result<Option<DensityGrid>> {
    let samples = pooled_samples(pitcher_pool, |p| index.balls_in_play(p, batter), usage);
    usage_mixed_density(samples, usage, true, grid)
}

/// The study pitcher against the synthetic batter.
pub fn synth_batter_density(
    index: &MatchupIndex,
    pitcher: &PlayerId,
    batter_pool: &SimilarityPool,
    usage: &BTreeMap<PitchType, f64>,
    grid: &FieldGrid,
) -> Result<Option<DensityGrid>> {
    let samples = pooled_samples(batter_pool, |b| index.balls_in_play(pitcher, b), usage);
    usage_mixed_density(samples, usage, true, grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub blended: DensityGrid,
    pub direct: Option<DensityGrid>,
    pub synth_pitcher: Option<DensityGrid>,
    pub synth_batter: Option<DensityGrid>,
    pub weights: BlendWeights,
    pub pitcher_pool: SimilarityPool,
    pub batter_pool: SimilarityPool,
}

/// `lambda * direct + lambda_p * synth_pitcher + lambda_b * synth_batter`.
///
/// Components whose weight is zero are dropped from the result; a positive
/// weight on a missing component is an error.
pub fn blend(
    direct: Option<DensityGrid>,
    synth_pitcher: Option<DensityGrid>,
    synth_batter: Option<DensityGrid>,
    weights: BlendWeights,
    pitcher_pool: SimilarityPool,
    batter_pool: SimilarityPool,
) -> Result<SynthesisResult> {
    let keep = |d: Option<DensityGrid>, lambda: f64, name: &str| -> Result<Option<DensityGrid>> {
        match (d, lambda > 0.0) {
            (Some(d), true) => Ok(Some(d)),
            (None, true) => Err(SeamError::InvalidArgument(format!(
                "{name} density is missing but carries weight {lambda}"
            ))),
            (_, false) => Ok(None),
        }
    };
    let direct = keep(direct, weights.lambda, "direct")?;
    let synth_pitcher = keep(synth_pitcher, weights.lambda_p, "synthetic pitcher")?;
    let synth_batter = keep(synth_batter, weights.lambda_b, "synthetic batter")?;

    let mut grids = Vec::new();
    let mut coefficients = Vec::new();
    for (d, l) in [
        (&direct, weights.lambda),
        (&synth_pitcher, weights.lambda_p),
        (&synth_batter, weights.lambda_b),
    ] {
        if let Some(d) = d {
            grids.push(d);
            coefficients.push(l);
        }
    }
    if grids.is_empty() {
        return Err(SeamError::InsufficientData);
    }
    let blended = mix(&grids, &coefficients)?;
    Ok(SynthesisResult {
        blended,
        direct,
        synth_pitcher,
        synth_batter,
        weights,
        pitcher_pool,
        batter_pool,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisConfig {
    pub grid: FieldGrid,
    /// Minimum season balls in play for a player to enter a pool.
    pub min_bip: usize,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            grid: FieldGrid::default(),
            min_bip: 50,
        }
    }
}

/// Runs the whole pipeline for one matchup: pools, three densities, blend.
pub fn synthesize(
    tables: &ProfileTables,
    index: &MatchupIndex,
    batter_id: &PlayerId,
    pitcher_id: &PlayerId,
    sliders: &MetricWeights,
    config: &SynthesisConfig,
) -> Result<SynthesisResult> {
    let pitcher = tables
        .pitchers
        .get(pitcher_id)
        .ok_or_else(|| SeamError::UnknownPlayer(pitcher_id.to_string()))?;
    let batter = tables
        .batters
        .get(batter_id)
        .ok_or_else(|| SeamError::UnknownPlayer(batter_id.to_string()))?;
    let usage: BTreeMap<PitchType, f64> = pitcher.pitches.iter().map(|(t, s)| (*t, s.usage)).collect();

    let pitcher_pool = build_pitcher_pool(
        pitcher,
        eligible_pitchers(pitcher, tables.pitchers.values(), config.min_bip),
        &sliders.pitcher_metric(),
        |p| index.count(p, batter_id, &usage),
    );
    let batter_pool = build_batter_pool(
        batter,
        eligible_batters(batter, tables.batters.values(), pitcher.throws, config.min_bip),
        pitcher.throws,
        &sliders.batter_metric(),
        |b| index.count(pitcher_id, b, &usage),
    );
    let n = index.count(pitcher_id, batter_id, &usage);
    let weights = compute_lambda(n, &pitcher_pool, &batter_pool)?;

    let grid = &config.grid;
    let direct = if weights.lambda > 0.0 {
        direct_density(index, pitcher_id, batter_id, &usage, grid)?
    } else {
        None
    };
    let (sp, sb) = rayon::join(
        || -> Result<Option<DensityGrid>> {
            if weights.lambda_p > 0.0 {
                synth_pitcher_density(index, batter_id, &pitcher_pool, &usage, grid)
            } else {
                Ok(None)
            }
        },
        || -> Result<Option<DensityGrid>> {
            if weights.lambda_b > 0.0 {
                synth_batter_density(index, pitcher_id, &batter_pool, &usage, grid)
            } else {
                Ok(None)
            }
        },
    );
    blend(direct, sp?, sb?, weights, pitcher_pool, batter_pool)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{gaussian_2d, Bandwidth};
    use crate::similarity::ScoredCandidate;

    fn pool(entries: &[(&str, f64, usize)]) -> SimilarityPool {
        SimilarityPool::from_scores(
            entries
                .iter()
                .map(|(id, s, n)| ScoredCandidate {
                    player_id: PlayerId::from(*id),
                    score: *s,
                    n_matchup: *n,
                    shared_types: vec![],
                })
                .collect(),
        )
    }

    #[test]
    fn lambda_examples() {
        let w = BlendWeights::from_counts(4.0, 9.0, 16.0).unwrap();
        assert!((w.lambda - 2.0 / 9.0).abs() < 1e-15);
        assert!((w.lambda_p - 3.0 / 9.0).abs() < 1e-15);
        assert!((w.lambda_b - 4.0 / 9.0).abs() < 1e-15);

        let p = pool(&[("a", 0.5, 100)]);
        assert_eq!(p.effective_matchups(), 25.0);
        let never_faced = compute_lambda(0, &p, &pool(&[("b", 0.9, 40)])).unwrap();
        assert_eq!(never_faced.lambda, 0.0);
        assert!((never_faced.as_array().iter().sum::<f64>() - 1.0).abs() < 1e-15);

        assert!(matches!(
            compute_lambda(0, &SimilarityPool::default(), &SimilarityPool::default()),
            Err(SeamError::InsufficientData)
        ));
    }

    fn grid() -> FieldGrid {
        FieldGrid::with_resolution(60, 60).unwrap()
    }

    fn usage_ff() -> BTreeMap<PitchType, f64> {
        [(PitchType::FF, 1.0)].into_iter().collect()
    }

    fn index(entries: &[(&str, &str, PitchType, [f64; 2])]) -> MatchupIndex {
        let mut idx = MatchupIndex::default();
        for (p, b, t, pt) in entries {
            idx.pairs
                .entry((PlayerId::from(*p), PlayerId::from(*b)))
                .or_default()
                .push((*t, *pt));
        }
        idx
    }

    #[test]
    fn single_pool_pitcher_equals_plain_kde() {
        let pts = [[-40.0, 220.0], [10.0, 310.0], [70.0, 180.0], [-5.0, 260.0]];
        let entries: Vec<_> = pts.iter().map(|p| ("j", "bat", PitchType::FF, *p)).collect();
        let idx = index(&entries);
        let p = pool(&[("j", 0.7, 4)]);
        let sp = synth_pitcher_density(&idx, &PlayerId::from("bat"), &p, &usage_ff(), &grid())
            .unwrap()
            .unwrap();
        let bw = select_bandwidth(&pts, None, &grid()).unwrap();
        let plain = kde2(&pts, &bw.bandwidth, &grid()).unwrap();
        for (a, b) in sp.values.iter().zip(&plain.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_pool_point_sets_reduce_to_plain_kde() {
        let pts = [[-40.0, 220.0], [10.0, 310.0], [70.0, 180.0]];
        let mut entries = vec![];
        for p in &pts {
            entries.push(("j1", "bat", PitchType::FF, *p));
            entries.push(("j2", "bat", PitchType::FF, *p));
        }
        let idx = index(&entries);
        let g = grid();
        let bat = PlayerId::from("bat");
        let both = synth_pitcher_density(
            &idx,
            &bat,
            &pool(&[("j1", 0.9, 3), ("j2", 0.2, 3)]),
            &usage_ff(),
            &g,
        )
        .unwrap()
        .unwrap();
        // every point carries total weight 1/3 whatever the pool weights are
        let doubled: Vec<[f64; 2]> = pts.iter().flat_map(|p| [*p, *p]).collect();
        let w1 = 0.9 / 1.1 / 3.0;
        let w2 = 0.2 / 1.1 / 3.0;
        let weights: Vec<f64> = pts.iter().flat_map(|_| [w1, w2]).collect();
        let bw = select_bandwidth(&doubled, Some(&weights), &g).unwrap().bandwidth;
        let plain = kde2(&pts, &bw, &g).unwrap();
        for (a, b) in both.values.iter().zip(&plain.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn two_single_point_players_match_hand_weighted_sum() {
        let idx = index(&[
            ("j1", "bat", PitchType::FF, [-60.0, 200.0]),
            ("j2", "bat", PitchType::FF, [80.0, 280.0]),
        ]);
        let g = grid();
        // scores 2:1 give weights 2/3, 1/3
        let p = pool(&[("j1", 0.8, 1), ("j2", 0.4, 1)]);
        let sp = synth_pitcher_density(&idx, &PlayerId::from("bat"), &p, &usage_ff(), &g)
            .unwrap()
            .unwrap();
        let pts = [[-60.0, 200.0], [80.0, 280.0]];
        let w = [2.0 / 3.0, 1.0 / 3.0];
        let bw = select_bandwidth(&pts, Some(&w), &g).unwrap().bandwidth;
        for iy in 0..g.ny {
            for ix in 0..g.nx {
                let (x, y) = (g.node_x(ix), g.node_y(iy));
                let want =
                    w[0] * gaussian_2d(x, y, pts[0], bw.sigma) + w[1] * gaussian_2d(x, y, pts[1], bw.sigma);
                assert!((sp.value(ix, iy) - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn synth_batter_mirrors_synth_pitcher() {
        let idx = index(&[
            ("pit", "k1", PitchType::FF, [-60.0, 200.0]),
            ("pit", "k2", PitchType::FF, [80.0, 280.0]),
        ]);
        let g = grid();
        let p = pool(&[("k1", 0.8, 1), ("k2", 0.4, 1)]);
        let sb = synth_batter_density(&idx, &PlayerId::from("pit"), &p, &usage_ff(), &g)
            .unwrap()
            .unwrap();
        let pts = [[-60.0, 200.0], [80.0, 280.0]];
        let w = [2.0 / 3.0, 1.0 / 3.0];
        let bw = select_bandwidth(&pts, Some(&w), &g).unwrap().bandwidth;
        let want = kde2_weighted(&pts, &w, &bw, &g).unwrap();
        for (a, b) in sb.values.iter().zip(&want.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn usage_renormalizes_over_types_with_points() {
        let idx = index(&[
            ("pit", "bat", PitchType::FF, [-60.0, 200.0]),
            ("pit", "bat", PitchType::FF, [-30.0, 260.0]),
        ]);
        let usage: BTreeMap<_, _> = [(PitchType::FF, 0.6), (PitchType::SL, 0.4)].into_iter().collect();
        let g = grid();
        let (p, b) = (PlayerId::from("pit"), PlayerId::from("bat"));
        let mixed = direct_density(&idx, &p, &b, &usage, &g).unwrap().unwrap();
        let ff_only = direct_density(&idx, &p, &b, &usage_ff(), &g).unwrap().unwrap();
        assert_eq!(mixed.values, ff_only.values);
        assert!(direct_density(&idx, &b, &p, &usage, &g).unwrap().is_none());
    }

    fn blob(center: [f64; 2]) -> DensityGrid {
        let g = grid();
        let bw = Bandwidth::new(25.0, 25.0).unwrap();
        kde2(&[center], &bw, &g).unwrap()
    }

    #[test]
    fn blend_identity_and_convexity() {
        let d = blob([0.0, 200.0]);
        let w = BlendWeights::from_counts(5.0, 0.0, 0.0).unwrap();
        let r = blend(
            Some(d.clone()),
            None,
            None,
            w,
            Default::default(),
            Default::default(),
        )
        .unwrap();
        assert_eq!(r.blended.values, d.values);

        let w = BlendWeights::from_counts(4.0, 9.0, 16.0).unwrap();
        let r = blend(
            Some(d.clone()),
            Some(d.clone()),
            Some(d.clone()),
            w,
            Default::default(),
            Default::default(),
        )
        .unwrap();
        for (a, b) in r.blended.values.iter().zip(&d.values) {
            assert!((a - b).abs() < 1e-15);
        }

        let (a, b, c) = (blob([-100.0, 150.0]), blob([0.0, 300.0]), blob([100.0, 200.0]));
        let total = a.mass() * w.lambda + b.mass() * w.lambda_p + c.mass() * w.lambda_b;
        let r = blend(
            Some(a),
            Some(b),
            Some(c),
            w,
            Default::default(),
            Default::default(),
        )
        .unwrap();
        assert!((r.blended.mass() - total).abs() < 1e-12);
        assert!((r.blended.mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn blend_drops_zero_weight_components_and_rejects_missing_ones() {
        let d = blob([0.0, 200.0]);
        let w = BlendWeights::from_counts(0.0, 4.0, 0.0).unwrap();
        let r = blend(
            Some(d.clone()),
            Some(d.clone()),
            None,
            w,
            Default::default(),
            Default::default(),
        )
        .unwrap();
        assert!(r.direct.is_none() && r.synth_pitcher.is_some());

        let w = BlendWeights::from_counts(1.0, 4.0, 0.0).unwrap();
        assert!(blend(None, Some(d), None, w, Default::default(), Default::default()).is_err());
    }

    #[test]
    fn lambda_grows_with_n() {
        let mut last = 0.0;
        for n in 0..50 {
            let w = BlendWeights::from_counts(n as f64, 9.0, 16.0).unwrap();
            assert!(n == 0 || w.lambda > last);
            last = w.lambda;
        }
    }
}
