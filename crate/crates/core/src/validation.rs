//! Monte Carlo check that blending in similar players lowers the MSE of the
//! matchup density compared with the plain kernel estimate.
//!
//! The ground truth is a three-component bivariate Gaussian mixture whose
//! component means move linearly with a 2-D player characteristic `c`.
//! Linear mean maps make the characteristic-to-density map Lipschitz, and
//! Gaussian components are smooth of any order, so the truth sits in the
//! smoothness class the blend weights are derived for (order 2, constant
//! [`GroundTruth::lipschitz_constant`]).
//!
//! Each replication samples the direct matchup and every pool player's
//! matchups from the truth, runs the synthesis pipeline, and records the
//! grid-averaged squared error of the blended and the direct estimates.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{gaussian_2d, DensityGrid, FieldGrid};
use crate::error::{Result, SeamError};
use crate::ingest::{PitchType, PlayerId};
use crate::similarity::{ScoredCandidate, SimilarityPool};
use crate::synthesis::{
    blend, compute_lambda, direct_density, synth_batter_density, synth_pitcher_density, MatchupIndex,
};

/// Smoothness order of the ground-truth family.
pub const SMOOTHNESS_ORDER: u32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    /// Mean at `c = 0`, feet.
    pub mean: [f64; 2],
    /// Feet of mean shift per unit of characteristic: `mean(c) = mean + slope * c`.
    pub slope: [[f64; 2]; 2],
    pub sd: [f64; 2],
}

impl MixtureComponent {
    fn mean_at(&self, c: [f64; 2]) -> [f64; 2] {
        [
            self.mean[0] + self.slope[0][0] * c[0] + self.slope[0][1] * c[1],
            self.mean[1] + self.slope[1][0] * c[0] + self.slope[1][1] * c[1],
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub components: Vec<MixtureComponent>,
}

impl Default for GroundTruth {
    fn default() -> Self {
        Self {
            components: vec![
                MixtureComponent {
                    weight: 0.40,
                    mean: [-90.0, 220.0],
                    slope: [[40.0, 0.0], [0.0, 20.0]],
                    sd: [35.0, 45.0],
                },
                MixtureComponent {
                    weight: 0.35,
                    mean: [10.0, 300.0],
                    slope: [[30.0, 10.0], [0.0, 25.0]],
                    sd: [45.0, 50.0],
                },
                MixtureComponent {
                    weight: 0.25,
                    mean: [100.0, 180.0],
                    slope: [[20.0, 0.0], [10.0, 30.0]],
                    sd: [30.0, 35.0],
                },
            ],
        }
    }
}

impl GroundTruth {
    pub fn density_at(&self, c: [f64; 2], x: f64, y: f64) -> f64 {
        self.components
            .iter()
            .map(|m| m.weight * gaussian_2d(x, y, m.mean_at(c), m.sd))
            .sum()
    }

    /// The mixture truncated to the field and renormalized there, so it
    /// integrates to 1 on `grid` under the midpoint rule.
    pub fn density_grid(&self, c: [f64; 2], grid: &FieldGrid) -> DensityGrid {
        let mut d = DensityGrid::from_fn(*grid, |x, y| self.density_at(c, x, y));
        let mass = d.mass();
        for v in &mut d.values {
            *v /= mass;
        }
        d
    }

    /// Draws from the mixture truncated to `support` (rejection sampling).
    pub fn sample<R: Rng>(&self, c: [f64; 2], n: usize, support: &FieldGrid, rng: &mut R) -> Vec<[f64; 2]> {
        let std = Normal::new(0.0, 1.0).expect("unit normal");
        let [x0, x1] = support.x_range;
        let [y0, y1] = support.y_range;
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let mut u: f64 = rng.random();
            let mut m = &self.components[self.components.len() - 1];
            for comp in &self.components {
                if u < comp.weight {
                    m = comp;
                    break;
                }
                u -= comp.weight;
            }
            let mean = m.mean_at(c);
            let p = [
                mean[0] + m.sd[0] * std.sample(rng),
                mean[1] + m.sd[1] * std.sample(rng),
            ];
            if (x0..=x1).contains(&p[0]) && (y0..=y1).contains(&p[1]) {
                out.push(p);
            }
        }
        out
    }

    /// Bound on how fast component means move with the characteristic:
    /// the largest Frobenius norm of a slope matrix, in feet per unit.
    pub fn lipschitz_constant(&self) -> f64 {
        self.components
            .iter()
            .map(|m| m.slope.iter().flatten().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// A comparable player in the synthetic world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolPlayer {
    /// Characteristic offset from the study player.
    pub offset: [f64; 2],
    /// Balls in play against the study opponent.
    pub n_matchup: usize,
}

impl PoolPlayer {
    pub fn score(&self) -> f64 {
        (-(self.offset[0].hypot(self.offset[1]))).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScenario {
    pub name: String,
    pub truth: GroundTruth,
    /// Characteristic of the study matchup.
    pub study: [f64; 2],
    /// Direct matchup balls in play.
    pub n: usize,
    pub pitcher_pool: Vec<PoolPlayer>,
    pub batter_pool: Vec<PoolPlayer>,
    pub grid: FieldGrid,
    pub seed: u64,
}

impl SyntheticScenario {
    fn base(name: &str, n: usize) -> Self {
        Self {
            name: name.into(),
            truth: GroundTruth::default(),
            study: [0.0, 0.0],
            n,
            pitcher_pool: vec![],
            batter_pool: vec![],
            grid: FieldGrid::default(),
            seed: 20_200_101,
        }
    }

    /// One pool pitcher identical to the study pitcher with 500 matchups;
    /// ten direct balls in play.
    pub fn identical_twin() -> Self {
        let mut s = Self::base("identical-twin", 10);
        s.pitcher_pool = vec![PoolPlayer {
            offset: [0.0, 0.0],
            n_matchup: 500,
        }];
        s
    }

    pub fn empty_pools(n: usize) -> Self {
        Self::base("empty-pools", n)
    }

    /// Five moderately similar players on each side, 25 direct balls in play.
    pub fn moderate() -> Self {
        let mut s = Self::base("moderate", 25);
        let offsets = [[0.2, 0.0], [0.0, 0.35], [-0.4, 0.2], [0.5, -0.5], [0.9, 0.3]];
        let ns = [80, 120, 60, 150, 100];
        s.pitcher_pool = offsets
            .iter()
            .zip(ns)
            .map(|(o, n)| PoolPlayer {
                offset: *o,
                n_matchup: n,
            })
            .collect();
        s.batter_pool = offsets
            .iter()
            .rev()
            .zip(ns)
            .map(|(o, n)| PoolPlayer {
                offset: [o[1], -o[0]],
                n_matchup: n,
            })
            .collect();
        s
    }

    /// A single dissimilar pool pitcher with a huge sample swamps a large
    /// direct sample: the blend is pulled toward a biased density.
    pub fn distant_heavy_pool() -> Self {
        let mut s = Self::base("distant-heavy-pool", 200);
        s.pitcher_pool = vec![PoolPlayer {
            offset: [1.0, 0.6],
            n_matchup: 5000,
        }];
        s
    }

    pub fn named(name: &str) -> Option<Self> {
        match name {
            "identical-twin" => Some(Self::identical_twin()),
            "empty-pools" => Some(Self::empty_pools(25)),
            "moderate" => Some(Self::moderate()),
            "distant-heavy-pool" => Some(Self::distant_heavy_pool()),
            _ => None,
        }
    }

    pub const NAMES: [&'static str; 4] = ["identical-twin", "empty-pools", "moderate", "distant-heavy-pool"];

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.n == 0 {
            return Err(SeamError::InvalidArgument(
                "the direct estimate needs at least one ball in play".into(),
            ));
        }
        let total: f64 = self.truth.components.iter().map(|m| m.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(SeamError::InvalidArgument(format!(
                "mixture weights sum to {total}"
            )));
        }
        Ok(())
    }
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
}

impl McEstimate {
    pub fn from_samples(x: &[f64]) -> Self {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let se = if x.len() > 1 {
            (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
        } else {
            f64::NAN
        };
        Self { mean, se }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub scenario: String,
    pub replications: usize,
    pub n: usize,
    pub mean_lambda: [f64; 3],
    pub mse_blended: McEstimate,
    pub mse_direct: McEstimate,
    /// Paired per-replication `mse_blended - mse_direct`.
    pub difference: McEstimate,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub per_node_blended: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub per_node_direct: Vec<f64>,
}

impl TrialReport {
    /// Blended MSE below direct MSE by more than two standard errors of the
    /// paired difference.
    pub fn blended_better(&self) -> bool {
        self.difference.mean + 2.0 * self.difference.se < 0.0
    }

    /// The stricter unpaired reading: the two-SE intervals do not overlap.
    pub fn blended_better_unpaired(&self) -> bool {
        self.mse_blended.mean + 2.0 * self.mse_blended.se < self.mse_direct.mean - 2.0 * self.mse_direct.se
    }

    pub fn without_nodes(mut self) -> Self {
        self.per_node_blended.clear();
        self.per_node_direct.clear();
        self
    }
}

/// SplitMix64 step, used to derive independent replication seeds.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Replication {
    mse_blended: f64,
    mse_direct: f64,
    lambda: [f64; 3],
    sq_blended: Vec<f64>,
    sq_direct: Vec<f64>,
}

fn pool_ids(prefix: &str, n: usize) -> Vec<PlayerId> {
    (0..n).map(|j| PlayerId::new(format!("{prefix}{j:03}"))).collect()
}

fn run_replication(scenario: &SyntheticScenario, truth_grid: &DensityGrid, rep: u64) -> Result<Replication> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(scenario.seed, rep));
    let pitcher = PlayerId::from("study-pitcher");
    let batter = PlayerId::from("study-batter");
    let t = PitchType::FF;
    let usage: BTreeMap<PitchType, f64> = [(t, 1.0)].into_iter().collect();
    let mut index = MatchupIndex::default();

    for p in scenario.truth.sample(scenario.study, scenario.n, &scenario.grid, &mut rng) {
        index.insert(&pitcher, &batter, t, p);
    }
    let add = |v: [f64; 2]| [scenario.study[0] + v[0], scenario.study[1] + v[1]];
    let pitcher_ids = pool_ids("pool-pitcher-", scenario.pitcher_pool.len());
    for (id, player) in pitcher_ids.iter().zip(&scenario.pitcher_pool) {
        for p in scenario
            .truth
            .sample(add(player.offset), player.n_matchup, &scenario.grid, &mut rng)
        {
            index.insert(id, &batter, t, p);
        }
    }
    let batter_ids = pool_ids("pool-batter-", scenario.batter_pool.len());
    for (id, player) in batter_ids.iter().zip(&scenario.batter_pool) {
        for p in scenario
            .truth
            .sample(add(player.offset), player.n_matchup, &scenario.grid, &mut rng)
        {
            index.insert(&pitcher, id, t, p);
        }
    }

    let to_pool = |ids: &[PlayerId], players: &[PoolPlayer]| {
        SimilarityPool::from_scores(
            ids.iter()
                .zip(players)
                .map(|(id, p)| ScoredCandidate {
                    player_id: id.clone(),
                    score: p.score(),
                    n_matchup: p.n_matchup,
                    shared_types: vec![t],
                })
                .collect(),
        )
    };
    let pitcher_pool = to_pool(&pitcher_ids, &scenario.pitcher_pool);
    let batter_pool = to_pool(&batter_ids, &scenario.batter_pool);

    let grid = &scenario.grid;
    let weights = compute_lambda(scenario.n, &pitcher_pool, &batter_pool)?;
    let direct = direct_density(&index, &pitcher, &batter, &usage, grid)?.ok_or(SeamError::EmptySample)?;
    let sp = synth_pitcher_density(&index, &batter, &pitcher_pool, &usage, grid)?;
    let sb = synth_batter_density(&index, &pitcher, &batter_pool, &usage, grid)?;
    let result = blend(Some(direct.clone()), sp, sb, weights, pitcher_pool, batter_pool)?;

    let sq = |d: &DensityGrid| -> Vec<f64> {
        d.values
            .iter()
            .zip(&truth_grid.values)
            .map(|(a, b)| (a - b) * (a - b))
            .collect()
    };
    let sq_blended = sq(&result.blended);
    let sq_direct = sq(&direct);
    let nodes = sq_blended.len() as f64;
    Ok(Replication {
        mse_blended: sq_blended.iter().sum::<f64>() / nodes,
        mse_direct: sq_direct.iter().sum::<f64>() / nodes,
        lambda: weights.as_array(),
        sq_blended,
        sq_direct,
    })
}

/// Runs `replications` independent trials of `scenario`. Results depend only
/// on the scenario (including its seed) and the replication count.
pub fn run_mse_trial(scenario: &SyntheticScenario, replications: usize) -> Result<TrialReport> {
    scenario.validate()?;
    if replications == 0 {
        return Err(SeamError::InvalidArgument("need at least one replication".into()));
    }
    let truth_grid = scenario.truth.density_grid(scenario.study, &scenario.grid);
    let reps: Vec<Replication> = (0..replications as u64)
        .into_par_iter()
        .map(|r| run_replication(scenario, &truth_grid, r))
        .collect::<Result<_>>()?;

    let blended: Vec<f64> = reps.iter().map(|r| r.mse_blended).collect();
    let direct: Vec<f64> = reps.iter().map(|r| r.mse_direct).collect();
    let diff: Vec<f64> = reps.iter().map(|r| r.mse_blended - r.mse_direct).collect();
    let k = replications as f64;
    let mut mean_lambda = [0.0; 3];
    let mut per_node_blended = vec![0.0; scenario.grid.len()];
    let mut per_node_direct = vec![0.0; scenario.grid.len()];
    for r in &reps {
        for (acc, l) in mean_lambda.iter_mut().zip(r.lambda) {
            *acc += l / k;
        }
        for (acc, v) in per_node_blended.iter_mut().zip(&r.sq_blended) {
            *acc += v / k;
        }
        for (acc, v) in per_node_direct.iter_mut().zip(&r.sq_direct) {
            *acc += v / k;
        }
    }
    Ok(TrialReport {
        scenario: scenario.name.clone(),
        replications,
        n: scenario.n,
        mean_lambda,
        mse_blended: McEstimate::from_samples(&blended),
        mse_direct: McEstimate::from_samples(&direct),
        difference: McEstimate::from_samples(&diff),
        per_node_blended,
        per_node_direct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_integrates_to_one() {
        let t = GroundTruth::default();
        let grid = FieldGrid::default();
        for c in [[0.0, 0.0], [1.0, 0.6], [-0.5, 0.5]] {
            let m = t.density_grid(c, &grid).mass();
            assert!((m - 1.0).abs() < 1e-6, "mass {m} at {c:?}");
        }
        assert!(t.lipschitz_constant() > 0.0);
    }

    #[test]
    fn sampling_matches_mixture_mean() {
        let t = GroundTruth::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let grid = FieldGrid::default();
        let pts = t.sample([0.0, 0.0], 40_000, &grid, &mut rng);
        assert!(pts.iter().all(|p| p[1] >= -30.0 && p[1] <= 450.0));
        let mean_x = pts.iter().map(|p| p[0]).sum::<f64>() / pts.len() as f64;
        let truth = t.density_grid([0.0, 0.0], &grid);
        let want: f64 = (0..grid.ny)
            .flat_map(|iy| (0..grid.nx).map(move |ix| (ix, iy)))
            .map(|(ix, iy)| grid.node_x(ix) * truth.value(ix, iy) * grid.cell_area())
            .sum();
        assert!((mean_x - want).abs() < 1.5, "{mean_x} vs {want}");
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        assert_eq!(derive_seed(1, 2), derive_seed(1, 2));
        assert_ne!(derive_seed(1, 2), derive_seed(1, 3));
        assert_ne!(derive_seed(1, 2), derive_seed(2, 2));
    }

    #[test]
    fn empty_pools_blend_is_the_direct_estimate() {
        let mut s = SyntheticScenario::empty_pools(15);
        s.grid = FieldGrid::with_resolution(50, 50).unwrap();
        let r = run_mse_trial(&s, 5).unwrap();
        assert_eq!(r.mse_blended, r.mse_direct);
        assert_eq!(r.mean_lambda, [1.0, 0.0, 0.0]);
    }

    #[test]
    fn trials_are_reproducible() {
        let mut s = SyntheticScenario::moderate();
        s.grid = FieldGrid::with_resolution(40, 40).unwrap();
        let a = run_mse_trial(&s, 6).unwrap();
        let b = run_mse_trial(&s, 6).unwrap();
        assert_eq!(a, b);
        s.seed += 1;
        assert_ne!(run_mse_trial(&s, 6).unwrap().mse_direct, a.mse_direct);
    }

    #[test]
    fn direct_mse_falls_with_n() {
        let mut prev: Option<TrialReport> = None;
        for n in [10, 40, 160] {
            let mut s = SyntheticScenario::empty_pools(n);
            s.grid = FieldGrid::with_resolution(60, 60).unwrap();
            let r = run_mse_trial(&s, 40).unwrap();
            if let Some(p) = prev {
                let gap = p.mse_direct.mean - r.mse_direct.mean;
                let se = p.mse_direct.se.hypot(r.mse_direct.se);
                assert!(gap > -2.0 * se, "n={n}: {} after {}", r.mse_direct.mean, p.mse_direct.mean);
                assert!(gap > 0.0);
            }
            prev = Some(r);
        }
    }

    #[test]
    fn invalid_scenarios_are_rejected() {
        let mut s = SyntheticScenario::identical_twin();
        s.n = 0;
        assert!(run_mse_trial(&s, 1).is_err());
        assert!(run_mse_trial(&SyntheticScenario::identical_twin(), 0).is_err());
        assert!(SyntheticScenario::named("nope").is_none());
        for name in SyntheticScenario::NAMES {
            assert!(SyntheticScenario::named(name).unwrap().validate().is_ok());
        }
    }
}
