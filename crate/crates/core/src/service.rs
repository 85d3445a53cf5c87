//! The matchup service engine: dataset loading, cached profile tables and the
//! three query operations behind the HTTP API.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::characteristics::{
    build_profiles, eligible_batters, eligible_pitchers, ProfileConfig, ProfileTables,
};
use crate::density::{DensityGrid, FieldGrid};
use crate::error::{Result, SeamError};
use crate::ingest::{
    csv_files, ingest_reader, Hand, IngestConfig, IngestOutput, IngestReport, PitchType, PlayerId,
};
use crate::outcomes::{expected_outcomes, fit_outcome_field, ExpectedOutcomes, OutcomeConfig, OutcomeField};
use crate::similarity::{
    build_batter_pool, build_pitcher_pool, slider_to_metric, FeatureGroups, MetricWeights, PoolEntry,
    SimilarityPool, LEADERBOARD_SIZE,
};
use crate::synthesis::{synthesize, BlendWeights, MatchupIndex, SynthesisConfig};

const CACHE_FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub season: u16,
    pub grid: FieldGrid,
    pub sliders: MetricWeights,
    pub min_bip: usize,
    /// Profile tables are cached here when set.
    pub cache_dir: Option<PathBuf>,
    /// Per-axis node cap for densities in responses.
    pub payload_max_nodes: usize,
    pub ingest: IngestConfig,
    pub profile: ProfileConfig,
    pub outcome: OutcomeConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("data"),
            season: 2019,
            grid: FieldGrid::default(),
            sliders: MetricWeights::default(),
            min_bip: 50,
            cache_dir: None,
            payload_max_nodes: 100,
            ingest: IngestConfig::default(),
            profile: ProfileConfig::default(),
            outcome: OutcomeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Pitcher,
    Batter,
}

impl std::str::FromStr for Role {
    type Err = SeamError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pitcher" => Ok(Role::Pitcher),
            "batter" => Ok(Role::Batter),
            other => Err(SeamError::InvalidArgument(format!("unknown role `{other}`"))),
        }
    }
}

/// Raw CSV files, by file name.
#[derive(Debug, Clone)]
enum DataSource {
    Dir(PathBuf),
    Memory(Arc<Vec<(String, Vec<u8>)>>),
}

impl DataSource {
    fn read(&self) -> Result<Vec<(String, Vec<u8>)>> {
        match self {
            DataSource::Memory(files) => Ok(files.as_ref().clone()),
            DataSource::Dir(dir) => csv_files(dir)?
                .into_iter()
                .map(|p| {
                    let name = p
                        .file_name()
                        .map(|n| n.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    Ok((name, fs::read(&p)?))
                })
                .collect(),
        }
    }
}

/// SHA-256 over file names and contents, in name order.
pub fn dataset_hash(files: &[(String, Vec<u8>)]) -> String {
    let mut sorted: Vec<&(String, Vec<u8>)> = files.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let mut h = Sha256::new();
    for (name, bytes) in sorted {
        h.update((name.len() as u64).to_le_bytes());
        h.update(name.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    hex::encode(h.finalize())
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    format: u32,
    key: String,
    tables: ProfileTables,
}

fn cache_key(hash: &str, config: &ServiceConfig) -> Result<String> {
    let mut h = Sha256::new();
    h.update(hash.as_bytes());
    h.update(config.season.to_le_bytes());
    h.update(serde_json::to_vec(&config.ingest)?);
    h.update(serde_json::to_vec(&config.profile)?);
    Ok(hex::encode(h.finalize()))
}

fn cache_path(dir: &Path, season: u16) -> PathBuf {
    dir.join(format!("profiles-{season}.json"))
}

fn read_cache(path: &Path, key: &str) -> Option<ProfileTables> {
    let bytes = fs::read(path).ok()?;
    let file: CacheFile = serde_json::from_slice(&bytes).ok()?;
    (file.format == CACHE_FORMAT && file.key == key).then_some(file.tables)
}

fn write_cache(path: &Path, key: &str, tables: &ProfileTables) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let file = CacheFile {
        format: CACHE_FORMAT,
        key: key.to_owned(),
        tables: tables.clone(),
    };
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_vec(&file)?)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Everything one query needs, swapped as a unit on reload.
#[derive(Debug)]
pub struct Snapshot {
    pub dataset_hash: String,
    pub season: u16,
    pub seasons: Vec<u16>,
    pub tables: ProfileTables,
    pub index: MatchupIndex,
    pub field: OutcomeField,
    pub names: BTreeMap<PlayerId, String>,
    pub report: IngestReport,
}

impl Snapshot {
    fn build(files: &[(String, Vec<u8>)], config: &ServiceConfig, aggregations: &AtomicU64) -> Result<Self> {
        let hash = dataset_hash(files);
        let mut data = IngestOutput::default();
        for (_, bytes) in files {
            data.extend(ingest_reader(bytes.as_slice(), &config.ingest)?);
        }
        let mut seasons: Vec<u16> = data.records.iter().map(|r| r.season).collect();
        seasons.sort_unstable();
        seasons.dedup();
        if !seasons.is_empty() && !seasons.contains(&config.season) {
            return Err(SeamError::UnknownSeason(config.season));
        }

        let key = cache_key(&hash, config)?;
        let cached = config
            .cache_dir
            .as_deref()
            .and_then(|d| read_cache(&cache_path(d, config.season), &key));
        let tables = match cached {
            Some(t) => t,
            None => {
                aggregations.fetch_add(1, Ordering::Relaxed);
                let t = build_profiles(&data.records, config.season, &config.profile);
                if let Some(dir) = &config.cache_dir {
                    write_cache(&cache_path(dir, config.season), &key, &t)?;
                }
                t
            }
        };

        // outcome rates pool every loaded season; densities use one
        let field = if data.records.iter().any(|r| r.is_ball_in_play()) {
            fit_outcome_field(&data.records, &config.grid, &config.outcome)?
        } else {
            OutcomeField::uniform(&config.grid, config.outcome.bin_size, [1.0, 0.0, 0.0, 0.0, 0.0])?
        };
        let index = MatchupIndex::build(data.records.iter().filter(|r| r.season == config.season));
        Ok(Self {
            dataset_hash: hash,
            season: config.season,
            seasons,
            tables,
            index,
            field,
            names: data.names,
            report: data.report,
        })
    }

    fn name(&self, id: &PlayerId) -> Option<String> {
        self.names.get(id).cloned()
    }

    fn check_season(&self, season: Option<u16>) -> Result<()> {
        match season {
            Some(s) if s != self.season => Err(SeamError::UnknownSeason(s)),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerSummary {
    pub player_id: PlayerId,
    pub name: Option<String>,
    /// `L`, `R` or `S` (switch hitter).
    pub handedness: String,
    pub n_pitches: usize,
    pub n_bip: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerRef {
    pub player_id: PlayerId,
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub player_id: PlayerId,
    pub name: Option<String>,
    pub score: f64,
    pub weight: f64,
    pub n_matchup: usize,
    pub shared_types: Vec<PitchType>,
}

fn leaderboard(pool: &SimilarityPool, top_n: usize, snap: &Snapshot) -> Vec<LeaderboardRow> {
    pool.top(top_n)
        .iter()
        .map(|e: &PoolEntry| LeaderboardRow {
            name: snap.name(&e.player_id),
            player_id: e.player_id.clone(),
            score: e.score,
            weight: e.weight,
            n_matchup: e.n_matchup,
            shared_types: e.shared_types.clone(),
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchupRequest {
    pub batter_id: PlayerId,
    pub pitcher_id: PlayerId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub season: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pitcher_stuff_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batter_launch_ratio: Option<f64>,
    /// Per-axis node cap for the returned densities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_nodes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchupDensities {
    pub blended: DensityGrid,
    pub direct: Option<DensityGrid>,
    pub synth_pitcher: Option<DensityGrid>,
    pub synth_batter: Option<DensityGrid>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentMetrics {
    pub direct: Option<ExpectedOutcomes>,
    pub synth_pitcher: Option<ExpectedOutcomes>,
    pub synth_batter: Option<ExpectedOutcomes>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchupReport {
    pub season: u16,
    pub dataset_hash: String,
    pub batter: PlayerRef,
    pub pitcher: PlayerRef,
    pub pitcher_hand: Hand,
    pub sliders: MetricWeights,
    pub weights: BlendWeights,
    pub densities: MatchupDensities,
    pub metrics: ExpectedOutcomes,
    pub component_metrics: ComponentMetrics,
    pub pitcher_pool_size: usize,
    pub batter_pool_size: usize,
    pub similar_pitchers: Vec<LeaderboardRow>,
    pub similar_batters: Vec<LeaderboardRow>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimilarRequest {
    pub player_id: PlayerId,
    pub role: Option<Role>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub season: Option<u16>,
    /// Slider position for the role's metric; the configured default if unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_n: Option<usize>,
    /// Study opponent, for the `n_matchup` column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opponent: Option<PlayerId>,
    /// Pitcher hand for batter comparisons; the opponent's hand, else `R`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hand: Option<Hand>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarReport {
    pub player: PlayerRef,
    pub role: Role,
    pub ratio: f64,
    pub pool_size: usize,
    pub players: Vec<LeaderboardRow>,
}

fn check_ratio(name: &str, r: f64) -> Result<f64> {
    if r.is_finite() && (0.0..=1.0).contains(&r) {
        Ok(r)
    } else {
        Err(SeamError::InvalidArgument(format!(
            "{name} must be in [0, 1], got {r}"
        )))
    }
}

/// Shared service state. Queries read an immutable [`Snapshot`]; `reload`
/// builds a new one off to the side and swaps it in.
pub struct MatchupService {
    config: ServiceConfig,
    source: DataSource,
    state: RwLock<Arc<Snapshot>>,
    aggregations: AtomicU64,
}

impl MatchupService {
    /// Loads every `*.csv` under `config.data_dir`.
    pub fn load(config: ServiceConfig) -> Result<Self> {
        let source = DataSource::Dir(config.data_dir.clone());
        Self::with_source(config, source)
    }

    /// Serves in-memory CSV files, as `(file name, bytes)`.
    pub fn from_csv(config: ServiceConfig, files: Vec<(String, Vec<u8>)>) -> Result<Self> {
        Self::with_source(config, DataSource::Memory(Arc::new(files)))
    }

    fn with_source(config: ServiceConfig, source: DataSource) -> Result<Self> {
        config.grid.validate()?;
        check_ratio("pitcher_stuff_ratio", config.sliders.pitcher_stuff_ratio)?;
        check_ratio("batter_launch_ratio", config.sliders.batter_launch_ratio)?;
        let aggregations = AtomicU64::new(0);
        let snapshot = Snapshot::build(&source.read()?, &config, &aggregations)?;
        Ok(Self {
            config,
            source,
            state: RwLock::new(Arc::new(snapshot)),
            aggregations,
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    /// Number of times profile tables were aggregated from records rather
    /// than read from the cache.
    pub fn aggregations(&self) -> u64 {
        self.aggregations.load(Ordering::Relaxed)
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        Arc::clone(&self.state.read().unwrap_or_else(|e| e.into_inner()))
    }

    /// Re-reads the data source. On failure the old snapshot stays live.
    pub fn reload(&self) -> Result<Arc<Snapshot>> {
        let fresh = Arc::new(Snapshot::build(
            &self.source.read()?,
            &self.config,
            &self.aggregations,
        )?);
        *self.state.write().unwrap_or_else(|e| e.into_inner()) = Arc::clone(&fresh);
        Ok(fresh)
    }

    /// Players of `role` meeting the ball-in-play threshold, sorted by id.
    pub fn list_players(&self, role: Role, season: Option<u16>) -> Result<Vec<PlayerSummary>> {
        let snap = self.snapshot();
        snap.check_season(season)?;
        let min = self.config.min_bip;
        let out = match role {
            Role::Pitcher => snap
                .tables
                .pitchers
                .values()
                .filter(|p| p.n_bip >= min)
                .map(|p| PlayerSummary {
                    name: snap.name(&p.pitcher_id),
                    player_id: p.pitcher_id.clone(),
                    handedness: format!("{:?}", p.throws),
                    n_pitches: p.n_pitches,
                    n_bip: p.n_bip,
                })
                .collect(),
            Role::Batter => snap
                .tables
                .batters
                .values()
                .filter(|b| b.n_bip >= min)
                .map(|b| PlayerSummary {
                    name: snap.name(&b.batter_id),
                    player_id: b.batter_id.clone(),
                    handedness: b.handedness().to_owned(),
                    n_pitches: b.cells.values().map(|c| c.count).sum(),
                    n_bip: b.n_bip,
                })
                .collect(),
        };
        Ok(out)
    }

    pub fn compute_matchup(&self, req: &MatchupRequest) -> Result<MatchupReport> {
        let snap = self.snapshot();
        snap.check_season(req.season)?;
        let sliders = MetricWeights {
            pitcher_stuff_ratio: check_ratio(
                "pitcher_stuff_ratio",
                req.pitcher_stuff_ratio
                    .unwrap_or(self.config.sliders.pitcher_stuff_ratio),
            )?,
            batter_launch_ratio: check_ratio(
                "batter_launch_ratio",
                req.batter_launch_ratio
                    .unwrap_or(self.config.sliders.batter_launch_ratio),
            )?,
        };
        let synth_config = SynthesisConfig {
            grid: self.config.grid,
            min_bip: self.config.min_bip,
        };
        let result = synthesize(
            &snap.tables,
            &snap.index,
            &req.batter_id,
            &req.pitcher_id,
            &sliders,
            &synth_config,
        )?;
        let pitcher_hand = snap.tables.pitchers[&req.pitcher_id].throws;

        let metrics = expected_outcomes(&result.blended, &snap.field)?;
        let metric_of = |d: &Option<DensityGrid>| -> Result<Option<ExpectedOutcomes>> {
            d.as_ref().map(|d| expected_outcomes(d, &snap.field)).transpose()
        };
        let component_metrics = ComponentMetrics {
            direct: metric_of(&result.direct)?,
            synth_pitcher: metric_of(&result.synth_pitcher)?,
            synth_batter: metric_of(&result.synth_batter)?,
        };
        let cap = req.max_nodes.unwrap_or(self.config.payload_max_nodes);
        let shrink = |d: &Option<DensityGrid>| d.as_ref().map(|d| d.downsample(cap));
        Ok(MatchupReport {
            season: snap.season,
            dataset_hash: snap.dataset_hash.clone(),
            batter: PlayerRef {
                player_id: req.batter_id.clone(),
                name: snap.name(&req.batter_id),
            },
            pitcher: PlayerRef {
                player_id: req.pitcher_id.clone(),
                name: snap.name(&req.pitcher_id),
            },
            pitcher_hand,
            sliders,
            weights: result.weights,
            densities: MatchupDensities {
                blended: result.blended.downsample(cap),
                direct: shrink(&result.direct),
                synth_pitcher: shrink(&result.synth_pitcher),
                synth_batter: shrink(&result.synth_batter),
            },
            metrics,
            component_metrics,
            pitcher_pool_size: result.pitcher_pool.len(),
            batter_pool_size: result.batter_pool.len(),
            similar_pitchers: leaderboard(&result.pitcher_pool, LEADERBOARD_SIZE, &snap),
            similar_batters: leaderboard(&result.batter_pool, LEADERBOARD_SIZE, &snap),
        })
    }

    /// The ranked comparable-player list for one player, without densities.
    pub fn similar_players(&self, req: &SimilarRequest) -> Result<SimilarReport> {
        let snap = self.snapshot();
        snap.check_season(req.season)?;
        let tables = &snap.tables;
        let top_n = req.top_n.unwrap_or(LEADERBOARD_SIZE);
        let role = match req.role {
            Some(r) => r,
            None if tables.pitchers.contains_key(&req.player_id) => Role::Pitcher,
            None => Role::Batter,
        };
        let unknown = |id: &PlayerId| SeamError::UnknownPlayer(id.to_string());

        let (ratio, pool) = match role {
            Role::Pitcher => {
                let ratio = check_ratio(
                    "ratio",
                    req.ratio.unwrap_or(self.config.sliders.pitcher_stuff_ratio),
                )?;
                let target = tables
                    .pitchers
                    .get(&req.player_id)
                    .ok_or_else(|| unknown(&req.player_id))?;
                if let Some(b) = &req.opponent {
                    tables.batters.get(b).ok_or_else(|| unknown(b))?;
                }
                let usage: BTreeMap<PitchType, f64> =
                    target.pitches.iter().map(|(t, s)| (*t, s.usage)).collect();
                let pool = build_pitcher_pool(
                    target,
                    eligible_pitchers(target, tables.pitchers.values(), self.config.min_bip),
                    &slider_to_metric(ratio, FeatureGroups::PITCHER),
                    |p| {
                        req.opponent
                            .as_ref()
                            .map_or(0, |b| snap.index.count(p, b, &usage))
                    },
                );
                (ratio, pool)
            }
            Role::Batter => {
                let ratio = check_ratio(
                    "ratio",
                    req.ratio.unwrap_or(self.config.sliders.batter_launch_ratio),
                )?;
                let target = tables
                    .batters
                    .get(&req.player_id)
                    .ok_or_else(|| unknown(&req.player_id))?;
                let opponent = match &req.opponent {
                    Some(p) => Some((p, tables.pitchers.get(p).ok_or_else(|| unknown(p))?)),
                    None => None,
                };
                let hand = req.hand.or(opponent.map(|(_, p)| p.throws)).unwrap_or(Hand::R);
                let usage: BTreeMap<PitchType, f64> = opponent
                    .map(|(_, p)| p.pitches.iter().map(|(t, s)| (*t, s.usage)).collect())
                    .unwrap_or_default();
                let pool = build_batter_pool(
                    target,
                    eligible_batters(target, tables.batters.values(), hand, self.config.min_bip),
                    hand,
                    &slider_to_metric(ratio, FeatureGroups::BATTER),
                    |b| opponent.map_or(0, |(p, _)| snap.index.count(p, b, &usage)),
                );
                (ratio, pool)
            }
        };
        Ok(SimilarReport {
            player: PlayerRef {
                player_id: req.player_id.clone(),
                name: snap.name(&req.player_id),
            },
            role,
            ratio,
            pool_size: pool.len(),
            players: leaderboard(&pool, top_n, &snap),
        })
    }
}
