//! Per-season player characteristics.
//!
//! Pitchers are summarized per pitch type, batters per (pitcher hand, pitch
//! type) cell. Every feature column is z-scored over the players that have
//! it, and the fitted moments are kept in a [`Standardizer`] so query players
//! can be mapped into the same space.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ingest::{Hand, PitchRecord, PitchType, PlayerId};

pub const PITCHER_FEATURES: [&str; 9] = [
    "velocity",
    "spin",
    "break_h",
    "break_v",
    "launch_h",
    "launch_v",
    "release_pos_x",
    "release_pos_z",
    "extension",
];

pub const BATTER_FEATURES: [&str; 5] = ["exit_velocity", "launch_angle", "pull", "middle", "oppo"];

pub const N_PITCHER_FEATURES: usize = PITCHER_FEATURES.len();
pub const N_BATTER_FEATURES: usize = BATTER_FEATURES.len();

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfileConfig {
    /// Spray angles beyond this many degrees either side of center count as
    /// pulled or opposite field.
    pub pull_threshold_deg: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            pull_threshold_deg: 15.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchTypeSummary {
    pub count: usize,
    pub usage: f64,
    /// Means in physical units; `None` when no pitch carried the field.
    pub raw: [Option<f64>; N_PITCHER_FEATURES],
    pub standardized: [Option<f64>; N_PITCHER_FEATURES],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitcherProfile {
    pub pitcher_id: PlayerId,
    pub season: u16,
    pub throws: Hand,
    pub pitches: BTreeMap<PitchType, PitchTypeSummary>,
    pub n_pitches: usize,
    /// Balls in play allowed this season.
    pub n_bip: usize,
}

impl PitcherProfile {
    pub fn pitch_types(&self) -> impl Iterator<Item = PitchType> + '_ {
        self.pitches.keys().copied()
    }

    pub fn n_types(&self) -> usize {
        self.pitches.len()
    }

    pub fn usage(&self, t: PitchType) -> f64 {
        self.pitches.get(&t).map_or(0.0, |p| p.usage)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatterCell {
    /// Pitches seen in the cell.
    pub count: usize,
    /// Balls in play with a landing point in the cell.
    pub n_bip: usize,
    /// exit velocity (mph), launch angle (degrees), pull/middle/oppo fractions.
    pub raw: [Option<f64>; N_BATTER_FEATURES],
    pub standardized: [Option<f64>; N_BATTER_FEATURES],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatterProfile {
    pub batter_id: PlayerId,
    pub season: u16,
    pub bats: BTreeSet<Hand>,
    /// Keyed by (pitcher throwing hand, pitch type).
    #[serde(with = "cell_map")]
    pub cells: BTreeMap<(Hand, PitchType), BatterCell>,
    pub n_bip: usize,
}

impl BatterProfile {
    pub fn cells_for(&self, hand: Hand) -> impl Iterator<Item = (PitchType, &BatterCell)> + '_ {
        self.cells
            .iter()
            .filter(move |((h, _), _)| *h == hand)
            .map(|((_, t), c)| (*t, c))
    }

    /// "L", "R" or "S" for switch hitters.
    pub fn handedness(&self) -> &'static str {
        match (self.bats.contains(&Hand::L), self.bats.contains(&Hand::R)) {
            (true, true) => "S",
            (true, false) => "L",
            _ => "R",
        }
    }
}

/// JSON object keys must be strings, so cells serialize as a list.
mod cell_map {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry {
        hand: Hand,
        pitch_type: PitchType,
        cell: BatterCell,
    }

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<(Hand, PitchType), BatterCell>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let entries: Vec<Entry> = map
            .iter()
            .map(|((hand, pitch_type), cell)| Entry {
                hand: *hand,
                pitch_type: *pitch_type,
                cell: cell.clone(),
            })
            .collect();
        entries.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<(Hand, PitchType), BatterCell>, D::Error> {
        let entries = Vec::<Entry>::deserialize(d)?;
        Ok(entries
            .into_iter()
            .map(|e| ((e.hand, e.pitch_type), e.cell))
            .collect())
    }
}

/// Population mean and standard deviation of one feature column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub sd: f64,
}

impl Moments {
    pub fn fit(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = sorted_sum(values) / n;
        let sq: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
        Self {
            mean,
            sd: (sorted_sum(&sq) / n).sqrt(),
        }
    }

    /// Degenerate columns (sd = 0) map to 0.
    pub fn standardize(&self, x: f64) -> f64 {
        if self.sd > 0.0 {
            (x - self.mean) / self.sd
        } else {
            0.0
        }
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.sd + self.mean
    }
}

/// Fitted moments for every feature column, keyed by
/// `pitcher/<type>/<feature>` or `batter/<hand>/<type>/<feature>`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub columns: BTreeMap<String, Moments>,
}

impl Standardizer {
    pub fn pitcher_key(t: PitchType, feature: usize) -> String {
        format!("pitcher/{}/{}", t, PITCHER_FEATURES[feature])
    }

    pub fn batter_key(hand: Hand, t: PitchType, feature: usize) -> String {
        format!("batter/{:?}/{}/{}", hand, t, BATTER_FEATURES[feature])
    }

    pub fn get(&self, key: &str) -> Option<&Moments> {
        self.columns.get(key)
    }

    pub fn standardize_pitcher(
        &self,
        t: PitchType,
        raw: &[Option<f64>; N_PITCHER_FEATURES],
    ) -> [Option<f64>; N_PITCHER_FEATURES] {
        std::array::from_fn(|f| {
            let m = self.columns.get(&Self::pitcher_key(t, f))?;
            Some(m.standardize(raw[f]?))
        })
    }

    pub fn standardize_batter(
        &self,
        hand: Hand,
        t: PitchType,
        raw: &[Option<f64>; N_BATTER_FEATURES],
    ) -> [Option<f64>; N_BATTER_FEATURES] {
        std::array::from_fn(|f| {
            let m = self.columns.get(&Self::batter_key(hand, t, f))?;
            Some(m.standardize(raw[f]?))
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfileTables {
    pub season: u16,
    pub pitchers: BTreeMap<PlayerId, PitcherProfile>,
    pub batters: BTreeMap<PlayerId, BatterProfile>,
    pub standardizer: Standardizer,
}

/// Summing sorted values makes aggregates independent of record order.
fn sorted_sum(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

fn mean_of(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(sorted_sum(values) / values.len() as f64)
    }
}

#[derive(Default)]
struct PitcherAccum {
    throws: BTreeMap<Hand, usize>,
    per_type: BTreeMap<PitchType, (usize, [Vec<f64>; N_PITCHER_FEATURES])>,
    n_pitches: usize,
    n_bip: usize,
}

#[derive(Default)]
struct BatterAccum {
    bats: BTreeSet<Hand>,
    cells: BTreeMap<(Hand, PitchType), BatterCellAccum>,
    n_bip: usize,
}

#[derive(Default)]
struct BatterCellAccum {
    count: usize,
    exit_velocity: Vec<f64>,
    launch_angle: Vec<f64>,
    directions: [usize; 3],
}

fn pitcher_fields(r: &PitchRecord) -> [Option<f64>; N_PITCHER_FEATURES] {
    [
        r.release_speed,
        r.release_spin,
        r.break_h,
        r.break_v,
        r.launch_h,
        r.launch_v,
        r.release_pos_x,
        r.release_pos_z,
        r.extension,
    ]
}

/// Aggregates one season of records into standardized profile tables.
pub fn build_profiles(records: &[PitchRecord], season: u16, config: &ProfileConfig) -> ProfileTables {
    let threshold = config.pull_threshold_deg.to_radians();
    let mut pitchers: BTreeMap<PlayerId, PitcherAccum> = BTreeMap::new();
    let mut batters: BTreeMap<PlayerId, BatterAccum> = BTreeMap::new();

    for r in records.iter().filter(|r| r.season == season) {
        let p = pitchers.entry(r.pitcher_id.clone()).or_default();
        *p.throws.entry(r.throw_side).or_default() += 1;
        p.n_pitches += 1;
        let (count, cols) = p.per_type.entry(r.pitch_type).or_default();
        *count += 1;
        for (col, v) in cols.iter_mut().zip(pitcher_fields(r)) {
            if let Some(v) = v {
                col.push(v);
            }
        }

        let b = batters.entry(r.batter_id.clone()).or_default();
        b.bats.insert(r.bat_side);
        let cell = b.cells.entry((r.throw_side, r.pitch_type)).or_default();
        cell.count += 1;
        if r.outcome.is_in_play() {
            if let Some(ev) = r.exit_velocity {
                cell.exit_velocity.push(ev);
            }
            if let Some(la) = r.launch_angle {
                cell.launch_angle.push(la.to_degrees());
            }
        }
        if r.is_ball_in_play() {
            p.n_bip += 1;
            b.n_bip += 1;
            if let Some(spray) = r.spray_angle {
                let dir = if spray < -threshold {
                    0
                } else if spray > threshold {
                    2
                } else {
                    1
                };
                cell.directions[dir] += 1;
            }
        }
    }

    let mut tables = ProfileTables {
        season,
        ..Default::default()
    };

    for (id, acc) in pitchers {
        let throws = acc
            .throws
            .iter()
            .max_by_key(|(h, n)| (**n, std::cmp::Reverse(**h)))
            .map(|(h, _)| *h)
            .unwrap_or(Hand::R);
        let pitches = acc
            .per_type
            .into_iter()
            .map(|(t, (count, cols))| {
                let raw = std::array::from_fn(|f| mean_of(&cols[f]));
                let summary = PitchTypeSummary {
                    count,
                    usage: count as f64 / acc.n_pitches as f64,
                    raw,
                    standardized: [None; N_PITCHER_FEATURES],
                };
                (t, summary)
            })
            .collect();
        tables.pitchers.insert(
            id.clone(),
            PitcherProfile {
                pitcher_id: id,
                season,
                throws,
                pitches,
                n_pitches: acc.n_pitches,
                n_bip: acc.n_bip,
            },
        );
    }

    for (id, acc) in batters {
        let cells = acc
            .cells
            .into_iter()
            .map(|(key, c)| {
                let n_dir: usize = c.directions.iter().sum();
                let frac = |i: usize| (n_dir > 0).then(|| c.directions[i] as f64 / n_dir as f64);
                let cell = BatterCell {
                    count: c.count,
                    n_bip: n_dir,
                    raw: [
                        mean_of(&c.exit_velocity),
                        mean_of(&c.launch_angle),
                        frac(0),
                        frac(1),
                        frac(2),
                    ],
                    standardized: [None; N_BATTER_FEATURES],
                };
                (key, cell)
            })
            .collect();
        tables.batters.insert(
            id.clone(),
            BatterProfile {
                batter_id: id,
                season,
                bats: acc.bats,
                cells,
                n_bip: acc.n_bip,
            },
        );
    }

    standardize(&mut tables);
    tables
}

/// Fits one z-score per feature column over the pool and applies it.
fn standardize(tables: &mut ProfileTables) {
    let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for p in tables.pitchers.values() {
        for (t, s) in &p.pitches {
            for (f, v) in s.raw.iter().enumerate() {
                if let Some(v) = v {
                    columns
                        .entry(Standardizer::pitcher_key(*t, f))
                        .or_default()
                        .push(*v);
                }
            }
        }
    }
    for b in tables.batters.values() {
        for ((h, t), c) in &b.cells {
            for (f, v) in c.raw.iter().enumerate() {
                if let Some(v) = v {
                    columns
                        .entry(Standardizer::batter_key(*h, *t, f))
                        .or_default()
                        .push(*v);
                }
            }
        }
    }
    tables.standardizer = Standardizer {
        columns: columns.into_iter().map(|(k, v)| (k, Moments::fit(&v))).collect(),
    };
    let st = &tables.standardizer;
    for p in tables.pitchers.values_mut() {
        for (t, s) in p.pitches.iter_mut() {
            s.standardized = st.standardize_pitcher(*t, &s.raw);
        }
    }
    for b in tables.batters.values_mut() {
        for ((h, t), c) in b.cells.iter_mut() {
            c.standardized = st.standardize_batter(*h, *t, &c.raw);
        }
    }
}

/// Shared pitch types a candidate needs: `ceil(n_types / 2)`.
pub fn required_shared_types(n_types: usize) -> usize {
    n_types.div_ceil(2)
}

pub fn shared_pitch_types(a: &PitcherProfile, b: &PitcherProfile) -> Vec<PitchType> {
    a.pitches
        .keys()
        .filter(|t| b.pitches.contains_key(t))
        .copied()
        .collect()
}

/// Pitchers sharing at least half (rounded up) of the target's pitch types
/// and meeting the balls-in-play threshold. The target itself is excluded.
pub fn eligible_pitchers<'a>(
    target: &PitcherProfile,
    pool: impl IntoIterator<Item = &'a PitcherProfile>,
    min_bip: usize,
) -> Vec<&'a PitcherProfile> {
    let need = required_shared_types(target.n_types()).max(1);
    pool.into_iter()
        .filter(|c| c.pitcher_id != target.pitcher_id)
        .filter(|c| c.n_bip >= min_bip)
        .filter(|c| shared_pitch_types(target, c).len() >= need)
        .collect()
}

pub fn shared_batter_cells(a: &BatterProfile, b: &BatterProfile, hand: Hand) -> Vec<PitchType> {
    a.cells_for(hand)
        .filter(|(t, _)| b.cells.contains_key(&(hand, *t)))
        .map(|(t, _)| t)
        .collect()
}

/// Batters with at least one cell against `pitcher_hand` in common with the
/// target, meeting the balls-in-play threshold. The target is excluded.
pub fn eligible_batters<'a>(
    target: &BatterProfile,
    pool: impl IntoIterator<Item = &'a BatterProfile>,
    pitcher_hand: Hand,
    min_bip: usize,
) -> Vec<&'a BatterProfile> {
    pool.into_iter()
        .filter(|c| c.batter_id != target.batter_id)
        .filter(|c| c.n_bip >= min_bip)
        .filter(|c| !shared_batter_cells(target, c, pitcher_hand).is_empty())
        .collect()
}
