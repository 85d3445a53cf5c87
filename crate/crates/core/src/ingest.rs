//! Pitch-level CSV ingestion.
//!
//! Reads Statcast-style exports (one pitch per row) and emits [`PitchRecord`]s
//! with rare pitch types removed, renamed types folded into their parents,
//! release angles derived from the release velocity, and batted-ball
//! coordinates moved into feet from home plate.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SeamError};

/// Batted balls farther than this from home plate are discarded as bad data.
pub const MAX_LANDING_DISTANCE: f64 = 1000.0;

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlayerId(pub String);

impl PlayerId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PlayerId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

/// Pitch types retained after preprocessing, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PitchType {
    FF,
    FT,
    SI,
    FC,
    SL,
    ST,
    SV,
    CU,
    CS,
    CH,
    FS,
    FA,
}

impl PitchType {
    pub const ALL: [PitchType; 12] = [
        PitchType::FF,
        PitchType::FT,
        PitchType::SI,
        PitchType::FC,
        PitchType::SL,
        PitchType::ST,
        PitchType::SV,
        PitchType::CU,
        PitchType::CS,
        PitchType::CH,
        PitchType::FS,
        PitchType::FA,
    ];

    pub fn code(self) -> &'static str {
        match self {
            PitchType::FF => "FF",
            PitchType::FT => "FT",
            PitchType::SI => "SI",
            PitchType::FC => "FC",
            PitchType::SL => "SL",
            PitchType::ST => "ST",
            PitchType::SV => "SV",
            PitchType::CU => "CU",
            PitchType::CS => "CS",
            PitchType::CH => "CH",
            PitchType::FS => "FS",
            PitchType::FA => "FA",
        }
    }
}

impl fmt::Display for PitchType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Result of classifying a raw pitch-type label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PitchClass {
    Keep(PitchType),
    Removed,
}

/// Maps a tracking-data label (code or display name) to a retained pitch
/// type, or `Removed` for Eephus, Knuckleball and Screwball. Knuckle-curves
/// become curveballs and forkballs become splitters.
pub fn filter_and_rename(raw: &str) -> std::result::Result<PitchClass, UnknownPitchType> {
    use PitchClass::*;
    use PitchType::*;
    let key = raw.trim().to_ascii_lowercase().replace(['-', '_'], " ");
    let class = match key.as_str() {
        "ff" | "4 seam fastball" | "four seam fastball" => Keep(FF),
        "ft" | "2 seam fastball" | "two seam fastball" => Keep(FT),
        "si" | "sinker" => Keep(SI),
        "fc" | "cutter" => Keep(FC),
        "sl" | "slider" => Keep(SL),
        "st" | "sweeper" => Keep(ST),
        "sv" | "slurve" => Keep(SV),
        "cu" | "curveball" | "kc" | "knuckle curve" => Keep(CU),
        "cs" | "slow curve" => Keep(CS),
        "ch" | "changeup" => Keep(CH),
        "fs" | "split finger" | "splitter" | "fo" | "forkball" => Keep(FS),
        "fa" | "fastball" => Keep(FA),
        "ep" | "eephus" | "kn" | "knuckleball" | "sc" | "screwball" => Removed,
        _ => return Err(UnknownPitchType(raw.to_string())),
    };
    Ok(class)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownPitchType(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Hand {
    L,
    R,
}

impl FromStr for Hand {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s.trim() {
            "L" | "l" => Ok(Hand::L),
            "R" | "r" => Ok(Hand::R),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Out,
    Single,
    Double,
    Triple,
    HomeRun,
    NotInPlay,
}

impl Outcome {
    /// Position in the `(O, 1B, 2B, 3B, HR)` outcome vector.
    pub fn index(self) -> Option<usize> {
        match self {
            Outcome::Out => Some(0),
            Outcome::Single => Some(1),
            Outcome::Double => Some(2),
            Outcome::Triple => Some(3),
            Outcome::HomeRun => Some(4),
            Outcome::NotInPlay => None,
        }
    }

    pub fn from_index(i: usize) -> Outcome {
        match i {
            0 => Outcome::Out,
            1 => Outcome::Single,
            2 => Outcome::Double,
            3 => Outcome::Triple,
            4 => Outcome::HomeRun,
            _ => Outcome::NotInPlay,
        }
    }

    pub fn is_in_play(self) -> bool {
        self != Outcome::NotInPlay
    }

    /// Statcast `events` value to outcome. Errors count as outs.
    pub fn from_event(event: &str) -> Outcome {
        match event.trim() {
            "single" => Outcome::Single,
            "double" => Outcome::Double,
            "triple" => Outcome::Triple,
            "home_run" => Outcome::HomeRun,
            "field_out"
            | "force_out"
            | "grounded_into_double_play"
            | "double_play"
            | "triple_play"
            | "fielders_choice"
            | "fielders_choice_out"
            | "field_error"
            | "sac_fly"
            | "sac_bunt"
            | "sac_fly_double_play"
            | "sac_bunt_double_play" => Outcome::Out,
            _ => Outcome::NotInPlay,
        }
    }
}

/// Data-quality flags on an accepted record.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordFlags {
    /// In-play event without usable landing coordinates; demoted to not in play.
    pub missing_landing: bool,
    /// Landing point at or behind home plate; spray angle clamped to +-pi/2.
    pub spray_clamped: bool,
}

impl RecordFlags {
    pub fn any(&self) -> bool {
        self.missing_landing || self.spray_clamped
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchRecord {
    pub season: u16,
    pub pitcher_id: PlayerId,
    pub batter_id: PlayerId,
    pub pitch_type: PitchType,
    pub bat_side: Hand,
    pub throw_side: Hand,
    /// mph
    pub release_speed: Option<f64>,
    /// rpm
    pub release_spin: Option<f64>,
    /// inches
    pub break_h: Option<f64>,
    pub break_v: Option<f64>,
    /// feet
    pub release_pos_x: Option<f64>,
    pub release_pos_z: Option<f64>,
    pub extension: Option<f64>,
    /// ft/s
    pub vx0: Option<f64>,
    pub vy0: Option<f64>,
    pub vz0: Option<f64>,
    /// radians
    pub launch_h: Option<f64>,
    pub launch_v: Option<f64>,
    /// mph
    pub exit_velocity: Option<f64>,
    /// radians
    pub launch_angle: Option<f64>,
    /// feet from home plate
    pub landing_x: Option<f64>,
    pub landing_y: Option<f64>,
    /// radians, negative = pulled
    pub spray_angle: Option<f64>,
    pub outcome: Outcome,
    pub flags: RecordFlags,
}

impl PitchRecord {
    /// Landing point for balls in play.
    pub fn landing(&self) -> Option<[f64; 2]> {
        if !self.outcome.is_in_play() {
            return None;
        }
        Some([self.landing_x?, self.landing_y?])
    }

    pub fn is_ball_in_play(&self) -> bool {
        self.landing().is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleError {
    /// `vy0 = 0`: horizontal release angle undefined.
    DegenerateTrajectory,
}

/// Horizontal and vertical release angles from the release velocity.
pub fn pitch_launch_angles(vx0: f64, vy0: f64, vz0: f64) -> std::result::Result<(f64, f64), AngleError> {
    if vy0 == 0.0 {
        return Err(AngleError::DegenerateTrajectory);
    }
    let launch_h = (vx0 / vy0).atan();
    let launch_v = (vz0 / vx0.hypot(vy0)).atan();
    Ok((launch_h, launch_v))
}

/// Affine map from raw hit coordinates to feet, home plate at the origin,
/// fair territory toward positive y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordinateTransform {
    pub origin_x: f64,
    pub origin_y: f64,
    pub scale: f64,
}

impl Default for CoordinateTransform {
    fn default() -> Self {
        Self {
            origin_x: 125.42,
            origin_y: 198.27,
            scale: 2.5,
        }
    }
}

impl CoordinateTransform {
    pub fn adjust(&self, hc_x: f64, hc_y: f64) -> (f64, f64) {
        (
            self.scale * (hc_x - self.origin_x),
            self.scale * (self.origin_y - hc_y),
        )
    }

    /// Inverse of [`adjust`](Self::adjust), used by the fixture generator.
    pub fn raw(&self, x: f64, y: f64) -> (f64, f64) {
        (x / self.scale + self.origin_x, self.origin_y - y / self.scale)
    }
}

/// Adjusts raw hit coordinates; `None` when either coordinate is missing.
pub fn adjust_coordinates(
    hc_x: Option<f64>,
    hc_y: Option<f64>,
    transform: &CoordinateTransform,
) -> Option<(f64, f64)> {
    Some(transform.adjust(hc_x?, hc_y?))
}

/// Spray angle in radians with negative meaning pulled; the flag is set when
/// the landing point is not in front of home plate and the angle was clamped.
pub fn spray_angle(landing_x: f64, landing_y: f64, bat_side: Hand) -> (f64, bool) {
    let (base, clamped) = if landing_y > 0.0 {
        ((landing_x / landing_y).atan(), false)
    } else {
        let half_pi = std::f64::consts::FRAC_PI_2;
        (if landing_x < 0.0 { -half_pi } else { half_pi }, true)
    };
    let angle = match bat_side {
        Hand::R => base,
        Hand::L => -base,
    };
    (angle, clamped)
}

/// Column names, defaulting to the standard Statcast export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub season: String,
    pub pitcher: String,
    pub batter: String,
    pub pitch_type: String,
    pub bat_side: String,
    pub throw_side: String,
    pub release_speed: String,
    pub release_spin: String,
    pub break_h: String,
    pub break_v: String,
    pub release_pos_x: String,
    pub release_pos_z: String,
    pub extension: String,
    pub vx0: String,
    pub vy0: String,
    pub vz0: String,
    pub hc_x: String,
    pub hc_y: String,
    pub events: String,
    pub exit_velocity: String,
    pub launch_angle: String,
    pub pitcher_name: String,
    pub batter_name: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            season: "game_year".into(),
            pitcher: "pitcher".into(),
            batter: "batter".into(),
            pitch_type: "pitch_type".into(),
            bat_side: "stand".into(),
            throw_side: "p_throws".into(),
            release_speed: "release_speed".into(),
            release_spin: "release_spin_rate".into(),
            break_h: "pfx_x".into(),
            break_v: "pfx_z".into(),
            release_pos_x: "release_pos_x".into(),
            release_pos_z: "release_pos_z".into(),
            extension: "release_extension".into(),
            vx0: "vx0".into(),
            vy0: "vy0".into(),
            vz0: "vz0".into(),
            hc_x: "hc_x".into(),
            hc_y: "hc_y".into(),
            events: "events".into(),
            exit_velocity: "launch_speed".into(),
            launch_angle: "launch_angle".into(),
            pitcher_name: "player_name".into(),
            batter_name: "batter_name".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestConfig {
    pub columns: ColumnMap,
    pub coordinates: CoordinateTransform,
    /// Statcast reports `pfx_x`/`pfx_z` in feet; converted to inches when set.
    pub movement_in_feet: bool,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            columns: ColumnMap::default(),
            coordinates: CoordinateTransform::default(),
            movement_in_feet: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows: usize,
    pub accepted: usize,
    pub removed: usize,
    pub rejected: usize,
    /// Accepted records carrying a data-quality flag.
    pub flagged: usize,
    pub rejected_reasons: BTreeMap<String, usize>,
}

impl IngestReport {
    fn merge(&mut self, other: IngestReport) {
        self.rows += other.rows;
        self.accepted += other.accepted;
        self.removed += other.removed;
        self.rejected += other.rejected;
        self.flagged += other.flagged;
        for (k, v) in other.rejected_reasons {
            *self.rejected_reasons.entry(k).or_default() += v;
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct IngestOutput {
    pub records: Vec<PitchRecord>,
    pub report: IngestReport,
    /// Display names keyed by player id, where the data carries them.
    pub names: BTreeMap<PlayerId, String>,
}

impl IngestOutput {
    pub fn extend(&mut self, other: IngestOutput) {
        self.records.extend(other.records);
        self.report.merge(other.report);
        for (k, v) in other.names {
            self.names.entry(k).or_insert(v);
        }
    }
}

enum RowResult {
    Accepted(Box<PitchRecord>),
    Removed,
    Rejected(&'static str),
}

struct ColumnIndex {
    season: usize,
    pitcher: usize,
    batter: usize,
    pitch_type: usize,
    bat_side: usize,
    throw_side: usize,
    release_speed: Option<usize>,
    release_spin: Option<usize>,
    break_h: Option<usize>,
    break_v: Option<usize>,
    release_pos_x: Option<usize>,
    release_pos_z: Option<usize>,
    extension: Option<usize>,
    vx0: Option<usize>,
    vy0: Option<usize>,
    vz0: Option<usize>,
    hc_x: Option<usize>,
    hc_y: Option<usize>,
    events: Option<usize>,
    exit_velocity: Option<usize>,
    launch_angle: Option<usize>,
    pitcher_name: Option<usize>,
    batter_name: Option<usize>,
}

impl ColumnIndex {
    fn new(headers: &csv::StringRecord, map: &ColumnMap) -> Result<Self> {
        let lookup: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h.trim(), i)).collect();
        let opt = |name: &str| lookup.get(name).copied();
        let req = |name: &str| opt(name).ok_or_else(|| SeamError::MissingColumn(name.to_string()));
        Ok(Self {
            season: req(&map.season)?,
            pitcher: req(&map.pitcher)?,
            batter: req(&map.batter)?,
            pitch_type: req(&map.pitch_type)?,
            bat_side: req(&map.bat_side)?,
            throw_side: req(&map.throw_side)?,
            release_speed: opt(&map.release_speed),
            release_spin: opt(&map.release_spin),
            break_h: opt(&map.break_h),
            break_v: opt(&map.break_v),
            release_pos_x: opt(&map.release_pos_x),
            release_pos_z: opt(&map.release_pos_z),
            extension: opt(&map.extension),
            vx0: opt(&map.vx0),
            vy0: opt(&map.vy0),
            vz0: opt(&map.vz0),
            hc_x: opt(&map.hc_x),
            hc_y: opt(&map.hc_y),
            events: opt(&map.events),
            exit_velocity: opt(&map.exit_velocity),
            launch_angle: opt(&map.launch_angle),
            pitcher_name: opt(&map.pitcher_name),
            batter_name: opt(&map.batter_name),
        })
    }
}

fn field(row: &csv::StringRecord, idx: Option<usize>) -> Option<&str> {
    let s = row.get(idx?)?.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("null") {
        None
    } else {
        Some(s)
    }
}

fn number(row: &csv::StringRecord, idx: Option<usize>) -> Option<f64> {
    field(row, idx)?.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_row(row: &csv::StringRecord, cols: &ColumnIndex, config: &IngestConfig) -> RowResult {
    let Some(raw_type) = field(row, Some(cols.pitch_type)) else {
        return RowResult::Rejected("missing pitch type");
    };
    let pitch_type = match filter_and_rename(raw_type) {
        Ok(PitchClass::Keep(t)) => t,
        Ok(PitchClass::Removed) => return RowResult::Removed,
        Err(_) => return RowResult::Rejected("unknown pitch type"),
    };
    let Some(season) = field(row, Some(cols.season)).and_then(|s| s.parse::<u16>().ok()) else {
        return RowResult::Rejected("bad season");
    };
    let (Some(pitcher), Some(batter)) = (field(row, Some(cols.pitcher)), field(row, Some(cols.batter)))
    else {
        return RowResult::Rejected("missing player id");
    };
    let (Some(bat_side), Some(throw_side)) = (
        field(row, Some(cols.bat_side)).and_then(|s| s.parse::<Hand>().ok()),
        field(row, Some(cols.throw_side)).and_then(|s| s.parse::<Hand>().ok()),
    ) else {
        return RowResult::Rejected("bad handedness");
    };

    let (vx0, vy0, vz0) = (
        number(row, cols.vx0),
        number(row, cols.vy0),
        number(row, cols.vz0),
    );
    let (launch_h, launch_v) = match (vx0, vy0, vz0) {
        (Some(x), Some(y), Some(z)) => match pitch_launch_angles(x, y, z) {
            Ok((h, v)) => (Some(h), Some(v)),
            Err(AngleError::DegenerateTrajectory) => return RowResult::Rejected("degenerate trajectory"),
        },
        _ => (None, None),
    };

    let movement = if config.movement_in_feet { 12.0 } else { 1.0 };
    let mut outcome = field(row, cols.events)
        .map(Outcome::from_event)
        .unwrap_or(Outcome::NotInPlay);
    let mut flags = RecordFlags::default();

    let mut landing = None;
    if outcome.is_in_play() {
        landing = adjust_coordinates(
            number(row, cols.hc_x),
            number(row, cols.hc_y),
            &config.coordinates,
        )
        .filter(|(x, y)| x.hypot(*y) <= MAX_LANDING_DISTANCE);
        if landing.is_none() {
            flags.missing_landing = true;
            outcome = Outcome::NotInPlay;
        }
    }
    let spray = landing.map(|(x, y)| {
        let (angle, clamped) = spray_angle(x, y, bat_side);
        flags.spray_clamped = clamped;
        angle
    });

    RowResult::Accepted(Box::new(PitchRecord {
        season,
        pitcher_id: PlayerId::new(pitcher),
        batter_id: PlayerId::new(batter),
        pitch_type,
        bat_side,
        throw_side,
        release_speed: number(row, cols.release_speed),
        release_spin: number(row, cols.release_spin),
        break_h: number(row, cols.break_h).map(|v| v * movement),
        break_v: number(row, cols.break_v).map(|v| v * movement),
        release_pos_x: number(row, cols.release_pos_x),
        release_pos_z: number(row, cols.release_pos_z),
        extension: number(row, cols.extension),
        vx0,
        vy0,
        vz0,
        launch_h,
        launch_v,
        exit_velocity: number(row, cols.exit_velocity),
        launch_angle: number(row, cols.launch_angle).map(f64::to_radians),
        landing_x: landing.map(|l| l.0),
        landing_y: landing.map(|l| l.1),
        spray_angle: spray,
        outcome,
        flags,
    }))
}

/// Ingests one CSV stream. Output order matches input order.
pub fn ingest_reader<R: Read>(reader: R, config: &IngestConfig) -> Result<IngestOutput> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let cols = ColumnIndex::new(csv.headers()?, &config.columns)?;
    let rows: Vec<csv::StringRecord> = csv.records().collect::<std::result::Result<_, _>>()?;

    let parsed: Vec<RowResult> = rows.par_iter().map(|row| parse_row(row, &cols, config)).collect();

    let mut out = IngestOutput::default();
    out.report.rows = rows.len();
    for (row, result) in rows.iter().zip(parsed) {
        match result {
            RowResult::Accepted(rec) => {
                out.report.accepted += 1;
                if rec.flags.any() {
                    out.report.flagged += 1;
                }
                if let Some(name) = field(row, cols.pitcher_name) {
                    out.names
                        .entry(rec.pitcher_id.clone())
                        .or_insert_with(|| name.to_string());
                }
                if let Some(name) = field(row, cols.batter_name) {
                    out.names
                        .entry(rec.batter_id.clone())
                        .or_insert_with(|| name.to_string());
                }
                out.records.push(*rec);
            }
            RowResult::Removed => out.report.removed += 1,
            RowResult::Rejected(reason) => {
                out.report.rejected += 1;
                *out.report.rejected_reasons.entry(reason.to_string()).or_default() += 1;
            }
        }
    }
    Ok(out)
}

pub fn ingest_path(path: &Path, config: &IngestConfig) -> Result<IngestOutput> {
    ingest_reader(std::fs::File::open(path)?, config)
}

/// Ingests every `*.csv` file in a directory, in file-name order.
pub fn ingest_dir(dir: &Path, config: &IngestConfig) -> Result<IngestOutput> {
    let mut out = IngestOutput::default();
    for path in csv_files(dir)? {
        out.extend(ingest_path(&path, config)?);
    }
    Ok(out)
}

pub fn csv_files(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut files: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn rare_types_removed_and_renames_applied() {
        assert_eq!(
            filter_and_rename("Knuckle-Curve"),
            Ok(PitchClass::Keep(PitchType::CU))
        );
        assert_eq!(filter_and_rename("KC"), Ok(PitchClass::Keep(PitchType::CU)));
        assert_eq!(filter_and_rename("Forkball"), Ok(PitchClass::Keep(PitchType::FS)));
        assert_eq!(filter_and_rename("FO"), Ok(PitchClass::Keep(PitchType::FS)));
        for removed in ["Eephus", "EP", "Knuckleball", "KN", "Screwball", "SC"] {
            assert_eq!(filter_and_rename(removed), Ok(PitchClass::Removed), "{removed}");
        }
        assert_eq!(filter_and_rename("SL"), Ok(PitchClass::Keep(PitchType::SL)));
        assert_eq!(
            filter_and_rename("4-Seam Fastball"),
            Ok(PitchClass::Keep(PitchType::FF))
        );
        assert!(filter_and_rename("PO").is_err());
        assert!(filter_and_rename("").is_err());
    }

    #[test]
    fn launch_angles() {
        assert_eq!(pitch_launch_angles(0.0, -130.0, 0.0), Ok((0.0, 0.0)));
        let (h, v) = pitch_launch_angles(3.0, 4.0, 0.0).unwrap();
        assert!((h - 0.75f64.atan()).abs() < 1e-15);
        assert!((h - 0.643_501_108_793_284_4).abs() < 1e-12);
        assert_eq!(v, 0.0);
        let (h, v) = pitch_launch_angles(0.0, -100.0, -100.0).unwrap();
        assert_eq!(h, 0.0);
        assert!((v + FRAC_PI_4).abs() < 1e-15);
        assert_eq!(
            pitch_launch_angles(1.0, 0.0, 1.0),
            Err(AngleError::DegenerateTrajectory)
        );
    }

    #[test]
    fn coordinates() {
        let t = CoordinateTransform::default();
        assert_eq!(t.adjust(125.42, 198.27), (0.0, 0.0));
        let (x, y) = t.adjust(126.42, 198.27);
        assert!((x - 2.5).abs() < 1e-12 && y == 0.0);
        // up the page in raw units is toward the outfield
        assert!(t.adjust(125.42, 100.0).1 > 0.0);
        assert_eq!(adjust_coordinates(None, Some(1.0), &t), None);
        let (rx, ry) = t.raw(-40.0, 310.0);
        let (x, y) = t.adjust(rx, ry);
        assert!((x + 40.0).abs() < 1e-9 && (y - 310.0).abs() < 1e-9);
    }

    #[test]
    fn spray_angle_sign_convention() {
        assert_eq!(spray_angle(0.0, 300.0, Hand::R), (0.0, false));
        let (a, _) = spray_angle(-100.0, 100.0, Hand::R);
        assert!((a + FRAC_PI_4).abs() < 1e-15);
        let (a, _) = spray_angle(-100.0, 100.0, Hand::L);
        assert!((a - FRAC_PI_4).abs() < 1e-15);
        assert_eq!(spray_angle(-5.0, -1.0, Hand::R), (-FRAC_PI_2, true));
        assert_eq!(spray_angle(-5.0, 0.0, Hand::L), (FRAC_PI_2, true));
    }

    const HEADER: &str = "game_year,pitcher,batter,pitch_type,stand,p_throws,release_speed,release_spin_rate,pfx_x,pfx_z,release_pos_x,release_pos_z,release_extension,vx0,vy0,vz0,hc_x,hc_y,events,launch_speed,launch_angle,player_name";

    fn ingest(rows: &[&str]) -> IngestOutput {
        let mut text = String::from(HEADER);
        for r in rows {
            text.push('\n');
            text.push_str(r);
        }
        ingest_reader(text.as_bytes(), &IngestConfig::default()).unwrap()
    }

    #[test]
    fn row_accounting_and_flags() {
        let out = ingest(&[
            // single to center
            "2019,1,10,FF,R,R,95,2300,-0.5,1.2,-2,6,6.5,5,-135,-7,125.42,78.27,single,101,12,Ace",
            // eephus removed
            "2019,1,10,EP,R,R,60,1000,0,0,-2,6,6.5,1,-80,2,,,,,,Ace",
            // unknown label rejected
            "2019,1,10,PO,R,R,85,2000,0,0,-2,6,6.5,1,-120,2,,,,,,Ace",
            // vy0 = 0 rejected
            "2019,1,10,SL,R,R,85,2500,0.3,0.1,-2,6,6.5,1,0,2,,,,,,Ace",
            // in play without coordinates: flagged and demoted
            "2019,1,10,CH,L,R,85,1800,-1,0.5,-2,6,6.5,4,-120,-3,,,double,90,20,Ace",
            // strikeout, no batted-ball fields
            "2019,2,10,CU,R,L,78,2700,0.6,-0.8,2,6,6,-1,-110,1,,,strikeout,,,Deuce",
        ]);
        let r = &out.report;
        assert_eq!(r.rows, 6);
        assert_eq!((r.accepted, r.removed, r.rejected, r.flagged), (3, 1, 2, 1));
        assert_eq!(r.accepted + r.removed + r.rejected, r.rows);
        assert_eq!(r.rejected_reasons["unknown pitch type"], 1);
        assert_eq!(r.rejected_reasons["degenerate trajectory"], 1);

        let single = &out.records[0];
        assert_eq!(single.outcome, Outcome::Single);
        let [x, y] = single.landing().unwrap();
        assert!(x.abs() < 1e-9 && (y - 300.0).abs() < 1e-9);
        assert!((single.break_h.unwrap() + 6.0).abs() < 1e-12);
        assert!((single.launch_angle.unwrap() - 12f64.to_radians()).abs() < 1e-15);

        let demoted = &out.records[1];
        assert_eq!(demoted.outcome, Outcome::NotInPlay);
        assert!(demoted.flags.missing_landing);
        assert!(demoted.landing().is_none());
        assert_eq!(out.names[&PlayerId::from("2")], "Deuce");
    }

    #[test]
    fn missing_required_column_is_an_error() {
        let text = "game_year,pitcher\n2019,1\n";
        let err = ingest_reader(text.as_bytes(), &IngestConfig::default()).unwrap_err();
        assert!(matches!(err, SeamError::MissingColumn(c) if c == "batter"));
    }

    #[test]
    fn far_landing_points_are_dropped() {
        let out =
            ingest(&["2019,1,10,FF,R,R,95,2300,-0.5,1.2,-2,6,6.5,5,-135,-7,125.42,-300,home_run,110,30,Ace"]);
        assert!(out.records[0].flags.missing_landing);
        assert_eq!(out.report.flagged, 1);
    }
}
