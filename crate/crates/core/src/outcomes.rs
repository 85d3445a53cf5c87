//! Binned outcome probabilities and expected-outcome metrics.
//!
//! The field is cut into square bins (10 ft by default). Each bin holds a
//! smoothed multinomial estimate of `(out, 1B, 2B, 3B, HR)`. Expectations
//! under a density are discrete integrals: every grid node's cell mass is
//! assigned to the bin containing the node.

use serde::{Deserialize, Serialize};

use crate::density::{DensityGrid, FieldGrid};
use crate::error::{Result, SeamError};
use crate::ingest::PitchRecord;

pub const N_OUTCOMES: usize = 5;

/// Minimum density mass accepted by [`expected_outcomes`].
pub const MIN_DENSITY_MASS: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutcomeConfig {
    pub bin_size: f64,
    /// Dirichlet prior strength; each bin gets `pseudo_count * global` added.
    pub pseudo_count: f64,
}

impl Default for OutcomeConfig {
    fn default() -> Self {
        Self {
            bin_size: 10.0,
            pseudo_count: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeField {
    pub origin: [f64; 2],
    pub extent: [f64; 2],
    pub bin_size: f64,
    pub nbx: usize,
    pub nby: usize,
    /// Row-major per-bin probability vectors.
    pub probabilities: Vec<[f64; N_OUTCOMES]>,
    pub support: Vec<usize>,
    pub global: [f64; N_OUTCOMES],
}

impl OutcomeField {
    /// Bins covering `grid`'s extent with every bin set to `global`.
    pub fn uniform(grid: &FieldGrid, bin_size: f64, global: [f64; N_OUTCOMES]) -> Result<Self> {
        if !(bin_size.is_finite() && bin_size > 0.0) {
            return Err(SeamError::InvalidArgument(format!("bin size {bin_size}")));
        }
        let nbx = (((grid.x_range[1] - grid.x_range[0]) / bin_size).ceil() as usize).max(1);
        let nby = (((grid.y_range[1] - grid.y_range[0]) / bin_size).ceil() as usize).max(1);
        Ok(Self {
            origin: [grid.x_range[0], grid.y_range[0]],
            extent: [grid.x_range[1], grid.y_range[1]],
            bin_size,
            nbx,
            nby,
            probabilities: vec![global; nbx * nby],
            support: vec![0; nbx * nby],
            global,
        })
    }

    /// Bin holding `(x, y)`; points on the far edge fall in the last bin.
    pub fn bin_of(&self, x: f64, y: f64) -> Option<usize> {
        if !(x >= self.origin[0] && x <= self.extent[0] && y >= self.origin[1] && y <= self.extent[1]) {
            return None;
        }
        let bx = (((x - self.origin[0]) / self.bin_size).floor() as usize).min(self.nbx - 1);
        let by = (((y - self.origin[1]) / self.bin_size).floor() as usize).min(self.nby - 1);
        Some(by * self.nbx + bx)
    }

    pub fn set_bin(&mut self, bin: usize, p: [f64; N_OUTCOMES]) {
        self.probabilities[bin] = p;
    }

    pub fn probabilities_at(&self, x: f64, y: f64) -> Option<[f64; N_OUTCOMES]> {
        self.bin_of(x, y).map(|b| self.probabilities[b])
    }
}

/// Smoothed per-bin outcome proportions from balls in play over `grid`.
/// Empty bins take the global distribution.
pub fn fit_outcome_field<'a>(
    records: impl IntoIterator<Item = &'a PitchRecord>,
    grid: &FieldGrid,
    config: &OutcomeConfig,
) -> Result<OutcomeField> {
    let mut field = OutcomeField::uniform(grid, config.bin_size, [0.0; N_OUTCOMES])?;
    let mut counts = vec![[0usize; N_OUTCOMES]; field.nbx * field.nby];
    let mut global = [0usize; N_OUTCOMES];
    for r in records {
        let (Some([x, y]), Some(k)) = (r.landing(), r.outcome.index()) else {
            continue;
        };
        global[k] += 1;
        if let Some(b) = field.bin_of(x, y) {
            counts[b][k] += 1;
        }
    }
    let total: usize = global.iter().sum();
    if total == 0 {
        return Err(SeamError::InvalidArgument(
            "outcome field needs at least one ball in play".into(),
        ));
    }
    let global: [f64; N_OUTCOMES] = std::array::from_fn(|k| global[k] as f64 / total as f64);
    let alpha = config.pseudo_count.max(0.0);
    for (b, c) in counts.iter().enumerate() {
        let n: usize = c.iter().sum();
        field.support[b] = n;
        let denom = n as f64 + alpha;
        field.probabilities[b] = if denom > 0.0 {
            std::array::from_fn(|k| (c[k] as f64 + alpha * global[k]) / denom)
        } else {
            global
        };
    }
    field.global = global;
    Ok(field)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplayCounts {
    pub singles: i64,
    pub doubles: i64,
    pub triples: i64,
    pub hr: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedOutcomes {
    #[serde(rename = "e_O")]
    pub e_out: f64,
    #[serde(rename = "e_1B")]
    pub e_single: f64,
    #[serde(rename = "e_2B")]
    pub e_double: f64,
    #[serde(rename = "e_3B")]
    pub e_triple: f64,
    #[serde(rename = "e_HR")]
    pub e_home_run: f64,
    #[serde(rename = "xBABIP")]
    pub x_babip: f64,
    #[serde(rename = "xBsCON")]
    pub x_bs_con: f64,
    pub display: DisplayCounts,
}

impl ExpectedOutcomes {
    pub fn from_vector(e: [f64; N_OUTCOMES]) -> Self {
        let floor100 = |v: f64| (100.0 * v).floor() as i64;
        Self {
            e_out: e[0],
            e_single: e[1],
            e_double: e[2],
            e_triple: e[3],
            e_home_run: e[4],
            x_babip: e[1] + e[2] + e[3],
            x_bs_con: e[1] + 2.0 * e[2] + 3.0 * e[3] + 4.0 * e[4],
            display: DisplayCounts {
                singles: floor100(e[1]),
                doubles: floor100(e[2]),
                triples: floor100(e[3]),
                hr: floor100(e[4]),
            },
        }
    }

    pub fn vector(&self) -> [f64; N_OUTCOMES] {
        [
            self.e_out,
            self.e_single,
            self.e_double,
            self.e_triple,
            self.e_home_run,
        ]
    }
}

/// Expected outcome vector of a density under the field.
///
/// Mass at nodes outside the field, and mass missing from the grid
/// (`1 - total`), counts as outs. A total above 1 (quadrature overshoot) is
/// rescaled to 1.
pub fn expected_outcomes(density: &DensityGrid, field: &OutcomeField) -> Result<ExpectedOutcomes> {
    let grid = &density.grid;
    let area = grid.cell_area();
    let mut e = [0.0; N_OUTCOMES];
    let mut total = 0.0;
    for iy in 0..grid.ny {
        let y = grid.node_y(iy);
        for ix in 0..grid.nx {
            let m = density.value(ix, iy) * area;
            if m == 0.0 {
                continue;
            }
            total += m;
            match field.bin_of(grid.node_x(ix), y) {
                Some(b) => {
                    let p = &field.probabilities[b];
                    for k in 0..N_OUTCOMES {
                        e[k] += p[k] * m;
                    }
                }
                None => e[0] += m,
            }
        }
    }
    if total.is_nan() || total < MIN_DENSITY_MASS {
        return Err(SeamError::DegenerateDensity(total));
    }
    if total > 1.0 {
        e.iter_mut().for_each(|v| *v /= total);
    } else {
        e[0] += 1.0 - total;
    }
    Ok(ExpectedOutcomes::from_vector(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Hand, Outcome, PitchType, PlayerId, RecordFlags};

    fn bip(x: f64, y: f64, outcome: Outcome) -> PitchRecord {
        PitchRecord {
            season: 2019,
            pitcher_id: PlayerId::from("p"),
            batter_id: PlayerId::from("b"),
            pitch_type: PitchType::FF,
            bat_side: Hand::R,
            throw_side: Hand::R,
            release_speed: None,
            release_spin: None,
            break_h: None,
            break_v: None,
            release_pos_x: None,
            release_pos_z: None,
            extension: None,
            vx0: None,
            vy0: None,
            vz0: None,
            launch_h: None,
            launch_v: None,
            exit_velocity: None,
            launch_angle: None,
            landing_x: Some(x),
            landing_y: Some(y),
            spray_angle: None,
            outcome,
            flags: RecordFlags::default(),
        }
    }

    #[test]
    fn smoothed_bin_proportions() {
        let grid = FieldGrid::default();
        let mut recs: Vec<_> = (0..10).map(|_| bip(5.0, 105.0, Outcome::Out)).collect();
        recs.extend((0..10).map(|_| bip(-95.0, 305.0, Outcome::Single)));
        let f = fit_outcome_field(&recs, &grid, &OutcomeConfig::default()).unwrap();
        assert_eq!(f.global, [0.5, 0.5, 0.0, 0.0, 0.0]);
        // (10 + 5 * 0.5) / 15 outs, (0 + 5 * 0.5) / 15 singles
        let p = f.probabilities_at(5.0, 105.0).unwrap();
        assert!((p[0] - 12.5 / 15.0).abs() < 1e-15);
        assert!((p[1] - 2.5 / 15.0).abs() < 1e-15);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(f.support[f.bin_of(5.0, 105.0).unwrap()], 10);
        // empty bin
        assert_eq!(f.probabilities_at(200.0, 400.0).unwrap(), f.global);
    }

    #[test]
    fn single_home_run_without_smoothing() {
        let grid = FieldGrid::default();
        let recs = vec![bip(0.0, 400.0, Outcome::HomeRun), bip(50.0, 100.0, Outcome::Out)];
        let cfg = OutcomeConfig {
            pseudo_count: 0.0,
            ..Default::default()
        };
        let f = fit_outcome_field(&recs, &grid, &cfg).unwrap();
        assert_eq!(f.probabilities_at(0.0, 400.0).unwrap(), [0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(
            f.probabilities_at(-200.0, 0.0).unwrap(),
            [0.5, 0.0, 0.0, 0.0, 0.5]
        );
    }

    #[test]
    fn bins_are_ten_feet_over_the_grid() {
        let f = OutcomeField::uniform(&FieldGrid::default(), 10.0, [1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!((f.nbx, f.nby), (50, 48));
        assert_eq!(f.bin_of(-250.0, -30.0), Some(0));
        assert_eq!(f.bin_of(250.0, 450.0), Some(50 * 48 - 1));
        assert_eq!(f.bin_of(-240.0, -30.0), Some(1));
        assert_eq!(f.bin_of(0.0, 500.0), None);
    }

    /// Two nodes, one per bin, each holding half the mass exactly.
    fn two_bin_fixture(p_left: [f64; 5], p_right: [f64; 5]) -> (DensityGrid, OutcomeField) {
        let grid = FieldGrid::new([0.0, 16.0], [0.0, 4.0], 5, 2).unwrap();
        assert_eq!(grid.cell_area(), 16.0);
        let mut values = vec![0.0; 10];
        values[0] = 1.0 / 32.0; // x = 0
        values[3] = 1.0 / 32.0; // x = 12
        let d = DensityGrid::new(grid, values, 2.0).unwrap();
        let mut f = OutcomeField::uniform(&grid, 10.0, [1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        f.set_bin(0, p_left);
        f.set_bin(1, p_right);
        (d, f)
    }

    #[test]
    fn two_bin_split() {
        let (d, f) = two_bin_fixture([0.0, 1.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0, 0.0]);
        let e = expected_outcomes(&d, &f).unwrap();
        assert_eq!(e.x_babip, 0.5);
        assert_eq!(e.display.singles, 50);
        assert_eq!(e.x_bs_con, 0.5);
    }

    #[test]
    fn point_mass_cases() {
        let (d, f) = two_bin_fixture([0.0, 1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0, 0.0]);
        let e = expected_outcomes(&d, &f).unwrap();
        assert_eq!((e.x_babip, e.x_bs_con), (1.0, 1.0));
        assert_eq!(e.display.singles, 100);

        let (d, f) = two_bin_fixture([0.0, 0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 0.0, 0.0, 1.0]);
        let e = expected_outcomes(&d, &f).unwrap();
        assert_eq!(e.x_bs_con, 4.0);
        assert_eq!(e.x_babip, 0.0);
    }

    #[test]
    fn missing_mass_counts_as_outs() {
        let (mut d, f) = two_bin_fixture([0.0, 1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0, 0.0]);
        d.values[3] = 1.0 / 64.0; // total mass 0.75
        let e = expected_outcomes(&d, &f).unwrap();
        assert_eq!(e.e_out, 0.25);
        assert_eq!(e.x_babip, 0.75);
        assert!((e.vector().iter().sum::<f64>() - 1.0).abs() < 1e-15);

        d.values[0] = 0.0;
        assert!(matches!(
            expected_outcomes(&d, &f),
            Err(SeamError::DegenerateDensity(_))
        ));
    }

    #[test]
    fn serialized_names() {
        let e = ExpectedOutcomes::from_vector([0.6, 0.2, 0.1, 0.05, 0.05]);
        let v = serde_json::to_value(e).unwrap();
        for key in ["e_O", "e_1B", "e_2B", "e_3B", "e_HR", "xBABIP", "xBsCON"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["display"]["singles"], 20);
        assert_eq!(v["display"]["hr"], 5);
    }
}
