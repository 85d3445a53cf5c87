//! Deterministic synthetic pitch data in the Statcast export schema.
//!
//! Used for tests, benchmarks and demos where real tracking data is not
//! available. Players have stable latent traits (repertoire, velocity,
//! release point, batted-ball tendencies) so that similarity pools and
//! matchup densities have real structure to find.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ingest::CoordinateTransform;

pub const HEADER: &str = "game_year,pitcher,batter,player_name,batter_name,pitch_type,stand,p_throws,release_speed,release_spin_rate,pfx_x,pfx_z,release_pos_x,release_pos_z,release_extension,vx0,vy0,vz0,hc_x,hc_y,events,launch_speed,launch_angle";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureConfig {
    pub pitches: usize,
    pub pitchers: usize,
    pub batters: usize,
    pub seasons: Vec<u16>,
    pub seed: u64,
}

impl FixtureConfig {
    /// Roughly the player/pitch ratio of a real season, scaled down.
    pub fn with_pitches(pitches: usize, seed: u64) -> Self {
        Self {
            pitches,
            pitchers: (pitches / 800).clamp(4, 400),
            batters: (pitches / 350).clamp(6, 900),
            seasons: vec![2019],
            seed,
        }
    }
}

/// (code, base velocity, base spin, pfx_x inches for a righty, pfx_z inches)
const ARSENAL: [(&str, f64, f64, f64, f64); 9] = [
    ("FF", 94.0, 2300.0, -6.0, 15.0),
    ("SI", 93.0, 2150.0, -14.0, 8.0),
    ("FC", 89.0, 2400.0, 2.0, 8.0),
    ("SL", 85.0, 2450.0, 5.0, 1.0),
    ("CU", 79.0, 2600.0, 7.0, -9.0),
    ("CH", 85.0, 1750.0, -13.0, 6.0),
    ("FS", 86.0, 1400.0, -9.0, 3.0),
    ("ST", 82.0, 2600.0, 14.0, 1.0),
    ("FT", 92.5, 2150.0, -15.0, 9.0),
];

struct Pitch {
    code: &'static str,
    usage: f64,
    velo: f64,
    spin: f64,
    pfx_x: f64,
    pfx_z: f64,
}

struct Pitcher {
    id: u32,
    throws: char,
    release_x: f64,
    release_z: f64,
    extension: f64,
    pitches: Vec<Pitch>,
}

struct Batter {
    id: u32,
    stand: char,
    exit_velo: f64,
    launch_angle: f64,
    pull_bias: f64,
}

fn normal(mean: f64, sd: f64) -> Normal<f64> {
    Normal::new(mean, sd).expect("finite normal parameters")
}

fn make_pitchers(n: usize, rng: &mut ChaCha8Rng) -> Vec<Pitcher> {
    (0..n)
        .map(|i| {
            let throws = if rng.random::<f64>() < 0.3 { 'L' } else { 'R' };
            let side = if throws == 'L' { -1.0 } else { 1.0 };
            let n_types = rng.random_range(3..=5);
            let mut codes: Vec<usize> = (0..ARSENAL.len()).collect();
            // always a fastball of some kind first
            let fastball = if rng.random::<f64>() < 0.7 { 0 } else { 1 };
            codes.retain(|&c| c != fastball);
            let mut chosen = vec![fastball];
            while chosen.len() < n_types {
                let k = rng.random_range(0..codes.len());
                chosen.push(codes.remove(k));
            }
            let raw_usage: Vec<f64> = chosen
                .iter()
                .enumerate()
                .map(|(k, _)| if k == 0 { 2.5 } else { 0.5 + rng.random::<f64>() })
                .collect();
            let total: f64 = raw_usage.iter().sum();
            let velo_shift = normal(0.0, 2.0).sample(rng);
            let pitches = chosen
                .iter()
                .zip(&raw_usage)
                .map(|(&c, u)| {
                    let (code, velo, spin, px, pz) = ARSENAL[c];
                    Pitch {
                        // knuckle-curves and forkballs appear under their raw labels
                        code: match code {
                            "CU" if rng.random::<f64>() < 0.3 => "KC",
                            "FS" if rng.random::<f64>() < 0.2 => "FO",
                            other => other,
                        },
                        usage: u / total,
                        velo: velo + velo_shift + normal(0.0, 1.0).sample(rng),
                        spin: spin + normal(0.0, 120.0).sample(rng),
                        pfx_x: side * (px + normal(0.0, 2.0).sample(rng)),
                        pfx_z: pz + normal(0.0, 2.0).sample(rng),
                    }
                })
                .collect();
            Pitcher {
                id: 600_000 + i as u32,
                throws,
                release_x: side * (-1.8 + normal(0.0, 0.5).sample(rng)),
                release_z: 5.9 + normal(0.0, 0.3).sample(rng),
                extension: 6.3 + normal(0.0, 0.3).sample(rng),
                pitches,
            }
        })
        .collect()
}

fn make_batters(n: usize, rng: &mut ChaCha8Rng) -> Vec<Batter> {
    (0..n)
        .map(|k| {
            let u = rng.random::<f64>();
            let stand = if u < 0.1 {
                'S'
            } else if u < 0.45 {
                'L'
            } else {
                'R'
            };
            Batter {
                id: 400_000 + k as u32,
                stand,
                exit_velo: 88.5 + normal(0.0, 2.5).sample(rng),
                launch_angle: 12.0 + normal(0.0, 5.0).sample(rng),
                pull_bias: normal(-0.12, 0.1).sample(rng),
            }
        })
        .collect()
}

fn distance_for(ev: f64, la: f64) -> f64 {
    if la < 10.0 {
        // grounders stop in or just past the infield
        (40.0 + 1.4 * (ev - 50.0).max(0.0)).min(170.0)
    } else if la > 50.0 {
        (ev * 1.4).min(220.0)
    } else {
        // carry peaks near 28 degrees
        let carry = 1.0 - ((la - 28.0) / 25.0).powi(2);
        (ev * 4.3 * carry.max(0.35)).clamp(90.0, 470.0)
    }
}

fn hit_outcome(distance: f64, field_angle: f64, la: f64, u: f64) -> &'static str {
    let a = field_angle.abs().to_degrees();
    if distance > 375.0 + 25.0 * (a / 45.0) && la > 18.0 {
        return "home_run";
    }
    let p = if la < 10.0 {
        // grounders: holes between fielders
        let gap = ((a / 15.0).fract() - 0.5).abs();
        [0.72 + 0.3 * gap, 0.25 - 0.3 * gap, 0.02, 0.01]
    } else if distance < 200.0 {
        [0.35, 0.58, 0.06, 0.01]
    } else if distance < 320.0 {
        [0.55, 0.25, 0.18, 0.02]
    } else {
        let gap = (a > 15.0 && a < 35.0) as u8 as f64;
        [0.6 - 0.1 * gap, 0.02, 0.32 + 0.05 * gap, 0.06 + 0.05 * gap]
    };
    let labels = ["field_out", "single", "double", "triple"];
    let mut acc = 0.0;
    for (label, q) in labels.iter().zip(p) {
        acc += q;
        if u < acc {
            return label;
        }
    }
    "field_out"
}

fn fmt_f(out: &mut String, v: f64, digits: usize) {
    let _ = write!(out, "{v:.digits$}");
}

/// Generates the CSV text, header included.
pub fn generate_csv(config: &FixtureConfig) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let pitchers = make_pitchers(config.pitchers.max(1), &mut rng);
    let batters = make_batters(config.batters.max(1), &mut rng);
    let transform = CoordinateTransform::default();
    let seasons = if config.seasons.is_empty() {
        vec![2019]
    } else {
        config.seasons.clone()
    };
    let unit = normal(0.0, 1.0);

    let mut out = String::with_capacity(config.pitches * 160);
    out.push_str(HEADER);
    out.push('\n');
    for i in 0..config.pitches {
        let season = seasons[i % seasons.len()];
        // a few workhorses face more batters
        let pi = ((rng.random::<f64>().powf(1.3)) * pitchers.len() as f64) as usize;
        let p = &pitchers[pi.min(pitchers.len() - 1)];
        let b = &batters[rng.random_range(0..batters.len())];

        let mut u = rng.random::<f64>();
        let mut pitch = &p.pitches[p.pitches.len() - 1];
        for candidate in &p.pitches {
            if u < candidate.usage {
                pitch = candidate;
                break;
            }
            u -= candidate.usage;
        }
        let rare = rng.random::<f64>();
        let code = if rare < 0.002 {
            "EP"
        } else if rare < 0.003 {
            "KN"
        } else if rare < 0.0035 {
            "PO"
        } else {
            pitch.code
        };

        let stand = match b.stand {
            'S' => {
                if p.throws == 'L' {
                    'R'
                } else {
                    'L'
                }
            }
            s => s,
        };
        let velo = pitch.velo + 0.8 * unit.sample(&mut rng);
        let spin = pitch.spin + 60.0 * unit.sample(&mut rng);
        let pfx_x = (pitch.pfx_x + 1.2 * unit.sample(&mut rng)) / 12.0;
        let pfx_z = (pitch.pfx_z + 1.2 * unit.sample(&mut rng)) / 12.0;
        let rel_x = p.release_x + 0.15 * unit.sample(&mut rng);
        let rel_z = p.release_z + 0.1 * unit.sample(&mut rng);
        let ext = p.extension + 0.1 * unit.sample(&mut rng);
        let speed_fts = velo * 1.466_67;
        let vy0 = -speed_fts * 0.995;
        let vx0 = -rel_x * 2.2 + 2.0 * unit.sample(&mut rng);
        let vz0 = -4.5 + 1.5 * (pitch.pfx_z / 12.0) + 1.5 * unit.sample(&mut rng);

        let r = rng.random::<f64>();
        let mut hc = None;
        let mut events = "";
        let mut ev_la = None;
        if r < 0.175 {
            let ev = (b.exit_velo + 0.15 * (velo - 90.0) + 13.0 * unit.sample(&mut rng)).clamp(35.0, 118.0);
            let la = b.launch_angle + 24.0 * unit.sample(&mut rng);
            // spray: negative = pulled; breaking balls away get pushed a bit
            let away = if (stand == 'R') == (p.throws == 'R') {
                1.0
            } else {
                -1.0
            };
            let push = away * 0.04 * (pitch.pfx_x.abs() / 10.0);
            let spray = (b.pull_bias + push + 0.33 * unit.sample(&mut rng)).clamp(-0.78, 0.78);
            let field_angle = if stand == 'R' { spray } else { -spray };
            let dist = (distance_for(ev, la) * (1.0 + 0.08 * unit.sample(&mut rng))).max(20.0);
            let x = dist * field_angle.sin();
            let y = dist * field_angle.cos();
            events = hit_outcome(dist, field_angle, la, rng.random::<f64>());
            hc = Some(transform.raw(x, y));
            ev_la = Some((ev, la));
        } else if r < 0.235 {
            events = "strikeout";
        } else if r < 0.255 {
            events = "walk";
        }

        let _ = write!(
            out,
            "{season},{},{},Pitcher {},Batter {},{code},{stand},{},",
            p.id,
            b.id,
            p.id - 600_000,
            b.id - 400_000,
            p.throws
        );
        fmt_f(&mut out, velo, 1);
        out.push(',');
        fmt_f(&mut out, spin, 0);
        out.push(',');
        fmt_f(&mut out, pfx_x, 4);
        out.push(',');
        fmt_f(&mut out, pfx_z, 4);
        out.push(',');
        fmt_f(&mut out, rel_x, 2);
        out.push(',');
        fmt_f(&mut out, rel_z, 2);
        out.push(',');
        fmt_f(&mut out, ext, 1);
        out.push(',');
        fmt_f(&mut out, vx0, 3);
        out.push(',');
        fmt_f(&mut out, vy0, 3);
        out.push(',');
        fmt_f(&mut out, vz0, 3);
        out.push(',');
        if let Some((hx, hy)) = hc {
            fmt_f(&mut out, hx, 2);
            out.push(',');
            fmt_f(&mut out, hy, 2);
        } else {
            out.push(',');
        }
        out.push(',');
        out.push_str(events);
        out.push(',');
        if let Some((ev, la)) = ev_la {
            fmt_f(&mut out, ev, 1);
            out.push(',');
            fmt_f(&mut out, la, 0);
        } else {
            out.push(',');
        }
        out.push('\n');
    }
    out
}
