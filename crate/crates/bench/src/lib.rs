//! Shared inputs for the criterion benches.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seam_core::fixture::{generate_csv, FixtureConfig};
use seam_core::ingest::{ingest_reader, IngestConfig};
use seam_core::{MatchupRequest, MatchupService, PlayerId, Role, ServiceConfig};

/// `n` landing points spread over the outfield.
pub fn landing_points(n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let angle = rng.random_range(-0.75..0.75f64);
            let dist = rng.random_range(60.0..400.0f64);
            [dist * angle.sin(), dist * angle.cos()]
        })
        .collect()
}

/// A service over a synthetic season of `pitches` rows, and the request for
/// its busiest qualified matchup.
pub fn season_service(pitches: usize, config: ServiceConfig) -> (MatchupService, MatchupRequest) {
    let csv = generate_csv(&FixtureConfig::with_pitches(pitches, 50)).into_bytes();
    let records = ingest_reader(csv.as_slice(), &IngestConfig::default())
        .expect("fixture ingests")
        .records;
    let service = MatchupService::from_csv(config, vec![("season.csv".into(), csv)]).expect("fixture loads");
    let ids = |role| -> Vec<PlayerId> {
        service
            .list_players(role, None)
            .expect("season loaded")
            .into_iter()
            .map(|p| p.player_id)
            .collect()
    };
    let (pitchers, batters) = (ids(Role::Pitcher), ids(Role::Batter));
    let mut counts: HashMap<(&PlayerId, &PlayerId), usize> = HashMap::new();
    for r in records.iter().filter(|r| r.is_ball_in_play()) {
        *counts.entry((&r.pitcher_id, &r.batter_id)).or_default() += 1;
    }
    let (pitcher, batter) = counts
        .into_iter()
        .filter(|((p, b), _)| pitchers.contains(p) && batters.contains(b))
        .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0)))
        .map(|((p, b), _)| (p.clone(), b.clone()))
        .expect("a qualified pair");
    let request = MatchupRequest {
        batter_id: batter,
        pitcher_id: pitcher,
        ..Default::default()
    };
    (service, request)
}
