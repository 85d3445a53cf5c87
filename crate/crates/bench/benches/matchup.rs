use criterion::{criterion_group, criterion_main, Criterion};
use seam_bench::season_service;
use seam_core::ServiceConfig;

fn matchup(c: &mut Criterion) {
    let (service, request) = season_service(50_000, ServiceConfig::default());
    let mut group = c.benchmark_group("matchup_50k");
    group.sample_size(20);
    group.bench_function("compute_matchup_200x200", |b| {
        b.iter(|| service.compute_matchup(&request).unwrap())
    });
    group.bench_function("similar_players", |b| {
        let req = seam_core::service::SimilarRequest {
            player_id: request.pitcher_id.clone(),
            ..Default::default()
        };
        b.iter(|| service.similar_players(&req).unwrap())
    });
    group.finish();
}

criterion_group!(benches, matchup);
criterion_main!(benches);
