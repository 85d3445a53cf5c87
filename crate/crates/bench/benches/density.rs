use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use seam_bench::landing_points;
use seam_core::density::{kde2, kde2_weighted, select_bandwidth, FieldGrid};

fn kde(c: &mut Criterion) {
    let grid = FieldGrid::default();
    let mut group = c.benchmark_group("kde2_200x200");
    for n in [10, 100, 1000, 5000] {
        let pts = landing_points(n, 1);
        let bw = select_bandwidth(&pts, None, &grid).unwrap().bandwidth;
        let weights: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64).collect();
        group.bench_with_input(BenchmarkId::new("plain", n), &pts, |b, pts| {
            b.iter(|| kde2(pts, &bw, &grid).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("weighted", n), &pts, |b, pts| {
            b.iter(|| kde2_weighted(pts, &weights, &bw, &grid).unwrap())
        });
    }
    group.finish();
}

fn bandwidth(c: &mut Criterion) {
    let grid = FieldGrid::default();
    let pts = landing_points(5000, 2);
    let weights: Vec<f64> = (0..pts.len()).map(|i| 1.0 / (1 + i % 13) as f64).collect();
    c.bench_function("select_bandwidth_weighted_5000", |b| {
        b.iter(|| select_bandwidth(&pts, Some(&weights), &grid).unwrap())
    });
}

criterion_group!(benches, kde, bandwidth);
criterion_main!(benches);
