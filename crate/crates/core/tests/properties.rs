use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use seam_core::characteristics::{build_profiles, ProfileConfig};
use seam_core::density::{
    kde2, kde2_weighted, mix, normal_reference_bandwidth, Bandwidth, DensityGrid, FieldGrid,
};
use seam_core::fixture::{generate_csv, FixtureConfig};
use seam_core::ingest::{ingest_reader, spray_angle, CoordinateTransform, Hand, IngestConfig, PlayerId};
use seam_core::outcomes::{expected_outcomes, OutcomeField};
use seam_core::similarity::{
    similarity_score, slider_to_metric, FeatureGroups, ScoredCandidate, SimilarityPool,
};
use seam_core::synthesis::BlendWeights;

fn small_grid() -> FieldGrid {
    FieldGrid::with_resolution(41, 37).unwrap()
}

fn point() -> impl Strategy<Value = [f64; 2]> {
    (-240.0..240.0f64, -20.0..440.0f64).prop_map(|(x, y)| [x, y])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kde_is_nonnegative_and_order_free(
        pts in prop::collection::vec(point(), 1..60),
        // at least one node spacing, as select_bandwidth guarantees
        sx in 14.0..80.0f64,
        sy in 14.0..80.0f64,
        seed in any::<u64>(),
    ) {
        let g = small_grid();
        let bw = Bandwidth::new(sx, sy).unwrap();
        let a = kde2(&pts, &bw, &g).unwrap();
        let mut shuffled = pts.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let b = kde2(&shuffled, &bw, &g).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!(*x >= 0.0);
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300) + 1e-300);
        }
        prop_assert!(a.mass() <= 1.0 + 1e-3);
    }

    #[test]
    fn uniform_weights_match_unweighted(
        pts in prop::collection::vec(point(), 1..40),
        w in 0.01..10.0f64,
    ) {
        let g = small_grid();
        let bw = Bandwidth::new(20.0, 25.0).unwrap();
        let a = kde2(&pts, &bw, &g).unwrap();
        let b = kde2_weighted(&pts, &vec![w; pts.len()], &bw, &g).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() <= 1e-12 * x.max(1e-12));
        }
        prop_assert!((b.n_effective - pts.len() as f64).abs() < 1e-9);
    }

    #[test]
    fn bandwidth_is_translation_invariant(
        xs in prop::collection::vec(-200.0..200.0f64, 2..80),
        shift in -100.0..100.0f64,
    ) {
        let a = normal_reference_bandwidth(&xs);
        let moved: Vec<f64> = xs.iter().map(|x| x + shift).collect();
        let b = normal_reference_bandwidth(&moved);
        prop_assert!(a.h > 0.0);
        prop_assert!((a.h - b.h).abs() <= 1e-9 * a.h.max(1.0));
    }

    #[test]
    fn mix_is_convex(a in 0.0..=1.0f64, p in point(), q in point()) {
        let g = small_grid();
        let bw = Bandwidth::new(30.0, 30.0).unwrap();
        let d1 = kde2(&[p], &bw, &g).unwrap();
        let d2 = kde2(&[q], &bw, &g).unwrap();
        let m = mix(&[&d1, &d2], &[a, 1.0 - a]).unwrap();
        for i in 0..m.values.len() {
            let lo = d1.values[i].min(d2.values[i]);
            let hi = d1.values[i].max(d2.values[i]);
            prop_assert!(m.values[i] >= lo - 1e-18 && m.values[i] <= hi + 1e-18);
        }
    }

    #[test]
    fn binary_encoding_round_trips(values in prop::collection::vec(0.0..1.0f64, 12), n in 0.0..1e4f64) {
        let g = FieldGrid::new([0.0, 3.0], [0.0, 2.0], 4, 3).unwrap();
        let d = DensityGrid::new(g, values, n).unwrap();
        prop_assert_eq!(DensityGrid::from_bytes(&d.to_bytes()).unwrap(), d);
    }

    #[test]
    fn downsample_keeps_node_values(nx in 2usize..120, ny in 2usize..120, cap in 2usize..50) {
        let g = FieldGrid::with_resolution(nx, ny).unwrap();
        let d = DensityGrid::from_fn(g, |x, y| (x * 0.01).sin().abs() + y.abs() * 1e-3);
        let s = d.downsample(cap);
        prop_assert!(s.grid.nx <= cap.max(2) && s.grid.ny <= cap.max(2));
        for iy in 0..s.grid.ny {
            for ix in 0..s.grid.nx {
                let want = (s.grid.node_x(ix) * 0.01).sin().abs() + s.grid.node_y(iy).abs() * 1e-3;
                prop_assert!((s.value(ix, iy) - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn similarity_is_bounded_and_symmetric(
        a in prop::collection::vec(-4.0..4.0f64, 9),
        b in prop::collection::vec(-4.0..4.0f64, 9),
        v in prop::collection::vec(0.0..2.0f64, 9),
    ) {
        let s = similarity_score(&a, &b, &v);
        prop_assert!(s > 0.0 && s <= 1.0);
        prop_assert_eq!(s, similarity_score(&b, &a, &v));
        prop_assert_eq!(similarity_score(&a, &a, &v), 1.0);
    }

    #[test]
    fn slider_metric_has_unit_trace(ratio in -1.0..2.0f64) {
        for groups in [FeatureGroups::PITCHER, FeatureGroups::BATTER] {
            let m = slider_to_metric(ratio, groups);
            prop_assert!((m.entries.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(m.entries.iter().all(|e| *e >= 0.0));
            prop_assert_eq!(m.clamped, !(0.0..=1.0).contains(&ratio));
        }
    }

    #[test]
    fn pool_weights_are_sorted_and_normalized(scores in prop::collection::vec(1e-6..1.0f64, 1..30)) {
        let pool = SimilarityPool::from_scores(
            scores
                .iter()
                .enumerate()
                .map(|(k, s)| ScoredCandidate {
                    player_id: PlayerId::new(format!("{k:03}")),
                    score: *s,
                    n_matchup: k,
                    shared_types: vec![],
                })
                .collect(),
        );
        let total: f64 = pool.entries.iter().map(|e| e.weight).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(pool.entries.windows(2).all(|w| w[0].score >= w[1].score));
    }

    #[test]
    fn lambda_is_monotone_in_own_count(n in 0.0..500.0f64, np in 0.0..500.0f64, nb in 0.0..500.0f64, extra in 0.1..100.0f64) {
        prop_assume!(n + np + nb > 0.0);
        let a = BlendWeights::from_counts(n, np, nb).unwrap();
        let b = BlendWeights::from_counts(n + extra, np, nb).unwrap();
        prop_assert!(b.lambda >= a.lambda);
        prop_assert!((a.as_array().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coordinates_round_trip(x in -400.0..400.0f64, y in -100.0..500.0f64) {
        let t = CoordinateTransform::default();
        let (hx, hy) = t.raw(x, y);
        let (x2, y2) = t.adjust(hx, hy);
        prop_assert!((x - x2).abs() < 1e-9 && (y - y2).abs() < 1e-9);
    }

    #[test]
    fn spray_angle_mirrors_by_hand(x in -400.0..400.0f64, y in 0.5..500.0f64) {
        let (r, _) = spray_angle(x, y, Hand::R);
        let (l, _) = spray_angle(x, y, Hand::L);
        prop_assert_eq!(r, -l);
        prop_assert!(r.abs() <= std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn expected_outcomes_are_a_distribution(p in point(), s in 5.0..60.0f64, scale in 0.5..1.2f64) {
        let g = small_grid();
        let d = kde2(&[p], &Bandwidth::new(s, s).unwrap(), &g).unwrap();
        let total = d.mass();
        let values = d.values.iter().map(|v| v * scale / total).collect();
        let d = DensityGrid::new(g, values, 1.0).unwrap();
        let mut f = OutcomeField::uniform(&g, 10.0, [0.6, 0.2, 0.1, 0.03, 0.07]).unwrap();
        for b in 0..f.nbx * f.nby {
            let k = b % 5;
            let mut v = [0.1; 5];
            v[k] = 0.6;
            f.set_bin(b, v);
        }
        let e = expected_outcomes(&d, &f).unwrap();
        let v = e.vector();
        prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(v.iter().all(|x| *x >= 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn profiles_ignore_record_order(seed in any::<u64>()) {
        let text = generate_csv(&FixtureConfig::with_pitches(3000, 21));
        let out = ingest_reader(text.as_bytes(), &IngestConfig::default()).unwrap();
        let mut shuffled = out.records.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let config = ProfileConfig::default();
        prop_assert_eq!(build_profiles(&out.records, 2019, &config), build_profiles(&shuffled, 2019, &config));
    }
}
