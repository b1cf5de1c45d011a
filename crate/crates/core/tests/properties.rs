//! Cross-module invariants checked on random inputs.

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use shearwater::boost::{self, fit_learner, ForestParams, GbdtParams, LearnerKind, LearnerParams};
use shearwater::datasets::{build_dataset, build_dataset_with, column_names, fit_thresholds, DatasetMode};
use shearwater::geokin::{accelerations, delta_series, haversine, step_distances, velocities, DeltaMode, LatLon};
use shearwater::matrix::Matrix;
use shearwater::synthgen::{generate_corpus, SynthParams};
use shearwater::trajdata::{load_corpus, parse_trajectory, Corpus, Label, Trajectory, TrajectoryPoint};
use shearwater::trees::{fit_tree_exact, fit_tree_hist, HistogramBins, Node, TreeParams};

fn point() -> impl Strategy<Value = TrajectoryPoint> {
    (
        -180.0..=180.0f64,
        -90.0..=90.0f64,
        0.0..360.0f64,
        -90.0..=90.0f64,
        any::<bool>(),
        0u32..86_400,
        1u32..30,
    )
        .prop_map(
            |(longitude, latitude, sun_azimuth, sun_elevation, daytime, local_time, days)| TrajectoryPoint {
                longitude,
                latitude,
                sun_azimuth,
                sun_elevation,
                daytime,
                elapsed: 0.0,
                local_time,
                days,
            },
        )
}

/// Points with strictly increasing whole-second elapsed times.
fn trajectory(min: usize, max: usize) -> impl Strategy<Value = Trajectory> {
    (
        prop::collection::vec(point(), min..=max),
        prop::collection::vec(1u32..1_000, max),
    )
        .prop_map(|(mut points, gaps)| {
            let mut t = 0.0;
            for (p, g) in points.iter_mut().zip(gaps) {
                p.elapsed = t;
                t += f64::from(g);
            }
            Trajectory::new("b", points).unwrap()
        })
}

fn lat_lon() -> impl Strategy<Value = LatLon> {
    (-90.0..=90.0f64, -180.0..=180.0f64).prop_map(|(lat, lon)| LatLon::new(lat, lon))
}

fn small_corpus(seed: u64, n_birds: usize) -> Corpus {
    generate_corpus(&SynthParams {
        n_birds,
        seed,
        min_points: 12,
        max_points: 30,
        ..SynthParams::default()
    })
    .unwrap()
}

fn labeled_problem(seed: u64, n: usize, d: usize, levels: u32) -> (Matrix, Vec<Label>) {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| f64::from(rng.random_range(0..levels))).collect())
        .collect();
    let mut y: Vec<Label> = rows
        .iter()
        .map(|r| Label::from_bool(r[0] + rng.random_range(-2.0..2.0) > f64::from(levels) / 2.0))
        .collect();
    y[0] = Label::Male;
    y[1] = Label::Female;
    (Matrix::from_rows(&rows), y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trajectory_csv_round_trips(t in trajectory(2, 40)) {
        let back = parse_trajectory("b", &t.to_csv()).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn haversine_is_a_symmetric_metric(a in lat_lon(), b in lat_lon(), c in lat_lon()) {
        let ab = haversine(a, b);
        prop_assert_eq!(ab, haversine(b, a));
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(haversine(a, a), 0.0);
        prop_assert!(ab <= haversine(a, c) + haversine(c, b) + 1e-6);
    }

    #[test]
    fn velocities_ignore_a_time_offset(t in trajectory(2, 30), offset in 0u32..100_000) {
        let shifted: Vec<TrajectoryPoint> = t
            .points()
            .iter()
            .map(|p| TrajectoryPoint { elapsed: p.elapsed + f64::from(offset), ..*p })
            .collect();
        prop_assert_eq!(velocities(t.points()).values, velocities(&shifted).values);
    }

    #[test]
    fn series_lengths(t in trajectory(2, 30)) {
        let n = t.len();
        let v = velocities(t.points());
        prop_assert_eq!(step_distances(t.points()).len(), n - 1);
        prop_assert_eq!(v.len(), n - 1);
        prop_assert_eq!(accelerations(t.points()).len(), n.saturating_sub(2));
        for mode in [DeltaMode::Linear, DeltaMode::Angular] {
            prop_assert_eq!(delta_series(&v, mode).len(), v.len() - 1);
        }
    }

    #[test]
    fn hist_tree_equals_exact_tree_when_lossless(seed in any::<u64>(), n in 2usize..60, d in 1usize..4) {
        use rand::Rng;
        let (x, _) = labeled_problem(seed, n, d, 30);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let params = TreeParams { max_depth: 4, ..TreeParams::default() };
        let exact = fit_tree_exact(&x, &g, &h, &params, &mut ChaCha8Rng::seed_from_u64(1));
        let bins = HistogramBins::fit(&x, 255);
        let hist = fit_tree_hist(&bins.bin_matrix(&x), &g, &h, &bins, &params, &mut ChaCha8Rng::seed_from_u64(1));
        for row in x.rows() {
            prop_assert_eq!(exact.predict(row).to_bits(), hist.predict(row).to_bits());
        }
        for node in &exact.nodes {
            if let Node::Leaf { value } = node {
                prop_assert!(value.is_finite());
            }
        }
        let again = fit_tree_exact(&x, &g, &h, &params, &mut ChaCha8Rng::seed_from_u64(1));
        prop_assert_eq!(again, exact);
    }

    #[test]
    fn pairwise_gradients_sum_to_zero(scores in prop::collection::vec(-5.0..5.0f64, 4..20), seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut y: Vec<Label> = scores.iter().map(|_| Label::from_bool(rng.random_bool(0.5))).collect();
        y[0] = Label::Male;
        y[1] = Label::Female;
        let pairs = boost::sample_pairs(&y, 100 * y.len(), &mut rng);
        let (g, h) = boost::pairwise_grad_hess(&scores, &pairs);
        let total: f64 = g.iter().sum();
        let scale: f64 = g.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        prop_assert!(total.abs() <= 1e-12 * scale, "{}", total);
        prop_assert!(h.iter().all(|v| *v >= 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn corpus_order_ignores_file_enumeration(seed in any::<u64>()) {
        let corpus = small_corpus(seed, 6);
        let dir = tempfile::tempdir().unwrap();
        let mut birds: Vec<&Trajectory> = corpus.trajectories().collect();
        birds.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        for t in birds {
            std::fs::write(dir.path().join(format!("{}.csv", t.bird_id())), t.to_csv()).unwrap();
        }
        let loaded = load_corpus(dir.path(), None).unwrap();
        let ids: Vec<&str> = loaded.bird_ids().collect();
        let want: Vec<&str> = corpus.bird_ids().collect();
        prop_assert_eq!(ids, want);
        for t in corpus.trajectories() {
            prop_assert_eq!(loaded.get(t.bird_id()), Some(t));
        }
    }

    #[test]
    fn schema_depends_only_on_mode(a in any::<u64>(), b in any::<u64>()) {
        for mode in DatasetMode::ALL {
            let x = build_dataset(&small_corpus(a, 4), mode).unwrap();
            let y = build_dataset(&small_corpus(b, 7), mode).unwrap();
            prop_assert_eq!(&x.columns, &y.columns);
            prop_assert_eq!(&x.columns, &column_names(mode));
        }
    }

    #[test]
    fn all_day_birds_have_matching_day_block(seed in any::<u64>()) {
        let day_only: Vec<Trajectory> = small_corpus(seed, 5)
            .trajectories()
            .map(|t| {
                let pts = t.points().iter().map(|p| TrajectoryPoint { daytime: true, ..*p }).collect();
                Trajectory::new(t.bird_id(), pts).unwrap()
            })
            .collect();
        let corpus = Corpus::new(day_only, None).unwrap();
        let together = build_dataset_with(&corpus, &fit_thresholds(&corpus, DatasetMode::Together).unwrap()).unwrap();
        let split = build_dataset_with(&corpus, &fit_thresholds(&corpus, DatasetMode::Split).unwrap()).unwrap();
        for r in 0..together.n_rows() {
            for (c, name) in together.columns.iter().enumerate() {
                let day = split.columns.iter().position(|n| *n == format!("day_{name}")).unwrap();
                let (u, v) = (together.values.get(r, c), split.values.get(r, day));
                prop_assert!(u.to_bits() == v.to_bits() || (u.is_nan() && v.is_nan()), "{name}: {u} vs {v}");
            }
        }
    }

    #[test]
    fn trained_models_are_bit_reproducible(seed in any::<u64>()) {
        let (x, y) = labeled_problem(seed, 60, 4, 50);
        let names: Vec<String> = (0..4).map(|j| format!("f{j}")).collect();
        let gbdt = LearnerParams::Gbdt(GbdtParams { n_rounds: 15, seed, ..GbdtParams::default() });
        let forest = LearnerParams::Forest(ForestParams { n_trees: 15, seed, ..ForestParams::default() });
        for kind in LearnerKind::ALL {
            let params = match kind {
                LearnerKind::LgbRf | LearnerKind::SkRf | LearnerKind::SkEt => forest.clone(),
                LearnerKind::Svc => LearnerParams::Svm(Default::default()),
                _ => gbdt.clone(),
            };
            let a = fit_learner(kind, &params, &x, &y, &names).unwrap();
            let b = fit_learner(kind, &params, &x, &y, &names).unwrap();
            prop_assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        }
    }
}
