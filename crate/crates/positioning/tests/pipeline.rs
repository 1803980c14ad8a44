//! Synthetic room to trained model and back through a checkpoint file.

use csisniff_core::grid::OfdmGrid;
use csisniff_positioning::baseline::geometric_median;
use csisniff_positioning::checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
use csisniff_positioning::eval::{constant_errors, evaluate, metrics_from_errors};
use csisniff_positioning::features::{preprocess, FeatureLayout};
use csisniff_positioning::geometry::{generate, random_split, GeometryConfig};
use csisniff_positioning::train::stack_rows;
use csisniff_positioning::{train, TrainConfig};
use ndarray::{Array2, Axis};
use proptest::prelude::*;

#[test]
fn small_network_beats_baseline_and_reloads() {
    let set = generate(&OfdmGrid::non_ht(), &GeometryConfig { num_points: 1500, seed: 8, ..Default::default() }).unwrap();
    let layout = FeatureLayout::four_sniffers();
    let feats: Vec<_> = set.datapoints.iter().map(|d| preprocess(d, &layout).unwrap()).collect();
    let x = stack_rows(&feats).unwrap();
    let y = Array2::from_shape_fn((x.nrows(), 2), |(i, j)| set.positions[i][j]);
    let (tr, te) = random_split(x.nrows(), 0.2, 1);
    let cfg = TrainConfig { dims: vec![832, 64, 32, 2], epochs: 30, learning_rate: 1e-3, batch_size: 32, seed: 2, ..Default::default() };
    let (model, hist) = train(x.select(Axis(0), &tr).view(), y.select(Axis(0), &tr).view(), &cfg).unwrap();
    assert!(hist.last().unwrap().train_loss < hist[0].train_loss);

    let (xte, yte) = (x.select(Axis(0), &te), y.select(Axis(0), &te));
    let m = evaluate(&model, xte.view(), yte.view()).unwrap().metrics;
    let gm = geometric_median(&tr.iter().map(|&i| set.positions[i]).collect::<Vec<_>>());
    let base = metrics_from_errors(&constant_errors(gm, yte.view())).unwrap();
    assert!(m.mean_m < 0.5 * base.mean_m, "{m:?} vs {base:?}");

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.ckpt");
    write_checkpoint(&p, &Checkpoint { model: model.clone(), config: cfg, layout: Some(layout) }).unwrap();
    let back = read_checkpoint(&p).unwrap();
    assert_eq!(evaluate(&back.model, xte.view(), yte.view()).unwrap().metrics, m);
}

proptest! {
    #[test]
    fn evaluate_is_permutation_invariant(seed in 0u64..1000, n in 2usize..30) {
        use rand::{Rng, SeedableRng, seq::SliceRandom};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let model = csisniff_positioning::Mlp::init(&[3, 5, 2], &mut rng).unwrap();
        let x = Array2::from_shape_fn((n, 3), |_| rng.random_range(-1.0..1.0));
        let y = Array2::from_shape_fn((n, 2), |_| rng.random_range(-1.0..1.0));
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let a = evaluate(&model, x.view(), y.view()).unwrap().metrics;
        let b = evaluate(&model, x.select(Axis(0), &perm).view(), y.select(Axis(0), &perm).view()).unwrap().metrics;
        prop_assert!((a.mean_m - b.mean_m).abs() < 1e-12);
        prop_assert_eq!(a.p95_m, b.p95_m);
    }

    #[test]
    fn median_objective_not_worse_than_mean(pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..40)) {
        use csisniff_positioning::baseline::mean_distance;
        let p: Vec<[f64; 2]> = pts.iter().map(|&(a, b)| [a, b]).collect();
        let c = [p.iter().map(|q| q[0]).sum::<f64>() / p.len() as f64, p.iter().map(|q| q[1]).sum::<f64>() / p.len() as f64];
        let gm = geometric_median(&p);
        prop_assert!(mean_distance(gm, &p) <= mean_distance(c, &p) + 1e-9);
    }

    #[test]
    fn features_have_unit_norm(seed in 0u64..500) {
        let set = generate(&OfdmGrid::non_ht(), &GeometryConfig { num_points: 2, seed, ..Default::default() }).unwrap();
        for d in &set.datapoints {
            let f = preprocess(d, &FeatureLayout::four_sniffers()).unwrap();
            prop_assert!((f.dot(&f).sqrt() - 1.0).abs() < 1e-6);
            prop_assert!(f.iter().all(|&v| v >= 0.0));
        }
    }
}
