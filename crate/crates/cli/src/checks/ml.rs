//! Gradient check, reproducibility and the synthetic positioning benchmark.

use csisniff_core::grid::OfdmGrid;
use csisniff_positioning::baseline::{geometric_median, mean_distance};
use csisniff_positioning::eval::{constant_errors, evaluate, metrics_from_errors};
use csisniff_positioning::features::{preprocess, FeatureLayout};
use csisniff_positioning::geometry::{generate, random_split, GeometryConfig};
use csisniff_positioning::gradcheck::{gradient_check, jitter_biases};
use csisniff_positioning::train::{stack_rows, train};
use csisniff_positioning::{Mlp, TrainConfig, DEFAULT_DIMS};
use ndarray::{Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{fail, Outcome};

/// Minimizer of the mean distance on a 1 mm lattice, found coarse to fine.
/// The objective is convex, so the fine search only needs a neighbourhood
/// of the coarse optimum.
pub fn grid_search_median(points: &[[f64; 2]], lo: f64, hi: f64) -> [f64; 2] {
    let search = |cx: f64, cy: f64, half: f64, step: f64| {
        let n = (2.0 * half / step).round() as i64;
        let mut best = (f64::INFINITY, [cx, cy]);
        for i in 0..=n {
            for j in 0..=n {
                let p = [cx - half + i as f64 * step, cy - half + j as f64 * step];
                let f = mean_distance(p, points);
                if f < best.0 {
                    best = (f, p);
                }
            }
        }
        best.1
    };
    let mid = (lo + hi) / 2.0;
    let c = search(mid, mid, (hi - lo) / 2.0, 0.04);
    let c = [(c[0] * 1000.0).round() / 1000.0, (c[1] * 1000.0).round() / 1000.0];
    search(c[0], c[1], 0.08, 0.001)
}

fn gradients(rng: &mut ChaCha8Rng, x5: &Array2<f64>, y5: &Array2<f64>) -> Result<f64, csisniff_positioning::Error> {
    let mut worst = 0.0f64;
    let mut big = Mlp::init(&DEFAULT_DIMS, rng)?;
    jitter_biases(&mut big, 0.05, rng);
    for r in gradient_check(&big, x5.view(), y5.view(), 1e-6, 48, rng)? {
        worst = worst.max(r.rel_error);
    }
    let mut small = Mlp::init(&[12, 10, 8, 6, 4, 2], rng)?;
    jitter_biases(&mut small, 0.1, rng);
    let xs = Array2::from_shape_fn((5, 12), |_| StandardNormal.sample(rng));
    let ys = Array2::from_shape_fn((5, 2), |_| StandardNormal.sample(rng));
    for r in gradient_check(&small, xs.view(), ys.view(), 1e-6, usize::MAX, rng)? {
        worst = worst.max(r.rel_error);
    }
    Ok(worst)
}

pub fn check(points: usize, epochs: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = OfdmGrid::non_ht();
    let geo = GeometryConfig { num_points: points, seed, ..Default::default() };
    let set = match generate(&grid, &geo) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let layout = FeatureLayout::four_sniffers();
    let feats: Result<Vec<_>, _> = set.datapoints.iter().map(|d| preprocess(d, &layout)).collect();
    let x = match feats.and_then(|f| stack_rows(&f)) {
        Ok(x) => x,
        Err(e) => return fail(e),
    };
    let y = Array2::from_shape_fn((points, 2), |(i, j)| set.positions[i][j]);

    let first5: Vec<usize> = (0..5).collect();
    let worst = match gradients(&mut rng, &x.select(Axis(0), &first5), &y.select(Axis(0), &first5)) {
        Ok(w) => w,
        Err(e) => return fail(e),
    };

    let small: Vec<usize> = (0..points.min(1000)).collect();
    let (xs, ys) = (x.select(Axis(0), &small), y.select(Axis(0), &small));
    let rep_cfg = TrainConfig { epochs: 2, seed: seed + 1, ..Default::default() };
    let reproducible = match (train(xs.view(), ys.view(), &rep_cfg), train(xs.view(), ys.view(), &rep_cfg)) {
        (Ok((a, ha)), Ok((b, hb))) => {
            a.flatten().iter().map(|v| v.to_bits()).eq(b.flatten().iter().map(|v| v.to_bits())) && ha == hb
        }
        (Err(e), _) | (_, Err(e)) => return fail(e),
    };

    let (tr, te) = random_split(points, 0.2, seed + 2);
    let (xtr, ytr) = (x.select(Axis(0), &tr), y.select(Axis(0), &tr));
    let (xte, yte) = (x.select(Axis(0), &te), y.select(Axis(0), &te));
    let cfg = TrainConfig { epochs, seed: seed + 3, ..Default::default() };
    let model = match train(xtr.view(), ytr.view(), &cfg) {
        Ok((m, _)) => m,
        Err(e) => return fail(e),
    };
    let mlp = match evaluate(&model, xte.view(), yte.view()) {
        Ok(e) => e.metrics,
        Err(e) => return fail(e),
    };
    let train_pos: Vec<[f64; 2]> = tr.iter().map(|&i| set.positions[i]).collect();
    let gm = geometric_median(&train_pos);
    let base = match metrics_from_errors(&constant_errors(gm, yte.view())) {
        Ok(m) => m,
        Err(e) => return fail(e),
    };
    let oracle = grid_search_median(&train_pos, 0.0, geo.side_m);
    let oracle_dist = (gm[0] - oracle[0]).hypot(gm[1] - oracle[1]);

    let pass = worst < 1e-5 && reproducible && mlp.mean_m < 0.5 * base.mean_m && oracle_dist <= 2e-3;
    (
        pass,
        format!(
            "max gradient rel. error {worst:.1e}; reproducible {reproducible}; {} points, {epochs} epochs: \
             MLP mean {:.3} m / p95 {:.3} m vs baseline mean {:.3} m / p95 {:.3} m (ratio {:.3}); \
             baseline vs 1 mm grid {:.2} mm",
            points,
            mlp.mean_m,
            mlp.p95_m,
            base.mean_m,
            base.p95_m,
            mlp.mean_m / base.mean_m,
            oracle_dist * 1e3
        ),
    )
}
