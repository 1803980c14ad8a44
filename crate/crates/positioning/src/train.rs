//! Mini-batch Adam training with step decay.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::mlp::{Mlp, Params, DEFAULT_DIMS};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub dims: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub decay_period_epochs: usize,
    pub decay_factor: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dims: DEFAULT_DIMS.to_vec(),
            epochs: 50,
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            decay_period_epochs: 20,
            decay_factor: 0.1,
            batch_size: 128,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.epochs == 0 || self.batch_size == 0 || self.decay_period_epochs == 0 {
            return bad("epochs, batch_size and decay_period_epochs must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and non-negative");
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return bad("decay_factor must lie in (0, 1]");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.epsilon <= 0.0 {
            return bad("Adam parameters out of range");
        }
        Ok(())
    }

    /// Step size during 0-based `epoch`.
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate * self.decay_factor.powi((epoch / self.decay_period_epochs) as i32)
    }
}

/// First and second moment estimates.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub m: Params,
    pub v: Params,
    pub t: u64,
}

impl AdamState {
    pub fn new(model: &Mlp) -> AdamState {
        let z = Mlp::zeros(&model.dims).expect("valid dims").layers;
        AdamState { m: z.clone(), v: z, t: 0 }
    }
}

/// One bias-corrected Adam update with step size `lr`.
pub fn adam_step(model: &mut Mlp, grads: &Params, state: &mut AdamState, lr: f64, cfg: &TrainConfig) {
    state.t += 1;
    let c1 = 1.0 - cfg.beta1.powi(state.t as i32);
    let c2 = 1.0 - cfg.beta2.powi(state.t as i32);
    let (b1, b2, eps) = (cfg.beta1, cfg.beta2, cfg.epsilon);
    for (((p, g), m), v) in model.layers.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        };
        ndarray::Zip::from(&mut p.w).and(&g.w).and(&mut m.w).and(&mut v.w).for_each(|p, &g, m, v| update(p, g, m, v));
        ndarray::Zip::from(&mut p.b).and(&g.b).and(&mut m.b).and(&mut v.b).for_each(|p, &g, m, v| update(p, g, m, v));
    }
}

/// Per-epoch record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub learning_rate: f64,
    /// Sample-weighted mean of the mini-batch losses.
    pub train_loss: f64,
}

/// Trains from scratch. Rows of `x` are features, rows of `y` positions.
/// The seed fixes initialization and the per-epoch shuffles.
pub fn train(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, cfg: &TrainConfig) -> Result<(Mlp, Vec<EpochStats>)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let model = Mlp::init(&cfg.dims, &mut rng)?;
    train_from(model, x, y, cfg, &mut rng)
}

/// Continues training an existing model.
pub fn train_from(
    mut model: Mlp,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(Mlp, Vec<EpochStats>)> {
    cfg.validate()?;
    let n = x.nrows();
    if n == 0 {
        return Err(Error::Empty("training set"));
    }
    if y.nrows() != n {
        return Err(Error::Dimension(format!("{n} feature rows but {} targets", y.nrows())));
    }
    let mut state = AdamState::new(&model);
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let lr = cfg.learning_rate_at(epoch);
        order.shuffle(rng);
        let mut total = 0.0;
        for (bi, idx) in order.chunks(cfg.batch_size).enumerate() {
            let xb = x.select(Axis(0), idx);
            let yb = y.select(Axis(0), idx);
            let (loss, grads) = model.backward(xb.view(), yb.view())?;
            if !loss.is_finite() {
                return Err(Error::NonFinite { epoch, batch: bi });
            }
            total += loss * idx.len() as f64;
            adam_step(&mut model, &grads, &mut state, lr, cfg);
        }
        history.push(EpochStats { epoch, learning_rate: lr, train_loss: total / n as f64 });
    }
    Ok((model, history))
}

/// Stacks row vectors into a matrix.
pub fn stack_rows(rows: &[Array1<f64>]) -> Result<Array2<f64>> {
    let d = rows.first().map_or(0, Array1::len);
    let mut m = Array2::zeros((rows.len(), d));
    for (i, r) in rows.iter().enumerate() {
        if r.len() != d {
            return Err(Error::Dimension(format!("row {i} has {} values, expected {d}", r.len())));
        }
        m.row_mut(i).assign(r);
    }
    Ok(m)
}


#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy() -> (Array2<f64>, Array2<f64>) {
        let x = Array2::from_shape_fn((10, 3), |(i, j)| ((i * 3 + j) as f64 * 0.37).sin());
        let y = Array2::from_shape_fn((10, 2), |(i, j)| if j == 0 { x[(i, 0)] - 0.5 * x[(i, 1)] } else { x[(i, 2)] + 0.2 });
        (x, y)
    }

    fn small_cfg() -> TrainConfig {
        TrainConfig { dims: vec![3, 16, 8, 2], epochs: 10, learning_rate: 1e-2, batch_size: 10, seed: 3, ..Default::default() }
    }

    #[test]
    fn loss_decreases_monotonically() {
        let (x, y) = toy();
        let (_, h) = train(x.view(), y.view(), &small_cfg()).unwrap();
        assert!(h.windows(2).all(|w| w[1].train_loss < w[0].train_loss), "{h:?}");
    }

    #[test]
    fn deterministic() {
        let (x, y) = toy();
        let cfg = TrainConfig { batch_size: 4, ..small_cfg() };
        let (a, _) = train(x.view(), y.view(), &cfg).unwrap();
        let (b, _) = train(x.view(), y.view(), &cfg).unwrap();
        assert_eq!(a.flatten(), b.flatten());
    }

    #[test]
    fn zero_rate_keeps_weights() {
        let (x, y) = toy();
        let cfg = TrainConfig { learning_rate: 0.0, ..small_cfg() };
        let init = Mlp::init(&cfg.dims, &mut ChaCha8Rng::seed_from_u64(cfg.seed)).unwrap();
        let (m, _) = train(x.view(), y.view(), &cfg).unwrap();
        assert_eq!(m, init);
    }

    #[test]
    fn zero_gradient_keeps_weights() {
        let mut m = Mlp::init(&[3, 4, 2], &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let before = m.clone();
        let z = Mlp::zeros(&[3, 4, 2]).unwrap().layers;
        let mut st = AdamState::new(&m);
        adam_step(&mut m, &z, &mut st, 0.1, &TrainConfig::default());
        assert_eq!(m, before);
    }

    #[test]
    fn decay_schedule() {
        let c = TrainConfig::default();
        assert_eq!(c.learning_rate_at(0), 1e-4);
        assert_eq!(c.learning_rate_at(19), 1e-4);
        assert!((c.learning_rate_at(20) - 1e-5).abs() < 1e-20);
        assert!((c.learning_rate_at(40) - 1e-6).abs() < 1e-21);
    }

    #[test]
    fn rejects_bad_config_and_data() {
        let (x, y) = toy();
        assert!(train(x.view(), y.view(), &TrainConfig { epochs: 0, ..small_cfg() }).is_err());
        assert!(train(x.view(), y.view(), &TrainConfig { decay_factor: 1.5, ..small_cfg() }).is_err());
        let e = Array2::<f64>::zeros((0, 3));
        assert!(matches!(train(e.view(), e.view(), &small_cfg()), Err(Error::Empty(_))));
        let bad = array![[f64::NAN, 0.0, 0.0]];
        assert!(matches!(train(bad.view(), array![[0.0, 0.0]].view(), &small_cfg()), Err(Error::NonFinite { .. })));
    }
}
