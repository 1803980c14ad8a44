//! Positioning error metrics.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::mlp::Mlp;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mean_m: f64,
    pub p95_m: f64,
    pub n_test: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub metrics: Metrics,
    /// Euclidean error of each test point, in input order.
    pub errors: Vec<f64>,
}

/// Nearest-rank percentile, `p` in (0, 100].
pub fn percentile_nearest_rank(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("percentile input"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * v.len() as f64).ceil().max(1.0) as usize;
    Ok(v[rank.min(v.len()) - 1])
}

pub fn metrics_from_errors(errors: &[f64]) -> Result<Metrics> {
    if errors.is_empty() {
        return Err(Error::Empty("test set"));
    }
    Ok(Metrics {
        mean_m: errors.iter().sum::<f64>() / errors.len() as f64,
        p95_m: percentile_nearest_rank(errors, 95.0)?,
        n_test: errors.len(),
    })
}

/// Distances between predicted and true rows.
pub fn position_errors(pred: ArrayView2<'_, f64>, truth: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    if pred.dim() != truth.dim() {
        return Err(Error::Dimension(format!("predictions {:?} vs truth {:?}", pred.dim(), truth.dim())));
    }
    Ok(pred
        .rows()
        .into_iter()
        .zip(truth.rows())
        .map(|(p, t)| p.iter().zip(t.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        .collect())
}

pub fn evaluate(model: &Mlp, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<Evaluation> {
    if x.nrows() == 0 {
        return Err(Error::Empty("test set"));
    }
    let pred = model.forward_batch(x)?;
    let errors = position_errors(pred.view(), y)?;
    Ok(Evaluation { metrics: metrics_from_errors(&errors)?, errors })
}

/// Errors of predicting the single point `guess` for every row of `truth`.
pub fn constant_errors(guess: [f64; 2], truth: ArrayView2<'_, f64>) -> Vec<f64> {
    truth.rows().into_iter().map(|t| (t[0] - guess[0]).hypot(t[1] - guess[1])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn nearest_rank() {
        let v: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(percentile_nearest_rank(&v, 95.0).unwrap(), 19.0);
        assert_eq!(percentile_nearest_rank(&v, 100.0).unwrap(), 20.0);
        assert_eq!(percentile_nearest_rank(&[3.0], 95.0).unwrap(), 3.0);
        // ceil(0.95 * 10) = 10
        let w: Vec<f64> = (1..=10).rev().map(f64::from).collect();
        assert_eq!(percentile_nearest_rank(&w, 95.0).unwrap(), 10.0);
    }

    #[test]
    fn centroid_predictor() {
        // Square corners (0,0), (2,0), (0,2), (2,2) plus (1,1): centroid (1,1).
        let t = array![[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0], [1.0, 1.0]];
        let m = metrics_from_errors(&constant_errors([1.0, 1.0], t.view())).unwrap();
        assert!((m.mean_m - 4.0 * 2f64.sqrt() / 5.0).abs() < 1e-15);
        assert!((m.p95_m - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.n_test, 5);
    }

    #[test]
    fn perfect_and_empty() {
        let t = array![[0.5, 1.0], [2.0, 3.0]];
        let m = metrics_from_errors(&position_errors(t.view(), t.view()).unwrap()).unwrap();
        assert_eq!((m.mean_m, m.p95_m), (0.0, 0.0));
        assert!(metrics_from_errors(&[]).is_err());
    }

    #[test]
    fn metrics_json_keys() {
        let s = serde_json::to_value(Metrics { mean_m: 1.0, p95_m: 2.0, n_test: 3 }).unwrap();
        assert_eq!(s, serde_json::json!({"mean_m": 1.0, "p95_m": 2.0, "n_test": 3}));
    }
}
