//! CP-aware denoising.
//!
//! A channel of at most `P + 1` taps has a frequency response in the span of
//! the first `P + 1` DFT columns. Projecting the used-subcarrier estimate onto
//! that span with a pseudo-inverse, then evaluating the fitted taps on all `W`
//! subcarriers, rejects the noise outside the span.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::{CsiEstimate, Flavor};
use crate::grid::OfdmGrid;
use crate::{Error, Result, C64};

/// Relative singular-value cutoff of the pseudo-inverse.
const PINV_RCOND: f64 = 1e-12;

/// `F[0:W-1, 0:P] * pinv(F[used, 0:P])`, mapping used-subcarrier CSI to all
/// `W` subcarriers (ordered `-W/2 .. W/2-1`).
#[derive(Clone, Debug)]
pub struct DenoiserOperator {
    matrix: DMatrix<C64>,
    /// Fitted-taps map `pinv(F[used, 0:P])`, `(P+1) x W_used`.
    tap_fit: DMatrix<C64>,
    /// Output subcarrier indices.
    pub subcarriers: Vec<i32>,
    /// Input subcarrier indices.
    pub used: Vec<i32>,
    pub num_taps: usize,
}

fn dft_block(rows: &[i32], cols: usize, w: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows.len(), cols, |r, c| {
        C64::from_polar(1.0, -2.0 * PI * rows[r] as f64 * c as f64 / w as f64)
    })
}

/// Assembles the denoising operator for a grid.
pub fn build_denoiser(grid: &OfdmGrid) -> Result<DenoiserOperator> {
    let taps = grid.cp_len + 1;
    if grid.num_used() < taps {
        return Err(Error::Underdetermined { used: grid.num_used(), taps });
    }
    let w = grid.fft_size as i32;
    let all: Vec<i32> = (-w / 2..w / 2).collect();
    let f_used = dft_block(&grid.used, taps, grid.fft_size);
    let svd = f_used.svd(true, true);
    let smax = svd.singular_values.max();
    let tap_fit = svd
        .pseudo_inverse(PINV_RCOND * smax)
        .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
    let matrix = dft_block(&all, taps, grid.fft_size) * &tap_fit;
    Ok(DenoiserOperator {
        matrix,
        tap_fit,
        subcarriers: all,
        used: grid.used.clone(),
        num_taps: taps,
    })
}

impl DenoiserOperator {
    /// `(rows, cols)` = `(W, W_used)`.
    pub fn shape(&self) -> (usize, usize) {
        self.matrix.shape()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn tap_fit(&self) -> &DMatrix<C64> {
        &self.tap_fit
    }

    /// Applies the operator to one used-subcarrier vector.
    pub fn apply(&self, h_used: &[C64]) -> Result<Vec<C64>> {
        let n = self.matrix.ncols();
        if h_used.len() != n {
            return Err(Error::DimensionMismatch(format!("denoiser expects {n} subcarriers, got {}", h_used.len())));
        }
        Ok((0..self.matrix.nrows())
            .map(|r| (0..n).map(|c| self.matrix[(r, c)] * h_used[c]).sum())
            .collect())
    }
}

/// Denoises a raw or data-combined estimate onto all `W` subcarriers.
pub fn denoise_cp(est: &CsiEstimate, op: &DenoiserOperator) -> Result<CsiEstimate> {
    let flavor = match est.flavor {
        Flavor::LltfRaw => Flavor::CpDenoised,
        Flavor::DataCombined => Flavor::DataCombinedDenoised,
        other => return Err(Error::InvalidFlavor(other.to_string())),
    };
    if est.subcarriers != op.used {
        return Err(Error::DimensionMismatch("estimate is not over the used subcarriers".into()));
    }
    let h = est.h.iter().map(|row| op.apply(row)).collect::<Result<Vec<_>>>()?;
    Ok(CsiEstimate {
        flavor,
        subcarriers: op.subcarriers.clone(),
        h,
        num_observations: est.num_observations,
        total_weight: est.total_weight.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::channel::{complex_normal, frequency_response};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shape_and_pinv_identity() {
        let g = OfdmGrid::non_ht();
        let op = build_denoiser(&g).unwrap();
        assert_eq!(op.shape(), (64, 52));
        let f_used = dft_block(&g.used, 17, 64);
        let id = op.tap_fit() * f_used;
        for r in 0..17 {
            for c in 0..17 {
                let e = if r == c { 1.0 } else { 0.0 };
                assert!((id[(r, c)] - C64::new(e, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn reproduces_short_channels_everywhere() {
        let g = OfdmGrid::non_ht();
        let op = build_denoiser(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut full_grid = g.clone();
        full_grid.used = (-32..32).collect();
        for _ in 0..20 {
            let taps: Vec<C64> = (0..17).map(|_| complex_normal(&mut rng)).collect();
            let out = op.apply(&frequency_response(&g, &taps)).unwrap();
            let truth = frequency_response(&full_grid, &taps);
            for (a, b) in out.iter().zip(&truth) {
                assert!((a - b).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn underdetermined_grid() {
        let mut g = OfdmGrid::non_ht();
        g.used = (1..=10).collect();
        assert!(matches!(build_denoiser(&g), Err(Error::Underdetermined { used: 10, taps: 17 })));
    }
}
