//! Channel estimation: least-squares on the L-LTF, CP-aware subspace
//! denoising, data-aided per-symbol estimates with energy-weighted combining,
//! and per-antenna SNR estimation.

mod combine;
mod denoise;
mod snr;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::grid::OfdmGrid;
use crate::{Error, Result, C64};

pub use combine::{
    combine_mean, combine_weighted, derotate, estimate_data_combined, per_symbol_estimate, residual_phase_slope, symbol_tau,
    LltfObservation,
};
pub use denoise::{build_denoiser, denoise_cp, DenoiserOperator};
pub use snr::{estimate_snr, SnrConfig, SNR_CEILING_DB, SNR_FLOOR_DB};

/// Which estimator produced a [`CsiEstimate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    LltfRaw,
    CpDenoised,
    DataCombined,
    DataCombinedDenoised,
}

impl Flavor {
    pub const ALL: [Flavor; 4] = [Flavor::LltfRaw, Flavor::CpDenoised, Flavor::DataCombined, Flavor::DataCombinedDenoised];

    pub fn name(self) -> &'static str {
        match self {
            Flavor::LltfRaw => "lltf_raw",
            Flavor::CpDenoised => "cp_denoised",
            Flavor::DataCombined => "data_combined",
            Flavor::DataCombinedDenoised => "data_combined_denoised",
        }
    }

    pub fn is_denoised(self) -> bool {
        matches!(self, Flavor::CpDenoised | Flavor::DataCombinedDenoised)
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Flavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Flavor> {
        Flavor::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidFlavor(s.to_string()))
    }
}

/// Per-antenna CSI over an index set of subcarriers.
#[derive(Clone, Debug, PartialEq)]
pub struct CsiEstimate {
    pub flavor: Flavor,
    /// Subcarrier indices of each column, ascending. The used set for raw
    /// flavors, all `W` subcarriers for denoised ones.
    pub subcarriers: Vec<i32>,
    /// `h[a][i]` for antenna `a` and subcarrier `subcarriers[i]`.
    pub h: Vec<Vec<C64>>,
    /// Number of OFDM observations combined (2 for the L-LTF alone).
    pub num_observations: usize,
    /// Per-subcarrier total weight `sum |s|^2` (same index set as the input).
    pub total_weight: Vec<f64>,
}

impl CsiEstimate {
    pub fn num_antennas(&self) -> usize {
        self.h.len()
    }

    /// The estimate restricted to the used subcarriers, `[antenna][omega]`.
    pub fn used(&self, grid: &OfdmGrid) -> Vec<Vec<C64>> {
        if self.subcarriers == grid.used {
            return self.h.clone();
        }
        let pos: Vec<usize> = grid
            .used
            .iter()
            .map(|k| self.subcarriers.binary_search(k).expect("estimate covers the used set"))
            .collect();
        self.h.iter().map(|row| pos.iter().map(|&i| row[i]).collect()).collect()
    }

    fn check_finite(&self) -> Result<()> {
        if self.h.iter().flatten().all(|v| v.re.is_finite() && v.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch("non-finite CSI".into()))
        }
    }
}

/// Least-squares L-LTF estimate `h = (y1 + y2) / (2 x_L)` per antenna.
pub fn estimate_lltf(grid: &OfdmGrid, y_l: &[[Vec<C64>; 2]], x_l: &[C64]) -> Result<CsiEstimate> {
    let n = grid.num_used();
    if x_l.len() != n {
        return Err(Error::LengthMismatch { expected: n, actual: x_l.len() });
    }
    if let Some(i) = x_l.iter().position(|x| x.norm_sqr() == 0.0) {
        return Err(Error::InvalidPilot(grid.used[i]));
    }
    let mut h = Vec::with_capacity(y_l.len());
    for [y1, y2] in y_l {
        if y1.len() != n || y2.len() != n {
            return Err(Error::LengthMismatch { expected: n, actual: y1.len().min(y2.len()) });
        }
        h.push((0..n).map(|i| (y1[i] + y2[i]) / (2.0 * x_l[i])).collect());
    }
    let est = CsiEstimate {
        flavor: Flavor::LltfRaw,
        subcarriers: grid.used.clone(),
        h,
        num_observations: 2,
        total_weight: x_l.iter().map(|x| 2.0 * x.norm_sqr()).collect(),
    };
    est.check_finite()?;
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lltf_arithmetic() {
        let g = OfdmGrid::non_ht();
        let one = vec![C64::new(1.0, 0.0); 52];
        let e = estimate_lltf(&g, &[[one.clone(), one.clone()]], &one).unwrap();
        assert!(e.h[0].iter().all(|&v| v == C64::new(1.0, 0.0)));
        let two = vec![C64::new(2.0, 0.0); 52];
        let zero = vec![C64::new(0.0, 0.0); 52];
        let e = estimate_lltf(&g, &[[two, zero.clone()]], &one).unwrap();
        assert!(e.h[0].iter().all(|&v| v == C64::new(1.0, 0.0)));
        let mut x = one.clone();
        x[30] = C64::new(0.0, 0.0);
        assert!(matches!(estimate_lltf(&g, &[[one.clone(), one]], &x), Err(Error::InvalidPilot(5))));
    }

    #[test]
    fn flavor_names() {
        for f in Flavor::ALL {
            assert_eq!(f.name().parse::<Flavor>().unwrap(), f);
            assert_eq!(serde_json::to_string(&f).unwrap(), format!("\"{}\"", f.name()));
        }
        assert!("bogus".parse::<Flavor>().is_err());
    }
}
