//! OFDM subcarrier layout of the 20 MHz non-HT mode.
//!
//! Subcarrier `k` in `[-W/2, W/2 - 1]` lives in FFT bin `k mod W`. Every
//! per-subcarrier array in this crate is ordered by ascending `k` over the
//! used set, i.e. `-26, ..., -1, 1, ..., 26`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Bandwidth mode of the receiver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Profile {
    /// 20 MHz non-HT (clause 17).
    #[serde(rename = "non-ht-20")]
    NonHt20,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "20" | "20mhz" | "non-ht-20" | "nonht20" | "non_ht_20" => Ok(Profile::NonHt20),
            other => Err(Error::UnsupportedMode(other.to_string())),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::NonHt20 => f.write_str("non-ht-20"),
        }
    }
}

/// Subcarrier index sets and symbol geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OfdmGrid {
    /// Total number of subcarriers `W` (FFT size).
    pub fft_size: usize,
    /// Cyclic-prefix length `P` in samples.
    pub cp_len: usize,
    /// Used subcarrier indices, ascending.
    pub used: Vec<i32>,
    /// Pilot subcarrier indices, ascending.
    pub pilots: Vec<i32>,
    /// Data subcarrier indices, ascending.
    pub data: Vec<i32>,
    /// Arrays are stored in ascending subcarrier order rather than FFT-bin order.
    pub fft_shifted: bool,
    /// Baseband sample rate in Hz.
    pub sample_rate: f64,
}

/// Builds the subcarrier layout for a bandwidth mode.
pub fn build_grid(profile: Profile) -> OfdmGrid {
    match profile {
        Profile::NonHt20 => {
            let used: Vec<i32> = (-26..=26).filter(|&k| k != 0).collect();
            let pilots = vec![-21, -7, 7, 21];
            let data = used.iter().copied().filter(|k| !pilots.contains(k)).collect();
            OfdmGrid {
                fft_size: 64,
                cp_len: 16,
                used,
                pilots,
                data,
                fft_shifted: true,
                sample_rate: 20e6,
            }
        }
    }
}

impl OfdmGrid {
    /// The 20 MHz non-HT grid.
    pub fn non_ht() -> OfdmGrid {
        build_grid(Profile::NonHt20)
    }

    /// `W_used`.
    pub fn num_used(&self) -> usize {
        self.used.len()
    }

    /// Samples per OFDM symbol including the cyclic prefix.
    pub fn symbol_len(&self) -> usize {
        self.fft_size + self.cp_len
    }

    /// FFT bin holding subcarrier `k`.
    pub fn bin(&self, k: i32) -> usize {
        k.rem_euclid(self.fft_size as i32) as usize
    }

    /// Signed subcarrier index of FFT bin `b`.
    pub fn subcarrier_of_bin(&self, b: usize) -> i32 {
        let w = self.fft_size as i32;
        let b = b as i32;
        if b >= w / 2 {
            b - w
        } else {
            b
        }
    }

    /// FFT bins of the used subcarriers, in storage order.
    pub fn used_bins(&self) -> Vec<usize> {
        self.used.iter().map(|&k| self.bin(k)).collect()
    }

    /// Positions of the pilots inside the used-subcarrier array.
    pub fn pilot_positions(&self) -> Vec<usize> {
        self.positions_of(&self.pilots)
    }

    /// Positions of the data subcarriers inside the used-subcarrier array.
    pub fn data_positions(&self) -> Vec<usize> {
        self.positions_of(&self.data)
    }

    /// Position of subcarrier `k` inside the used-subcarrier array.
    pub fn used_position(&self, k: i32) -> Option<usize> {
        self.used.binary_search(&k).ok()
    }

    fn positions_of(&self, set: &[i32]) -> Vec<usize> {
        set.iter()
            .map(|&k| self.used_position(k).expect("subset of the used set"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_ht_layout() {
        let g = build_grid(Profile::NonHt20);
        assert_eq!(g.fft_size, 64);
        assert_eq!(g.cp_len, 16);
        assert_eq!(g.num_used(), 52);
        assert_eq!(g.data.len(), 48);
        assert_eq!(g.pilots, vec![-21, -7, 7, 21]);
        assert!(!g.used.contains(&0));
        assert!(g.num_used() > g.cp_len);
        assert_eq!(g.used.first(), Some(&-26));
        assert_eq!(g.used.last(), Some(&26));
    }

    #[test]
    fn pilots_and_data_partition_used() {
        let g = OfdmGrid::non_ht();
        let mut all: Vec<i32> = g.pilots.iter().chain(g.data.iter()).copied().collect();
        all.sort();
        assert_eq!(all, g.used);
        assert!(g.pilots.iter().all(|p| !g.data.contains(p)));
        for &k in &g.used {
            assert!((-32..=31).contains(&k));
        }
    }

    #[test]
    fn bin_mapping() {
        let g = OfdmGrid::non_ht();
        assert_eq!(g.bin(-26), 38);
        assert_eq!(g.bin(1), 1);
        assert_eq!(g.bin(-1), 63);
        for b in 0..64 {
            assert_eq!(g.bin(g.subcarrier_of_bin(b)), b);
        }
        assert_eq!(g.pilot_positions(), vec![5, 19, 32, 46]);
    }

    #[test]
    fn profiles() {
        assert_eq!("20MHz".parse::<Profile>().unwrap(), Profile::NonHt20);
        assert!(matches!("40".parse::<Profile>(), Err(Error::UnsupportedMode(_))));
        assert_eq!(build_grid(Profile::NonHt20), build_grid(Profile::NonHt20));
    }
}
