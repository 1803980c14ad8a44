//! Synthetic line-of-sight scenario: sniffers with uniform linear arrays at
//! the corners of a square room, user positions uniform inside it.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use csisniff_core::datastore::{CombinedCsiDatapoint, CsiDatapoint};
use csisniff_core::estimate::Flavor;
use csisniff_core::grid::OfdmGrid;
use csisniff_core::{MacAddr, C64};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeometryConfig {
    pub side_m: f64,
    /// Vertical offset between the sniffer arrays and the user plane.
    pub height_m: f64,
    pub antennas: usize,
    /// SNR per subcarrier at 1 m distance.
    pub snr_db_at_1m: f64,
    pub sample_rate: f64,
    pub num_points: usize,
    pub flavor: Flavor,
    pub seed: u64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            side_m: 4.0,
            height_m: 1.0,
            antennas: 4,
            snr_db_at_1m: 30.0,
            sample_rate: 20e6,
            num_points: 1000,
            flavor: Flavor::CpDenoised,
            seed: 0,
        }
    }
}

/// One sniffer: position and array axis (unit vector along the elements).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub id: u32,
    pub position: [f64; 2],
    pub axis: [f64; 2],
}

/// Corners of the square, each array perpendicular to the diagonal.
pub fn corner_anchors(side: f64) -> Vec<Anchor> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [[0.0, 0.0], [side, 0.0], [side, side], [0.0, side]]
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let to_center = [side / 2.0 - p[0], side / 2.0 - p[1]];
            let axis = [-to_center[1].signum() * s, to_center[0].signum() * s];
            Anchor { id: i as u32, position: p, axis }
        })
        .collect()
}

/// Noiseless LoS response at one sniffer, `[antenna][used subcarrier]`.
pub fn los_response(grid: &OfdmGrid, anchor: &Anchor, ue: [f64; 2], cfg: &GeometryConfig) -> Vec<Vec<C64>> {
    let dx = ue[0] - anchor.position[0];
    let dy = ue[1] - anchor.position[1];
    let d = (dx * dx + dy * dy + cfg.height_m * cfg.height_m).sqrt();
    let tau = d / SPEED_OF_LIGHT;
    // Half-wavelength spacing: element phase pi * cos(angle to the array axis).
    let cos_axis = (dx * anchor.axis[0] + dy * anchor.axis[1]) / d;
    let spacing = cfg.sample_rate / grid.fft_size as f64;
    (0..cfg.antennas)
        .map(|m| {
            grid.used
                .iter()
                .map(|&k| {
                    let phase = -2.0 * PI * k as f64 * spacing * tau - PI * m as f64 * cos_axis;
                    C64::from_polar(1.0 / d, phase)
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct SyntheticSet {
    pub anchors: Vec<Anchor>,
    pub datapoints: Vec<CombinedCsiDatapoint>,
    pub positions: Vec<[f64; 2]>,
}

pub fn generate(grid: &OfdmGrid, cfg: &GeometryConfig) -> Result<SyntheticSet> {
    if !(cfg.side_m > 0.0) || cfg.antennas == 0 || !(cfg.sample_rate > 0.0) {
        return Err(Error::Config("side_m, antennas and sample_rate must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let anchors = corner_anchors(cfg.side_m);
    let area = Uniform::new(0.0, cfg.side_m).expect("positive side");
    let noise_std = 10f64.powf(-cfg.snr_db_at_1m / 20.0) / 2f64.sqrt();
    let tx_mac = MacAddr([0x02, 0, 0, 0, 0, 0x01]);
    let mut datapoints = Vec::with_capacity(cfg.num_points);
    let mut positions = Vec::with_capacity(cfg.num_points);
    for i in 0..cfg.num_points {
        let ue = [area.sample(&mut rng), area.sample(&mut rng)];
        let timestamp_s = i as f64 * 1e-2;
        let mut members = BTreeMap::new();
        for a in &anchors {
            let common = C64::from_polar(1.0, rng.random_range(0.0..2.0 * PI));
            let mut csi = los_response(grid, a, ue, cfg);
            for h in csi.iter_mut().flatten() {
                let n = C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
                *h = *h * common + n * noise_std;
            }
            members.insert(
                a.id,
                CsiDatapoint {
                    tx_mac,
                    timestamp_s,
                    csi,
                    cfo_hz: 0.0,
                    snr_db: None,
                    sniffer_id: a.id,
                    flavor: cfg.flavor,
                },
            );
        }
        datapoints.push(CombinedCsiDatapoint { tx_mac, timestamp_s, members, complete: true });
        positions.push(ue);
    }
    Ok(SyntheticSet { anchors, datapoints, positions })
}

/// Seeded random split into `(train, test)` index sets.
pub fn random_split(n: usize, test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = ((n as f64) * test_fraction.clamp(0.0, 1.0)).round() as usize;
    let test = idx.split_off(n - n_test);
    (idx, test)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors_face_center() {
        for a in corner_anchors(4.0) {
            let c = [2.0 - a.position[0], 2.0 - a.position[1]];
            assert!((c[0] * a.axis[0] + c[1] * a.axis[1]).abs() < 1e-12);
            assert!((a.axis[0].hypot(a.axis[1]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn los_magnitude_and_delay() {
        let grid = OfdmGrid::non_ht();
        let cfg = GeometryConfig { height_m: 0.0, ..Default::default() };
        let a = corner_anchors(4.0)[0];
        let h = los_response(&grid, &a, [3.0, 4.0], &cfg);
        assert!(h.iter().flatten().all(|c| (c.norm() - 0.2).abs() < 1e-12));
        // Phase step between adjacent subcarriers is -2 pi * 312.5 kHz * 5 m / c.
        let i1 = grid.used_position(1).unwrap();
        let i2 = grid.used_position(2).unwrap();
        let step = (h[0][i2] / h[0][i1]).arg();
        let expect = -2.0 * PI * 312.5e3 * 5.0 / SPEED_OF_LIGHT;
        assert!((step - expect).abs() < 1e-9);
    }

    #[test]
    fn generate_is_seeded_and_complete() {
        let grid = OfdmGrid::non_ht();
        let cfg = GeometryConfig { num_points: 20, seed: 5, ..Default::default() };
        let a = generate(&grid, &cfg).unwrap();
        let b = generate(&grid, &cfg).unwrap();
        assert_eq!(a.positions, b.positions);
        assert!(a.datapoints.iter().all(|d| d.complete && d.members.len() == 4));
        assert!(a.positions.iter().flatten().all(|&v| (0.0..4.0).contains(&v)));
        assert_eq!(a.datapoints[3].members[&2].csi, b.datapoints[3].members[&2].csi);
    }

    #[test]
    fn split_partitions() {
        let (tr, te) = random_split(100, 0.2, 1);
        assert_eq!((tr.len(), te.len()), (80, 20));
        let mut all: Vec<usize> = tr.iter().chain(&te).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }
}
