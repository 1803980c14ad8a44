//! Per-antenna SNR from the IQ samples around a frame.
//!
//! Noise power is measured on samples near the frame whose short-term power
//! stays within a threshold of the local noise floor.

use serde::{Deserialize, Serialize};

use crate::C64;

pub const SNR_FLOOR_DB: f64 = -10.0;
pub const SNR_CEILING_DB: f64 = 60.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SnrConfig {
    /// Samples examined on each side of the frame.
    pub search: usize,
    /// Moving-average length of the short-term power.
    pub smooth: usize,
    /// Threshold above the median short-term power, in dB.
    pub threshold_db: f64,
    /// Samples skipped after the frame end (multipath tail).
    pub guard: usize,
}

impl Default for SnrConfig {
    fn default() -> Self {
        SnrConfig { search: 800, smooth: 16, threshold_db: 6.0, guard: 16 }
    }
}

fn noise_power(x: &[C64], ranges: &[(usize, usize)], cfg: &SnrConfig) -> Option<f64> {
    let mut smoothed = Vec::new();
    for &(a, b) in ranges {
        if b < a + cfg.smooth.max(1) {
            continue;
        }
        let p: Vec<f64> = x[a..b].iter().map(|v| v.norm_sqr()).collect();
        let m = cfg.smooth.max(1);
        let mut acc: f64 = p[..m].iter().sum();
        for i in 0..=p.len() - m {
            if i > 0 {
                acc += p[i + m - 1] - p[i - 1];
            }
            smoothed.push(acc.max(0.0) / m as f64);
        }
    }
    if smoothed.is_empty() {
        return None;
    }
    let mut sorted = smoothed.clone();
    sorted.sort_by(f64::total_cmp);
    let floor = sorted[sorted.len() / 2];
    let thr = floor * 10f64.powf(cfg.threshold_db / 10.0);
    let (sum, n) = smoothed
        .iter()
        .filter(|&&s| s <= thr)
        .fold((0.0, 0usize), |(acc, n), s| (acc + s, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// `10 log10(P_frame / P_noise - 1)` per antenna, clamped to
/// `[SNR_FLOOR_DB, SNR_CEILING_DB]`. `None` when no noise-only samples exist
/// around the frame.
pub fn estimate_snr(samples: &[Vec<C64>], frame_start: usize, frame_end: usize, cfg: &SnrConfig) -> Option<Vec<f64>> {
    samples
        .iter()
        .map(|x| {
            let end = frame_end.min(x.len());
            if end <= frame_start {
                return None;
            }
            let before = (frame_start.saturating_sub(cfg.search), frame_start);
            let after_start = (end + cfg.guard).min(x.len());
            let after = (after_start, (after_start + cfg.search).min(x.len()));
            let pn = noise_power(x, &[before, after], cfg)?;
            let ps = x[frame_start..end].iter().map(|v| v.norm_sqr()).sum::<f64>() / (end - frame_start) as f64;
            let ratio = ps / pn - 1.0;
            let db = if ratio <= 0.0 {
                SNR_FLOOR_DB
            } else if !ratio.is_finite() {
                SNR_CEILING_DB
            } else {
                10.0 * ratio.log10()
            };
            Some(db.clamp(SNR_FLOOR_DB, SNR_CEILING_DB))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::channel::complex_normal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn capture(snr_db: f64, noise: f64, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amp = noise * 10f64.powf(snr_db / 20.0);
        (0..3000)
            .map(|n| {
                let sig = if (1000..2000).contains(&n) { complex_normal(&mut rng) * amp } else { C64::new(0.0, 0.0) };
                sig + complex_normal(&mut rng) * noise
            })
            .collect()
    }

    #[test]
    fn twenty_db() {
        let x = capture(20.0, 0.1, 1);
        let s = estimate_snr(&[x], 1000, 2000, &SnrConfig::default()).unwrap();
        assert!((s[0] - 20.0).abs() < 1.0, "{}", s[0]);
    }

    #[test]
    fn clamps() {
        let x = capture(20.0, 0.0, 2);
        let x: Vec<C64> = x.iter().enumerate().map(|(n, _)| if (1000..2000).contains(&n) { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).collect();
        assert_eq!(estimate_snr(&[x], 1000, 2000, &SnrConfig::default()).unwrap()[0], SNR_CEILING_DB);
        let y = capture(-40.0, 1.0, 3);
        assert_eq!(estimate_snr(&[y], 1000, 2000, &SnrConfig::default()).unwrap()[0], SNR_FLOOR_DB);
    }

    #[test]
    fn missing_noise_region() {
        let x = vec![C64::new(1.0, 0.0); 100];
        assert!(estimate_snr(&[x], 0, 100, &SnrConfig::default()).is_none());
    }
}
