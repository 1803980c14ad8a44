//! Multipath, carrier offset and AWGN applied to synthesized frames.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::capture::IqCapture;
use crate::grid::OfdmGrid;
use crate::{Error, Result, C64};

/// Longest channel accepted: one more tap than the cyclic prefix.
pub const MAX_TAPS: usize = 17;

/// One realization of the propagation channel for a single frame.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    /// Impulse response per antenna; a single entry is shared by all antennas.
    pub taps: Vec<Vec<C64>>,
    pub cfo_hz: f64,
    /// Per-sample complex noise standard deviation (`E|n|^2 = noise_std^2`).
    pub noise_std: f64,
    /// Frame SNR over the noise floor. `None` leaves the frame at unit power.
    pub snr_db: Option<f64>,
    /// Noise-only samples before the frame.
    pub start_offset: usize,
    /// Noise-only samples after the frame.
    pub tail_len: usize,
}

impl ChannelRealization {
    /// Flat, noiseless channel with the frame at sample 0.
    pub fn ideal() -> ChannelRealization {
        ChannelRealization {
            taps: vec![vec![C64::new(1.0, 0.0)]],
            cfo_hz: 0.0,
            noise_std: 0.0,
            snr_db: None,
            start_offset: 0,
            tail_len: 0,
        }
    }

    /// Taps seen by antenna `a`.
    pub fn taps_for(&self, a: usize) -> &[C64] {
        if self.taps.len() == 1 {
            &self.taps[0]
        } else {
            &self.taps[a]
        }
    }

    /// Amplitude applied to the unit-power frame.
    pub fn gain(&self) -> f64 {
        match self.snr_db {
            Some(snr) if self.noise_std > 0.0 => self.noise_std * 10f64.powf(snr / 20.0),
            _ => 1.0,
        }
    }

    fn validate(&self, num_antennas: usize) -> Result<()> {
        if self.taps.len() != 1 && self.taps.len() != num_antennas {
            return Err(Error::InvalidChannel(format!(
                "{} tap sets for {num_antennas} antennas",
                self.taps.len()
            )));
        }
        for t in &self.taps {
            if t.is_empty() {
                return Err(Error::InvalidChannel("empty impulse response".into()));
            }
            if t.len() > MAX_TAPS {
                return Err(Error::TapsTooLong { taps: t.len(), max: MAX_TAPS });
            }
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::InvalidChannel(format!("noise_std {}", self.noise_std)));
        }
        Ok(())
    }
}

/// Complex Gaussian sample with `E|z|^2 = 1`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Rayleigh taps with power profile `exp(-k / decay)`, scaled to unit energy.
pub fn random_taps<R: Rng + ?Sized>(num_taps: usize, decay: f64, rng: &mut R) -> Vec<C64> {
    let mut taps: Vec<C64> = (0..num_taps)
        .map(|k| complex_normal(rng) * (-(k as f64) / decay).exp().sqrt())
        .collect();
    let e: f64 = taps.iter().map(|t| t.norm_sqr()).sum::<f64>().sqrt();
    if e > 0.0 {
        taps.iter_mut().for_each(|t| *t /= e);
    }
    taps
}

/// Band-limited single path at a fractional delay of `delay` samples.
pub fn los_taps(delay: f64, num_taps: usize) -> Vec<C64> {
    (0..num_taps)
        .map(|n| {
            let x = n as f64 - delay;
            let s = if x.abs() < 1e-12 { 1.0 } else { (PI * x).sin() / (PI * x) };
            C64::new(s, 0.0)
        })
        .collect()
}

/// `H[omega]` on the used subcarriers for an impulse response.
pub fn frequency_response(grid: &OfdmGrid, taps: &[C64]) -> Vec<C64> {
    grid.used
        .iter()
        .map(|&k| {
            taps.iter()
                .enumerate()
                .map(|(n, &h)| h * C64::from_polar(1.0, -2.0 * PI * (k as f64) * (n as f64) / grid.fft_size as f64))
                .sum()
        })
        .collect()
}

/// Accumulates frames into a multi-antenna capture, then adds noise.
#[derive(Clone, Debug)]
pub struct CaptureBuilder {
    sample_rate: f64,
    noise_std: f64,
    samples: Vec<Vec<C64>>,
}

impl CaptureBuilder {
    pub fn new(num_antennas: usize, len: usize, sample_rate: f64, noise_std: f64) -> CaptureBuilder {
        CaptureBuilder {
            sample_rate,
            noise_std,
            samples: vec![vec![C64::new(0.0, 0.0); len]; num_antennas],
        }
    }

    pub fn len(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Adds `frame` convolved with `taps`, scaled by `gain` and rotated by
    /// `cfo_hz` (phase zero at the frame's first sample), starting at `start`.
    /// Samples beyond the capture end are dropped.
    pub fn add_frame(
        &mut self,
        frame: &[C64],
        taps: &[Vec<C64>],
        cfo_hz: f64,
        gain: f64,
        start: usize,
    ) -> Result<()> {
        let n_ant = self.samples.len();
        let ch = ChannelRealization {
            taps: taps.to_vec(),
            cfo_hz,
            noise_std: self.noise_std,
            snr_db: None,
            start_offset: start,
            tail_len: 0,
        };
        ch.validate(n_ant)?;
        if start >= self.len() {
            return Err(Error::StartOutOfRange { start, len: self.len() });
        }
        let w = 2.0 * PI * cfo_hz / self.sample_rate;
        let len = self.len();
        for a in 0..n_ant {
            let h = ch.taps_for(a);
            let out = &mut self.samples[a];
            let span = (frame.len() + h.len() - 1).min(len - start);
            for n in 0..span {
                let mut acc = C64::new(0.0, 0.0);
                for (k, &hk) in h.iter().enumerate() {
                    if n >= k && n - k < frame.len() {
                        acc += hk * frame[n - k];
                    }
                }
                out[start + n] += acc * gain * C64::from_polar(1.0, w * n as f64);
            }
        }
        Ok(())
    }

    pub fn build<R: Rng + ?Sized>(mut self, rng: &mut R, center_frequency: f64, start_time: f64) -> Result<IqCapture> {
        if self.noise_std > 0.0 {
            for ant in &mut self.samples {
                for v in ant.iter_mut() {
                    *v += complex_normal(rng) * self.noise_std;
                }
            }
        }
        IqCapture::new(self.sample_rate, center_frequency, start_time, self.samples)
    }
}

/// Passes one 20 MHz frame through `ch` onto `num_antennas` receive chains.
pub fn apply_channel<R: Rng + ?Sized>(
    frame: &[C64],
    ch: &ChannelRealization,
    num_antennas: usize,
    rng: &mut R,
) -> Result<IqCapture> {
    ch.validate(num_antennas)?;
    let max_taps = ch.taps.iter().map(Vec::len).max().unwrap_or(1);
    let len = ch.start_offset + frame.len() + max_taps - 1 + ch.tail_len;
    let mut b = CaptureBuilder::new(num_antennas, len, 20e6, ch.noise_std);
    b.add_frame(frame, &ch.taps, ch.cfo_hz, ch.gain(), ch.start_offset)?;
    b.build(rng, 0.0, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_taps_unit_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=16 {
            let t = random_taps(n, 4.0, &mut rng);
            let e: f64 = t.iter().map(|v| v.norm_sqr()).sum();
            assert!((e - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn too_many_taps() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut ch = ChannelRealization::ideal();
        ch.taps = vec![vec![C64::new(0.1, 0.0); 18]];
        let r = apply_channel(&[C64::new(1.0, 0.0); 10], &ch, 1, &mut rng);
        assert!(matches!(r, Err(Error::TapsTooLong { taps: 18, max: 17 })));
        ch.taps = vec![vec![C64::new(1.0, 0.0)]; 3];
        assert!(matches!(apply_channel(&[C64::new(1.0, 0.0)], &ch, 2, &mut rng), Err(Error::InvalidChannel(_))));
    }

    #[test]
    fn convolution_and_cfo() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let frame: Vec<C64> = (0..50).map(|n| C64::new(n as f64, 1.0)).collect();
        let h = vec![C64::new(0.5, 0.0), C64::new(0.0, 0.25)];
        let ch = ChannelRealization {
            taps: vec![h.clone()],
            cfo_hz: 1000.0,
            noise_std: 0.0,
            snr_db: None,
            start_offset: 7,
            tail_len: 3,
        };
        let cap = apply_channel(&frame, &ch, 2, &mut rng).unwrap();
        assert_eq!(cap.len(), 7 + 50 + 1 + 3);
        for a in 0..2 {
            for n in 0..51 {
                let mut x = C64::new(0.0, 0.0);
                if n < 50 {
                    x += h[0] * frame[n];
                }
                if n >= 1 && n <= 50 {
                    x += h[1] * frame[n - 1];
                }
                let rot = C64::from_polar(1.0, 2.0 * PI * 1000.0 * n as f64 / 20e6);
                assert!((cap.samples[a][7 + n] - x * rot).norm() < 1e-9);
            }
            assert_eq!(cap.samples[a][0], C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn snr_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let frame = vec![C64::new(1.0, 0.0); 20000];
        let mut ch = ChannelRealization::ideal();
        ch.noise_std = 0.1;
        ch.snr_db = Some(20.0);
        ch.tail_len = 20000;
        let cap = apply_channel(&frame, &ch, 1, &mut rng).unwrap();
        let noise: f64 = cap.samples[0][20000..].iter().map(|v| v.norm_sqr()).sum::<f64>() / 20000.0;
        assert!((noise / 0.01 - 1.0).abs() < 0.05);
        assert!((ch.gain() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_response() {
        let g = OfdmGrid::non_ht();
        let h = frequency_response(&g, &[C64::new(0.0, 2.0)]);
        assert!(h.iter().all(|&v| (v - C64::new(0.0, 2.0)).norm() < 1e-12));
        let l = los_taps(0.0, 4);
        assert_eq!(l[0], C64::new(1.0, 0.0));
        assert!(l[1].norm() < 1e-12);
    }
}
