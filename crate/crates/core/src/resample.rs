//! Polyphase rational resampling.
//!
//! The prototype low-pass is a Kaiser-windowed sinc designed at the upsampled
//! rate with its cutoff at the lower of the two Nyquist frequencies. The
//! transition band spans +-15% of that Nyquist frequency around the cutoff and
//! the stopband attenuation target is 65 dB. Output sample `m` is aligned with
//! input time `m / target_rate` (the prototype's group delay is removed).

use std::f64::consts::PI;

use crate::capture::IqCapture;
use crate::{Error, Result, C64};

/// Largest accepted interpolation or decimation factor after reduction.
pub const MAX_FACTOR: u64 = 4096;

const STOPBAND_DB: f64 = 65.0;
const TRANSITION_FRACTION: f64 = 0.3;

/// Polyphase resampler by `up / down`.
#[derive(Clone, Debug)]
pub struct RationalResampler {
    up: usize,
    down: usize,
    taps: Vec<f64>,
    delay: usize,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn integral_hz(rate: f64) -> Option<u64> {
    if !(rate > 0.0 && rate.is_finite()) {
        return None;
    }
    let r = rate.round();
    ((rate - r).abs() <= 1e-3).then_some(r as u64)
}

/// Reduced `(up, down)` factors converting `from_hz` to `to_hz`.
pub fn rational_ratio(from_hz: f64, to_hz: f64) -> Result<(usize, usize)> {
    let err = || Error::UnsupportedRatio { from_hz, to_hz };
    let from = integral_hz(from_hz).ok_or_else(err)?;
    let to = integral_hz(to_hz).ok_or_else(err)?;
    let g = gcd(from, to);
    let (up, down) = (to / g, from / g);
    if up > MAX_FACTOR || down > MAX_FACTOR {
        return Err(err());
    }
    Ok((up as usize, down as usize))
}

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let half = x / 2.0;
    for k in 1..200 {
        term *= (half / k as f64).powi(2);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

fn kaiser_beta(atten_db: f64) -> f64 {
    if atten_db > 50.0 {
        0.1102 * (atten_db - 8.7)
    } else if atten_db >= 21.0 {
        0.5842 * (atten_db - 21.0).powf(0.4) + 0.07886 * (atten_db - 21.0)
    } else {
        0.0
    }
}

/// Kaiser-windowed sinc low-pass with cutoff `cutoff` and transition width
/// `transition` (both in cycles per sample). The length is always odd.
pub fn kaiser_lowpass(cutoff: f64, transition: f64, atten_db: f64) -> Vec<f64> {
    let dw = 2.0 * PI * transition;
    let mut n = ((atten_db - 7.95) / (2.285 * dw)).ceil() as usize + 1;
    if n % 2 == 0 {
        n += 1;
    }
    let beta = kaiser_beta(atten_db);
    let center = (n - 1) as f64 / 2.0;
    let i0b = bessel_i0(beta);
    (0..n)
        .map(|i| {
            let t = i as f64 - center;
            let sinc = if t == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * PI * cutoff * t).sin() / (PI * t)
            };
            let r = t / center;
            let w = bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / i0b;
            sinc * w
        })
        .collect()
}

impl RationalResampler {
    pub fn new(up: usize, down: usize) -> RationalResampler {
        assert!(up > 0 && down > 0);
        let rate = up.max(down) as f64;
        let cutoff = 0.5 / rate;
        let mut taps = kaiser_lowpass(cutoff, TRANSITION_FRACTION * cutoff, STOPBAND_DB);
        let sum: f64 = taps.iter().sum();
        for t in taps.iter_mut() {
            *t *= up as f64 / sum;
        }
        let delay = (taps.len() - 1) / 2;
        RationalResampler {
            up,
            down,
            taps,
            delay,
        }
    }

    /// Resampler converting `from_hz` to `to_hz`.
    pub fn for_rates(from_hz: f64, to_hz: f64) -> Result<RationalResampler> {
        let (up, down) = rational_ratio(from_hz, to_hz)?;
        Ok(RationalResampler::new(up, down))
    }

    pub fn factors(&self) -> (usize, usize) {
        (self.up, self.down)
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Output length for `n` input samples.
    pub fn output_len(&self, n: usize) -> usize {
        n * self.up / self.down
    }

    pub fn process(&self, input: &[C64]) -> Vec<C64> {
        let (up, down) = (self.up as i64, self.down as i64);
        let ntaps = self.taps.len() as i64;
        let last = input.len() as i64 - 1;
        (0..self.output_len(input.len()) as i64)
            .map(|m| {
                // Upsampled-domain time of the filter output.
                let t = m * down + self.delay as i64;
                // Input samples with 0 <= t - n*up < ntaps.
                let n_hi = (t / up).min(last);
                let n_lo = (t - ntaps + up).div_euclid(up).max(0);
                let mut acc = C64::new(0.0, 0.0);
                let mut n = n_hi;
                while n >= n_lo {
                    acc += input[n as usize] * self.taps[(t - n * up) as usize];
                    n -= 1;
                }
                acc
            })
            .collect()
    }
}

/// Resamples every antenna of `capture` to `target_rate` with one filter.
pub fn resample(capture: &IqCapture, target_rate: f64) -> Result<IqCapture> {
    if target_rate == capture.sample_rate {
        return Ok(capture.clone());
    }
    let rs = RationalResampler::for_rates(capture.sample_rate, target_rate)?;
    let samples = capture.samples.iter().map(|s| rs.process(s)).collect();
    IqCapture::new(
        target_rate,
        capture.center_frequency,
        capture.start_time,
        samples,
    )
}
