//! Frame detection, timing, CFO estimation and compensation, FFT
//! demodulation and pilot-based common phase tracking.
//!
//! Sample indices are absolute positions in the capture. A frame "start" is
//! the first L-STF sample; the long training symbols begin at `start + 192`
//! and `start + 256`, the L-SIG body at `start + 336`.

use std::f64::consts::PI;

use crate::capture::IqCapture;
use crate::grid::OfdmGrid;
use crate::synth::frame::{forward_fft64, lltf_symbol, pilot_values, LLTF1_OFFSET, LLTF2_OFFSET, PREAMBLE_LEN, SYMBOL_LEN};
use crate::{Error, Result, C64};

/// Lag between repetitions of the short training symbol.
pub const STF_LAG: usize = 16;
/// Shortest non-HT frame: preamble plus L-SIG plus one DATA symbol.
pub const MIN_FRAME_LEN: usize = PREAMBLE_LEN + 2 * SYMBOL_LEN;

/// Schmidl-Cox detector parameters.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    /// Correlation window in samples.
    pub window: usize,
    pub threshold: f64,
    /// Consecutive samples above threshold needed to declare a plateau.
    pub plateau_min: usize,
    /// Half-width of the L-LTF timing search around the plateau center.
    pub fine_search: usize,
    /// Fraction of the correlation peak that marks the earliest path.
    pub first_path_fraction: f64,
    /// Coarse (L-STF) CFO is applied only above this magnitude.
    pub coarse_cfo_min_hz: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            window: 144,
            threshold: 0.5,
            plateau_min: 32,
            fine_search: 24,
            first_path_fraction: 0.15,
            coarse_cfo_min_hz: 100e3,
        }
    }
}

/// Joint Schmidl-Cox metric over all antennas.
///
/// `M[d] = |sum_a P_a(d)|^2 / (sum_a R_a(d))^2` with
/// `P_a(d) = sum_n conj(r_a[d+n]) r_a[d+n+16]` and `R_a(d) = sum_n |r_a[d+n+16]|^2`
/// over `n < window`. Zero energy gives `M = 0`.
pub fn schmidl_cox_metric(samples: &[Vec<C64>], window: usize) -> Vec<f64> {
    let len = samples.first().map_or(0, Vec::len);
    if window == 0 || len < window + STF_LAG {
        return Vec::new();
    }
    let n_out = len - window - STF_LAG + 1;
    let mut p = C64::new(0.0, 0.0);
    let mut r = 0.0;
    for ant in samples {
        for n in 0..window {
            p += ant[n].conj() * ant[n + STF_LAG];
            r += ant[n + STF_LAG].norm_sqr();
        }
    }
    let mut out = Vec::with_capacity(n_out);
    let mut d = 0;
    loop {
        out.push(if r > 1e-300 { (p.norm_sqr() / (r * r)).min(1.0 + 1e-9) } else { 0.0 });
        if d + 1 == n_out {
            break;
        }
        for ant in samples {
            p += ant[d + window].conj() * ant[d + window + STF_LAG] - ant[d].conj() * ant[d + STF_LAG];
            r += ant[d + window + STF_LAG].norm_sqr() - ant[d + STF_LAG].norm_sqr();
        }
        // Running sums drift; refresh periodically.
        if d % 4096 == 4095 {
            p = C64::new(0.0, 0.0);
            r = 0.0;
            for ant in samples {
                for n in d + 1..d + 1 + window {
                    p += ant[n].conj() * ant[n + STF_LAG];
                    r += ant[n + STF_LAG].norm_sqr();
                }
            }
        }
        r = r.max(0.0);
        d += 1;
    }
    out
}

/// Runs of at least `plateau_min` samples with `M > threshold`, as
/// inclusive `(first, last)` index pairs.
pub fn plateaus(metric: &[f64], threshold: f64, plateau_min: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut run_start = None;
    for (i, &m) in metric.iter().chain(std::iter::once(&0.0)).enumerate() {
        match (m > threshold, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(s)) => {
                if i - s >= plateau_min {
                    out.push((s, i - 1));
                }
                run_start = None;
            }
            _ => {}
        }
    }
    out
}

/// CFO from the L-STF lag-16 correlation around a coarse start.
pub fn coarse_cfo(samples: &[Vec<C64>], coarse_start: usize, sample_rate: f64) -> f64 {
    let len = samples.first().map_or(0, Vec::len);
    let (a, b) = (coarse_start + 24, (coarse_start + 120).min(len.saturating_sub(STF_LAG)));
    let mut acc = C64::new(0.0, 0.0);
    for ant in samples {
        for n in a..b {
            acc += ant[n].conj() * ant[n + STF_LAG];
        }
    }
    sample_rate * acc.arg() / (2.0 * PI * STF_LAG as f64)
}

fn ltf_correlation(samples: &[Vec<C64>], s: usize, rot: f64, ltf: &[C64]) -> f64 {
    let mut total = 0.0;
    for ant in samples {
        for off in [LLTF1_OFFSET, LLTF2_OFFSET] {
            let base = s + off;
            let c: C64 = ltf
                .iter()
                .enumerate()
                .map(|(n, l)| l.conj() * ant[base + n] * C64::from_polar(1.0, -rot * (base + n) as f64))
                .sum();
            total += c.norm_sqr();
        }
    }
    total
}

/// Refines a frame start by cross-correlating with the known long training
/// symbol, then steps back to the earliest significant path.
pub fn fine_timing(samples: &[Vec<C64>], center: usize, cfo_hz: f64, sample_rate: f64, cfg: &DetectorConfig) -> Option<usize> {
    let len = samples.first().map_or(0, Vec::len);
    let ltf = lltf_symbol();
    let rot = 2.0 * PI * cfo_hz / sample_rate;
    let lo = center.saturating_sub(cfg.fine_search);
    let hi = (center + cfg.fine_search).min(len.checked_sub(LLTF2_OFFSET + 64)?);
    if lo > hi {
        return None;
    }
    let corr: Vec<f64> = (lo..=hi).map(|s| ltf_correlation(samples, s, rot, &ltf)).collect();
    let (peak_i, &peak) = corr.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    let first = (peak_i.saturating_sub(8)..=peak_i)
        .find(|&i| corr[i] >= cfg.first_path_fraction * peak)
        .unwrap_or(peak_i);
    Some(lo + first)
}

/// Fine CFO from the two long training symbols:
/// `rate / (2 pi 64) * arg(sum_a sum_n conj(y[n]) y[n+64])`.
pub fn estimate_cfo(samples: &[Vec<C64>], start: usize, sample_rate: f64) -> Result<f64> {
    let len = samples.first().map_or(0, Vec::len);
    if start + LLTF2_OFFSET + 64 > len {
        return Err(Error::StartOutOfRange { start, len });
    }
    let mut acc = C64::new(0.0, 0.0);
    for ant in samples {
        for n in start + LLTF1_OFFSET..start + LLTF2_OFFSET {
            acc += ant[n].conj() * ant[n + 64];
        }
    }
    Ok(sample_rate * acc.arg() / (2.0 * PI * 64.0))
}

/// Removes a carrier offset: sample `n` is multiplied by
/// `exp(-j 2 pi cfo (n - anchor) / rate)`.
pub fn compensate_cfo(samples: &[Vec<C64>], anchor: usize, cfo_hz: f64, sample_rate: f64) -> Vec<Vec<C64>> {
    if cfo_hz == 0.0 {
        return samples.to_vec();
    }
    let w = -2.0 * PI * cfo_hz / sample_rate;
    samples
        .iter()
        .map(|ant| {
            ant.iter()
                .enumerate()
                .map(|(n, &v)| v * C64::from_polar(1.0, w * (n as f64 - anchor as f64)))
                .collect()
        })
        .collect()
}

/// Two-stage CFO: L-STF estimate when it exceeds the configured magnitude,
/// refined on the L-LTF.
pub fn estimate_cfo_two_stage(samples: &[Vec<C64>], start: usize, sample_rate: f64, cfg: &DetectorConfig) -> Result<f64> {
    let coarse = coarse_cfo(samples, start, sample_rate);
    if coarse.abs() > cfg.coarse_cfo_min_hz {
        let shifted = compensate_cfo(samples, start, coarse, sample_rate);
        Ok(coarse + estimate_cfo(&shifted, start, sample_rate)?)
    } else {
        estimate_cfo(samples, start, sample_rate)
    }
}

/// A located frame before demodulation.
#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub start: usize,
    /// Peak Schmidl-Cox metric on the plateau.
    pub metric: f64,
    /// CFO estimate in Hz.
    pub cfo_hz: f64,
}

/// Locates frames: Schmidl-Cox plateaus, L-LTF timing refinement and CFO.
/// Starts are strictly increasing and at least [`MIN_FRAME_LEN`] apart.
pub fn detect_frames(samples: &[Vec<C64>], sample_rate: f64, cfg: &DetectorConfig) -> Vec<Detection> {
    let metric = schmidl_cox_metric(samples, cfg.window);
    let mut out: Vec<Detection> = Vec::new();
    for (first, last) in plateaus(&metric, cfg.threshold, cfg.plateau_min) {
        let peak = metric[first..=last].iter().cloned().fold(0.0, f64::max);
        // Past the L-STF the metric decays as peak * (1 - k / window)^2, so
        // the falling edge sits a known distance after the frame start. The
        // rising edge is not used: it depends on the noise floor.
        let edge = cfg.window as f64 * (1.0 - (cfg.threshold / peak).sqrt());
        let center = last.saturating_sub(edge.round() as usize);
        if out.last().is_some_and(|d| center < d.start + MIN_FRAME_LEN) {
            continue;
        }
        let coarse = coarse_cfo(samples, center, sample_rate);
        let Some(start) = fine_timing(samples, center, coarse, sample_rate, cfg) else {
            continue;
        };
        if out.last().is_some_and(|d| start < d.start + MIN_FRAME_LEN) {
            continue;
        }
        let Ok(cfo_hz) = estimate_cfo_two_stage(samples, start, sample_rate, cfg) else {
            continue;
        };
        out.push(Detection { start, metric: peak, cfo_hz });
    }
    out
}

/// Convenience wrapper returning only start indices.
pub fn detect_frame_starts(capture: &IqCapture, cfg: &DetectorConfig) -> Vec<usize> {
    detect_frames(&capture.samples, capture.sample_rate, cfg).into_iter().map(|d| d.start).collect()
}

/// Scale mapping raw FFT outputs onto transmitted constellation amplitude.
pub fn rx_scale(grid: &OfdmGrid) -> f64 {
    (grid.num_used() as f64).sqrt() / grid.fft_size as f64
}

/// Unscaled 64-point forward DFT.
pub fn fft_raw(body: &[C64]) -> Vec<C64> {
    let mut buf = body.to_vec();
    forward_fft64().process(&mut buf);
    buf
}

/// Values on the used subcarriers of one symbol body, scaled so a flat unit
/// channel returns the transmitted points.
pub fn fft_used(grid: &OfdmGrid, body: &[C64]) -> Vec<C64> {
    let bins = fft_raw(body);
    let scale = rx_scale(grid);
    grid.used.iter().map(|&k| bins[grid.bin(k)] * scale).collect()
}

/// Subcarrier-domain view of one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameCandidate {
    pub start_index: usize,
    pub detection_metric: f64,
    pub cfo_hat: f64,
    pub timestamp: f64,
    /// `y_L[a][i][omega]`: the two long training symbols per antenna.
    pub lltf: Vec<[Vec<C64>; 2]>,
    /// `y[a][l][omega]` for L-SIG (`l = 0`) and following symbols.
    pub symbols: Vec<Vec<Vec<C64>>>,
}

impl FrameCandidate {
    pub fn num_antennas(&self) -> usize {
        self.lltf.len()
    }

    pub fn num_symbols(&self) -> usize {
        self.symbols.first().map_or(0, Vec::len)
    }

    /// Symbol `l` across antennas.
    pub fn symbol(&self, l: usize) -> Vec<&[C64]> {
        self.symbols.iter().map(|ant| ant[l].as_slice()).collect()
    }
}

/// How many L-SIG/DATA symbols fit between `start` and the end of `len` samples.
pub fn symbols_available(len: usize, start: usize) -> usize {
    len.saturating_sub(start + PREAMBLE_LEN) / SYMBOL_LEN
}

/// FFT demodulation of the L-LTF and `num_symbols` following symbols.
/// Fails with a truncated-frame error if the samples run out; use
/// [`symbols_available`] to demodulate the complete prefix instead.
pub fn demodulate_symbols(corrected: &[Vec<C64>], start: usize, grid: &OfdmGrid, num_symbols: usize) -> Result<FrameCandidate> {
    let len = corrected.first().map_or(0, Vec::len);
    if start + LLTF2_OFFSET + 64 > len {
        return Err(Error::TruncatedFrame { demodulated: 0, requested: num_symbols });
    }
    let avail = symbols_available(len, start);
    if avail < num_symbols {
        return Err(Error::TruncatedFrame { demodulated: avail, requested: num_symbols });
    }
    let lltf = corrected
        .iter()
        .map(|ant| {
            [
                fft_used(grid, &ant[start + LLTF1_OFFSET..start + LLTF1_OFFSET + 64]),
                fft_used(grid, &ant[start + LLTF2_OFFSET..start + LLTF2_OFFSET + 64]),
            ]
        })
        .collect();
    let symbols = corrected
        .iter()
        .map(|ant| {
            (0..num_symbols)
                .map(|l| {
                    let b = start + PREAMBLE_LEN + l * SYMBOL_LEN + grid.cp_len;
                    fft_used(grid, &ant[b..b + grid.fft_size])
                })
                .collect()
        })
        .collect();
    Ok(FrameCandidate {
        start_index: start,
        detection_metric: 0.0,
        cfo_hat: 0.0,
        timestamp: 0.0,
        lltf,
        symbols,
    })
}

/// Result of common phase estimation on one symbol.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseCorrection {
    pub phase: f64,
    /// False when pilot power was below the floor and no correction was applied.
    pub applied: bool,
}

/// Pilot energy (relative to the channel estimate) below which the phase
/// estimate is not trusted.
pub const PILOT_POWER_FLOOR: f64 = 1e-12;

/// Estimates and removes the common phase error of symbol `l` (0 = L-SIG):
/// `phi = arg(sum_a sum_pilots y conj(h p))`. `y[a]` and `h_hat[a]` are over
/// the used subcarriers.
pub fn track_phase(grid: &OfdmGrid, y: &[&[C64]], h_hat: &[Vec<C64>], l: usize) -> (Vec<Vec<C64>>, PhaseCorrection) {
    let pilots = pilot_values(l);
    let mut acc = C64::new(0.0, 0.0);
    let mut ref_power = 0.0;
    for (ya, ha) in y.iter().zip(h_hat) {
        for (&pos, &p) in grid.pilot_positions().iter().zip(pilots.iter()) {
            let r = ha[pos] * p;
            acc += ya[pos] * r.conj();
            ref_power += r.norm_sqr();
        }
    }
    if ref_power < PILOT_POWER_FLOOR || acc.norm() < PILOT_POWER_FLOOR {
        return (y.iter().map(|v| v.to_vec()).collect(), PhaseCorrection { phase: 0.0, applied: false });
    }
    let phase = acc.arg();
    let rot = C64::from_polar(1.0, -phase);
    let out = y.iter().map(|v| v.iter().map(|&x| x * rot).collect()).collect();
    (out, PhaseCorrection { phase, applied: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::channel::{apply_channel, ChannelRealization};
    use crate::synth::frame::{build_nonht_frame, TxConfig};
    use crate::synth::Mcs;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn frame(rate: u32) -> Vec<C64> {
        build_nonht_frame(&TxConfig {
            mcs: Mcs::from_rate_mbps(rate).unwrap(),
            psdu: (0..200).map(|i| i as u8).collect(),
            scrambler_init: 0x2b,
        })
        .unwrap()
        .baseband
    }

    #[test]
    fn metric_degenerate_inputs() {
        assert!(schmidl_cox_metric(&[vec![C64::new(0.0, 0.0); 10]], 144).is_empty());
        let m = schmidl_cox_metric(&[vec![C64::new(0.0, 0.0); 400]], 144);
        assert_eq!(m.len(), 400 - 160 + 1);
        assert!(m.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn metric_noiseless_plateau() {
        let f = frame(6);
        let mut s = vec![C64::new(0.0, 0.0); 100];
        s.extend(&f);
        let m = schmidl_cox_metric(&[s], 144);
        let max = m.iter().cloned().fold(0.0, f64::max);
        assert!(max >= 0.99, "{max}");
    }

    #[test]
    fn running_sum_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s: Vec<C64> = (0..9000).map(|_| crate::synth::channel::complex_normal(&mut rng)).collect();
        let m = schmidl_cox_metric(std::slice::from_ref(&s), 64);
        for d in [0, 1, 4095, 4096, 4097, 8000, m.len() - 1] {
            let mut p = C64::new(0.0, 0.0);
            let mut r = 0.0;
            for n in 0..64 {
                p += s[d + n].conj() * s[d + n + 16];
                r += s[d + n + 16].norm_sqr();
            }
            assert!((m[d] - p.norm_sqr() / (r * r)).abs() < 1e-9);
        }
    }

    #[test]
    fn detects_and_times_noiseless() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ch = ChannelRealization::ideal();
        ch.start_offset = 777;
        ch.tail_len = 500;
        ch.cfo_hz = 37e3;
        let cap = apply_channel(&frame(12), &ch, 2, &mut rng).unwrap();
        let d = detect_frames(&cap.samples, 20e6, &DetectorConfig::default());
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].start, 777);
        assert!((d[0].cfo_hz - 37e3).abs() < 1.0);
    }

    #[test]
    fn large_cfo_uses_coarse_stage() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut ch = ChannelRealization::ideal();
        ch.start_offset = 300;
        ch.cfo_hz = -250e3;
        ch.tail_len = 100;
        let cap = apply_channel(&frame(6), &ch, 1, &mut rng).unwrap();
        let d = detect_frames(&cap.samples, 20e6, &DetectorConfig::default());
        assert_eq!(d[0].start, 300);
        assert!((d[0].cfo_hz + 250e3).abs() < 1.0, "{}", d[0].cfo_hz);
    }

    #[test]
    fn compensation_inverts_rotation() {
        let x: Vec<C64> = (0..500).map(|n| C64::new((n as f64).sin(), 0.3)).collect();
        let rotated: Vec<C64> = x.iter().enumerate().map(|(n, v)| v * C64::from_polar(1.0, 2.0 * PI * 5e4 * n as f64 / 20e6)).collect();
        let back = compensate_cfo(&[rotated], 0, 5e4, 20e6);
        for (a, b) in back[0].iter().zip(&x) {
            assert!((a - b).norm() < 1e-9);
        }
        assert_eq!(compensate_cfo(&[x.clone()], 7, 0.0, 20e6)[0], x);
    }

    #[test]
    fn parseval_raw_fft() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s: Vec<C64> = (0..64).map(|_| crate::synth::channel::complex_normal(&mut rng)).collect();
        let bins = fft_raw(&s);
        let et: f64 = s.iter().map(|v| v.norm_sqr()).sum();
        let ef: f64 = bins.iter().map(|v| v.norm_sqr()).sum();
        assert!((et - ef / 64.0).abs() < 1e-9);
    }

    #[test]
    fn flat_channel_returns_tx_points() {
        let f = build_nonht_frame(&TxConfig {
            mcs: Mcs::from_rate_mbps(36).unwrap(),
            psdu: vec![0xa5; 80],
            scrambler_init: 1,
        })
        .unwrap();
        let g = OfdmGrid::non_ht();
        let cand = demodulate_symbols(&[f.baseband.clone()], 0, &g, f.symbols.len()).unwrap();
        for i in 0..2 {
            for (a, b) in cand.lltf[0][i].iter().zip(&f.lltf) {
                assert!((a - b).norm() < 1e-9);
            }
        }
        for (l, s) in f.symbols.iter().enumerate() {
            for (a, b) in cand.symbols[0][l].iter().zip(s) {
                assert!((a - b).norm() < 1e-9);
            }
        }
        let err = demodulate_symbols(&[f.baseband.clone()], 0, &g, f.symbols.len() + 1).unwrap_err();
        assert!(matches!(err, Error::TruncatedFrame { demodulated, .. } if demodulated == f.symbols.len()));
    }

    #[test]
    fn phase_tracking_recovers_rotation() {
        let g = OfdmGrid::non_ht();
        let h = vec![vec![C64::new(0.5, -0.2); 52]];
        for l in [0usize, 3, 17] {
            let mut y = vec![C64::new(0.0, 0.0); 52];
            for (&pos, p) in g.pilot_positions().iter().zip(pilot_values(l)) {
                y[pos] = h[0][pos] * p * C64::from_polar(1.0, 0.3);
            }
            let (out, pc) = track_phase(&g, &[&y], &h, l);
            assert!(pc.applied);
            assert!((pc.phase - 0.3).abs() < 1e-12);
            let pos = g.pilot_positions()[0];
            assert!((out[0][pos] - h[0][pos] * pilot_values(l)[0]).norm() < 1e-12);
        }
        let zero = vec![vec![C64::new(0.0, 0.0); 52]];
        let y = vec![C64::new(1.0, 0.0); 52];
        let (_, pc) = track_phase(&g, &[&y], &zero, 0);
        assert!(!pc.applied);
    }
}
