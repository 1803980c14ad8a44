//! Monte Carlo checks of the receive chain against the synthesizer.

use std::f64::consts::PI;
use std::time::Instant;

use csisniff_core::decode::build_data_mpdu;
use csisniff_core::estimate::{CsiEstimate, Flavor};
use csisniff_core::estimate::{combine_mean, combine_weighted, derotate, per_symbol_estimate, residual_phase_slope, symbol_tau, LltfObservation};
use csisniff_core::receiver::{Receiver, ReceiverConfig, CFO_ANCHOR};
use csisniff_core::sync::{detect_frames, DetectorConfig};
use csisniff_core::synth::channel::{apply_channel, complex_normal, random_taps, ChannelRealization};
use csisniff_core::synth::frame::{build_nonht_frame, lltf_values, TxConfig, TxFrame};
use csisniff_core::synth::mcs::ALL_MCS;
use csisniff_core::synth::Mcs;
use csisniff_core::{MacAddr, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{fail, Outcome};

const FS: f64 = 20e6;
const TAP_DECAY: f64 = 4.0;

fn random_frame(rng: &mut ChaCha8Rng, mcs: Mcs, body_len: usize, seq: u16) -> TxFrame {
    let ta = MacAddr([0x02, 0, 0, 0, (seq >> 8) as u8, seq as u8]);
    let body: Vec<u8> = (0..body_len).map(|_| rng.random()).collect();
    let psdu = build_data_mpdu(ta, MacAddr::BROADCAST, ta, seq, &body);
    build_nonht_frame(&TxConfig { mcs, psdu, scrambler_init: rng.random_range(1..128) }).expect("valid frame")
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Frames across all eight rates through random multipath with CFO, once at
/// 25 dB and once noiseless. Four receive antennas.
pub fn loopback(frames: usize, seed: u64) -> Outcome {
    const ANTENNAS: usize = 4;
    let rx = match Receiver::new(ReceiverConfig::default()) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ok = [0usize; 2];
    for i in 0..frames {
        let body = rng.random_range(20..1000);
        let f = random_frame(&mut rng, ALL_MCS[i % 8], body, i as u16);
        let taps: Vec<Vec<C64>> =
            (0..ANTENNAS).map(|_| random_taps(rng.random_range(1..=16), TAP_DECAY, &mut rng)).collect();
        let cfo = rng.random_range(-100e3..100e3);
        let start = rng.random_range(300..900);
        for (k, snr) in [Some(25.0), None].into_iter().enumerate() {
            let ch = ChannelRealization {
                taps: taps.clone(),
                cfo_hz: cfo,
                noise_std: if snr.is_some() { 0.1 } else { 0.0 },
                snr_db: snr,
                start_offset: start,
                tail_len: 300,
            };
            let Ok(cap) = apply_channel(&f.baseband, &ch, ANTENNAS, &mut rng) else { continue };
            if let Ok((out, _)) = rx.process_capture(&cap) {
                if out.len() == 1 && out[0].frame.fcs_ok && out[0].frame.psdu == f.config.psdu {
                    ok[k] += 1;
                }
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let noisy = ok[0] as f64 / frames as f64;
    let pass = noisy >= 0.999 && ok[1] == frames && secs < 120.0;
    (pass, format!("25 dB FCS pass {}/{frames} ({:.2}%), noiseless {}/{frames}, {secs:.1} s for both passes", ok[0], 100.0 * noisy, ok[1]))
}

struct SyncStats {
    detected: usize,
    worst: i64,
    within2: usize,
    spurious: usize,
}

fn sync_run(rng: &mut ChaCha8Rng, f: &TxFrame, frames: usize, antennas: usize, cfg: &DetectorConfig) -> SyncStats {
    let mut st = SyncStats { detected: 0, worst: 0, within2: 0, spurious: 0 };
    for _ in 0..frames {
        let start = rng.random_range(200..1200);
        let n_taps = rng.random_range(1..=16);
        let ch = ChannelRealization {
            taps: (0..antennas).map(|_| random_taps(n_taps, TAP_DECAY, rng)).collect(),
            cfo_hz: rng.random_range(-100e3..100e3),
            noise_std: 1.0,
            snr_db: Some(10.0),
            start_offset: start,
            tail_len: 500,
        };
        let Ok(cap) = apply_channel(&f.baseband, &ch, antennas, rng) else { continue };
        let dets = detect_frames(&cap.samples, FS, cfg);
        let near: Vec<i64> =
            dets.iter().map(|d| d.start as i64 - start as i64).filter(|e| e.abs() <= 160).collect();
        st.spurious += dets.len() - near.len();
        if let Some(e) = near.first() {
            st.detected += 1;
            st.worst = st.worst.max(e.abs());
            st.within2 += usize::from(e.abs() <= 2);
        }
    }
    st
}

/// Detection rate and start error at 10 dB over random multipath with four
/// antennas (one antenna reported for reference), then false alarms on noise.
pub fn sync(frames: usize, noise_samples: usize, seed: u64) -> Outcome {
    let cfg = DetectorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_frame(&mut rng, Mcs::from_rate_mbps(6).expect("6 Mb/s"), 60, 1);
    let four = sync_run(&mut rng, &f, frames, 4, &cfg);
    let one = sync_run(&mut rng, &f, frames, 1, &cfg);
    let noise: Vec<C64> = (0..noise_samples).map(|_| complex_normal(&mut rng)).collect();
    let false_alarms = detect_frames(&[noise], FS, &cfg).len();
    let rate = four.detected as f64 / frames as f64;
    let pass = rate >= 0.99 && four.worst <= 2 && four.spurious == 0 && false_alarms == 0;
    (
        pass,
        format!(
            "10 dB, 4 antennas: detected {}/{frames}, max |start error| {}, spurious {}; \
             false alarms {false_alarms} in {noise_samples} noise samples; \
             [reference, 1 antenna: detected {}/{frames}, within +-2 {}/{}, max {}]",
            four.detected, four.worst, four.spurious, one.detected, one.within2, one.detected, one.worst
        ),
    )
}

/// Median absolute CFO error at 30 dB and 10 dB, flat channel, four antennas.
pub fn cfo(frames: usize, seed: u64) -> Outcome {
    const ANTENNAS: usize = 4;
    let cfg = DetectorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_frame(&mut rng, Mcs::from_rate_mbps(6).expect("6 Mb/s"), 60, 1);
    let mut medians = Vec::new();
    for snr in [30.0, 10.0] {
        let mut errs = Vec::with_capacity(frames);
        for _ in 0..frames {
            let cfo = rng.random_range(-100e3..100e3);
            let ch = ChannelRealization {
                taps: vec![vec![C64::new(1.0, 0.0)]],
                cfo_hz: cfo,
                noise_std: 1.0,
                snr_db: Some(snr),
                start_offset: rng.random_range(200..1200),
                tail_len: 500,
            };
            let Ok(cap) = apply_channel(&f.baseband, &ch, ANTENNAS, &mut rng) else { continue };
            match detect_frames(&cap.samples, FS, &cfg).first() {
                Some(d) => errs.push((d.cfo_hz - cfo).abs()),
                None => errs.push(f64::INFINITY),
            }
        }
        medians.push(median(errs));
    }
    let pass = medians[0] < 200.0 && medians[1] < 1000.0;
    (pass, format!("median |error| {:.0} Hz at 30 dB (< 200), {:.0} Hz at 10 dB (< 1000)", medians[0], medians[1]))
}

/// Ground-truth CSI of a flat channel `h0` as seen after CFO compensation.
fn flat_truth(ch: &ChannelRealization, h0: C64) -> C64 {
    ch.gain() * h0 * C64::from_polar(1.0, 2.0 * PI * ch.cfo_hz * CFO_ANCHOR as f64 / FS)
}

fn mse(est: &CsiEstimate, rx: &Receiver, truth: C64) -> f64 {
    let v = est.used(&rx.grid);
    let n: usize = v.iter().map(Vec::len).sum();
    v.iter().flatten().map(|h| (h - truth).norm_sqr()).sum::<f64>() / n as f64
}

fn flat_trial(rng: &mut ChaCha8Rng, rate: u32, body: usize, snr: f64, seq: u16) -> (TxFrame, ChannelRealization, C64) {
    let f = random_frame(rng, Mcs::from_rate_mbps(rate).expect("valid rate"), body, seq);
    let h0 = complex_normal(rng);
    let h0 = h0 / h0.norm();
    let ch = ChannelRealization {
        taps: vec![vec![h0]],
        cfo_hz: rng.random_range(-100e3..100e3),
        noise_std: 0.1,
        snr_db: Some(snr),
        start_offset: 500,
        tail_len: 500,
    };
    (f, ch, h0)
}

/// `MSE(cp_denoised) / MSE(lltf_raw)` on a flat channel at 15 dB.
pub fn denoising(frames: usize, seed: u64) -> Outcome {
    let rx = match Receiver::new(ReceiverConfig::default()) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut raw, mut den, mut n) = (0.0, 0.0, 0usize);
    for i in 0..frames {
        let (f, ch, h0) = flat_trial(&mut rng, 6, 100, 15.0, i as u16);
        let Ok(cap) = apply_channel(&f.baseband, &ch, 1, &mut rng) else { continue };
        let Ok((out, _)) = rx.process_capture(&cap) else { continue };
        let [pf] = out.as_slice() else { continue };
        let (Some(r), Some(d)) = (pf.estimate(Flavor::LltfRaw), pf.estimate(Flavor::CpDenoised)) else { continue };
        let truth = flat_truth(&ch, h0);
        raw += mse(r, &rx, truth);
        den += mse(d, &rx, truth);
        n += 1;
    }
    let ratio = den / raw;
    let pass = n >= frames.min(1000) && (0.25..=0.45).contains(&ratio);
    (pass, format!("ratio {ratio:.4} over {n} frames (window [0.25, 0.45], theory 17/52 = 0.327)"))
}

/// Error-variance ratio of data-aided combining versus symbol count, and
/// weighted versus plain averaging for 16-QAM.
pub fn combining(trials: usize, seed: u64) -> Outcome {
    let rx = match Receiver::new(ReceiverConfig::default()) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    const LS: [usize; 4] = [1, 5, 20, 50];
    let mut acc = [0.0; 4];
    let mut n_bpsk = 0;
    for i in 0..trials {
        let (f, ch, h0) = flat_trial(&mut rng, 6, 200, 15.0, i as u16);
        let Ok(cap) = apply_channel(&f.baseband, &ch, 1, &mut rng) else { continue };
        let Ok((out, _)) = rx.process_capture(&cap) else { continue };
        let [pf] = out.as_slice() else { continue };
        let Some(s) = pf.frame.symbols.as_ref() else { continue };
        let Ok(fe) = rx.front_end(&cap.samples, &pf.detection, s.len()) else { continue };
        let truth = flat_truth(&ch, h0);
        let mut row = [0.0; 4];
        let mut all = true;
        for (j, &l) in LS.iter().enumerate() {
            match rx.data_combined(&fe, s, Some(l)) {
                Ok(e) if l <= s.len() => row[j] = mse(&e, &rx, truth),
                _ => all = false,
            }
        }
        if all {
            n_bpsk += 1;
            for j in 0..4 {
                acc[j] += row[j];
            }
        }
    }
    let mut pass = n_bpsk > 0;
    let mut parts = Vec::new();
    for (j, &l) in LS.iter().enumerate() {
        let ratio = acc[j] / acc[0];
        let expect = 3.0 / (l as f64 + 2.0);
        let within = (ratio / expect - 1.0).abs() <= 0.2;
        pass &= within;
        parts.push(format!("L={l} {ratio:.4}/{expect:.4}"));
    }

    let (mut weighted, mut plain, mut n_qam) = (0.0, 0.0, 0usize);
    let lltf = lltf_values();
    for i in 0..trials {
        let (f, ch, h0) = flat_trial(&mut rng, 24, 200, 20.0, i as u16);
        let Ok(cap) = apply_channel(&f.baseband, &ch, 1, &mut rng) else { continue };
        let Ok((out, _)) = rx.process_capture(&cap) else { continue };
        let [pf] = out.as_slice() else { continue };
        let Some(s) = pf.frame.symbols.as_ref() else { continue };
        let Ok(fe) = rx.front_end(&cap.samples, &pf.detection, s.len()) else { continue };
        let truth = flat_truth(&ch, h0);
        let tau: Vec<f64> = (0..s.len()).map(|l| symbol_tau(&rx.grid, l, CFO_ANCHOR)).collect();
        let slope = residual_phase_slope(&fe.candidate.symbols, s, &fe.h_raw.h, &tau);
        let y = derotate(&fe.candidate.symbols, slope, &tau);
        let est: Option<Vec<Vec<C64>>> =
            (0..s.len()).map(|l| per_symbol_estimate(&rx.grid, &y[0][l], &s[l], l).ok()).collect();
        let Some(est) = est else { continue };
        let obs = LltfObservation { y: [&fe.candidate.lltf[0][0], &fe.candidate.lltf[0][1]], x: &lltf };
        let (Ok(m), Ok((w, _))) = (combine_mean(&rx.grid, &est, Some(obs)), combine_weighted(&rx.grid, &est, s, Some(obs)))
        else {
            continue;
        };
        plain += m.iter().map(|v| (v - truth).norm_sqr()).sum::<f64>();
        weighted += w.iter().map(|v| (v - truth).norm_sqr()).sum::<f64>();
        n_qam += 1;
    }
    pass &= n_qam > 0 && weighted <= plain;
    (
        pass,
        format!(
            "BPSK ({n_bpsk} trials) {}; 16-QAM ({n_qam} trials) weighted/plain MSE {:.4}",
            parts.join(", "),
            weighted / plain
        ),
    )
}
