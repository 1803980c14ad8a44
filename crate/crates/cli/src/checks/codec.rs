//! Denoiser algebra and coding-chain known answers.

use std::f64::consts::PI;

use csisniff_core::decode::crc32;
use csisniff_core::estimate::build_denoiser;
use csisniff_core::grid::OfdmGrid;
use csisniff_core::synth::channel::random_taps;
use csisniff_core::synth::convcode::conv_encode;
use csisniff_core::synth::interleave::{deinterleave, interleave};
use csisniff_core::synth::mapping::Modulation;
use csisniff_core::synth::scrambler::scramble;
use csisniff_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{fail, Outcome};

pub fn denoiser_algebra(seed: u64) -> Outcome {
    let grid = OfdmGrid::non_ht();
    let op = match build_denoiser(&grid) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let used_rows: Vec<usize> =
        grid.used.iter().map(|k| op.subcarriers.iter().position(|s| s == k).expect("used in output")).collect();
    let (mut fixed_err, mut idem_err) = (0.0f64, 0.0f64);
    for trial in 0..200 {
        // Exact responses of channels with 1..=17 taps, evaluated on all 64 bins.
        let taps = random_taps(1 + trial % 17, 3.0, &mut rng);
        let full: Vec<C64> = op
            .subcarriers
            .iter()
            .map(|&k| {
                taps.iter()
                    .enumerate()
                    .map(|(n, &h)| h * C64::from_polar(1.0, -2.0 * PI * (k * n as i32) as f64 / 64.0))
                    .sum()
            })
            .collect();
        let used: Vec<C64> = used_rows.iter().map(|&r| full[r]).collect();
        let out = match op.apply(&used) {
            Ok(o) => o,
            Err(e) => return fail(e),
        };
        fixed_err = fixed_err.max(out.iter().zip(&full).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));

        let noisy: Vec<C64> = (0..grid.num_used()).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let once = op.apply(&noisy).expect("dimension checked");
        let once_used: Vec<C64> = used_rows.iter().map(|&r| once[r]).collect();
        let twice = op.apply(&once_used).expect("dimension checked");
        idem_err = idem_err.max(once.iter().zip(&twice).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
    }
    let shape = op.shape();
    let pass = fixed_err < 1e-9 && idem_err < 1e-9 && shape == (64, 52);
    (pass, format!("fixed-point error {fixed_err:.2e}, idempotence error {idem_err:.2e}, shape {}x{}", shape.0, shape.1))
}

fn octal_bits(g: u8) -> Vec<u8> {
    (0..7).map(|i| (g >> (6 - i)) & 1).collect()
}

pub fn known_answers(scramble_bits: usize, seed: u64) -> Outcome {
    let mut notes = Vec::new();
    let crc = crc32(b"123456789");
    let crc_ok = crc == 0xCBF4_3926;
    notes.push(format!("crc {crc:#010x}"));

    // A single one followed by zeros emits the generator taps, newest first.
    let mut impulse = vec![0u8; 7];
    impulse[0] = 1;
    let coded = conv_encode(&impulse);
    let a: Vec<u8> = coded.iter().step_by(2).copied().collect();
    let b: Vec<u8> = coded.iter().skip(1).step_by(2).copied().collect();
    let conv_ok = a == octal_bits(0o133) && b == octal_bits(0o171);
    notes.push(format!("impulse A {a:?} B {b:?}"));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits: Vec<u8> = (0..scramble_bits).map(|_| rng.random_range(0..2)).collect();
    let mut scr_ok = true;
    for s in 1..128u8 {
        let twice = scramble(&bits, s).and_then(|x| scramble(&x, s));
        scr_ok &= twice.is_ok_and(|t| t == bits);
    }
    notes.push(format!("scrambler involution over {scramble_bits} bits x 127 seeds {scr_ok}"));

    let mut il_ok = true;
    for m in [Modulation::Bpsk, Modulation::Qpsk, Modulation::Qam16, Modulation::Qam64] {
        let n_bpsc = m.bits_per_symbol();
        let n_cbps = 48 * n_bpsc;
        for _ in 0..100 {
            let block: Vec<u8> = (0..n_cbps).map(|_| rng.random_range(0..2)).collect();
            let back = interleave(&block, n_cbps, n_bpsc).and_then(|x| deinterleave(&x, n_cbps, n_bpsc));
            il_ok &= back.is_ok_and(|b| b == block);
        }
    }
    notes.push(format!("interleaver round trip {il_ok}"));
    (crc_ok && conv_ok && scr_ok && il_ok, notes.join("; "))
}
