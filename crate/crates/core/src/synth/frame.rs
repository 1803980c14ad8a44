//! Non-HT PPDU assembly: L-STF, L-LTF, L-SIG and DATA.

use std::sync::{Arc, OnceLock};

use rustfft::{Fft, FftPlanner};

use super::convcode::{conv_encode, puncture};
use super::interleave::interleave;
use super::mapping::{map_constellation, Modulation};
use super::mcs::Mcs;
use super::scrambler::{pilot_polarity, scramble};
use crate::grid::OfdmGrid;
use crate::{Error, Result, C64};

/// Samples in the L-STF (ten 16-sample short symbols).
pub const LSTF_LEN: usize = 160;
/// Samples in the L-LTF (32-sample guard plus two 64-sample long symbols).
pub const LLTF_LEN: usize = 160;
/// Offset of the first long training symbol from the frame start.
pub const LLTF1_OFFSET: usize = LSTF_LEN + 32;
/// Offset of the second long training symbol from the frame start.
pub const LLTF2_OFFSET: usize = LLTF1_OFFSET + 64;
/// Offset of the L-SIG symbol (including its CP) from the frame start.
pub const LSIG_OFFSET: usize = LSTF_LEN + LLTF_LEN;
pub const PREAMBLE_LEN: usize = LSIG_OFFSET;
pub const SYMBOL_LEN: usize = 80;
/// Largest PSDU the 12-bit LENGTH field can describe.
pub const MAX_PSDU_LEN: usize = 4095;

const PILOT_BASE: [f64; 4] = [1.0, 1.0, 1.0, -1.0];

// L-LTF values on subcarriers -26..=26.
const LLTF_SEQ: [i8; 53] = [
    1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 0, 1, -1,
    -1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1, -1, 1, -1, 1, 1, 1, 1,
];

// Nonzero L-STF values (before the sqrt(13/6) factor) as (subcarrier, sign of 1+j).
const LSTF_SEQ: [(i32, f64); 12] = [
    (-24, 1.0),
    (-20, -1.0),
    (-16, 1.0),
    (-12, -1.0),
    (-8, -1.0),
    (-4, 1.0),
    (4, -1.0),
    (8, -1.0),
    (12, 1.0),
    (16, 1.0),
    (20, 1.0),
    (24, 1.0),
];

/// Transmit parameters of one PPDU.
#[derive(Clone, Debug, PartialEq)]
pub struct TxConfig {
    pub mcs: Mcs,
    /// MAC frame including FCS.
    pub psdu: Vec<u8>,
    /// Initial scrambler state, nonzero 7-bit.
    pub scrambler_init: u8,
}

impl TxConfig {
    pub fn validate(&self) -> Result<()> {
        if self.psdu.is_empty() || self.psdu.len() > MAX_PSDU_LEN {
            return Err(Error::PayloadLength(self.psdu.len()));
        }
        if self.scrambler_init == 0 || self.scrambler_init > 0x7f {
            return Err(Error::InvalidSeed(self.scrambler_init));
        }
        Ok(())
    }
}

/// A synthesized PPDU with its transmit-side ground truth.
#[derive(Clone, Debug)]
pub struct TxFrame {
    pub config: TxConfig,
    /// 20 MHz baseband, unit average power.
    pub baseband: Vec<C64>,
    /// `s[omega, l]` for the L-SIG (`l = 0`) and every DATA symbol, over the
    /// used subcarriers including pilots.
    pub symbols: Vec<Vec<C64>>,
    /// L-LTF pilot values `x_L[omega]` over the used subcarriers.
    pub lltf: Vec<C64>,
}

impl TxFrame {
    pub fn num_data_symbols(&self) -> usize {
        self.symbols.len() - 1
    }

    pub fn len(&self) -> usize {
        self.baseband.len()
    }

    pub fn is_empty(&self) -> bool {
        self.baseband.is_empty()
    }
}

fn fft64(inverse: bool) -> Arc<dyn Fft<f64>> {
    static FWD: OnceLock<Arc<dyn Fft<f64>>> = OnceLock::new();
    static INV: OnceLock<Arc<dyn Fft<f64>>> = OnceLock::new();
    let cell = if inverse { &INV } else { &FWD };
    cell.get_or_init(|| {
        let mut planner = FftPlanner::new();
        if inverse {
            planner.plan_fft_inverse(64)
        } else {
            planner.plan_fft_forward(64)
        }
    })
    .clone()
}

/// Shared 64-point forward FFT.
pub(crate) fn forward_fft64() -> Arc<dyn Fft<f64>> {
    fft64(false)
}

/// Time-domain symbol body (no CP) for values on the used subcarriers.
///
/// The inverse DFT is scaled by `1/sqrt(W_used)` so a symbol with unit-energy
/// values on all used subcarriers has unit average sample power.
pub fn modulate_body(grid: &OfdmGrid, used_values: &[C64]) -> Vec<C64> {
    let mut buf = vec![C64::new(0.0, 0.0); grid.fft_size];
    for (&k, &v) in grid.used.iter().zip(used_values) {
        buf[grid.bin(k)] = v;
    }
    fft64(true).process(&mut buf);
    let scale = 1.0 / (grid.num_used() as f64).sqrt();
    buf.iter().map(|v| v * scale).collect()
}

/// Body with its cyclic prefix prepended.
pub fn modulate_symbol(grid: &OfdmGrid, used_values: &[C64]) -> Vec<C64> {
    let body = modulate_body(grid, used_values);
    let mut out = body[grid.fft_size - grid.cp_len..].to_vec();
    out.extend_from_slice(&body);
    out
}

/// `x_L[omega]` over the used subcarriers.
pub fn lltf_values() -> Vec<C64> {
    LLTF_SEQ
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != 26)
        .map(|(_, &v)| C64::new(v as f64, 0.0))
        .collect()
}

/// L-STF values over the used subcarriers.
pub fn lstf_values(grid: &OfdmGrid) -> Vec<C64> {
    let amp = (13.0f64 / 6.0).sqrt();
    let mut v = vec![C64::new(0.0, 0.0); grid.num_used()];
    for &(k, sign) in &LSTF_SEQ {
        let pos = grid.used_position(k).expect("STF tone on a used subcarrier");
        v[pos] = C64::new(sign, sign) * amp;
    }
    v
}

/// One 64-sample long training symbol.
pub fn lltf_symbol() -> Vec<C64> {
    modulate_body(&OfdmGrid::non_ht(), &lltf_values())
}

/// The 160-sample L-STF.
pub fn lstf_time() -> Vec<C64> {
    let body = modulate_body(&OfdmGrid::non_ht(), &lstf_values(&OfdmGrid::non_ht()));
    (0..LSTF_LEN).map(|n| body[n % 64]).collect()
}

/// The 160-sample L-LTF.
pub fn lltf_time() -> Vec<C64> {
    let body = lltf_symbol();
    let mut out = body[32..].to_vec();
    out.extend_from_slice(&body);
    out.extend_from_slice(&body);
    out
}

/// The 24 L-SIG bits: RATE (R1 first), reserved, LENGTH (LSB first), even
/// parity over bits 0..=16, six tail zeros.
pub fn lsig_bits(mcs: &Mcs, length: usize) -> [u8; 24] {
    let mut b = [0u8; 24];
    for (i, bit) in b.iter_mut().take(4).enumerate() {
        *bit = (mcs.signal_bits >> i) & 1;
    }
    for i in 0..12 {
        b[5 + i] = ((length >> i) & 1) as u8;
    }
    b[17] = b[..17].iter().fold(0, |acc, x| acc ^ x);
    b
}

/// Inserts pilots with polarity `p_{polarity_index}` around 48 data points.
pub fn assemble_symbol(grid: &OfdmGrid, data: &[C64], polarity_index: usize) -> Vec<C64> {
    let pol = pilot_polarity(polarity_index);
    let mut out = vec![C64::new(0.0, 0.0); grid.num_used()];
    for (&pos, &v) in grid.data_positions().iter().zip(data) {
        out[pos] = v;
    }
    for (&pos, &base) in grid.pilot_positions().iter().zip(PILOT_BASE.iter()) {
        out[pos] = C64::new(base * pol, 0.0);
    }
    out
}

/// Pilot values of symbol `l` (0 = L-SIG) in pilot order.
pub fn pilot_values(l: usize) -> [C64; 4] {
    let pol = pilot_polarity(l);
    PILOT_BASE.map(|b| C64::new(b * pol, 0.0))
}

/// The 48 BPSK points of the L-SIG symbol.
pub fn encode_lsig(mcs: &Mcs, length: usize) -> Vec<C64> {
    let coded = conv_encode(&lsig_bits(mcs, length));
    let il = interleave(&coded, 48, 1).expect("48 coded bits");
    map_constellation(&il, Modulation::Bpsk).expect("BPSK")
}

/// Unscrambled DATA bits: SERVICE, PSDU (LSB first), tail and pad.
pub fn data_bits(psdu: &[u8], mcs: &Mcs) -> Vec<u8> {
    let n_sym = mcs.num_data_symbols(psdu.len());
    let mut bits = vec![0u8; 16];
    for byte in psdu {
        bits.extend((0..8).map(|i| (byte >> i) & 1));
    }
    bits.resize(n_sym * mcs.n_dbps, 0);
    bits
}

/// Per-symbol DATA constellation points (48 each).
pub fn encode_data(psdu: &[u8], mcs: &Mcs, seed: u8) -> Result<Vec<Vec<C64>>> {
    let mut scrambled = scramble(&data_bits(psdu, mcs), seed)?;
    let tail = 16 + 8 * psdu.len();
    scrambled[tail..tail + 6].fill(0);
    let coded = puncture(&conv_encode(&scrambled), mcs.code_rate)?;
    coded
        .chunks_exact(mcs.n_cbps)
        .map(|blk| map_constellation(&interleave(blk, mcs.n_cbps, mcs.n_bpsc)?, mcs.modulation))
        .collect()
}

/// `s[omega, l]` for the L-SIG and DATA symbols, pilots included.
pub fn constellation_grid(psdu: &[u8], mcs: &Mcs, seed: u8) -> Result<Vec<Vec<C64>>> {
    let grid = OfdmGrid::non_ht();
    let mut out = vec![assemble_symbol(&grid, &encode_lsig(mcs, psdu.len()), 0)];
    for (n, data) in encode_data(psdu, mcs, seed)?.iter().enumerate() {
        out.push(assemble_symbol(&grid, data, n + 1));
    }
    Ok(out)
}

/// Synthesizes a complete non-HT PPDU.
pub fn build_nonht_frame(cfg: &TxConfig) -> Result<TxFrame> {
    cfg.validate()?;
    let grid = OfdmGrid::non_ht();
    let symbols = constellation_grid(&cfg.psdu, &cfg.mcs, cfg.scrambler_init)?;
    let mut baseband = Vec::with_capacity(PREAMBLE_LEN + SYMBOL_LEN * symbols.len());
    baseband.extend(lstf_time());
    baseband.extend(lltf_time());
    for s in &symbols {
        baseband.extend(modulate_symbol(&grid, s));
    }
    Ok(TxFrame {
        config: cfg.clone(),
        baseband,
        symbols,
        lltf: lltf_values(),
    })
}

/// Scrambler seed for frame `n` of a sequence, never zero.
pub fn default_seed(n: u64) -> u8 {
    ((n.wrapping_mul(0x9e37_79b9_7f4a_7c15) >> 57) as u8 % 127) + 1
}
