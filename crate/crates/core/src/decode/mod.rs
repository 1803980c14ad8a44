//! Equalization and decoding of non-HT frames, and re-encoding of decoded
//! bits into the transmitted constellation grid.

mod fcs;
mod mac;
mod viterbi;

use serde::{Deserialize, Serialize};

use crate::grid::OfdmGrid;
use crate::mac_addr::MacAddr;
use crate::synth::convcode::depuncture;
use crate::synth::frame::constellation_grid;
use crate::synth::interleave::deinterleave;
use crate::synth::mapping::{hard_demap, Modulation};
use crate::synth::mcs::Mcs;
use crate::synth::scrambler::{recover_seed, scramble};
use crate::{Error, Result, C64};

pub use fcs::{append_fcs, check_fcs, crc32};
pub use mac::{build_data_mpdu, parse_mac, FrameType, MacHeader, MIN_TA_HEADER};
pub use viterbi::viterbi_decode;

/// Channel power below which a subcarrier is erased.
pub const ERASURE_FLOOR: f64 = 1e-20;

/// Maximum-ratio combining of one symbol across antennas:
/// `s = sum_a conj(h_a) y_a / sum_a |h_a|^2`. Returns the equalized points
/// (`None` where the channel vanishes on every antenna) and the per-subcarrier
/// combined channel power `sum_a |h_a|^2`.
pub fn mrc_equalize(y: &[&[C64]], h: &[Vec<C64>]) -> (Vec<Option<C64>>, Vec<f64>) {
    let n = h.first().map_or(0, Vec::len);
    let mut out = Vec::with_capacity(n);
    let mut power = Vec::with_capacity(n);
    for i in 0..n {
        let mut num = C64::new(0.0, 0.0);
        let mut den = 0.0;
        for (ya, ha) in y.iter().zip(h) {
            num += ha[i].conj() * ya[i];
            den += ha[i].norm_sqr();
        }
        out.push((den > ERASURE_FLOOR).then(|| num / den));
        power.push(den);
    }
    (out, power)
}

/// Frame format decided from the L-SIG and the two following symbols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    NonHt,
    Other,
}

/// Energy ratio separating BPSK from QBPSK.
pub const BPSK_MARGIN: f64 = 4.0;

fn axis_energy(grid: &OfdmGrid, sym: &[Option<C64>]) -> (f64, f64) {
    grid.data_positions()
        .iter()
        .filter_map(|&p| sym.get(p).copied().flatten())
        .fold((0.0, 0.0), |(r, i), v| (r + v.re * v.re, i + v.im * v.im))
}

/// Classifies a frame from equalized symbols 5, 6 and 7 of the PPDU (L-SIG
/// and the next two). The L-SIG must be BPSK; a QBPSK symbol 6 or 7 marks an
/// HT/VHT-style SIG field. Fewer than three symbols classify as other.
pub fn detect_format(grid: &OfdmGrid, symbols: &[Vec<Option<C64>>]) -> Format {
    if symbols.len() < 3 {
        return Format::Other;
    }
    let (re, im) = axis_energy(grid, &symbols[0]);
    if !(re > BPSK_MARGIN * im) {
        return Format::Other;
    }
    for sym in &symbols[1..3] {
        let (re, im) = axis_energy(grid, sym);
        if im > BPSK_MARGIN * re {
            return Format::Other;
        }
    }
    Format::NonHt
}

/// Decoded L-SIG fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LsigInfo {
    pub rate_mbps: u32,
    pub mcs: Mcs,
    pub length: usize,
    pub parity_ok: bool,
}

fn demap_with_erasures(points: &[Option<C64>], modulation: Modulation) -> Vec<Option<u8>> {
    let n = modulation.bits_per_symbol();
    let mut out = Vec::with_capacity(points.len() * n);
    for p in points {
        match p {
            Some(v) => out.extend(hard_demap(&[*v], modulation).into_iter().map(Some)),
            None => out.extend(std::iter::repeat_n(None, n)),
        }
    }
    out
}

fn data_points(grid: &OfdmGrid, sym: &[Option<C64>]) -> Vec<Option<C64>> {
    grid.data_positions().iter().map(|&p| sym[p]).collect()
}

/// Interprets the 24 decoded L-SIG bits.
pub fn lsig_from_bits(bits: &[u8]) -> Result<LsigInfo> {
    if bits.len() < 18 {
        return Err(Error::LengthMismatch { expected: 24, actual: bits.len() });
    }
    let rate = bits[..4].iter().enumerate().fold(0u8, |acc, (i, &b)| acc | (b << i));
    let length = bits[5..17].iter().enumerate().fold(0usize, |acc, (i, &b)| acc | ((b as usize) << i));
    let parity_ok = bits[..18].iter().fold(0, |acc, b| acc ^ b) == 0;
    let mcs = Mcs::from_signal_bits(rate)?;
    Ok(LsigInfo { rate_mbps: mcs.rate_mbps, mcs, length, parity_ok })
}

/// Decodes the equalized L-SIG symbol. Parity failures, illegal rates and a
/// zero length reject the frame.
pub fn parse_lsig(grid: &OfdmGrid, sym: &[Option<C64>]) -> Result<LsigInfo> {
    let bits = demap_with_erasures(&data_points(grid, sym), Modulation::Bpsk);
    let coded = deinterleave(&bits, 48, 1)?;
    let info = lsig_from_bits(&viterbi_decode(&coded, true))?;
    if !info.parity_ok {
        return Err(Error::ParityFail);
    }
    if info.length == 0 {
        return Err(Error::PayloadLength(0));
    }
    Ok(info)
}

/// Output of DATA decoding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataDecode {
    pub psdu: Vec<u8>,
    pub scrambler_seed: u8,
}

/// Decodes the DATA field from equalized DATA symbols (L-SIG excluded).
pub fn decode_data(grid: &OfdmGrid, symbols: &[Vec<Option<C64>>], lsig: &LsigInfo) -> Result<DataDecode> {
    let mcs = lsig.mcs;
    let n_sym = mcs.num_data_symbols(lsig.length);
    if symbols.len() < n_sym {
        return Err(Error::TruncatedFrame { demodulated: symbols.len(), requested: n_sym });
    }
    let mut punctured = Vec::with_capacity(n_sym * mcs.n_cbps);
    for sym in &symbols[..n_sym] {
        let bits = demap_with_erasures(&data_points(grid, sym), mcs.modulation);
        punctured.extend(deinterleave(&bits, mcs.n_cbps, mcs.n_bpsc)?);
    }
    let coded: Vec<Option<u8>> = depuncture(&punctured, mcs.code_rate)?.into_iter().map(Option::flatten).collect();
    let scrambled = viterbi_decode(&coded, false);
    let seed = recover_seed(&scrambled).ok_or(Error::InvalidSeed(0))?;
    let bits = scramble(&scrambled, seed)?;
    let psdu = bits[16..16 + 8 * lsig.length]
        .chunks_exact(8)
        .map(|c| c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | (b << i)))
        .collect();
    Ok(DataDecode { psdu, scrambler_seed: seed })
}

/// Re-encodes a decoded PSDU into `s[omega, l]` for the L-SIG and DATA
/// symbols (pilots included).
pub fn rebuild_tx_symbols(psdu: &[u8], lsig: &LsigInfo, scrambler_seed: u8) -> Result<Vec<Vec<C64>>> {
    constellation_grid(psdu, &lsig.mcs, scrambler_seed)
}

/// A fully processed frame.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodedFrame {
    pub lsig: LsigInfo,
    pub psdu: Vec<u8>,
    pub fcs_ok: bool,
    pub scrambler_seed: u8,
    pub tx_mac: Option<MacAddr>,
    pub dst_mac: Option<MacAddr>,
    pub format: Format,
    /// Rebuilt transmit grid, present only when the FCS passed.
    pub symbols: Option<Vec<Vec<C64>>>,
}

/// Completes decoding of a frame whose DATA field was decoded: FCS, MAC
/// addresses and, on success, the rebuilt transmit grid.
pub fn finish_frame(lsig: LsigInfo, data: DataDecode) -> Result<DecodedFrame> {
    let fcs_ok = check_fcs(&data.psdu)?;
    let header = if fcs_ok { parse_mac(&data.psdu).ok() } else { None };
    let symbols = if fcs_ok { Some(rebuild_tx_symbols(&data.psdu, &lsig, data.scrambler_seed)?) } else { None };
    Ok(DecodedFrame {
        lsig,
        fcs_ok,
        scrambler_seed: data.scrambler_seed,
        tx_mac: header.as_ref().map(|h| h.tx_mac),
        dst_mac: header.as_ref().map(|h| h.dst_mac),
        format: Format::NonHt,
        symbols,
        psdu: data.psdu,
    })
}
