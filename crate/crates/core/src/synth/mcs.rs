//! The eight non-HT rates.

use serde::{Deserialize, Serialize};

use super::convcode::CodeRate;
use super::mapping::Modulation;
use crate::{Error, Result};

/// Modulation and coding scheme parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Mcs {
    pub rate_mbps: u32,
    pub modulation: Modulation,
    pub code_rate: CodeRate,
    /// Coded bits per subcarrier.
    pub n_bpsc: usize,
    /// Coded bits per OFDM symbol.
    pub n_cbps: usize,
    /// Data bits per OFDM symbol.
    pub n_dbps: usize,
    /// L-SIG RATE field, `R1` in bit 0.
    pub signal_bits: u8,
}

const fn mcs(
    rate_mbps: u32,
    modulation: Modulation,
    code_rate: CodeRate,
    n_bpsc: usize,
    n_dbps: usize,
    r1_r4: [u8; 4],
) -> Mcs {
    Mcs {
        rate_mbps,
        modulation,
        code_rate,
        n_bpsc,
        n_cbps: 48 * n_bpsc,
        n_dbps,
        signal_bits: r1_r4[0] | (r1_r4[1] << 1) | (r1_r4[2] << 2) | (r1_r4[3] << 3),
    }
}

pub const ALL_MCS: [Mcs; 8] = [
    mcs(6, Modulation::Bpsk, CodeRate::Half, 1, 24, [1, 1, 0, 1]),
    mcs(9, Modulation::Bpsk, CodeRate::ThreeQuarters, 1, 36, [1, 1, 1, 1]),
    mcs(12, Modulation::Qpsk, CodeRate::Half, 2, 48, [0, 1, 0, 1]),
    mcs(18, Modulation::Qpsk, CodeRate::ThreeQuarters, 2, 72, [0, 1, 1, 1]),
    mcs(24, Modulation::Qam16, CodeRate::Half, 4, 96, [1, 0, 0, 1]),
    mcs(36, Modulation::Qam16, CodeRate::ThreeQuarters, 4, 144, [1, 0, 1, 1]),
    mcs(48, Modulation::Qam64, CodeRate::TwoThirds, 6, 192, [0, 0, 0, 1]),
    mcs(54, Modulation::Qam64, CodeRate::ThreeQuarters, 6, 216, [0, 0, 1, 1]),
];

impl Mcs {
    pub fn from_rate_mbps(rate: u32) -> Result<Mcs> {
        ALL_MCS
            .iter()
            .find(|m| m.rate_mbps == rate)
            .copied()
            .ok_or_else(|| Error::UnsupportedMode(format!("{rate} Mbit/s")))
    }

    /// Looks up the RATE field (`R1` in bit 0).
    pub fn from_signal_bits(bits: u8) -> Result<Mcs> {
        ALL_MCS
            .iter()
            .find(|m| m.signal_bits == bits)
            .copied()
            .ok_or(Error::IllegalRate(bits))
    }

    /// Number of DATA symbols for a PSDU of `length` octets.
    pub fn num_data_symbols(&self, length: usize) -> usize {
        (16 + 8 * length + 6).div_ceil(self.n_dbps)
    }
}

impl Serialize for Mcs {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u32(self.rate_mbps)
    }
}

impl<'de> Deserialize<'de> for Mcs {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = u32::deserialize(d)?;
        Mcs::from_rate_mbps(r).map_err(serde::de::Error::custom)
    }
}
