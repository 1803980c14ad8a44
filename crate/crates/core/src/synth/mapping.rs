//! Gray-coded BPSK/QPSK/16-QAM/64-QAM mapping with unit average energy.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modulation {
    Bpsk,
    Qpsk,
    Qam16,
    Qam64,
}

impl Modulation {
    /// Coded bits per subcarrier (`N_BPSC`).
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam64 => 6,
        }
    }

    /// Normalization factor `1/sqrt(E)` applied to the integer lattice.
    pub fn scale(self) -> f64 {
        match self {
            Modulation::Bpsk => 1.0,
            Modulation::Qpsk => 1.0 / 2f64.sqrt(),
            Modulation::Qam16 => 1.0 / 10f64.sqrt(),
            Modulation::Qam64 => 1.0 / 42f64.sqrt(),
        }
    }

    /// All constellation points, indexed by the bit group read MSB-first.
    pub fn points(self) -> Vec<C64> {
        let n = self.bits_per_symbol();
        (0..1usize << n)
            .map(|v| {
                let bits: Vec<u8> = (0..n).rev().map(|i| ((v >> i) & 1) as u8).collect();
                self.map_group(&bits)
            })
            .collect()
    }

    fn map_group(self, b: &[u8]) -> C64 {
        let s = self.scale();
        match self {
            Modulation::Bpsk => C64::new(level1(b[0]), 0.0),
            Modulation::Qpsk => C64::new(level1(b[0]), level1(b[1])) * s,
            Modulation::Qam16 => C64::new(level2(b[0], b[1]), level2(b[2], b[3])) * s,
            Modulation::Qam64 => {
                C64::new(level3(b[0], b[1], b[2]), level3(b[3], b[4], b[5])) * s
            }
        }
    }

    fn demap_point(self, p: C64, out: &mut Vec<u8>) {
        let s = self.scale();
        let (i, q) = (p.re / s, p.im / s);
        match self {
            Modulation::Bpsk => out.push((p.re > 0.0) as u8),
            Modulation::Qpsk => {
                out.push((i > 0.0) as u8);
                out.push((q > 0.0) as u8);
            }
            Modulation::Qam16 => {
                for v in [i, q] {
                    out.push((v > 0.0) as u8);
                    out.push((v.abs() < 2.0) as u8);
                }
            }
            Modulation::Qam64 => {
                for v in [i, q] {
                    out.push((v > 0.0) as u8);
                    out.push((v.abs() < 4.0) as u8);
                    out.push(((v.abs() - 4.0).abs() < 2.0) as u8);
                }
            }
        }
    }
}

// 0 -> -1, 1 -> +1
fn level1(b: u8) -> f64 {
    if b == 0 {
        -1.0
    } else {
        1.0
    }
}

// 00 -> -3, 01 -> -1, 11 -> 1, 10 -> 3
fn level2(b0: u8, b1: u8) -> f64 {
    match (b0, b1) {
        (0, 0) => -3.0,
        (0, _) => -1.0,
        (_, 1) => 1.0,
        _ => 3.0,
    }
}

// 000 -> -7, 001 -> -5, 011 -> -3, 010 -> -1, 110 -> 1, 111 -> 3, 101 -> 5, 100 -> 7
fn level3(b0: u8, b1: u8, b2: u8) -> f64 {
    match (b0, b1, b2) {
        (0, 0, 0) => -7.0,
        (0, 0, _) => -5.0,
        (0, _, 1) => -3.0,
        (0, _, _) => -1.0,
        (_, 1, 0) => 1.0,
        (_, 1, _) => 3.0,
        (_, 0, 1) => 5.0,
        _ => 7.0,
    }
}

/// Maps bits to constellation points, `N_BPSC` bits per point.
pub fn map_constellation(bits: &[u8], scheme: Modulation) -> Result<Vec<C64>> {
    let n = scheme.bits_per_symbol();
    if bits.len() % n != 0 {
        return Err(Error::BitCount {
            bits: bits.len(),
            per_symbol: n,
        });
    }
    Ok(bits.chunks_exact(n).map(|g| scheme.map_group(g)).collect())
}

/// Nearest-point hard decisions.
pub fn hard_demap(points: &[C64], scheme: Modulation) -> Vec<u8> {
    let mut out = Vec::with_capacity(points.len() * scheme.bits_per_symbol());
    for &p in points {
        scheme.demap_point(p, &mut out);
    }
    out
}
