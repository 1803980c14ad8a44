//! Rate-1/2, K=7 convolutional code with generators 133 and 171 (octal), and
//! its puncturing patterns.

use crate::{Error, Result};

pub const CONSTRAINT_LEN: usize = 7;
pub const NUM_STATES: usize = 64;
pub const G0: u8 = 0o133;
pub const G1: u8 = 0o171;

/// Code rate after puncturing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CodeRate {
    Half,
    TwoThirds,
    ThreeQuarters,
}

impl CodeRate {
    pub fn from_fraction(num: u32, den: u32) -> Result<CodeRate> {
        match (num, den) {
            (1, 2) => Ok(CodeRate::Half),
            (2, 3) => Ok(CodeRate::TwoThirds),
            (3, 4) => Ok(CodeRate::ThreeQuarters),
            _ => Err(Error::UnknownCodeRate),
        }
    }

    /// Keep-mask over one period of the rate-1/2 output (`A0 B0 A1 B1 ...`).
    pub fn pattern(self) -> &'static [bool] {
        match self {
            CodeRate::Half => &[true, true],
            CodeRate::TwoThirds => &[true, true, true, false],
            CodeRate::ThreeQuarters => &[true, true, true, false, false, true],
        }
    }
}

#[inline]
fn parity(x: u8) -> u8 {
    (x.count_ones() & 1) as u8
}

/// Output pair `(A, B)` for a 7-bit register whose bit 6 is the newest input.
#[inline]
pub fn branch_output(reg: u8) -> (u8, u8) {
    (parity(reg & G0), parity(reg & G1))
}

/// Encodes with the register starting in the all-zero state. Output is
/// `A0 B0 A1 B1 ...`, twice the input length.
pub fn conv_encode(bits: &[u8]) -> Vec<u8> {
    let mut state = 0u8;
    let mut out = Vec::with_capacity(2 * bits.len());
    for &b in bits {
        let reg = ((b & 1) << 6) | state;
        let (a, bb) = branch_output(reg);
        out.push(a);
        out.push(bb);
        state = reg >> 1;
    }
    out
}

/// Removes the bits punctured at `rate`.
pub fn puncture(coded: &[u8], rate: CodeRate) -> Result<Vec<u8>> {
    let pat = rate.pattern();
    if coded.len() % pat.len() != 0 {
        return Err(Error::LengthMismatch {
            expected: coded.len().next_multiple_of(pat.len()),
            actual: coded.len(),
        });
    }
    Ok(coded
        .iter()
        .zip(pat.iter().cycle())
        .filter_map(|(&b, &keep)| keep.then_some(b))
        .collect())
}

/// Reinserts erasures (`None`) at punctured positions.
pub fn depuncture<T: Copy>(bits: &[T], rate: CodeRate) -> Result<Vec<Option<T>>> {
    let pat = rate.pattern();
    let kept = pat.iter().filter(|&&k| k).count();
    if bits.len() % kept != 0 {
        return Err(Error::LengthMismatch {
            expected: bits.len().next_multiple_of(kept),
            actual: bits.len(),
        });
    }
    let mut out = Vec::with_capacity(bits.len() / kept * pat.len());
    let mut it = bits.iter();
    while it.len() > 0 {
        for &keep in pat {
            out.push(if keep { it.next().copied() } else { None });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_in_zero_out() {
        assert!(conv_encode(&[0; 100]).iter().all(|&b| b == 0));
    }

    #[test]
    fn impulse_response() {
        let mut input = vec![1u8];
        input.extend([0; 9]);
        let out = conv_encode(&input);
        // Shift-register simulation: A taps delays {0,2,3,5,6}, B taps {0,1,2,3,6}.
        let a_taps = [0usize, 2, 3, 5, 6];
        let b_taps = [0usize, 1, 2, 3, 6];
        for t in 0..10 {
            assert_eq!(out[2 * t], a_taps.contains(&t) as u8, "A at {t}");
            assert_eq!(out[2 * t + 1], b_taps.contains(&t) as u8, "B at {t}");
        }
        assert_eq!(&out[..14], &[1, 1, 0, 1, 1, 1, 1, 1, 0, 0, 1, 0, 1, 1]);
    }

    #[test]
    fn puncture_lengths() {
        let coded: Vec<u8> = (0..18).map(|i| (i % 2) as u8).collect();
        assert_eq!(puncture(&coded, CodeRate::ThreeQuarters).unwrap().len(), 12);
        assert_eq!(puncture(&coded[..16], CodeRate::TwoThirds).unwrap().len(), 12);
        assert_eq!(puncture(&coded, CodeRate::Half).unwrap(), coded);
        assert!(puncture(&coded[..16], CodeRate::ThreeQuarters).is_err());
    }

    #[test]
    fn puncture_pattern_positions() {
        let coded: Vec<u8> = (0..6).collect();
        // A0 B0 A1 B1 A2 B2 -> A0 B0 A1 B2
        assert_eq!(puncture(&coded, CodeRate::ThreeQuarters).unwrap(), vec![0, 1, 2, 5]);
        let d = depuncture(&[0u8, 1, 2, 5], CodeRate::ThreeQuarters).unwrap();
        assert_eq!(d, vec![Some(0), Some(1), Some(2), None, None, Some(5)]);
    }

    #[test]
    fn unknown_rate() {
        assert!(matches!(CodeRate::from_fraction(5, 6), Err(Error::UnknownCodeRate)));
        assert_eq!(CodeRate::from_fraction(2, 3).unwrap(), CodeRate::TwoThirds);
    }
}
