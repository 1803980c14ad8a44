//! Frame-synchronous scrambler with generator `x^7 + x^4 + 1`.

use crate::{Error, Result};

/// Scrambler LFSR. Bit 6 of the state is `x7`, bit 3 is `x4`.
#[derive(Clone, Copy, Debug)]
pub struct Scrambler {
    state: u8,
}

impl Scrambler {
    pub fn new(seed: u8) -> Result<Scrambler> {
        if seed == 0 || seed > 0x7f {
            return Err(Error::InvalidSeed(seed));
        }
        Ok(Scrambler { state: seed })
    }

    pub fn next_bit(&mut self) -> u8 {
        let fb = ((self.state >> 6) ^ (self.state >> 3)) & 1;
        self.state = ((self.state << 1) | fb) & 0x7f;
        fb
    }
}

/// First `n` bits of the scrambler sequence for `seed`.
pub fn scrambler_sequence(seed: u8, n: usize) -> Result<Vec<u8>> {
    let mut s = Scrambler::new(seed)?;
    Ok((0..n).map(|_| s.next_bit()).collect())
}

/// XORs `bits` with the scrambler sequence. Self-inverse.
pub fn scramble(bits: &[u8], seed: u8) -> Result<Vec<u8>> {
    let mut s = Scrambler::new(seed)?;
    Ok(bits.iter().map(|b| b ^ s.next_bit()).collect())
}

/// Finds the seed whose first seven sequence bits equal `prefix`.
///
/// The SERVICE field starts with seven zero bits, so the first seven
/// scrambled bits of a DATA field are the raw sequence.
pub fn recover_seed(prefix: &[u8]) -> Option<u8> {
    if prefix.len() < 7 {
        return None;
    }
    (1..=0x7fu8).find(|&seed| {
        let mut s = Scrambler { state: seed };
        prefix[..7].iter().all(|&b| s.next_bit() == b)
    })
}

/// Pilot polarity `p_n` (period 127): the all-ones scrambler sequence mapped
/// 0 -> +1, 1 -> -1.
pub fn pilot_polarity(n: usize) -> f64 {
    static SEQ: std::sync::OnceLock<[u8; 127]> = std::sync::OnceLock::new();
    let seq = SEQ.get_or_init(|| {
        let mut s = Scrambler { state: 0x7f };
        std::array::from_fn(|_| s.next_bit())
    });
    if seq[n % 127] == 0 {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    // Clause-17 127-bit sequence for the all-ones initial state.
    const ALL_ONES: &str = "0000111011110010110010010000001000100110001011101011011000001100110101001110011110110100001010101111101001010001101110001111111";

    #[test]
    fn all_ones_sequence() {
        let seq = scrambler_sequence(0x7f, 127).unwrap();
        let expected: Vec<u8> = ALL_ONES.bytes().take(127).map(|c| c - b'0').collect();
        assert_eq!(&seq[..16], &expected[..16]);
        assert_eq!(seq, expected);
        // Period 127.
        let long = scrambler_sequence(0x7f, 254).unwrap();
        assert_eq!(&long[..127], &long[127..]);
    }

    #[test]
    fn involution() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let bits: Vec<u8> = (0..100_000).map(|_| rng.random_range(0..2)).collect();
        for seed in [1u8, 0x5d, 0x7f] {
            let once = scramble(&bits, seed).unwrap();
            assert_ne!(once, bits);
            assert_eq!(scramble(&once, seed).unwrap(), bits);
        }
        assert!(scramble(&[], 3).unwrap().is_empty());
    }

    #[test]
    fn zero_seed_rejected() {
        assert!(matches!(scramble(&[0, 1], 0), Err(Error::InvalidSeed(0))));
        assert!(Scrambler::new(0x80).is_err());
    }

    #[test]
    fn seed_recovery() {
        for seed in 1..=0x7f {
            let seq = scrambler_sequence(seed, 7).unwrap();
            assert_eq!(recover_seed(&seq), Some(seed));
        }
        assert_eq!(recover_seed(&[0; 7]), None);
    }

    #[test]
    fn pilot_polarity_prefix() {
        let p: Vec<f64> = (0..8).map(pilot_polarity).collect();
        assert_eq!(p, vec![1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, 1.0]);
        assert_eq!(pilot_polarity(127), pilot_polarity(0));
        assert_eq!(pilot_polarity(126), -1.0);
    }
}
