//! Two-permutation block interleaver applied per OFDM symbol.

use crate::{Error, Result};

/// `perm[k]` is the output position of input bit `k`.
pub fn interleaver_permutation(n_cbps: usize, n_bpsc: usize) -> Vec<usize> {
    let s = (n_bpsc / 2).max(1);
    (0..n_cbps)
        .map(|k| {
            let i = (n_cbps / 16) * (k % 16) + k / 16;
            s * (i / s) + (i + n_cbps - (16 * i / n_cbps)) % s
        })
        .collect()
}

fn check_len(len: usize, n_cbps: usize) -> Result<()> {
    if len != n_cbps {
        return Err(Error::LengthMismatch {
            expected: n_cbps,
            actual: len,
        });
    }
    Ok(())
}

/// Interleaves one symbol's worth of coded bits.
pub fn interleave<T: Copy + Default>(bits: &[T], n_cbps: usize, n_bpsc: usize) -> Result<Vec<T>> {
    check_len(bits.len(), n_cbps)?;
    let mut out = vec![T::default(); n_cbps];
    for (k, &j) in interleaver_permutation(n_cbps, n_bpsc).iter().enumerate() {
        out[j] = bits[k];
    }
    Ok(out)
}

/// Inverse of [`interleave`].
pub fn deinterleave<T: Copy + Default>(bits: &[T], n_cbps: usize, n_bpsc: usize) -> Result<Vec<T>> {
    check_len(bits.len(), n_cbps)?;
    Ok(interleaver_permutation(n_cbps, n_bpsc)
        .iter()
        .map(|&j| bits[j])
        .collect())
}
