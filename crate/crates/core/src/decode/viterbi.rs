//! Hard-decision Viterbi decoder for the K=7 (133, 171) code.

use crate::synth::convcode::{branch_output, NUM_STATES};

/// Decodes `A0 B0 A1 B1 ...` pairs (`None` = erased, zero cost) into one bit
/// per pair. The encoder is assumed to start in state 0; traceback starts
/// from the best final state, or from state 0 when `terminated` is set.
pub fn viterbi_decode(coded: &[Option<u8>], terminated: bool) -> Vec<u8> {
    let n = coded.len() / 2;
    if n == 0 {
        return Vec::new();
    }
    let outputs: [(u8, u8); 128] = std::array::from_fn(|r| branch_output(r as u8));
    const INF: u32 = u32::MAX / 2;
    let mut metric = [INF; NUM_STATES];
    metric[0] = 0;
    // decisions[t] bit ns = low bit of the surviving predecessor of ns
    let mut decisions = vec![0u64; n];
    for t in 0..n {
        let (ra, rb) = (coded[2 * t], coded[2 * t + 1]);
        let mut next = [INF; NUM_STATES];
        let mut dec = 0u64;
        for (ns, slot) in next.iter_mut().enumerate() {
            let b = ns >> 5;
            let mut best = INF;
            let mut best_x = 0;
            for x in 0..2 {
                let s = ((ns << 1) & 0x3f) | x;
                let m = metric[s];
                if m >= INF {
                    continue;
                }
                let (a, bb) = outputs[(b << 6) | s];
                let cost = ra.map_or(0, |v| (v != a) as u32) + rb.map_or(0, |v| (v != bb) as u32);
                if m + cost < best {
                    best = m + cost;
                    best_x = x;
                }
            }
            *slot = best;
            dec |= (best_x as u64) << ns;
        }
        metric = next;
        decisions[t] = dec;
    }
    let mut state = if terminated {
        0
    } else {
        (0..NUM_STATES).min_by_key(|&s| metric[s]).unwrap_or(0)
    };
    let mut out = vec![0u8; n];
    for t in (0..n).rev() {
        out[t] = (state >> 5) as u8;
        let x = ((decisions[t] >> state) & 1) as usize;
        state = ((state << 1) & 0x3f) | x;
    }
    out
}
