//! Data-aided channel estimation.
//!
//! Once a frame decodes, the re-encoded constellation `s[omega, l]` turns
//! every L-SIG and DATA symbol into a pilot. Per-symbol estimates `y / s` are
//! combined with weights `|s|^2`, so high-energy points count more.

use std::f64::consts::PI;

use super::{CsiEstimate, Flavor};
use crate::grid::OfdmGrid;
use crate::synth::frame::{PREAMBLE_LEN, SYMBOL_LEN};
use crate::{Error, Result, C64};

/// The two L-LTF observations of one antenna with their pilot values.
#[derive(Clone, Copy, Debug)]
pub struct LltfObservation<'a> {
    pub y: [&'a [C64]; 2],
    pub x: &'a [C64],
}

/// `h[omega, l] = y[omega, l] / s[omega, l]`.
pub fn per_symbol_estimate(grid: &OfdmGrid, y: &[C64], s: &[C64], l: usize) -> Result<Vec<C64>> {
    if y.len() != s.len() {
        return Err(Error::LengthMismatch { expected: s.len(), actual: y.len() });
    }
    y.iter()
        .zip(s)
        .enumerate()
        .map(|(i, (&yv, &sv))| {
            if sv.norm_sqr() == 0.0 {
                Err(Error::ZeroSymbol { subcarrier: grid.used.get(i).copied().unwrap_or(i as i32), symbol: l })
            } else {
                Ok(yv / sv)
            }
        })
        .collect()
}

fn check_lengths(n: usize, rows: &[Vec<C64>]) -> Result<()> {
    match rows.iter().find(|r| r.len() != n) {
        Some(r) => Err(Error::LengthMismatch { expected: n, actual: r.len() }),
        None => Ok(()),
    }
}

/// Energy-weighted combination
/// `h[omega] = sum_l |s[omega,l]|^2 h[omega,l] / sum_l |s[omega,l]|^2`,
/// optionally including the L-LTF observations with weights `|x_L|^2`.
/// Returns the estimate and the per-subcarrier total weight.
pub fn combine_weighted(
    grid: &OfdmGrid,
    estimates: &[Vec<C64>],
    symbols: &[Vec<C64>],
    lltf: Option<LltfObservation<'_>>,
) -> Result<(Vec<C64>, Vec<f64>)> {
    let n = grid.num_used();
    if estimates.len() != symbols.len() {
        return Err(Error::LengthMismatch { expected: symbols.len(), actual: estimates.len() });
    }
    check_lengths(n, estimates)?;
    check_lengths(n, symbols)?;
    let mut num = vec![C64::new(0.0, 0.0); n];
    let mut den = vec![0.0; n];
    for (h, s) in estimates.iter().zip(symbols) {
        for i in 0..n {
            let w = s[i].norm_sqr();
            num[i] += h[i] * w;
            den[i] += w;
        }
    }
    if let Some(obs) = lltf {
        for y in obs.y {
            for i in 0..n {
                let w = obs.x[i].norm_sqr();
                if w > 0.0 {
                    num[i] += y[i] / obs.x[i] * w;
                    den[i] += w;
                }
            }
        }
    }
    if let Some(i) = den.iter().position(|&d| d <= 0.0) {
        return Err(Error::ZeroWeight(grid.used[i]));
    }
    Ok((num.iter().zip(&den).map(|(a, &b)| a / b).collect(), den))
}

/// Unweighted mean of the per-symbol (and optionally L-LTF) estimates.
pub fn combine_mean(grid: &OfdmGrid, estimates: &[Vec<C64>], lltf: Option<LltfObservation<'_>>) -> Result<Vec<C64>> {
    let n = grid.num_used();
    check_lengths(n, estimates)?;
    let mut acc = vec![C64::new(0.0, 0.0); n];
    let mut count = 0.0;
    for h in estimates {
        acc.iter_mut().zip(h).for_each(|(a, v)| *a += v);
        count += 1.0;
    }
    if let Some(obs) = lltf {
        for y in obs.y {
            for i in 0..n {
                acc[i] += y[i] / obs.x[i];
            }
            count += 1.0;
        }
    }
    if count == 0.0 {
        return Err(Error::ZeroWeight(grid.used[0]));
    }
    Ok(acc.into_iter().map(|v| v / count).collect())
}

/// Offset in samples of the center of symbol `l` (0 = L-SIG body) from the
/// CFO compensation anchor, both relative to the frame start.
pub fn symbol_tau(grid: &OfdmGrid, l: usize, anchor: usize) -> f64 {
    let body = PREAMBLE_LEN + SYMBOL_LEN * l + grid.cp_len;
    body as f64 + (grid.fft_size as f64 - 1.0) / 2.0 - anchor as f64
}

/// Slope (rad/sample) of the residual carrier phase across a frame.
///
/// Per-symbol phases `arg(sum_a sum_omega y conj(h_ref s))` are unwrapped and
/// fitted with a line in `tau`. The intercept absorbs the phase error of the
/// reference `h_ref`; only the slope is returned. Fewer than two symbols
/// give 0.
pub fn residual_phase_slope(y: &[Vec<Vec<C64>>], s: &[Vec<C64>], h_ref: &[Vec<C64>], tau: &[f64]) -> f64 {
    let n = tau.len().min(s.len());
    if n < 2 {
        return 0.0;
    }
    let mut phases = Vec::with_capacity(n);
    let mut prev = 0.0;
    for l in 0..n {
        let mut acc = C64::new(0.0, 0.0);
        for (ya, ha) in y.iter().zip(h_ref) {
            for ((yv, hv), sv) in ya[l].iter().zip(ha).zip(&s[l]) {
                acc += yv * (hv * sv).conj();
            }
        }
        let mut p = acc.arg();
        if l > 0 {
            p = prev + (p - prev + PI).rem_euclid(2.0 * PI) - PI;
        }
        phases.push(p);
        prev = p;
    }
    let tm = tau[..n].iter().sum::<f64>() / n as f64;
    let pm = phases.iter().sum::<f64>() / n as f64;
    let (num, den) = tau[..n]
        .iter()
        .zip(&phases)
        .fold((0.0, 0.0), |(a, b), (t, p)| (a + (t - tm) * (p - pm), b + (t - tm) * (t - tm)));
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Removes a residual phase slope: symbol `l` is multiplied by
/// `exp(-j slope tau_l)`.
pub fn derotate(y: &[Vec<Vec<C64>>], slope: f64, tau: &[f64]) -> Vec<Vec<Vec<C64>>> {
    y.iter()
        .map(|ya| {
            ya.iter()
                .zip(tau)
                .map(|(sym, &t)| {
                    let r = C64::from_polar(1.0, -slope * t);
                    sym.iter().map(|v| v * r).collect()
                })
                .collect()
        })
        .collect()
}

/// Data-combined estimate for every antenna.
///
/// `y[a][l]` are phase-corrected symbols (L-SIG first), `s[l]` the rebuilt
/// constellation grid. Only the first `max_symbols` symbols are used when set.
pub fn estimate_data_combined(
    grid: &OfdmGrid,
    y: &[Vec<Vec<C64>>],
    s: &[Vec<C64>],
    y_l: &[[Vec<C64>; 2]],
    x_l: &[C64],
    include_lltf: bool,
    max_symbols: Option<usize>,
) -> Result<CsiEstimate> {
    let l_count = max_symbols.unwrap_or(s.len()).min(s.len());
    if l_count == 0 {
        return Err(Error::ZeroWeight(grid.used[0]));
    }
    if y.len() != y_l.len() {
        return Err(Error::DimensionMismatch(format!("{} symbol antennas vs {} L-LTF antennas", y.len(), y_l.len())));
    }
    let mut h = Vec::with_capacity(y.len());
    let mut weight = Vec::new();
    for (ya, yla) in y.iter().zip(y_l) {
        if ya.len() < l_count {
            return Err(Error::TruncatedFrame { demodulated: ya.len(), requested: l_count });
        }
        let est = (0..l_count)
            .map(|l| per_symbol_estimate(grid, &ya[l], &s[l], l))
            .collect::<Result<Vec<_>>>()?;
        let obs = include_lltf.then_some(LltfObservation { y: [&yla[0], &yla[1]], x: x_l });
        let (ha, w) = combine_weighted(grid, &est, &s[..l_count], obs)?;
        h.push(ha);
        weight = w;
    }
    Ok(CsiEstimate {
        flavor: Flavor::DataCombined,
        subcarriers: grid.used.clone(),
        h,
        num_observations: l_count + if include_lltf { 2 } else { 0 },
        total_weight: weight,
    })
}
