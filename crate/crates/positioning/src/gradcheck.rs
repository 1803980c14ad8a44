//! Central-difference check of the analytic gradients.

use ndarray::ArrayView2;
use rand::Rng;

use crate::mlp::Mlp;
use crate::Result;

/// Result for one parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    pub layer: usize,
    pub is_bias: bool,
    pub checked: usize,
    /// `||g_a - g_n|| / (||g_a|| + ||g_n||)` over the checked coordinates.
    pub rel_error: f64,
}

/// Compares the gradients with central differences of step `h`.
/// `max_coords` caps the coordinates sampled per tensor; tensors smaller
/// than the cap are checked exhaustively.
pub fn gradient_check<R: Rng + ?Sized>(
    model: &Mlp,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    h: f64,
    max_coords: usize,
    rng: &mut R,
) -> Result<Vec<GradCheck>> {
    let (_, grads) = model.backward(x, y)?;
    let mut probe = model.clone();
    let mut out = Vec::new();
    for li in 0..model.layers.len() {
        for is_bias in [false, true] {
            let size = if is_bias { model.layers[li].b.len() } else { model.layers[li].w.len() };
            let coords: Vec<usize> = if size <= max_coords {
                (0..size).collect()
            } else {
                (0..max_coords).map(|_| rng.random_range(0..size)).collect()
            };
            let (mut num, mut diff, mut ana) = (0.0, 0.0, 0.0);
            for &c in &coords {
                let g_a = if is_bias {
                    grads[li].b[c]
                } else {
                    grads[li].w.as_slice().expect("standard layout")[c]
                };
                let orig = *param(&mut probe, li, is_bias, c);
                *param(&mut probe, li, is_bias, c) = orig + h;
                let up = probe.loss(x, y)?;
                *param(&mut probe, li, is_bias, c) = orig - h;
                let down = probe.loss(x, y)?;
                *param(&mut probe, li, is_bias, c) = orig;
                let g_n = (up - down) / (2.0 * h);
                diff += (g_a - g_n).powi(2);
                ana += g_a * g_a;
                num += g_n * g_n;
            }
            let denom = ana.sqrt() + num.sqrt();
            let rel_error = if denom == 0.0 { 0.0 } else { diff.sqrt() / denom };
            out.push(GradCheck { layer: li, is_bias, checked: coords.len(), rel_error });
        }
    }
    Ok(out)
}

/// Moves zero-initialized biases off the ReLU kink so central differences
/// do not straddle it.
pub fn jitter_biases<R: Rng + ?Sized>(model: &mut Mlp, scale: f64, rng: &mut R) {
    for l in &mut model.layers {
        l.b.mapv_inplace(|_| rng.random_range(-scale..scale));
    }
}

fn param(m: &mut Mlp, layer: usize, is_bias: bool, c: usize) -> &mut f64 {
    if is_bias {
        &mut m.layers[layer].b[c]
    } else {
        &mut m.layers[layer].w.as_slice_mut().expect("standard layout")[c]
    }
}
