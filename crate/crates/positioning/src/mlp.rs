//! Fully connected network with ReLU hidden layers and a linear output.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::Uniform;

use crate::{Error, Result};

/// Layer widths of the reference architecture.
pub const DEFAULT_DIMS: [usize; 6] = [832, 832, 512, 256, 64, 2];

/// One affine layer, `z = W x + b` with `W` of shape `(out, in)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// Gradients (or Adam moments) with the same shapes as the layers.
pub type Params = Vec<Layer>;

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub dims: Vec<usize>,
    pub layers: Vec<Layer>,
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::Dimension(format!("invalid layer widths {dims:?}")));
    }
    Ok(())
}

impl Mlp {
    /// All weights and biases zero.
    pub fn zeros(dims: &[usize]) -> Result<Mlp> {
        check_dims(dims)?;
        let layers = dims
            .windows(2)
            .map(|d| Layer { w: Array2::zeros((d[1], d[0])), b: Array1::zeros(d[1]) })
            .collect();
        Ok(Mlp { dims: dims.to_vec(), layers })
    }

    /// Weights uniform in `+-sqrt(6 / fan_in)`, biases zero.
    pub fn init<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Mlp> {
        let mut m = Mlp::zeros(dims)?;
        for l in &mut m.layers {
            let a = (6.0 / l.w.ncols() as f64).sqrt();
            let dist = Uniform::new_inclusive(-a, a).expect("finite bound");
            l.w.mapv_inplace(|_| rng.sample(dist));
        }
        Ok(m)
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("at least two widths")
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Rows of `x` are samples. Returns the outputs, one row per sample.
    pub fn forward_batch(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Dimension(format!("input has {} features, model expects {}", x.ncols(), self.input_dim())));
        }
        let mut a = x.to_owned();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            a = a.dot(&l.w.t()) + &l.b;
            if i < last {
                a.mapv_inplace(|v| if v < 0.0 { 0.0 } else { v });
            }
        }
        Ok(a)
    }

    pub fn forward(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        let out = self.forward_batch(x.insert_axis(Axis(0)))?;
        Ok(out.row(0).to_owned())
    }

    /// Mean over the batch of the squared Euclidean error.
    pub fn loss(&self, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<f64> {
        let p = self.forward_batch(x)?;
        Ok((&p - &y).mapv(|v| v * v).sum() / x.nrows() as f64)
    }

    /// Loss and its gradient with respect to every weight and bias.
    pub fn backward(&self, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<(f64, Params)> {
        let n = x.nrows();
        if n == 0 {
            return Err(Error::Empty("batch"));
        }
        if y.dim() != (n, self.output_dim()) {
            return Err(Error::Dimension(format!("targets {:?}, expected ({n}, {})", y.dim(), self.output_dim())));
        }
        if x.ncols() != self.input_dim() {
            return Err(Error::Dimension(format!("input has {} features, model expects {}", x.ncols(), self.input_dim())));
        }
        // Post-activation values; acts[0] is the input.
        let mut acts = vec![x.to_owned()];
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = acts[i].dot(&l.w.t()) + &l.b;
            if i < last {
                z.mapv_inplace(|v| if v < 0.0 { 0.0 } else { v });
            }
            acts.push(z);
        }
        let diff = &acts[last + 1] - &y;
        let loss = diff.mapv(|v| v * v).sum() / n as f64;
        let mut delta = diff * (2.0 / n as f64);
        let mut grads = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let gw = delta.t().dot(&acts[i]);
            let gb = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut prev = delta.dot(&self.layers[i].w);
                // ReLU derivative from the post-activation value.
                Zip::from(&mut prev).and(&acts[i]).for_each(|d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = prev;
            }
            grads.push(Layer { w: gw, b: gb });
        }
        grads.reverse();
        Ok((loss, grads))
    }

    /// Parameters flattened layer by layer, weights (row-major) then biases.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
        out
    }

    /// Inverse of [`Mlp::flatten`].
    pub fn from_flat(dims: &[usize], values: &[f64]) -> Result<Mlp> {
        let mut m = Mlp::zeros(dims)?;
        if values.len() != m.num_params() {
            return Err(Error::Dimension(format!("{} values for {} parameters", values.len(), m.num_params())));
        }
        let mut it = values.iter().copied();
        for l in &mut m.layers {
            l.w.iter_mut().for_each(|v| *v = it.next().expect("length checked"));
            l.b.iter_mut().for_each(|v| *v = it.next().expect("length checked"));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_model_outputs_zero() {
        let m = Mlp::zeros(&DEFAULT_DIMS).unwrap();
        let x = Array1::from_elem(832, 0.3);
        assert_eq!(m.forward(x.view()).unwrap(), array![0.0, 0.0]);
        assert_eq!(m.num_params(), 832 * 832 + 832 + 832 * 512 + 512 + 512 * 256 + 256 + 256 * 64 + 64 + 64 * 2 + 2);
    }

    #[test]
    fn hand_computed_three_layer() {
        // 2 -> 2 -> 1 -> 2: h = relu([x0 - x1, x1 + 1]); g = relu(h0 + 2 h1 - 1); y = [3 g, -g + 0.5]
        let mut m = Mlp::zeros(&[2, 2, 1, 2]).unwrap();
        m.layers[0].w = array![[1.0, -1.0], [0.0, 1.0]];
        m.layers[0].b = array![0.0, 1.0];
        m.layers[1].w = array![[1.0, 2.0]];
        m.layers[1].b = array![-1.0];
        m.layers[2].w = array![[3.0], [-1.0]];
        m.layers[2].b = array![0.0, 0.5];
        // x = (2, 1): h = (1, 2), g = 4, y = (12, -3.5)
        assert_eq!(m.forward(array![2.0, 1.0].view()).unwrap(), array![12.0, -3.5]);
        // x = (0, 3): h = relu(-3, 4) = (0, 4), g = 7, y = (21, -6.5)
        assert_eq!(m.forward(array![0.0, 3.0].view()).unwrap(), array![21.0, -6.5]);
    }

    #[test]
    fn flatten_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = Mlp::init(&[5, 4, 3, 2], &mut rng).unwrap();
        assert_eq!(Mlp::from_flat(&m.dims, &m.flatten()).unwrap(), m);
        assert!(Mlp::from_flat(&m.dims, &[0.0; 3]).is_err());
    }

    #[test]
    fn dimension_errors() {
        let m = Mlp::zeros(&[3, 2]).unwrap();
        assert!(m.forward(array![1.0, 2.0].view()).is_err());
        assert!(Mlp::zeros(&[3]).is_err());
    }
}
