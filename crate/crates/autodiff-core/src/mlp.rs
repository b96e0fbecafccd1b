//! Dense MLP forward/backward with a per-layer tape.
//!
//! Hidden layers apply the configured activation; the final layer is linear.

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    fn apply(&self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed in terms of the activation output `a`.
    fn derivative_from_output(&self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Fully connected architecture: consecutive `layer_dims` entries define one
/// weight matrix (d_in x d_out) plus a bias (d_out).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpArch {
    layer_dims: Vec<usize>,
    activation: Activation,
}

impl MlpArch {
    pub fn new(layer_dims: Vec<usize>, activation: Activation) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(Error::InvalidArch(format!(
                "need at least 2 layer dims, got {}",
                layer_dims.len()
            )));
        }
        if layer_dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArch(format!("zero layer dim in {layer_dims:?}")));
        }
        Ok(MlpArch { layer_dims, activation })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn num_layers(&self) -> usize {
        self.layer_dims.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    /// Total parameter count (weights + biases).
    pub fn num_params(&self) -> usize {
        self.layer_dims
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }
}

/// Ordered (name, tensor) pairs for one particle: w0, b0, w1, b1, ...
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    tensors: Vec<(String, Tensor)>,
}

impl ParamSet {
    /// Seeded init: each layer's weights and biases uniform in +-1/sqrt(d_in).
    pub fn init(arch: &MlpArch, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tensors = Vec::new();
        for (i, w) in arch.layer_dims.windows(2).enumerate() {
            let (d_in, d_out) = (w[0], w[1]);
            let bound = 1.0 / (d_in as f64).sqrt();
            let wdata: Vec<f64> = (0..d_in * d_out).map(|_| rng.gen_range(-bound..bound)).collect();
            let bdata: Vec<f64> = (0..d_out).map(|_| rng.gen_range(-bound..bound)).collect();
            tensors.push((format!("w{i}"), Tensor::new(vec![d_in, d_out], wdata).unwrap()));
            tensors.push((format!("b{i}"), Tensor::vector(bdata)));
        }
        ParamSet { tensors }
    }

    pub fn zeros(arch: &MlpArch) -> Self {
        let mut tensors = Vec::new();
        for (i, w) in arch.layer_dims.windows(2).enumerate() {
            tensors.push((format!("w{i}"), Tensor::zeros(vec![w[0], w[1]])));
            tensors.push((format!("b{i}"), Tensor::zeros(vec![w[1]])));
        }
        ParamSet { tensors }
    }

    pub fn from_tensors(tensors: Vec<(String, Tensor)>) -> Self {
        ParamSet { tensors }
    }

    pub fn tensors(&self) -> &[(String, Tensor)] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [(String, Tensor)] {
        &mut self.tensors
    }

    pub fn matches(&self, arch: &MlpArch) -> bool {
        if self.tensors.len() != 2 * arch.num_layers() {
            return false;
        }
        for (i, w) in arch.layer_dims.windows(2).enumerate() {
            if self.tensors[2 * i].1.shape() != [w[0], w[1]] {
                return false;
            }
            if self.tensors[2 * i + 1].1.shape() != [w[1]] {
                return false;
            }
        }
        true
    }

    pub fn num_params(&self) -> usize {
        self.tensors.iter().map(|(_, t)| t.numel()).sum()
    }

    /// Concatenates all tensor values in order into one flat vector.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for (_, t) in &self.tensors {
            out.extend_from_slice(t.data());
        }
        out
    }

    /// Concatenates all gradient buffers; errors if any is missing.
    pub fn flatten_grads(&self) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.num_params());
        for (name, t) in &self.tensors {
            let g = t.grad().ok_or_else(|| Error::MissingGrad(name.clone()))?;
            out.extend_from_slice(g);
        }
        Ok(out)
    }

    /// Rebuilds a ParamSet with this one's shapes from a flat vector.
    pub fn unflatten(&self, flat: &[f64]) -> Result<ParamSet> {
        if flat.len() != self.num_params() {
            return Err(Error::LengthMismatch { expected: self.num_params(), got: flat.len() });
        }
        let mut tensors = Vec::with_capacity(self.tensors.len());
        let mut off = 0;
        for (name, t) in &self.tensors {
            let n = t.numel();
            let data = flat[off..off + n].to_vec();
            off += n;
            tensors.push((name.clone(), Tensor::new(t.shape().to_vec(), data).unwrap()));
        }
        Ok(ParamSet { tensors })
    }

    pub fn zero_grads(&mut self) {
        for (_, t) in &mut self.tensors {
            t.zero_grad();
        }
    }

    /// theta += alpha * delta, over the flat parameter vector.
    pub fn add_scaled(&mut self, delta: &[f64], alpha: f64) -> Result<()> {
        if delta.len() != self.num_params() {
            return Err(Error::LengthMismatch { expected: self.num_params(), got: delta.len() });
        }
        let mut off = 0;
        for (_, t) in &mut self.tensors {
            for v in t.data_mut() {
                *v += alpha * delta[off];
                off += 1;
            }
        }
        Ok(())
    }

    pub fn copy_values_from(&mut self, other: &ParamSet) -> Result<()> {
        if other.num_params() != self.num_params() {
            return Err(Error::LengthMismatch {
                expected: self.num_params(),
                got: other.num_params(),
            });
        }
        for ((_, dst), (_, src)) in self.tensors.iter_mut().zip(other.tensors.iter()) {
            dst.data_mut().copy_from_slice(src.data());
        }
        Ok(())
    }
}

fn view2(data: &[f64], rows: usize, cols: usize) -> ArrayView2<'_, f64> {
    ArrayView2::from_shape((rows, cols), data).unwrap()
}

/// Per-layer activation cache recorded by `forward`, consumed by `backward`.
pub struct Tape {
    /// acts[0] is the input batch; acts[l] is the output of layer l-1.
    acts: Vec<Array2<f64>>,
    output: Tensor,
}

impl Tape {
    pub fn output(&self) -> &Tensor {
        &self.output
    }
}

/// Forward pass for a batch `x` (batch x d_in), recording the tape.
pub fn forward(arch: &MlpArch, params: &ParamSet, x: &Tensor) -> Result<(Tensor, Tape)> {
    if !params.matches(arch) {
        return Err(Error::InvalidArch("params do not match arch".into()));
    }
    let (batch, d_in) = x.as_2d()?;
    if d_in != arch.input_dim() {
        return Err(Error::ShapeMismatch {
            expected: vec![batch, arch.input_dim()],
            got: x.shape().to_vec(),
        });
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("forward input".into()));
    }

    let n_layers = arch.num_layers();
    let mut acts: Vec<Array2<f64>> = Vec::with_capacity(n_layers + 1);
    acts.push(view2(x.data(), batch, d_in).to_owned());

    for l in 0..n_layers {
        let (d_in, d_out) = (arch.layer_dims[l], arch.layer_dims[l + 1]);
        let w = view2(params.tensors[2 * l].1.data(), d_in, d_out);
        let b = params.tensors[2 * l + 1].1.data();
        let mut z = acts[l].dot(&w);
        for mut row in z.rows_mut() {
            for (v, bv) in row.iter_mut().zip(b.iter()) {
                *v += bv;
            }
        }
        let is_last = l == n_layers - 1;
        if !is_last {
            z.mapv_inplace(|v| arch.activation.apply(v));
        }
        acts.push(z);
    }

    let out = acts.last().unwrap();
    let output = Tensor::new(vec![batch, arch.output_dim()], out.iter().copied().collect())?;
    Ok((output.clone(), Tape { acts, output }))
}

/// Mean over all elements of the squared difference.
pub fn mse_loss(pred: &Tensor, label: &Tensor) -> Result<f64> {
    if pred.shape() != label.shape() {
        return Err(Error::ShapeMismatch {
            expected: pred.shape().to_vec(),
            got: label.shape().to_vec(),
        });
    }
    let n = pred.numel() as f64;
    let sum: f64 = pred
        .data()
        .iter()
        .zip(label.data())
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    Ok(sum / n)
}

/// A forward tape extended with an MSE loss node, ready for backward.
pub struct LossTape {
    tape: Tape,
    label: Tensor,
    loss: f64,
}

/// Attaches an MSE loss to a recorded forward pass.
pub fn mse_loss_tape(tape: Tape, label: &Tensor) -> Result<LossTape> {
    let loss = mse_loss(&tape.output, label)?;
    Ok(LossTape { tape, label: label.clone(), loss })
}

impl LossTape {
    pub fn loss(&self) -> f64 {
        self.loss
    }

    /// Reverse pass: accumulates d loss / d theta into `params` grad buffers.
    /// Consumes the tape.
    pub fn backward(self, arch: &MlpArch, params: &mut ParamSet) -> Result<()> {
        if !params.matches(arch) {
            return Err(Error::InvalidArch("params do not match arch".into()));
        }
        let acts = &self.tape.acts;
        let out = acts.last().unwrap();
        let (batch, d_out) = (out.nrows(), out.ncols());
        let numel = (batch * d_out) as f64;
        let label = view2(self.label.data(), batch, d_out);

        // d loss / d output for mean squared error
        let mut delta: Array2<f64> = out - &label;
        delta.mapv_inplace(|v| 2.0 * v / numel);

        let n_layers = arch.num_layers();
        for l in (0..n_layers).rev() {
            let (d_in, d_out) = (arch.layer_dims[l], arch.layer_dims[l + 1]);
            // activation derivative (last layer is linear)
            if l != n_layers - 1 {
                let a = &acts[l + 1];
                delta
                    .iter_mut()
                    .zip(a.iter())
                    .for_each(|(d, &av)| *d *= arch.activation.derivative_from_output(av));
            }
            let input = &acts[l];
            let dw = input.t().dot(&delta);
            {
                let gw = params.tensors_mut()[2 * l].1.grad_or_zeros();
                for (g, d) in gw.iter_mut().zip(dw.iter()) {
                    *g += d;
                }
                let gb = params.tensors_mut()[2 * l + 1].1.grad_or_zeros();
                for (j, g) in gb.iter_mut().enumerate() {
                    *g += delta.column(j).sum();
                }
            }
            if l > 0 {
                let w = view2(params.tensors()[2 * l].1.data(), d_in, d_out);
                delta = delta.dot(&w.t());
            }
        }
        Ok(())
    }
}
