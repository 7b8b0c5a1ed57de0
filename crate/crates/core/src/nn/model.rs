use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::seed;

/// Layer widths of the reference network: 295 inputs, two hidden layers of
/// 256, two logits.
pub const DEFAULT_LAYER_SIZES: [usize; 4] = [295, 256, 256, 2];

/// A dense layer `z = W a + b` with `W` stored as `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.nrows()
    }
}

/// Fixed per-feature affine map applied to inputs before the first layer:
/// `x' = (x - shift) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputNorm {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl InputNorm {
    /// Mean / standard deviation of every column. Constant columns get a
    /// scale of 1.
    pub fn fit(features: ArrayView2<'_, f64>) -> Self {
        let n = features.nrows().max(1) as f64;
        let shift: Vec<f64> = features.sum_axis(Axis(0)).iter().map(|s| s / n).collect();
        let scale = features
            .axis_iter(Axis(1))
            .zip(&shift)
            .map(|(col, &mean)| {
                let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                let sd = var.sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { shift, scale }
    }

    fn apply_row(&self, x: &[f64], out: &mut [f64]) {
        for (((o, v), s), c) in out.iter_mut().zip(x).zip(&self.shift).zip(&self.scale) {
            *o = (v - s) / c;
        }
    }
}

/// Parameters of a feed-forward ReLU network.
///
/// `layer_sizes` lists the logical widths, ending in the number of classes.
/// With `du_head` enabled the final layer emits one extra raw output `s`,
/// the log noise scale used by the data-uncertainty loss.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub layer_sizes: Vec<usize>,
    pub du_head: bool,
    pub layers: Vec<Dense>,
    pub input_norm: Option<InputNorm>,
}

impl ModelParams {
    /// All-zero parameters.
    pub fn zeros(layer_sizes: &[usize], du_head: bool) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        let last = layer_sizes.len() - 2;
        let layers = layer_sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| Dense::zeros(w[0], w[1] + usize::from(du_head && i == last)))
            .collect();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            du_head,
            layers,
            input_norm: None,
        })
    }

    /// He-style uniform initialization, `U(-sqrt(6/fan_in), sqrt(6/fan_in))`,
    /// with zero biases.
    pub fn init(layer_sizes: &[usize], du_head: bool, rng_seed: u64) -> Result<Self> {
        let mut params = Self::zeros(layer_sizes, du_head)?;
        let mut rng = seed::stream(rng_seed, &[seed::INIT]);
        for layer in &mut params.layers {
            let bound = (6.0 / layer.inputs() as f64).sqrt();
            layer
                .weight
                .mapv_inplace(|_| rng.random_range(-bound..=bound));
        }
        Ok(params)
    }

    pub fn input_width(&self) -> usize {
        self.layer_sizes[0]
    }

    /// Number of classes.
    pub fn classes(&self) -> usize {
        *self.layer_sizes.last().expect("validated layer sizes")
    }

    /// Width of the raw output vector (classes, plus one with the DU head).
    pub fn output_width(&self) -> usize {
        self.classes() + usize::from(self.du_head)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    /// All parameters flattened layer by layer, weights (row-major) before biases.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            out.extend(l.weight.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    /// Inverse of [`ModelParams::to_flat`].
    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.parameter_count() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                self.parameter_count(),
                flat.len()
            )));
        }
        let mut it = flat.iter();
        for l in &mut self.layers {
            for w in l.weight.iter_mut().chain(l.bias.iter_mut()) {
                *w = *it.next().expect("length checked");
            }
        }
        Ok(())
    }

    /// Raw outputs for a single input: the logits, followed by `s` when the
    /// DU head is enabled.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let row = ArrayView2::from_shape((1, x.len()), x)
            .map_err(|e| Error::invalid(e.to_string()))?;
        Ok(self.forward_batch(row)?.into_raw_vec_and_offset().0)
    }

    /// Raw outputs for every row of `xs` (`batch x input_width`).
    pub fn forward_batch(&self, xs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let cache = self.forward_cached(xs)?;
        Ok(cache.pre_activations.into_iter().last().expect("at least one layer"))
    }

    pub(crate) fn normalized_input(&self, xs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if xs.ncols() != self.input_width() {
            return Err(Error::invalid(format!(
                "input has {} features, network expects {}",
                xs.ncols(),
                self.input_width()
            )));
        }
        let mut a = xs.to_owned();
        if let Some(norm) = &self.input_norm {
            for (mut row, src) in a.axis_iter_mut(Axis(0)).zip(xs.axis_iter(Axis(0))) {
                let src = src.to_vec();
                norm.apply_row(&src, row.as_slice_mut().expect("standard layout"));
            }
        }
        Ok(a)
    }

    pub(crate) fn forward_cached(&self, xs: ArrayView2<'_, f64>) -> Result<ForwardCache> {
        let input = self.normalized_input(xs)?;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len());
        let mut a = input.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = a.dot(&layer.weight.t());
            z += &layer.bias;
            if i + 1 < self.layers.len() {
                a = z.mapv(|v| v.max(0.0));
                post.push(a.clone());
            }
            pre.push(z);
        }
        Ok(ForwardCache {
            input,
            pre_activations: pre,
            activations: post,
        })
    }
}

/// Intermediate values kept for backpropagation.
pub(crate) struct ForwardCache {
    pub input: Array2<f64>,
    /// `z_l` for every layer; the last entry is the raw network output.
    pub pre_activations: Vec<Array2<f64>>,
    /// `relu(z_l)` for hidden layers.
    pub activations: Vec<Array2<f64>>,
}

fn validate_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::invalid("network needs at least an input and an output layer"));
    }
    if sizes.contains(&0) {
        return Err(Error::invalid(format!("layer sizes must be positive: {sizes:?}")));
    }
    Ok(())
}
