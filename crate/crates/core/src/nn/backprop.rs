use ndarray::{Array2, ArrayView2, Axis};

use super::loss::{cross_entropy, softmax};
use super::model::{Dense, ModelParams};
use crate::du_loss::{self, DensityOutput, MCConfig};
use crate::error::{Error, Result};

/// Training objective for one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// Softmax cross-entropy on the logits.
    CrossEntropy,
    /// Data-uncertainty loss on the density head with the given noise.
    DataUncertainty(MCConfig),
}

/// Gradient of the loss w.r.t. every parameter, shaped like the layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend(l.weight.iter());
            out.extend(l.bias.iter());
        }
        out
    }
}

/// Loss of a single raw output and its gradient w.r.t. that output.
pub fn output_loss_grad(raw: &[f64], y: usize, objective: &Objective) -> Result<(f64, Vec<f64>)> {
    match objective {
        Objective::CrossEntropy => {
            let p = softmax(raw);
            if y >= p.len() {
                return Err(Error::invalid(format!("label {y} out of range")));
            }
            let loss = cross_entropy(&p, y);
            let mut grad = p;
            grad[y] -= 1.0;
            Ok((loss, grad))
        }
        Objective::DataUncertainty(mc) => {
            let out = DensityOutput::from_raw(raw)?;
            let g = du_loss::du_loss_grad(&out, y, mc)?;
            Ok((g.loss, vec![g.d_mu[0], g.d_mu[1], g.d_s_raw]))
        }
    }
}

fn check_objective(params: &ModelParams, objective: &Objective) -> Result<()> {
    match objective {
        Objective::CrossEntropy if params.du_head => Err(Error::invalid(
            "cross-entropy objective on a network with a density head",
        )),
        Objective::DataUncertainty(_) if !params.du_head || params.classes() != 2 => Err(
            Error::invalid("data-uncertainty objective needs a two-class density head"),
        ),
        _ => Ok(()),
    }
}

/// Loss and parameter gradient for a single sample.
pub fn backward(
    params: &ModelParams,
    x: &[f64],
    y: usize,
    objective: &Objective,
) -> Result<(f64, Gradients)> {
    let xs = ArrayView2::from_shape((1, x.len()), x).map_err(|e| Error::invalid(e.to_string()))?;
    batch_backward(params, xs, &[y], &[*objective])
}

/// Mean loss and mean-reduced gradient over a batch. `objectives` holds one
/// entry per row (the noise stream differs per sample for the DU loss).
pub fn batch_backward(
    params: &ModelParams,
    xs: ArrayView2<'_, f64>,
    ys: &[usize],
    objectives: &[Objective],
) -> Result<(f64, Gradients)> {
    batch_backward_with_outputs(params, xs, ys, objectives).map(|(l, g, _)| (l, g))
}

/// [`batch_backward`] that also hands back the raw network outputs.
pub(crate) fn batch_backward_with_outputs(
    params: &ModelParams,
    xs: ArrayView2<'_, f64>,
    ys: &[usize],
    objectives: &[Objective],
) -> Result<(f64, Gradients, Array2<f64>)> {
    let batch = xs.nrows();
    if batch == 0 || ys.len() != batch || objectives.len() != batch {
        return Err(Error::invalid(format!(
            "batch of {batch} rows with {} labels and {} objectives",
            ys.len(),
            objectives.len()
        )));
    }
    for o in objectives {
        check_objective(params, o)?;
    }
    let cache = params.forward_cached(xs)?;
    let out = cache.pre_activations.last().expect("at least one layer").clone();

    let mut delta = Array2::<f64>::zeros(out.raw_dim());
    let mut loss = 0.0;
    for (i, (row, (&y, obj))) in out
        .axis_iter(Axis(0))
        .zip(ys.iter().zip(objectives))
        .enumerate()
    {
        let raw = row.to_vec();
        let (l, g) = output_loss_grad(&raw, y, obj)?;
        loss += l;
        for (d, v) in delta.row_mut(i).iter_mut().zip(g) {
            *d = v / batch as f64;
        }
    }

    let n_layers = params.layers.len();
    let mut grads: Vec<Dense> = Vec::with_capacity(n_layers);
    for l in (0..n_layers).rev() {
        let input = if l == 0 {
            &cache.input
        } else {
            &cache.activations[l - 1]
        };
        let weight = delta.t().dot(input);
        let bias = delta.sum_axis(Axis(0));
        if l > 0 {
            let mut prev = delta.dot(&params.layers[l].weight);
            prev.zip_mut_with(&cache.pre_activations[l - 1], |d, &z| {
                if z <= 0.0 {
                    *d = 0.0;
                }
            });
            delta = prev;
        }
        grads.push(Dense { weight, bias });
    }
    grads.reverse();
    Ok((loss / batch as f64, Gradients { layers: grads }, out))
}

/// Mean loss over a batch without computing gradients.
pub fn batch_loss(
    params: &ModelParams,
    xs: ArrayView2<'_, f64>,
    ys: &[usize],
    objectives: &[Objective],
) -> Result<f64> {
    for o in objectives {
        check_objective(params, o)?;
    }
    let out = params.forward_batch(xs)?;
    let mut loss = 0.0;
    for (row, (&y, obj)) in out.axis_iter(Axis(0)).zip(ys.iter().zip(objectives)) {
        loss += output_loss_grad(&row.to_vec(), y, obj)?.0;
    }
    Ok(loss / xs.nrows() as f64)
}
