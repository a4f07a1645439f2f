//! Central finite-difference gradients, for checking backpropagation.

use super::lstm::{DropoutMasks, LstmModel, Params};
use crate::Result;

fn batch_loss(
    model: &LstmModel,
    inputs: &[&[f64]],
    targets: &[f64],
    masks: Option<&[DropoutMasks]>,
    delta: f64,
) -> Result<f64> {
    let mut g = model.params.zeros_like();
    let (loss, _) =
        model.accumulate_batch(inputs, targets, masks, delta, 0..inputs.len(), &mut g)?;
    Ok(loss / inputs.len() as f64)
}

/// Numerical gradient of the mean batch Huber loss, one parameter at a time.
pub fn finite_difference_grads(
    model: &LstmModel,
    inputs: &[&[f64]],
    targets: &[f64],
    masks: Option<&[DropoutMasks]>,
    delta: f64,
    step: f64,
) -> Result<Params> {
    let mut probe = model.clone();
    let mut out = model.params.zeros_like();
    let sizes: Vec<usize> = model.params.tensors().iter().map(|t| t.len()).collect();
    for (ti, &len) in sizes.iter().enumerate() {
        for j in 0..len {
            let orig = probe.params.tensors()[ti][j];
            probe.params.tensors_mut()[ti][j] = orig + step;
            let up = batch_loss(&probe, inputs, targets, masks, delta)?;
            probe.params.tensors_mut()[ti][j] = orig - step;
            let down = batch_loss(&probe, inputs, targets, masks, delta)?;
            probe.params.tensors_mut()[ti][j] = orig;
            out.tensors_mut()[ti][j] = (up - down) / (2.0 * step);
        }
    }
    Ok(out)
}

/// Worst `|a - b| / max(|a|, |b|, floor)` over all parameters, with the
/// tensor and element where it occurs.
pub fn max_relative_error(a: &Params, b: &Params, floor: f64) -> (f64, usize, usize) {
    let mut worst = (0.0, 0, 0);
    for (ti, (x, y)) in a.tensors().iter().zip(b.tensors()).enumerate() {
        for (j, (&p, &q)) in x.iter().zip(y.iter()).enumerate() {
            let rel = (p - q).abs() / p.abs().max(q.abs()).max(floor);
            if rel > worst.0 {
                worst = (rel, ti, j);
            }
        }
    }
    worst
}
