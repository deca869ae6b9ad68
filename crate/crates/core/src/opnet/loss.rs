//! Galerkin residual loss `(1/M') Σ_m |r(α̂_m)|²` with
//! `r(α) = Aα - q(α) - F` (`q` only for Burgers) and its gradients.

use ndarray::Array2;

use crate::error::{check_len, Error, Result};
use crate::fem::AssembledSystem;
use crate::forcing::Dataset;
use crate::opnet::network::{encode_input, Network};
use crate::mesh::Point;

/// Network inputs with the systems and loads they are scored against.
#[derive(Debug, Clone)]
pub struct Batch<'a> {
    pub inputs: Array2<f64>,
    pub systems: Vec<&'a AssembledSystem>,
    pub loads: Vec<&'a [f64]>,
    /// Dataset index of each row, for diagnostics.
    pub indices: Vec<usize>,
}

impl<'a> Batch<'a> {
    /// Rows `indices` of `dataset`, encoded with the network's input encoding.
    pub fn from_dataset(
        net: &Network,
        system: &'a AssembledSystem,
        dataset: &'a Dataset,
        dof_coords: &[Point],
        indices: &[usize],
    ) -> Result<Self> {
        let cfg = net.config();
        let mut inputs = Array2::zeros((indices.len(), cfg.input_dim));
        for (r, &m) in indices.iter().enumerate() {
            let x = encode_input(cfg.input_encoding, &dataset.samples[m], dof_coords);
            check_len(cfg.input_dim, x.len())?;
            inputs.row_mut(r).assign(&ndarray::ArrayView1::from(&x));
        }
        let systems: Vec<&AssembledSystem> = indices.iter().map(|&m| dataset.system(system, m)).collect();
        for s in &systems {
            check_len(s.size(), cfg.output_dim)?;
        }
        Ok(Batch {
            inputs,
            systems,
            loads: indices.iter().map(|&m| dataset.loads[m].as_slice()).collect(),
            indices: indices.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.loads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loads.is_empty()
    }
}

fn check_batch(alphas: &Array2<f64>, systems: &[&AssembledSystem], loads: &[&[f64]]) -> Result<()> {
    check_len(alphas.nrows(), loads.len())?;
    check_len(alphas.nrows(), systems.len())?;
    for (s, f) in systems.iter().zip(loads) {
        check_len(s.size(), alphas.ncols())?;
        check_len(s.size(), f.len())?;
    }
    Ok(())
}

/// `(1/M') Σ_m |A α̂_m - q(α̂_m) - F_m|²`.
pub fn residual_loss(alphas: &Array2<f64>, systems: &[&AssembledSystem], loads: &[&[f64]]) -> Result<f64> {
    check_batch(alphas, systems, loads)?;
    if loads.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (m, row) in alphas.rows().into_iter().enumerate() {
        let a = row.to_vec();
        let r = systems[m].residual(&a, loads[m]);
        total += r.iter().map(|v| v * v).sum::<f64>();
    }
    Ok(total / loads.len() as f64)
}

/// Loss and `d loss / d α̂` (`(2/M') J(α̂)ᵀ r(α̂)` per row).
pub fn loss_and_output_gradient(
    alphas: &Array2<f64>,
    systems: &[&AssembledSystem],
    loads: &[&[f64]],
) -> Result<(f64, Array2<f64>)> {
    check_batch(alphas, systems, loads)?;
    let mut grad = Array2::zeros(alphas.raw_dim());
    if loads.is_empty() {
        return Ok((0.0, grad));
    }
    let scale = 1.0 / loads.len() as f64;
    let mut total = 0.0;
    for (m, row) in alphas.rows().into_iter().enumerate() {
        let a = row.to_vec();
        let r = systems[m].residual(&a, loads[m]);
        total += r.iter().map(|v| v * v).sum::<f64>();
        let g = systems[m].jacobian_transpose_mul(&a, &r);
        for (dst, v) in grad.row_mut(m).iter_mut().zip(g) {
            *dst = 2.0 * scale * v;
        }
    }
    Ok((total * scale, grad))
}

/// Loss and parameter gradient for a batch. Non-finite values abort with the
/// offending epoch and dataset index.
pub fn loss_gradient(net: &Network, batch: &Batch, epoch: usize) -> Result<(f64, Vec<f64>)> {
    let (alphas, cache) = net.forward_batch(&batch.inputs)?;
    if let Some(r) = alphas.rows().into_iter().position(|row| row.iter().any(|v| !v.is_finite())) {
        return Err(Error::NumericOverflow {
            epoch,
            sample: batch.indices[r],
            what: "network output".into(),
        });
    }
    let (loss, d_out) = loss_and_output_gradient(&alphas, &batch.systems, &batch.loads)?;
    if !loss.is_finite() {
        let sample = d_out
            .rows()
            .into_iter()
            .position(|row| row.iter().any(|v| !v.is_finite()))
            .map_or(batch.indices[0], |r| batch.indices[r]);
        return Err(Error::NumericOverflow {
            epoch,
            sample,
            what: "residual loss".into(),
        });
    }
    let grads = net.backward(&cache, &d_out);
    Ok((loss, grads))
}

/// Loss only, for line searches and monitoring.
pub fn batch_loss(net: &Network, batch: &Batch) -> Result<f64> {
    let (alphas, _) = net.forward_batch(&batch.inputs)?;
    residual_loss(&alphas, &batch.systems, &batch.loads)
}
