//! Training loop, prediction and test-error evaluation.

use ndarray::Array2;

use crate::error::{check_len, Error, Result};
use crate::fem::{l2_rel_error, AssembledSystem};
use crate::forcing::{Dataset, ForcingSample, Rng};
use crate::mesh::Point;
use crate::opnet::loss::{batch_loss, loss_gradient, Batch};
use crate::opnet::network::{encode_input, Network, NetworkConfig};
use crate::opnet::optim::{Adam, Lbfgs, OptimizerConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Samples per optimizer step; 0 means full batch.
    pub batch_size: usize,
    pub optimizer: OptimizerConfig,
    /// Stop once the recorded loss drops below this.
    pub loss_tolerance: f64,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 1000,
            batch_size: 0,
            optimizer: OptimizerConfig::default(),
            loss_tolerance: 0.0,
            shuffle_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerState {
    Adam(Adam),
    Lbfgs(Lbfgs),
}

impl OptimizerState {
    fn new(cfg: &OptimizerConfig, n: usize) -> Self {
        match cfg {
            OptimizerConfig::Adam { .. } => OptimizerState::Adam(Adam::new(n)),
            OptimizerConfig::Lbfgs { .. } => OptimizerState::Lbfgs(Lbfgs::new()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainState {
    pub network: Network,
    pub optimizer: OptimizerState,
    pub config: TrainConfig,
    /// Epochs completed.
    pub epoch: usize,
    /// Full-dataset loss at the start of every epoch, then once more at the end.
    pub loss_history: Vec<f64>,
    pub best_loss: f64,
    pub best_params: Vec<f64>,
    /// Shuffling stream for minibatches.
    pub rng: Rng,
}

impl TrainState {
    pub fn new(network: Network, config: TrainConfig) -> Self {
        TrainState {
            optimizer: OptimizerState::new(&config.optimizer, network.param_count()),
            best_params: network.params().to_vec(),
            network,
            config,
            epoch: 0,
            loss_history: Vec::new(),
            best_loss: f64::INFINITY,
            rng: Rng::new(config.shuffle_seed),
        }
    }

    /// Lowest loss recorded so far, after each entry of the history.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.loss_history
            .iter()
            .map(|&l| {
                best = best.min(l);
                best
            })
            .collect()
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.loss_history.last().copied()
    }

    fn record(&mut self, loss: f64) {
        self.loss_history.push(loss);
        if loss < self.best_loss {
            self.best_loss = loss;
            self.best_params.copy_from_slice(self.network.params());
        }
    }
}

/// Initialize a network from `net_config` and train it. The returned state
/// holds the best parameters seen.
pub fn train(
    net_config: NetworkConfig,
    system: &AssembledSystem,
    dataset: &Dataset,
    dof_coords: &[Point],
    config: TrainConfig,
) -> Result<TrainState> {
    let net = Network::new(net_config)?;
    let mut state = TrainState::new(net, config);
    run_epochs(&mut state, system, dataset, dof_coords, config.epochs)?;
    Ok(state)
}

/// Run up to `epochs` more epochs on `state`, then restore the best parameters.
pub fn run_epochs(
    state: &mut TrainState,
    system: &AssembledSystem,
    dataset: &Dataset,
    dof_coords: &[Point],
    epochs: usize,
) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::invalid("training dataset is empty"));
    }
    let all: Vec<usize> = (0..dataset.len()).collect();
    let full = Batch::from_dataset(&state.network, system, dataset, dof_coords, &all)?;
    let bs = match state.config.batch_size {
        0 => dataset.len(),
        b => b.min(dataset.len()),
    };
    // the final entry of a previous call is this call's starting loss
    if state.loss_history.last().is_some() {
        state.loss_history.pop();
    }
    for _ in 0..epochs {
        let epoch = state.epoch;
        if bs == dataset.len() {
            full_batch_epoch(state, &full, epoch)?;
        } else {
            let start = batch_loss(&state.network, &full)?;
            check_finite(start, epoch, &full)?;
            state.record(start);
            let mut order = all.clone();
            for i in (1..order.len()).rev() {
                order.swap(i, state.rng.below(i + 1));
            }
            for chunk in order.chunks(bs) {
                let batch = Batch::from_dataset(&state.network, system, dataset, dof_coords, chunk)?;
                optimizer_step(state, &batch, epoch)?;
            }
        }
        state.epoch += 1;
        if state.loss_history.last().is_some_and(|&l| l < state.config.loss_tolerance) {
            break;
        }
    }
    let end = batch_loss(&state.network, &full)?;
    check_finite(end, state.epoch, &full)?;
    state.record(end);
    let best = state.best_params.clone();
    state.network.params_mut().copy_from_slice(&best);
    Ok(())
}

fn check_finite(loss: f64, epoch: usize, batch: &Batch) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::NumericOverflow {
            epoch,
            sample: batch.indices[0],
            what: "residual loss".into(),
        })
    }
}

fn full_batch_epoch(state: &mut TrainState, full: &Batch, epoch: usize) -> Result<()> {
    match state.config.optimizer {
        OptimizerConfig::Adam { .. } => {
            let (loss, grads) = loss_gradient(&state.network, full, epoch)?;
            state.record(loss);
            if loss >= state.config.loss_tolerance {
                adam_update(state, &grads, epoch);
            }
        }
        OptimizerConfig::Lbfgs { .. } => {
            let start = batch_loss(&state.network, full)?;
            check_finite(start, epoch, full)?;
            state.record(start);
            if start >= state.config.loss_tolerance {
                optimizer_step(state, full, epoch)?;
            }
        }
    }
    Ok(())
}

fn adam_update(state: &mut TrainState, grads: &[f64], epoch: usize) {
    let OptimizerConfig::Adam {
        lr,
        beta1,
        beta2,
        eps,
        final_lr_fraction,
    } = state.config.optimizer
    else {
        unreachable!("adam update with another optimizer")
    };
    let span = state.config.epochs.saturating_sub(1).max(1) as f64;
    let rate = lr * final_lr_fraction.powf((epoch as f64 / span).min(1.0));
    let OptimizerState::Adam(adam) = &mut state.optimizer else {
        unreachable!("optimizer state does not match config")
    };
    adam.step(state.network.params_mut(), grads, rate, beta1, beta2, eps);
}

fn optimizer_step(state: &mut TrainState, batch: &Batch, epoch: usize) -> Result<()> {
    match state.config.optimizer {
        OptimizerConfig::Adam { .. } => {
            let (_, grads) = loss_gradient(&state.network, batch, epoch)?;
            adam_update(state, &grads, epoch);
        }
        OptimizerConfig::Lbfgs {
            lr,
            history,
            max_inner,
            tolerance,
        } => {
            let OptimizerState::Lbfgs(opt) = &mut state.optimizer else {
                unreachable!("optimizer state does not match config")
            };
            let mut probe = state.network.clone();
            let mut params = state.network.params().to_vec();
            let mut f = |p: &[f64]| {
                probe.params_mut().copy_from_slice(p);
                loss_gradient(&probe, batch, epoch)
            };
            opt.step(&mut params, &mut f, lr, history, max_inner, tolerance)?;
            state.network.params_mut().copy_from_slice(&params);
        }
    }
    Ok(())
}

/// Network output for one sample: one value per system unknown.
pub fn predict_coefficients(net: &Network, sample: &ForcingSample, dof_coords: &[Point]) -> Result<Vec<f64>> {
    let x = encode_input(net.config().input_encoding, sample, dof_coords);
    net.forward(&x)
}

/// Full coefficient vector: network values on the free DOFs, exact zeros on
/// eliminated ones, and the corrector weight last when the system has one.
pub fn predict_solution(
    net: &Network,
    sample: &ForcingSample,
    system: &AssembledSystem,
    dof_coords: &[Point],
) -> Result<Vec<f64>> {
    check_len(system.size(), net.config().output_dim)?;
    system.expand(&predict_coefficients(net, sample, dof_coords)?)
}

/// Predictions for every sample of `dataset`, one row each.
pub fn predict_dataset(net: &Network, dataset: &Dataset, dof_coords: &[Point]) -> Result<Array2<f64>> {
    let d = net.config().input_dim;
    let mut x = Array2::zeros((dataset.len(), d));
    for (m, s) in dataset.samples.iter().enumerate() {
        let row = encode_input(net.config().input_encoding, s, dof_coords);
        check_len(d, row.len())?;
        x.row_mut(m).assign(&ndarray::ArrayView1::from(&row));
    }
    Ok(net.forward_batch(&x)?.0)
}

/// Relative L² error of every prediction against `reference` coefficients
/// (one vector per sample over the system unknowns).
pub fn rel_l2_errors(
    net: &Network,
    system: &AssembledSystem,
    dataset: &Dataset,
    dof_coords: &[Point],
    reference: &[Vec<f64>],
) -> Result<Vec<f64>> {
    check_len(dataset.len(), reference.len())?;
    let pred = predict_dataset(net, dataset, dof_coords)?;
    pred.rows()
        .into_iter()
        .zip(reference)
        .enumerate()
        .map(|(m, (row, r))| l2_rel_error(&row.to_vec(), r, &dataset.system(system, m).mass))
        .collect()
}
