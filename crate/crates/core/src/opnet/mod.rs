//! The operator network: forcing sample in, Galerkin coefficients out,
//! trained on the discrete residual alone.

mod checkpoint;
mod loss;
mod network;
mod optim;
mod train;

pub use checkpoint::{
    load_checkpoint, load_checkpoint_for, parse_checkpoint, save_checkpoint, write_checkpoint, Checkpoint,
};
pub use loss::{batch_loss, loss_and_output_gradient, loss_gradient, residual_loss, Batch};
pub use network::{
    encode_input, Activation, FinalActivation, ForwardCache, InputEncoding, Network, NetworkConfig,
};
pub use optim::{Adam, Lbfgs, LbfgsStep, OptimizerConfig};
pub use train::{
    predict_coefficients, predict_dataset, predict_solution, rel_l2_errors, run_epochs, train,
    OptimizerState, TrainConfig, TrainState,
};
