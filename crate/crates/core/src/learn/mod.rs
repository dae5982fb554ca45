//! Unrolled networks, their gradients, training and mixtures of networks.

mod mixture;
mod network;
mod train;

pub use mixture::{grouped_sparse_dataset, reference_objectives, train_mixture, MixtureConfig, MixtureModel, MixtureOutcome};
pub use network::{Checkpoint, Forward, Gradients, Nonlinearity, UnrolledNetwork};
pub use train::{
    batch_gradient, evaluate_objective, mean_loss, objective, sample_gradient, train, Dataset, EpochLoss,
    TrainingConfig, TrainingObjective, TrainingOutcome,
};
