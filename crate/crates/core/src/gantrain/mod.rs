//! Desk-scale GAN training on a multi-modal toy dataset and the end-to-end
//! mode-collapse experiment.

mod experiment;
mod toy;
mod train;

pub use experiment::{
    constant_generator, run_experiment, run_experiment_with, ExperimentConfig, ExperimentOutcome, ExperimentRow,
};
pub use toy::{make_toy_dataset, ToyDatasetSpec};
pub use train::{generate, images_to_matrix, train_gan, GanConfig, TrainHistory, TrainedGan};
