//! Signals, measurement ensembles, transforms and constraint sets.

mod constraint;
mod image;
mod measurement;
mod signal;
mod transform;
mod tree;

pub use constraint::ConstraintSet;
pub use image::{
    energy_order, extract_patches, oracle_energy_subset, parse_pgm, read_pgm, synthetic_image,
    write_pgm, GrayImage,
};
pub use measurement::{make_measurements, Ensemble, MeasurementDocument, MeasurementModel};
pub use signal::{
    clustered_positions, make_clustered_sparse_signal, make_tree_signal, random_rooted_subtree,
    SignalGenerator, SignalInstance,
};
pub use transform::{dct_matrix, redundant_dct_matrix, Transform};
pub use tree::Tree;
