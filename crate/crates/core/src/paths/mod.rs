//! Brownian path populations, Feynman–Kac weighting and endpoint measures.

pub mod ensemble;
pub mod pathset;
pub mod she;

pub use ensemble::{
    renormalization, EndpointMeasure, EnsembleManifest, NoiseIdentity, PartitionEstimate,
    WeightedEnsemble,
};
pub use pathset::PathSet;
pub use she::{scaled_partition, scaling_check, she_solution, ScalingMode, ScalingReport, SheParams};
