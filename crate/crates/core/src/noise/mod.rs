//! Mollifier, covariance kernel, discretized white noise and the mollified field.

pub mod field;
pub mod grid;
pub mod kernel;
pub mod mollifier;
pub mod spec;

pub use field::{field_covariance, field_energy, Field, Stencil, TimeOrder};
pub use grid::{steps_for, GridGeometry, NoiseGrid, DEFAULT_MEMORY_BUDGET};
pub use kernel::KernelV;
pub use mollifier::Mollifier;
pub use spec::{NoiseSpec, DENSE_THRESHOLD};
