//! Translation-quotient configuration space: subprobability configurations,
//! the test-function family, the metric `D`, decomposition into separated
//! pieces and Wasserstein distances between configuration distributions.

pub mod assignment;
pub mod config;
pub mod decompose;
pub mod family;
pub mod metric;
pub mod wasserstein;

pub use config::{ConfigDistribution, SubProbConfig, MASS_TOLERANCE};
pub use decompose::{
    ball_masses, concentration_function, decompose, link_clusters, DEFAULT_MASS_FLOOR,
    DEFAULT_SEPARATION,
};
pub use family::{lambda_functional, TestFunction, TestFunctionFamily, DEFAULT_RANK};
pub use metric::{metric_d, MetricValue};
pub use wasserstein::{wasserstein, WassersteinValue};
