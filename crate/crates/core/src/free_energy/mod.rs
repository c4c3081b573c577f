//! Lyapunov-exponent estimates, the Itô decomposition of `log Z`, and the
//! quadratic-variation, concentration and comparison diagnostics.

pub mod bounds;
pub mod estimate;
pub mod ledger;
pub mod output;

pub use bounds::{concentration_check, kahane_comparison_check, ConcaveF, ConcentrationReport, KahaneReport, KahaneRow};
pub use estimate::{
    lyapunov_estimate, lyapunov_scan, richardson, strong_disorder_flag, DecayReport, FreeEnergyEstimate, FreeEnergyParams,
};
pub use ledger::{
    drift_identity, ito_decomposition_check, ito_ledger, occupation_consistency, qv_bound_check, DriftIdentity,
    ItoCheckReport, ItoLedger, OccupationConsistency, QvReport,
};
pub use output::{free_energy_rows, read_rows, write_rows, FreeEnergyRow, FreeEnergySummary, SummaryEntry};
