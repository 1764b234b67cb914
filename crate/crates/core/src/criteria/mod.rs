//! Network criteria: the trace-norm bound, triangle decompositions and the
//! Ξ test, visibility thresholds and the GHZ fidelity bound.

pub mod btn;
pub mod fidelity;
mod report;
mod threshold;
mod topology;
mod trace_norm;

pub use btn::{
    btn_decompose, decompose_state, full_basis_cm, prop2_report, prop2_residual, xi_matrix, xi_psd_report,
    BtnDecomposition, Prop2Residual, SplitBases,
};
pub use fidelity::{ghz_fidelity_bound, FidelityBound, FidelitySearch};
pub use report::{CriterionReport, SCHEMA_VERSION};
pub use threshold::visibility_threshold;
pub use topology::{NetworkTopology, Source, SourceMask};
pub use trace_norm::{trace_norm_criterion, CRITERION as TRACE_NORM};
