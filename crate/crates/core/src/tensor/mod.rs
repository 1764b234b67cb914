//! Dense complex matrix kernel: tensor products, partial traces, subsystem
//! permutations, spectral routines and the `NCMX` file format.

mod layout;
mod matrix;
pub mod ncmx;
mod ops;
pub mod spectral;

pub use layout::{check_node_major, nodes_by_prefix, singleton_nodes, BlockLayout, Node, SubsystemLayout};
pub use matrix::{gates, ComplexMatrix, I, ONE, ZERO};
pub use ops::{khatri_rao, kron, kron_all, marginal, partial_trace, permute_subsystems, swap_factors, BlockPartition};
pub use spectral::{eigh, eigvals_hermitian, is_psd, min_eigenvalue, psd_project, psd_tolerance, spectral_norm, trace_norm};
