//! Exact readout statistics for binary optical memory cells whose two
//! transmittance levels are Gaussian random variables.
//!
//! The crate evaluates, without sampling, the error probability and the
//! recovered information of four readout strategies (a classical local
//! bound, classical photon counting with full or mean-only knowledge of the
//! levels, and an entangled two-mode squeezed vacuum probe with photon
//! counting), plus the Holevo capacity of the cell for classical probes.

pub mod capacity;
pub mod counting;
pub mod dists;
mod error;
pub mod infotheory;
pub mod special;
pub mod strategies;

pub use capacity::{check_concavity, chi_classical, chi_coherent, CapacityResult, ChiOptions};
pub use counting::{joint_tmsv_counts, CountDistribution, Modes, ProbeParams};
pub use dists::{bayes_error_floor, discretize, expect, CellModel, CellSpec, DiscreteDistribution, TransmittanceSpec};
pub use error::{ReadoutError, Result};
pub use infotheory::{binary_entropy, coherent_gram, info_from_perr, mixture_entropy, GramMixture};
pub use strategies::{
    classical_hb, classical_mv, classical_pc, quantum_gain, quantum_pc, quantum_pc_with, Benchmark, EvalOptions,
    QuantumOptions, StrategyId, StrategyResult,
};
