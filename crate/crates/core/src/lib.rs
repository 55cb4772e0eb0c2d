//! Two two-level atoms collectively damped through a heavily damped cavity,
//! with the drive modulated by the homodyne photocurrent of the cavity output.
//!
//! The crate computes steady states of the ensemble-average master equation,
//! simulates conditioned homodyne trajectories, and evaluates concurrence,
//! purity and the spin Q function of the resulting states.
//!
//! ```
//! use qfb::{feedback_drift_generator, steady_state, concurrence, BasisLabel, ModelParams};
//!
//! let l = feedback_drift_generator(&ModelParams::new(0.4, -0.8), BasisLabel::Dicke3).unwrap();
//! let rho = steady_state(&l).unwrap().rho;
//! let c = concurrence(&rho).unwrap();
//! assert!((c - 0.30).abs() < 0.01);
//! ```

pub mod bloch;
pub mod error;
pub mod format;
pub mod generators;
pub mod linalg;
pub mod metrics;
pub mod operators;
pub mod params;
pub mod qfunc;
pub mod state;
pub mod trajectories;

#[cfg(test)]
mod test_util;

pub use bloch::{analytic_steady, consistency_report, ode_rhs, BlochState, ConsistencyReport};
pub use error::{Error, Result};
pub use generators::{
    adiabatic_comparison, cavity_generator, dissipator, feedback_drift_generator, hamiltonian_part,
    partial_trace_cavity, propagate, propagate_sampled, steady_state, triplet_steady_state,
    unmodulated_generator, AdiabaticRow, Propagation, SteadyState, Superop,
};
pub use linalg::{herm_eig, kron, psd_sqrt, solve_linear, trace_distance, unvec, vec, CMat};
pub use metrics::{
    concurrence, mems_concurrence, mems_r2, purity_r2, spin_flip, sweep, Sweep, SweepRow,
    SweepSummary,
};
pub use num_complex::Complex64 as C64;
pub use operators::{collective_ops, embed_dicke_to_product, AtomBasis, BasisLabel, CollectiveOps};
pub use params::{CavityParams, ModelParams};
pub use qfunc::{coherent_state, q_grid, q_value, QGrid};
pub use state::DensityMatrix;
pub use trajectories::{
    ensemble_mean, run_trajectory, EnsembleMean, RngStream, Scheme, Stepper, TrajectoryOptions,
    TrajectoryRecord, Unravelling,
};
