//! Design and verification of direct-coupled coherent quantum observers for
//! a static single-mode plant.
//!
//! * [`linear`]: closed linear quantum systems, symplectic structure and
//!   realizability checks.
//! * [`observer`]: observer synthesis and the augmented plant–observer system.
//! * [`ndpa`]: mapping onto a parametric amplifier with beamsplitter feedback.
//! * [`dynamics`]: numerical verification of the constant plant output and of
//!   time-averaged convergence.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod example;
mod expm;
pub mod linear;
pub mod ndpa;
pub mod observer;

pub use dynamics::{
    coefficient_trajectory, default_horizons, simulate_means, time_average, time_average_error,
    verify_observer_claims, ConvergenceReport, ObserverClaim, QuadratureRule, Trajectory,
    VerificationError,
};
pub use error::{CoreError, DesignError, Stage};
pub use linear::{
    ccr_defect, generator_from_hamiltonian, make_symplectic_space, propagator,
    realizability_defect, LinearQuantumSystem, Origin, QuadraticHamiltonian, SymplecticSpace,
    TolerancePolicy,
};
pub use ndpa::{
    build_open_ndpa, close_loop, coupling_block, design_ndpa, extract_beta, hamiltonian_from_drift,
    quadrature_hamiltonian, solve_phases, solve_theta, DesignReport, ModelWarning, NdpaDesign,
    NdpaOutcome, NdpaParams, OpenNdpaModel,
};
pub use observer::{
    augment, synthesize_observer, validate_observer, ObserverDesign, ObserverDiagnostics,
    ObserverIssue, PlantSpec,
};

pub use nalgebra;
pub use num_complex;
