use std::fmt;

use thiserror::Error;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("plant output selector is zero")]
    ZeroPlantOutput,

    #[error(
        "coupling vector beta is zero; no observer output row can satisfy the gain constraint"
    )]
    ZeroCoupling,

    #[error("observer frequency must be positive (got {0})")]
    NonPositiveFrequency(f64),

    #[error("mirror coupling rate gamma must be positive (got {0})")]
    NonPositiveGamma(f64),

    #[error("squeezing ratio |eps|/gamma must be positive (got {0})")]
    NonPositiveRatio(f64),

    #[error("phase offset delta must lie in (0, pi) (got {0})")]
    DeltaOutOfRange(f64),

    #[error("beamsplitter angle {0:e} rad is singular (cos theta = 1)")]
    SingularBeamsplitter(f64),

    #[error("beamsplitter angle theta must lie in (0, pi) (got {0})")]
    ThetaOutOfRange(f64),

    #[error("quadrature Hamiltonian has imaginary residual {0:e}; input is not a doubled-up Hamiltonian")]
    NotRealHamiltonian(f64),

    #[error("coupling block is not of the form c_p^T beta (residual {residual:e}, tolerance {tolerance:e})")]
    NotRankOneInPlantDirection { residual: f64, tolerance: f64 },

    #[error("horizon must be positive (got {0})")]
    NonPositiveHorizon(f64),

    #[error("time grid must be non-empty and strictly increasing")]
    BadTimeGrid,

    #[error(
        "quadrature did not resolve the time average (estimate {estimate:e} vs value {value:e})"
    )]
    QuadratureUnresolved { value: f64, estimate: f64 },

    #[error("physical and abstract quadrature Hamiltonians disagree by {0:e}")]
    CrossCheckMismatch(f64),
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;

/// Pipeline stage names, used to attribute design failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Plant,
    SolveTheta,
    SolvePhases,
    CouplingBlock,
    ExtractBeta,
    SynthesizeObserver,
    BuildOpenNdpa,
    CloseLoop,
    HamiltonianFromDrift,
    QuadratureHamiltonian,
    CrossCheck,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Plant => "plant",
            Stage::SolveTheta => "solve_theta",
            Stage::SolvePhases => "solve_phases",
            Stage::CouplingBlock => "coupling_block",
            Stage::ExtractBeta => "extract_beta",
            Stage::SynthesizeObserver => "synthesize_observer",
            Stage::BuildOpenNdpa => "build_open_ndpa",
            Stage::CloseLoop => "close_loop",
            Stage::HamiltonianFromDrift => "hamiltonian_from_drift",
            Stage::QuadratureHamiltonian => "quadrature_hamiltonian",
            Stage::CrossCheck => "cross_check",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A [`CoreError`] tagged with the design stage that produced it.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("stage {stage}: {source}")]
pub struct DesignError {
    pub stage: Stage,
    #[source]
    pub source: CoreError,
}

pub(crate) trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, DesignError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> Result<T, DesignError> {
        self.map_err(|source| DesignError { stage, source })
    }
}
