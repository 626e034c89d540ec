//! Direct-coupled observer synthesis for a static single-mode plant.
//!
//! The plant has `A_p = 0` and output `z_p = C_p x_p`. The observer is a
//! single mode with Hamiltonian `½ x_oᵀ R_o x_o`, coupled to the plant through
//! `x_pᵀ R_c x_o`. A design is admissible when
//!
//! * `R_o > 0`,
//! * `R_c = C_pᵀ β`,
//! * `C_o R_o⁻¹ βᵀ = −1`.

use nalgebra::{DMatrix, Matrix2, RowVector2};

use crate::error::{CoreError, Result};
use crate::linear::{
    generator_from_hamiltonian, make_symplectic_space, max_abs, LinearQuantumSystem,
    QuadraticHamiltonian,
};

/// Static plant with output row `C_p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantSpec {
    c_p: RowVector2<f64>,
}

impl PlantSpec {
    pub fn new(c_p: RowVector2<f64>) -> Result<Self> {
        if c_p.iter().any(|x| !x.is_finite()) {
            return Err(CoreError::NonFinite("plant output row"));
        }
        if c_p == RowVector2::zeros() {
            return Err(CoreError::ZeroPlantOutput);
        }
        Ok(PlantSpec { c_p })
    }

    pub fn c_p(&self) -> RowVector2<f64> {
        self.c_p
    }

    /// The complex number `c = C_p1 + i C_p2`; its argument selects the
    /// plant quadrature being estimated.
    pub fn quadrature_angle(&self) -> f64 {
        self.c_p[1].atan2(self.c_p[0])
    }
}

/// Observer matrices. Fields are public so that hand-built (possibly invalid)
/// designs can be checked with [`validate_observer`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverDesign {
    pub c_p: RowVector2<f64>,
    pub omega_o: f64,
    pub r_o: Matrix2<f64>,
    pub beta: RowVector2<f64>,
    pub r_c: Matrix2<f64>,
    pub c_o: RowVector2<f64>,
}

impl ObserverDesign {
    /// Same design with every frequency divided by `reference`. `C_o` and
    /// `C_p` are dimensionless and unchanged.
    pub fn nondimensionalize(&self, reference: f64) -> ObserverDesign {
        ObserverDesign {
            c_p: self.c_p,
            omega_o: self.omega_o / reference,
            r_o: self.r_o / reference,
            beta: self.beta / reference,
            r_c: self.r_c / reference,
            c_o: self.c_o,
        }
    }

    /// Same design with a different observer output row.
    pub fn with_c_o(mut self, c_o: RowVector2<f64>) -> ObserverDesign {
        self.c_o = c_o;
        self
    }

    /// `−C_o R_o⁻¹ βᵀ`: the value the time-averaged observer output reaches
    /// per unit of `z_p`. Equals 1 for an admissible design.
    pub fn limit_gain(&self) -> Option<f64> {
        let inv = self.r_o.try_inverse()?;
        Some(-(self.c_o * inv * self.beta.transpose())[(0, 0)])
    }
}

/// Builds `R_o = 2ω_o I`, `R_c = C_pᵀβ` and the minimum-norm `C_o` solving
/// `C_o βᵀ = −2ω_o`, which is `C_o = −2ω_o β / ‖β‖²`.
pub fn synthesize_observer(
    plant: &PlantSpec,
    omega_o: f64,
    beta: RowVector2<f64>,
) -> Result<ObserverDesign> {
    if !omega_o.is_finite() || beta.iter().any(|x| !x.is_finite()) {
        return Err(CoreError::NonFinite("observer frequency or beta"));
    }
    if omega_o <= 0.0 {
        return Err(CoreError::NonPositiveFrequency(omega_o));
    }
    let norm2 = beta.norm_squared();
    if norm2 == 0.0 {
        return Err(CoreError::ZeroCoupling);
    }
    Ok(ObserverDesign {
        c_p: plant.c_p,
        omega_o,
        r_o: Matrix2::identity() * (2.0 * omega_o),
        beta,
        r_c: plant.c_p.transpose() * beta,
        c_o: beta * (-2.0 * omega_o / norm2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObserverIssue {
    ObserverNotPositive,
    CouplingNotRankOne,
    GainConstraint,
    NoCoupling,
}

/// Per-condition defects of an [`ObserverDesign`].
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverDiagnostics {
    /// Smallest eigenvalue of `R_o`.
    pub min_eigenvalue_r_o: f64,
    /// `‖R_c − C_pᵀβ‖`.
    pub coupling_defect: f64,
    /// `|C_o βᵀ + 2ω_o|`; meaningful when `R_o = 2ω_o I`.
    pub constraint_defect: f64,
    /// `|C_o R_o⁻¹ βᵀ + 1|`, the scale-free form of the gain condition.
    pub gain_defect: f64,
    pub issues: Vec<ObserverIssue>,
}

impl ObserverDiagnostics {
    pub fn passed(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Reports every admissibility defect. The coupling defect is compared
/// against `tol · max(1, ‖C_pᵀβ‖)` so the check is usable at SI scale.
pub fn validate_observer(design: &ObserverDesign, tol: f64) -> ObserverDiagnostics {
    let r_o = design.r_o;
    let half_trace = 0.5 * (r_o[(0, 0)] + r_o[(1, 1)]);
    let half_gap = 0.5 * (r_o[(0, 0)] - r_o[(1, 1)]);
    let off = 0.5 * (r_o[(0, 1)] + r_o[(1, 0)]);
    let min_eigenvalue_r_o = half_trace - half_gap.hypot(off);

    let target = design.c_p.transpose() * design.beta;
    let coupling_defect = max_abs(&(design.r_c - target));
    let constraint_defect =
        ((design.c_o * design.beta.transpose())[(0, 0)] + 2.0 * design.omega_o).abs();
    let gain_defect = design
        .limit_gain()
        .map_or(f64::INFINITY, |g| (1.0 - g).abs());

    let mut issues = Vec::new();
    if !(min_eigenvalue_r_o > 0.0) {
        issues.push(ObserverIssue::ObserverNotPositive);
    }
    if design.beta == RowVector2::zeros() {
        issues.push(ObserverIssue::NoCoupling);
    }
    if coupling_defect > tol * max_abs(&target).max(1.0) {
        issues.push(ObserverIssue::CouplingNotRankOne);
    }
    if !(gain_defect <= tol) {
        issues.push(ObserverIssue::GainConstraint);
    }
    ObserverDiagnostics {
        min_eigenvalue_r_o,
        coupling_defect,
        constraint_defect,
        gain_defect,
        issues,
    }
}

/// Indices of the two output rows of an augmented system.
pub const PLANT_ROW: usize = 0;
pub const OBSERVER_ROW: usize = 1;

/// Plant–observer system on `(q_p, p_p, q_o, p_o)` with
/// `R_aug = [[0, R_c], [R_cᵀ, R_o]]`, `A_aug = 2·diag(J, J)·R_aug` and output
/// rows `C_p,aug = [C_p, 0, 0]` and `C_o,aug = [0, 0, C_o]`.
pub fn augment(plant: &PlantSpec, design: &ObserverDesign) -> Result<LinearQuantumSystem> {
    if plant.c_p != design.c_p {
        return Err(CoreError::Dimension(
            "observer design was built for a different plant output row".into(),
        ));
    }
    let mut r = DMatrix::zeros(4, 4);
    r.view_mut((0, 2), (2, 2)).copy_from(&design.r_c);
    r.view_mut((2, 0), (2, 2))
        .copy_from(&design.r_c.transpose());
    r.view_mut((2, 2), (2, 2)).copy_from(&design.r_o);
    let space = make_symplectic_space(2)?;
    let h = QuadraticHamiltonian::new(space, r)?;

    let mut c = DMatrix::zeros(2, 4);
    c.view_mut((PLANT_ROW, 0), (1, 2)).copy_from(&plant.c_p);
    c.view_mut((OBSERVER_ROW, 2), (1, 2)).copy_from(&design.c_o);
    generator_from_hamiltonian(&h).with_outputs(c)
}
