//! JSON documents written by the CLI. Field order is declaration order and
//! every float goes through [`format_f64`], so identical runs give identical
//! bytes.

use nalgebra::{Dim, Matrix, RawStorage};
use qobserver_core::nalgebra;
use qobserver_core::num_complex::Complex64;
use qobserver_core::{ConvergenceReport, DesignReport, NdpaOutcome, ObserverDiagnostics};
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::numfmt::format_f64;

/// A float serialized with the report formatting; non-finite values become
/// `null`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        RawValue::from_string(format_f64(self.0))
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }
}

#[derive(Debug, Serialize)]
pub struct Cplx {
    pub re: Num,
    pub im: Num,
}

impl From<Complex64> for Cplx {
    fn from(z: Complex64) -> Self {
        Cplx {
            re: Num(z.re),
            im: Num(z.im),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Angle {
    pub rad: Num,
    pub deg: Num,
}

impl Angle {
    pub fn new(rad: f64) -> Self {
        Angle {
            rad: Num(rad),
            deg: Num(rad.to_degrees()),
        }
    }
}

pub fn row<R: Dim, C: Dim, S: RawStorage<f64, R, C>>(m: &Matrix<f64, R, C, S>) -> Vec<Num> {
    m.iter().map(|&x| Num(x)).collect()
}

pub fn mat<R: Dim, C: Dim, S: RawStorage<f64, R, C>>(m: &Matrix<f64, R, C, S>) -> Vec<Vec<Num>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| Num(m[(i, j)])).collect())
        .collect()
}

pub fn cmat<R: Dim, C: Dim, S: RawStorage<Complex64, R, C>>(
    m: &Matrix<Complex64, R, C, S>,
) -> Vec<Vec<Cplx>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].into()).collect())
        .collect()
}

pub fn nums(xs: &[f64]) -> Vec<Num> {
    xs.iter().map(|&x| Num(x)).collect()
}

#[derive(Debug, Serialize)]
pub struct InputDoc {
    pub units: &'static str,
    /// rad/s per nondimensional frequency unit.
    pub reference_frequency: Option<Num>,
    pub c_p: Vec<Num>,
    pub omega_o: Num,
    pub gamma: Num,
    pub eps_ratio: Num,
    pub delta: Option<Num>,
}

#[derive(Debug, Serialize)]
pub struct AnglesDoc {
    pub arg_c: Angle,
    pub delta: Angle,
    pub theta: Angle,
    pub psi: Angle,
    pub phi: Angle,
}

/// Every frequency-bearing quantity of one design in one unit system.
#[derive(Debug, Serialize)]
pub struct RepresentationDoc {
    pub omega_o: Num,
    pub gamma: Num,
    pub epsilon: Cplx,
    pub alpha: Cplx,
    pub r_c: Vec<Vec<Num>>,
    pub beta: Vec<Num>,
    pub r_o: Vec<Vec<Num>>,
    pub c_o: Vec<Num>,
    /// Closed-loop drift on `(a, b, a*, b*)`.
    pub f: Vec<Vec<Cplx>>,
    pub m: Vec<Vec<Cplx>>,
    /// Quadrature Hamiltonian on `(q_p, p_p, q_o, p_o)`.
    pub r: Vec<Vec<Num>>,
}

impl RepresentationDoc {
    pub fn new(out: &NdpaOutcome) -> Self {
        let (n, o) = (&out.ndpa, &out.observer);
        RepresentationDoc {
            omega_o: Num(o.omega_o),
            gamma: Num(n.params.gamma),
            epsilon: n.params.epsilon.into(),
            alpha: n.alpha.into(),
            r_c: mat(&n.r_c),
            beta: row(&o.beta),
            r_o: mat(&o.r_o),
            c_o: row(&o.c_o),
            f: cmat(&n.f),
            m: cmat(&n.m),
            r: mat(&n.r),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ObserverCheckDoc {
    pub min_eigenvalue_r_o: Num,
    pub coupling_defect: Num,
    pub constraint_defect: Num,
    pub gain_defect: Num,
    pub limit_gain: Num,
    pub passed: bool,
}

/// Residuals of the nondimensional design.
#[derive(Debug, Serialize)]
pub struct DiagnosticsDoc {
    pub theta_residual: Num,
    pub phase_residual: Num,
    pub quadrature_residual: Num,
    pub determinant_residual: Num,
    pub hermitian_defect: Num,
    pub cross_check: Num,
    pub cross_check_tolerance: Num,
    pub realizability_defect: Num,
    pub plant_row_defect: Num,
    pub observer: ObserverCheckDoc,
}

impl DiagnosticsDoc {
    pub fn new(
        r: &DesignReport,
        obs: &ObserverDiagnostics,
        limit_gain: f64,
        realizability_defect: f64,
        plant_row_defect: f64,
    ) -> Self {
        DiagnosticsDoc {
            theta_residual: Num(r.theta_residual),
            phase_residual: Num(r.phase_residual),
            quadrature_residual: Num(r.quadrature_residual),
            determinant_residual: Num(r.determinant_residual),
            hermitian_defect: Num(r.hermitian_defect),
            cross_check: Num(r.cross_check),
            cross_check_tolerance: Num(r.cross_check_tolerance),
            realizability_defect: Num(realizability_defect),
            plant_row_defect: Num(plant_row_defect),
            observer: ObserverCheckDoc {
                min_eigenvalue_r_o: Num(obs.min_eigenvalue_r_o),
                coupling_defect: Num(obs.coupling_defect),
                constraint_defect: Num(obs.constraint_defect),
                gain_defect: Num(obs.gain_defect),
                limit_gain: Num(limit_gain),
                passed: obs.passed(),
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct DesignDoc {
    pub input: InputDoc,
    pub c_p: Vec<Num>,
    pub angles: AnglesDoc,
    /// Absent for nondimensional input without a reference frequency.
    pub si: Option<RepresentationDoc>,
    pub nondimensional: RepresentationDoc,
    pub diagnostics: DiagnosticsDoc,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct ClaimDoc {
    pub claim: &'static str,
    pub passed: bool,
}

/// Verification results. Times and frequencies are nondimensional unless
/// the key says otherwise.
#[derive(Debug, Serialize)]
pub struct VerifyDoc {
    pub input: InputDoc,
    pub omega_o: Num,
    pub horizons: Vec<Num>,
    pub horizons_s: Option<Vec<Num>>,
    pub errors: Vec<Num>,
    pub quadrature_estimates: Vec<Num>,
    pub successive_ratios: Vec<Num>,
    pub strictly_decreasing: bool,
    /// Exponent of a power-law fit to the errors. A toolkit diagnostic; the
    /// underlying theory only asserts that the limit is zero.
    pub fitted_rate: Num,
    pub plant_row_defect: Num,
    pub limit_gain: Num,
    pub oscillation_frequency_estimate: Num,
    pub expected_frequency: Num,
    pub oscillation_frequency_rad_s: Option<Num>,
    pub claims: Vec<ClaimDoc>,
    pub passed: bool,
}

impl VerifyDoc {
    pub fn new(
        input: InputDoc,
        omega_o: f64,
        reference: Option<f64>,
        r: &ConvergenceReport,
    ) -> Self {
        use qobserver_core::ObserverClaim::*;
        VerifyDoc {
            input,
            omega_o: Num(omega_o),
            horizons: nums(&r.horizons),
            horizons_s: reference.map(|w| r.horizons.iter().map(|t| Num(t / w)).collect()),
            errors: nums(&r.errors),
            quadrature_estimates: nums(&r.quadrature_estimates),
            successive_ratios: nums(&r.successive_ratios),
            strictly_decreasing: r.strictly_decreasing,
            fitted_rate: Num(r.fitted_rate),
            plant_row_defect: Num(r.plant_row_defect),
            limit_gain: Num(r.limit_gain),
            oscillation_frequency_estimate: Num(r.oscillation_frequency_estimate),
            expected_frequency: Num(r.expected_frequency),
            oscillation_frequency_rad_s: reference
                .map(|w| Num(r.oscillation_frequency_estimate * w)),
            claims: [
                PlantOutputConstant,
                TimeAveragedConvergence,
                ObserverOscillation,
            ]
            .into_iter()
            .map(|c| ClaimDoc {
                claim: c.name(),
                passed: !r.violations.contains(&c),
            })
            .collect(),
            passed: r.passed(),
        }
    }
}

pub fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("report serializes");
    s.push('\n');
    s
}
