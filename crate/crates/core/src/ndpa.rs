//! Physical realization of the plant–observer pair with a non-degenerate
//! parametric amplifier (NDPA) whose two output fields are fed back into
//! its inputs through a beamsplitter.
//!
//! Mode `a` plays the plant and mode `b` the observer. The NDPA has
//! Hamiltonian `(i/2)(ε a*b* − ε* a b) + ω_o b*b` and coupling operators
//! `L = [√γ a, √γ b]`. Closing the beamsplitter loop eliminates the noise
//! increments algebraically and leaves a closed drift `F` on the doubled-up
//! vector `(a, b, a*, b*)`. Then `M = (i/2)(JF − F†J)` is the doubled-up
//! Hamiltonian matrix and `R = Φ†MΦ` its quadrature form on
//! `(q_p, p_p, q_o, p_o)`.
//!
//! The two design equations are
//!
//! * `sin θ / (1 − cos θ) = |ε| / γ`, solved in closed form on `(0, π)`;
//! * `arg(e^{iψ} − e^{−iφ}) = arg(c) − π/2` with `c = C_p1 + i C_p2`, solved
//!   by the one-parameter family `ψ = arg c − π + δ`, `φ = π − arg c + δ`,
//!   `δ ∈ (0, π)`.
//!
//! Angles are radians, wrapped to `(−π, π]`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{Matrix2, Matrix4, RowVector2};
use num_complex::Complex64;

use crate::error::{AtStage, CoreError, DesignError, Result, Stage};
use crate::linear::max_abs;
use crate::observer::{synthesize_observer, ObserverDesign, PlantSpec};

/// Upper end of the `|ε|/γ` range in which the linearized NDPA is trusted.
pub const LINEARIZATION_LIMIT: f64 = 0.6;

/// `|1 − cos θ|` below which the beamsplitter loop cannot be closed.
pub const SINGULAR_BEAMSPLITTER_GUARD: f64 = 1e-9;

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    if x > -PI && x <= PI {
        return x;
    }
    let y = x - TAU * ((x + PI) / TAU).floor();
    if y <= -PI {
        y + TAU
    } else {
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelWarning {
    /// `|ε|/γ` outside `(0, 0.6)`: the linearized NDPA model may not hold.
    LinearizationRange { eps_ratio: f64 },
    /// The phase pair `(ψ, φ)` was picked from the solution family with the
    /// given offset. This is a toolkit convention, not a physical constraint.
    PhaseConvention { delta: f64 },
}

impl std::fmt::Display for ModelWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelWarning::LinearizationRange { eps_ratio } => write!(
                f,
                "|eps|/gamma = {eps_ratio} is outside (0, {LINEARIZATION_LIMIT}); the linearized NDPA model may not be valid"
            ),
            ModelWarning::PhaseConvention { delta } => write!(
                f,
                "phases chosen from a one-parameter family with delta = {delta} rad (toolkit convention)"
            ),
        }
    }
}

pub fn linearization_warning(eps_ratio: f64) -> Option<ModelWarning> {
    (eps_ratio > LINEARIZATION_LIMIT).then_some(ModelWarning::LinearizationRange { eps_ratio })
}

/// Solves `sin θ/(1 − cos θ) = eps_ratio` on `(0, π)`.
///
/// The left side is `cot(θ/2)`, so `θ = 2·atan(1/eps_ratio)`. Ratios above
/// [`LINEARIZATION_LIMIT`] are accepted; see [`linearization_warning`].
pub fn solve_theta(eps_ratio: f64) -> Result<f64> {
    if !eps_ratio.is_finite() {
        return Err(CoreError::NonFinite("squeezing ratio"));
    }
    if eps_ratio <= 0.0 {
        return Err(CoreError::NonPositiveRatio(eps_ratio));
    }
    let theta = 2.0 * eps_ratio.recip().atan();
    if 1.0 - theta.cos() < SINGULAR_BEAMSPLITTER_GUARD {
        return Err(CoreError::SingularBeamsplitter(theta));
    }
    Ok(theta)
}

/// `sin θ / (1 − cos θ)`.
pub fn beamsplitter_ratio(theta: f64) -> f64 {
    theta.sin() / (1.0 - theta.cos())
}

/// Picks `(ψ, φ)` satisfying `arg(e^{iψ} − e^{−iφ}) = arg_c − π/2`.
///
/// Uses `e^{iψ} − e^{−iφ} = 2i·sin δ·e^{i(arg_c − π)}`, which has the required
/// argument for every `δ ∈ (0, π)`. `δ = π/2` with `arg_c = 0` gives
/// `ψ = φ = −π/2`.
pub fn solve_phases(arg_c: f64, delta: f64) -> Result<(f64, f64)> {
    if !arg_c.is_finite() || !delta.is_finite() {
        return Err(CoreError::NonFinite("phase inputs"));
    }
    if delta <= 0.0 || delta >= PI {
        return Err(CoreError::DeltaOutOfRange(delta));
    }
    let arg_c = wrap_angle(arg_c);
    // φ = π − arg_c + δ is the same angle as δ − arg_c − π modulo 2π.
    let psi = wrap_angle((arg_c + delta) - PI);
    let phi = wrap_angle((delta - arg_c) - PI);
    Ok((psi, phi))
}

/// `wrap(arg(e^{iψ} − e^{−iφ}) − (arg_c − π/2))`.
pub fn phase_residual(arg_c: f64, psi: f64, phi: f64) -> f64 {
    let z = Complex64::from_polar(1.0, psi) - Complex64::from_polar(1.0, -phi);
    wrap_angle(z.arg() - (arg_c - FRAC_PI_2))
}

/// `α = γ e^{iφ} sin θ / (1 − cos θ)`.
pub fn alpha(gamma: f64, theta: f64, phi: f64) -> Complex64 {
    Complex64::from_polar(gamma * beamsplitter_ratio(theta), phi)
}

/// Physical parameters of the NDPA and beamsplitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NdpaParams {
    pub gamma: f64,
    pub epsilon: Complex64,
    pub omega_o: f64,
    pub theta: f64,
    pub phi: f64,
}

impl NdpaParams {
    pub fn new(gamma: f64, epsilon: Complex64, omega_o: f64, theta: f64, phi: f64) -> Result<Self> {
        if !(gamma.is_finite() && epsilon.is_finite() && omega_o.is_finite())
            || !(theta.is_finite() && phi.is_finite())
        {
            return Err(CoreError::NonFinite("NDPA parameters"));
        }
        if gamma <= 0.0 {
            return Err(CoreError::NonPositiveGamma(gamma));
        }
        if omega_o <= 0.0 {
            return Err(CoreError::NonPositiveFrequency(omega_o));
        }
        if theta <= 0.0 || theta >= PI {
            return Err(CoreError::ThetaOutOfRange(theta));
        }
        Ok(NdpaParams {
            gamma,
            epsilon,
            omega_o,
            theta,
            phi: wrap_angle(phi),
        })
    }

    pub fn eps_ratio(&self) -> f64 {
        self.epsilon.norm() / self.gamma
    }

    /// Phase `ψ` of `ε = |ε| e^{iψ}`.
    pub fn psi(&self) -> f64 {
        self.epsilon.arg()
    }

    pub fn linearization_trusted(&self) -> bool {
        let r = self.eps_ratio();
        r > 0.0 && r < LINEARIZATION_LIMIT
    }

    pub fn alpha(&self) -> Complex64 {
        alpha(self.gamma, self.theta, self.phi)
    }
}

/// The NDPA before the beamsplitter loop is closed:
///
/// ```text
/// d(a,b,a*,b*) = drift · (a,b,a*,b*) dt + input_gain · (dA,dB,dA*,dB*)
/// d(A_out,B_out) = output_gain · (a,b) dt + (dA,dB)
/// ```
///
/// The noise increments are formal symbols only; they are never sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpenNdpaModel {
    pub gamma: f64,
    pub epsilon: Complex64,
    pub omega_o: f64,
    /// Drift on `(a, b, a*, b*)`.
    pub drift: Matrix4<Complex64>,
    /// `−√γ I`, acting on `(dA, dB)`.
    pub input_gain: Matrix2<Complex64>,
    /// `√γ I`: the coefficients of the coupling operators `L = [√γ a, √γ b]`.
    pub output_gain: Matrix2<Complex64>,
}

pub fn build_open_ndpa(gamma: f64, epsilon: Complex64, omega_o: f64) -> Result<OpenNdpaModel> {
    if !(gamma.is_finite() && epsilon.is_finite() && omega_o.is_finite()) {
        return Err(CoreError::NonFinite("NDPA parameters"));
    }
    if gamma <= 0.0 {
        return Err(CoreError::NonPositiveGamma(gamma));
    }
    let zero = Complex64::new(0.0, 0.0);
    let half_eps = epsilon / 2.0;
    let damp_a = Complex64::new(-gamma / 2.0, 0.0);
    let damp_b = Complex64::new(-gamma / 2.0, -omega_o);
    #[rustfmt::skip]
    let drift = Matrix4::new(
        damp_a,           zero,             zero,            half_eps,
        zero,             damp_b,           half_eps,        zero,
        zero,             half_eps.conj(),  damp_a.conj(),   zero,
        half_eps.conj(),  zero,             zero,            damp_b.conj(),
    );
    let root = Complex64::new(gamma.sqrt(), 0.0);
    Ok(OpenNdpaModel {
        gamma,
        epsilon,
        omega_o,
        drift,
        input_gain: Matrix2::from_diagonal_element(-root),
        output_gain: Matrix2::from_diagonal_element(root),
    })
}

/// Beamsplitter relation `(A, B) = S (A_out, B_out)`.
pub fn beamsplitter(theta: f64, phi: f64) -> Matrix2<Complex64> {
    let (s, c) = theta.sin_cos();
    let c = Complex64::new(c, 0.0);
    Matrix2::new(
        c,
        Complex64::from_polar(s, -phi),
        -Complex64::from_polar(s, phi),
        c,
    )
}

fn block_diag(top: &Matrix2<Complex64>, bottom: &Matrix2<Complex64>) -> Matrix4<Complex64> {
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(top);
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(bottom);
    m
}

/// Closes the beamsplitter loop and returns the deterministic drift `F`.
///
/// Substituting `(A_out, B_out) = S⁻¹(A, B)` into the output equation gives
/// `(S⁻¹ − I)(dA, dB) = √γ (a, b) dt`, and
///
/// ```text
/// (S⁻¹ − I)⁻¹ = 1/(2(1 − cos θ)) · [[cos θ − 1,  e^{−iφ} sin θ],
///                                    [−e^{iφ} sin θ, cos θ − 1]].
/// ```
///
/// The noise is then eliminated from the drift equation.
pub fn close_loop(model: &OpenNdpaModel, theta: f64, phi: f64) -> Result<Matrix4<Complex64>> {
    if !theta.is_finite() || !phi.is_finite() {
        return Err(CoreError::NonFinite("beamsplitter angles"));
    }
    let (s, c) = theta.sin_cos();
    let gap = 1.0 - c;
    if gap.abs() < SINGULAR_BEAMSPLITTER_GUARD {
        return Err(CoreError::SingularBeamsplitter(theta));
    }
    let diag = Complex64::new(c - 1.0, 0.0);
    let inverse = Matrix2::new(
        diag,
        Complex64::from_polar(s, -phi),
        -Complex64::from_polar(s, phi),
        diag,
    ) / Complex64::new(2.0 * gap, 0.0);
    // (dA, dB) = noise_map · (a, b) dt
    let noise_map = inverse * model.output_gain;
    let gain = block_diag(&model.input_gain, &model.input_gain.map(|z| z.conj()));
    let noise = block_diag(&noise_map, &noise_map.map(|z| z.conj()));
    Ok(model.drift + gain * noise)
}

/// `J = diag(1, 1, −1, −1)` for the doubled-up ordering.
fn doubled_j() -> Matrix4<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    Matrix4::from_diagonal(&nalgebra::Vector4::new(one, one, -one, -one))
}

/// `M = (i/2)(JF − F†J)`.
pub fn hamiltonian_from_drift(f: &Matrix4<Complex64>) -> Matrix4<Complex64> {
    let j = doubled_j();
    (j * f - f.adjoint() * j) * Complex64::new(0.0, 0.5)
}

/// `‖M − M†‖`, zero for any matrix produced by [`hamiltonian_from_drift`].
pub fn hermitian_defect(m: &Matrix4<Complex64>) -> f64 {
    (m - m.adjoint())
        .iter()
        .fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `Φ`, with `(a, b, a*, b*) = Φ (q_p, p_p, q_o, p_o)`.
pub fn quadrature_map() -> Matrix4<Complex64> {
    let o = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    #[rustfmt::skip]
    let phi = Matrix4::new(
        one, i,  o,   o,
        o,   o,  one, i,
        one, -i, o,   o,
        o,   o,  one, -i,
    );
    phi
}

/// `R = Φ†MΦ`, returned as a real symmetric matrix. Fails if the imaginary
/// part exceeds `1e−12 · max(1, ‖M‖)`.
pub fn quadrature_hamiltonian(m: &Matrix4<Complex64>) -> Result<Matrix4<f64>> {
    let phi = quadrature_map();
    let r = phi.adjoint() * m * phi;
    let scale = m.iter().fold(1.0f64, |acc, z| acc.max(z.norm()));
    let imag = r.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs()));
    if imag > 1e-12 * scale {
        return Err(CoreError::NotRealHamiltonian(imag));
    }
    let re = r.map(|z| z.re);
    Ok((re + re.transpose()) * 0.5)
}

/// Closed form of the plant–observer block of `R`:
///
/// ```text
/// R_c = [[−Im ε − Im α, Re ε + Re α],
///        [ Re ε − Re α, Im ε − Im α]]
/// ```
///
/// with `det R_c = |α|² − |ε|²`.
pub fn coupling_block(epsilon: Complex64, alpha: Complex64) -> Matrix2<f64> {
    Matrix2::new(
        -epsilon.im - alpha.im,
        epsilon.re + alpha.re,
        epsilon.re - alpha.re,
        epsilon.im - alpha.im,
    )
}

/// Factors `R_c = C_pᵀβ` by least squares, `β = C_p R_c / (C_p C_pᵀ)`.
pub fn extract_beta(r_c: &Matrix2<f64>, c_p: &RowVector2<f64>) -> Result<RowVector2<f64>> {
    let norm2 = c_p.norm_squared();
    if norm2 == 0.0 {
        return Err(CoreError::ZeroPlantOutput);
    }
    let scale = max_abs(r_c);
    if scale == 0.0 {
        return Err(CoreError::ZeroCoupling);
    }
    let beta = c_p * r_c / norm2;
    let residual = max_abs(&(r_c - c_p.transpose() * beta));
    let tolerance = 1e-9 * scale;
    if residual > tolerance {
        return Err(CoreError::NotRankOneInPlantDirection {
            residual,
            tolerance,
        });
    }
    if beta == RowVector2::zeros() {
        return Err(CoreError::ZeroCoupling);
    }
    Ok(beta)
}

/// Output of the NDPA mapping pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct NdpaDesign {
    pub params: NdpaParams,
    pub alpha: Complex64,
    /// Closed-loop drift on `(a, b, a*, b*)`.
    pub f: Matrix4<Complex64>,
    pub m: Matrix4<Complex64>,
    /// Quadrature Hamiltonian on `(q_p, p_p, q_o, p_o)`.
    pub r: Matrix4<f64>,
    pub r_c: Matrix2<f64>,
    pub beta: RowVector2<f64>,
    pub c_o: RowVector2<f64>,
}

/// Residuals gathered while running [`design_ndpa`].
#[derive(Debug, Clone, PartialEq)]
pub struct DesignReport {
    pub arg_c: f64,
    pub delta: f64,
    pub theta: f64,
    pub psi: f64,
    pub phi: f64,
    /// `|sin θ/(1 − cos θ) − |ε|/γ|`.
    pub theta_residual: f64,
    /// See [`phase_residual`].
    pub phase_residual: f64,
    /// `wrap(arg(i(ε − α*)) − arg c)`.
    pub quadrature_residual: f64,
    /// `| |α|² − |ε|² | / |ε|²`.
    pub determinant_residual: f64,
    /// `‖M − M†‖`.
    pub hermitian_defect: f64,
    /// Max entry difference between `Φ†MΦ` and `[[0, C_pᵀβ], [βᵀC_p, 2ω_o I]]`.
    pub cross_check: f64,
    pub cross_check_tolerance: f64,
    pub warnings: Vec<ModelWarning>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NdpaOutcome {
    pub ndpa: NdpaDesign,
    pub observer: ObserverDesign,
    pub report: DesignReport,
}

/// `[[0, C_pᵀβ], [βᵀC_p, 2ω_o I]]`.
pub fn abstract_hamiltonian(
    c_p: &RowVector2<f64>,
    beta: &RowVector2<f64>,
    omega_o: f64,
) -> Matrix4<f64> {
    let rc = c_p.transpose() * beta;
    let mut r = Matrix4::zeros();
    r.fixed_view_mut::<2, 2>(0, 2).copy_from(&rc);
    r.fixed_view_mut::<2, 2>(2, 0).copy_from(&rc.transpose());
    r.fixed_view_mut::<2, 2>(2, 2)
        .copy_from(&(Matrix2::identity() * (2.0 * omega_o)));
    r
}

/// Runs the full mapping from an observer specification to NDPA and
/// beamsplitter settings.
///
/// The design equations fix `θ`, `(ψ, φ)` and hence `ε`, `α`, `R_c` and `β`;
/// the observer output row follows from [`synthesize_observer`]. The
/// physical route (open NDPA → loop closure → `M` → `Φ†MΦ`) is then run
/// independently and must reproduce the abstract quadrature Hamiltonian to
/// within `1e−9 · max(ω_o, γ)` per entry.
///
/// `delta` defaults to `π/2`. Inputs may be SI (rad/s) or nondimensional;
/// every frequency is treated in the same unit.
pub fn design_ndpa(
    c_p: RowVector2<f64>,
    omega_o: f64,
    gamma: f64,
    eps_ratio: f64,
    delta: Option<f64>,
) -> Result<NdpaOutcome, DesignError> {
    let plant = PlantSpec::new(c_p).at(Stage::Plant)?;
    if !(omega_o > 0.0) || !omega_o.is_finite() {
        return Err(CoreError::NonPositiveFrequency(omega_o)).at(Stage::SynthesizeObserver);
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(CoreError::NonPositiveGamma(gamma)).at(Stage::BuildOpenNdpa);
    }

    let theta = solve_theta(eps_ratio).at(Stage::SolveTheta)?;
    let delta = delta.unwrap_or(FRAC_PI_2);
    let arg_c = plant.quadrature_angle();
    let (psi, phi) = solve_phases(arg_c, delta).at(Stage::SolvePhases)?;

    let epsilon = Complex64::from_polar(gamma * eps_ratio, psi);
    let params = NdpaParams::new(gamma, epsilon, omega_o, theta, phi).at(Stage::SolveTheta)?;
    let alpha = params.alpha();
    let r_c = coupling_block(epsilon, alpha);
    let beta = extract_beta(&r_c, &c_p).at(Stage::ExtractBeta)?;
    let observer = synthesize_observer(&plant, omega_o, beta).at(Stage::SynthesizeObserver)?;

    let model = build_open_ndpa(gamma, epsilon, omega_o).at(Stage::BuildOpenNdpa)?;
    let f = close_loop(&model, theta, phi).at(Stage::CloseLoop)?;
    let m = hamiltonian_from_drift(&f);
    let r = quadrature_hamiltonian(&m).at(Stage::QuadratureHamiltonian)?;

    let cross_check = max_abs(&(r - abstract_hamiltonian(&c_p, &beta, omega_o)));
    let cross_check_tolerance = 1e-9 * omega_o.max(gamma);
    if !(cross_check <= cross_check_tolerance) {
        return Err(CoreError::CrossCheckMismatch(cross_check)).at(Stage::CrossCheck);
    }

    let eps_norm2 = epsilon.norm_sqr();
    let iw = Complex64::i() * (epsilon - alpha.conj());
    let mut warnings = Vec::new();
    warnings.extend(linearization_warning(eps_ratio));
    warnings.push(ModelWarning::PhaseConvention { delta });

    let report = DesignReport {
        arg_c,
        delta,
        theta,
        psi,
        phi,
        theta_residual: (beamsplitter_ratio(theta) - eps_ratio).abs(),
        phase_residual: phase_residual(arg_c, psi, phi),
        quadrature_residual: wrap_angle(iw.arg() - arg_c),
        determinant_residual: (alpha.norm_sqr() - eps_norm2).abs() / eps_norm2,
        hermitian_defect: hermitian_defect(&m),
        cross_check,
        cross_check_tolerance,
        warnings,
    };
    let ndpa = NdpaDesign {
        params,
        alpha,
        f,
        m,
        r,
        r_c,
        beta,
        c_o: observer.c_o,
    };
    Ok(NdpaOutcome {
        ndpa,
        observer,
        report,
    })
}
