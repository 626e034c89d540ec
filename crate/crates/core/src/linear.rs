//! Closed linear quantum systems in quadrature form.
//!
//! Coordinates are stacked as `x = (q_1, p_1, q_2, p_2, ...)` and obey
//! `[x_j, x_k] = 2i Θ_jk` with `Θ = diag(J, ..., J)`, `J = [[0, 1], [-1, 0]]`.
//! The `[q, p] = 2i` convention is fixed; there is no switch for `[q, p] = i`.
//!
//! A quadratic Hamiltonian `H = ½ xᵀ R x` generates `ẋ = A x` with `A = 2ΘR`.
//! All defect measures use the max-abs entry norm.

use nalgebra::{DMatrix, Dim, Matrix, Matrix2, RawStorage};

use crate::error::{CoreError, Result};

/// Largest absolute entry of a real matrix.
pub fn max_abs<R: Dim, C: Dim, S: RawStorage<f64, R, C>>(m: &Matrix<f64, R, C, S>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// The 2×2 symplectic unit `J`.
pub fn j2() -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, -1.0, 0.0)
}

/// Numerical tolerances attached to a [`SymplecticSpace`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TolerancePolicy {
    /// Checks of exact algebraic identities.
    pub exact: f64,
    /// Checks involving propagation in time.
    pub dynamic: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        TolerancePolicy {
            exact: 1e-12,
            dynamic: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpace {
    modes: usize,
    theta: DMatrix<f64>,
    tolerance: TolerancePolicy,
}

impl SymplecticSpace {
    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Number of system variables, `2 · modes`.
    pub fn dim(&self) -> usize {
        2 * self.modes
    }

    /// The commutation matrix `Θ`.
    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }

    pub fn tolerance(&self) -> TolerancePolicy {
        self.tolerance
    }

    pub fn with_tolerance(mut self, tolerance: TolerancePolicy) -> Self {
        self.tolerance = tolerance;
        self
    }
}

/// Builds `Θ = diag(J, ..., J)` for the given number of modes.
pub fn make_symplectic_space(modes: usize) -> Result<SymplecticSpace> {
    if modes == 0 {
        return Err(CoreError::Dimension(
            "a symplectic space needs at least one mode".into(),
        ));
    }
    let n = 2 * modes;
    let mut theta = DMatrix::zeros(n, n);
    for k in 0..modes {
        theta[(2 * k, 2 * k + 1)] = 1.0;
        theta[(2 * k + 1, 2 * k)] = -1.0;
    }
    Ok(SymplecticSpace {
        modes,
        theta,
        tolerance: TolerancePolicy::default(),
    })
}

/// `H = ½ xᵀ R x` with `R` symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticHamiltonian {
    r: DMatrix<f64>,
    space: SymplecticSpace,
    asymmetry: f64,
}

impl QuadraticHamiltonian {
    /// Symmetrizes `r` as `(R + Rᵀ)/2`. The discarded antisymmetric part is
    /// available from [`asymmetry`](Self::asymmetry).
    pub fn new(space: SymplecticSpace, r: DMatrix<f64>) -> Result<Self> {
        let n = space.dim();
        if r.shape() != (n, n) {
            return Err(CoreError::Dimension(format!(
                "Hamiltonian matrix is {}x{}, space has dimension {n}",
                r.nrows(),
                r.ncols()
            )));
        }
        if r.iter().any(|x| !x.is_finite()) {
            return Err(CoreError::NonFinite("Hamiltonian matrix"));
        }
        let asymmetry = max_abs(&(&r - r.transpose())) / 2.0;
        let r = (&r + r.transpose()) * 0.5;
        Ok(QuadraticHamiltonian {
            r,
            space,
            asymmetry,
        })
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn space(&self) -> &SymplecticSpace {
        &self.space
    }

    /// Max-abs size of the antisymmetric part removed on construction.
    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    /// `Some(asymmetry)` when it exceeds the exact-identity tolerance.
    pub fn asymmetry_warning(&self) -> Option<f64> {
        (self.asymmetry > self.space.tolerance.exact).then_some(self.asymmetry)
    }

    /// Evaluates `½ xᵀ R x`.
    pub fn energy(&self, x: &[f64]) -> f64 {
        let v = nalgebra::DVector::from_column_slice(x);
        0.5 * v.dot(&(&self.r * &v))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    FromHamiltonian(QuadraticHamiltonian),
    Raw,
}

/// `ẋ = A x`, `z = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearQuantumSystem {
    a: DMatrix<f64>,
    c: DMatrix<f64>,
    space: SymplecticSpace,
    origin: Origin,
}

impl LinearQuantumSystem {
    /// A system given directly by its generator; no realizability is assumed.
    pub fn raw(space: SymplecticSpace, a: DMatrix<f64>) -> Result<Self> {
        let n = space.dim();
        if a.shape() != (n, n) {
            return Err(CoreError::Dimension(format!(
                "generator is {}x{}, space has dimension {n}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(CoreError::NonFinite("generator matrix"));
        }
        Ok(LinearQuantumSystem {
            a,
            c: DMatrix::zeros(0, n),
            space,
            origin: Origin::Raw,
        })
    }

    /// Replaces the output rows.
    pub fn with_outputs(mut self, c: DMatrix<f64>) -> Result<Self> {
        if c.ncols() != self.space.dim() {
            return Err(CoreError::Dimension(format!(
                "output matrix has {} columns, expected {}",
                c.ncols(),
                self.space.dim()
            )));
        }
        self.c = c;
        Ok(self)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn space(&self) -> &SymplecticSpace {
        &self.space
    }

    pub fn origin(&self) -> &Origin {
        &self.origin
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }
}

/// `A = 2ΘR`. The result carries no output rows.
pub fn generator_from_hamiltonian(h: &QuadraticHamiltonian) -> LinearQuantumSystem {
    let a = h.space.theta() * h.r() * 2.0;
    LinearQuantumSystem {
        c: DMatrix::zeros(0, h.space.dim()),
        a,
        space: h.space.clone(),
        origin: Origin::FromHamiltonian(h.clone()),
    }
}

/// `‖AΘ + ΘAᵀ‖`; zero exactly when `A = 2ΘR` for a symmetric `R`.
pub fn realizability_defect(sys: &LinearQuantumSystem) -> f64 {
    let theta = sys.space.theta();
    max_abs(&(&sys.a * theta + theta * sys.a.transpose()))
}

/// `e^{At}` by scaling and squaring; see [`crate::expm`].
pub fn propagator(sys: &LinearQuantumSystem, t: f64) -> Result<DMatrix<f64>> {
    if !t.is_finite() {
        return Err(CoreError::NonFinite("propagation time"));
    }
    if t == 0.0 {
        return Ok(DMatrix::identity(sys.dim(), sys.dim()));
    }
    Ok(crate::expm::expm(&sys.a, t))
}

/// `‖e^{At} Θ e^{Aᵀt} − Θ‖`.
pub fn ccr_defect(sys: &LinearQuantumSystem, t: f64) -> Result<f64> {
    let phi = propagator(sys, t)?;
    let theta = sys.space.theta();
    Ok(max_abs(&(&phi * theta * phi.transpose() - theta)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn one_mode() -> SymplecticSpace {
        make_symplectic_space(1).unwrap()
    }

    #[test]
    fn theta_single_mode_is_j() {
        let s = one_mode();
        assert_eq!(
            s.theta(),
            &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
        );
    }

    #[test]
    fn theta_two_modes_block_diagonal() {
        let s = make_symplectic_space(2).unwrap();
        let t = s.theta();
        assert_eq!(t.shape(), (4, 4));
        assert_eq!(t[(0, 1)], 1.0);
        assert_eq!(t[(1, 0)], -1.0);
        assert_eq!(t[(2, 3)], 1.0);
        assert_eq!(t[(3, 2)], -1.0);
        assert_eq!(t.iter().filter(|x| **x != 0.0).count(), 4);
        assert_eq!(t.transpose(), -t.clone());
        assert_eq!(t * t, -DMatrix::<f64>::identity(4, 4));
    }

    #[test]
    fn zero_modes_rejected() {
        assert!(matches!(
            make_symplectic_space(0),
            Err(CoreError::Dimension(_))
        ));
    }

    #[test]
    fn generator_of_detuned_mode() {
        // R = 2ω I with ω = 1 gives A = 4J.
        let h = QuadraticHamiltonian::new(one_mode(), DMatrix::identity(2, 2) * 2.0).unwrap();
        let sys = generator_from_hamiltonian(&h);
        assert_eq!(
            sys.a(),
            &DMatrix::from_row_slice(2, 2, &[0.0, 4.0, -4.0, 0.0])
        );
        assert!(matches!(sys.origin(), Origin::FromHamiltonian(_)));
        assert_eq!(sys.c().nrows(), 0);
    }

    #[test]
    fn zero_hamiltonian_is_static() {
        let h = QuadraticHamiltonian::new(one_mode(), DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(generator_from_hamiltonian(&h).a(), &DMatrix::zeros(2, 2));
    }

    #[test]
    fn hamiltonian_dimension_mismatch() {
        let err = QuadraticHamiltonian::new(one_mode(), DMatrix::zeros(4, 4)).unwrap_err();
        assert!(matches!(err, CoreError::Dimension(_)));
    }

    #[test]
    fn symmetrization_reports_asymmetry() {
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let h = QuadraticHamiltonian::new(one_mode(), r).unwrap();
        assert_eq!(h.r(), &DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]));
        assert_eq!(h.asymmetry_warning(), Some(1.0));
        assert_eq!(h.energy(&[1.0, 1.0]), 2.0);
    }

    #[test]
    fn identity_generator_not_realizable() {
        let sys = LinearQuantumSystem::raw(one_mode(), DMatrix::identity(2, 2)).unwrap();
        assert_eq!(realizability_defect(&sys), 2.0);
        let zero = LinearQuantumSystem::raw(one_mode(), DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(realizability_defect(&zero), 0.0);
    }

    #[test]
    fn propagator_of_scaled_j_is_rotation() {
        let w = 1.7;
        let sys = LinearQuantumSystem::raw(
            one_mode(),
            DMatrix::from_row_slice(2, 2, j2().transpose().as_slice()) * w,
        )
        .unwrap();
        for &t in &[0.0, 0.3, 1.0, 4.2, 25.0] {
            let p = propagator(&sys, t).unwrap();
            let (s, c) = (w * t).sin_cos();
            let expected = DMatrix::from_row_slice(2, 2, &[c, s, -s, c]);
            assert_abs_diff_eq!(p, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn propagator_of_zero_is_identity() {
        let sys = LinearQuantumSystem::raw(make_symplectic_space(2).unwrap(), DMatrix::zeros(4, 4))
            .unwrap();
        assert_eq!(propagator(&sys, 123.0).unwrap(), DMatrix::identity(4, 4));
    }

    #[test]
    fn propagator_rejects_non_finite_time() {
        let sys = LinearQuantumSystem::raw(one_mode(), DMatrix::zeros(2, 2)).unwrap();
        assert!(propagator(&sys, f64::NAN).is_err());
        assert!(propagator(&sys, f64::INFINITY).is_err());
    }

    #[test]
    fn ccr_defect_of_pure_decay() {
        // e^{It} Θ e^{It} = e^{2t} Θ, so the defect is e² − 1 at t = 1.
        let sys = LinearQuantumSystem::raw(one_mode(), DMatrix::identity(2, 2)).unwrap();
        let d = ccr_defect(&sys, 1.0).unwrap();
        assert!((d - (std::f64::consts::E.powi(2) - 1.0)).abs() < 1e-12);
    }

    fn symmetric_matrix(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
        proptest::collection::vec(-3.0f64..3.0, n * n).prop_map(move |v| {
            let m = DMatrix::from_vec(n, n, v);
            (&m + m.transpose()) * 0.5
        })
    }

    // Positive-definite R keeps every mode a bounded oscillator.
    fn positive_definite(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
        proptest::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| {
            let b = DMatrix::from_vec(n, n, v);
            b.transpose() * &b + DMatrix::identity(n, n) * 0.1
        })
    }

    proptest! {
        #[test]
        fn hamiltonian_generators_are_realizable(r in symmetric_matrix(4)) {
            let space = make_symplectic_space(2).unwrap();
            let sys = generator_from_hamiltonian(&QuadraticHamiltonian::new(space, r).unwrap());
            prop_assert!(realizability_defect(&sys) <= 1e-12);
        }

        #[test]
        fn ccr_preserved_on_log_grid(r in positive_definite(4), k in 0usize..6) {
            let space = make_symplectic_space(2).unwrap();
            let sys = generator_from_hamiltonian(&QuadraticHamiltonian::new(space, r).unwrap());
            let t = 10f64.powi(k as i32 - 3);
            prop_assert_eq!(ccr_defect(&sys, 0.0).unwrap(), 0.0);
            prop_assert!(ccr_defect(&sys, t).unwrap() <= 1e-9);
        }

        #[test]
        fn propagator_semigroup(r in positive_definite(4), s in 0.0f64..3.0, t in 0.0f64..3.0) {
            let space = make_symplectic_space(2).unwrap();
            let sys = generator_from_hamiltonian(&QuadraticHamiltonian::new(space, r).unwrap());
            let lhs = propagator(&sys, s + t).unwrap();
            let rhs = propagator(&sys, s).unwrap() * propagator(&sys, t).unwrap();
            prop_assert!(max_abs(&(lhs - rhs)) <= 1e-10);
        }
    }
}
