//! Numerical checks of the observer's two properties on the augmented system:
//! the plant output `z_p` stays constant, and the time average of
//! `z_p − z_o(t)` decays to zero.
//!
//! Everything is evaluated at the coefficient level. The Heisenberg-picture
//! output `z(t) = C e^{At} x(0)` is represented by its row `C e^{At}`, so no
//! initial state is needed.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, RowDVector};
use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{CoreError, Result};
use crate::linear::{max_abs, propagator, LinearQuantumSystem};
use crate::observer::{augment, ObserverDesign, PlantSpec, OBSERVER_ROW, PLANT_ROW};

/// Sampled output rows `C e^{At}` and, when an initial mean is given,
/// `C e^{At} x̄(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub coefficient_rows: Vec<RowDVector<f64>>,
    pub mean_values: Option<Vec<f64>>,
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty()
        || t_grid.iter().any(|t| !t.is_finite())
        || t_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(CoreError::BadTimeGrid);
    }
    Ok(())
}

fn check_row(sys: &LinearQuantumSystem, row: &RowDVector<f64>) -> Result<()> {
    if row.len() != sys.dim() {
        return Err(CoreError::Dimension(format!(
            "output row has {} entries, system has dimension {}",
            row.len(),
            sys.dim()
        )));
    }
    Ok(())
}

fn rows_at(
    sys: &LinearQuantumSystem,
    row: &RowDVector<f64>,
    times: &[f64],
) -> Result<Vec<RowDVector<f64>>> {
    times
        .par_iter()
        .map(|&t| propagator(sys, t).map(|p| row * p))
        .collect()
}

pub fn coefficient_trajectory(
    sys: &LinearQuantumSystem,
    c_row: &RowDVector<f64>,
    t_grid: &[f64],
) -> Result<Trajectory> {
    check_grid(t_grid)?;
    check_row(sys, c_row)?;
    Ok(Trajectory {
        times: t_grid.to_vec(),
        coefficient_rows: rows_at(sys, c_row, t_grid)?,
        mean_values: None,
    })
}

/// One trajectory per output row of `sys`, each carrying `C_i e^{At} x̄(0)`.
pub fn simulate_means(
    sys: &LinearQuantumSystem,
    x0_means: &DVector<f64>,
    t_grid: &[f64],
) -> Result<Vec<Trajectory>> {
    if x0_means.len() != sys.dim() {
        return Err(CoreError::Dimension(format!(
            "initial mean has {} entries, system has dimension {}",
            x0_means.len(),
            sys.dim()
        )));
    }
    check_grid(t_grid)?;
    let props: Vec<DMatrix<f64>> = t_grid
        .par_iter()
        .map(|&t| propagator(sys, t))
        .collect::<Result<_>>()?;
    Ok(sys
        .c()
        .row_iter()
        .map(|r| {
            let rows: Vec<RowDVector<f64>> = props.iter().map(|p| r * p).collect();
            let means = rows.iter().map(|row| (row * x0_means)[(0, 0)]).collect();
            Trajectory {
                times: t_grid.to_vec(),
                coefficient_rows: rows,
                mean_values: Some(means),
            }
        })
        .collect())
}

/// Cumulative-trapezoid running average `(1/t)∫₀ᵗ row(s) ds` on the
/// trajectory's grid. The grid must start at 0; the first entry is the row
/// itself.
pub fn running_average(traj: &Trajectory) -> Vec<RowDVector<f64>> {
    let mut out = Vec::with_capacity(traj.times.len());
    let Some(first) = traj.coefficient_rows.first() else {
        return out;
    };
    let mut integral = RowDVector::zeros(first.len());
    out.push(first.clone());
    for k in 1..traj.times.len() {
        let h = traj.times[k] - traj.times[k - 1];
        integral += (&traj.coefficient_rows[k] + &traj.coefficient_rows[k - 1]) * (0.5 * h);
        out.push(&integral / (traj.times[k] - traj.times[0]));
    }
    out
}

/// Composite Simpson rule with a panel density tied to a known period, plus
/// step halving.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureRule {
    pub period: f64,
    pub panels_per_period: usize,
    /// Number of panel doublings allowed when the halving estimate is not
    /// below the integral.
    pub max_refinements: usize,
}

impl QuadratureRule {
    /// 200 panels per observer period `π/(2ω_o)`.
    pub fn for_observer(omega_o: f64) -> Self {
        QuadratureRule {
            period: PI / (2.0 * omega_o),
            panels_per_period: 200,
            max_refinements: 4,
        }
    }

    fn panels(&self, horizon: f64) -> usize {
        let n = (horizon / self.period * self.panels_per_period as f64).ceil() as usize;
        (n.max(2) + 1) & !1
    }
}

fn simpson(values: &[RowDVector<f64>], stride: usize, h: f64) -> RowDVector<f64> {
    let n = (values.len() - 1) / stride;
    let mut acc = &values[0] + &values[n * stride];
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += &values[k * stride] * w;
    }
    acc * (h * stride as f64 / 3.0)
}

/// Result of [`time_average`].
#[derive(Debug, Clone, PartialEq)]
pub struct TimeAverage {
    pub horizon: f64,
    /// `(1/T)∫₀ᵀ (c_p − c_o e^{As}) ds`.
    pub averaged_row: RowDVector<f64>,
    /// Max-abs norm of `averaged_row`.
    pub error: f64,
    /// Richardson estimate `‖S_h − S_2h‖/15` of the quadrature error.
    pub quadrature_estimate: f64,
    pub panels: usize,
}

/// Below this, a time average is treated as exactly zero for the purposes of
/// the step-halving check.
const QUADRATURE_FLOOR: f64 = 1e-13;

pub fn time_average(
    sys: &LinearQuantumSystem,
    c_p_row: &RowDVector<f64>,
    c_o_row: &RowDVector<f64>,
    horizon: f64,
    rule: &QuadratureRule,
) -> Result<TimeAverage> {
    if !horizon.is_finite() {
        return Err(CoreError::NonFinite("horizon"));
    }
    if horizon <= 0.0 {
        return Err(CoreError::NonPositiveHorizon(horizon));
    }
    check_row(sys, c_p_row)?;
    check_row(sys, c_o_row)?;

    let mut panels = rule.panels(horizon);
    let mut last = None;
    for _ in 0..=rule.max_refinements {
        // Coarse rule uses every other node of the fine one.
        let fine = 2 * panels;
        let h = horizon / fine as f64;
        let times: Vec<f64> = (0..=fine).map(|k| k as f64 * h).collect();
        let integrand: Vec<RowDVector<f64>> = rows_at(sys, c_o_row, &times)?
            .into_iter()
            .map(|r| c_p_row - r)
            .collect();
        let coarse = simpson(&integrand, 2, h) / horizon;
        let averaged_row = simpson(&integrand, 1, h) / horizon;
        let error = max_abs(&averaged_row);
        let quadrature_estimate = max_abs(&(&averaged_row - coarse)) / 15.0;
        let result = TimeAverage {
            horizon,
            averaged_row,
            error,
            quadrature_estimate,
            panels: fine,
        };
        if quadrature_estimate < 0.5 * error || quadrature_estimate < QUADRATURE_FLOOR {
            return Ok(result);
        }
        last = Some(result);
        panels = fine;
    }
    let last = last.expect("at least one pass");
    Err(CoreError::QuadratureUnresolved {
        value: last.error,
        estimate: last.quadrature_estimate,
    })
}

/// `‖(1/T)∫₀ᵀ (c_p − c_o e^{As}) ds‖` in the max-abs norm.
pub fn time_average_error(
    sys: &LinearQuantumSystem,
    c_p_row: &RowDVector<f64>,
    c_o_row: &RowDVector<f64>,
    horizon: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    time_average(sys, c_p_row, c_o_row, horizon, rule).map(|a| a.error)
}

/// Horizons `{5, 10, 20, 40, 80} / ω_o`.
pub fn default_horizons(omega_o: f64) -> Vec<f64> {
    [5.0, 10.0, 20.0, 40.0, 80.0]
        .iter()
        .map(|t| t / omega_o)
        .collect()
}

/// Least-squares slope `p` of `log(error) = c − p·log(T)`.
pub fn fit_decay_rate(horizons: &[f64], errors: &[f64]) -> f64 {
    let n = horizons.len() as f64;
    let xs: Vec<f64> = horizons.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = errors
        .iter()
        .map(|e| e.max(f64::MIN_POSITIVE).ln())
        .collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    -sxy / sxx
}

const FFT_PERIODS: usize = 16;
const FFT_SAMPLES_PER_PERIOD: usize = 64;

/// Dominant angular frequency of `row · e^{At}`.
///
/// Samples over [`FFT_PERIODS`] periods of `expected`, removes the mean of the
/// most variable component, and locates the peak of its discrete Fourier
/// magnitude with parabolic refinement between bins.
pub fn estimate_frequency(
    sys: &LinearQuantumSystem,
    row: &RowDVector<f64>,
    expected: f64,
) -> Result<f64> {
    check_row(sys, row)?;
    if !(expected > 0.0) || !expected.is_finite() {
        return Err(CoreError::NonPositiveFrequency(expected));
    }
    let n = FFT_PERIODS * FFT_SAMPLES_PER_PERIOD;
    let dt = 2.0 * PI / expected / FFT_SAMPLES_PER_PERIOD as f64;
    let times: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    let rows = rows_at(sys, row, &times)?;

    let series = (0..sys.dim())
        .map(|j| {
            let xs: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let centered: Vec<f64> = xs.into_iter().map(|x| x - mean).collect();
            let var = centered.iter().map(|x| x * x).sum::<f64>();
            (var, centered)
        })
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, s)| s)
        .unwrap_or_default();

    let mut buf: Vec<Complex<f64>> = series.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mags: Vec<f64> = buf[..=n / 2].iter().map(|z| z.norm()).collect();
    let peak = (1..mags.len())
        .max_by(|&a, &b| mags[a].total_cmp(&mags[b]))
        .unwrap_or(1);
    let offset = if peak + 1 < mags.len() {
        let (l, c, r) = (mags[peak - 1], mags[peak], mags[peak + 1]);
        let denom = l - 2.0 * c + r;
        if denom.abs() > 0.0 {
            0.5 * (l - r) / denom
        } else {
            0.0
        }
    } else {
        0.0
    };
    Ok((peak as f64 + offset) * 2.0 * PI / (n as f64 * dt))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObserverClaim {
    /// `C_p,aug · A_aug = 0`, so `z_p(t)` is constant.
    PlantOutputConstant,
    /// The time-averaged error decreases over the horizon ladder with a
    /// fitted rate of at least [`MIN_DECAY_RATE`].
    TimeAveragedConvergence,
    /// Observer rows oscillate at `2√det R_o` (`4ω_o` when `R_o = 2ω_o I`).
    ObserverOscillation,
}

impl ObserverClaim {
    pub fn name(self) -> &'static str {
        match self {
            ObserverClaim::PlantOutputConstant => "plant output constant",
            ObserverClaim::TimeAveragedConvergence => "time-averaged convergence",
            ObserverClaim::ObserverOscillation => "observer oscillation frequency",
        }
    }
}

pub const MIN_DECAY_RATE: f64 = 0.9;
pub const FREQUENCY_TOLERANCE: f64 = 0.01;
pub const PLANT_ROW_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub horizons: Vec<f64>,
    pub errors: Vec<f64>,
    pub quadrature_estimates: Vec<f64>,
    /// `errors[k+1] / errors[k]`.
    pub successive_ratios: Vec<f64>,
    pub strictly_decreasing: bool,
    /// Exponent `p` of `error ∝ T^{−p}`. Derived by this toolkit; theory only
    /// asserts that the limit is zero.
    pub fitted_rate: f64,
    /// `‖C_p,aug · A_aug‖`.
    pub plant_row_defect: f64,
    /// `−C_o R_o⁻¹ βᵀ`; the time-averaged observer output per unit `z_p`.
    pub limit_gain: f64,
    pub oscillation_frequency_estimate: f64,
    pub expected_frequency: f64,
    pub violations: Vec<ObserverClaim>,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerificationError {
    #[error(transparent)]
    Input(#[from] CoreError),
    #[error("violated: {}", .claims.iter().map(|c| c.name()).collect::<Vec<_>>().join(", "))]
    ClaimsViolated {
        claims: Vec<ObserverClaim>,
        report: Box<ConvergenceReport>,
    },
}

/// Checks the plant–observer system built from `design` against both
/// observer properties and the expected oscillation frequency. Horizons are
/// in the design's time unit.
pub fn verify_observer_claims(
    design: &ObserverDesign,
    horizons: &[f64],
) -> Result<ConvergenceReport, VerificationError> {
    if horizons.is_empty()
        || horizons.iter().any(|t| !(*t > 0.0) || !t.is_finite())
        || horizons.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(CoreError::BadTimeGrid.into());
    }
    let plant = PlantSpec::new(design.c_p)?;
    let sys = augment(&plant, design)?;
    let c_p_row: RowDVector<f64> = sys.c().row(PLANT_ROW).into_owned();
    let c_o_row: RowDVector<f64> = sys.c().row(OBSERVER_ROW).into_owned();

    let plant_row_defect = max_abs(&(&c_p_row * sys.a()));
    let det = design.r_o.determinant();
    let expected_frequency = 2.0 * det.max(0.0).sqrt();
    let rule = QuadratureRule {
        period: 2.0 * PI / expected_frequency,
        ..QuadratureRule::for_observer(design.omega_o)
    };

    let averages: Vec<TimeAverage> = horizons
        .par_iter()
        .map(|&t| time_average(&sys, &c_p_row, &c_o_row, t, &rule))
        .collect::<Result<_>>()?;
    let errors: Vec<f64> = averages.iter().map(|a| a.error).collect();
    let quadrature_estimates = averages.iter().map(|a| a.quadrature_estimate).collect();
    let successive_ratios: Vec<f64> = errors.windows(2).map(|w| w[1] / w[0]).collect();
    let strictly_decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    let fitted_rate = if horizons.len() > 1 {
        fit_decay_rate(horizons, &errors)
    } else {
        f64::NAN
    };
    let oscillation_frequency_estimate = estimate_frequency(&sys, &c_o_row, expected_frequency)?;

    let mut violations = Vec::new();
    if !(plant_row_defect <= PLANT_ROW_TOLERANCE * max_abs(sys.a()).max(1.0)) {
        violations.push(ObserverClaim::PlantOutputConstant);
    }
    if !(strictly_decreasing && fitted_rate >= MIN_DECAY_RATE) {
        violations.push(ObserverClaim::TimeAveragedConvergence);
    }
    let rel = (oscillation_frequency_estimate - expected_frequency).abs() / expected_frequency;
    if !(rel <= FREQUENCY_TOLERANCE) {
        violations.push(ObserverClaim::ObserverOscillation);
    }

    let report = ConvergenceReport {
        horizons: horizons.to_vec(),
        errors,
        quadrature_estimates,
        successive_ratios,
        strictly_decreasing,
        fitted_rate,
        plant_row_defect,
        limit_gain: design.limit_gain().unwrap_or(f64::NAN),
        oscillation_frequency_estimate,
        expected_frequency,
        violations: violations.clone(),
    };
    if violations.is_empty() {
        Ok(report)
    } else {
        Err(VerificationError::ClaimsViolated {
            claims: violations,
            report: Box::new(report),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::make_symplectic_space;
    use crate::observer::synthesize_observer;
    use nalgebra::{Matrix2, RowVector2};

    fn example() -> (PlantSpec, ObserverDesign) {
        let p = PlantSpec::new(RowVector2::new(1.0, 0.0)).unwrap();
        let d = synthesize_observer(&p, 1.0, RowVector2::new(0.2, 0.0)).unwrap();
        (p, d)
    }

    fn rows(sys: &LinearQuantumSystem) -> (RowDVector<f64>, RowDVector<f64>) {
        (
            sys.c().row(PLANT_ROW).into_owned(),
            sys.c().row(OBSERVER_ROW).into_owned(),
        )
    }

    /// Closed-form time-averaged error row for `R_o = 2ω I`.
    ///
    /// With `K = 4ωJ`, `x_o(s) = e^{Ks} x_o(0) + (I − e^{Ks}) x_o*` and
    /// `x_o* = −R_o⁻¹βᵀC_p x_p(0)`; `∫₀ᵀ e^{Ks} ds = (e^{KT} − I) K⁻¹`.
    fn closed_form_row(d: &ObserverDesign, t: f64) -> Vec<f64> {
        let w = 4.0 * d.omega_o;
        let (s, c) = (w * t).sin_cos();
        let rot = Matrix2::new(c, s, -s, c);
        let k_inv = Matrix2::new(0.0, -1.0, 1.0, 0.0) / w;
        let avg_rot = (rot - Matrix2::identity()) * k_inv / t;
        let x_star = -(d.r_o.try_inverse().unwrap() * d.beta.transpose() * d.c_p);
        let from_o = d.c_o * avg_rot;
        let from_p = d.c_p - d.c_o * (Matrix2::identity() - avg_rot) * x_star;
        vec![from_p[0], from_p[1], -from_o[0], -from_o[1]]
    }

    #[test]
    fn plant_row_is_frozen() {
        let (p, d) = example();
        let sys = augment(&p, &d).unwrap();
        let (cp, _) = rows(&sys);
        let grid: Vec<f64> = (0..20).map(|k| k as f64 * 0.37).collect();
        let traj = coefficient_trajectory(&sys, &cp, &grid).unwrap();
        for r in &traj.coefficient_rows {
            assert!(max_abs(&(r - &cp)) <= 1e-12);
        }
    }

    #[test]
    fn static_system_rows_constant() {
        let sys = LinearQuantumSystem::raw(make_symplectic_space(2).unwrap(), DMatrix::zeros(4, 4))
            .unwrap();
        let row = RowDVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let traj = coefficient_trajectory(&sys, &row, &[0.0, 1.0, 10.0]).unwrap();
        assert!(traj.coefficient_rows.iter().all(|r| r == &row));
    }

    #[test]
    fn observer_row_period() {
        // 4ω_o oscillation: period π/(2ω_o).
        let (p, d) = example();
        let sys = augment(&p, &d).unwrap();
        let (_, co) = rows(&sys);
        let period = PI / 2.0;
        let traj =
            coefficient_trajectory(&sys, &co, &[0.3, 0.3 + period, 0.3 + 2.0 * period]).unwrap();
        let r = &traj.coefficient_rows;
        assert!(max_abs(&(&r[0] - &r[1])) <= 1e-10);
        assert!(max_abs(&(&r[0] - &r[2])) <= 1e-10);
        let half = coefficient_trajectory(&sys, &co, &[0.3, 0.3 + period / 2.0]).unwrap();
        assert!(max_abs(&(&half.coefficient_rows[0] - &half.coefficient_rows[1])) > 1.0);
    }

    #[test]
    fn bad_grids_rejected() {
        let (p, d) = example();
        let sys = augment(&p, &d).unwrap();
        let (cp, _) = rows(&sys);
        assert_eq!(
            coefficient_trajectory(&sys, &cp, &[]).unwrap_err(),
            CoreError::BadTimeGrid
        );
        assert!(coefficient_trajectory(&sys, &cp, &[1.0, 1.0]).is_err());
        assert!(coefficient_trajectory(&sys, &cp, &[2.0, 1.0]).is_err());
        assert!(coefficient_trajectory(&sys, &RowDVector::zeros(3), &[1.0]).is_err());
    }

    #[test]
    fn time_average_matches_closed_form() {
        let (p, d) = example();
        let sys = augment(&p, &d).unwrap();
        let (cp, co) = rows(&sys);
        let rule = QuadratureRule::for_observer(1.0);
        for &t in &[0.7, 5.0, 13.3, 80.0] {
            let avg = time_average(&sys, &cp, &co, t, &rule).unwrap();
            let expected = closed_form_row(&d, t);
            for (got, want) in avg.averaged_row.iter().zip(&expected) {
                assert!(
                    (got - want).abs() <= 1e-9 * want.abs().max(1.0),
                    "T={t}: {got} vs {want}"
                );
            }
            assert!(avg.quadrature_estimate < 0.5 * avg.error);
        }
    }

    #[test]
    fn time_average_decays_roughly_as_inverse_horizon() {
        let (p, d) = example();
        let sys = augment(&p, &d).unwrap();
        let (cp, co) = rows(&sys);
        let rule = QuadratureRule::for_observer(1.0);
        let e5 = time_average_error(&sys, &cp, &co, 5.0, &rule).unwrap();
        let e50 = time_average_error(&sys, &cp, &co, 50.0, &rule).unwrap();
        assert!(e50 <= 0.1 * e5, "{e50} vs {e5}");
    }

    #[test]
    fn decoupled_observer_never_converges() {
        let (p, d) = example();
        let decoupled = ObserverDesign {
            beta: RowVector2::zeros(),
            r_c: Matrix2::zeros(),
            ..d
        };
        let sys = augment(&p, &decoupled).unwrap();
        let (cp, co) = rows(&sys);
        let rule = QuadratureRule::for_observer(1.0);
        let errs: Vec<f64> = [5.0, 20.0, 80.0]
            .iter()
            .map(|&t| time_average_error(&sys, &cp, &co, t, &rule).unwrap())
            .collect();
        // The plant entry of the averaged row is stuck at C_p = 1.
        assert!(errs.iter().all(|e| (e - 1.0).abs() < 1e-9), "{errs:?}");
    }

    #[test]
    fn non_positive_horizon_rejected() {
        let (p, d) = example();
        let sys = augment(&p, &d).unwrap();
        let (cp, co) = rows(&sys);
        let rule = QuadratureRule::for_observer(1.0);
        assert_eq!(
            time_average_error(&sys, &cp, &co, 0.0, &rule).unwrap_err(),
            CoreError::NonPositiveHorizon(0.0)
        );
    }

    #[test]
    fn example_satisfies_both_claims() {
        let (_, d) = example();
        let report = verify_observer_claims(&d, &default_horizons(1.0)).unwrap();
        assert!(report.plant_row_defect <= 1e-12);
        assert!(report.strictly_decreasing);
        assert!(report.fitted_rate >= 0.9, "{}", report.fitted_rate);
        assert!((report.oscillation_frequency_estimate - 4.0).abs() <= 0.04);
        assert!((report.limit_gain - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn doubled_output_row_plateaus() {
        let (_, d) = example();
        let bad = d.with_c_o(d.c_o * 2.0);
        match verify_observer_claims(&bad, &default_horizons(1.0)) {
            Err(VerificationError::ClaimsViolated { claims, report }) => {
                assert_eq!(claims, vec![ObserverClaim::TimeAveragedConvergence]);
                assert!((report.limit_gain - 2.0).abs() <= 1e-12);
                // Averaged z_o → 2 z_p, so the error settles at ‖C_p,aug‖ = 1.
                assert!((report.errors[4] - 1.0).abs() < 0.05, "{:?}", report.errors);
            }
            other => panic!("expected a violation, got {other:?}"),
        }
    }

    #[test]
    fn frequency_tracks_observer_detuning() {
        let p = PlantSpec::new(RowVector2::new(1.0, 0.0)).unwrap();
        let d1 = synthesize_observer(&p, 1.0, RowVector2::new(0.2, 0.0)).unwrap();
        let d2 = synthesize_observer(&p, 2.0, RowVector2::new(0.2, 0.0)).unwrap();
        let f1 = verify_observer_claims(&d1, &default_horizons(1.0))
            .unwrap()
            .oscillation_frequency_estimate;
        let s2 = augment(&p, &d2).unwrap();
        // Window fixed by the first design, so the estimate is not told the answer.
        let f2 =
            estimate_frequency(&s2, &s2.c().row(OBSERVER_ROW).into_owned(), 4.0 * 1.05).unwrap();
        assert!((f1 - 4.0).abs() / 4.0 < 0.01);
        assert!((f2 - 8.0).abs() / 8.0 < 0.01, "{f2}");
    }

    #[test]
    fn means_follow_rows() {
        let (p, d) = example();
        let sys = augment(&p, &d).unwrap();
        let grid: Vec<f64> = (0..200).map(|k| k as f64 * 0.4).collect();
        let x0 = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let trajs = simulate_means(&sys, &x0, &grid).unwrap();
        let zp = trajs[PLANT_ROW].mean_values.as_ref().unwrap();
        assert!(zp.iter().all(|z| (z - 1.0).abs() < 1e-12));
        let zo = trajs[OBSERVER_ROW].mean_values.as_ref().unwrap();
        let avg = zo.iter().sum::<f64>() / zo.len() as f64;
        assert!((avg - 1.0).abs() < 0.05, "{avg}");
        for tr in &trajs {
            for (row, m) in tr
                .coefficient_rows
                .iter()
                .zip(tr.mean_values.as_ref().unwrap())
            {
                assert!(((row * &x0)[(0, 0)] - m).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn zero_mean_stays_zero() {
        let (p, d) = example();
        let sys = augment(&p, &d).unwrap();
        let trajs = simulate_means(&sys, &DVector::zeros(4), &[0.0, 1.0, 2.0]).unwrap();
        assert!(trajs
            .iter()
            .all(|t| t.mean_values.as_ref().unwrap().iter().all(|m| *m == 0.0)));
        assert!(simulate_means(&sys, &DVector::zeros(3), &[0.0]).is_err());
    }

    #[test]
    fn unobserved_quadrature_drifts_linearly() {
        let (p, d) = example();
        let sys = augment(&p, &d).unwrap();
        let x0 = DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]);
        let mut momentum = sys.clone();
        momentum = momentum
            .with_outputs(DMatrix::from_row_slice(
                2,
                4,
                &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            ))
            .unwrap();
        let grid: Vec<f64> = (0..=4).map(|k| k as f64 * PI / 2.0 * 10.0).collect();
        let trajs = simulate_means(&momentum, &x0, &grid).unwrap();
        assert!(trajs[0]
            .mean_values
            .as_ref()
            .unwrap()
            .iter()
            .all(|z| z.abs() < 1e-12));
        // x_o is never driven (z_p = 0), so p_p stays at 1 ...
        assert!(trajs[1]
            .mean_values
            .as_ref()
            .unwrap()
            .iter()
            .all(|z| (z - 1.0).abs() < 1e-12));
        // ... while with z_p = 1 the plant momentum picks up a secular term.
        let x1 = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let drift = simulate_means(&momentum, &x1, &grid).unwrap();
        let pm = drift[1].mean_values.as_ref().unwrap();
        let steps: Vec<f64> = pm.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(steps[0].abs() > 0.1);
        for s in &steps[1..] {
            assert!((s - steps[0]).abs() < 1e-9 * steps[0].abs().max(1.0));
        }
    }

    #[test]
    fn running_average_of_constant_row() {
        let traj = Trajectory {
            times: vec![0.0, 0.5, 1.5],
            coefficient_rows: vec![RowDVector::from_vec(vec![2.0, -1.0]); 3],
            mean_values: None,
        };
        let avg = running_average(&traj);
        assert!(avg
            .iter()
            .all(|r| (r[0] - 2.0).abs() < 1e-15 && (r[1] + 1.0).abs() < 1e-15));
    }

    #[test]
    fn rate_fit_recovers_power_law() {
        let hs = [1.0, 2.0, 4.0, 8.0];
        let es: Vec<f64> = hs.iter().map(|t: &f64| 3.0 * t.powf(-1.3)).collect();
        assert!((fit_decay_rate(&hs, &es) - 1.3).abs() < 1e-12);
    }
}
