//! Reference values of the worked example and the comparison used by
//! `reproduce-example`.

use qobserver_core::example;
use qobserver_core::linear::max_abs;
use qobserver_core::nalgebra::{Matrix2, RowVector2};
use qobserver_core::NdpaOutcome;

/// Exact value `2·atan(1/0.1)` in degrees.
pub const THETA_DEG: f64 = 168.578_813_725_000_74;
/// Tolerance against the rounded published angle.
pub const THETA_ROUNDED_TOLERANCE_DEG: f64 = 0.05;
/// Tolerance against `168.58`.
pub const THETA_TOLERANCE_DEG: f64 = 0.01;
pub const PHASE_TOLERANCE_DEG: f64 = 1e-12;
pub const EPSILON_RELATIVE_TOLERANCE: f64 = 1e-12;
pub const R_C_RELATIVE_TOLERANCE: f64 = 1e-12;
pub const OBSERVER_RELATIVE_TOLERANCE: f64 = 1e-9;
pub const LIMIT_GAIN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenCheck {
    pub name: &'static str,
    /// Absolute or relative deviation, as stated by `tolerance_kind`.
    pub deviation: f64,
    pub tolerance: f64,
    pub tolerance_kind: &'static str,
    pub passed: bool,
}

fn check(name: &'static str, deviation: f64, tolerance: f64, kind: &'static str) -> GoldenCheck {
    GoldenCheck {
        name,
        deviation,
        tolerance,
        tolerance_kind: kind,
        passed: deviation <= tolerance,
    }
}

fn relative<const N: usize>(got: &[f64; N], want: &[f64; N]) -> f64 {
    let scale = want.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    got.iter()
        .zip(want)
        .fold(0.0f64, |m, (g, w)| m.max((g - w).abs()))
        / scale
}

/// Compares an SI design of the example against the reference values.
pub fn compare(out: &NdpaOutcome) -> Vec<GoldenCheck> {
    let r = &out.report;
    let theta_deg = r.theta.to_degrees();
    let eps = out.ndpa.params.epsilon;
    let r_c: Matrix2<f64> = out.ndpa.r_c;
    let want_r_c = Matrix2::from_row_slice(&example::R_C);
    let beta: RowVector2<f64> = out.observer.beta;
    let c_o: RowVector2<f64> = out.observer.c_o;
    let limit_gain = out.observer.limit_gain().unwrap_or(f64::NAN);

    vec![
        check(
            "theta vs 168.6 deg",
            (theta_deg - example::THETA_DEG_ROUNDED).abs(),
            THETA_ROUNDED_TOLERANCE_DEG,
            "deg",
        ),
        check(
            "theta vs 168.58 deg",
            (theta_deg - 168.58).abs(),
            THETA_TOLERANCE_DEG,
            "deg",
        ),
        check(
            "theta vs 2 atan(10)",
            (theta_deg - THETA_DEG).abs(),
            1e-9,
            "deg",
        ),
        check(
            "psi",
            (r.psi.to_degrees() - example::PSI_DEG).abs(),
            PHASE_TOLERANCE_DEG,
            "deg",
        ),
        check(
            "phi",
            (r.phi.to_degrees() - example::PHI_DEG).abs(),
            PHASE_TOLERANCE_DEG,
            "deg",
        ),
        check(
            "epsilon",
            relative(&[eps.re, eps.im], &example::EPSILON),
            EPSILON_RELATIVE_TOLERANCE,
            "relative",
        ),
        check(
            "R_c",
            max_abs(&(r_c - want_r_c)) / max_abs(&want_r_c),
            R_C_RELATIVE_TOLERANCE,
            "relative",
        ),
        check(
            "beta",
            relative(&[beta[0], beta[1]], &example::BETA),
            OBSERVER_RELATIVE_TOLERANCE,
            "relative",
        ),
        check(
            "C_o",
            relative(&[c_o[0], c_o[1]], &example::C_O),
            OBSERVER_RELATIVE_TOLERANCE,
            "relative",
        ),
        check(
            "limit gain",
            (limit_gain - 1.0).abs(),
            LIMIT_GAIN_TOLERANCE,
            "absolute",
        ),
    ]
}
