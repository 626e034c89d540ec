//! Laboratory-scale reference design: position quadrature of the plant,
//! `γ = ω_o = 10⁸ rad/s` and `|ε|/γ = 0.1`.

use nalgebra::RowVector2;

pub const C_P: [f64; 2] = [1.0, 0.0];
/// rad/s
pub const GAMMA: f64 = 1e8;
/// rad/s
pub const OMEGA_O: f64 = 1e8;
pub const EPS_RATIO: f64 = 0.1;

/// Beamsplitter angle in degrees, as quoted to one decimal.
pub const THETA_DEG_ROUNDED: f64 = 168.6;
pub const PSI_DEG: f64 = -90.0;
pub const PHI_DEG: f64 = -90.0;
/// `ε = −i·10⁷` rad/s.
pub const EPSILON: [f64; 2] = [0.0, -1e7];
/// `R_c = [[2·10⁷, 0], [0, 0]]`, row major.
pub const R_C: [f64; 4] = [2e7, 0.0, 0.0, 0.0];
pub const BETA: [f64; 2] = [2e7, 0.0];
pub const C_O: [f64; 2] = [-10.0, 0.0];

pub fn c_p() -> RowVector2<f64> {
    RowVector2::new(C_P[0], C_P[1])
}
