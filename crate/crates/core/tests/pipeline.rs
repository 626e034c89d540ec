use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use qobserver_core::linear::max_abs;
use qobserver_core::nalgebra::RowVector2;
use qobserver_core::ndpa::abstract_hamiltonian;
use qobserver_core::{
    augment, ccr_defect, default_horizons, design_ndpa, realizability_defect, validate_observer,
    verify_observer_claims, PlantSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn random_designs_are_consistent_end_to_end() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..40 {
        let arg = rng.random_range(-PI..PI);
        let c_p = RowVector2::new(arg.cos(), arg.sin()) * rng.random_range(0.2..3.0);
        let omega = 10f64.powf(rng.random_range(-1.0..1.0));
        let gamma = 10f64.powf(rng.random_range(-1.0..1.0));
        let ratio = rng.random_range(0.01..0.6);
        let delta = [FRAC_PI_4, FRAC_PI_2, 3.0 * FRAC_PI_4][rng.random_range(0..3)];
        let out = design_ndpa(c_p, omega, gamma, ratio, Some(delta)).unwrap();

        let abs_r = abstract_hamiltonian(&c_p, &out.observer.beta, omega);
        assert!(max_abs(&(out.ndpa.r - abs_r)) <= 1e-9);
        assert!(validate_observer(&out.observer, 1e-12).passed());

        let plant = PlantSpec::new(c_p).unwrap();
        let sys = augment(&plant, &out.observer).unwrap();
        assert!(realizability_defect(&sys) <= 1e-12 * max_abs(sys.a()).max(1.0));
        assert!(ccr_defect(&sys, 7.5).unwrap() <= 1e-9);
    }
}

#[test]
fn example_design_verifies_after_nondimensionalization() {
    let out = design_ndpa(RowVector2::new(1.0, 0.0), 1e8, 1e8, 0.1, None).unwrap();
    let nd = out.observer.nondimensionalize(1e8);
    let report = verify_observer_claims(&nd, &default_horizons(nd.omega_o)).unwrap();
    assert!(report.passed());
    assert!((report.limit_gain - 1.0).abs() <= 1e-12);
}
