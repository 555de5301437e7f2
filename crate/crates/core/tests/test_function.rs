use fracks::analysis::{build_test_function, default_beta};
use fracks::spectral::make_grid;

#[test]
fn omega_bound_is_stable_under_grid_doubling() {
    for alpha in [0.5, 0.75] {
        let beta = default_beta(alpha);
        let coarse = build_test_function(alpha, beta, &make_grid(1024, 100.0).unwrap()).unwrap();
        let fine = build_test_function(alpha, beta, &make_grid(2048, 200.0).unwrap()).unwrap();
        let rel = (fine.c_omega - coarse.c_omega).abs() / coarse.c_omega;
        assert!(rel < 0.05, "alpha {alpha}: {} vs {}", coarse.c_omega, fine.c_omega);
        assert!(coarse.omega_at_origin() > 0.0);
        assert!(coarse.c_omega < 2.0 * coarse.omega_at_origin());
    }
}

#[test]
fn frozen_constants_at_half() {
    let tf = build_test_function(0.5, 0.75, &make_grid(1024, 100.0).unwrap()).unwrap();
    assert!((tf.c_omega - 2.39686).abs() < 1e-4, "{}", tf.c_omega);
    assert!((tf.profile().kappa() - 1.42032).abs() < 1e-4);
    assert!((tf.profile().c_r() - 0.775262).abs() < 1e-5);
    for i in 0..tf.phi.len() {
        assert_eq!(tf.phi[i], tf.profile().value(tf.grid.x(i)));
    }
}
