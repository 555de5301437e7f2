mod common;

use fracks::analysis::{
    build_test_function, default_beta, BlowupCriterion, MomentProbe,
};
use fracks::inequality::verify_lp_decay;
use fracks::integrator::{advance, Frame, ObservationPlan, Outcome, SimState, StepControl};
use fracks::operators::FractionalExponent;
use fracks::runner::{preset, reference_gns, run};
use fracks::spectral::{make_grid, synthesize_initial, InitialFamily};

#[test]
fn subcritical_run_satisfies_the_l2_decay_inequality() {
    let c11 = reference_gns(1.0, 1.0, 1).unwrap().c_hat;
    let c21 = reference_gns(2.0, 1.0, 1).unwrap().c_hat;
    let g = make_grid(1024, 40.0).unwrap();
    let rho = synthesize_initial(InitialFamily::Gaussian, 0.5 * 4.0 / c11, 1.0, 0.0, &g).unwrap();
    let st = SimState::new(Frame::Physical, 0.0, rho, FractionalExponent::new(1.0).unwrap(), 1.0)
        .unwrap();
    let traj = advance(&st, 2.0, &StepControl::default(), &ObservationPlan::new(0.05)).unwrap();
    assert_eq!(traj.outcome, Outcome::Completed);
    assert_eq!(traj.snapshots.len(), 41);
    let report = verify_lp_decay(&traj.snapshots, 2.0, 1.0, c21).unwrap();
    assert_eq!(report.violations(), 0, "{:?}", report.checks);
    for w in traj.diagnostics.windows(2) {
        assert!(w[1].l2 <= w[0].l2 + 1e-10);
        assert!(w[1].l_inv_alpha <= w[0].l_inv_alpha + 1e-10);
    }
}

#[test]
fn supercritical_run_obeys_the_moment_inequality() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = preset("supercritical-alpha05", dir.path()).unwrap();
    let report = run(&cfg).unwrap();
    assert_eq!(report.outcome(), Outcome::BlowupDetected);

    let t = &cfg.test_function;
    let tf = build_test_function(0.5, default_beta(0.5), &make_grid(t.n, t.half_width).unwrap())
        .unwrap();
    let m = cfg.initial.mass;
    let crit = BlowupCriterion::new(&tf, m).unwrap();
    let rows = common::diagnostics(dir.path());
    assert!(rows[0].i_lambda <= rows[0].first_moment);
    for w in rows.windows(2) {
        let slope = (w[1].i_lambda - w[0].i_lambda) / (w[1].time - w[0].time);
        let bound = -m * m / 8.0 + crit.growth * w[0].i_lambda;
        assert!(slope < 0.0, "I_lambda must decrease: {slope} at t = {}", w[0].time);
        assert!(slope <= bound, "slope {slope} above {bound} at t = {}", w[0].time);
    }
}

#[test]
fn pure_diffusion_is_never_detected() {
    let g = make_grid(512, 20.0).unwrap();
    let rho = synthesize_initial(InitialFamily::Gaussian, 50.0, 0.3, 0.0, &g).unwrap();
    let alpha = FractionalExponent::new(0.5).unwrap();
    let st = SimState::new(Frame::Physical, 0.0, rho, alpha, 0.0).unwrap();
    let tf = build_test_function(0.5, 0.75, &make_grid(1024, 100.0).unwrap()).unwrap();
    let mut plan = ObservationPlan::new(0.05);
    plan.probe = Some(MomentProbe {
        profile: tf.profile().clone(),
        lambda: 0.1,
    });
    let traj = advance(&st, 1.0, &StepControl::default(), &plan).unwrap();
    assert_eq!(traj.outcome, Outcome::Completed);
    for w in traj.diagnostics.windows(2) {
        assert!(w[1].l_inf <= w[0].l_inf * (1.0 + 1e-12));
    }
}

#[test]
fn subcritical_alpha1_is_not_detected() {
    let c11 = reference_gns(1.0, 1.0, 1).unwrap().c_hat;
    let g = make_grid(512, 40.0).unwrap();
    let rho = synthesize_initial(InitialFamily::Gaussian, 0.9 * 4.0 / c11, 0.5, 0.0, &g).unwrap();
    let st = SimState::new(Frame::Physical, 0.0, rho, FractionalExponent::new(1.0).unwrap(), 1.0)
        .unwrap();
    let mut plan = ObservationPlan::new(0.5);
    plan.keep_snapshots = false;
    let traj = advance(&st, 5.0, &StepControl::default(), &plan).unwrap();
    assert_eq!(traj.outcome, Outcome::Completed);
}
