use fracks::analysis::{corrected_moment_with, first_moment, PhiProfile};
use fracks::integrator::{step, Frame, SimState};
use fracks::operators::FractionalExponent;
use fracks::spectral::{make_grid, synthesize_initial, Field, InitialFamily};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = InitialFamily> {
    prop_oneof![
        Just(InitialFamily::Gaussian),
        Just(InitialFamily::TwoBump),
        Just(InitialFamily::Cauchy),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stepping_conserves_mass(
        fam in family(),
        mass in 0.1f64..20.0,
        scale in 0.5f64..2.0,
        alpha in 0.2f64..=2.0,
        chi in 0.0f64..2.0,
    ) {
        let g = make_grid(256, 30.0).unwrap();
        let rho = synthesize_initial(fam, mass, scale, 0.0, &g).unwrap();
        let m0 = rho.mass();
        let mut st = SimState::new(
            Frame::Physical, 0.0, rho, FractionalExponent::new(alpha).unwrap(), chi,
        ).unwrap();
        for _ in 0..50 {
            st = step(&st, 1e-4).unwrap();
        }
        prop_assert!((st.field().mass() - m0).abs() <= 1e-12 * m0);
    }

    #[test]
    fn rescaled_stepping_conserves_mass(mass in 0.1f64..5.0, scale in 0.5f64..2.0, chi in 0.0f64..1.0) {
        let g = make_grid(256, 30.0).unwrap();
        let rho = synthesize_initial(InitialFamily::Gaussian, mass, scale, 0.0, &g).unwrap();
        let mut st = SimState::new(
            Frame::Rescaled, 0.0, rho, FractionalExponent::new(1.0).unwrap(), chi,
        ).unwrap();
        for _ in 0..50 {
            st = step(&st, 1e-4).unwrap();
        }
        prop_assert!((st.field().mass() - mass).abs() <= 1e-12 * mass);
    }

    #[test]
    fn corrected_moment_is_dominated_by_first_moment(
        beta in 0.3f64..0.95,
        lambda in 1e-3f64..10.0,
        values in proptest::collection::vec(0.0f64..5.0, 64),
    ) {
        let g = make_grid(64, 8.0).unwrap();
        let rho = Field::new(g, values).unwrap();
        let phi = PhiProfile::new(beta).unwrap();
        let i = corrected_moment_with(&rho, &phi, lambda).unwrap();
        prop_assert!(i <= first_moment(&rho) * (1.0 + 1e-14) + 1e-300);
        prop_assert!(i >= 0.0);
    }

    #[test]
    fn scaled_test_function_is_sublinear(beta in 0.05f64..0.99, lambda in 1e-4f64..1e3, x in -1e4f64..1e4) {
        let phi = PhiProfile::new(beta).unwrap();
        let v = phi.scaled(x, lambda);
        prop_assert!(v <= x.abs() * (1.0 + 1e-14));
        prop_assert_eq!(v, phi.scaled(-x, lambda));
    }
}
