use proptest::prelude::*;

use nlc_core::diagnostics::pi_lambda;
use nlc_core::spectral::{divergence, leray_project};
use nlc_core::state::random_unit_director;
use nlc_core::{fit_rate, Grid, PressureLaw, ScalarField, VectorField};

fn mode_field(grid: &Grid, coef: &[f64], shift: f64) -> VectorField {
    VectorField::from_fn(grid, 2, |x, i| {
        coef.iter()
            .enumerate()
            .map(|(k, c)| {
                let k = k as f64 + 1.0;
                c * (k * x[i] + shift * k * x[1 - i]).sin() + 0.5 * c * (k * x[1 - i] - shift).cos()
            })
            .sum()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn relative_entropy_is_nonnegative(
        gamma in 1.05f64..3.0,
        amp in 0.0f64..0.9,
        k in 1usize..4,
        lambda in 1.0f64..200.0,
    ) {
        let g = Grid::uniform(2, 16).unwrap();
        let rho = ScalarField::from_fn(&g, |x| 1.0 + amp * (k as f64 * x[0]).sin() * x[1].cos());
        let pi = pi_lambda(&rho, PressureLaw { gamma }, lambda);
        prop_assert!(pi >= -1e-12 * lambda * lambda);
    }

    #[test]
    fn leray_projection_is_idempotent_and_solenoidal(
        coef in prop::collection::vec(-1.0f64..1.0, 1..5),
        shift in -1.0f64..1.0,
    ) {
        let g = Grid::uniform(2, 32).unwrap();
        let v = mode_field(&g, &coef, shift);
        let p = leray_project(&v).unwrap();
        let pp = leray_project(&p).unwrap();
        let scale = 1.0 + v.max_abs();
        prop_assert!(pp.sub(&p).max_abs() <= 1e-12 * scale);
        prop_assert!(divergence(&p).unwrap().max_abs() <= 1e-11 * scale);
    }

    #[test]
    fn random_directors_are_unit(seed in 0u64..1000, amp in 0.0f64..1.0) {
        let g = Grid::uniform(2, 16).unwrap();
        let n = random_unit_director(&g, seed, amp);
        prop_assert!(n.unit_defect() < 1e-13);
    }

    #[test]
    fn power_laws_fit_exactly(slope in -5.0f64..1.0, c in 0.01f64..100.0) {
        let pts: Vec<(f64, f64)> = [10.0, 20.0, 40.0, 80.0]
            .iter()
            .map(|&l: &f64| (l, c * l.powf(slope)))
            .collect();
        let (s, err) = fit_rate(&pts).unwrap();
        prop_assert!((s - slope).abs() < 1e-10);
        prop_assert!(err < 1e-8);
    }
}
