mod common;

use std::f64::consts::PI;

use frontier_core::eigen::*;
use frontier_core::grid::RadialGrid;
use frontier_core::habitat::{CoefficientProfile, Habitat};
use proptest::prelude::*;

/// First zero of the Bessel function J₀.
const J0_ZERO: f64 = 2.404_825_557_695_773;

#[test]
fn disc_r0_matches_bessel_formula() {
    let h = Habitat::constant(2.0, 1.0, 1.0, 2).unwrap();
    for (d, r) in [(0.5, 1.0), (1.0, 2.0), (2.0, 3.0)] {
        let lambda = (J0_ZERO / r).powi(2);
        let exact = 2.0 / (lambda * d + 1.0);
        let got = compute_r0(&h, d, &RadialGrid::new(r, 2000).unwrap()).unwrap();
        assert!((got - exact).abs() < 5e-6, "D = {d}, R = {r}: {got} vs {exact}");
    }
}

#[test]
fn disc_critical_radius() {
    let h = Habitat::constant(2.0, 1.0, 1.0, 2).unwrap();
    let res = find_hstar(&h, 1.0, &GridPolicy::new(2000, 1.0), 1e-8).unwrap();
    assert!((res.value / J0_ZERO - 1.0).abs() < 1e-5);
}

#[test]
fn variational_dstar_agrees_on_heterogeneous_habitat() {
    let b = CoefficientProfile::Tanh {
        center: 1.0,
        width: 0.3,
        left: 2.5,
        right: 0.6,
    };
    let h = Habitat::new(b, CoefficientProfile::Constant(1.0), CoefficientProfile::Constant(1.0), 3, 0.6, 2.5)
        .unwrap();
    let grid = RadialGrid::new(2.0, 800).unwrap();
    let bisected = find_dstar(&h, 2.0, &grid, 1e-9).unwrap();
    let variational = dstar_variational(&h, &grid).unwrap();
    assert_eq!(bisected.status, ThresholdStatus::Finite);
    assert!((bisected.value / variational - 1.0).abs() < 1e-4);
    let (lo, hi) = bisected.bracket;
    assert!(compute_r0(&h, lo, &grid).unwrap() >= 1.0);
    assert!(compute_r0(&h, hi, &grid).unwrap() < 1.0);
}

#[test]
fn front_threshold_at_initial_radius_is_ball_threshold() {
    let h = Habitat::constant(2.0, 1.0, 1.0, 1).unwrap();
    let policy = GridPolicy::new(400, 1.0);
    let a = r0_front(&h, 1.0, 1.0, &policy).unwrap();
    let b = compute_r0(&h, 1.0, &RadialGrid::new(1.0, 400).unwrap()).unwrap();
    assert_eq!(a, b);
    let at_hstar = r0_front(&h, 1.0, PI / 2.0, &policy).unwrap();
    assert!((at_hstar - 1.0).abs() < 1e-5);
}

#[test]
fn unfavorable_habitat_has_infinite_hstar() {
    let h = Habitat::constant(1.0, 2.0, 1.0, 1).unwrap();
    let res = find_hstar(&h, 1.0, &GridPolicy::new(200, 1.0), 1e-6).unwrap();
    assert_eq!(res.status, ThresholdStatus::NoFavorableSite);
    assert!(res.value.is_infinite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn r0_and_lambda_star_agree_in_sign(seed in any::<u64>(), d in 0.05f64..5.0, r in 0.3f64..4.0) {
        let h = common::random_habitat(&mut common::rng(seed));
        let grid = RadialGrid::new(r, 400).unwrap();
        let res = solve(&h, d, &grid).unwrap();
        if (1.0 - res.r0).abs() > 1e-6 && res.lambda_star.abs() > 1e-6 {
            prop_assert_eq!(res.r0 < 1.0, res.lambda_star > 0.0);
        }
        prop_assert!(res.psi[..400].iter().all(|&p| p > 0.0));
        prop_assert_eq!(res.psi[400], 0.0);
    }

    #[test]
    fn r0_monotone_in_diffusion_and_radius(seed in any::<u64>(), d in 0.2f64..2.0, r in 0.3f64..1.5) {
        let h = common::random_habitat(&mut common::rng(seed));
        // radii on one fixed spacing, so each discrete ball contains the last
        let spacing = r / 200.0;
        let at = |d: f64, cells: usize| {
            compute_r0(&h, d, &RadialGrid::new(spacing * cells as f64, cells).unwrap()).unwrap()
        };
        let ds: Vec<f64> = (0..5).map(|i| at(d * 1.5f64.powi(i), 200)).collect();
        prop_assert!(ds.windows(2).all(|w| w[1] < w[0]), "{:?}", ds);
        let rs: Vec<f64> = (0..5).map(|i| at(d, 200 + 50 * i)).collect();
        prop_assert!(rs.windows(2).all(|w| w[1] > w[0]), "{:?}", rs);
    }

    #[test]
    fn front_threshold_grows_with_radius(r1 in 0.3f64..3.0, gap in 0.05f64..2.0) {
        let h = Habitat::constant(2.0, 1.0, 1.0, 1).unwrap();
        let policy = GridPolicy::new(200, 1.0);
        prop_assert!(r0_front(&h, 1.0, r1 + gap, &policy).unwrap() > r0_front(&h, 1.0, r1, &policy).unwrap());
    }
}
