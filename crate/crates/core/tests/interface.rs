use gcf_core::derive_exponents;
use gcf_core::graph::GraphState;
use gcf_core::grid::Grid2;
use gcf_core::interface::*;
use gcf_core::radial::{flat_disc_profile, RadialState};
use proptest::prelude::*;

#[test]
fn ellipse_flat_set_is_recovered() {
    let p = derive_exponents(1.0).unwrap();
    let (a, b) = (0.6, 0.4);
    let grid = Grid2::square(161, 1.2).unwrap();
    // (sqrt of the ellipse "radius" minus one)^2 vanishes exactly on the ellipse
    let s = GraphState::from_fn(grid, |x, y| {
        let q = ((x / a).powi(2) + (y / b).powi(2)).sqrt() - 1.0;
        q.max(0.0).powi(2)
    })
    .unwrap();
    let c = extract_level_graph(&s, &p, [0.0, 0.0], 0.0, 64).unwrap();
    assert!(c.is_convex(1e-3));
    for (th, g) in c.theta.iter().zip(&c.gamma) {
        let exact = 1.0 / ((th.cos() / a).powi(2) + (th.sin() / b).powi(2)).sqrt();
        assert!((g - exact).abs() < 0.02, "theta {th}: {g} vs {exact}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn radial_free_boundary_within_a_cell(rho in 0.2f64..1.2, alpha in 0.6f64..=1.0) {
        let p = derive_exponents(alpha).unwrap();
        let n = 401;
        let s = RadialState::uniform(n, 2.0, flat_disc_profile(rho, 1.0, p.beta)).unwrap();
        let c = extract_level_radial(&s, &p, 0.0, 4).unwrap();
        let h = 2.0 / (n - 1) as f64;
        prop_assert!((c.gamma[0] - rho).abs() <= h, "{} vs {rho}", c.gamma[0]);
    }

    #[test]
    fn exact_power_law_exponent(alpha in 0.6f64..=1.0) {
        let p = derive_exponents(alpha).unwrap();
        let s = RadialState::uniform(2001, 2.0, flat_disc_profile(0.5, 1.0, p.beta)).unwrap();
        for fit in fit_vanishing_exponent_radial(&s, &p, &[0.2, 0.1, 0.05]).unwrap() {
            prop_assert!((fit.beta_hat / p.beta - 1.0).abs() < 0.01);
        }
    }
}

#[test]
fn exponential_envelope_of_exact_decay() {
    let p = derive_exponents(1.0).unwrap();
    let times: Vec<f64> = (0..=10).map(|k| 0.01 * k as f64).collect();
    // a disc whose radius decays like exp(-3t)
    let series: Vec<InterfaceCurve> = times
        .iter()
        .map(|&t| {
            let rho = 0.8 * (-3.0 * t).exp();
            let mut c = extract_level_radial(
                &RadialState::uniform(4001, 2.0, flat_disc_profile(rho, 1.0, 2.0)).unwrap(),
                &p,
                0.0,
                8,
            )
            .unwrap();
            c.t = t;
            c
        })
        .collect();
    let band = fit_speed_band(&series, 1e-12).unwrap();
    assert!(band.pass && band.c2 / band.c1 < 1.5);
    let env = check_envelope(&series, 0.02, 0.05, 1e-12).unwrap();
    assert!(env.pass, "{env:?}");
    assert!((env.fitted_rate - 3.0).abs() < 0.05, "{}", env.fitted_rate);
}
