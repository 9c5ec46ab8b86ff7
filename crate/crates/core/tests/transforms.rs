use gcf_core::params::{height_from_pressure, pressure_from_height};
use gcf_core::{derive_exponents, GcfError};
use proptest::prelude::*;

/// Relative distance in units of the spacing of doubles near `b`.
fn ulps(a: f64, b: f64) -> f64 {
    (a - b).abs() / (b.abs() * f64::EPSILON)
}

#[test]
fn exponent_table_matches_closed_forms_on_100_alphas() {
    for k in 0..100 {
        let alpha = 0.5 + 0.5 * (k as f64 + 0.5) / 100.0;
        let p = derive_exponents(alpha).unwrap();
        let beta = (3.0 * alpha - 1.0) / (2.0 * alpha - 1.0);
        let theta = alpha / (2.0 * alpha - 1.0);
        let mu = 4.0 * alpha / (2.0 * alpha - 1.0);
        let gamma = 1.0 / (2.0 * alpha - 1.0);
        assert_eq!(p.beta, beta, "alpha {alpha}");
        assert_eq!(p.theta, theta, "alpha {alpha}");
        assert_eq!(p.mu, mu, "alpha {alpha}");
        assert_eq!(p.gamma_exp, gamma, "alpha {alpha}");
        assert!(ulps(p.theta + 1.0, p.beta) <= 2.0, "alpha {alpha}");
        let c = (gamma / (mu.powf(2.0 * alpha) * (mu - 1.0).powf(alpha))).powf(gamma);
        if c > 1e-280 {
            assert!(
                (p.c_plus - c).abs() <= 1e-11 * c,
                "alpha {alpha}: {} vs {c}",
                p.c_plus
            );
        }
    }
}

#[test]
fn out_of_range_alpha_is_rejected() {
    for a in [0.4, 0.5, 1.01] {
        assert!(matches!(
            derive_exponents(a),
            Err(GcfError::AlphaOutOfRange(_))
        ));
    }
}

proptest! {
    #[test]
    fn height_pressure_round_trip(
        alpha in 0.501f64..=1.0,
        f in proptest::collection::vec(0.0f64..100.0, 1..64),
    ) {
        let p = derive_exponents(alpha).unwrap();
        let g = pressure_from_height(&f, &p).unwrap();
        let back = height_from_pressure(&g, &p).unwrap();
        for (a, b) in f.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300), "{a} vs {b}");
        }
    }

    #[test]
    fn pressure_is_the_stated_power(alpha in 0.501f64..=1.0, f in 1e-8f64..10.0) {
        let p = derive_exponents(alpha).unwrap();
        let beta = (3.0 * alpha - 1.0) / (2.0 * alpha - 1.0);
        let g = pressure_from_height(&[f], &p).unwrap()[0];
        prop_assert!((g - (beta * f).powf(1.0 / beta)).abs() <= 1e-12 * g);
    }
}
