//! Flow exponent `alpha`, the constants derived from it, and the
//! height/pressure change of variables `f = g^beta / beta`.

use serde::{Deserialize, Serialize};

use crate::error::{GcfError, Result};

/// Default nondegeneracy constant used when none is configured.
pub const DEFAULT_LAMBDA: f64 = 0.1;

/// `alpha` together with every exponent and constant derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub alpha: f64,
    /// Vanishing order of the height at the free boundary, `(3a-1)/(2a-1)`.
    pub beta: f64,
    /// `beta - 1 = a/(2a-1)`.
    pub theta: f64,
    /// Spatial exponent of the waiting-time barrier, `4a/(2a-1)`.
    pub mu: f64,
    /// Temporal exponent of the waiting-time barrier, `1/(2a-1)`.
    pub gamma_exp: f64,
    /// Barrier constant `(gamma/(mu^{2a} (mu-1)^a))^{1/(2a-1)}`.
    /// Underflows to zero for `a` within about 0.002 of 1/2.
    pub c_plus: f64,
    /// `ln C+`, finite on the whole range.
    pub ln_c_plus: f64,
    /// Nondegeneracy constant, only used as an audit threshold.
    pub lambda_nd: f64,
}

impl FlowParams {
    pub fn new(alpha: f64) -> Result<Self> {
        derive_exponents(alpha)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(GcfError::Config(format!(
                "nondegeneracy constant must be positive, got {lambda}"
            )));
        }
        self.lambda_nd = lambda;
        Ok(self)
    }

    /// Exponent `(4a-1)/2` of `1 + |Df|^2` in the graph equation.
    pub fn slope_exponent(&self) -> f64 {
        0.5 * (4.0 * self.alpha - 1.0)
    }
}

pub fn derive_exponents(alpha: f64) -> Result<FlowParams> {
    if !(alpha > 0.5 && alpha <= 1.0) {
        return Err(GcfError::AlphaOutOfRange(alpha));
    }
    let denom = 2.0 * alpha - 1.0;
    let theta = alpha / denom;
    let beta = (3.0 * alpha - 1.0) / denom;
    let mu = 4.0 * alpha / denom;
    let gamma_exp = 1.0 / denom;
    let ln_c_plus = gamma_exp * (gamma_exp.ln() - 2.0 * alpha * mu.ln() - alpha * (mu - 1.0).ln());
    let c_plus = ln_c_plus.exp();
    Ok(FlowParams {
        alpha,
        beta,
        theta,
        mu,
        gamma_exp,
        c_plus,
        ln_c_plus,
        lambda_nd: DEFAULT_LAMBDA,
    })
}

fn check_nonneg(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !(*v >= 0.0)) {
        Some(index) => Err(GcfError::NegativeValue {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

/// Pointwise pressure at a single node; zero height maps to exactly zero.
#[inline]
pub fn pressure_at(f: f64, beta: f64) -> f64 {
    if f == 0.0 {
        0.0
    } else {
        (beta * f).powf(1.0 / beta)
    }
}

#[inline]
pub fn height_at(g: f64, beta: f64) -> f64 {
    if g == 0.0 {
        0.0
    } else {
        g.powf(beta) / beta
    }
}

/// `g = (beta f)^{1/beta}`.
pub fn pressure_from_height(f: &[f64], params: &FlowParams) -> Result<Vec<f64>> {
    check_nonneg(f)?;
    Ok(f.iter().map(|&v| pressure_at(v, params.beta)).collect())
}

/// `f = g^beta / beta`.
pub fn height_from_pressure(g: &[f64], params: &FlowParams) -> Result<Vec<f64>> {
    check_nonneg(g)?;
    Ok(g.iter().map(|&v| height_at(v, params.beta)).collect())
}

/// `x^p` with shortcuts for the exponents that dominate solver inner loops.
#[inline]
pub(crate) fn fast_pow(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x
    } else if p == 0.5 {
        x.sqrt()
    } else if p == 1.5 {
        x * x.sqrt()
    } else if p == 0.75 {
        (x * x.sqrt()).sqrt()
    } else if p == 2.0 {
        x * x
    } else if p == 0.0 {
        1.0
    } else {
        x.powf(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn alpha_one_table() {
        let p = derive_exponents(1.0).unwrap();
        assert_eq!(p.beta, 2.0);
        assert_eq!(p.theta, 1.0);
        assert_eq!(p.mu, 4.0);
        assert_eq!(p.gamma_exp, 1.0);
        assert!(close(p.c_plus, 1.0 / 48.0, 1e-15));
    }

    #[test]
    fn alpha_three_quarters_table() {
        let p = derive_exponents(0.75).unwrap();
        assert!(close(p.beta, 2.5, 1e-15));
        assert!(close(p.theta, 1.5, 1e-15));
        assert!(close(p.mu, 6.0, 1e-15));
        assert!(close(p.gamma_exp, 2.0, 1e-15));
        let expected = (2.0 / (6f64.powf(1.5) * 5f64.powf(0.75))).powi(2);
        assert!(close(p.c_plus, expected, 1e-14));
        assert!((p.c_plus - 1.657e-3).abs() < 1e-6);
    }

    #[test]
    fn alpha_point_six_table() {
        let p = derive_exponents(0.6).unwrap();
        assert!(close(p.beta, 4.0, 1e-14));
        assert!(close(p.theta, 3.0, 1e-14));
        assert!(close(p.mu, 12.0, 1e-14));
        assert!(close(p.gamma_exp, 5.0, 1e-14));
    }

    #[test]
    fn rejects_alpha_outside_range() {
        for a in [0.5, 0.4, 1.0000001, 0.0, -1.0, f64::NAN] {
            assert!(
                matches!(derive_exponents(a), Err(GcfError::AlphaOutOfRange(_))),
                "alpha {a}"
            );
        }
    }

    #[test]
    fn pressure_examples() {
        let p = derive_exponents(1.0).unwrap();
        assert_eq!(
            pressure_from_height(&[0.0, 0.0], &p).unwrap(),
            vec![0.0, 0.0]
        );
        let g = pressure_from_height(&[2.0], &p).unwrap();
        assert!(close(g[0], 2.0, 1e-15));
        let xs = [-1.5, -0.3, 0.0, 0.7, 2.0];
        let f: Vec<f64> = xs.iter().map(|x| x * x / 2.0).collect();
        let g = pressure_from_height(&f, &p).unwrap();
        for (gi, x) in g.iter().zip(xs) {
            assert!(close(*gi, x.abs(), 1e-15));
        }
        let back = height_from_pressure(&g, &p).unwrap();
        for (a, b) in back.iter().zip(&f) {
            assert!(close(*a, *b, 1e-15));
        }
    }

    #[test]
    fn negative_inputs_rejected() {
        let p = derive_exponents(0.8).unwrap();
        assert!(matches!(
            pressure_from_height(&[0.0, -1e-300], &p),
            Err(GcfError::NegativeValue { index: 1, .. })
        ));
        assert!(height_from_pressure(&[-2.0], &p).is_err());
    }

    #[test]
    fn fast_pow_matches_powf() {
        for p in [0.0, 0.5, 0.75, 1.0, 1.5, 2.0, 0.7, 3.3] {
            for x in [0.0, 1e-12, 0.3, 1.0, 7.5] {
                let a = fast_pow(x, p);
                let b = x.powf(p);
                assert!((a - b).abs() <= 1e-14 * b.abs().max(1e-300), "x={x} p={p}");
            }
        }
    }

    proptest! {
        #[test]
        fn beta_is_theta_plus_one(alpha in 0.5001f64..=1.0) {
            let p = derive_exponents(alpha).unwrap();
            prop_assert!((p.beta - (p.theta + 1.0)).abs() <= 4.0 * f64::EPSILON * p.beta);
            prop_assert!(p.beta >= 2.0 && p.theta >= 1.0);
            for v in [p.beta, p.theta, p.mu, p.gamma_exp] {
                prop_assert!(v > 0.0 && v.is_finite());
            }
            prop_assert!(p.ln_c_plus.is_finite() && p.c_plus >= 0.0);
            if alpha >= 0.503 {
                prop_assert!(p.c_plus > 0.0);
            }
        }

        #[test]
        fn exponents_non_increasing(a in 0.5001f64..1.0, da in 0.0f64..0.5) {
            let b = (a + da).min(1.0);
            let (p, q) = (derive_exponents(a).unwrap(), derive_exponents(b).unwrap());
            prop_assert!(q.beta <= p.beta && q.theta <= p.theta);
            prop_assert!(q.mu <= p.mu && q.gamma_exp <= p.gamma_exp);
        }

        #[test]
        fn round_trips(alpha in 0.51f64..=1.0, g in proptest::collection::vec(1e-6f64..50.0, 1..40)) {
            let p = derive_exponents(alpha).unwrap();
            let f = height_from_pressure(&g, &p).unwrap();
            let g2 = pressure_from_height(&f, &p).unwrap();
            for (a, b) in g.iter().zip(&g2) {
                prop_assert!((a - b).abs() <= 1e-12 * a.abs());
            }
            let f2 = height_from_pressure(&g2, &p).unwrap();
            for (a, b) in f.iter().zip(&f2) {
                prop_assert!((a - b).abs() <= 1e-12 * a.abs());
            }
        }
    }
}
