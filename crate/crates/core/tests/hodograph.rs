use gcf_core::derive_exponents;
use gcf_core::hodograph::*;
use proptest::prelude::*;

// manufactured chart h = z + 0.3 z^2 - 0.4 y^2 + 0.2 z y + 0.5 t
fn chart(z: f64, y: f64, t: f64) -> f64 {
    z + 0.3 * z * z - 0.4 * y * y + 0.2 * z * y + 0.5 * t
}

/// Inverse of the chart in `x`, clipped at zero.
fn pressure(p: [f64; 2], t: f64) -> f64 {
    let (x, y) = (p[0], p[1]);
    let (d, b) = (0.3, 1.0 + 0.2 * y);
    let rhs = x + 0.4 * y * y - 0.5 * t;
    let z = (-b + (b * b + 4.0 * d * rhs).max(0.0).sqrt()) / (2.0 * d);
    z.max(0.0)
}

fn pressure_gradient(p: [f64; 2], t: f64) -> [f64; 2] {
    let z = pressure(p, t);
    let hz = 1.0 + 0.6 * z + 0.2 * p[1];
    let hy = -0.8 * p[1] + 0.2 * z;
    [1.0 / hz, -hy / hz]
}

fn exact_residual(z: f64, y: f64, alpha: f64, theta: f64, beta: f64) -> f64 {
    let (hz, hy, hzz, hyy, hzy) = (1.0 + 0.6 * z + 0.2 * y, -0.8 * y + 0.2 * z, 0.6, -0.8, 0.2);
    let kh = z * (hzz * hyy - hzy * hzy) - theta * hz * hyy;
    let zp = z.powf(2.0 * (beta - 1.0));
    let j = zp + hz * hz + zp * hy * hy;
    0.5 + kh.max(0.0).powf(alpha) / j.powf(0.5 * (4.0 * alpha - 1.0))
}

fn manufactured_patch(alpha: f64) -> (HodographPatch, CoefficientField) {
    let p = derive_exponents(alpha).unwrap();
    let samplers: Vec<_> = [0.0, 0.01, 0.02]
        .into_iter()
        .map(|t| FnSampler {
            t,
            value: move |x: [f64; 2]| pressure(x, t),
            gradient: move |x: [f64; 2]| pressure_gradient(x, t),
        })
        .collect();
    let refs: Vec<&dyn PressureSampler> =
        samplers.iter().map(|s| s as &dyn PressureSampler).collect();
    let frame = LocalFrame {
        p0: [0.0, 0.0],
        angle: 0.0,
        eta: 0.3,
        gx_min: f64::NAN,
        gx_max: f64::NAN,
        samples: 0,
    };
    let patch = build_patch(&refs, &frame, &PatchSpec { nz: 13, ny: 21 }).unwrap();
    let field = coefficients(&patch, &p);
    (patch, field)
}

#[test]
fn manufactured_chart_recovers_the_exact_residual() {
    for alpha in [1.0, 0.75, 0.6] {
        let p = derive_exponents(alpha).unwrap();
        let (patch, field) = manufactured_patch(alpha);
        assert_eq!(patch.outside, 0);
        assert!(patch.roundtrip_max <= 1e-10, "{}", patch.roundtrip_max);
        for (k, &z) in patch.z.iter().enumerate() {
            for (j, &y) in patch.y.iter().enumerate() {
                for (m, &t) in patch.t.iter().enumerate() {
                    assert!((patch.at(m, j, k) - chart(z, y, t)).abs() <= 1e-10);
                }
            }
        }
        assert!(!field.nodes.is_empty());
        for n in &field.nodes {
            let s = exact_residual(n.z, n.y, alpha, p.theta, p.beta);
            assert!(
                (n.residual - s).abs() <= 1e-8,
                "alpha {alpha} at ({}, {}, {}): {} vs {s}",
                n.z,
                n.y,
                n.t,
                n.residual
            );
        }
    }
}

#[test]
fn the_two_residual_forms_agree_when_the_weight_is_quadratic() {
    let (_, field) = manufactured_patch(1.0);
    for n in &field.nodes {
        assert!((n.residual - n.residual_variant).abs() <= 1e-14);
    }
    let (_, field) = manufactured_patch(0.75);
    assert!(field
        .nodes
        .iter()
        .any(|n| (n.residual - n.residual_variant).abs() > 1e-6));
}

fn spoint() -> impl Strategy<Value = SPoint> {
    (0.0f64..1.0, -1.0f64..1.0, 0.0f64..1.0).prop_map(|(z, y, t)| SPoint { z, y, t })
}

proptest! {
    #[test]
    fn s_distance_is_a_metric(a in spoint(), b in spoint(), c in spoint()) {
        let d = |p, q| s_distance(p, q).unwrap();
        prop_assert_eq!(d(a, a), 0.0);
        prop_assert_eq!(d(a, b), d(b, a));
        prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-12);
        prop_assert!(d(a, b) >= 0.0);
    }

    #[test]
    fn s_distance_scales_parabolically(a in spoint(), b in spoint(), r in 0.1f64..4.0) {
        let scale = |p: SPoint| SPoint { z: r * r * p.z, y: r * p.y, t: r * r * p.t };
        let lhs = s_distance(scale(a), scale(b)).unwrap();
        prop_assert!((lhs - r * s_distance(a, b).unwrap()).abs() <= 1e-12 * lhs.max(1.0));
    }
}

#[test]
fn negative_z_is_rejected() {
    let q = SPoint {
        z: -1e-3,
        y: 0.0,
        t: 0.0,
    };
    assert!(s_distance(q, q).is_err());
}
