use gcf_core::audit::*;
use gcf_core::derive_exponents;
use gcf_core::graph::PressureState;
use gcf_core::grid::{Derivs, Grid2};
use proptest::prelude::*;

/// Largest value of `e^T M e` over unit vectors, found by a direction sweep
/// followed by golden-section refinement around the best sample.
fn brute_force_max(g: f64, d: &Derivs, theta: f64) -> f64 {
    let quad = |phi: f64| {
        let (c, s) = (phi.cos(), phi.sin());
        let hess = d.uxx * c * c + 2.0 * d.uxy * c * s + d.uyy * s * s;
        let slope = d.ux * c + d.uy * s;
        g * hess + theta * slope * slope
    };
    let n = 360;
    let step = std::f64::consts::PI / n as f64;
    let best = (0..n)
        .map(|k| k as f64 * step)
        .max_by(|a, b| quad(*a).total_cmp(&quad(*b)))
        .unwrap();
    let (mut a, mut b) = (best - step, best + step);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let (c, e) = (b - r * (b - a), a + r * (b - a));
        if quad(c) > quad(e) {
            b = e;
        } else {
            a = c;
        }
    }
    quad(0.5 * (a + b))
}

fn derivs() -> impl Strategy<Value = Derivs> {
    prop::array::uniform5(-3.0f64..3.0).prop_map(|v| Derivs {
        ux: v[0],
        uy: v[1],
        uxx: v[2],
        uyy: v[3],
        uxy: v[4],
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn closed_form_z_matches_brute_force(g in 0.0f64..2.0, d in derivs(), alpha in 0.51f64..=1.0) {
        let theta = derive_exponents(alpha).unwrap().theta;
        let exact = z_closed_form(g, &d, theta);
        let brute = brute_force_max(g, &d, theta);
        prop_assert!((exact - brute).abs() <= 1e-10 * exact.abs().max(1.0), "{exact} vs {brute}");
    }
}

fn sample(half_width: f64, n: usize, g: impl Fn(f64, f64) -> f64) -> PressureState {
    let grid = Grid2::square(n, half_width).unwrap();
    PressureState::new(grid, grid.sample(g), 0.0).unwrap()
}

fn smooth(x: f64, y: f64) -> f64 {
    1.0 + 0.2 * x - 0.1 * y + 0.3 * x * x + 0.5 * y * y + 0.15 * x * y + 0.05 * x.powi(3)
}

#[test]
fn z_is_invariant_under_quarter_turns() {
    let p = derive_exponents(0.75).unwrap();
    let ps = sample(1.0, 41, smooth);
    let grid = ps.grid;
    let mask = vec![true; grid.len()];
    let z = z_field(&ps, &p, &mask);
    let mut turned = ps.clone();
    turned.g = grid.rotate90(&ps.g);
    let zt = z_field(&turned, &p, &mask);
    let expected = grid.rotate90(&z);
    for (i, j) in grid.interior() {
        let k = grid.idx(i, j);
        assert!(
            (zt[k] - expected[k]).abs() <= 1e-10,
            "{} vs {}",
            zt[k],
            expected[k]
        );
    }
}

#[test]
fn quantities_follow_parabolic_scaling() {
    let p = derive_exponents(0.75).unwrap();
    let (c, lambda) = (3.0, 2.0);
    let base = sample(1.0, 41, smooth);
    let scaled = sample(1.0 / lambda, 41, |x, y| c * smooth(lambda * x, lambda * y));
    let grid = base.grid;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1.0);
    for (i, j) in grid.interior() {
        let k = grid.idx(i, j);
        let d0 = Derivs::at(&grid, &base.g, i, j);
        let d1 = Derivs::at(&scaled.grid, &scaled.g, i, j);
        assert!(close(d1.grad_sq().sqrt(), c * lambda * d0.grad_sq().sqrt()));
        assert!(close(
            z_closed_form(scaled.g[k], &d1, p.theta),
            c * c * lambda * lambda * z_closed_form(base.g[k], &d0, p.theta)
        ));
        assert!(close(d1.det(), c * c * lambda.powi(4) * d0.det()));
        if let (Some(a), Some(b)) = (tangential_second(&d1), tangential_second(&d0)) {
            assert!(close(a, c * lambda * lambda * b));
        }
    }
}

#[test]
fn convex_pressure_has_nonnegative_hessian_determinant() {
    let ps = sample(1.0, 41, |x, y| x * x + 2.0 * y * y + 0.1);
    let band = aronson_benilan(&ps, &vec![true; ps.grid.len()]);
    assert!(band.min > 0.0 && !band.is_empty());
}
