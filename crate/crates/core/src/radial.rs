//! Rotationally symmetric flow `f_t = (f_r)_+^a (f_rr)_+^a / (r^a (1+f_r^2)^{(4a-1)/2})`
//! on a radial grid, together with the waiting-time barrier `h+`.
//!
//! The center node uses `f_r(0) = 0` and takes `f_rr(0)` from a parabolic fit
//! through nodes 0, 1, 2, so the removable `f_r / r` singularity becomes
//! `f_rr(0)`. The outermost node is Dirichlet.

use serde::Serialize;

use crate::error::{GcfError, Result};
use crate::params::{fast_pow, FlowParams};

/// A flat node is released once its computed speed exceeds this value.
pub const RELEASE_THRESHOLD: f64 = 1e-14;
/// Default Courant number used by the drivers.
pub const DEFAULT_CFL: f64 = 0.4;
/// Hard stability limit; `step_radial` refuses anything above it.
pub const MAX_CFL: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialState {
    pub r: Vec<f64>,
    pub f: Vec<f64>,
    pub t: f64,
    pub flat: Vec<bool>,
}

impl RadialState {
    pub fn new(r: Vec<f64>, f: Vec<f64>, t: f64) -> Result<Self> {
        if r.len() < 4 {
            return Err(GcfError::InvalidGrid(format!(
                "need at least 4 radial nodes, got {}",
                r.len()
            )));
        }
        if r.len() != f.len() {
            return Err(GcfError::InvalidGrid(
                "radius and height arrays differ in length".into(),
            ));
        }
        if r[0] != 0.0 {
            return Err(GcfError::InvalidGrid(
                "radial grid must start at r = 0".into(),
            ));
        }
        if r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(GcfError::InvalidGrid(
                "radii must be strictly increasing".into(),
            ));
        }
        if let Some(index) = f.iter().position(|v| !(*v >= 0.0)) {
            return Err(GcfError::NegativeValue {
                index,
                value: f[index],
            });
        }
        let flat = f.iter().map(|&v| v == 0.0).collect();
        Ok(Self { r, f, t, flat })
    }

    /// Samples `profile` on `n` uniformly spaced nodes of `[0, r_max]`.
    pub fn uniform(n: usize, r_max: f64, profile: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 4 || !(r_max > 0.0) {
            return Err(GcfError::InvalidGrid(format!("n = {n}, r_max = {r_max}")));
        }
        let dr = r_max / (n - 1) as f64;
        let r: Vec<f64> = (0..n).map(|i| i as f64 * dr).collect();
        let f = r.iter().map(|&x| profile(x)).collect();
        Self::new(r, f, 0.0)
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn min_spacing(&self) -> f64 {
        self.r
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Radius of the last node of the flat run starting at the center
    /// (zero if the center is not flat).
    pub fn flat_radius(&self) -> f64 {
        let mut radius = 0.0;
        for (r, flat) in self.r.iter().zip(&self.flat) {
            if !flat {
                break;
            }
            radius = *r;
        }
        radius
    }

    /// Piecewise linear interpolation of `f` (clamped to the grid).
    pub fn value_at(&self, radius: f64) -> f64 {
        let n = self.r.len();
        if radius <= 0.0 {
            return self.f[0];
        }
        if radius >= self.r[n - 1] {
            return self.f[n - 1];
        }
        let j = self.r.partition_point(|&x| x <= radius).max(1);
        let (r0, r1) = (self.r[j - 1], self.r[j]);
        let w = (radius - r0) / (r1 - r0);
        self.f[j - 1] * (1.0 - w) + self.f[j] * w
    }

    /// `max_i (f_{i+1} - 2 f_i + f_{i-1})` violation below zero, i.e. how
    /// far the profile is from discrete convexity (0 when convex).
    pub fn convexity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 1..self.len() - 1 {
            let (_, frr) = radial_derivatives(&self.r, &self.f, i);
            worst = worst.max(-frr);
        }
        worst
    }
}

/// Three-point weights of `f_r` and `f_rr` at one node.
#[derive(Debug, Clone, Copy)]
struct NodeStencil {
    d1: [f64; 3],
    d2: [f64; 3],
    inv_r: f64,
    /// `weight * alpha / h^2` turns `f_t / f_rr` into an inverse time step.
    stab: f64,
}

/// Precomputed derivative weights on a radial grid. Node 0 uses `f_r = 0` and
/// the least-squares even parabola `a + c r^2` through nodes 0, 1, 2 for
/// `f_rr = 2c`.
#[derive(Debug, Clone)]
struct RadialStencil {
    nodes: Vec<NodeStencil>,
}

impl RadialStencil {
    fn new(r: &[f64], alpha: f64) -> Self {
        let n = r.len();
        let mut nodes = Vec::with_capacity(n);
        {
            let u = [0.0, r[1] * r[1], r[2] * r[2]];
            let mean = (u[0] + u[1] + u[2]) / 3.0;
            let var: f64 = u.iter().map(|x| (x - mean).powi(2)).sum();
            let d2 = [0, 1, 2].map(|k| 2.0 * (u[k] - mean) / var);
            // the center speed is f_rr^{2a}, hence the factor 2 in the weight
            let stab = 2.0 * alpha * (-d2[0]) * 0.5;
            nodes.push(NodeStencil {
                d1: [0.0; 3],
                d2,
                inv_r: 0.0,
                stab,
            });
        }
        for i in 1..n - 1 {
            let h1 = r[i] - r[i - 1];
            let h2 = r[i + 1] - r[i];
            let s = h1 + h2;
            let d1 = [-h2 / (h1 * s), (h2 - h1) / (h1 * h2), h1 / (h2 * s)];
            let d2 = [2.0 / (h1 * s), -2.0 / (h1 * h2), 2.0 / (h2 * s)];
            // explicit Euler keeps a nonnegative self coefficient while
            // dt * a * (f_t / f_rr) * |d2_self| <= 2 cfl
            let stab = alpha * (-d2[1]) * 0.5;
            nodes.push(NodeStencil {
                d1,
                d2,
                inv_r: 1.0 / r[i],
                stab,
            });
        }
        Self { nodes }
    }

    /// `(f_r, f_rr)` at node `i < n - 1`.
    #[inline]
    fn derivatives(&self, f: &[f64], i: usize) -> (f64, f64) {
        let w = &self.nodes[i];
        if i == 0 {
            return (0.0, w.d2[0] * f[0] + w.d2[1] * f[1] + w.d2[2] * f[2]);
        }
        let (fm, f0, fp) = (f[i - 1], f[i], f[i + 1]);
        (
            w.d1[0] * fm + w.d1[1] * f0 + w.d1[2] * fp,
            w.d2[0] * fm + w.d2[1] * f0 + w.d2[2] * fp,
        )
    }
}

/// `(f_r, f_rr)` at node `i` (not the outermost one).
pub(crate) fn radial_derivatives(r: &[f64], f: &[f64], i: usize) -> (f64, f64) {
    if i == 0 {
        return RadialStencil::new(&r[..3], 1.0).derivatives(f, 0);
    }
    let h1 = r[i] - r[i - 1];
    let h2 = r[i + 1] - r[i];
    let s = h1 + h2;
    let fr = -h2 / (h1 * s) * f[i - 1] + (h2 - h1) / (h1 * h2) * f[i] + h1 / (h2 * s) * f[i + 1];
    let frr = 2.0 * (f[i - 1] / (h1 * s) - f[i] / (h1 * h2) + f[i + 1] / (h2 * s));
    (fr, frr)
}

/// Right-hand side of the radial flow for given derivatives at radius `radius`.
#[inline]
pub fn radial_speed(radius: f64, fr: f64, frr: f64, params: &FlowParams) -> f64 {
    let (fr_p, frr_p) = (fr.max(0.0), frr.max(0.0));
    let num = if radius == 0.0 {
        fast_pow(frr_p * frr_p, params.alpha)
    } else {
        fast_pow(fr_p * frr_p / radius, params.alpha)
    };
    if num == 0.0 {
        return 0.0;
    }
    num / fast_pow(1.0 + fr * fr, params.slope_exponent())
}

/// Fills `rhs` with the speed per node and returns the largest stable step
/// at unit Courant number (infinite when nothing moves).
fn speed_into(
    state: &RadialState,
    stencil: &RadialStencil,
    params: &FlowParams,
    rhs: &mut [f64],
) -> f64 {
    let n = state.len();
    let (alpha, slope) = (params.alpha, params.slope_exponent());
    let f = &state.f;
    let mut inv_dt: f64 = 0.0;
    for i in 0..n - 1 {
        let node = &stencil.nodes[i];
        let (fr, frr) = stencil.derivatives(f, i);
        let mut v = 0.0;
        if frr > 0.0 && (i == 0 || fr > 0.0) {
            let q = if i == 0 {
                frr * frr
            } else {
                fr * frr * node.inv_r
            };
            v = fast_pow(q, alpha) / fast_pow(1.0 + fr * fr, slope);
        }
        if v <= RELEASE_THRESHOLD && state.flat[i] {
            v = 0.0;
        }
        if v > 0.0 {
            inv_dt = inv_dt.max(node.stab * v / frr);
        }
        rhs[i] = v;
    }
    rhs[n - 1] = 0.0;
    if inv_dt == 0.0 {
        f64::INFINITY
    } else {
        1.0 / inv_dt
    }
}

/// `f_t` per node; zero on the unreleased flat set and on the Dirichlet node.
pub fn rhs_radial(state: &RadialState, params: &FlowParams) -> Vec<f64> {
    let mut rhs = vec![0.0; state.len()];
    speed_into(
        state,
        &RadialStencil::new(&state.r, params.alpha),
        params,
        &mut rhs,
    );
    rhs
}

/// Largest stable explicit step at Courant number `cfl` (infinite when the
/// state is stationary).
pub fn stable_dt(state: &RadialState, params: &FlowParams, cfl: f64) -> f64 {
    let mut rhs = vec![0.0; state.len()];
    cfl * speed_into(
        state,
        &RadialStencil::new(&state.r, params.alpha),
        params,
        &mut rhs,
    )
}

fn apply_step_in_place(state: &mut RadialState, rhs: &[f64], dt: f64) {
    for ((f, flat), &v) in state.f.iter_mut().zip(state.flat.iter_mut()).zip(rhs) {
        if v > 0.0 {
            *f += dt * v;
            *flat = false;
        }
    }
    state.t += dt;
}

/// One forward Euler step. Refused when `dt` exceeds the stability bound at
/// Courant number [`MAX_CFL`].
pub fn step_radial(state: &RadialState, dt: f64, params: &FlowParams) -> Result<RadialState> {
    let mut rhs = vec![0.0; state.len()];
    let limit = MAX_CFL
        * speed_into(
            state,
            &RadialStencil::new(&state.r, params.alpha),
            params,
            &mut rhs,
        );
    if !(dt >= 0.0) || dt > limit {
        return Err(GcfError::CflViolation { dt, limit });
    }
    let mut next = state.clone();
    apply_step_in_place(&mut next, &rhs, dt);
    Ok(next)
}

/// Which states an evolution keeps.
#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    /// Initial state plus the state at each listed time.
    Times(Vec<f64>),
    /// Every `k`-th step (and the final state).
    Stride(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOptions {
    pub cfl: f64,
    pub t_end: f64,
    pub record: Record,
}

impl EvolveOptions {
    pub fn every_step(t_end: f64, cfl: f64) -> Self {
        Self {
            cfl,
            t_end,
            record: Record::Stride(1),
        }
    }

    pub fn at_times(times: Vec<f64>, cfl: f64) -> Self {
        let t_end = times.iter().cloned().fold(0.0, f64::max);
        Self {
            cfl,
            t_end,
            record: Record::Times(times),
        }
    }
}

/// Marches to `opts.t_end` with adaptive explicit steps, landing exactly on
/// requested output times. The first frame is the initial state.
pub fn evolve_radial(
    initial: &RadialState,
    params: &FlowParams,
    opts: &EvolveOptions,
) -> Result<Vec<RadialState>> {
    if !(opts.cfl > 0.0 && opts.cfl <= MAX_CFL) {
        return Err(GcfError::Config(format!(
            "CFL number {} outside (0, {MAX_CFL}]",
            opts.cfl
        )));
    }
    let mut targets: Vec<f64> = match &opts.record {
        Record::Times(ts) => ts.iter().cloned().filter(|&t| t > initial.t).collect(),
        Record::Stride(_) => Vec::new(),
    };
    targets.sort_by(f64::total_cmp);
    targets.dedup();
    let mut frames = vec![initial.clone()];
    let mut state = initial.clone();
    let mut next_target = 0;
    let mut steps = 0usize;
    let eps = 1e-12 * opts.t_end.max(1.0);
    let stencil = RadialStencil::new(&state.r, params.alpha);
    let mut rhs = vec![0.0; state.len()];
    while state.t < opts.t_end - eps {
        let mut dt = opts.cfl * speed_into(&state, &stencil, params, &mut rhs);
        dt = dt.min(opts.t_end - state.t);
        let mut hit = false;
        if let Some(&tk) = targets.get(next_target) {
            if state.t + dt >= tk - eps {
                dt = tk - state.t;
                hit = true;
            }
        }
        apply_step_in_place(&mut state, &rhs, dt);
        steps += 1;
        if hit {
            state.t = targets[next_target];
            next_target += 1;
            frames.push(state.clone());
        } else if let Record::Stride(k) = opts.record {
            if steps % k.max(1) == 0 {
                frames.push(state.clone());
            }
        }
    }
    if frames.last().map(|s| s.t) != Some(state.t) {
        frames.push(state);
    }
    Ok(frames)
}

/// Flat disc of radius `rho` with rim `scale * (r - rho)_+^exponent`.
pub fn flat_disc_profile(rho: f64, scale: f64, exponent: f64) -> impl Fn(f64) -> f64 {
    move |r: f64| {
        if r > rho {
            scale * (r - rho).powf(exponent)
        } else {
            0.0
        }
    }
}

/// Lower hemisphere of the sphere of radius `radius` centered at height `center`.
pub fn hemisphere_profile(center: f64, radius: f64) -> impl Fn(f64) -> f64 {
    move |r: f64| (center - (radius * radius - r * r).max(0.0).sqrt()).max(0.0)
}

/// Radius of a sphere shrinking with normal speed `K^a`:
/// `R(t) = (R0^{2a+1} - (2a+1) t)^{1/(2a+1)}`.
pub fn sphere_radius(r0: f64, alpha: f64, t: f64) -> f64 {
    let e = 2.0 * alpha + 1.0;
    (r0.powf(e) - e * t).max(0.0).powf(1.0 / e)
}

/// Waiting-time barrier `C+ |X - P0|^mu / (T - t)^gamma`.
pub fn supersolution_value(
    params: &FlowParams,
    x: [f64; 2],
    p0: [f64; 2],
    big_t: f64,
    t: f64,
) -> Result<f64> {
    if !(t < big_t) {
        return Err(GcfError::Domain(format!(
            "barrier evaluated at t = {t} >= T = {big_t}"
        )));
    }
    let d = (x[0] - p0[0]).hypot(x[1] - p0[1]);
    if d == 0.0 {
        return Ok(0.0);
    }
    Ok((params.ln_c_plus + params.mu * d.ln() - params.gamma_exp * (big_t - t).ln()).exp())
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualSample {
    pub r: f64,
    pub t: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SupersolutionReport {
    pub c_scale: f64,
    pub min_residual: f64,
    pub argmin_r: f64,
    pub argmin_t: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub samples: Vec<ResidualSample>,
}

/// `h_t - RHS(h)` for `h = scale * C+ r^mu / (T-t)^gamma`, with the closed-form
/// derivatives substituted into the radial equation.
pub fn supersolution_residual(
    params: &FlowParams,
    c_scale: f64,
    r: f64,
    t: f64,
    big_t: f64,
) -> f64 {
    let c = c_scale * params.c_plus;
    let (mu, g) = (params.mu, params.gamma_exp);
    let tau = big_t - t;
    let ht = g * c * r.powf(mu) / tau.powf(g + 1.0);
    let fr = mu * c * r.powf(mu - 1.0) / tau.powf(g);
    let frr = mu * (mu - 1.0) * c * r.powf(mu - 2.0) / tau.powf(g);
    ht - radial_speed(r, fr, frr, params)
}

/// Scans the residual of the (scaled) barrier over `radii x times`.
pub fn verify_supersolution(
    params: &FlowParams,
    radii: &[f64],
    times: &[f64],
    big_t: f64,
    c_scale: f64,
    tolerance: f64,
) -> Result<SupersolutionReport> {
    if radii.iter().any(|&r| !(r > 0.0)) {
        return Err(GcfError::Domain("barrier scan must exclude r = 0".into()));
    }
    if times.iter().any(|&t| !(t < big_t)) {
        return Err(GcfError::Domain(
            "barrier scan times must lie below T".into(),
        ));
    }
    let mut samples = Vec::with_capacity(radii.len() * times.len());
    let (mut min_residual, mut argmin_r, mut argmin_t) = (f64::INFINITY, f64::NAN, f64::NAN);
    for &t in times {
        for &r in radii {
            let residual = supersolution_residual(params, c_scale, r, t, big_t);
            if residual < min_residual {
                (min_residual, argmin_r, argmin_t) = (residual, r, t);
            }
            samples.push(ResidualSample { r, t, residual });
        }
    }
    Ok(SupersolutionReport {
        c_scale,
        min_residual,
        argmin_r,
        argmin_t,
        tolerance,
        pass: min_residual >= -tolerance,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaitingTime {
    /// Time at which the probe value, linear in time between frames, first
    /// exceeds `tol` (explicit steps are exactly linear in time).
    pub t_star: f64,
    /// False when the probe never left the flat set within the trajectory.
    pub released: bool,
}

/// `sup { t : f(P0, t) <= tol }` over the sampled trajectory, `P0` at distance
/// `p0_radius` from the center.
pub fn waiting_time_radial(traj: &[RadialState], p0_radius: f64, tol: f64) -> Result<WaitingTime> {
    let first = traj
        .first()
        .ok_or_else(|| GcfError::InsufficientData("empty trajectory".into()))?;
    let j = first.r.partition_point(|&x| x <= p0_radius);
    let interior =
        j < first.len() && first.flat[..=j].iter().all(|&b| b) && p0_radius < first.flat_radius();
    if !interior {
        return Err(GcfError::Domain(format!(
            "P0 at r = {p0_radius} is not interior to the initial flat set"
        )));
    }
    Ok(crossing_time(
        traj.iter().map(|s| (s.t, s.value_at(p0_radius))),
        tol,
    ))
}

/// First time a piecewise linear series `(t, v)` exceeds `tol`.
pub fn crossing_time(series: impl Iterator<Item = (f64, f64)>, tol: f64) -> WaitingTime {
    let mut prev: Option<(f64, f64)> = None;
    for (t, v) in series {
        if v > tol {
            let t_star = match prev {
                Some((t0, v0)) => t0 + (tol - v0) / (v - v0) * (t - t0),
                None => t,
            };
            return WaitingTime {
                t_star,
                released: true,
            };
        }
        prev = Some((t, v));
    }
    WaitingTime {
        t_star: prev.map_or(0.0, |p| p.0),
        released: false,
    }
}

/// Largest `f - h+` over a polar sampling of the ball `B_rho(P0)` and all
/// frames with `t < T` (non-positive means the barrier dominates).
pub fn comparison_gap(
    traj: &[RadialState],
    params: &FlowParams,
    p0: [f64; 2],
    big_t: f64,
    rho: f64,
) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    let (n_rad, n_ang) = (40, 64);
    for s in traj.iter().filter(|s| s.t < big_t) {
        for i in 0..=n_rad {
            let d = rho * i as f64 / n_rad as f64;
            for k in 0..n_ang {
                let phi = std::f64::consts::TAU * k as f64 / n_ang as f64;
                let x = [p0[0] + d * phi.cos(), p0[1] + d * phi.sin()];
                let f = s.value_at(x[0].hypot(x[1]));
                let h = supersolution_value(params, x, p0, big_t, s.t)?;
                worst = worst.max(f - h);
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_exponents;

    #[test]
    fn flat_plane_is_stationary() {
        let p = derive_exponents(0.8).unwrap();
        let s = RadialState::uniform(50, 1.0, |_| 0.0).unwrap();
        assert!(rhs_radial(&s, &p).iter().all(|&v| v == 0.0));
        let next = step_radial(&s, 0.3, &p).unwrap();
        assert_eq!(next.f, s.f);
        assert!(next.flat.iter().all(|&b| b));
        assert_eq!(stable_dt(&s, &p, DEFAULT_CFL), f64::INFINITY);
    }

    #[test]
    fn unit_sphere_center_speed() {
        let p = derive_exponents(1.0).unwrap();
        let s = RadialState::uniform(401, 0.9, hemisphere_profile(1.0, 1.0)).unwrap();
        let rhs = rhs_radial(&s, &p);
        assert!((rhs[0] - 1.0).abs() < 5e-5, "center speed {}", rhs[0]);
    }

    #[test]
    fn euler_identity() {
        let p = derive_exponents(0.75).unwrap();
        let s = RadialState::uniform(101, 1.5, |r| 0.5 * r * r + 0.1 * r.powi(4) + 0.2).unwrap();
        let dt = stable_dt(&s, &p, DEFAULT_CFL);
        let rhs = rhs_radial(&s, &p);
        let next = step_radial(&s, dt, &p).unwrap();
        let max_rate =
            s.f.iter()
                .zip(&next.f)
                .map(|(a, b)| (b - a) / dt)
                .fold(0.0, f64::max);
        let max_rhs = rhs.iter().cloned().fold(0.0, f64::max);
        assert!((max_rate - max_rhs).abs() <= 1e-12 * max_rhs.max(1.0));
        assert!(next.f.iter().zip(&s.f).all(|(b, a)| b >= a));
    }

    #[test]
    fn step_refuses_cfl_violation() {
        let p = derive_exponents(1.0).unwrap();
        let s = RadialState::uniform(101, 1.5, |r| 0.5 * r * r).unwrap();
        let dt = stable_dt(&s, &p, MAX_CFL);
        assert!(step_radial(&s, dt * 0.999, &p).is_ok());
        assert!(matches!(
            step_radial(&s, dt * 1.01, &p),
            Err(GcfError::CflViolation { .. })
        ));
    }

    #[test]
    fn interface_speed_band_is_resolution_independent() {
        for alpha in [0.6, 0.75, 1.0] {
            let p = derive_exponents(alpha).unwrap();
            let mut speeds = Vec::new();
            for n in [201, 401, 801, 1601] {
                let s = RadialState::uniform(n, 2.0, flat_disc_profile(1.0, 1.0, p.beta)).unwrap();
                let rhs = rhs_radial(&s, &p);
                // first node strictly outside r = 1
                let i = s.r.iter().position(|&r| r > 1.0 + 1e-12).unwrap();
                let (fr, _) = radial_derivatives(&s.r, &s.f, i);
                speeds.push(rhs[i] / fr);
            }
            let (lo, hi) = speeds
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
            assert!(lo > 0.1 && hi < 10.0, "alpha {alpha}: {speeds:?}");
            assert!(hi / lo < 1.05, "alpha {alpha}: {speeds:?}");
        }
    }

    #[test]
    fn center_parabola_is_exact_for_even_quadratics() {
        let r: Vec<f64> = (0..6).map(|i| 0.1 * i as f64).collect();
        let f: Vec<f64> = r.iter().map(|x| 2.0 + 3.0 * x * x).collect();
        let (fr, frr) = radial_derivatives(&r, &f, 0);
        assert_eq!(fr, 0.0);
        assert!((frr - 6.0).abs() < 1e-10);
        // second order for quartic terms
        let errs: Vec<f64> = [0.1, 0.05]
            .iter()
            .map(|h| {
                let r: Vec<f64> = (0..6).map(|i| h * i as f64).collect();
                let f: Vec<f64> = r.iter().map(|x| 3.0 * x * x - 5.0 * x.powi(4)).collect();
                (radial_derivatives(&r, &f, 0).1 - 6.0).abs()
            })
            .collect();
        assert!((errs[0] / errs[1] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn barrier_values() {
        let p = derive_exponents(1.0).unwrap();
        assert_eq!(
            supersolution_value(&p, [0.3, -0.2], [0.3, -0.2], 1.0, 0.5).unwrap(),
            0.0
        );
        let v = supersolution_value(&p, [1.0, 0.0], [0.0, 0.0], 1.0, 0.0).unwrap();
        assert!((v - 1.0 / 48.0).abs() < 1e-15);
        let v = supersolution_value(&p, [0.0, 2.0], [0.0, 0.0], 2.0, 1.0).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
        assert!(supersolution_value(&p, [1.0, 0.0], [0.0, 0.0], 1.0, 1.0).is_err());
    }

    #[test]
    fn barrier_residual_scan() {
        let p = derive_exponents(1.0).unwrap();
        let radii: Vec<f64> = (0..=190).map(|i| 0.1 + 0.01 * i as f64).collect();
        let times: Vec<f64> = (0..=50).map(|k| 0.5 * k as f64 / 50.0).collect();
        let rep = verify_supersolution(&p, &radii, &times, 1.0, 1.0, 1e-8).unwrap();
        assert!(rep.pass, "min residual {}", rep.min_residual);
        // shrinking the constant keeps the barrier a super-solution,
        // enlarging it breaks the inequality near the center
        let half = verify_supersolution(&p, &radii, &times, 1.0, 0.5, 1e-8).unwrap();
        assert!(half.pass && half.min_residual >= 0.0);
        let double = verify_supersolution(&p, &radii, &times, 1.0, 2.0, 1e-8).unwrap();
        assert!(
            !double.pass,
            "doubled constant min residual {}",
            double.min_residual
        );
        assert!(verify_supersolution(&p, &[0.0, 0.1], &times, 1.0, 1.0, 1e-8).is_err());
    }

    #[test]
    fn waiting_time_rejects_non_flat_probe() {
        let p = derive_exponents(1.0).unwrap();
        let s = RadialState::uniform(101, 1.0, |r| 0.5 * r * r + 0.01).unwrap();
        let traj =
            evolve_radial(&s, &p, &EvolveOptions::at_times(vec![0.01], DEFAULT_CFL)).unwrap();
        assert!(matches!(
            waiting_time_radial(&traj, 0.0, 1e-10),
            Err(GcfError::Domain(_))
        ));
    }

    #[test]
    fn invalid_grids_rejected() {
        assert!(RadialState::new(vec![0.0, 1.0, 1.0, 2.0], vec![0.0; 4], 0.0).is_err());
        assert!(RadialState::new(vec![0.1, 1.0, 2.0, 3.0], vec![0.0; 4], 0.0).is_err());
        assert!(
            RadialState::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, -1.0, 0.0, 0.0], 0.0).is_err()
        );
    }
}
