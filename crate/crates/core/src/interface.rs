//! Polar level curves `gamma_eps(theta)` of radial and Cartesian snapshots,
//! interface speed bands, exponential envelopes and the vanishing exponent.
//!
//! The free boundary (`eps = 0`) is located from the flat mask and refined by
//! extrapolating the pressure linearly to zero from the first fully non-flat
//! samples where its slope has settled; positive levels use linear
//! interpolation of `f`.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{GcfError, Result};
use crate::graph::GraphState;
use crate::params::{pressure_at, FlowParams};
use crate::radial::{crossing_time, RadialState, WaitingTime};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterfaceCurve {
    pub theta: Vec<f64>,
    /// `NaN` on rays where the level is not attained.
    pub gamma: Vec<f64>,
    pub epsilon: f64,
    pub t: f64,
    pub partial: bool,
}

impl InterfaceCurve {
    fn from_rays(
        n_theta: usize,
        epsilon: f64,
        t: f64,
        mut ray: impl FnMut(f64) -> Option<f64>,
    ) -> Self {
        let theta: Vec<f64> = (0..n_theta)
            .map(|k| TAU * k as f64 / n_theta as f64)
            .collect();
        let gamma: Vec<f64> = theta
            .iter()
            .map(|&th| ray(th).unwrap_or(f64::NAN))
            .collect();
        let partial = gamma.iter().any(|g| g.is_nan());
        Self {
            theta,
            gamma,
            epsilon,
            t,
            partial,
        }
    }

    pub fn min_gamma(&self) -> f64 {
        self.gamma.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_gamma(&self) -> f64 {
        self.gamma.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean_gamma(&self) -> f64 {
        self.gamma.iter().sum::<f64>() / self.gamma.len() as f64
    }

    /// Cartesian vertices relative to the polar origin.
    pub fn points(&self) -> Vec<[f64; 2]> {
        self.theta
            .iter()
            .zip(&self.gamma)
            .map(|(&th, &g)| [g * th.cos(), g * th.sin()])
            .collect()
    }

    /// Largest violation of left turning along the closed polygon, scaled by
    /// the squared mean radius (0 for a convex curve).
    pub fn convexity_defect(&self) -> f64 {
        let p = self.points();
        let n = p.len();
        let scale = self.mean_gamma().powi(2).max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for k in 0..n {
            let (a, b, c) = (p[(k + n - 1) % n], p[k], p[(k + 1) % n]);
            let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
            worst = worst.max(-cross / scale);
        }
        worst
    }

    pub fn is_convex(&self, tol: f64) -> bool {
        !self.partial && self.convexity_defect() <= tol
    }

    /// Distance from a point (relative to the polar origin) to the polygon.
    pub fn distance_to(&self, q: [f64; 2]) -> f64 {
        let p = self.points();
        let n = p.len();
        (0..n)
            .map(|k| segment_distance(q, p[k], p[(k + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether a point lies strictly inside the polygon (relative to the origin).
    pub fn contains(&self, q: [f64; 2]) -> bool {
        let r = q[0].hypot(q[1]);
        if r == 0.0 {
            return true;
        }
        let phi = q[1].atan2(q[0]).rem_euclid(TAU);
        r < self.radius_at(phi)
    }

    /// Polar radius at angle `phi` along the straight chord between samples.
    pub fn radius_at(&self, phi: f64) -> f64 {
        let n = self.theta.len();
        let step = TAU / n as f64;
        let k = ((phi / step).floor() as usize) % n;
        let (a, b) = (self.gamma[k], self.gamma[(k + 1) % n]);
        let (t0, t1) = (self.theta[k], self.theta[k] + step);
        let pa = [a * t0.cos(), a * t0.sin()];
        let pb = [b * t1.cos(), b * t1.sin()];
        let d = [phi.cos(), phi.sin()];
        // intersect the ray s d with the chord pa + u (pb - pa)
        let e = [pb[0] - pa[0], pb[1] - pa[1]];
        let den = d[0] * e[1] - d[1] * e[0];
        if den.abs() < 1e-300 {
            return a.min(b);
        }
        (pa[0] * e[1] - pa[1] * e[0]) / den
    }
}

fn segment_distance(q: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let e = [b[0] - a[0], b[1] - a[1]];
    let len_sq = e[0] * e[0] + e[1] * e[1];
    let u = if len_sq > 0.0 {
        (((q[0] - a[0]) * e[0] + (q[1] - a[1]) * e[1]) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (q[0] - a[0] - u * e[0]).hypot(q[1] - a[1] - u * e[1])
}

/// Level crossing along one ray sampled at increasing `s`.
/// `state[k]`: 0 = all nearby nodes flat, 1 = mixed, 2 = all non-flat.
fn ray_crossing(s: &[f64], f: &[f64], g: &[f64], state: &[u8], epsilon: f64) -> Option<f64> {
    if epsilon > 0.0 {
        if f[0] > epsilon {
            return Some(0.0);
        }
        let k = f.iter().position(|&v| v > epsilon)?;
        let w = (epsilon - f[k - 1]) / (f[k] - f[k - 1]);
        return Some(s[k - 1] + w * (s[k] - s[k - 1]));
    }
    if state[0] != 0 {
        return Some(0.0);
    }
    let last_flat = state.iter().position(|&c| c != 0)? - 1;
    let kb = state.iter().position(|&c| c == 2)?;
    let lo = s[last_flat];
    // The discrete front carries a thin foot of tiny values; extrapolate from
    // the first pair of samples where the pressure slope has settled.
    let slope = |k: usize| (g[k + 1] - g[k]) / (s[k + 1] - s[k]);
    let mut k = kb;
    while k + 2 < s.len() {
        let (a, b) = (slope(k), slope(k + 1));
        if a > 0.0 && a >= LINEAR_REGIME * b {
            return Some((s[k] - g[k] / a).clamp(lo, s[k]));
        }
        k += 1;
    }
    Some(s[kb])
}

/// Ratio of consecutive pressure slopes accepted as the linear regime.
const LINEAR_REGIME: f64 = 0.97;

/// Level curve of a rotationally symmetric snapshot (every ray identical).
pub fn extract_level_radial(
    state: &RadialState,
    params: &FlowParams,
    epsilon: f64,
    n_theta: usize,
) -> Result<InterfaceCurve> {
    check_level(epsilon, n_theta)?;
    let g: Vec<f64> = state
        .f
        .iter()
        .map(|&v| pressure_at(v, params.beta))
        .collect();
    // a node counts as flat only while the flat run from the center continues
    let mut cls: Vec<u8> = Vec::with_capacity(state.len());
    let mut run = true;
    for &flat in &state.flat {
        run &= flat;
        cls.push(if run { 0 } else { 2 });
    }
    let gamma = ray_crossing(&state.r, &state.f, &g, &cls, epsilon);
    Ok(InterfaceCurve::from_rays(n_theta, epsilon, state.t, |_| {
        gamma
    }))
}

/// Level curve of a Cartesian snapshot in polar form about `center`. Rays
/// are sampled at half the grid spacing with bilinear interpolation.
pub fn extract_level_graph(
    state: &GraphState,
    params: &FlowParams,
    center: [f64; 2],
    epsilon: f64,
    n_theta: usize,
) -> Result<InterfaceCurve> {
    check_level(epsilon, n_theta)?;
    let grid = &state.grid;
    if grid.locate(center[0], center[1]).is_none() {
        return Err(GcfError::Domain(format!(
            "polar origin {center:?} outside the grid"
        )));
    }
    let g: Vec<f64> = state
        .f
        .iter()
        .map(|&v| pressure_at(v, params.beta))
        .collect();
    let ds = 0.5 * grid.dx.min(grid.dy);
    let (mut s, mut fv, mut gv, mut cls) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    Ok(InterfaceCurve::from_rays(n_theta, epsilon, state.t, |th| {
        s.clear();
        fv.clear();
        gv.clear();
        cls.clear();
        let (c, sn) = (th.cos(), th.sin());
        for k in 0.. {
            let sk = k as f64 * ds;
            let (x, y) = (center[0] + sk * c, center[1] + sk * sn);
            let Some(((i, j), _)) = grid.locate(x, y) else {
                break;
            };
            let corners = [
                grid.idx(i, j),
                grid.idx(i + 1, j),
                grid.idx(i, j + 1),
                grid.idx(i + 1, j + 1),
            ];
            let flats = corners.iter().filter(|&&n| state.flat[n]).count();
            s.push(sk);
            fv.push(grid.bilinear(&state.f, x, y).unwrap_or(0.0));
            gv.push(grid.bilinear(&g, x, y).unwrap_or(0.0));
            cls.push(match flats {
                4 => 0,
                0 => 2,
                _ => 1,
            });
        }
        if s.len() < 2 {
            return None;
        }
        ray_crossing(&s, &fv, &gv, &cls, epsilon)
    }))
}

fn check_level(epsilon: f64, n_theta: usize) -> Result<()> {
    if !(epsilon >= 0.0) {
        return Err(GcfError::Domain(format!(
            "level must be nonnegative, got {epsilon}"
        )));
    }
    if n_theta < 3 {
        return Err(GcfError::InsufficientData(format!(
            "need at least 3 rays, got {n_theta}"
        )));
    }
    Ok(())
}

fn check_series(series: &[InterfaceCurve], min_len: usize) -> Result<()> {
    if series.len() < min_len {
        return Err(GcfError::InsufficientData(format!(
            "need at least {min_len} curves, got {}",
            series.len()
        )));
    }
    let theta = &series[0].theta;
    if series.iter().any(|c| c.theta != *theta) {
        return Err(GcfError::Domain("curves do not share an angle grid".into()));
    }
    if series.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return Err(GcfError::Domain("curve times must increase".into()));
    }
    if series.iter().any(|c| c.partial) {
        return Err(GcfError::Domain("series contains a partial curve".into()));
    }
    Ok(())
}

/// Largest growth `gamma(t_{k+1}) - gamma(t_k)` over all rays.
fn max_increase(series: &[InterfaceCurve]) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for w in series.windows(2) {
        for (a, b) in w[0].gamma.iter().zip(&w[1].gamma) {
            worst = worst.max(b - a);
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedBand {
    pub epsilon: f64,
    /// Smallest inward speed `-d gamma / dt`.
    pub c1: f64,
    /// Largest inward speed.
    pub c2: f64,
    pub monotone: bool,
    /// Largest single-interval growth of any ray.
    pub max_increase: f64,
    /// The curve did not move at all over the window.
    pub degenerate: bool,
    pub pass: bool,
}

/// Band of inward speeds from central differences in time.
pub fn fit_speed_band(series: &[InterfaceCurve], tol: f64) -> Result<SpeedBand> {
    check_series(series, 3)?;
    let (mut c1, mut c2) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 1..series.len() - 1 {
        let (a, b) = (&series[k - 1], &series[k + 1]);
        let dt = b.t - a.t;
        for (ga, gb) in a.gamma.iter().zip(&b.gamma) {
            let v = -(gb - ga) / dt;
            c1 = c1.min(v);
            c2 = c2.max(v);
        }
    }
    let inc = max_increase(series);
    let monotone = inc <= tol;
    let degenerate = c1 == 0.0 && c2 == 0.0;
    let pass = monotone && c1 > 0.0 && c2.is_finite() && c1 <= c2;
    Ok(SpeedBand {
        epsilon: series[0].epsilon,
        c1,
        c2,
        monotone,
        max_increase: inc,
        degenerate,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub epsilon: f64,
    pub t0: f64,
    pub t_end: f64,
    /// Smallest and largest decay rate `-ln(gamma/gamma(t0)) / (t - t0)`.
    pub rate_min: f64,
    pub rate_max: f64,
    /// Least `B + A T` with `gamma <= exp(-(t-t0)/(B+AT)) gamma(t0)`.
    pub b_plus_at: f64,
    /// Least `C` with `gamma >= exp(-(t-t0)/(C t0)) gamma(t0)`.
    pub c: f64,
    /// Mean slope of the per-ray log-linear fits.
    pub fitted_rate: f64,
    /// Largest `|gamma - fit| / gamma` of the per-ray fits.
    pub fit_residual: f64,
    pub monotone: bool,
    pub pass: bool,
}

/// Fits the two-sided exponential envelope on `[t0, t_end]`. `t0` must be a
/// sample time of the series.
pub fn check_envelope(
    series: &[InterfaceCurve],
    t0: f64,
    residual_tol: f64,
    monotone_tol: f64,
) -> Result<EnvelopeReport> {
    if !(t0 > 0.0) {
        return Err(GcfError::Domain(format!(
            "envelope start t0 = {t0} must be positive"
        )));
    }
    let start = series
        .iter()
        .position(|c| (c.t - t0).abs() <= 1e-12 * t0.max(1.0))
        .ok_or_else(|| GcfError::Domain(format!("t0 = {t0} is not a sample time")))?;
    let window = &series[start..];
    check_series(window, 2)?;
    let base = &window[0];
    let (mut rate_min, mut rate_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in &window[1..] {
        for (g, g0) in c.gamma.iter().zip(&base.gamma) {
            let rate = -(g / g0).ln() / (c.t - t0);
            rate_min = rate_min.min(rate);
            rate_max = rate_max.max(rate);
        }
    }
    let (mut rate_sum, mut fit_residual) = (0.0, 0.0f64);
    let m = window.len() as f64;
    for ray in 0..base.gamma.len() {
        let ts: Vec<f64> = window.iter().map(|c| c.t - t0).collect();
        let ls: Vec<f64> = window.iter().map(|c| c.gamma[ray].ln()).collect();
        let (tm, lm) = (ts.iter().sum::<f64>() / m, ls.iter().sum::<f64>() / m);
        let sxx: f64 = ts.iter().map(|t| (t - tm).powi(2)).sum();
        let sxy: f64 = ts.iter().zip(&ls).map(|(t, l)| (t - tm) * (l - lm)).sum();
        let slope = sxy / sxx;
        rate_sum -= slope;
        for (t, l) in ts.iter().zip(&ls) {
            let fit = (lm + slope * (t - tm)).exp();
            let g = l.exp();
            fit_residual = fit_residual.max((g - fit).abs() / g);
        }
    }
    let inc = max_increase(window);
    let monotone = inc <= monotone_tol;
    let b_plus_at = if rate_min > 0.0 {
        1.0 / rate_min
    } else {
        f64::INFINITY
    };
    let c = if rate_max > 0.0 {
        1.0 / (t0 * rate_max)
    } else {
        f64::INFINITY
    };
    let pass = monotone && rate_min > 0.0 && fit_residual <= residual_tol;
    Ok(EnvelopeReport {
        epsilon: base.epsilon,
        t0,
        t_end: window[window.len() - 1].t,
        rate_min,
        rate_max,
        b_plus_at,
        c,
        fitted_rate: rate_sum / base.gamma.len() as f64,
        fit_residual,
        monotone,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    pub collar_width: f64,
    pub beta_hat: f64,
    pub r2: f64,
    pub samples: usize,
}

/// Least-squares slope of `ln y` against `ln x`, with its `R^2`.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = ly.iter().map(|a| (a - my).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    (slope, r2)
}

/// Nodes closer to the free boundary than this many grid spacings belong to
/// the smeared discrete front and are left out of exponent fits.
pub const FRONT_LAYER_CELLS: f64 = 3.0;

fn fits_from_samples(
    samples: &[(f64, f64)],
    widths: &[f64],
    inner: f64,
) -> Result<Vec<ExponentFit>> {
    widths
        .iter()
        .map(|&w| {
            let (d, f): (Vec<f64>, Vec<f64>) = samples
                .iter()
                .filter(|(d, _)| *d > inner && *d <= w)
                .cloned()
                .unzip();
            if d.len() < 10 {
                return Err(GcfError::InsufficientData(format!(
                    "{} collar nodes within width {w}",
                    d.len()
                )));
            }
            let (beta_hat, r2) = log_log_fit(&d, &f);
            Ok(ExponentFit {
                collar_width: w,
                beta_hat,
                r2,
                samples: d.len(),
            })
        })
        .collect()
}

/// Vanishing exponent of a radial snapshot for each collar width.
pub fn fit_vanishing_exponent_radial(
    state: &RadialState,
    params: &FlowParams,
    widths: &[f64],
) -> Result<Vec<ExponentFit>> {
    let gamma = extract_level_radial(state, params, 0.0, 3)?.gamma[0];
    if !(gamma > 0.0) {
        return Err(GcfError::Domain("snapshot has no flat disc".into()));
    }
    let samples: Vec<(f64, f64)> = state
        .r
        .iter()
        .zip(&state.f)
        .filter(|(_, &f)| f > 0.0)
        .map(|(&r, &f)| (r - gamma, f))
        .collect();
    let j = state
        .r
        .partition_point(|&r| r <= gamma)
        .min(state.len() - 1);
    let h = state.r[j] - state.r[j - 1];
    fits_from_samples(&samples, widths, FRONT_LAYER_CELLS * h)
}

/// Vanishing exponent of a Cartesian snapshot; distances are measured to the
/// extracted free-boundary polygon.
pub fn fit_vanishing_exponent_graph(
    state: &GraphState,
    params: &FlowParams,
    center: [f64; 2],
    widths: &[f64],
    n_theta: usize,
) -> Result<Vec<ExponentFit>> {
    let curve = extract_level_graph(state, params, center, 0.0, n_theta)?;
    if curve.partial || !(curve.min_gamma() > 0.0) {
        return Err(GcfError::Domain(
            "snapshot has no closed flat region".into(),
        ));
    }
    let grid = &state.grid;
    let mut samples = Vec::new();
    for (i, j) in grid.interior() {
        let k = grid.idx(i, j);
        if state.f[k] > 0.0 {
            let q = [grid.x(i) - center[0], grid.y(j) - center[1]];
            if !curve.contains(q) {
                samples.push((curve.distance_to(q), state.f[k]));
            }
        }
    }
    fits_from_samples(&samples, widths, FRONT_LAYER_CELLS * grid.dx.max(grid.dy))
}

/// Waiting time of the Cartesian point `p0`; same contract as
/// [`crate::radial::waiting_time_radial`]. `p0` must have a fully flat 3x3
/// node neighbourhood in the first frame.
pub fn waiting_time_2d(traj: &[GraphState], p0: [f64; 2], tol: f64) -> Result<WaitingTime> {
    let first = traj
        .first()
        .ok_or_else(|| GcfError::InsufficientData("empty trajectory".into()))?;
    let grid = &first.grid;
    let ((i, j), _) = grid
        .locate(p0[0], p0[1])
        .ok_or_else(|| GcfError::Domain(format!("P0 {p0:?} outside the grid")))?;
    let interior = i >= 1 && j >= 1 && i + 2 < grid.nx && j + 2 < grid.ny && {
        let mut all = true;
        for jj in j - 1..=j + 2 {
            for ii in i - 1..=i + 2 {
                all &= first.flat[grid.idx(ii, jj)];
            }
        }
        all
    };
    if !interior {
        return Err(GcfError::Domain(format!(
            "P0 {p0:?} is not interior to the initial flat set"
        )));
    }
    Ok(crossing_time(
        traj.iter()
            .map(|s| (s.t, s.value_at(p0[0], p0[1]).unwrap_or(0.0))),
        tol,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2;
    use crate::params::derive_exponents;

    fn shifted_square(r: f64) -> f64 {
        (r - 1.0).max(0.0).powi(2)
    }

    #[test]
    fn radial_levels() {
        let p = derive_exponents(1.0).unwrap();
        let s = RadialState::uniform(201, 2.0, shifted_square).unwrap();
        let c0 = extract_level_radial(&s, &p, 0.0, 16).unwrap();
        assert!(c0.gamma.iter().all(|g| (g - 1.0).abs() < 1e-12));
        let c1 = extract_level_radial(&s, &p, 0.04, 16).unwrap();
        assert!(c1.gamma.iter().all(|g| (g - 1.2).abs() < 1e-3));
        assert!(!c1.partial);
        let c2 = extract_level_radial(&s, &p, 5.0, 16).unwrap();
        assert!(c2.partial);
    }

    #[test]
    fn cartesian_levels() {
        let p = derive_exponents(1.0).unwrap();
        let grid = Grid2::square(161, 2.0).unwrap();
        let s = GraphState::from_fn(grid, |x, y| shifted_square(x.hypot(y))).unwrap();
        let c0 = extract_level_graph(&s, &p, [0.0, 0.0], 0.0, 64).unwrap();
        assert!(
            c0.gamma.iter().all(|g| (g - 1.0).abs() < grid.dx),
            "{:?}",
            c0.gamma
        );
        let c1 = extract_level_graph(&s, &p, [0.0, 0.0], 0.04, 64).unwrap();
        assert!(c1.gamma.iter().all(|g| (g - 1.2).abs() < 5e-3));
        assert!(c0.is_convex(1e-9) && c1.is_convex(1e-9));
    }

    #[test]
    fn ellipse_levels_are_convex() {
        let p = derive_exponents(0.75).unwrap();
        let grid = Grid2::square(161, 2.0).unwrap();
        let s =
            GraphState::from_fn(grid, |x, y| (x.hypot(1.6 * y) - 0.8).max(0.0).powf(2.5)).unwrap();
        for eps in [0.0, 0.01] {
            let c = extract_level_graph(&s, &p, [0.0, 0.0], eps, 90).unwrap();
            assert!(c.is_convex(1e-9), "eps {eps}: {}", c.convexity_defect());
            // symmetric under theta -> theta + pi
            for k in 0..45 {
                assert!((c.gamma[k] - c.gamma[k + 45]).abs() < 1e-9);
            }
        }
    }

    fn synthetic(rates: &[f64], times: &[f64]) -> Vec<InterfaceCurve> {
        times
            .iter()
            .map(|&t| {
                let n = rates.len();
                InterfaceCurve {
                    theta: (0..n).map(|k| TAU * k as f64 / n as f64).collect(),
                    gamma: rates.iter().map(|k| 0.5 * (-k * t).exp()).collect(),
                    epsilon: 0.0,
                    t,
                    partial: false,
                }
            })
            .collect()
    }

    #[test]
    fn envelope_recovers_exponential_rate() {
        let times: Vec<f64> = (0..=20).map(|k| 0.05 * k as f64).collect();
        let series = synthetic(&[0.7; 8], &times);
        let r = check_envelope(&series, 0.1, 1e-6, 1e-12).unwrap();
        assert!((r.fitted_rate - 0.7).abs() < 0.007);
        assert!((r.rate_min - 0.7).abs() < 1e-9 && (r.rate_max - 0.7).abs() < 1e-9);
        assert!(r.fit_residual < 1e-12 && r.pass);
        assert!((r.c - 1.0 / (0.1 * 0.7)).abs() < 1e-6);
    }

    #[test]
    fn envelope_flags_growth() {
        let times: Vec<f64> = (0..=10).map(|k| 0.1 * k as f64).collect();
        let mut series = synthetic(&[0.5, 0.6, 0.7], &times);
        series[6].gamma[1] *= 1.2;
        let r = check_envelope(&series, 0.2, 1.0, 1e-12).unwrap();
        assert!(!r.monotone && !r.pass);
        let band = fit_speed_band(&series, 1e-12).unwrap();
        assert!(!band.pass);
    }

    #[test]
    fn speed_band_of_stationary_curve_is_degenerate() {
        let series = synthetic(&[0.0; 4], &[0.0, 0.1, 0.2]);
        let band = fit_speed_band(&series, 1e-12).unwrap();
        assert!(band.degenerate && !band.pass);
        assert_eq!((band.c1, band.c2), (0.0, 0.0));
        assert!(fit_speed_band(&series[..2], 1e-12).is_err());
    }

    #[test]
    fn exponent_of_exact_power_law() {
        let p = derive_exponents(0.75).unwrap();
        let s = RadialState::uniform(2001, 1.5, |r| (r - 0.5).max(0.0).powf(2.5)).unwrap();
        for fit in fit_vanishing_exponent_radial(&s, &p, &[0.4, 0.2, 0.1]).unwrap() {
            assert!((fit.beta_hat - 2.5).abs() < 1e-3, "{fit:?}");
        }
        assert!(matches!(
            fit_vanishing_exponent_radial(&s, &p, &[1e-3]),
            Err(GcfError::InsufficientData(_))
        ));
    }

    #[test]
    fn cartesian_exponent_of_exact_power_law() {
        let p = derive_exponents(1.0).unwrap();
        let grid = Grid2::square(201, 1.5).unwrap();
        let s = GraphState::from_fn(grid, |x, y| (x.hypot(y) - 0.5).max(0.0).powi(2)).unwrap();
        for fit in fit_vanishing_exponent_graph(&s, &p, [0.0, 0.0], &[0.4, 0.2], 256).unwrap() {
            assert!((fit.beta_hat - 2.0).abs() < 2e-2, "{fit:?}");
        }
    }

    #[test]
    fn waiting_time_2d_rejects_convex_data() {
        let grid = Grid2::square(21, 1.0).unwrap();
        let s = GraphState::from_fn(grid, |x, y| 1.0 + x * x + y * y).unwrap();
        assert!(matches!(
            waiting_time_2d(&[s], [0.0, 0.0], 1e-12),
            Err(GcfError::Domain(_))
        ));
    }

    #[test]
    fn polygon_distance_and_containment() {
        let c = InterfaceCurve::from_rays(400, 0.0, 0.0, |_| Some(1.0));
        assert!((c.distance_to([2.0, 0.0]) - 1.0).abs() < 1e-12);
        assert!((c.distance_to([0.0, 1.5]) - 0.5).abs() < 1e-4);
        assert!(c.contains([0.5, 0.5]) && !c.contains([0.8, 0.8]));
    }
}
