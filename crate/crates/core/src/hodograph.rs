//! Local hodograph chart `x = h(z, y, t)` near an interface point, defined by
//! `g(h(z, y, t), y, t) = z` in a frame whose first axis is the outward
//! normal. The chart turns the free boundary into `z = 0`.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{GcfError, Result};
use crate::graph::PressureState;
use crate::grid::Grid2;
use crate::params::{pressure_at, FlowParams};
use crate::radial::RadialState;

/// Continuous pressure field of one snapshot.
pub trait PressureSampler {
    fn time(&self) -> f64;
    /// `None` outside the sampled region.
    fn value(&self, p: [f64; 2]) -> Option<f64>;
    fn gradient(&self, p: [f64; 2]) -> Option<[f64; 2]>;
}

/// Cubic Hermite weights on `[0, 1]` with central-difference slopes
/// (Catmull-Rom): value and derivative weights of `p[-1..=2]`.
#[inline]
fn catmull_rom(t: f64) -> ([f64; 4], [f64; 4]) {
    let (t2, t3) = (t * t, t * t * t);
    let w = [
        0.5 * (-t + 2.0 * t2 - t3),
        0.5 * (2.0 - 5.0 * t2 + 3.0 * t3),
        0.5 * (t + 4.0 * t2 - 3.0 * t3),
        0.5 * (-t2 + t3),
    ];
    let d = [
        0.5 * (-1.0 + 4.0 * t - 3.0 * t2),
        0.5 * (-10.0 * t + 9.0 * t2),
        0.5 * (1.0 + 8.0 * t - 9.0 * t2),
        0.5 * (-2.0 * t + 3.0 * t2),
    ];
    (w, d)
}

/// Bicubic (Catmull-Rom) interpolation of a Cartesian pressure snapshot.
pub struct GridSampler<'a> {
    grid: Grid2,
    g: &'a [f64],
    t: f64,
}

impl<'a> GridSampler<'a> {
    pub fn new(pstate: &'a PressureState) -> Self {
        Self {
            grid: pstate.grid,
            g: &pstate.g,
            t: pstate.t,
        }
    }

    fn eval(&self, p: [f64; 2]) -> Option<(f64, [f64; 2])> {
        let ((i, j), (a, b)) = self.grid.locate(p[0], p[1])?;
        let (wx, dx) = catmull_rom(a);
        let (wy, dy) = catmull_rom(b);
        let clamp = |k: isize, n: usize| k.clamp(0, n as isize - 1) as usize;
        let (mut v, mut gx, mut gy) = (0.0, 0.0, 0.0);
        for (q, (wyq, dyq)) in wy.iter().zip(&dy).enumerate() {
            let jj = clamp(j as isize + q as isize - 1, self.grid.ny);
            let (mut row, mut drow) = (0.0, 0.0);
            for (r, (wxr, dxr)) in wx.iter().zip(&dx).enumerate() {
                let ii = clamp(i as isize + r as isize - 1, self.grid.nx);
                let u = self.g[self.grid.idx(ii, jj)];
                row += wxr * u;
                drow += dxr * u;
            }
            v += wyq * row;
            gx += wyq * drow;
            gy += dyq * row;
        }
        Some((v, [gx / self.grid.dx, gy / self.grid.dy]))
    }
}

impl PressureSampler for GridSampler<'_> {
    fn time(&self) -> f64 {
        self.t
    }

    fn value(&self, p: [f64; 2]) -> Option<f64> {
        self.eval(p).map(|e| e.0)
    }

    fn gradient(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        self.eval(p).map(|e| e.1)
    }
}

/// Rotationally symmetric pressure built from a radial snapshot, with cubic
/// Hermite interpolation in `r` about `center`.
pub struct RadialSampler {
    r: Vec<f64>,
    g: Vec<f64>,
    slope: Vec<f64>,
    center: [f64; 2],
    t: f64,
}

impl RadialSampler {
    pub fn new(state: &RadialState, params: &FlowParams, center: [f64; 2]) -> Self {
        let r = state.r.clone();
        let g: Vec<f64> = state
            .f
            .iter()
            .map(|&v| pressure_at(v, params.beta))
            .collect();
        let n = r.len();
        let mut slope = vec![0.0; n];
        for i in 1..n - 1 {
            slope[i] = (g[i + 1] - g[i - 1]) / (r[i + 1] - r[i - 1]);
        }
        slope[n - 1] = (g[n - 1] - g[n - 2]) / (r[n - 1] - r[n - 2]);
        Self {
            r,
            g,
            slope,
            center,
            t: state.t,
        }
    }

    fn eval_r(&self, rho: f64) -> Option<(f64, f64)> {
        let n = self.r.len();
        if !(rho >= 0.0 && rho <= self.r[n - 1]) {
            return None;
        }
        let i = self.r.partition_point(|&x| x <= rho).clamp(1, n - 1) - 1;
        let h = self.r[i + 1] - self.r[i];
        let s = (rho - self.r[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let (g0, g1, m0, m1) = (
            self.g[i],
            self.g[i + 1],
            self.slope[i] * h,
            self.slope[i + 1] * h,
        );
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * g0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * g1
            + (s3 - s2) * m1;
        let d = (6.0 * s2 - 6.0 * s) * g0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * g1
            + (3.0 * s2 - 2.0 * s) * m1;
        Some((v, d / h))
    }
}

impl PressureSampler for RadialSampler {
    fn time(&self) -> f64 {
        self.t
    }

    fn value(&self, p: [f64; 2]) -> Option<f64> {
        let rho = (p[0] - self.center[0]).hypot(p[1] - self.center[1]);
        self.eval_r(rho).map(|e| e.0)
    }

    fn gradient(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        let (dx, dy) = (p[0] - self.center[0], p[1] - self.center[1]);
        let rho = dx.hypot(dy);
        let (_, d) = self.eval_r(rho)?;
        if rho == 0.0 {
            return Some([0.0, 0.0]);
        }
        Some([d * dx / rho, d * dy / rho])
    }
}

/// Closed-form pressure, for synthetic charts.
pub struct FnSampler<F, G> {
    pub t: f64,
    pub value: F,
    pub gradient: G,
}

impl<F, G> PressureSampler for FnSampler<F, G>
where
    F: Fn([f64; 2]) -> f64,
    G: Fn([f64; 2]) -> [f64; 2],
{
    fn time(&self) -> f64 {
        self.t
    }

    fn value(&self, p: [f64; 2]) -> Option<f64> {
        Some((self.value)(p))
    }

    fn gradient(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        Some((self.gradient)(p))
    }
}

/// Rotated frame at `p0`: world point `p0 + x e1 + y e2` with `e1` along the
/// outward normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalFrame {
    pub p0: [f64; 2],
    /// Angle of `e1` from the world x axis.
    pub angle: f64,
    pub eta: f64,
    /// Measured `min g_x` and `max g_x` on the ball.
    pub gx_min: f64,
    pub gx_max: f64,
    pub samples: usize,
}

impl LocalFrame {
    pub fn to_world(&self, x: f64, y: f64) -> [f64; 2] {
        let (s, c) = self.angle.sin_cos();
        [self.p0[0] + c * x - s * y, self.p0[1] + s * x + c * y]
    }

    /// `g_x` in the frame.
    pub fn normal_derivative(&self, grad: [f64; 2]) -> f64 {
        let (s, c) = self.angle.sin_cos();
        c * grad[0] + s * grad[1]
    }
}

/// Settings for [`local_frame`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameOptions {
    /// Required band `c <= g_x <= 1/c`.
    pub c: f64,
    pub eta_max: f64,
    /// Shrink factor between trial radii.
    pub shrink: f64,
    pub eta_min: f64,
    /// Points with `g` below this are left out of the band (unresolved front).
    pub g_floor: f64,
    /// Lattice points per radius.
    pub lattice: usize,
}

impl Default for FrameOptions {
    fn default() -> Self {
        Self {
            c: 0.2,
            eta_max: 0.3,
            shrink: 0.8,
            eta_min: 0.01,
            g_floor: 0.0,
            lattice: 12,
        }
    }
}

fn ball_lattice(p0: [f64; 2], eta: f64, n: usize) -> impl Iterator<Item = [f64; 2]> {
    let step = eta / n as f64;
    let n = n as isize;
    (-n..=n).flat_map(move |j| {
        (-n..=n).filter_map(move |i| {
            let (dx, dy) = (i as f64 * step, j as f64 * step);
            (dx.hypot(dy) <= eta).then_some([p0[0] + dx, p0[1] + dy])
        })
    })
}

/// Normal direction and the largest radius `eta` (from `eta_max` down by
/// `shrink`) on which `c <= g_x <= 1/c` holds at every resolved lattice point
/// of the ball.
pub fn local_frame(
    sampler: &dyn PressureSampler,
    p0: [f64; 2],
    opts: &FrameOptions,
) -> Result<LocalFrame> {
    if !(opts.c > 0.0
        && opts.c < 1.0
        && opts.shrink > 0.0
        && opts.shrink < 1.0
        && opts.eta_min > 0.0)
    {
        return Err(GcfError::Config(format!("invalid frame options {opts:?}")));
    }
    let mut eta = opts.eta_max;
    let mut last = String::from("no trial radius");
    while eta >= opts.eta_min {
        // normal from the mean gradient over the positive part of the ball
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
        let pts: Vec<([f64; 2], [f64; 2])> = ball_lattice(p0, eta, opts.lattice)
            .filter_map(|p| {
                let v = sampler.value(p)?;
                (v > opts.g_floor).then(|| sampler.gradient(p).map(|g| (p, g)))?
            })
            .collect();
        for (_, g) in &pts {
            sx += g[0];
            sy += g[1];
            n += 1;
        }
        if n == 0 || sx.hypot(sy) == 0.0 {
            last = format!("no resolved positive points within {eta}");
            eta *= opts.shrink;
            continue;
        }
        let frame = LocalFrame {
            p0,
            angle: sy.atan2(sx),
            eta,
            gx_min: f64::INFINITY,
            gx_max: f64::NEG_INFINITY,
            samples: n,
        };
        let (lo, hi) = pts
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, g)| {
                let gx = frame.normal_derivative(*g);
                (lo.min(gx), hi.max(gx))
            });
        if lo >= opts.c && hi <= 1.0 / opts.c {
            return Ok(LocalFrame {
                gx_min: lo,
                gx_max: hi,
                ..frame
            });
        }
        last = format!("g_x in [{lo:.4e}, {hi:.4e}] within {eta:.4e}");
        eta *= opts.shrink;
    }
    Err(GcfError::PatchRefused(format!(
        "no radius satisfies {} <= g_x <= {}: {last}",
        opts.c,
        1.0 / opts.c
    )))
}

/// Samples of the chart on `{0 <= z <= eta^2, |y| <= eta}` at the snapshot
/// times. `h` is `NaN` at nodes outside the chart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HodographPatch {
    pub frame: LocalFrame,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    pub t: Vec<f64>,
    pub h: Vec<f64>,
    pub roundtrip_max: f64,
    pub outside: usize,
}

impl HodographPatch {
    #[inline]
    pub fn idx(&self, m: usize, j: usize, k: usize) -> usize {
        (m * self.y.len() + j) * self.z.len() + k
    }

    pub fn at(&self, m: usize, j: usize, k: usize) -> f64 {
        self.h[self.idx(m, j, k)]
    }

    /// Smallest `h_z` (one-sided at the ends of the `z` grid).
    pub fn min_hz(&self) -> f64 {
        let nz = self.z.len();
        let mut lo = f64::INFINITY;
        for m in 0..self.t.len() {
            for j in 0..self.y.len() {
                for k in 0..nz - 1 {
                    let d = (self.at(m, j, k + 1) - self.at(m, j, k)) / (self.z[k + 1] - self.z[k]);
                    if d.is_finite() {
                        lo = lo.min(d);
                    }
                }
            }
        }
        lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchSpec {
    pub nz: usize,
    pub ny: usize,
}

/// Tolerance of the root solve in `x`.
pub const ROOT_TOL: f64 = 1e-12;

/// Solves `g(x, y) = z` for `x` in `[-2 eta, 2 eta]` along the frame's first
/// axis: bisection on `g > z`, then Newton with the sampler's gradient.
fn solve_chart(sampler: &dyn PressureSampler, frame: &LocalFrame, z: f64, y: f64) -> Option<f64> {
    let eval = |x: f64| sampler.value(frame.to_world(x, y));
    let (mut lo, mut hi) = (-2.0 * frame.eta, 2.0 * frame.eta);
    if eval(lo)? > z || eval(hi)? <= z {
        return None;
    }
    // bracket to a few ulps of the scale for z = 0, coarser otherwise
    let target = if z > 0.0 { 1e-6 * frame.eta } else { ROOT_TOL };
    while hi - lo > target {
        let mid = 0.5 * (lo + hi);
        if eval(mid)? > z {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if z <= 0.0 {
        return Some(lo);
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..50 {
        let p = frame.to_world(x, y);
        let gx = frame.normal_derivative(sampler.gradient(p)?);
        let step = (sampler.value(p)? - z) / gx;
        if !step.is_finite() {
            break;
        }
        let next = (x - step).clamp(lo, hi);
        let done = (next - x).abs() <= ROOT_TOL;
        x = next;
        if done {
            // one more step reaches the rounding floor
            let p = frame.to_world(x, y);
            let gx = frame.normal_derivative(sampler.gradient(p)?);
            let step = (sampler.value(p)? - z) / gx;
            if step.is_finite() && step.abs() <= ROOT_TOL {
                x -= step;
            }
            return Some(x);
        }
    }
    // Newton stalled: finish by bisection
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if eval(mid)? > z {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Builds the chart over the snapshots whose times lie in
/// `[t0 - eta^2, t0]`, with `t0` the latest snapshot time. The `z` grid is
/// uniform in `sqrt(z)`.
pub fn build_patch(
    samplers: &[&dyn PressureSampler],
    frame: &LocalFrame,
    spec: &PatchSpec,
) -> Result<HodographPatch> {
    if spec.nz < 3 || spec.ny < 3 {
        return Err(GcfError::InvalidGrid(format!(
            "patch needs at least 3x3 nodes, got {}x{}",
            spec.nz, spec.ny
        )));
    }
    let t0 = samplers
        .iter()
        .map(|s| s.time())
        .fold(f64::NEG_INFINITY, f64::max);
    if !t0.is_finite() {
        return Err(GcfError::InsufficientData("no snapshots".into()));
    }
    let eta = frame.eta;
    let mut frames: Vec<&dyn PressureSampler> = samplers
        .iter()
        .copied()
        .filter(|s| s.time() >= t0 - eta * eta - 1e-12 * t0.abs().max(1.0))
        .collect();
    frames.sort_by(|a, b| a.time().total_cmp(&b.time()));
    let z: Vec<f64> = (0..spec.nz)
        .map(|k| (eta * k as f64 / (spec.nz - 1) as f64).powi(2))
        .collect();
    let y: Vec<f64> = (0..spec.ny)
        .map(|j| -eta + 2.0 * eta * j as f64 / (spec.ny - 1) as f64)
        .collect();
    let mut h = Vec::with_capacity(frames.len() * spec.ny * spec.nz);
    let (mut roundtrip_max, mut outside) = (0.0f64, 0usize);
    for s in &frames {
        for &yj in &y {
            for &zk in &z {
                match solve_chart(*s, frame, zk, yj) {
                    Some(x) => {
                        let back = s.value(frame.to_world(x, yj)).unwrap_or(f64::NAN);
                        roundtrip_max = roundtrip_max.max((back - zk).abs());
                        h.push(x);
                    }
                    None => {
                        outside += 1;
                        h.push(f64::NAN);
                    }
                }
            }
        }
    }
    Ok(HodographPatch {
        frame: *frame,
        z,
        y,
        t: frames.iter().map(|s| s.time()).collect(),
        h,
        roundtrip_max,
        outside,
    })
}

/// Three-point weights for the first and second derivative at `x[1]` on
/// arbitrary nodes `x[0..3]` (evaluated at `at`).
fn weights3(x: [f64; 3], at: f64) -> ([f64; 3], [f64; 3]) {
    let mut d1 = [0.0; 3];
    let mut d2 = [0.0; 3];
    for i in 0..3 {
        let (a, b) = ((i + 1) % 3, (i + 2) % 3);
        let den = (x[i] - x[a]) * (x[i] - x[b]);
        d1[i] = ((at - x[a]) + (at - x[b])) / den;
        d2[i] = 2.0 / den;
    }
    (d1, d2)
}

/// Derivatives of `h` and the coefficients of the linearized operator at one
/// chart node.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct NodeCoefficients {
    pub z: f64,
    pub y: f64,
    pub t: f64,
    pub h: f64,
    pub hz: f64,
    pub hy: f64,
    pub hzz: f64,
    pub hzy: f64,
    pub hyy: f64,
    pub ht: f64,
    pub kh: f64,
    pub j: f64,
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
    pub b: f64,
    pub btilde1: f64,
    pub btilde2: f64,
    /// `h_t + K_h^a / J^{(4a-1)/2}`.
    pub residual: f64,
    /// Same with `z^2` in place of `z^{2(beta-1)}` in `J`.
    pub residual_variant: f64,
    /// `K_h <= 0`: the linearization degenerates.
    pub degenerate: bool,
}

/// Coefficient fields on every node whose stencil lies inside the chart
/// (`y` interior nodes; all `z` nodes; time levels with a past snapshot).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientField {
    pub nodes: Vec<NodeCoefficients>,
    pub degenerate: usize,
}

pub fn coefficients(patch: &HodographPatch, params: &FlowParams) -> CoefficientField {
    let (nz, ny, nt) = (patch.z.len(), patch.y.len(), patch.t.len());
    let alpha = params.alpha;
    let theta = params.theta;
    let s = 0.5 * (4.0 * alpha - 1.0);
    let mut nodes = Vec::new();
    let mut degenerate = 0;
    let zw: Vec<([usize; 3], [f64; 3], [f64; 3])> = (0..nz)
        .map(|k| {
            let c = k.clamp(1, nz - 2);
            let ids = [c - 1, c, c + 1];
            let (d1, d2) = weights3(ids.map(|i| patch.z[i]), patch.z[k]);
            (ids, d1, d2)
        })
        .collect();
    let dy = patch.y[1] - patch.y[0];
    for m in 1..nt {
        // backward differences in time: second order with two past levels
        let tw: Vec<(usize, f64)> = if m >= 2 {
            let (d1, _) = weights3([patch.t[m - 2], patch.t[m - 1], patch.t[m]], patch.t[m]);
            vec![(m - 2, d1[0]), (m - 1, d1[1]), (m, d1[2])]
        } else {
            let w = 1.0 / (patch.t[m] - patch.t[m - 1]);
            vec![(m - 1, -w), (m, w)]
        };
        for j in 1..ny - 1 {
            for k in 0..nz {
                let (ids, d1, d2) = zw[k];
                let hz_at = |jj: usize| {
                    ids.iter()
                        .zip(&d1)
                        .map(|(&i, w)| w * patch.at(m, jj, i))
                        .sum::<f64>()
                };
                let hz = hz_at(j);
                let hzz: f64 = ids
                    .iter()
                    .zip(&d2)
                    .map(|(&i, w)| w * patch.at(m, j, i))
                    .sum();
                let (hm, h0, hp) = (
                    patch.at(m, j - 1, k),
                    patch.at(m, j, k),
                    patch.at(m, j + 1, k),
                );
                let hy = (hp - hm) / (2.0 * dy);
                let hyy = (hp - 2.0 * h0 + hm) / (dy * dy);
                let hzy = (hz_at(j + 1) - hz_at(j - 1)) / (2.0 * dy);
                let ht: f64 = tw.iter().map(|&(mm, w)| w * patch.at(mm, j, k)).sum();
                if ![hz, hzz, hy, hyy, hzy, ht].iter().all(|v| v.is_finite()) {
                    continue;
                }
                let z = patch.z[k];
                let zp = z.powf(2.0 * (params.beta - 1.0));
                let kh = z * (hzz * hyy - hzy * hzy) - theta * hz * hyy;
                let jj = zp + hz * hz + zp * hy * hy;
                let kpos = kh.max(0.0);
                let rhs = kpos.powf(alpha) / jj.powf(s);
                let j_var = z * z + hz * hz + z * z * hy * hy;
                let deg = kh <= 0.0;
                if deg {
                    degenerate += 1;
                }
                let (b, bt1, bt2) = if deg {
                    (f64::NAN, f64::NAN, f64::NAN)
                } else {
                    let jd = jj.powf(s + 1.0);
                    let ka = kh.powf(alpha);
                    let km1 = kh.powf(alpha - 1.0);
                    let b = ((4.0 * alpha - 1.0) * ka * hz
                        + alpha * km1 * theta * (hz * hz + zp * (1.0 + hy * hy)) * hyy)
                        / jd;
                    let bt1 = b - alpha * theta * km1 * jj * hyy / jd;
                    let bt2 = (4.0 * alpha - 1.0) * zp * ka * hy / jd;
                    (b, bt1, bt2)
                };
                nodes.push(NodeCoefficients {
                    z,
                    y: patch.y[j],
                    t: patch.t[m],
                    h: h0,
                    hz,
                    hy,
                    hzz,
                    hzy,
                    hyy,
                    ht,
                    kh,
                    j: jj,
                    a11: -hyy,
                    a12: z.sqrt() * hzy,
                    a22: theta * hz - z * hzz,
                    b,
                    btilde1: bt1,
                    btilde2: bt2,
                    residual: ht + rhs,
                    residual_variant: ht + kpos.powf(alpha) / j_var.powf(s),
                    degenerate: deg,
                });
            }
        }
    }
    CoefficientField { nodes, degenerate }
}

impl CoefficientField {
    /// Largest `|residual|` over nodes with `z >= z_min` at time levels with
    /// two past snapshots (or one, if that is all there is).
    pub fn sup_residual(&self, z_min: f64) -> f64 {
        self.sup_of(z_min, |n| n.residual.abs())
    }

    pub fn sup_residual_variant(&self, z_min: f64) -> f64 {
        self.sup_of(z_min, |n| n.residual_variant.abs())
    }

    fn sup_of(&self, z_min: f64, f: impl Fn(&NodeCoefficients) -> f64) -> f64 {
        self.nodes
            .iter()
            .filter(|n| n.z >= z_min && n.z > 0.0)
            .map(f)
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("z,y,t,h,a11,a12,a22,b,btilde1,btilde2,Kh,residual\n");
        for n in &self.nodes {
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
                n.z,
                n.y,
                n.t,
                n.h,
                n.a11,
                n.a12,
                n.a22,
                n.b,
                n.btilde1,
                n.btilde2,
                n.kh,
                n.residual
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllipticityReport {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Eigenvalue range of the scaled matrix `a_ij a K_h^{a-1} / J^{(4a-1)/2}`.
    pub tilde_lambda_min: f64,
    pub tilde_lambda_max: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub btilde1_min: f64,
    pub btilde2_abs_max: f64,
    pub nodes: usize,
    pub degenerate: usize,
    pub pass: bool,
}

/// Eigenvalue range of `(a_ij)` over all nodes with `z >= z_min`, and drift
/// ranges over the nondegenerate ones. PASS iff `lambda_min >= lambda` and
/// `min btilde1 >= nu > 0`.
pub fn ellipticity_check(
    field: &CoefficientField,
    params: &FlowParams,
    z_min: f64,
    lambda: f64,
    nu: f64,
) -> EllipticityReport {
    let s = 0.5 * (4.0 * params.alpha - 1.0);
    let mut r = EllipticityReport {
        lambda_min: f64::INFINITY,
        lambda_max: f64::NEG_INFINITY,
        tilde_lambda_min: f64::INFINITY,
        tilde_lambda_max: f64::NEG_INFINITY,
        b_min: f64::INFINITY,
        b_max: f64::NEG_INFINITY,
        btilde1_min: f64::INFINITY,
        btilde2_abs_max: 0.0,
        nodes: 0,
        degenerate: 0,
        pass: false,
    };
    for n in field.nodes.iter().filter(|n| n.z >= z_min) {
        let (lo, hi) = crate::grid::sym_eigs(n.a11, n.a12, n.a22);
        r.lambda_min = r.lambda_min.min(lo);
        r.lambda_max = r.lambda_max.max(hi);
        r.nodes += 1;
        if n.degenerate {
            r.degenerate += 1;
            continue;
        }
        let scale = params.alpha * n.kh.powf(params.alpha - 1.0) / n.j.powf(s);
        r.tilde_lambda_min = r.tilde_lambda_min.min(scale * lo);
        r.tilde_lambda_max = r.tilde_lambda_max.max(scale * hi);
        r.b_min = r.b_min.min(n.b);
        r.b_max = r.b_max.max(n.b);
        r.btilde1_min = r.btilde1_min.min(n.btilde1);
        r.btilde2_abs_max = r.btilde2_abs_max.max(n.btilde2.abs());
    }
    r.pass = r.nodes > 0 && r.lambda_min >= lambda && nu > 0.0 && r.btilde1_min >= nu;
    r
}

/// Point of the chart domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SPoint {
    pub z: f64,
    pub y: f64,
    pub t: f64,
}

/// `|sqrt z1 - sqrt z2| + |y1 - y2| + sqrt |t1 - t2|`.
pub fn s_distance(q1: SPoint, q2: SPoint) -> Result<f64> {
    for q in [q1, q2] {
        if !(q.z >= 0.0) {
            return Err(GcfError::Domain(format!(
                "z must be nonnegative, got {}",
                q.z
            )));
        }
    }
    Ok((q1.z.sqrt() - q2.z.sqrt()).abs() + (q1.y - q2.y).abs() + (q1.t - q2.t).abs().sqrt())
}

/// Largest `|u(Q1) - u(Q2)| / s(Q1, Q2)^gamma` over `pairs` pairs drawn with
/// `seed` (all pairs if there are fewer). Coincident pairs are skipped.
pub fn holder_seminorm(
    points: &[SPoint],
    values: &[f64],
    gamma: f64,
    pairs: usize,
    seed: u64,
) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(GcfError::Domain(format!(
            "gamma must lie in (0, 1), got {gamma}"
        )));
    }
    if points.len() != values.len() {
        return Err(GcfError::InsufficientData(format!(
            "{} points for {} values",
            points.len(),
            values.len()
        )));
    }
    let n = points.len();
    let total = n * n.saturating_sub(1) / 2;
    let ratio = |a: usize, b: usize| -> Result<Option<f64>> {
        let d = s_distance(points[a], points[b])?;
        if d == 0.0 || !values[a].is_finite() || !values[b].is_finite() {
            return Ok(None);
        }
        Ok(Some((values[a] - values[b]).abs() / d.powf(gamma)))
    };
    let mut best = 0.0f64;
    if total <= pairs {
        for a in 0..n {
            for b in a + 1..n {
                if let Some(v) = ratio(a, b)? {
                    best = best.max(v);
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in sample(&mut rng, total, pairs) {
            let (a, b) = unrank_pair(k, n);
            if let Some(v) = ratio(a, b)? {
                best = best.max(v);
            }
        }
    }
    Ok(best)
}

/// Pair `(a, b)` with `a < b` at position `k` of the row-major upper triangle.
fn unrank_pair(mut k: usize, n: usize) -> (usize, usize) {
    let mut a = 0;
    while k >= n - 1 - a {
        k -= n - 1 - a;
        a += 1;
    }
    (a, a + 1 + k)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeminormReport {
    pub gamma: f64,
    pub pairs: usize,
    pub seed: u64,
    pub z_min: f64,
    pub entries: Vec<(String, f64)>,
}

/// Seminorms of `h_z, h_y, h_t, z h_zz, z sqrt(z) h_zy, h_yy` over
/// nondegenerate nodes with `z >= z_min`.
pub fn chart_seminorms(
    field: &CoefficientField,
    gamma: f64,
    pairs: usize,
    seed: u64,
    z_min: f64,
) -> Result<SeminormReport> {
    let nodes: Vec<&NodeCoefficients> = field.nodes.iter().filter(|n| n.z >= z_min).collect();
    let points: Vec<SPoint> = nodes
        .iter()
        .map(|n| SPoint {
            z: n.z,
            y: n.y,
            t: n.t,
        })
        .collect();
    let fields: [(&str, fn(&NodeCoefficients) -> f64); 6] = [
        ("h_z", |n| n.hz),
        ("h_y", |n| n.hy),
        ("h_t", |n| n.ht),
        ("z h_zz", |n| n.z * n.hzz),
        ("z sqrt(z) h_zy", |n| n.z * n.z.sqrt() * n.hzy),
        ("h_yy", |n| n.hyy),
    ];
    let mut entries = Vec::new();
    for (name, f) in fields {
        let values: Vec<f64> = nodes.iter().map(|n| f(n)).collect();
        entries.push((
            name.to_string(),
            holder_seminorm(&points, &values, gamma, pairs, seed)?,
        ));
    }
    Ok(SeminormReport {
        gamma,
        pairs,
        seed,
        z_min,
        entries,
    })
}
