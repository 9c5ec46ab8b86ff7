//! Diagnostics of the pressure near the free boundary and the band checks
//! built on them.
//!
//! Every check is evaluated on the collar `{0 < g <= g_cut}` minus the nodes
//! that have a flat node within the front layer: the discrete front smears
//! the gradient jump of `g` over a few cells, and second differences there
//! measure the smearing rather than the solution. The layer has a fixed
//! physical width so that refinement compares bands over the same region.
//! Nodes within `edge_margin` of the frozen window boundary are dropped too.

use serde::{Deserialize, Serialize};

use crate::error::{GcfError, Result};
use crate::graph::{
    gauss_curvature, p_quantity, rhs_pressure, GraphState, KConvention, PressureState,
};
use crate::grid::{sym_eigs, Derivs, Grid2};
use crate::interface::{
    check_envelope, extract_level_graph, fit_speed_band, EnvelopeReport, SpeedBand,
};
use crate::params::FlowParams;

/// Thresholds and regions for [`audit_report`]. The estimates only assert
/// that constants exist, so every bound here is configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuditConfig {
    pub g_cut: f64,
    /// Upper level of the gradient collar.
    pub gradient_cut: f64,
    /// Width of the excluded front layer.
    pub layer_width: f64,
    /// Lower bound on the layer in grid cells.
    pub layer_cells: usize,
    pub edge_margin: f64,
    pub grad_min: f64,
    pub grad_max: f64,
    pub pinch_max: f64,
    pub gt_min: f64,
    pub gt_max: f64,
    pub gtt_max: f64,
    pub ab_bound: f64,
    pub z_max: f64,
    /// `c` of the second-derivative decay bands `[c, 1/c]`.
    pub decay_c: f64,
    /// Radius `R0` in the `P` quantity.
    pub p_radius: f64,
    /// Allowed negative directional second difference of `f`.
    pub convexity_tol: f64,
    /// Polar origin for level curves.
    pub center: [f64; 2],
    pub n_theta: usize,
    pub epsilons: Vec<f64>,
    /// Start of the envelope window; `None` uses the second frame.
    pub envelope_t0: Option<f64>,
    pub envelope_residual: f64,
    /// Allowed growth of a level curve between frames.
    pub monotone_tol: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            g_cut: 0.3,
            gradient_cut: 1.0,
            layer_width: 0.075,
            layer_cells: 3,
            edge_margin: 0.25,
            grad_min: 0.5,
            grad_max: 2.0,
            pinch_max: 4.0,
            gt_min: 0.1,
            gt_max: 10.0,
            gtt_max: 20.0,
            ab_bound: 5.0,
            z_max: 10.0,
            decay_c: 0.1,
            p_radius: 2.0,
            convexity_tol: 1e-6,
            center: [0.0, 0.0],
            n_theta: 64,
            epsilons: vec![0.01],
            envelope_t0: None,
            envelope_residual: 0.05,
            monotone_tol: 1e-9,
        }
    }
}

/// Which ends of a band the estimate bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Asserted {
    Lower,
    Upper,
    Both,
    Neither,
}

impl Asserted {
    fn ends(self) -> (bool, bool) {
        match self {
            Asserted::Lower => (true, false),
            Asserted::Upper => (false, true),
            Asserted::Both => (true, true),
            Asserted::Neither => (false, false),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    /// The estimate the check probes.
    pub source: String,
    pub bound_form: String,
    pub asserted: Asserted,
    pub measured_min: f64,
    pub measured_max: f64,
    pub fitted_constant: Option<f64>,
    pub pass: bool,
    pub region: String,
    pub nodes: usize,
    pub skipped: usize,
    pub t_min: f64,
    pub t_max: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct EstimateReport {
    pub records: Vec<CheckRecord>,
}

impl EstimateReport {
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> Vec<&CheckRecord> {
        self.records.iter().filter(|r| !r.pass).collect()
    }

    pub fn get(&self, name: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.records)?)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "name,source,bound_form,asserted,measured_min,measured_max,fitted_constant,pass,region,nodes,skipped,t_min,t_max\n",
        );
        for r in &self.records {
            let fitted = r
                .fitted_constant
                .map(|v| format!("{v:e}"))
                .unwrap_or_default();
            let asserted = serde_json::to_value(r.asserted)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default();
            out.push_str(&format!(
                "{},\"{}\",\"{}\",{},{:e},{:e},{},{},\"{}\",{},{},{},{}\n",
                r.name,
                r.source,
                r.bound_form,
                asserted,
                r.measured_min,
                r.measured_max,
                fitted,
                r.pass,
                r.region,
                r.nodes,
                r.skipped,
                r.t_min,
                r.t_max
            ));
        }
        out
    }
}

/// Collar nodes of a pressure snapshot: interior, `0 < g <= g_cut`, and no
/// flat node within `layer` cells (Chebyshev distance).
pub fn collar_mask(pstate: &PressureState, g_cut: f64, layer: usize) -> Vec<bool> {
    let near = near_flat(&pstate.grid, &pstate.flat, layer);
    let grid = &pstate.grid;
    let mut mask = vec![false; grid.len()];
    for (i, j) in grid.interior() {
        let k = grid.idx(i, j);
        mask[k] = pstate.g[k] > 0.0 && pstate.g[k] <= g_cut && !near[k];
    }
    mask
}

/// Nodes of `Omega(g)` away from the front layer.
pub fn resolved_mask(pstate: &PressureState, layer: usize) -> Vec<bool> {
    collar_mask(pstate, f64::INFINITY, layer)
}

impl AuditConfig {
    /// Front layer in cells on `grid`.
    pub fn layer_on(&self, grid: &Grid2) -> usize {
        let h = grid.dx.max(grid.dy);
        self.layer_cells
            .max((self.layer_width / h - 1e-9).ceil() as usize)
    }

    /// Drops nodes within `edge_margin` of the window boundary.
    pub fn trim_edges(&self, grid: &Grid2, mask: &mut [bool]) {
        let (x1, y1) = (grid.x(grid.nx - 1), grid.y(grid.ny - 1));
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = (grid.x(i), grid.y(j));
                let d = (x - grid.x0).min(x1 - x).min(y - grid.y0).min(y1 - y);
                if d < self.edge_margin {
                    mask[grid.idx(i, j)] = false;
                }
            }
        }
    }

    pub fn collar(&self, pstate: &PressureState) -> Vec<bool> {
        let mut m = collar_mask(pstate, self.g_cut, self.layer_on(&pstate.grid));
        self.trim_edges(&pstate.grid, &mut m);
        m
    }

    pub fn resolved(&self, pstate: &PressureState) -> Vec<bool> {
        let mut m = resolved_mask(pstate, self.layer_on(&pstate.grid));
        self.trim_edges(&pstate.grid, &mut m);
        m
    }
}

fn near_flat(grid: &Grid2, flat: &[bool], layer: usize) -> Vec<bool> {
    // separable box dilation: rows, then columns
    let (nx, ny) = (grid.nx, grid.ny);
    let mut rows = vec![false; grid.len()];
    for j in 0..ny {
        for i in 0..nx {
            if flat[grid.idx(i, j)] {
                for ii in i.saturating_sub(layer)..=(i + layer).min(nx - 1) {
                    rows[grid.idx(ii, j)] = true;
                }
            }
        }
    }
    let mut out = vec![false; grid.len()];
    for j in 0..ny {
        for i in 0..nx {
            if rows[grid.idx(i, j)] {
                for jj in j.saturating_sub(layer)..=(j + layer).min(ny - 1) {
                    out[grid.idx(i, jj)] = true;
                }
            }
        }
    }
    out
}

/// Running `(min, max, count)` over masked values.
#[derive(Debug, Clone, Copy)]
pub struct Band {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub skipped: usize,
}

impl Default for Band {
    fn default() -> Self {
        Self {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            count: 0,
            skipped: 0,
        }
    }
}

impl Band {
    fn push(&mut self, v: f64) {
        if v.is_finite() {
            self.min = self.min.min(v);
            self.max = self.max.max(v);
            self.count += 1;
        } else {
            self.skipped += 1;
        }
    }

    fn merge(&mut self, other: &Band) {
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
        self.count += other.count;
        self.skipped += other.skipped;
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

fn band_over(
    pstate: &PressureState,
    mask: &[bool],
    mut eval: impl FnMut(usize, &Derivs) -> Option<f64>,
) -> Band {
    let grid = &pstate.grid;
    let mut band = Band::default();
    for (i, j) in grid.interior() {
        let k = grid.idx(i, j);
        if !mask[k] {
            continue;
        }
        let d = Derivs::at(grid, &pstate.g, i, j);
        match eval(k, &d) {
            Some(v) => band.push(v),
            None => band.skipped += 1,
        }
    }
    band
}

/// Nodes where `|Dg|` is below this have no level-set frame.
pub const FRAME_THRESHOLD: f64 = 1e-8;

/// `(min, max)` of `|Dg|` on the collar.
pub fn gradient_band(pstate: &PressureState, mask: &[bool]) -> Band {
    band_over(pstate, mask, |_, d| Some(d.grad_sq().sqrt()))
}

/// Band of `K^a / g^p` with the curvature-decay convention for `K`
/// (`det D^2 f / (1 + |Df|^2)`). Nodes with `K <= 0` are skipped.
pub fn curvature_ratio_band(
    state: &GraphState,
    pstate: &PressureState,
    params: &FlowParams,
    mask: &[bool],
    power: f64,
) -> Band {
    curvature_ratio_band_in(state, pstate, params, mask, power, KConvention::Audit)
}

/// [`curvature_ratio_band`] with an explicit curvature convention.
pub fn curvature_ratio_band_in(
    state: &GraphState,
    pstate: &PressureState,
    params: &FlowParams,
    mask: &[bool],
    power: f64,
    convention: KConvention,
) -> Band {
    let k = gauss_curvature(state, convention);
    let mut band = Band::default();
    for (n, &m) in mask.iter().enumerate() {
        if !m {
            continue;
        }
        if k.valid[n] && k.values[n] > 0.0 {
            band.push(k.values[n].powf(params.alpha) / pstate.g[n].powf(power));
        } else {
            band.skipped += 1;
        }
    }
    band
}

/// `g_tt` along level sets: `(g_y^2 g_xx - 2 g_x g_y g_xy + g_x^2 g_yy) / |Dg|^2`.
#[inline]
pub fn tangential_second(d: &Derivs) -> Option<f64> {
    let q = d.grad_sq();
    (q.sqrt() >= FRAME_THRESHOLD).then(|| tangential_numerator(d) / q)
}

#[inline]
fn tangential_numerator(d: &Derivs) -> f64 {
    d.uy * d.uy * d.uxx - 2.0 * d.ux * d.uy * d.uxy + d.ux * d.ux * d.uyy
}

pub fn tangential_band(pstate: &PressureState, mask: &[bool]) -> Band {
    band_over(pstate, mask, |_, d| tangential_second(d))
}

/// `X = g_y^2 g_xx - 2 g_x g_y g_xy + g_x^2 g_yy + g (g_xx + g_yy) + theta |Dg|^2`.
#[inline]
pub fn x_quantity(g: f64, d: &Derivs, theta: f64) -> f64 {
    tangential_numerator(d) + g * (d.uxx + d.uyy) + theta * d.grad_sq()
}

pub fn x_quantity_field(pstate: &PressureState, params: &FlowParams) -> Vec<f64> {
    let grid = &pstate.grid;
    let mut out = vec![0.0; grid.len()];
    for (i, j) in grid.interior() {
        let k = grid.idx(i, j);
        out[k] = x_quantity(
            pstate.g[k],
            &Derivs::at(grid, &pstate.g, i, j),
            params.theta,
        );
    }
    out
}

/// `|X - (g_t^{1/a} / theta + theta |Dg|^2)| / g` on the collar. The two
/// sides of the difference agree at the free boundary, so the ratio stays
/// bounded as `g -> 0`.
pub fn x_boundary_gap(pstate: &PressureState, params: &FlowParams, mask: &[bool]) -> Band {
    let gt = rhs_pressure(pstate, params);
    band_over(pstate, mask, |k, d| {
        let g = pstate.g[k];
        let x = x_quantity(g, d, params.theta);
        Some(
            (x - (gt[k].powf(1.0 / params.alpha) / params.theta + params.theta * d.grad_sq()))
                .abs()
                / g,
        )
    })
}

pub fn aronson_benilan(pstate: &PressureState, mask: &[bool]) -> Band {
    band_over(pstate, mask, |_, d| Some(d.det()))
}

/// Largest eigenvalue of `g D^2 g + theta Dg Dg^T`.
#[inline]
pub fn z_closed_form(g: f64, d: &Derivs, theta: f64) -> f64 {
    let a = g * d.uxx + theta * d.ux * d.ux;
    let b = g * d.uxy + theta * d.ux * d.uy;
    let c = g * d.uyy + theta * d.uy * d.uy;
    sym_eigs(a, b, c).1
}

/// Per-node `Z` on the given mask (0 elsewhere).
pub fn z_field(pstate: &PressureState, params: &FlowParams, mask: &[bool]) -> Vec<f64> {
    let grid = &pstate.grid;
    let mut out = vec![0.0; grid.len()];
    for (i, j) in grid.interior() {
        let k = grid.idx(i, j);
        if mask[k] {
            out[k] = z_closed_form(
                pstate.g[k],
                &Derivs::at(grid, &pstate.g, i, j),
                params.theta,
            );
        }
    }
    out
}

pub fn global_z(pstate: &PressureState, params: &FlowParams, mask: &[bool]) -> Band {
    band_over(pstate, mask, |k, d| {
        Some(z_closed_form(pstate.g[k], d, params.theta))
    })
}

/// Bands of `f_nn`, `f_tt / g^{beta-1}` and `|f_nt| / g^{(beta-1)/2}`, with
/// the frame `n = Dg/|Dg|`.
pub fn second_derivative_decay(
    state: &GraphState,
    pstate: &PressureState,
    params: &FlowParams,
    mask: &[bool],
) -> [Band; 3] {
    let grid = &state.grid;
    let mut bands = [Band::default(); 3];
    for (i, j) in grid.interior() {
        let k = grid.idx(i, j);
        if !mask[k] {
            continue;
        }
        let dg = Derivs::at(grid, &pstate.g, i, j);
        let norm = dg.grad_sq().sqrt();
        if norm < FRAME_THRESHOLD {
            bands.iter_mut().for_each(|b| b.skipped += 1);
            continue;
        }
        let (nx, ny) = (dg.ux / norm, dg.uy / norm);
        let (tx, ty) = (-ny, nx);
        let df = Derivs::at(grid, &state.f, i, j);
        let hess = |a: (f64, f64), b: (f64, f64)| {
            df.uxx * a.0 * b.0 + df.uxy * (a.0 * b.1 + a.1 * b.0) + df.uyy * a.1 * b.1
        };
        let g = pstate.g[k];
        bands[0].push(hess((nx, ny), (nx, ny)));
        bands[1].push(hess((tx, ty), (tx, ty)) / g.powf(params.beta - 1.0));
        bands[2].push(hess((nx, ny), (tx, ty)).abs() / g.powf(0.5 * (params.beta - 1.0)));
    }
    bands
}

/// Smallest second difference of `f` along the axes and diagonals over
/// non-flat interior nodes; nonnegative for any convex function.
pub fn convexity_band(state: &GraphState) -> Band {
    let grid = &state.grid;
    let f = &state.f;
    let mut band = Band::default();
    let diag = grid.dx * grid.dx + grid.dy * grid.dy;
    for (i, j) in grid.interior() {
        if state.flat[grid.idx(i, j)] {
            continue;
        }
        let c = 2.0 * f[grid.idx(i, j)];
        let second = [
            (f[grid.idx(i + 1, j)] + f[grid.idx(i - 1, j)] - c) / (grid.dx * grid.dx),
            (f[grid.idx(i, j + 1)] + f[grid.idx(i, j - 1)] - c) / (grid.dy * grid.dy),
            (f[grid.idx(i + 1, j + 1)] + f[grid.idx(i - 1, j - 1)] - c) / diag,
            (f[grid.idx(i + 1, j - 1)] + f[grid.idx(i - 1, j + 1)] - c) / diag,
        ];
        band.push(second.into_iter().fold(f64::INFINITY, f64::min));
    }
    band
}

/// Per-frame records merged over the trajectory.
struct Accum {
    band: Band,
    t_min: f64,
    t_max: f64,
}

impl Accum {
    fn new() -> Self {
        Self {
            band: Band::default(),
            t_min: f64::INFINITY,
            t_max: f64::NEG_INFINITY,
        }
    }

    fn add(&mut self, b: &Band, t: f64) {
        self.band.merge(b);
        self.t_min = self.t_min.min(t);
        self.t_max = self.t_max.max(t);
    }
}

struct Spec<'a> {
    name: &'a str,
    source: &'a str,
    bound_form: String,
    asserted: Asserted,
    region: &'a str,
}

fn record(spec: Spec, acc: &Accum, pass: impl Fn(&Band) -> bool) -> Option<CheckRecord> {
    let b = &acc.band;
    if b.is_empty() && b.skipped == 0 {
        return None;
    }
    Some(CheckRecord {
        name: spec.name.into(),
        source: spec.source.into(),
        bound_form: spec.bound_form,
        asserted: spec.asserted,
        measured_min: b.min,
        measured_max: b.max,
        fitted_constant: None,
        pass: !b.is_empty() && pass(b),
        region: spec.region.into(),
        nodes: b.count,
        skipped: b.skipped,
        t_min: acc.t_min,
        t_max: acc.t_max,
    })
}

fn curve_record(band: &SpeedBand, t_min: f64, t_max: f64) -> CheckRecord {
    CheckRecord {
        name: format!("speed_band_eps_{}", band.epsilon),
        source: "interface speed".into(),
        bound_form: "0 < C1 <= -d gamma/dt <= C2".into(),
        asserted: Asserted::Both,
        measured_min: band.c1,
        measured_max: band.c2,
        fitted_constant: Some(band.c2 / band.c1),
        pass: band.pass,
        region: format!("level {}", band.epsilon),
        nodes: 0,
        skipped: 0,
        t_min,
        t_max,
    }
}

fn envelope_record(env: &EnvelopeReport) -> CheckRecord {
    CheckRecord {
        name: format!("envelope_eps_{}", env.epsilon),
        source: "interface speed".into(),
        bound_form: "exp(-(t-t0)/(B+AT)) gamma(t0) >= gamma >= exp(-(t-t0)/(C t0)) gamma(t0)"
            .into(),
        asserted: Asserted::Both,
        measured_min: env.rate_min,
        measured_max: env.rate_max,
        fitted_constant: Some(env.fit_residual),
        pass: env.pass,
        region: format!(
            "level {}, B+AT = {:e}, C = {:e}",
            env.epsilon, env.b_plus_at, env.c
        ),
        nodes: 0,
        skipped: 0,
        t_min: env.t0,
        t_max: env.t_end,
    }
}

fn masked(values: &[f64], mask: &[bool]) -> Band {
    let mut b = Band::default();
    values
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .for_each(|(&v, _)| b.push(v));
    b
}

/// Runs every check over the trajectory. Time derivatives use central
/// differences across frames; level-curve checks need at least three frames.
pub fn audit_report(
    traj: &[GraphState],
    params: &FlowParams,
    cfg: &AuditConfig,
) -> Result<EstimateReport> {
    if traj.is_empty() {
        return Ok(EstimateReport::default());
    }
    if !(cfg.g_cut > 0.0 && cfg.gradient_cut > 0.0) {
        return Err(GcfError::Config(format!(
            "collar levels must be positive, got {} and {}",
            cfg.g_cut, cfg.gradient_cut
        )));
    }
    let pstates: Vec<PressureState> = traj
        .iter()
        .map(|s| PressureState::from_graph(s, params))
        .collect();
    let masks: Vec<Vec<bool>> = pstates.iter().map(|p| cfg.collar(p)).collect();

    let mut grad = Accum::new();
    let mut pinch = Accum::new();
    let mut pinch_theta = Accum::new();
    let mut pinch_graph = Accum::new();
    let mut tangential = Accum::new();
    let mut x_sup = Accum::new();
    let mut x_gap = Accum::new();
    let mut ab = Accum::new();
    let mut z = Accum::new();
    let mut decay = [Accum::new(), Accum::new(), Accum::new()];
    let mut p_acc = Accum::new();
    let mut convex = Accum::new();
    for ((state, ps), mask) in traj.iter().zip(&pstates).zip(&masks) {
        let t = state.t;
        let cfg_grad = AuditConfig {
            g_cut: cfg.gradient_cut,
            ..cfg.clone()
        };
        grad.add(&gradient_band(ps, &cfg_grad.collar(ps)), t);
        pinch.add(
            &curvature_ratio_band(state, ps, params, mask, params.gamma_exp),
            t,
        );
        pinch_theta.add(
            &curvature_ratio_band(state, ps, params, mask, params.theta),
            t,
        );
        pinch_graph.add(
            &curvature_ratio_band_in(
                state,
                ps,
                params,
                mask,
                params.gamma_exp,
                KConvention::Graph,
            ),
            t,
        );
        tangential.add(&tangential_band(ps, mask), t);
        x_sup.add(&masked(&x_quantity_field(ps, params), mask), t);
        x_gap.add(&x_boundary_gap(ps, params, mask), t);
        ab.add(&aronson_benilan(ps, mask), t);
        z.add(&global_z(ps, params, &cfg.resolved(ps)), t);
        for (acc, b) in decay
            .iter_mut()
            .zip(second_derivative_decay(state, ps, params, mask))
        {
            acc.add(&b, t);
        }
        let pq = p_quantity(state, cfg.p_radius);
        let mut pb = masked(&pq.values, &pq.valid);
        pb.skipped += pq.invalid_count();
        p_acc.add(&pb, t);
        convex.add(&convexity_band(state), t);
    }

    let layer = cfg.layer_on(&traj[0].grid);
    let collar = format!("0 < g <= {}, front layer {layer} cells", cfg.g_cut);
    let grad_collar = format!("0 < g <= {}, front layer {layer} cells", cfg.gradient_cut);
    let omega = format!("g > 0, front layer {layer} cells");
    let spec = |name, source, bound_form, asserted, region| Spec {
        name,
        source,
        bound_form,
        asserted,
        region,
    };
    let c = cfg.decay_c;
    let ratio_ok = |b: &Band| b.min > 0.0 && b.max / b.min <= cfg.pinch_max;
    let mut records: Vec<CheckRecord> = [
        record(
            spec(
                "gradient_band",
                "optimal gradient estimate",
                format!("{} <= |Dg| <= {}", cfg.grad_min, cfg.grad_max),
                Asserted::Both,
                &grad_collar,
            ),
            &grad,
            |b| b.min >= cfg.grad_min && b.max <= cfg.grad_max,
        ),
        record(
            spec(
                "curvature_pinching",
                "curvature decay rate",
                format!("max/min of K^a / g^(1/(2a-1)) <= {}", cfg.pinch_max),
                Asserted::Both,
                &collar,
            ),
            &pinch,
            ratio_ok,
        ),
        record(
            spec(
                "curvature_pinching_theta",
                "curvature decay rate",
                format!("max/min of K^a / g^theta <= {}", cfg.pinch_max),
                Asserted::Both,
                &collar,
            ),
            &pinch_theta,
            ratio_ok,
        ),
        record(
            spec(
                "curvature_pinching_graph",
                "curvature decay rate, graph convention",
                "K_graph = det D^2 f / (1+|Df|^2)^2; reported, not asserted".into(),
                Asserted::Neither,
                &collar,
            ),
            &pinch_graph,
            |_| true,
        ),
        record(
            spec(
                "tangential_band",
                "tangential second derivative",
                format!("0 < g_tt <= {}", cfg.gtt_max),
                Asserted::Both,
                &collar,
            ),
            &tangential,
            |b| b.min > 0.0 && b.max <= cfg.gtt_max,
        ),
        record(
            spec(
                "x_sup",
                "tangential second derivative",
                "sup X < inf".into(),
                Asserted::Upper,
                &collar,
            ),
            &x_sup,
            |b| b.max.is_finite(),
        ),
        record(
            spec(
                "x_boundary_gap",
                "tangential second derivative",
                "|X - g_t^(1/a)/theta - theta |Dg|^2| <= C g".into(),
                Asserted::Upper,
                &collar,
            ),
            &x_gap,
            |b| b.max.is_finite(),
        ),
        record(
            spec(
                "aronson_benilan",
                "Aronson-Benilan estimate",
                format!("det D^2 g >= -{}", cfg.ab_bound),
                Asserted::Lower,
                &collar,
            ),
            &ab,
            |b| b.min >= -cfg.ab_bound,
        ),
        record(
            spec(
                "global_z",
                "global bound on Z",
                format!("0 <= sup Z <= {}", cfg.z_max),
                Asserted::Upper,
                &omega,
            ),
            &z,
            |b| b.min >= 0.0 && b.max <= cfg.z_max,
        ),
        record(
            spec(
                "decay_normal",
                "second-derivative decay",
                format!("{c} <= f_nn <= {}", 1.0 / c),
                Asserted::Both,
                &collar,
            ),
            &decay[0],
            |b| b.min >= c && b.max <= 1.0 / c,
        ),
        record(
            spec(
                "decay_tangential",
                "second-derivative decay",
                format!("{c} <= f_tt / g^(beta-1) <= {}", 1.0 / c),
                Asserted::Both,
                &collar,
            ),
            &decay[1],
            |b| b.min >= c && b.max <= 1.0 / c,
        ),
        record(
            spec(
                "decay_mixed",
                "second-derivative decay",
                format!("|f_nt| / g^((beta-1)/2) <= {}", 1.0 / c),
                Asserted::Upper,
                &collar,
            ),
            &decay[2],
            |b| b.max <= 1.0 / c,
        ),
        record(
            spec(
                "p_quantity",
                "mean curvature bound",
                format!("0 < P < inf with R0 = {}", cfg.p_radius),
                Asserted::Upper,
                "non-flat interior",
            ),
            &p_acc,
            |b| b.min > 0.0 && b.max.is_finite(),
        ),
        record(
            spec(
                "convexity",
                "convexity of the graph",
                format!(
                    "min directional second difference of f >= -{}",
                    cfg.convexity_tol
                ),
                Asserted::Lower,
                "non-flat interior",
            ),
            &convex,
            |b| b.min >= -cfg.convexity_tol,
        ),
    ]
    .into_iter()
    .flatten()
    .collect();

    if traj.len() >= 3 {
        let mut gt = Accum::new();
        for k in 1..traj.len() - 1 {
            let (a, b) = (&pstates[k - 1], &pstates[k + 1]);
            let mut band = Band::default();
            for n in 0..a.g.len() {
                if masks[k][n] && masks[k - 1][n] {
                    band.push((b.g[n] - a.g[n]) / (b.t - a.t));
                }
            }
            gt.add(&band, traj[k].t);
        }
        records.extend(record(
            spec(
                "gt_band",
                "time-derivative bounds",
                format!("{} <= g_t <= {}", cfg.gt_min, cfg.gt_max),
                Asserted::Both,
                &collar,
            ),
            &gt,
            |b| b.min >= cfg.gt_min && b.max <= cfg.gt_max,
        ));
        let (t_min, t_max) = (traj[0].t, traj[traj.len() - 1].t);
        for &eps in &cfg.epsilons {
            let curves = traj
                .iter()
                .map(|s| extract_level_graph(s, params, cfg.center, eps, cfg.n_theta))
                .collect::<Result<Vec<_>>>()?;
            records.push(curve_record(
                &fit_speed_band(&curves, cfg.monotone_tol)?,
                t_min,
                t_max,
            ));
            let t0 = cfg.envelope_t0.unwrap_or(traj[1].t);
            records.push(envelope_record(&check_envelope(
                &curves,
                t0,
                cfg.envelope_residual,
                cfg.monotone_tol,
            )?));
        }
    }
    Ok(EstimateReport { records })
}

/// Movement of the asserted band endpoints of one check between two
/// resolutions, relative to the larger band magnitude of the pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndpointShift {
    pub name: String,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub stable: bool,
}

/// Compares records present in both reports; `limit` is the allowed relative
/// shift (0.1 for ten percent). `floor` bounds the magnitude from below so
/// that a band collapsing to zero under refinement is not read as unstable.
pub fn refinement_shifts(
    coarse: &EstimateReport,
    fine: &EstimateReport,
    limit: f64,
    floor: f64,
) -> Vec<EndpointShift> {
    coarse
        .records
        .iter()
        .filter_map(|a| {
            let b = fine.get(&a.name)?;
            let scale = [
                a.measured_min,
                a.measured_max,
                b.measured_min,
                b.measured_max,
            ]
            .iter()
            .fold(floor, |m, v| m.max(v.abs()));
            let shift = |x: f64, y: f64| {
                if scale > 0.0 {
                    (x - y).abs() / scale
                } else {
                    0.0
                }
            };
            let (lo, hi) = a.asserted.ends();
            let lower = lo.then(|| shift(a.measured_min, b.measured_min));
            let upper = hi.then(|| shift(a.measured_max, b.measured_max));
            let stable = lower
                .into_iter()
                .chain(upper)
                .all(|d| d.is_finite() && d < limit);
            Some(EndpointShift {
                name: a.name.clone(),
                lower,
                upper,
                stable,
            })
        })
        .collect()
}
