//! Two-dimensional graph flow `f_t = (det D^2 f)_+^a / (1+|Df|^2)^{(4a-1)/2}`,
//! its pressure form, and curvature diagnostics of the graph.
//!
//! Edge nodes are held fixed. Flat nodes stay put until their computed speed
//! exceeds [`RELEASE_THRESHOLD`].

use serde::{Deserialize, Serialize};

use crate::error::{GcfError, Result};
use crate::grid::{Derivs, Grid2};
use crate::params::{fast_pow, height_at, pressure_at, FlowParams};
use crate::radial::{EvolveOptions, RadialState, Record, MAX_CFL, RELEASE_THRESHOLD};

#[derive(Debug, Clone, PartialEq)]
pub struct GraphState {
    pub grid: Grid2,
    pub f: Vec<f64>,
    pub t: f64,
    pub flat: Vec<bool>,
}

impl GraphState {
    pub fn new(grid: Grid2, f: Vec<f64>, t: f64) -> Result<Self> {
        if f.len() != grid.len() {
            return Err(GcfError::InvalidGrid(format!(
                "{} values for {} nodes",
                f.len(),
                grid.len()
            )));
        }
        if let Some(index) = f.iter().position(|v| !(*v >= 0.0)) {
            return Err(GcfError::NegativeValue {
                index,
                value: f[index],
            });
        }
        let flat = f.iter().map(|&v| v == 0.0).collect();
        Ok(Self { grid, f, t, flat })
    }

    pub fn from_fn(grid: Grid2, profile: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let f = grid.sample(profile);
        Self::new(grid, f, 0.0)
    }

    /// Rotational lift of a radial profile (linear interpolation in `r`).
    pub fn from_radial(grid: Grid2, radial: &RadialState) -> Result<Self> {
        let f = grid.sample(|x, y| radial.value_at(x.hypot(y)));
        Self::new(grid, f, radial.t)
    }

    pub fn value_at(&self, x: f64, y: f64) -> Option<f64> {
        self.grid.bilinear(&self.f, x, y)
    }
}

/// Pressure `g = (beta f)^{1/beta}` on the grid of a [`GraphState`].
#[derive(Debug, Clone, PartialEq)]
pub struct PressureState {
    pub grid: Grid2,
    pub g: Vec<f64>,
    pub t: f64,
    pub flat: Vec<bool>,
}

impl PressureState {
    pub fn from_graph(state: &GraphState, params: &FlowParams) -> Self {
        let g = state
            .f
            .iter()
            .map(|&v| pressure_at(v, params.beta))
            .collect();
        Self {
            grid: state.grid,
            g,
            t: state.t,
            flat: state.flat.clone(),
        }
    }

    pub fn new(grid: Grid2, g: Vec<f64>, t: f64) -> Result<Self> {
        if g.len() != grid.len() {
            return Err(GcfError::InvalidGrid(format!(
                "{} values for {} nodes",
                g.len(),
                grid.len()
            )));
        }
        if let Some(index) = g.iter().position(|v| !(*v >= 0.0)) {
            return Err(GcfError::NegativeValue {
                index,
                value: g[index],
            });
        }
        let flat = g.iter().map(|&v| v == 0.0).collect();
        Ok(Self { grid, g, t, flat })
    }

    pub fn to_graph(&self, params: &FlowParams) -> GraphState {
        let f = self.g.iter().map(|&v| height_at(v, params.beta)).collect();
        GraphState {
            grid: self.grid,
            f,
            t: self.t,
            flat: self.flat.clone(),
        }
    }
}

/// Speed field plus bookkeeping from one evaluation of the height equation.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightRhs {
    pub rhs: Vec<f64>,
    /// Largest stable step at unit Courant number.
    pub dt_unit: f64,
    /// Non-flat interior nodes where `det D^2 f < 0` was clamped to zero.
    pub clamp_count: usize,
}

fn height_rhs_into(state: &GraphState, params: &FlowParams, rhs: &mut [f64]) -> (f64, usize) {
    let grid = &state.grid;
    let (alpha, slope) = (params.alpha, params.slope_exponent());
    let (ix2, iy2, ixy) = (
        1.0 / (grid.dx * grid.dx),
        1.0 / (grid.dy * grid.dy),
        1.0 / (grid.dx * grid.dy),
    );
    let mut inv_dt: f64 = 0.0;
    let mut clamps = 0;
    rhs.iter_mut().for_each(|v| *v = 0.0);
    for (i, j) in grid.interior() {
        let k = grid.idx(i, j);
        let d = Derivs::at(grid, &state.f, i, j);
        let det = d.det();
        let mut v = 0.0;
        if det > 0.0 {
            v = fast_pow(det, alpha) / fast_pow(1.0 + d.grad_sq(), slope);
        } else if det < 0.0 && !state.flat[k] {
            clamps += 1;
        }
        if v <= RELEASE_THRESHOLD && state.flat[k] {
            v = 0.0;
        }
        if v > 0.0 {
            let w = alpha * v / det;
            inv_dt = inv_dt.max(w * (d.uyy.abs() * ix2 + d.uxx.abs() * iy2 + d.uxy.abs() * ixy));
        }
        rhs[k] = v;
    }
    let dt_unit = if inv_dt == 0.0 {
        f64::INFINITY
    } else {
        1.0 / inv_dt
    };
    (dt_unit, clamps)
}

/// `f_t` per node (zero on edges and on the unreleased flat set).
pub fn rhs_height(state: &GraphState, params: &FlowParams) -> HeightRhs {
    let mut rhs = vec![0.0; state.grid.len()];
    let (dt_unit, clamp_count) = height_rhs_into(state, params, &mut rhs);
    HeightRhs {
        rhs,
        dt_unit,
        clamp_count,
    }
}

/// `g_t = [g det D^2 g + theta (g_x^2 g_yy + g_y^2 g_xx - 2 g_x g_y g_xy)]_+^a
/// / (1 + g^{2 beta - 2} |Dg|^2)^{(4a-1)/2}` at interior nodes.
pub fn rhs_pressure(pstate: &PressureState, params: &FlowParams) -> Vec<f64> {
    let grid = &pstate.grid;
    let mut out = vec![0.0; grid.len()];
    for (i, j) in grid.interior() {
        let k = grid.idx(i, j);
        let d = Derivs::at(grid, &pstate.g, i, j);
        let g = pstate.g[k];
        let q = g * d.det()
            + params.theta
                * (d.ux * d.ux * d.uyy + d.uy * d.uy * d.uxx - 2.0 * d.ux * d.uy * d.uxy);
        if q > 0.0 {
            let lift = fast_pow(g, 2.0 * params.beta - 2.0) * d.grad_sq();
            out[k] = fast_pow(q, params.alpha) / fast_pow(1.0 + lift, params.slope_exponent());
        }
    }
    out
}

pub fn stable_dt_graph(state: &GraphState, params: &FlowParams, cfl: f64) -> f64 {
    cfl * rhs_height(state, params).dt_unit
}

fn apply_step(state: &mut GraphState, rhs: &[f64], dt: f64) {
    for ((f, flat), &v) in state.f.iter_mut().zip(state.flat.iter_mut()).zip(rhs) {
        if v > 0.0 {
            *f += dt * v;
            *flat = false;
        }
    }
    state.t += dt;
}

/// One forward Euler step; refused above Courant number [`MAX_CFL`].
pub fn step_graph(state: &GraphState, dt: f64, params: &FlowParams) -> Result<GraphState> {
    let r = rhs_height(state, params);
    let limit = MAX_CFL * r.dt_unit;
    if !(dt >= 0.0) || dt > limit {
        return Err(GcfError::CflViolation { dt, limit });
    }
    let mut next = state.clone();
    apply_step(&mut next, &r.rhs, dt);
    Ok(next)
}

/// Same contract as [`crate::radial::evolve_radial`].
pub fn evolve_graph(
    initial: &GraphState,
    params: &FlowParams,
    opts: &EvolveOptions,
) -> Result<Vec<GraphState>> {
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
    let mut rhs = vec![0.0; state.grid.len()];
    let (mut next_target, mut steps) = (0, 0usize);
    let eps = 1e-12 * opts.t_end.max(1.0);
    while state.t < opts.t_end - eps {
        let (dt_unit, _) = height_rhs_into(&state, params, &mut rhs);
        let mut dt = (opts.cfl * dt_unit).min(opts.t_end - state.t);
        let mut hit = false;
        if let Some(&tk) = targets.get(next_target) {
            if state.t + dt >= tk - eps {
                dt = tk - state.t;
                hit = true;
            }
        }
        apply_step(&mut state, &rhs, dt);
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

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KConvention {
    /// `det D^2 f / (1 + |Df|^2)`, the form used by the curvature-decay audit.
    Audit,
    /// `det D^2 f / (1 + |Df|^2)^2`, the Gauss curvature of the graph.
    Graph,
}

/// A per-node diagnostic with a validity flag; invalid nodes carry 0.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeField {
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl NodeField {
    pub fn invalid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| !v).count()
    }

    pub fn valid_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .zip(&self.valid)
            .filter(|(_, &ok)| ok)
            .map(|(&v, _)| v)
    }
}

fn nodewise(
    state: &GraphState,
    mut eval: impl FnMut(usize, usize, &Derivs) -> Option<f64>,
) -> NodeField {
    let grid = &state.grid;
    let mut values = vec![0.0; grid.len()];
    let mut valid = vec![false; grid.len()];
    for (i, j) in grid.interior() {
        let k = grid.idx(i, j);
        if state.flat[k] {
            continue;
        }
        let d = Derivs::at(grid, &state.f, i, j);
        if let Some(v) = eval(i, j, &d) {
            values[k] = v;
            valid[k] = true;
        }
    }
    NodeField { values, valid }
}

/// Gauss curvature in the requested convention; flat and edge nodes are
/// reported as 0 and flagged invalid.
pub fn gauss_curvature(state: &GraphState, convention: KConvention) -> NodeField {
    nodewise(state, |_, _, d| {
        let w = 1.0 + d.grad_sq();
        Some(match convention {
            KConvention::Audit => d.det() / w,
            KConvention::Graph => d.det() / (w * w),
        })
    })
}

/// Mean curvature `div(Df / sqrt(1 + |Df|^2))` (sum of principal curvatures).
pub fn mean_curvature(state: &GraphState) -> NodeField {
    nodewise(state, |_, _, d| Some(mean_curvature_of(d)))
}

#[inline]
pub(crate) fn mean_curvature_of(d: &Derivs) -> f64 {
    let w = 1.0 + d.grad_sq();
    ((1.0 + d.uy * d.uy) * d.uxx - 2.0 * d.ux * d.uy * d.uxy + (1.0 + d.ux * d.ux) * d.uyy)
        / (w * w.sqrt())
}

/// `P = H / (psi + 4 R^2 - |X|^2)` with `X = (x, y, f)`, `psi = <X, nu>`, `nu`
/// the downward unit normal and `R^2 = max(R0^2, R0)`. Nodes with a
/// non-positive denominator are invalid.
pub fn p_quantity(state: &GraphState, r0: f64) -> NodeField {
    let grid = state.grid;
    let r_sq = (r0 * r0).max(r0);
    nodewise(state, |i, j, d| {
        let (x, y, f) = (grid.x(i), grid.y(j), state.f[grid.idx(i, j)]);
        let w = (1.0 + d.grad_sq()).sqrt();
        let psi = (x * d.ux + y * d.uy - f) / w;
        let denom = psi + 4.0 * r_sq - (x * x + y * y + f * f);
        (denom > 0.0).then(|| mean_curvature_of(d) / denom)
    })
}
