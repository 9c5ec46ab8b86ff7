//! Reports built on top of a scenario or an artifact directory: audit,
//! waiting time, hodograph charts, convergence and the sphere check.

use std::path::Path;

use gcf_core::audit::CheckRecord;
use gcf_core::graph::{stable_dt_graph, step_graph, GraphState, PressureState};
use gcf_core::grid::Grid2;
use gcf_core::hodograph::{
    build_patch, chart_seminorms, coefficients, ellipticity_check, local_frame, EllipticityReport,
    FrameOptions, GridSampler, PatchSpec, PressureSampler, RadialSampler, SeminormReport,
};
use gcf_core::interface::{extract_level_graph, extract_level_radial, waiting_time_2d};
use gcf_core::radial::{
    crossing_time, evolve_radial, sphere_radius, verify_supersolution, waiting_time_radial,
    EvolveOptions, RadialState, Record,
};
use gcf_core::{FlowParams, GcfError, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::artifacts::{load_frames, ArtifactWriter, Frames, Stamped, Table};
use crate::run::{evolve, level_curves, run_audit, write_audit};
use crate::scenario::{Geometry, Profile, Scenario, SphereSpec};

/// Audit of a stored trajectory; `check` keeps records whose name contains
/// the filter.
#[derive(Debug, Clone, Serialize)]
pub struct AuditOutcome {
    pub records: Vec<CheckRecord>,
    pub pass: bool,
}

pub fn audit_dir(dir: &Path, check: Option<&str>) -> Result<AuditOutcome> {
    let (m, frames) = load_frames(dir)?;
    let params = m.scenario.params()?;
    let report = run_audit(&m.scenario, &params, &frames)?;
    let mut w = ArtifactWriter::create(dir, &m.scenario_sha256)?;
    write_audit(&mut w, &report)?;
    let records: Vec<CheckRecord> = report
        .records
        .into_iter()
        .filter(|r| check.is_none_or(|c| r.name.contains(c)))
        .collect();
    if let (Some(c), true) = (check, records.is_empty()) {
        return Err(GcfError::Config(format!("no audit check matches {c:?}")));
    }
    let pass = records.iter().all(|r| r.pass);
    Ok(AuditOutcome { records, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct WaitingRun {
    pub cfl: f64,
    pub t_star: f64,
    pub released: bool,
    /// Length of the step that straddles `t*`.
    pub step_at_crossing: f64,
    /// Smallest free-boundary radius over frames with `t <= t*/2`.
    pub min_flat_radius: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BarrierSummary {
    pub c_scale: f64,
    pub big_t: f64,
    pub min_residual: f64,
    pub argmin_r: f64,
    pub argmin_t: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct WaitingReport {
    pub probe: [f64; 2],
    pub tol: f64,
    pub runs: Vec<WaitingRun>,
    pub t_star_shift: f64,
    pub shift_within_one_step: bool,
    pub flat_min: f64,
    pub flat_radius_ok: bool,
    pub positive: bool,
    pub barrier: BarrierSummary,
    pub pass: bool,
}

fn waiting_run(scenario: &Scenario, params: &FlowParams, cfl: f64) -> Result<WaitingRun> {
    let spec = scenario.waiting.as_ref().expect("checked by caller");
    match scenario.geometry {
        Geometry::Radial { n, r_max, .. } => {
            let s = RadialState::uniform(n, r_max, scenario.profile.radial(params).unwrap())?;
            let traj = evolve_radial(&s, params, &EvolveOptions::every_step(spec.t_end, cfl))?;
            let p0 = spec.probe[0].hypot(spec.probe[1]);
            let w = waiting_time_radial(&traj, p0, spec.tol)?;
            let k = traj
                .iter()
                .position(|s| s.t > w.t_star)
                .unwrap_or(traj.len() - 1)
                .max(1);
            let mut min_flat = f64::INFINITY;
            for s in traj.iter().filter(|s| s.t <= 0.5 * w.t_star) {
                min_flat = min_flat.min(extract_level_radial(s, params, 0.0, 3)?.gamma[0]);
            }
            Ok(WaitingRun {
                cfl,
                t_star: w.t_star,
                released: w.released,
                step_at_crossing: traj[k].t - traj[k - 1].t,
                min_flat_radius: min_flat,
                steps: traj.len() - 1,
            })
        }
        Geometry::Graph2d { n, half_width } => {
            // stream the steps: only the probe series and the curve radii are kept
            let first = GraphState::from_fn(
                Grid2::square(n, half_width)?,
                scenario.profile.planar(params),
            )?;
            waiting_time_2d(std::slice::from_ref(&first), spec.probe, spec.tol)?;
            let center = scenario.interface.center;
            let probe = |s: &GraphState| s.value_at(spec.probe[0], spec.probe[1]).unwrap_or(0.0);
            let mut series = vec![(first.t, probe(&first))];
            let mut radii = vec![(
                first.t,
                extract_level_graph(&first, params, center, 0.0, 64)?.min_gamma(),
            )];
            let mut state = first;
            let mut steps = 0;
            while state.t < spec.t_end {
                let dt = stable_dt_graph(&state, params, cfl).min(spec.t_end - state.t);
                state = step_graph(&state, dt, params)?;
                steps += 1;
                series.push((state.t, probe(&state)));
                radii.push((
                    state.t,
                    extract_level_graph(&state, params, center, 0.0, 64)?.min_gamma(),
                ));
                if series[series.len() - 1].1 > spec.tol {
                    break;
                }
            }
            let w = crossing_time(series.iter().copied(), spec.tol);
            let k = series.len() - 1;
            let min_flat = radii
                .iter()
                .filter(|(t, _)| *t <= 0.5 * w.t_star)
                .map(|r| r.1)
                .fold(f64::INFINITY, f64::min);
            Ok(WaitingRun {
                cfl,
                t_star: w.t_star,
                released: w.released,
                step_at_crossing: series[k].0 - series[k.saturating_sub(1)].0,
                min_flat_radius: min_flat,
                steps,
            })
        }
    }
}

/// Waiting time at `cfl` and `cfl/2`, flat-radius persistence and the
/// barrier residual scan. Writes `waiting.json` and `supersolution.csv`.
pub fn waiting(scenario: &Scenario, out: &Path) -> Result<WaitingReport> {
    let spec = scenario
        .waiting
        .as_ref()
        .ok_or_else(|| GcfError::MissingInput("scenario section \"waiting\"".into()))?;
    let params = scenario.params()?;
    let (a, b) = rayon::join(
        || waiting_run(scenario, &params, scenario.cfl),
        || waiting_run(scenario, &params, 0.5 * scenario.cfl),
    );
    let runs = vec![a?, b?];
    let bs = &spec.barrier;
    let scan = verify_supersolution(
        &params,
        &bs.radii(),
        &bs.times(),
        bs.big_t,
        bs.c_scale,
        bs.tol,
    )?;
    let shift = (runs[0].t_star - runs[1].t_star).abs();
    let flat_ok = runs.iter().all(|r| r.min_flat_radius >= spec.flat_min);
    let positive = runs.iter().all(|r| r.released && r.t_star > 0.0);
    let within = shift <= runs[0].step_at_crossing;
    let barrier = BarrierSummary {
        c_scale: scan.c_scale,
        big_t: bs.big_t,
        min_residual: scan.min_residual,
        argmin_r: scan.argmin_r,
        argmin_t: scan.argmin_t,
        tolerance: scan.tolerance,
        samples: scan.samples.len(),
        pass: scan.pass,
    };
    let report = WaitingReport {
        probe: spec.probe,
        tol: spec.tol,
        pass: positive && flat_ok && within && barrier.pass,
        runs,
        t_star_shift: shift,
        shift_within_one_step: within,
        flat_min: spec.flat_min,
        flat_radius_ok: flat_ok,
        positive,
        barrier,
    };
    let hash = scenario.sha256();
    let mut w = ArtifactWriter::create(out, &hash)?;
    w.write_json(
        "waiting.json",
        &Stamped {
            scenario_sha256: &hash,
            body: &report,
        },
    )?;
    let mut t = Table::new(&hash, &["r", "t", "residual"]);
    for s in &scan.samples {
        t.row(&[s.r, s.t, s.residual]);
    }
    w.write("supersolution.csv", t.finish().as_bytes())?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct ChartTarget {
    pub angle: f64,
    pub p0: [f64; 2],
    pub eta: f64,
    pub gx_min: f64,
    pub gx_max: f64,
    pub nz: usize,
    pub ny: usize,
    pub roundtrip_max: f64,
    pub outside: usize,
    pub nodes: usize,
    pub degenerate: usize,
    pub sup_residual: f64,
    /// Residual of the alternative denominator grouping `z^2` in place of
    /// `z^(2(beta-1))`; the two agree only for `beta = 2`.
    pub sup_residual_variant: f64,
    pub ellipticity: EllipticityReport,
    pub seminorms: SeminormReport,
    pub file: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct HodographReport {
    pub t0: f64,
    pub snapshot_times: Vec<f64>,
    pub spacing: f64,
    pub z_min: f64,
    pub targets: Vec<ChartTarget>,
    pub pass: bool,
}

/// Builds one chart per target angle on `Gamma(t0)`. Snapshots at
/// `t0 - 2 d, t0 - d, t0` with `d = dt_factor h^2` are produced by re-running
/// the scenario. Writes `hodograph.json` and `hodograph_<k>.csv`.
pub fn hodograph(scenario: &Scenario, out: &Path) -> Result<HodographReport> {
    let spec = scenario
        .hodograph
        .as_ref()
        .ok_or_else(|| GcfError::MissingInput("scenario section \"hodograph\"".into()))?;
    let params = scenario.params()?;
    let h = scenario.spacing();
    let d = spec.dt_factor * h * h;
    if !(spec.t0 - 2.0 * d > 0.0) {
        return Err(GcfError::Config(format!(
            "hodograph t0 = {} leaves no room for snapshots spaced {d}",
            spec.t0
        )));
    }
    let times = vec![spec.t0 - 2.0 * d, spec.t0 - d, spec.t0];
    let frames = evolve(scenario, &params, times.clone())?;
    let last_curve = level_curves(scenario, &params, &frames, 0.0)?
        .pop()
        .expect("at least one frame");
    let opts = FrameOptions {
        c: spec.c,
        eta_max: spec.eta_max,
        g_floor: spec.g_floor,
        ..FrameOptions::default()
    };
    let m = (spec.patch_span / h).round().max(4.0) as usize;
    let patch_spec = PatchSpec {
        nz: m / 2 + 1,
        ny: m + 1,
    };
    let center = scenario.interface.center;
    let radial: Vec<RadialSampler>;
    let pstates: Vec<PressureState>;
    let grid_samplers: Vec<GridSampler>;
    let samplers: Vec<&dyn PressureSampler> = match &frames {
        Frames::Radial(v) => {
            radial = v[1..]
                .iter()
                .map(|s| RadialSampler::new(s, &params, center))
                .collect();
            radial.iter().map(|s| s as &dyn PressureSampler).collect()
        }
        Frames::Planar(v) => {
            pstates = v[1..]
                .iter()
                .map(|s| PressureState::from_graph(s, &params))
                .collect();
            grid_samplers = pstates.iter().map(GridSampler::new).collect();
            grid_samplers
                .iter()
                .map(|s| s as &dyn PressureSampler)
                .collect()
        }
    };
    let hash = scenario.sha256();
    let mut w = ArtifactWriter::create(out, &hash)?;
    let mut targets = Vec::new();
    for (k, &angle) in spec.angles.iter().enumerate() {
        let r = last_curve.radius_at(angle);
        let p0 = [center[0] + r * angle.cos(), center[1] + r * angle.sin()];
        let frame = local_frame(*samplers.last().unwrap(), p0, &opts)?;
        let patch = build_patch(&samplers, &frame, &patch_spec)?;
        let field = coefficients(&patch, &params);
        let ellipticity = ellipticity_check(&field, &params, spec.z_min, spec.lambda, spec.nu);
        let seminorms = chart_seminorms(&field, spec.gamma, spec.pairs, spec.seed, spec.z_min)?;
        let file = format!("hodograph_{k}.csv");
        let csv = format!(
            "{}{hash}\n{}",
            crate::artifacts::HASH_PREFIX,
            field.to_csv()
        );
        w.write(&file, csv.as_bytes())?;
        targets.push(ChartTarget {
            angle,
            p0,
            eta: frame.eta,
            gx_min: frame.gx_min,
            gx_max: frame.gx_max,
            nz: patch_spec.nz,
            ny: patch_spec.ny,
            roundtrip_max: patch.roundtrip_max,
            outside: patch.outside,
            nodes: field.nodes.len(),
            degenerate: field.degenerate,
            sup_residual: field.sup_residual(spec.z_min),
            sup_residual_variant: field.sup_residual_variant(spec.z_min),
            ellipticity,
            seminorms,
            file,
        });
    }
    let report = HodographReport {
        t0: spec.t0,
        snapshot_times: times,
        spacing: h,
        z_min: spec.z_min,
        pass: targets
            .iter()
            .all(|t| t.ellipticity.pass && t.roundtrip_max <= 1e-10),
        targets,
    };
    w.write_json(
        "hodograph.json",
        &Stamped {
            scenario_sha256: &hash,
            body: &report,
        },
    )?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergeQuantity {
    pub name: String,
    /// Value per level for scalars; empty for field quantities.
    pub values: Vec<f64>,
    /// `|q_{k+1} - q_k|` (sup norm over coarse nodes for fields).
    pub differences: Vec<f64>,
    /// `log2(d_k / d_{k+1})`.
    pub observed_orders: Vec<f64>,
    /// Richardson extrapolation from the last three levels.
    pub extrapolated: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergeReport {
    pub levels: Vec<(u32, usize, String)>,
    pub t_end: f64,
    pub quantities: Vec<ConvergeQuantity>,
}

fn richardson(name: String, values: Vec<f64>, differences: Vec<f64>) -> ConvergeQuantity {
    let observed_orders: Vec<f64> = differences
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .collect();
    let extrapolated = match (values.len(), observed_orders.last()) {
        (n, Some(&p)) if n >= 3 && p.is_finite() && p > 0.0 => {
            Some(values[n - 1] + (values[n - 1] - values[n - 2]) / (2f64.powf(p) - 1.0))
        }
        _ => None,
    };
    ConvergeQuantity {
        name,
        values,
        differences,
        observed_orders,
        extrapolated,
    }
}

/// Runs levels `0..=levels` of space-time refinement concurrently and reports
/// observed orders at the last output time. Writes `converge.json` and
/// `converge.csv`.
pub fn converge(
    scenario: &Scenario,
    levels: u32,
    check: Option<&str>,
    out: &Path,
) -> Result<ConvergeReport> {
    if levels < 2 {
        return Err(GcfError::Config(
            "observed orders need at least 3 levels (--refine 2)".into(),
        ));
    }
    let params = scenario.params()?;
    let t_end = scenario.output.until;
    let runs: Vec<(Scenario, Frames)> = (0..=levels)
        .into_par_iter()
        .map(|k| {
            let s = scenario.refined(k)?;
            let f = evolve(&s, &params, vec![t_end])?;
            Ok((s, f))
        })
        .collect::<Result<_>>()?;
    // heights at the coarse nodes, which every refined grid contains
    let coarse: Vec<Vec<f64>> = runs
        .iter()
        .enumerate()
        .map(|(k, (_, f))| match f {
            Frames::Radial(v) => {
                let s = v.last().unwrap();
                s.f.iter().step_by(1 << k).copied().collect()
            }
            Frames::Planar(v) => {
                let s = v.last().unwrap();
                let g = &s.grid;
                let stride = 1 << k;
                let mut out = Vec::new();
                for j in (0..g.ny).step_by(stride) {
                    for i in (0..g.nx).step_by(stride) {
                        out.push(s.f[g.idx(i, j)]);
                    }
                }
                out
            }
        })
        .collect();
    let mut quantities = Vec::new();
    let diffs: Vec<f64> = coarse
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    quantities.push(richardson("height_sup".into(), Vec::new(), diffs));
    let scalar = |name: String, values: Vec<f64>| {
        let d = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        richardson(name, values, d)
    };
    for &eps in &scenario.interface.epsilons {
        let values = runs
            .iter()
            .map(|(s, f)| {
                let c = level_curves(s, &params, f, eps)?.pop().unwrap();
                Ok(c.mean_gamma())
            })
            .collect::<Result<Vec<f64>>>();
        if let Ok(values) = values {
            quantities.push(scalar(format!("mean_gamma_eps_{eps}"), values));
        }
    }
    let center: Vec<f64> = runs
        .iter()
        .map(|(_, f)| match f {
            Frames::Radial(v) => v.last().unwrap().f[0],
            Frames::Planar(v) => {
                let s = v.last().unwrap();
                s.value_at(0.0, 0.0).unwrap_or(f64::NAN)
            }
        })
        .collect();
    quantities.push(scalar("center_height".into(), center));
    // a quantity identical on every level (a flat center, say) carries no order
    let quantities: Vec<ConvergeQuantity> = quantities
        .into_iter()
        .filter(|q| q.differences.iter().any(|&d| d != 0.0))
        .filter(|q| check.is_none_or(|c| q.name.contains(c)))
        .collect();
    let report = ConvergeReport {
        levels: runs
            .iter()
            .enumerate()
            .map(|(k, (s, _))| (k as u32, nodes_per_axis(s), s.sha256()))
            .collect(),
        t_end,
        quantities,
    };
    let hash = scenario.sha256();
    let mut w = ArtifactWriter::create(out, &hash)?;
    w.write_json(
        "converge.json",
        &Stamped {
            scenario_sha256: &hash,
            body: &report,
        },
    )?;
    let mut t = Table::new(
        &hash,
        &["quantity", "level", "value", "difference", "order"],
    );
    for q in &report.quantities {
        for k in 0..=levels as usize {
            let field = |v: Option<&f64>| v.map_or(String::new(), |x| x.to_string());
            t.text_row(&[
                q.name.clone(),
                k.to_string(),
                field(q.values.get(k)),
                field(k.checked_sub(1).and_then(|i| q.differences.get(i))),
                field(k.checked_sub(2).and_then(|i| q.observed_orders.get(i))),
            ]);
        }
    }
    w.write("converge.csv", t.finish().as_bytes())?;
    Ok(report)
}

fn nodes_per_axis(s: &Scenario) -> usize {
    match s.geometry {
        Geometry::Radial { n, .. } | Geometry::Graph2d { n, .. } => n,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SphereCase {
    pub alpha: f64,
    pub max_error: f64,
    pub t_end: f64,
    pub pass: bool,
    /// `(t, computed center height, oracle)` per output time.
    pub samples: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SphereReport {
    pub nodes: usize,
    pub r_max: f64,
    pub tol: f64,
    pub cases: Vec<SphereCase>,
    pub pass: bool,
}

/// Center height of a shrinking hemisphere against the closed-form sphere
/// law, one case per `alpha`, run concurrently.
pub fn sphere_test(scenario: &Scenario, out: Option<&Path>) -> Result<SphereReport> {
    let (center_height, radius) = match scenario.profile {
        Profile::Hemisphere {
            center_height,
            radius,
        } => (center_height, radius),
        _ => {
            return Err(GcfError::Config(
                "sphere-test needs a hemisphere profile".into(),
            ))
        }
    };
    let Geometry::Radial { n, r_max, .. } = scenario.geometry else {
        return Err(GcfError::Config("sphere-test needs radial geometry".into()));
    };
    let spec = scenario.sphere.clone().unwrap_or_else(SphereSpec::default);
    let times = scenario.output.times();
    let cases: Vec<SphereCase> = spec
        .alphas
        .par_iter()
        .map(|&alpha| {
            let params = FlowParams::new(alpha)?;
            let s = RadialState::uniform(
                n,
                r_max,
                gcf_core::radial::hemisphere_profile(center_height, radius),
            )?;
            let traj = evolve_radial(
                &s,
                &params,
                &EvolveOptions {
                    cfl: scenario.cfl,
                    t_end: *times.last().unwrap(),
                    record: Record::Times(times.clone()),
                },
            )?;
            let samples: Vec<(f64, f64, f64)> = traj
                .iter()
                .map(|s| {
                    (
                        s.t,
                        s.f[0],
                        center_height - sphere_radius(radius, alpha, s.t),
                    )
                })
                .collect();
            let max_error = samples
                .iter()
                .map(|(_, a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            Ok(SphereCase {
                alpha,
                max_error,
                t_end: traj.last().unwrap().t,
                pass: max_error <= spec.tol,
                samples,
            })
        })
        .collect::<Result<_>>()?;
    let report = SphereReport {
        nodes: n,
        r_max,
        tol: spec.tol,
        pass: cases.iter().all(|c| c.pass),
        cases,
    };
    if let Some(out) = out {
        let hash = scenario.sha256();
        let mut w = ArtifactWriter::create(out, &hash)?;
        w.write_json(
            "sphere.json",
            &Stamped {
                scenario_sha256: &hash,
                body: &report,
            },
        )?;
        let mut t = Table::new(&hash, &["alpha", "t", "center_height", "oracle", "error"]);
        for c in &report.cases {
            for &(tt, a, b) in &c.samples {
                t.row(&[c.alpha, tt, a, b, (a - b).abs()]);
            }
        }
        w.write("sphere.csv", t.finish().as_bytes())?;
    }
    Ok(report)
}
