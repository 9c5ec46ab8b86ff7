//! `simulate`: evolve a scenario and write the artifact directory.

use std::collections::BTreeMap;
use std::path::Path;

use gcf_core::audit::{audit_report, EstimateReport};
use gcf_core::graph::{evolve_graph, GraphState};
use gcf_core::grid::Grid2;
use gcf_core::interface::{
    check_envelope, extract_level_graph, extract_level_radial, fit_speed_band,
    fit_vanishing_exponent_graph, fit_vanishing_exponent_radial, EnvelopeReport, ExponentFit,
    InterfaceCurve, SpeedBand,
};
use gcf_core::radial::{evolve_radial, EvolveOptions, RadialState};
use gcf_core::{FlowParams, Result};
use serde::Serialize;

use crate::artifacts::{
    encode_snapshots, snapshot_csv, trajectory_csv, ArtifactWriter, Frames, GridInfo, Manifest,
    Stamped, Table, CURVATURE_NOTE, MANIFEST, SNAPSHOTS, TRAJECTORY,
};
use crate::scenario::{Geometry, Scenario};

/// Evolves the scenario from its initial profile to the last output time.
pub fn evolve(scenario: &Scenario, params: &FlowParams, times: Vec<f64>) -> Result<Frames> {
    let opts = EvolveOptions::at_times(times, scenario.cfl);
    match scenario.geometry {
        Geometry::Radial { n, r_max, .. } => {
            let profile = scenario.profile.radial(params).expect("validated");
            let s = RadialState::uniform(n, r_max, profile)?;
            Ok(Frames::Radial(evolve_radial(&s, params, &opts)?))
        }
        Geometry::Graph2d { n, half_width } => {
            let s = GraphState::from_fn(
                Grid2::square(n, half_width)?,
                scenario.profile.planar(params),
            )?;
            Ok(Frames::Planar(evolve_graph(&s, params, &opts)?))
        }
    }
}

/// Level curve of one frame.
pub fn level_curves(
    scenario: &Scenario,
    params: &FlowParams,
    frames: &Frames,
    epsilon: f64,
) -> Result<Vec<InterfaceCurve>> {
    let it = &scenario.interface;
    match frames {
        Frames::Radial(v) => v
            .iter()
            .map(|s| extract_level_radial(s, params, epsilon, it.n_theta))
            .collect(),
        Frames::Planar(v) => v
            .iter()
            .map(|s| extract_level_graph(s, params, it.center, epsilon, it.n_theta))
            .collect(),
    }
}

/// Frames lifted to (or kept on) a Cartesian grid for the audit; the
/// initial frame is excluded since it is the exact input profile.
pub fn planar_frames(scenario: &Scenario, frames: &Frames) -> Result<Vec<GraphState>> {
    match (frames, &scenario.geometry) {
        (Frames::Radial(v), Geometry::Radial { r_max, audit_n, .. }) => {
            let grid = Grid2::square(*audit_n, 0.7 * r_max)?;
            v.iter()
                .filter(|s| s.t > 0.0)
                .map(|s| GraphState::from_radial(grid.clone(), s))
                .collect()
        }
        (Frames::Planar(v), _) => Ok(v.iter().filter(|s| s.t > 0.0).cloned().collect()),
        (Frames::Radial(_), _) => unreachable!("radial frames from a planar scenario"),
    }
}

pub fn run_audit(
    scenario: &Scenario,
    params: &FlowParams,
    frames: &Frames,
) -> Result<EstimateReport> {
    audit_report(&planar_frames(scenario, frames)?, params, &scenario.audit)
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditDocument<'a> {
    pub curvature_convention: &'a str,
    pub pass: bool,
    pub records: &'a [gcf_core::audit::CheckRecord],
}

pub fn write_audit(w: &mut ArtifactWriter, report: &EstimateReport) -> Result<()> {
    let doc = AuditDocument {
        curvature_convention: CURVATURE_NOTE,
        pass: report.all_pass(),
        records: &report.records,
    };
    let hash = w.hash().to_string();
    w.write_json(
        "audit.json",
        &Stamped {
            scenario_sha256: &hash,
            body: &doc,
        },
    )?;
    let csv = format!(
        "{}{hash}\n{}",
        crate::artifacts::HASH_PREFIX,
        report.to_csv()
    );
    w.write("audit.csv", csv.as_bytes())
}

#[derive(Debug, Clone, Serialize)]
pub struct ExponentRow {
    pub t: f64,
    #[serde(flatten)]
    pub fit: ExponentFit,
}

#[derive(Debug, Clone, Serialize)]
pub struct InterfaceReport {
    pub beta: f64,
    pub speed_bands: Vec<SpeedBand>,
    pub envelopes: Vec<EnvelopeReport>,
    /// Largest `|beta_hat / beta - 1|` over frames and widths.
    pub exponent_max_rel_error: f64,
    /// Largest spread of `beta_hat` across collar widths within one frame,
    /// relative to `beta`.
    pub exponent_max_width_spread: f64,
    /// Frames or levels for which a fit could not be made, with the reason.
    pub skipped: Vec<String>,
}

/// Interface series, speed bands, envelopes and exponent fits.
pub fn interface_analysis(
    scenario: &Scenario,
    params: &FlowParams,
    frames: &Frames,
) -> Result<(Vec<InterfaceCurve>, InterfaceReport, Vec<ExponentRow>)> {
    let it = &scenario.interface;
    let times = frames.times();
    let mut all = Vec::new();
    let mut report = InterfaceReport {
        beta: params.beta,
        speed_bands: Vec::new(),
        envelopes: Vec::new(),
        exponent_max_rel_error: 0.0,
        exponent_max_width_spread: 0.0,
        skipped: Vec::new(),
    };
    for &eps in &it.epsilons {
        let curves = match level_curves(scenario, params, frames, eps) {
            Ok(c) => c,
            Err(e) => {
                report.skipped.push(format!("epsilon {eps}: {e}"));
                continue;
            }
        };
        match fit_speed_band(&curves, it.monotone_tol) {
            Ok(b) => report.speed_bands.push(b),
            Err(e) => report
                .skipped
                .push(format!("speed band epsilon {eps}: {e}")),
        }
        let t0 = it
            .envelope_t0
            .and_then(|t| times.iter().copied().find(|&s| s >= t - 1e-12))
            .or_else(|| times.get(1).copied());
        if let Some(t0) = t0 {
            match check_envelope(&curves, t0, it.envelope_residual, it.monotone_tol) {
                Ok(r) => report.envelopes.push(r),
                Err(e) => report.skipped.push(format!("envelope epsilon {eps}: {e}")),
            }
        }
        all.extend(curves);
    }
    let mut rows = Vec::new();
    let fits: Vec<(f64, Result<Vec<ExponentFit>>)> = match frames {
        Frames::Radial(v) => v
            .iter()
            .filter(|s| s.t > 0.0)
            .map(|s| (s.t, fit_vanishing_exponent_radial(s, params, &it.widths)))
            .collect(),
        Frames::Planar(v) => v
            .iter()
            .filter(|s| s.t > 0.0)
            .map(|s| {
                let r = fit_vanishing_exponent_graph(s, params, it.center, &it.widths, it.n_theta);
                (s.t, r)
            })
            .collect(),
    };
    for (t, fit) in fits {
        match fit {
            Ok(fs) => {
                let (lo, hi) = fs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, f| {
                    (a.0.min(f.beta_hat), a.1.max(f.beta_hat))
                });
                report.exponent_max_width_spread = report
                    .exponent_max_width_spread
                    .max((hi - lo) / params.beta);
                for f in fs {
                    report.exponent_max_rel_error = report
                        .exponent_max_rel_error
                        .max((f.beta_hat / params.beta - 1.0).abs());
                    rows.push(ExponentRow { t, fit: f });
                }
            }
            Err(e) => report.skipped.push(format!("exponent fit at t = {t}: {e}")),
        }
    }
    Ok((all, report, rows))
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateSummary {
    pub scenario_sha256: String,
    pub frames: usize,
    pub files: BTreeMap<String, String>,
    pub audit_pass: bool,
}

/// Runs a scenario and writes every artifact into `out`.
pub fn simulate(scenario: &Scenario, out: &Path) -> Result<SimulateSummary> {
    scenario.validate()?;
    let params = scenario.params()?;
    let hash = scenario.sha256();
    let frames = evolve(scenario, &params, scenario.output.times())?;
    let mut w = ArtifactWriter::create(out, &hash)?;

    match &frames {
        Frames::Radial(v) => w.write(TRAJECTORY, trajectory_csv(&hash, v).as_bytes())?,
        Frames::Planar(v) => {
            w.write(SNAPSHOTS, &encode_snapshots(&hash, params.alpha, v)?)?;
            for (k, s) in v.iter().enumerate() {
                w.write(
                    &format!("snapshot_{k:04}.csv"),
                    snapshot_csv(&hash, s, &params).as_bytes(),
                )?;
            }
        }
    }

    let (curves, report, exps) = interface_analysis(scenario, &params, &frames)?;
    let mut t = Table::new(&hash, &["t", "epsilon", "theta", "gamma"]);
    for c in &curves {
        for (th, g) in c.theta.iter().zip(&c.gamma) {
            t.row(&[c.t, c.epsilon, *th, *g]);
        }
    }
    w.write("interface.csv", t.finish().as_bytes())?;
    w.write_json(
        "interface_report.json",
        &Stamped {
            scenario_sha256: &hash,
            body: &report,
        },
    )?;
    let mut t = Table::new(&hash, &["t", "collar_width", "beta_hat", "r2", "samples"]);
    for r in &exps {
        t.row(&[
            r.t,
            r.fit.collar_width,
            r.fit.beta_hat,
            r.fit.r2,
            r.fit.samples as f64,
        ]);
    }
    w.write("exponents.csv", t.finish().as_bytes())?;

    let audit = run_audit(scenario, &params, &frames)?;
    write_audit(&mut w, &audit)?;

    let mut seeds = BTreeMap::new();
    if let Some(h) = &scenario.hodograph {
        seeds.insert("seminorm_pairs".to_string(), h.seed);
    }
    let manifest = Manifest {
        tool: "gcf".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        scenario_sha256: hash.clone(),
        scenario: scenario.clone(),
        exponents: params,
        grid: GridInfo::of(scenario),
        cfl: scenario.cfl,
        frame_times: frames.times(),
        seeds,
        curvature_convention: CURVATURE_NOTE.into(),
        files: w.files().clone(),
    };
    let files = w.files().clone();
    w.write_json(MANIFEST, &manifest)?;
    Ok(SimulateSummary {
        scenario_sha256: hash,
        frames: manifest.frame_times.len(),
        files,
        audit_pass: audit.all_pass(),
    })
}
