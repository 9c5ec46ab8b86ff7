use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use gcf_cli::{commands, configure_threads, plot, resolve_scenario, run, scenario};

#[derive(Parser)]
#[command(
    name = "gcf",
    version,
    about = "Flat-sided Gauss curvature flow laboratory"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Scenario JSON file.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Artifact directory (written by simulate, read by the other commands).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Restrict audit records or convergence quantities to names containing this.
    #[arg(long, global = true)]
    check: Option<String>,
    /// Halve the grid spacing this many times (number of extra levels for converge).
    #[arg(long, global = true)]
    refine: Option<u32>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evolve a scenario and write the artifact directory.
    Simulate,
    /// Re-run the estimate audit on an artifact directory.
    Audit,
    /// Waiting time under step halving and the barrier residual scan.
    Waiting,
    /// Hodograph charts, coefficient bounds and seminorms.
    Hodograph,
    /// Observed orders of accuracy over refinement levels.
    Converge,
    /// Shrinking-sphere check of the radial solver.
    SphereTest,
    /// SVG plots of the tables in an artifact directory.
    Plot,
}

fn out_dir(cli: &Cli) -> anyhow::Result<PathBuf> {
    cli.out.clone().context("missing input: --out <dir>")
}

fn verdict(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn execute(cli: &Cli) -> anyhow::Result<ExitCode> {
    configure_threads()?;
    Ok(match cli.cmd {
        Cmd::Simulate => {
            let Some(path) = &cli.scenario else {
                bail!("missing input: --scenario <path>");
            };
            let s = resolve_scenario(Some(path), None, cli.refine)?;
            let out = out_dir(cli)?;
            let summary = run::simulate(&s, &out)?;
            println!(
                "simulated {} frames, {} files in {} (scenario {})",
                summary.frames,
                summary.files.len() + 1,
                out.display(),
                summary.scenario_sha256
            );
            ExitCode::SUCCESS
        }
        Cmd::Audit => {
            let out = out_dir(cli)?;
            let r = commands::audit_dir(&out, cli.check.as_deref())?;
            for rec in &r.records {
                println!(
                    "{} {:<28} [{:.6}, {:.6}] {}",
                    if rec.pass { "PASS" } else { "FAIL" },
                    rec.name,
                    rec.measured_min,
                    rec.measured_max,
                    rec.bound_form
                );
            }
            verdict(r.pass)
        }
        Cmd::Waiting => {
            let out = out_dir(cli)?;
            let s = resolve_scenario(cli.scenario.as_deref(), Some(&out), cli.refine)?;
            let r = commands::waiting(&s, &out)?;
            for run in &r.runs {
                println!(
                    "cfl {:.3}: t* = {:.8} (step {:.2e}), min flat radius {:.5}",
                    run.cfl, run.t_star, run.step_at_crossing, run.min_flat_radius
                );
            }
            println!(
                "t* shift {:.2e} within one step: {}; barrier min residual {:.3e}: {}",
                r.t_star_shift, r.shift_within_one_step, r.barrier.min_residual, r.barrier.pass
            );
            verdict(r.pass)
        }
        Cmd::Hodograph => {
            let out = out_dir(cli)?;
            let s = resolve_scenario(cli.scenario.as_deref(), Some(&out), cli.refine)?;
            let r = commands::hodograph(&s, &out)?;
            for t in &r.targets {
                println!(
                    "angle {:.4}: eta {:.4}, round trip {:.2e}, residual {:.3e}, lambda_min {:.4}, min btilde1 {:.4}",
                    t.angle,
                    t.eta,
                    t.roundtrip_max,
                    t.sup_residual,
                    t.ellipticity.lambda_min,
                    t.ellipticity.btilde1_min
                );
            }
            verdict(r.pass)
        }
        Cmd::Converge => {
            let out = out_dir(cli)?;
            let s = match &cli.scenario {
                Some(p) => scenario::Scenario::load(p)?,
                None => resolve_scenario(None, Some(&out), None)?,
            };
            let r = commands::converge(&s, cli.refine.unwrap_or(2), cli.check.as_deref(), &out)?;
            for q in &r.quantities {
                let orders: Vec<String> = q
                    .observed_orders
                    .iter()
                    .map(|p| format!("{p:.3}"))
                    .collect();
                println!("{:<24} observed orders [{}]", q.name, orders.join(", "));
            }
            ExitCode::SUCCESS
        }
        Cmd::SphereTest => {
            let s = match &cli.scenario {
                Some(p) => resolve_scenario(Some(p), None, cli.refine)?,
                None => scenario::preset("sphere")?.refined(cli.refine.unwrap_or(0))?,
            };
            let t = std::time::Instant::now();
            let r = commands::sphere_test(&s, cli.out.as_deref())?;
            for c in &r.cases {
                println!(
                    "alpha {}: max center error {:.3e} (tol {:.1e}) {}",
                    c.alpha,
                    c.max_error,
                    r.tol,
                    if c.pass { "PASS" } else { "FAIL" }
                );
            }
            println!("elapsed {:.2} s", t.elapsed().as_secs_f64());
            verdict(r.pass)
        }
        Cmd::Plot => {
            let out = out_dir(cli)?;
            for p in plot::plot_dir(&out)? {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
