//! Scenario runner for the gcf laboratory: reads a JSON scenario, evolves it
//! and writes a reproducible artifact directory, then derives the audit,
//! waiting-time, hodograph, convergence and sphere reports from it.

pub mod artifacts;
pub mod commands;
pub mod plot;
pub mod run;
pub mod scenario;

use std::path::Path;

use gcf_core::{GcfError, Result};

pub use scenario::Scenario;

/// Scenario from `--scenario`, else from the manifest in `dir`, refined
/// `refine` times.
pub fn resolve_scenario(
    scenario: Option<&Path>,
    dir: Option<&Path>,
    refine: Option<u32>,
) -> Result<Scenario> {
    let base = match (scenario, dir) {
        (Some(p), _) => Scenario::load(p)?,
        (None, Some(d)) => artifacts::read_manifest(d)?.scenario,
        (None, None) => {
            return Err(GcfError::MissingInput(
                "--scenario <path> or --out <artifact dir> with manifest.json".into(),
            ))
        }
    };
    base.refined(refine.unwrap_or(0))
}

/// Caps the worker pool at `GCF_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("GCF_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        GcfError::Config(format!("GCF_THREADS must be a positive integer, got {v:?}"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| GcfError::Config(format!("thread pool: {e}")))
}
