pub mod bench;
pub mod compare;
pub mod laplacian;
pub mod oracle;
pub mod solve;

use std::path::Path;
use std::sync::Arc;

use spectral_descent::grid::{FlowConfig, GridDomain};

use crate::config::ConfigFile;
use crate::error::{CliError, CliResult};
use crate::io::{read_mask, OutDir};
use crate::manifest::{RunManifest, Status};

/// Writes the manifest with the status implied by `result`, then returns
/// `result`. A failed run still leaves a manifest marked `failed`.
pub(crate) fn finish(
    out: &OutDir,
    manifest: &RunManifest,
    result: CliResult<Status>,
) -> CliResult<Status> {
    let status = match &result {
        Ok(s) => *s,
        Err(_) => Status::Failed,
    };
    manifest.write(out, status)?;
    result
}

/// Builds a domain from its command-line description.
pub(crate) fn parse_domain(
    spec: &str,
    grid: usize,
    manifest: &mut RunManifest,
) -> CliResult<GridDomain> {
    let invalid = |e: spectral_descent::Error| CliError::usage(format!("domain `{spec}`: {e}"));
    if let Some(path) = spec.strip_prefix("file:") {
        let path = Path::new(path);
        manifest.add_input(path)?;
        return read_mask(path);
    }
    match spec {
        "square" => GridDomain::full_square(grid).map_err(invalid),
        "l-shape" => GridDomain::l_shape(grid).map_err(invalid),
        _ => {
            let parts: Vec<&str> = spec.split(':').collect();
            match parts.as_slice() {
                ["annulus", rin, rout] => {
                    let parse = |s: &str| {
                        s.parse::<f64>()
                            .map_err(|_| CliError::usage(format!("domain `{spec}`: bad radius `{s}`")))
                    };
                    GridDomain::annulus(grid, parse(rin)?, parse(rout)?).map_err(invalid)
                }
                _ => Err(CliError::usage(format!(
                    "unknown domain `{spec}` (expected square, l-shape, annulus:RIN:ROUT or file:PATH)"
                ))),
            }
        }
    }
}

/// Grid flow settings shared by `laplacian` and `bench`.
pub(crate) fn flow_config(
    domain: &Arc<GridDomain>,
    config: &ConfigFile,
    gamma: Option<f64>,
    dt: Option<f64>,
    tol: Option<f64>,
    seed: Option<u64>,
) -> CliResult<FlowConfig> {
    let defaults = FlowConfig::new(domain);
    let cfg = FlowConfig {
        gamma: config.resolve("gamma", gamma, defaults.gamma)?,
        dt: config.resolve("dt", dt, defaults.dt)?,
        tol: config.resolve("tol", tol, defaults.tol)?,
        max_steps: config.resolve("max_steps", None, defaults.max_steps)?,
        seed: config.resolve("seed", seed, defaults.seed)?,
    };
    if !(cfg.gamma > 0.0) || !cfg.gamma.is_finite() {
        return Err(CliError::usage(format!("gamma must be positive, got {}", cfg.gamma)));
    }
    if !(cfg.tol > 0.0) {
        return Err(CliError::usage(format!("tol must be positive, got {}", cfg.tol)));
    }
    cfg.validate(domain).map_err(|e| CliError::usage(e.to_string()))?;
    Ok(cfg)
}

pub(crate) fn record_flow_config(manifest: &mut RunManifest, cfg: &FlowConfig) {
    manifest.set("gamma", cfg.gamma);
    manifest.set("dt", cfg.dt);
    manifest.set("tol", cfg.tol);
    manifest.set("max_steps", cfg.max_steps);
    manifest.set("seed", cfg.seed);
}
