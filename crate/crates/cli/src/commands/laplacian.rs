use std::path::PathBuf;
use std::sync::Arc;

use spectral_descent::grid::{
    encode_pgm, field_to_csv, flow_residual, newton_grid, run_flow,
    solve_eigenfunctions_with, start_stream, to_stencil_units, FlowConfig, GridDomain,
    GridEigenpair, GridField,
};
use spectral_descent::newton::UpdateRule;

use super::{finish, flow_config, parse_domain, record_flow_config};
use crate::config::ConfigFile;
use crate::error::{CliError, CliResult};
use crate::io::{num, OutDir};
use crate::manifest::{RunManifest, Status};
use crate::{GridMethod, LaplacianArgs};

const KEYS: &[&str] = &[
    "domain", "grid", "count", "method", "gamma", "dt", "tol", "max_steps", "seed", "out",
    "threads",
];

/// Discrete L² residual at which the flow hands over to Newton.
pub const NEWTON_WARM_START: f64 = 1e-2;

pub fn run(args: &LaplacianArgs, config: &ConfigFile, argv: Vec<String>) -> CliResult<Status> {
    config.check_keys(KEYS)?;
    let domain_spec = config.resolve("domain", args.domain.clone(), "l-shape".to_string())?;
    let grid = config.resolve("grid", args.grid, 81)?;
    let count = config.resolve("count", args.count, 1)?;
    let method = match args.method {
        Some(m) => m,
        None => match config.raw("method") {
            None => GridMethod::Flow,
            Some(s) => <GridMethod as clap::ValueEnum>::from_str(s, true)
                .map_err(|_| CliError::usage(format!("config: unknown method `{s}`")))?,
        },
    };
    let out_path = config.resolve("out", args.out.clone(), PathBuf::from("out"))?;

    let mut manifest = RunManifest::new(argv);
    let domain = Arc::new(parse_domain(&domain_spec, grid, &mut manifest)?);
    if count == 0 || count > domain.interior_count() {
        return Err(CliError::usage(format!(
            "--count must lie in 1..={}",
            domain.interior_count()
        )));
    }
    let cfg = flow_config(&domain, config, args.gamma, args.dt, args.tol, args.seed)?;
    manifest.set("domain", &domain_spec);
    manifest.set("nx", domain.nx());
    manifest.set("ny", domain.ny());
    manifest.set("h", num(domain.h()));
    manifest.set("interior_cells", domain.interior_count());
    manifest.set("count", count);
    manifest.set(
        "method",
        match method {
            GridMethod::Flow => "flow",
            GridMethod::Newton => "newton",
        },
    );
    record_flow_config(&mut manifest, &cfg);

    let out = OutDir::create(&out_path)?;
    let result = compute(&domain, count, method, &cfg, &out, &mut manifest);
    finish(&out, &manifest, result)
}

fn compute(
    domain: &Arc<GridDomain>,
    count: usize,
    method: GridMethod,
    cfg: &FlowConfig,
    out: &OutDir,
    manifest: &mut RunManifest,
) -> CliResult<Status> {
    let mut written = Vec::new();
    let failed_at = match method {
        GridMethod::Flow => {
            let mut write_err = None;
            let outcome = manifest.phase("flow", || {
                solve_eigenfunctions_with(domain, count, cfg, |j, p| {
                    if write_err.is_none() {
                        if let Err(e) = write_pair(out, j, p, cfg.gamma) {
                            write_err = Some(e);
                        }
                    }
                })
            })?;
            if let Some(e) = write_err {
                return Err(e);
            }
            written = outcome.pairs;
            outcome.failed_at
        }
        GridMethod::Newton => manifest.phase("newton", || {
            newton_pairs(domain, count, cfg, out, &mut written)
        })?,
    };
    if let Some(j) = failed_at {
        manifest.note(format!("eigenfunction {} did not converge", j + 1));
    }
    out.write_csv(
        "eigenvalues.csv",
        &["index", "lambda", "residual", "norm_law_gap", "steps"],
        written.iter().enumerate().map(|(j, p)| {
            vec![
                (j + 1).to_string(),
                num(p.lambda),
                num(p.residual),
                num((p.raw_norm - cfg.gamma / (cfg.gamma + p.lambda)).abs()),
                p.steps.to_string(),
            ]
        }),
    )?;
    Ok(if failed_at.is_none() {
        Status::Complete
    } else {
        Status::Partial
    })
}

/// Deflated flow down to [`NEWTON_WARM_START`], then a norm-based Newton
/// solve from there for each eigenfunction.
fn newton_pairs(
    domain: &Arc<GridDomain>,
    count: usize,
    cfg: &FlowConfig,
    out: &OutDir,
    pairs: &mut Vec<GridEigenpair>,
) -> CliResult<Option<usize>> {
    let h = domain.h();
    let warm = FlowConfig {
        tol: to_stencil_units(h, NEWTON_WARM_START),
        ..*cfg
    };
    let mut basis: Vec<GridField> = Vec::with_capacity(count);
    for j in 0..count {
        let u0 = GridField::random(domain, cfg.seed, &start_stream(j));
        let start = run_flow(&u0, &basis, &warm)?;
        if !start.converged {
            return Ok(Some(j));
        }
        let (lambda, u, trace) = newton_grid(&start.u, cfg, UpdateRule::NormBased)?;
        if !trace.converged() {
            return Ok(Some(j));
        }
        let raw_norm = u.norm();
        let unit = u.scaled(1.0 / raw_norm);
        let pair = GridEigenpair {
            lambda,
            residual: flow_residual(&u, cfg.gamma, &[]),
            u: unit.clone(),
            raw_norm,
            steps: trace.iterations,
        };
        write_pair(out, j, &pair, cfg.gamma)?;
        pairs.push(pair);
        basis.push(unit);
    }
    Ok(None)
}

fn write_pair(out: &OutDir, j: usize, p: &GridEigenpair, gamma: f64) -> CliResult<()> {
    let stem = format!("eigenfunction_{:02}", j + 1);
    out.write_bytes(&format!("{stem}.pgm"), &encode_pgm(&p.u, p.lambda, gamma))?;
    out.write_bytes(&format!("{stem}.csv"), field_to_csv(&p.u).as_bytes())
}
