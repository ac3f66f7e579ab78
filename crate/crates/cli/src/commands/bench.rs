use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use spectral_descent::grid::{
    newton_grid, run_flow, start_stream, to_stencil_units, FlowConfig, GridDomain, GridField,
};
use spectral_descent::newton::UpdateRule;

use super::{finish, flow_config, parse_domain, record_flow_config};
use crate::config::ConfigFile;
use crate::error::{CliError, CliResult};
use crate::io::{num, OutDir};
use crate::manifest::{RunManifest, Status};
use crate::BenchArgs;

const KEYS: &[&str] = &[
    "domain", "grid", "count", "epsilon", "gamma", "dt", "tol", "max_steps", "seed", "out",
    "threads",
];

/// One row of the benchmark: eigenvalues reached and seconds spent by
/// each method from the same warm start.
#[derive(Debug, Clone)]
struct Row {
    warm_steps: usize,
    lambda: [Option<f64>; 3],
    seconds: [f64; 3],
}

pub fn run(args: &BenchArgs, config: &ConfigFile, argv: Vec<String>) -> CliResult<Status> {
    config.check_keys(KEYS)?;
    let domain_spec = config.resolve("domain", args.domain.clone(), "l-shape".to_string())?;
    let grid = config.resolve("grid", args.grid, 41)?;
    let count = config.resolve("count", args.count, 15)?;
    let epsilon = config.resolve("epsilon", args.epsilon, 0.1)?;
    let out_path = config.resolve("out", args.out.clone(), PathBuf::from("out"))?;
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(CliError::usage(format!("--epsilon must be positive, got {epsilon}")));
    }

    let mut manifest = RunManifest::new(argv);
    let domain = Arc::new(parse_domain(&domain_spec, grid, &mut manifest)?);
    if count == 0 || count > domain.interior_count() {
        return Err(CliError::usage(format!(
            "--count must lie in 1..={}",
            domain.interior_count()
        )));
    }
    let cfg = flow_config(&domain, config, args.gamma, None, None, args.seed)?;
    manifest.set("domain", &domain_spec);
    manifest.set("nx", domain.nx());
    manifest.set("count", count);
    manifest.set("epsilon", num(epsilon));
    record_flow_config(&mut manifest, &cfg);

    let out = OutDir::create(&out_path)?;
    let rows = manifest.phase("bench", || bench(&domain, count, epsilon, &cfg));
    let result = rows.and_then(|rows| {
        write_outputs(&out, &rows)?;
        let complete = rows.len() == count && rows.iter().all(|r| r.lambda.iter().all(Option::is_some));
        Ok(if complete { Status::Complete } else { Status::Partial })
    });
    finish(&out, &manifest, result)
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

/// For each eigenfunction: flow (deflated against the ones already found)
/// until the L² residual is below `epsilon`, then time the full deflated
/// flow, the norm-based Newton solve and the Rayleigh-update Newton solve
/// from that warm start. The flow result joins the deflation basis.
fn bench(domain: &Arc<GridDomain>, count: usize, epsilon: f64, cfg: &FlowConfig) -> CliResult<Vec<Row>> {
    let warm_cfg = FlowConfig {
        tol: to_stencil_units(domain.h(), epsilon),
        ..*cfg
    };
    let mut basis: Vec<GridField> = Vec::with_capacity(count);
    let mut rows = Vec::with_capacity(count);
    for j in 0..count {
        let u0 = GridField::random(domain, cfg.seed, &start_stream(j));
        let warm = run_flow(&u0, &basis, &warm_cfg)?;
        if !warm.converged {
            break;
        }
        let (flow, t_flow) = timed(|| run_flow(&warm.u, &basis, cfg));
        let flow = flow?;
        let newton = |rule| {
            timed(|| match newton_grid(&warm.u, cfg, rule) {
                Ok((lambda, _, trace)) if trace.converged() => Some(lambda),
                _ => None,
            })
        };
        let (l_newton, t_newton) = newton(UpdateRule::NormBased);
        let (l_rqi, t_rqi) = newton(UpdateRule::Rayleigh);
        rows.push(Row {
            warm_steps: warm.steps,
            lambda: [flow.converged.then_some(flow.lambda), l_newton, l_rqi],
            seconds: [t_flow, t_newton, t_rqi],
        });
        if !flow.converged {
            break;
        }
        let norm = flow.u.norm();
        basis.push(flow.u.scaled(1.0 / norm));
    }
    Ok(rows)
}

fn write_outputs(out: &OutDir, rows: &[Row]) -> CliResult<()> {
    let opt = |l: Option<f64>| l.map_or_else(|| "NaN".to_string(), num);
    out.write_csv(
        "eigenvalues.csv",
        &["index", "warm_steps", "lambda_flow", "lambda_newton", "lambda_rqi"],
        rows.iter().enumerate().map(|(j, r)| {
            vec![
                (j + 1).to_string(),
                r.warm_steps.to_string(),
                opt(r.lambda[0]),
                opt(r.lambda[1]),
                opt(r.lambda[2]),
            ]
        }),
    )?;
    out.write_csv(
        "timing.csv",
        &["index", "flow_seconds", "newton_seconds", "rqi_seconds"],
        rows.iter().enumerate().map(|(j, r)| {
            vec![
                (j + 1).to_string(),
                format!("{:.6e}", r.seconds[0]),
                format!("{:.6e}", r.seconds[1]),
                format!("{:.6e}", r.seconds[2]),
            ]
        }),
    )
}
