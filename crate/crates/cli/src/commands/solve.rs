use std::path::PathBuf;

use spectral_descent::gd::{gd_b_metric, gd_deflated, gd_generalized, gd_standard, random_start};
use spectral_descent::newton::{newton_solve, UpdateRule};
use spectral_descent::{
    choose_b_metric_stepsize, choose_gamma, choose_stepsize, IterationTrace, SolverConfig,
    SpdMatrix, SpectralPair, SymMatrix,
};

use super::finish;
use crate::config::ConfigFile;
use crate::error::{CliError, CliResult};
use crate::io::{num, read_spd, read_symmetric, OutDir};
use crate::manifest::{RunManifest, Status};
use crate::{AutoOr, Method, SolveArgs};

const KEYS: &[&str] = &[
    "method", "gamma", "alpha", "count", "seed", "tol", "max_iter", "out", "threads",
];

/// Sub-stream of the start vector for single-pair runs.
const START_STREAM: &str = "solve/x0";

pub fn run(args: &SolveArgs, config: &ConfigFile, argv: Vec<String>) -> CliResult<Status> {
    config.check_keys(KEYS)?;
    let method = match args.method {
        Some(m) => m,
        None => match config.raw("method") {
            None => Method::Gd,
            Some(s) => <Method as clap::ValueEnum>::from_str(s, true)
                .map_err(|_| CliError::usage(format!("config: unknown method `{s}`")))?,
        },
    };
    let count = config.resolve("count", args.count, 1)?;
    if count == 0 {
        return Err(CliError::usage("--count must be at least 1"));
    }
    if count > 1 && matches!(method, Method::Newton | Method::Rqi) {
        return Err(CliError::usage("--count > 1 needs a gradient method (gd or gd-b)"));
    }
    let gamma_arg = config.resolve("gamma", args.gamma, AutoOr::Auto)?;
    let alpha_arg = config.resolve("alpha", args.alpha, AutoOr::Auto)?;
    let seed = config.resolve("seed", args.seed, 0)?;
    let tol = config.resolve_opt("tol", args.tol)?;
    let max_iter = config.resolve_opt("max_iter", args.max_iter)?;
    let out_path = config.resolve("out", args.out.clone(), PathBuf::from("out"))?;

    let mut manifest = RunManifest::new(argv);
    manifest.add_input(&args.matrix)?;
    let a = read_symmetric(&args.matrix)?;
    let b = match &args.b {
        Some(p) => {
            manifest.add_input(p)?;
            let b = read_spd(p)?;
            if b.n() != a.n() {
                return Err(CliError::file(
                    p,
                    format!("B is {0}x{0} but A is {1}x{1}", b.n(), a.n()),
                ));
            }
            Some(b)
        }
        None => None,
    };

    let gamma = match gamma_arg {
        AutoOr::Auto => choose_gamma(&a, b.as_ref(), 1.0),
        AutoOr::Value(g) => g,
    };
    let b_metric = method == Method::GdB || (count > 1 && b.is_some());
    let alpha = match alpha_arg {
        AutoOr::Value(v) => v,
        AutoOr::Auto if b_metric => choose_b_metric_stepsize(&a, b.as_ref(), gamma, 0.9),
        AutoOr::Auto => choose_stepsize(&a, b.as_ref(), gamma, 0.9),
    };
    let mut cfg = match method {
        Method::Newton | Method::Rqi => SolverConfig::newton(gamma),
        Method::Gd | Method::GdB => SolverConfig::new(gamma, alpha),
    }
    .with_seed(seed);
    if let Some(t) = tol {
        cfg.tol_grad = t;
        cfg.tol_residual = t;
    }
    if let Some(m) = max_iter {
        cfg.max_iter = m;
    }

    manifest.set("method", <Method as clap::ValueEnum>::to_possible_value(&method).unwrap().get_name());
    manifest.set("count", count);
    manifest.set("gamma", num(cfg.gamma));
    if matches!(method, Method::Gd | Method::GdB) {
        manifest.set("alpha", num(cfg.alpha));
        manifest.set("tol_grad", num(cfg.tol_grad));
    } else {
        manifest.set("tol_residual", num(cfg.tol_residual));
    }
    manifest.set("max_iter", cfg.max_iter);
    manifest.set("seed", seed);

    let out = OutDir::create(&out_path)?;
    let result = solve(&a, b.as_ref(), method, count, &cfg, &out, &mut manifest);
    finish(&out, &manifest, result)
}

fn solve(
    a: &SymMatrix,
    b: Option<&SpdMatrix>,
    method: Method,
    count: usize,
    cfg: &SolverConfig,
    out: &OutDir,
    manifest: &mut RunManifest,
) -> CliResult<Status> {
    let identity;
    let b_or_identity = match b {
        Some(b) => b,
        None => {
            identity = SpdMatrix::identity(a.n());
            &identity
        }
    };
    let (pairs, traces, complete) = manifest.phase("solve", || -> CliResult<_> {
        if count > 1 {
            let outcome = gd_deflated(a, b, cfg, count)?;
            let complete = outcome.is_complete();
            return Ok((outcome.pairs, outcome.traces, complete));
        }
        let x0 = random_start(a.n(), cfg.seed, START_STREAM);
        let (pair, trace) = match (method, b) {
            (Method::Gd, None) => gd_standard(a, cfg, &x0)?,
            (Method::Gd, Some(b)) => gd_generalized(a, b, cfg, &x0)?,
            (Method::GdB, _) => gd_b_metric(a, b_or_identity, cfg, &x0)?,
            (Method::Newton, _) => newton_solve(a, b, cfg, &x0, UpdateRule::NormBased)?,
            (Method::Rqi, _) => newton_solve(a, b, cfg, &x0, UpdateRule::Rayleigh)?,
        };
        let complete = trace.converged();
        Ok((vec![pair], vec![trace], complete))
    })?;
    for (j, t) in traces.iter().enumerate() {
        manifest.note(format!(
            "pair {}: {} after {} iterations",
            j + 1,
            t.terminal_reason.as_str(),
            t.iterations
        ));
    }
    manifest.phase("write", || write_outputs(out, &pairs, &traces))?;
    Ok(if complete && pairs.len() == count {
        Status::Complete
    } else {
        Status::Partial
    })
}

fn write_outputs(out: &OutDir, pairs: &[SpectralPair], traces: &[IterationTrace]) -> CliResult<()> {
    out.write_csv(
        "eigenpairs.csv",
        &["index", "lambda", "residual", "norm_law_gap"],
        pairs.iter().enumerate().map(|(j, p)| {
            vec![
                (j + 1).to_string(),
                num(p.lambda),
                num(p.residual),
                num(p.norm_law_gap),
            ]
        }),
    )?;
    let n = pairs.first().map_or(0, |p| p.x.len());
    let mut header = vec!["index".to_string()];
    header.extend((0..n).map(|i| format!("x{i}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.write_csv(
        "vectors.csv",
        &header,
        pairs.iter().enumerate().map(|(j, p)| {
            std::iter::once((j + 1).to_string())
                .chain(p.x.iter().map(|v| num(*v)))
                .collect::<Vec<_>>()
        }),
    )?;
    for (j, t) in traces.iter().enumerate() {
        out.write_csv(
            &format!("trace_{}.csv", j + 1),
            &["k", "f", "grad_norm", "norm_b", "lambda"],
            t.records.iter().map(|r| {
                vec![
                    r.k.to_string(),
                    num(r.f_value),
                    num(r.grad_norm),
                    num(r.x_norm_b),
                    num(r.lambda_est),
                ]
            }),
        )?;
    }
    Ok(())
}
