use std::path::PathBuf;
use std::sync::Arc;

use rand::RngCore;
use rayon::prelude::*;

use spectral_descent::grid::{newton_grid, solve_eigenfunctions, FlowConfig, GridDomain, GridField};
use spectral_descent::newton::{
    compare_trial, oracle_lambda_min, ComparisonStats, RuleStats, TrialOutcome, UpdateRule,
    HIT_RTOL,
};
use spectral_descent::oracle::{random_pair, RandomProblemSpec};
use spectral_descent::rng::stream;
use spectral_descent::{choose_gamma, SolverConfig};

use super::{finish, record_flow_config};
use crate::config::ConfigFile;
use crate::error::{CliError, CliResult};
use crate::io::{num, OutDir};
use crate::manifest::{RunManifest, Status};
use crate::{CompareArgs, CompareMode};

const KEYS: &[&str] = &["mode", "pairs", "trials", "n", "grid", "seed", "out", "threads"];

/// Grid eigenvalues carry discretization-level round-off of order 1e-11,
/// so grid hits use a looser relative tolerance than matrix hits.
pub const GRID_HIT_RTOL: f64 = 1e-8;

struct PairResult {
    stats: ComparisonStats,
    outcomes: Vec<TrialOutcome>,
    rtol: f64,
}

pub fn run(args: &CompareArgs, config: &ConfigFile, argv: Vec<String>) -> CliResult<Status> {
    config.check_keys(KEYS)?;
    let mode = match args.mode {
        Some(m) => m,
        None => match config.raw("mode") {
            None => CompareMode::Matrix,
            Some(s) => <CompareMode as clap::ValueEnum>::from_str(s, true)
                .map_err(|_| CliError::usage(format!("config: unknown mode `{s}`")))?,
        },
    };
    let pairs = config.resolve("pairs", args.pairs, 5)?;
    let trials = config.resolve("trials", args.trials, 100)?;
    let n = config.resolve("n", args.n, 10)?;
    let grid = config.resolve("grid", args.grid, 41)?;
    let seed = config.resolve("seed", args.seed, 0)?;
    let out_path = config.resolve("out", args.out.clone(), PathBuf::from("out"))?;
    if trials == 0 || pairs == 0 || n == 0 {
        return Err(CliError::usage("--pairs, --trials and --n must be at least 1"));
    }

    let mut manifest = RunManifest::new(argv);
    manifest.set("trials", trials);
    manifest.set("seed", seed);
    let (out, results) = match mode {
        CompareMode::Matrix => {
            manifest.set("mode", "matrix");
            manifest.set("pairs", pairs);
            manifest.set("n", n);
            manifest.set("hit_rtol", num(HIT_RTOL));
            let out = OutDir::create(&out_path)?;
            let r = manifest.phase("trials", || matrix_mode(pairs, trials, n, seed));
            (out, r)
        }
        CompareMode::Grid => {
            let domain = Arc::new(
                GridDomain::l_shape(grid).map_err(|e| CliError::usage(format!("--grid: {e}")))?,
            );
            let cfg = FlowConfig {
                seed,
                ..FlowConfig::new(&domain)
            };
            manifest.set("mode", "grid");
            manifest.set("domain", "l-shape");
            manifest.set("grid", grid);
            manifest.set("hit_rtol", num(GRID_HIT_RTOL));
            record_flow_config(&mut manifest, &cfg);
            let out = OutDir::create(&out_path)?;
            let r = grid_run(&domain, &cfg, trials, seed, &mut manifest);
            (out, r)
        }
    };
    let result = results.and_then(|r| write_outputs(&out, &r));
    finish(&out, &manifest, result)
}

/// Seed of the `p`-th random pair, from the sub-stream `"compare/pair/p"`.
fn pair_seed(seed: u64, p: usize) -> u64 {
    stream(seed, &format!("compare/pair/{p}")).next_u64()
}

fn matrix_mode(pairs: usize, trials: usize, n: usize, seed: u64) -> CliResult<Vec<PairResult>> {
    let problems = (0..pairs)
        .map(|p| -> CliResult<_> {
            let (a, b) = random_pair(&RandomProblemSpec::spd_pair(n, pair_seed(seed, p)))?;
            let cfg = SolverConfig::newton(choose_gamma(&a, Some(&b), 1.0)).with_seed(seed);
            let lambda_min = oracle_lambda_min(&a, Some(&b))?;
            Ok((a, b, cfg, lambda_min))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let tasks: Vec<(usize, usize)> = (0..pairs).flat_map(|p| (0..trials).map(move |t| (p, t))).collect();
    let outcomes = tasks
        .par_iter()
        .map(|&(p, t)| {
            let (a, b, cfg, _) = &problems[p];
            compare_trial(a, Some(b), cfg, t)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(outcomes
        .chunks(trials)
        .zip(&problems)
        .map(|(chunk, (_, _, _, lambda_min))| PairResult {
            stats: ComparisonStats::from_trials(chunk, *lambda_min),
            outcomes: chunk.to_vec(),
            rtol: HIT_RTOL,
        })
        .collect())
}

fn grid_trial(domain: &Arc<GridDomain>, cfg: &FlowConfig, seed: u64, t: usize) -> TrialOutcome {
    let u0 = GridField::random(domain, seed, &format!("trial/{t}/u0"));
    let run = |rule| match newton_grid(&u0, cfg, rule) {
        Ok((lambda, _, trace)) if trace.converged() => Some(lambda),
        _ => None,
    };
    TrialOutcome {
        trial: t,
        norm_based: run(UpdateRule::NormBased),
        rayleigh: run(UpdateRule::Rayleigh),
    }
}

/// The smallest eigenvalue comes from the gradient flow; the trials then
/// run both Newton variants from shared random fields.
fn grid_run(
    domain: &Arc<GridDomain>,
    cfg: &FlowConfig,
    trials: usize,
    seed: u64,
    manifest: &mut RunManifest,
) -> CliResult<Vec<PairResult>> {
    let reference = manifest.phase("reference", || solve_eigenfunctions(domain, 1, cfg))?;
    let lambda_min = match reference.pairs.first() {
        Some(p) => p.lambda,
        None => {
            return Err(CliError::Solver(spectral_descent::Error::InvalidInput(
                "flow for the smallest eigenvalue did not converge".into(),
            )))
        }
    };
    manifest.set("lambda_min", num(lambda_min));
    let outcomes: Vec<TrialOutcome> = manifest.phase("trials", || {
        (0..trials)
            .into_par_iter()
            .map(|t| grid_trial(domain, cfg, seed, t))
            .collect()
    });
    Ok(vec![PairResult {
        stats: ComparisonStats::from_trials_within(&outcomes, lambda_min, GRID_HIT_RTOL),
        outcomes,
        rtol: GRID_HIT_RTOL,
    }])
}

fn stats_row(label: Vec<String>, rule: &str, s: &RuleStats) -> Vec<String> {
    let mut row = label;
    row.extend([
        rule.to_string(),
        s.hits_on_min.to_string(),
        num(s.max_lambda),
        num(s.mean_lambda),
        s.failures.to_string(),
    ]);
    row
}

const RULES: [UpdateRule; 2] = [UpdateRule::NormBased, UpdateRule::Rayleigh];

fn found(o: &TrialOutcome, rule: UpdateRule) -> Option<f64> {
    match rule {
        UpdateRule::NormBased => o.norm_based,
        UpdateRule::Rayleigh => o.rayleigh,
    }
}

fn write_outputs(out: &OutDir, results: &[PairResult]) -> CliResult<Status> {
    out.write_csv(
        "pairs.csv",
        &["pair", "lambda_min", "rule", "hits", "max_lambda", "mean_lambda", "failures"],
        results.iter().enumerate().flat_map(|(p, r)| {
            RULES.iter().map(move |&rule| {
                stats_row(vec![p.to_string(), num(r.stats.lambda_min)], rule.as_str(), r.stats.rule(rule))
            })
        }),
    )?;
    out.write_csv(
        "summary.csv",
        &["rule", "hits", "max_lambda", "mean_lambda", "failures"],
        RULES.iter().map(|&rule| {
            let (mut hits, mut failures, mut count) = (0, 0, 0usize);
            let (mut max, mut sum) = (f64::NEG_INFINITY, 0.0);
            for r in results {
                let s = r.stats.rule(rule);
                hits += s.hits_on_min;
                failures += s.failures;
                for l in r.outcomes.iter().filter_map(|o| found(o, rule)) {
                    max = max.max(l);
                    sum += l;
                    count += 1;
                }
            }
            let mean = if count > 0 { sum / count as f64 } else { f64::NAN };
            let total = RuleStats {
                hits_on_min: hits,
                max_lambda: max,
                mean_lambda: mean,
                failures,
                trials: count + failures,
            };
            stats_row(Vec::new(), rule.as_str(), &total)
        }),
    )?;
    out.write_csv(
        "trials.csv",
        &["pair", "trial", "rule", "lambda", "hit"],
        results.iter().enumerate().flat_map(|(p, r)| {
            r.outcomes.iter().flat_map(move |o| {
                RULES.iter().map(move |&rule| {
                    let l = found(o, rule);
                    let hit = l.is_some_and(|l| {
                        spectral_descent::newton::is_hit_within(l, r.stats.lambda_min, r.rtol)
                    });
                    vec![
                        p.to_string(),
                        o.trial.to_string(),
                        rule.as_str().to_string(),
                        l.map_or_else(|| "NaN".to_string(), num),
                        u8::from(hit).to_string(),
                    ]
                })
            })
        }),
    )?;
    Ok(Status::Complete)
}
