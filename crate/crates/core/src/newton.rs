//! Newton iteration on `F_{A,B}` in its shifted-plus-rank-one form
//!
//! ```text
//! [(A − λ_k B) + (γ+λ_k)(By)(By)ᵀ] x_{k+1} = γ B y,   y = x_k/‖x_k‖_B
//! ```
//!
//! with two eigenvalue update rules, the norm-law stopping criterion, and
//! the one-step eigenvector estimators built on the same system.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::functional::{
    b_apply, b_matrix, b_norm, rayleigh_quotient, residual_norm, Functional, SolverConfig,
    SpdMatrix, SpectralPair,
};
use crate::gd::random_start;
use crate::linalg::{dot, lu_solve, lu_solve_many, norm, scale, Cholesky, Lu, Matrix, SymMatrix};
use crate::oracle::generalized_eigh;
use crate::trace::{IterationTrace, TerminalReason, TraceRecord};

/// How `λ_k` is formed from the current iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateRule {
    /// `λ_k = γ(1/‖x_k‖_B − 1)`.
    NormBased,
    /// `λ_k = x_kᵀAx_k / x_kᵀBx_k`.
    Rayleigh,
}

impl UpdateRule {
    pub fn as_str(self) -> &'static str {
        match self {
            UpdateRule::NormBased => "norm_based",
            UpdateRule::Rayleigh => "rayleigh",
        }
    }

    pub fn lambda(self, a: &SymMatrix, b: Option<&SpdMatrix>, gamma: f64, x: &[f64]) -> f64 {
        match self {
            UpdateRule::NormBased => gamma * (1.0 / b_norm(b, x) - 1.0),
            UpdateRule::Rayleigh => rayleigh_quotient(a, b, x),
        }
    }
}

/// One Newton step: shift `λ_k`, weight `γ+λ_k`, B-unit direction `y_k`,
/// and right-hand side `γBy_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonStepSystem {
    pub lambda_k: f64,
    pub rank_one_weight: f64,
    pub y: Vec<f64>,
    pub by: Vec<f64>,
    pub right_hand_side: Vec<f64>,
}

impl NewtonStepSystem {
    pub fn new(
        a: &SymMatrix,
        b: Option<&SpdMatrix>,
        gamma: f64,
        x: &[f64],
        rule: UpdateRule,
    ) -> Result<Self> {
        let nb = b_norm(b, x);
        if !(nb > 0.0) {
            return Err(Error::ZeroVector);
        }
        let lambda_k = rule.lambda(a, b, gamma, x);
        let mut y = x.to_vec();
        scale(1.0 / nb, &mut y);
        let by = b_apply(b, &y);
        let mut right_hand_side = by.clone();
        scale(gamma, &mut right_hand_side);
        Ok(NewtonStepSystem {
            lambda_k,
            rank_one_weight: gamma + lambda_k,
            y,
            by,
            right_hand_side,
        })
    }

    /// The dense system matrix `(A − λ_k B) + (γ+λ_k)(By)(By)ᵀ`.
    pub fn matrix(&self, a: &SymMatrix, b: Option<&SpdMatrix>) -> Matrix {
        let n = a.n();
        let bm = b_matrix(b, n);
        let mut m = a.matrix().clone();
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += -self.lambda_k * bm[(i, j)]
                    + self.rank_one_weight * self.by[i] * self.by[j];
            }
        }
        m
    }

    pub fn solve(&self, a: &SymMatrix, b: Option<&SpdMatrix>) -> Result<Vec<f64>> {
        lu_solve(&self.matrix(a, b), &self.right_hand_side)
    }

    /// [`residual_stop`] for the solution `x_next` of this system.
    pub fn residual_stop(&self, gamma: f64, x_next: &[f64]) -> f64 {
        residual_stop(gamma, self.lambda_k, &self.by, x_next)
    }
}

/// `|γ(1 − (1+λ_k/γ)(y_kᵀx_{k+1}))|`. For `B = I` and an exact step this
/// equals `‖Ax_{k+1} − λ_k x_{k+1}‖`. In the generalized form pass `B y_k`
/// in place of `y_k`.
pub fn residual_stop(gamma: f64, lambda_k: f64, y_k: &[f64], x_next: &[f64]) -> f64 {
    (gamma * (1.0 - (1.0 + lambda_k / gamma) * dot(y_k, x_next))).abs()
}

const DIVERGENCE_NORM: f64 = 10.0 / f64::EPSILON;

fn record(f: &Functional<'_>, k: usize, x: &[f64], lambda_est: f64) -> TraceRecord {
    let grad_norm = f.gradient(x).map(|g| norm(&g)).unwrap_or(f64::NAN);
    TraceRecord {
        k,
        f_value: f.evaluate(x).unwrap_or(f64::NAN),
        grad_norm,
        x_norm_b: b_norm(f.b(), x),
        lambda_est,
    }
}

/// Newton iteration with a fixed `γ`. Stops when the eigen-residual
/// `‖Ax_k − λ_kBx_k‖` of the current iterate drops to `cfg.tol_residual`,
/// or when a step has both [`residual_stop`] and the norm-law gap
/// `|γ − (γ+λ_k)‖x_{k+1}‖_B|` below it. A singular step system ends the run with
/// [`TerminalReason::SingularSystem`] and the last iterate.
pub fn newton_solve(
    a: &SymMatrix,
    b: Option<&SpdMatrix>,
    cfg: &SolverConfig,
    x0: &[f64],
    rule: UpdateRule,
) -> Result<(SpectralPair, IterationTrace)> {
    let n = a.n();
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x0.len(),
        });
    }
    if !(b_norm(b, x0) > 0.0) {
        return Err(Error::ZeroVector);
    }
    let f = Functional::new(a, b, cfg.gamma)?;
    let gamma = cfg.gamma;
    let every = cfg.trace_every.max(1);
    let mut trace = IterationTrace::new();
    let mut x = x0.to_vec();
    let mut k = 0usize;
    loop {
        let lambda_k = rule.lambda(a, b, gamma, &x);
        let settled = residual_norm(a, b, lambda_k, &x) <= cfg.tol_residual;
        let done = settled || k >= cfg.max_iter;
        if k % every == 0 || done {
            trace.records.push(record(&f, k, &x, lambda_k));
        }
        if done {
            trace.terminal_reason = if settled {
                TerminalReason::Converged
            } else {
                TerminalReason::MaxIter
            };
            break;
        }
        let system = NewtonStepSystem::new(a, b, gamma, &x, rule)?;
        let x_next = match system.solve(a, b) {
            Ok(v) => v,
            Err(Error::SingularSystem { .. }) => {
                trace.records.push(record(&f, k, &x, lambda_k));
                trace.terminal_reason = TerminalReason::SingularSystem;
                break;
            }
            Err(e) => return Err(e),
        };
        let nb = b_norm(b, &x_next);
        if !nb.is_finite() || nb > DIVERGENCE_NORM || nb == 0.0 {
            trace.records.push(record(&f, k, &x, lambda_k));
            trace.terminal_reason = TerminalReason::Diverged;
            break;
        }
        let stop = system.residual_stop(gamma, &x_next);
        // a step can land on an eigenvector of λ_k whose norm still
        // violates the norm law; such a step is not accepted as final
        let norm_gap = (gamma - system.rank_one_weight * nb).abs();
        x = x_next;
        k += 1;
        if stop <= cfg.tol_residual && norm_gap <= cfg.tol_residual {
            let lambda = rule.lambda(a, b, gamma, &x);
            trace.records.push(record(&f, k, &x, lambda));
            trace.terminal_reason = TerminalReason::Converged;
            break;
        }
    }
    trace.iterations = k;
    let lambda = rule.lambda(a, b, gamma, &x);
    Ok((SpectralPair::new(a, b, gamma, lambda, x), trace))
}

const ONE_STEP_RESIDUAL: f64 = 1e-8;
const RANK_SIGMA_MIN: f64 = 1e-6;
const MULTIPLICITY_HINT: &str = "the eigenvalue may be repeated; try eigspace_from_eigval";

fn one_step_start(n: usize, seed: u64, column: usize) -> Vec<f64> {
    random_start(n, seed, &format!("onestep/x0/{column}"))
}

fn one_step_matrix(a: &Matrix, lambda: f64, gamma: f64, x0: &[Vec<f64>]) -> Matrix {
    let n = a.rows();
    let mut m = a.clone();
    for i in 0..n {
        m[(i, i)] -= lambda;
        for j in 0..n {
            let outer: f64 = x0.iter().map(|c| c[i] * c[j]).sum();
            m[(i, j)] += (gamma + lambda) * outer;
        }
    }
    m
}

fn check_one_step_params(lambda: f64, gamma: f64) -> Result<()> {
    if !(gamma > 0.0) || gamma + lambda == 0.0 {
        return Err(Error::InvalidGamma {
            gamma,
            bound: (-lambda).max(0.0),
        });
    }
    Ok(())
}

fn check_residual(a: &SymMatrix, lambda: f64, x: &[f64]) -> Result<()> {
    let limit = ONE_STEP_RESIDUAL * (1.0 + a.frobenius_norm());
    let residual = residual_norm(a, None, lambda, x);
    if residual.is_nan() || residual > limit {
        return Err(Error::ResidualTooLarge {
            residual,
            limit,
            hint: MULTIPLICITY_HINT,
        });
    }
    Ok(())
}

/// One linear solve `(A − λ̃I + (γ+λ̃)x₀x₀ᵀ)x = γx₀` from a random unit
/// `x₀`. For a simple eigenvalue `λ̃` the solution is an eigenvector with
/// `x₀ᵀx = γ/(γ+λ̃)`.
pub fn eigvec_from_eigval(a: &SymMatrix, lambda: f64, gamma: f64, seed: u64) -> Result<Vec<f64>> {
    let mut cols = eigspace_system(a, lambda, 1, gamma, seed)?;
    let x = cols.remove(0);
    check_residual(a, lambda, &x)?;
    Ok(x)
}

fn eigspace_system(
    a: &SymMatrix,
    lambda: f64,
    m: usize,
    gamma: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    check_one_step_params(lambda, gamma)?;
    let n = a.n();
    if m == 0 || m > n {
        return Err(Error::invalid("multiplicity must lie in 1..=n"));
    }
    let x0: Vec<Vec<f64>> = (0..m).map(|c| one_step_start(n, seed, c)).collect();
    let mat = one_step_matrix(a.matrix(), lambda, gamma, &x0);
    let rhs: Vec<Vec<f64>> = x0
        .iter()
        .map(|c| c.iter().map(|v| gamma * v).collect())
        .collect();
    lu_solve_many(&mat, &rhs)
}

/// Block version for an eigenvalue of known multiplicity `m`: solves
/// `(A − λ̃I + (γ+λ̃)X₀X₀ᵀ)X = γX₀` with `m` random unit columns and checks
/// that the columns are eigenvectors of full rank.
pub fn eigspace_from_eigval(
    a: &SymMatrix,
    lambda: f64,
    m: usize,
    gamma: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let cols = eigspace_system(a, lambda, m, gamma, seed)?;
    for c in &cols {
        check_residual(a, lambda, c)?;
    }
    // σ_min of the normalized columns exceeds the threshold iff
    // Gram − σ²I is positive definite
    let normalized: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| {
            let mut v = c.clone();
            scale(1.0 / norm(c), &mut v);
            v
        })
        .collect();
    let mut gram = Matrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            gram[(i, j)] = dot(&normalized[i], &normalized[j]);
        }
        gram[(i, i)] -= RANK_SIGMA_MIN * RANK_SIGMA_MIN;
    }
    let full_rank = SymMatrix::new(gram)
        .and_then(|g| Cholesky::factor(&g))
        .is_ok();
    if !full_rank {
        return Err(Error::RankDeficient);
    }
    Ok(cols)
}

/// Distance between the solutions of `(A − λI + (γ+λ)x₀x₀ᵀ)x = γx₀` at
/// `λ = λ̃ + δ` and the limit `x̃ = lim_{δ→0} x_λ`, for each offset `δ`.
///
/// `A` may be nonsymmetric. The limit is estimated by linear
/// extrapolation from the two smallest offsets,
/// `x̃ = (δ₂x_{δ₁} − δ₁x_{δ₂})/(δ₂ − δ₁)`, which removes the first-order
/// term so that the reported error scales like `|δ|`.
pub fn perturbed_eigvec_error(
    a: &Matrix,
    lambda: f64,
    offsets: &[f64],
    gamma: f64,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if !a.is_square() {
        return Err(Error::invalid("matrix must be square"));
    }
    check_one_step_params(lambda, gamma)?;
    if offsets.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
        return Err(Error::invalid("offsets must be positive and finite"));
    }
    let mut sorted = offsets.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if sorted.len() < 2 {
        return Err(Error::invalid("need at least two distinct offsets"));
    }
    let n = a.rows();
    let x0 = [one_step_start(n, seed, 0)];
    let solve_at = |delta: f64| -> Result<Vec<f64>> {
        let l = lambda + delta;
        let rhs: Vec<f64> = x0[0].iter().map(|v| gamma * v).collect();
        Lu::factor(&one_step_matrix(a, l, gamma, &x0)).map(|lu| lu.solve(&rhs))
    };
    let (d1, d2) = (sorted[0], sorted[1]);
    let x1 = solve_at(d1)?;
    let x2 = solve_at(d2)?;
    let reference: Vec<f64> = x1
        .iter()
        .zip(&x2)
        .map(|(p, q)| (d2 * p - d1 * q) / (d2 - d1))
        .collect();
    offsets
        .iter()
        .map(|&d| {
            let x = solve_at(d)?;
            let err = norm(&crate::linalg::sub(&x, &reference));
            Ok((d, err))
        })
        .collect()
}

/// Outcome of one comparison trial: the eigenvalue each rule converged
/// to, or `None` when it did not converge.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub norm_based: Option<f64>,
    pub rayleigh: Option<f64>,
}

/// Per-rule tallies over a set of trials.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleStats {
    pub hits_on_min: usize,
    pub max_lambda: f64,
    pub mean_lambda: f64,
    pub failures: usize,
    pub trials: usize,
}

impl RuleStats {
    fn from_outcomes(found: impl Iterator<Item = Option<f64>>, lambda_min: f64, rtol: f64) -> Self {
        let mut stats = RuleStats {
            hits_on_min: 0,
            max_lambda: f64::NEG_INFINITY,
            mean_lambda: f64::NAN,
            failures: 0,
            trials: 0,
        };
        let mut sum = 0.0;
        let mut count = 0usize;
        for f in found {
            stats.trials += 1;
            match f {
                Some(l) => {
                    if is_hit_within(l, lambda_min, rtol) {
                        stats.hits_on_min += 1;
                    }
                    stats.max_lambda = stats.max_lambda.max(l);
                    sum += l;
                    count += 1;
                }
                None => stats.failures += 1,
            }
        }
        if count > 0 {
            stats.mean_lambda = sum / count as f64;
        }
        stats
    }
}

/// Relative tolerance of [`is_hit`].
pub const HIT_RTOL: f64 = 1e-13;

/// Hit test against the smallest eigenvalue: `|λ − λ_min| < 1e-13·max(1, |λ_min|)`.
pub fn is_hit(lambda: f64, lambda_min: f64) -> bool {
    is_hit_within(lambda, lambda_min, HIT_RTOL)
}

/// `|λ − λ_min| < rtol·max(1, |λ_min|)`.
pub fn is_hit_within(lambda: f64, lambda_min: f64, rtol: f64) -> bool {
    (lambda - lambda_min).abs() < rtol * lambda_min.abs().max(1.0)
}

/// Both rules' statistics from shared random starts.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonStats {
    pub lambda_min: f64,
    pub norm_based: RuleStats,
    pub rayleigh: RuleStats,
}

impl ComparisonStats {
    pub fn from_trials(outcomes: &[TrialOutcome], lambda_min: f64) -> Self {
        Self::from_trials_within(outcomes, lambda_min, HIT_RTOL)
    }

    /// Tallies with a custom hit tolerance (see [`is_hit_within`]).
    pub fn from_trials_within(outcomes: &[TrialOutcome], lambda_min: f64, rtol: f64) -> Self {
        let tally = |f: fn(&TrialOutcome) -> Option<f64>| {
            RuleStats::from_outcomes(outcomes.iter().map(f), lambda_min, rtol)
        };
        ComparisonStats {
            lambda_min,
            norm_based: tally(|o| o.norm_based),
            rayleigh: tally(|o| o.rayleigh),
        }
    }

    pub fn rule(&self, rule: UpdateRule) -> &RuleStats {
        match rule {
            UpdateRule::NormBased => &self.norm_based,
            UpdateRule::Rayleigh => &self.rayleigh,
        }
    }
}

/// Start of trial `t`: uniform on the unit sphere, from the sub-stream
/// `"trial/t/x0"` of `seed`.
pub fn trial_start(n: usize, seed: u64, trial: usize) -> Vec<f64> {
    random_start(n, seed, &format!("trial/{trial}/x0"))
}

/// Runs both rules from the start of trial `trial`.
pub fn compare_trial(
    a: &SymMatrix,
    b: Option<&SpdMatrix>,
    cfg: &SolverConfig,
    trial: usize,
) -> Result<TrialOutcome> {
    let x0 = trial_start(a.n(), cfg.seed, trial);
    let run = |rule| -> Result<Option<f64>> {
        let (pair, trace) = newton_solve(a, b, cfg, &x0, rule)?;
        Ok(trace.converged().then_some(pair.lambda))
    };
    Ok(TrialOutcome {
        trial,
        norm_based: run(UpdateRule::NormBased)?,
        rayleigh: run(UpdateRule::Rayleigh)?,
    })
}

/// Smallest generalized eigenvalue from the oracle.
pub fn oracle_lambda_min(a: &SymMatrix, b: Option<&SpdMatrix>) -> Result<f64> {
    let identity;
    let b = match b {
        Some(b) => b,
        None => {
            identity = SpdMatrix::identity(a.n());
            &identity
        }
    };
    Ok(generalized_eigh(a, b)?.eigenvalues[0])
}

/// Runs `trials` comparison trials sequentially and tallies hits on the
/// oracle's smallest eigenvalue.
pub fn compare_update_rules(
    a: &SymMatrix,
    b: Option<&SpdMatrix>,
    trials: usize,
    cfg: &SolverConfig,
) -> Result<(ComparisonStats, Vec<TrialOutcome>)> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let lambda_min = oracle_lambda_min(a, b)?;
    let outcomes = (0..trials)
        .map(|t| compare_trial(a, b, cfg, t))
        .collect::<Result<Vec<_>>>()?;
    Ok((ComparisonStats::from_trials(&outcomes, lambda_min), outcomes))
}
