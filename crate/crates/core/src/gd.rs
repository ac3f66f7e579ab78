//! Fixed-step gradient descent on `F_{A,B}`: plain descent for `B = I`,
//! plain descent on the generalized functional, descent in the B-metric
//! and deflated descent for several eigenpairs.
//!
//! All variants stop once the gradient norm falls to `tol_grad` and report
//! the eigenvalue from the norm law.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::functional::{
    b_apply, b_norm, lambda_n_upper_bound, Functional, SolverConfig, SpdMatrix, SpectralPair,
};
use crate::linalg::{axpy, dot, norm, scale, SymMatrix};
use crate::rng::{stream, unit_sphere};
use crate::trace::{IterationTrace, TerminalReason, TraceRecord};

/// Iterates whose B-norm exceeds this are treated as diverged.
const DIVERGENCE_NORM: f64 = 10.0 / f64::EPSILON;

/// A B-orthonormal set of converged eigenvectors, with `B v` cached.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeflationBasis {
    vectors: Vec<Vec<f64>>,
    b_vectors: Vec<Vec<f64>>,
}

impl DeflationBasis {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Normalizes `x` in the B-norm after one more Gram–Schmidt pass and
    /// appends it.
    pub fn push(&mut self, x: &[f64], b: Option<&SpdMatrix>) -> Result<()> {
        let mut v = x.to_vec();
        self.project(&mut v);
        let nv = b_norm(b, &v);
        if !(nv > 0.0) {
            return Err(Error::ZeroVector);
        }
        scale(1.0 / nv, &mut v);
        self.b_vectors.push(b_apply(b, &v));
        self.vectors.push(v);
        Ok(())
    }

    /// Modified Gram–Schmidt: `x ← x − Σ ⟨v_i, x⟩_B v_i`.
    pub fn project(&self, x: &mut [f64]) {
        for (v, bv) in self.vectors.iter().zip(&self.b_vectors) {
            axpy(-dot(bv, x), v, x);
        }
    }

    /// Removes the components of a gradient along `B v_i`, giving the
    /// gradient of the functional restricted to the complement.
    fn project_dual(&self, g: &mut [f64]) {
        for (v, bv) in self.vectors.iter().zip(&self.b_vectors) {
            axpy(-dot(v, g), bv, g);
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Metric {
    Euclidean,
    B,
}

fn check_start(n: usize, x0: &[f64]) -> Result<()> {
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x0.len(),
        });
    }
    if x0.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroVector);
    }
    Ok(())
}

fn check_stepsize(cfg: &SolverConfig, bound: f64) -> Result<()> {
    if !(cfg.alpha > 0.0) || !cfg.alpha.is_finite() {
        return Err(Error::StepsizeTooLarge {
            alpha: cfg.alpha,
            bound,
        });
    }
    if !cfg.force_alpha && !(cfg.alpha < bound) {
        return Err(Error::StepsizeTooLarge {
            alpha: cfg.alpha,
            bound,
        });
    }
    Ok(())
}

/// Largest stepsize accepted by [`gd_standard`]: `1/(U_A+γ)`.
pub fn standard_stepsize_bound(a: &SymMatrix, gamma: f64) -> f64 {
    1.0 / (a.gershgorin_bounds().1 + gamma)
}

/// Largest stepsize accepted by [`gd_generalized`]: the smaller of
/// `1/((U_A+γ)U_B³)` and `1/(U_A+γU_B)`.
pub fn generalized_stepsize_bound(a: &SymMatrix, b: &SpdMatrix, gamma: f64) -> f64 {
    let ua = a.gershgorin_bounds().1;
    let ub = b.upper_bound();
    (1.0 / ((ua + gamma) * ub * ub * ub)).min(1.0 / (ua + gamma * ub))
}

/// Largest stepsize accepted by [`gd_b_metric`]: `1/(U_C+γ)` with `U_C` a
/// certified upper bound on the largest generalized eigenvalue.
pub fn b_metric_stepsize_bound(a: &SymMatrix, b: Option<&SpdMatrix>, gamma: f64) -> f64 {
    1.0 / (lambda_n_upper_bound(a, b) + gamma)
}

fn descend(
    f: &Functional<'_>,
    cfg: &SolverConfig,
    x0: &[f64],
    metric: Metric,
    basis: Option<&DeflationBasis>,
) -> Result<(SpectralPair, IterationTrace)> {
    check_start(f.n(), x0)?;
    let a = f.a();
    let b = f.b();
    let gamma = f.gamma();
    let mut x = x0.to_vec();
    if let Some(basis) = basis {
        basis.project(&mut x);
        if b_norm(b, &x) == 0.0 {
            return Err(Error::ZeroVector);
        }
    }
    let every = cfg.trace_every.max(1);
    let mut trace = IterationTrace::new();
    let mut last_finite = x.clone();
    let mut k = 0usize;
    loop {
        let nb = b_norm(b, &x);
        if !nb.is_finite() || nb > DIVERGENCE_NORM {
            trace.terminal_reason = TerminalReason::Diverged;
            x = last_finite;
            break;
        }
        let ax = a.matvec(&x);
        let bx = b_apply(b, &x);
        let f_value = 0.5 * dot(&x, &ax) + 0.5 * gamma * nb * nb - gamma * nb;
        let mut g = ax;
        axpy(gamma * (1.0 - 1.0 / nb), &bx, &mut g);
        if let Some(basis) = basis {
            basis.project_dual(&mut g);
        }
        let grad_norm = norm(&g);
        let converged = grad_norm <= cfg.tol_grad;
        let done = converged || k >= cfg.max_iter;
        if k % every == 0 || done {
            trace.records.push(TraceRecord {
                k,
                f_value,
                grad_norm,
                x_norm_b: nb,
                lambda_est: gamma * (1.0 / nb - 1.0),
            });
        }
        if done {
            trace.terminal_reason = if converged {
                TerminalReason::Converged
            } else {
                TerminalReason::MaxIter
            };
            break;
        }
        let mut d = match (metric, b) {
            (Metric::B, Some(b)) => b.solve(&g),
            _ => g,
        };
        if let Some(basis) = basis {
            basis.project(&mut d);
        }
        last_finite.copy_from_slice(&x);
        axpy(-cfg.alpha, &d, &mut x);
        if let Some(basis) = basis {
            basis.project(&mut x);
        }
        k += 1;
    }
    trace.iterations = k;
    let pair = f.pair_from_norm(x)?;
    Ok((pair, trace))
}

/// Descent on `F_A` (`B = I`): `x_{k+1} = x_k − α∇F_A(x_k)`, with
/// `α < 1/(U_A+γ)`.
pub fn gd_standard(
    a: &SymMatrix,
    cfg: &SolverConfig,
    x0: &[f64],
) -> Result<(SpectralPair, IterationTrace)> {
    let f = Functional::new(a, None, cfg.gamma)?;
    check_stepsize(cfg, standard_stepsize_bound(a, cfg.gamma))?;
    descend(&f, cfg, x0, Metric::Euclidean, None)
}

/// Plain descent on `F_{A,B}`. Converges to some generalized eigenpair,
/// not necessarily the smallest.
pub fn gd_generalized(
    a: &SymMatrix,
    b: &SpdMatrix,
    cfg: &SolverConfig,
    x0: &[f64],
) -> Result<(SpectralPair, IterationTrace)> {
    let f = Functional::new(a, Some(b), cfg.gamma)?;
    check_stepsize(cfg, generalized_stepsize_bound(a, b, cfg.gamma))?;
    descend(&f, cfg, x0, Metric::Euclidean, None)
}

/// Descent in the B-inner product: `x_{k+1} = x_k − αB⁻¹∇F_{A,B}(x_k)`.
/// Converges to the smallest generalized eigenvalue from generic starts.
pub fn gd_b_metric(
    a: &SymMatrix,
    b: &SpdMatrix,
    cfg: &SolverConfig,
    x0: &[f64],
) -> Result<(SpectralPair, IterationTrace)> {
    let f = Functional::new(a, Some(b), cfg.gamma)?;
    check_stepsize(cfg, b_metric_stepsize_bound(a, Some(b), cfg.gamma))?;
    descend(&f, cfg, x0, Metric::B, None)
}

/// Seeded start drawn uniformly from the unit sphere.
pub fn random_start(n: usize, seed: u64, name: &str) -> Vec<f64> {
    unit_sphere(&mut stream(seed, name), n)
}

/// Which pair stopped a deflated run, and why.
#[derive(Debug, Clone, PartialEq)]
pub struct DeflationFailure {
    pub index: usize,
    pub reason: TerminalReason,
}

/// Output of [`gd_deflated`]. `pairs[j].x` is the raw converged iterate
/// (satisfying the norm law); `basis` holds the same vectors normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct DeflationOutcome {
    pub pairs: Vec<SpectralPair>,
    pub traces: Vec<IterationTrace>,
    pub basis: DeflationBasis,
    pub failure: Option<DeflationFailure>,
}

impl DeflationOutcome {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }
}

/// The `m` smallest eigenpairs, one at a time, each by B-metric descent
/// (plain descent when `b` is absent) restricted to the B-orthogonal
/// complement of the pairs already found. Start `j` is drawn from the
/// sub-stream `"deflation/j/x0"` of `cfg.seed`.
///
/// A pair that fails to converge stops the run; the pairs found so far are
/// returned together with the failure.
pub fn gd_deflated(
    a: &SymMatrix,
    b: Option<&SpdMatrix>,
    cfg: &SolverConfig,
    m: usize,
) -> Result<DeflationOutcome> {
    let n = a.n();
    if m > n {
        return Err(Error::invalid("cannot deflate more pairs than the dimension"));
    }
    let f = Functional::new(a, b, cfg.gamma)?;
    let bound = match b {
        Some(_) => b_metric_stepsize_bound(a, b, cfg.gamma),
        None => standard_stepsize_bound(a, cfg.gamma),
    };
    check_stepsize(cfg, bound)?;
    let mut out = DeflationOutcome {
        pairs: Vec::with_capacity(m),
        traces: Vec::with_capacity(m),
        basis: DeflationBasis::new(),
        failure: None,
    };
    for j in 0..m {
        let x0 = random_start(n, cfg.seed, &format!("deflation/{j}/x0"));
        let (pair, trace) = descend(&f, cfg, &x0, Metric::B, Some(&out.basis))?;
        if !trace.converged() {
            out.failure = Some(DeflationFailure {
                index: j,
                reason: trace.terminal_reason,
            });
            out.traces.push(trace);
            break;
        }
        out.basis.push(&pair.x, b)?;
        out.pairs.push(pair);
        out.traces.push(trace);
    }
    Ok(out)
}
