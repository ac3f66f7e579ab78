//! The functional `F_{A,B}(x) = ½xᵀAx + (γ/2)xᵀBx − γ‖x‖_B`, its
//! derivatives, the eigenvalue-from-norm law and automatic choice of the
//! shift `γ` and stepsize `α`.
//!
//! A nonzero `x` is a critical point exactly when `Ax = λBx` with
//! `‖x‖_B = γ/(γ+λ)`; there `F(x) = −γ²/(2(γ+λ))`. The condition
//! `γ > max(0, −λ₁)` makes every local minimizer global.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, sub, Cholesky, Matrix, SymMatrix};

/// Symmetric positive definite matrix with its Cholesky factor, computed at
/// construction so that reads never mutate.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    base: SymMatrix,
    chol: Cholesky,
}

impl SpdMatrix {
    pub fn new(base: SymMatrix) -> Result<Self> {
        let chol = Cholesky::factor(&base)?;
        Ok(SpdMatrix { base, chol })
    }

    pub fn identity(n: usize) -> Self {
        SpdMatrix::new(SymMatrix::identity(n)).expect("identity is SPD")
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn sym(&self) -> &SymMatrix {
        &self.base
    }

    pub fn cholesky(&self) -> &Cholesky {
        &self.chol
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.base.matvec(x)
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        norm(&self.chol.lt_mul(x))
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.base.matvec(y))
    }

    /// `B⁻¹ rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.chol.solve(rhs)
    }

    /// Gershgorin upper bound on `μ_{B,N}`.
    pub fn upper_bound(&self) -> f64 {
        self.base.gershgorin_bounds().1
    }

    /// Certified positive lower bound on `μ_{B,1}`.
    pub fn lower_bound(&self) -> f64 {
        let gersh = self.base.gershgorin_bounds().0;
        self.chol.min_eigenvalue_lower_bound().max(gersh)
    }
}

/// `‖x‖_B`, or the Euclidean norm when `b` is absent.
pub fn b_norm(b: Option<&SpdMatrix>, x: &[f64]) -> f64 {
    match b {
        Some(b) => b.norm(x),
        None => norm(x),
    }
}

/// `⟨x, y⟩_B`.
pub fn b_inner(b: Option<&SpdMatrix>, x: &[f64], y: &[f64]) -> f64 {
    match b {
        Some(b) => b.inner(x, y),
        None => dot(x, y),
    }
}

/// `B x`, or a copy of `x`.
pub fn b_apply(b: Option<&SpdMatrix>, x: &[f64]) -> Vec<f64> {
    match b {
        Some(b) => b.matvec(x),
        None => x.to_vec(),
    }
}

pub fn rayleigh_quotient(a: &SymMatrix, b: Option<&SpdMatrix>, x: &[f64]) -> f64 {
    let nb = b_norm(b, x);
    a.quadratic_form(x) / (nb * nb)
}

/// Certified lower bound on the smallest eigenvalue of the pencil `(A, B)`.
pub fn lambda1_lower_bound(a: &SymMatrix, b: Option<&SpdMatrix>) -> f64 {
    let lo_a = a.gershgorin_bounds().0;
    match b {
        None => lo_a,
        Some(b) if lo_a >= 0.0 => lo_a / b.upper_bound(),
        Some(b) => lo_a / b.lower_bound(),
    }
}

/// Certified upper bound on the largest eigenvalue of the pencil `(A, B)`.
pub fn lambda_n_upper_bound(a: &SymMatrix, b: Option<&SpdMatrix>) -> f64 {
    let hi_a = a.gershgorin_bounds().1;
    match b {
        None => hi_a,
        Some(b) if hi_a > 0.0 => hi_a / b.lower_bound(),
        Some(b) => hi_a / b.upper_bound(),
    }
}

/// The functional `F_{A,B}` for a fixed shift `γ`.
#[derive(Debug, Clone, Copy)]
pub struct Functional<'a> {
    a: &'a SymMatrix,
    b: Option<&'a SpdMatrix>,
    gamma: f64,
}

impl<'a> Functional<'a> {
    /// Validates `γ > max(0, −L)` against the certified Gershgorin lower
    /// bound `L` on `λ₁`.
    pub fn new(a: &'a SymMatrix, b: Option<&'a SpdMatrix>, gamma: f64) -> Result<Self> {
        Self::with_lower_bound(a, b, gamma, lambda1_lower_bound(a, b))
    }

    /// Like [`Functional::new`] but with a caller-supplied lower bound on
    /// `λ₁` (for example the exact value from the oracle).
    pub fn with_lower_bound(
        a: &'a SymMatrix,
        b: Option<&'a SpdMatrix>,
        gamma: f64,
        lambda1_lower: f64,
    ) -> Result<Self> {
        if let Some(b) = b {
            if b.n() != a.n() {
                return Err(Error::DimensionMismatch {
                    expected: a.n(),
                    found: b.n(),
                });
            }
        }
        let bound = (-lambda1_lower).max(0.0);
        if !(gamma > bound) || !gamma.is_finite() {
            return Err(Error::InvalidGamma { gamma, bound });
        }
        Ok(Functional { a, b, gamma })
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn a(&self) -> &'a SymMatrix {
        self.a
    }

    pub fn b(&self) -> Option<&'a SpdMatrix> {
        self.b
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: x.len(),
            });
        }
        Ok(())
    }

    fn nonzero_norm(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let nb = b_norm(self.b, x);
        if nb > 0.0 {
            Ok(nb)
        } else {
            Err(Error::ZeroVector)
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let nb = b_norm(self.b, x);
        Ok(0.5 * self.a.quadratic_form(x) + 0.5 * self.gamma * nb * nb - self.gamma * nb)
    }

    /// `Ax + γ(1 − 1/‖x‖_B)Bx`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let nb = self.nonzero_norm(x)?;
        let mut g = self.a.matvec(x);
        let bx = b_apply(self.b, x);
        axpy(self.gamma * (1.0 - 1.0 / nb), &bx, &mut g);
        Ok(g)
    }

    /// `A + γB − (γ/‖x‖_B)(B − Bx xᵀB/‖x‖_B²)`.
    pub fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        let nb = self.nonzero_norm(x)?;
        let n = self.n();
        let bx = b_apply(self.b, x);
        let c = self.gamma / nb;
        let mut h = self.a.matrix().clone();
        for i in 0..n {
            for j in 0..n {
                let bij = match self.b {
                    Some(b) => b.sym()[(i, j)],
                    None => f64::from(u8::from(i == j)),
                };
                h[(i, j)] += (self.gamma - c) * bij + c * bx[i] * bx[j] / (nb * nb);
            }
        }
        SymMatrix::new(h)
    }

    /// The pair read off a (near-)critical point: `λ = γ(1/‖x‖_B − 1)`.
    pub fn pair_from_norm(&self, x: Vec<f64>) -> Result<SpectralPair> {
        let lambda = eigenvalue_from_norm(self.gamma, &x, self.b)?;
        Ok(SpectralPair::new(self.a, self.b, self.gamma, lambda, x))
    }
}

/// `λ = γ(1/‖x‖_B − 1)`, the inverse of the norm law `‖x‖_B = γ/(γ+λ)`.
pub fn eigenvalue_from_norm(gamma: f64, x: &[f64], b: Option<&SpdMatrix>) -> Result<f64> {
    let nb = b_norm(b, x);
    if !(nb > 0.0) {
        return Err(Error::ZeroVector);
    }
    Ok(gamma * (1.0 / nb - 1.0))
}

/// `γ = max(0, −L) + margin` where `L` is a certified lower bound on `λ₁`
/// of the standard-form matrix: Gershgorin for `B = I`; for general `B`
/// the Gershgorin bound of `A` divided by the matching bound on the
/// spectrum of `B` (upper if `L_A ≥ 0`, certified lower otherwise).
pub fn choose_gamma(a: &SymMatrix, b: Option<&SpdMatrix>, margin: f64) -> f64 {
    (-lambda1_lower_bound(a, b)).max(0.0) + margin
}

/// Stepsize for plain gradient descent: `safety/(U_A+γ)` for `B = I`,
/// `safety/((U_A+γ)·U_B³)` otherwise, with Gershgorin upper bounds `U`.
pub fn choose_stepsize(a: &SymMatrix, b: Option<&SpdMatrix>, gamma: f64, safety: f64) -> f64 {
    let ua = a.gershgorin_bounds().1;
    match b {
        None => safety / (ua + gamma),
        Some(b) => {
            let ub = b.upper_bound();
            safety / ((ua + gamma) * ub * ub * ub)
        }
    }
}

/// Stepsize for B-metric descent: `safety/(U_C+γ)` with `U_C` a certified
/// upper bound on the largest generalized eigenvalue.
pub fn choose_b_metric_stepsize(
    a: &SymMatrix,
    b: Option<&SpdMatrix>,
    gamma: f64,
    safety: f64,
) -> f64 {
    safety / (lambda_n_upper_bound(a, b) + gamma)
}

/// Shared solver parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub gamma: f64,
    pub alpha: f64,
    pub tol_grad: f64,
    pub tol_residual: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Skip the stepsize bound check. Runs may then diverge.
    pub force_alpha: bool,
    /// Record every `trace_every`-th iterate (the last one is always kept).
    pub trace_every: usize,
}

impl SolverConfig {
    pub const DEFAULT_TOL_GRAD: f64 = 1e-12;
    pub const DEFAULT_TOL_RESIDUAL: f64 = 1e-13;
    pub const DEFAULT_MAX_ITER: usize = 10_000_000;
    pub const DEFAULT_NEWTON_MAX_ITER: usize = 200;

    pub fn new(gamma: f64, alpha: f64) -> Self {
        SolverConfig {
            gamma,
            alpha,
            tol_grad: Self::DEFAULT_TOL_GRAD,
            tol_residual: Self::DEFAULT_TOL_RESIDUAL,
            max_iter: Self::DEFAULT_MAX_ITER,
            seed: 0,
            force_alpha: false,
            trace_every: 1,
        }
    }

    /// Newton-oriented defaults: the stepsize is unused and the iteration
    /// cap is 200.
    pub fn newton(gamma: f64) -> Self {
        SolverConfig {
            max_iter: Self::DEFAULT_NEWTON_MAX_ITER,
            ..SolverConfig::new(gamma, 1.0)
        }
    }

    /// `γ` from [`choose_gamma`] (margin 1) and `α` from [`choose_stepsize`]
    /// (safety 0.9).
    pub fn auto(a: &SymMatrix, b: Option<&SpdMatrix>) -> Self {
        let gamma = choose_gamma(a, b, 1.0);
        SolverConfig::new(gamma, choose_stepsize(a, b, gamma, 0.9))
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Solver output: eigenvalue, vector, scaled residual
/// `‖Ax − λBx‖/(1+‖A‖_F)` and norm-law gap `|‖x‖_B − γ/(γ+λ)|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPair {
    pub lambda: f64,
    pub x: Vec<f64>,
    pub residual: f64,
    pub norm_law_gap: f64,
}

impl SpectralPair {
    pub fn new(
        a: &SymMatrix,
        b: Option<&SpdMatrix>,
        gamma: f64,
        lambda: f64,
        x: Vec<f64>,
    ) -> Self {
        let residual = residual_norm(a, b, lambda, &x) / (1.0 + a.frobenius_norm());
        let norm_law_gap = (b_norm(b, &x) - gamma / (gamma + lambda)).abs();
        SpectralPair {
            lambda,
            x,
            residual,
            norm_law_gap,
        }
    }

    /// `‖x‖_B`.
    pub fn norm_b(&self, b: Option<&SpdMatrix>) -> f64 {
        b_norm(b, &self.x)
    }
}

/// Unscaled residual `‖Ax − λBx‖`.
pub fn residual_norm(a: &SymMatrix, b: Option<&SpdMatrix>, lambda: f64, x: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let mut bx = b_apply(b, x);
    crate::linalg::scale(lambda, &mut bx);
    norm(&sub(&ax, &bx))
}

/// Dense `B` as a matrix, identity when absent.
pub(crate) fn b_matrix(b: Option<&SpdMatrix>, n: usize) -> Matrix {
    match b {
        Some(b) => b.sym().matrix().clone(),
        None => Matrix::identity(n),
    }
}
