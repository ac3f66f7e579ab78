use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::field::{inner_interior, neg_laplacian_into};
use super::{GridDomain, GridField};
use crate::error::{Error, Result};

/// Parameters of the explicit-Euler gradient flow.
///
/// `tol` is measured in stencil units: the discrete L² norm of the
/// residual `−Δ_d u + γ(1 − 1/‖u‖)u` times `h/4`, i.e. the Euclidean norm
/// of the residual of the unscaled stencil `u − ¼Σ neighbours`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    pub gamma: f64,
    pub dt: f64,
    pub tol: f64,
    pub max_steps: usize,
    pub seed: u64,
}

impl FlowConfig {
    pub const DEFAULT_GAMMA: f64 = 50.0;
    pub const DEFAULT_DT_FACTOR: f64 = 0.17;
    pub const MAX_DT_FACTOR: f64 = 0.25;
    pub const DEFAULT_TOL: f64 = 1e-13;
    pub const DEFAULT_MAX_STEPS: usize = 10_000_000;

    /// Defaults for `domain`: `γ = 50`, `dt = 0.17h²`, `tol = 1e-13`.
    pub fn new(domain: &GridDomain) -> Self {
        FlowConfig {
            gamma: Self::DEFAULT_GAMMA,
            dt: Self::DEFAULT_DT_FACTOR * domain.h() * domain.h(),
            tol: Self::DEFAULT_TOL,
            max_steps: Self::DEFAULT_MAX_STEPS,
            seed: 0,
        }
    }

    /// Rejects `dt > 0.25h²` and negative or non-finite `γ`.
    pub fn validate(&self, domain: &GridDomain) -> Result<()> {
        let h2 = domain.h() * domain.h();
        if !(self.dt > 0.0) || self.dt > Self::MAX_DT_FACTOR * h2 {
            return Err(Error::StepsizeTooLarge {
                alpha: self.dt,
                bound: Self::MAX_DT_FACTOR * h2,
            });
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidGamma {
                gamma: self.gamma,
                bound: 0.0,
            });
        }
        Ok(())
    }
}

/// Converts a discrete L² residual to stencil units.
pub fn to_stencil_units(h: f64, l2: f64) -> f64 {
    0.25 * h * l2
}

/// Converts a stencil-unit tolerance to a discrete L² residual.
pub fn from_stencil_units(h: f64, stencil: f64) -> f64 {
    4.0 * stencil / h
}

/// The discrete functional `½⟨−Δ_d u, u⟩ + (γ/2)‖u‖² − γ‖u‖`.
pub fn functional_value(u: &GridField, gamma: f64) -> f64 {
    let lu = u.apply_neg_laplacian();
    let d = u.domain();
    let nu = u.norm();
    0.5 * inner_interior(d, lu.values(), u.values()) + 0.5 * gamma * nu * nu - gamma * nu
}

/// Gradient `−Δ_d u + γ(1 − 1/‖u‖)u` into `out`; returns `‖u‖`.
fn gradient_into(d: &GridDomain, gamma: f64, u: &[f64], out: &mut [f64]) -> f64 {
    let nu = libm::sqrt(inner_interior(d, u, u));
    neg_laplacian_into(d, u, out);
    let c = gamma * (1.0 - 1.0 / nu);
    for &p in d.interior() {
        out[p] += c * u[p];
    }
    nu
}

/// One explicit-Euler step `u − dt(−Δ_d u + γ(1 − 1/‖u‖)u)`.
pub fn flow_step(u: &GridField, cfg: &FlowConfig) -> Result<GridField> {
    let d = u.domain();
    cfg.validate(d)?;
    if !(u.norm() > 0.0) {
        return Err(Error::ZeroVector);
    }
    let mut g = vec![0.0; d.len()];
    gradient_into(d, cfg.gamma, u.values(), &mut g);
    let mut next = u.clone();
    let v = next.values_mut();
    for &p in d.interior() {
        v[p] -= cfg.dt * g[p];
    }
    Ok(next)
}

/// Residual of `u` in stencil units, after removing the components along
/// the L²-orthonormal `basis`.
pub fn flow_residual(u: &GridField, gamma: f64, basis: &[GridField]) -> f64 {
    let d = u.domain();
    let mut g = vec![0.0; d.len()];
    gradient_into(d, gamma, u.values(), &mut g);
    project(d, basis, &mut g);
    to_stencil_units(d.h(), libm::sqrt(inner_interior(d, &g, &g)))
}

/// Modified Gram–Schmidt against an L²-orthonormal basis.
fn project(d: &GridDomain, basis: &[GridField], v: &mut [f64]) {
    for b in basis {
        let c = inner_interior(d, b.values(), v);
        for &p in d.interior() {
            v[p] -= c * b.values()[p];
        }
    }
}

/// Result of running the flow to a stop.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRun {
    /// The converged field before normalization (norm `γ/(γ+λ)`).
    pub u: GridField,
    pub lambda: f64,
    pub steps: usize,
    /// Final residual in stencil units.
    pub residual: f64,
    pub converged: bool,
}

/// Runs the flow from `u0`, re-orthogonalizing against `basis` after
/// every step, until the projected residual drops below `cfg.tol` (stencil
/// units) or `cfg.max_steps` is reached. `λ = γ(1/‖u‖ − 1)`.
pub fn run_flow(u0: &GridField, basis: &[GridField], cfg: &FlowConfig) -> Result<FlowRun> {
    let d = Arc::clone(u0.domain());
    cfg.validate(&d)?;
    if !(cfg.gamma > 0.0) {
        return Err(Error::InvalidGamma {
            gamma: cfg.gamma,
            bound: 0.0,
        });
    }
    if basis.iter().any(|b| !b.same_domain(u0)) {
        return Err(Error::invalid("basis fields live on a different domain"));
    }
    let mut u = u0.values().to_vec();
    project(&d, basis, &mut u);
    let mut g = vec![0.0; d.len()];
    let mut steps = 0;
    let stencil = 0.25 * d.h();
    loop {
        let nu = gradient_into(&d, cfg.gamma, &u, &mut g);
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::ZeroVector);
        }
        project(&d, basis, &mut g);
        let residual = stencil * libm::sqrt(inner_interior(&d, &g, &g));
        let converged = residual < cfg.tol;
        if converged || steps >= cfg.max_steps {
            let u = GridField::from_values(&d, u)?;
            return Ok(FlowRun {
                u,
                lambda: cfg.gamma * (1.0 / nu - 1.0),
                steps,
                residual,
                converged,
            });
        }
        for &p in d.interior() {
            u[p] -= cfg.dt * g[p];
        }
        project(&d, basis, &mut u);
        steps += 1;
    }
}

/// One computed eigenpair of the grid Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEigenpair {
    pub lambda: f64,
    /// L²-normalized eigenfunction.
    pub u: GridField,
    /// `‖u_raw‖` of the converged field before normalization.
    pub raw_norm: f64,
    pub steps: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenfunctionOutcome {
    pub pairs: Vec<GridEigenpair>,
    /// Index of the eigenfunction whose flow hit `max_steps`, if any.
    pub failed_at: Option<usize>,
}

/// Sub-stream name of the starting field for eigenfunction `j`.
pub fn start_stream(j: usize) -> alloc::string::String {
    format!("grid/eig/{j}/u0")
}

/// The `count` smallest eigenpairs of `−Δ_d`, each by the flow from a
/// seeded random field, deflated against the ones already found.
pub fn solve_eigenfunctions(
    domain: &Arc<GridDomain>,
    count: usize,
    cfg: &FlowConfig,
) -> Result<EigenfunctionOutcome> {
    solve_eigenfunctions_with(domain, count, cfg, |_, _| {})
}

/// [`solve_eigenfunctions`] with a callback after each pair.
pub fn solve_eigenfunctions_with(
    domain: &Arc<GridDomain>,
    count: usize,
    cfg: &FlowConfig,
    mut on_pair: impl FnMut(usize, &GridEigenpair),
) -> Result<EigenfunctionOutcome> {
    if count == 0 || count > domain.interior_count() {
        return Err(Error::invalid("count must lie in 1..=#interior cells"));
    }
    let mut pairs: Vec<GridEigenpair> = Vec::with_capacity(count);
    let mut basis: Vec<GridField> = Vec::with_capacity(count);
    for j in 0..count {
        let u0 = GridField::random(domain, cfg.seed, &start_stream(j));
        let run = run_flow(&u0, &basis, cfg)?;
        if !run.converged {
            return Ok(EigenfunctionOutcome {
                pairs,
                failed_at: Some(j),
            });
        }
        let raw_norm = run.u.norm();
        let mut u = run.u;
        u.scale(1.0 / raw_norm);
        let pair = GridEigenpair {
            lambda: run.lambda,
            u: u.clone(),
            raw_norm,
            steps: run.steps,
            residual: run.residual,
        };
        on_pair(j, &pair);
        pairs.push(pair);
        basis.push(u);
    }
    Ok(EigenfunctionOutcome {
        pairs,
        failed_at: None,
    })
}

/// `(2/h²)(2 − cos(nπh) − cos(mπh))`: the eigenvalue of the sampled mode
/// `sin(nπx)sin(mπy)` on the full square.
pub fn closed_form_square_eig(n_mode: u32, m_mode: u32, h: f64) -> f64 {
    let pi = core::f64::consts::PI;
    (2.0 / (h * h))
        * (2.0 - libm::cos(f64::from(n_mode) * pi * h) - libm::cos(f64::from(m_mode) * pi * h))
}
