use alloc::format;
use alloc::sync::Arc;
use alloc::vec;

use super::field::{inner_interior, neg_laplacian_into};
use super::flow::{from_stencil_units, functional_value, to_stencil_units, FlowConfig};
use super::GridField;
use crate::error::{Error, Result};
use crate::krylov::minres;
use crate::newton::UpdateRule;
use crate::trace::{IterationTrace, TerminalReason, TraceRecord};

/// Outer iteration cap of [`newton_grid`].
pub const GRID_NEWTON_MAX_ITER: usize = 200;
/// Outer iterations without residual improvement before giving up.
const STAGNATION_WINDOW: usize = 8;

/// Matrix-free Newton iteration on the grid functional. Each step solves
///
/// ```text
/// [(−Δ_d) − λ_k + (γ+λ_k) y⟨y, ·⟩] x = γ y,   y = u_k/‖u_k‖
/// ```
///
/// by MINRES (the operator is symmetric but indefinite once `λ_k` passes
/// the smallest eigenvalue), starting from `γ/(γ+λ_k)·y`. Stops when the
/// current iterate's eigen-residual, or both the step's norm-law residual
/// and norm gap `|γ − (γ+λ_k)‖x‖|`, fall below `cfg.tol` in stencil units.
pub fn newton_grid(
    u0: &GridField,
    cfg: &FlowConfig,
    rule: UpdateRule,
) -> Result<(f64, GridField, IterationTrace)> {
    let d = Arc::clone(u0.domain());
    let n_int = d.interior_count();
    let gamma = cfg.gamma;
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidGamma { gamma, bound: 0.0 });
    }
    if !(u0.norm() > 0.0) {
        return Err(Error::ZeroVector);
    }
    let h = d.h();
    let tol_l2 = from_stencil_units(h, cfg.tol);
    let inner_cap = 10 * n_int;
    let mut u = u0.values().to_vec();
    let mut lu = vec![0.0; d.len()];
    let mut trace = IterationTrace::new();
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    let mut k = 0;
    let lambda_of = |u: &[f64], lu: &mut [f64]| -> (f64, f64) {
        let nu = libm::sqrt(inner_interior(&d, u, u));
        neg_laplacian_into(&d, u, lu);
        let lambda = match rule {
            UpdateRule::NormBased => gamma * (1.0 / nu - 1.0),
            UpdateRule::Rayleigh => inner_interior(&d, lu, u) / (nu * nu),
        };
        (nu, lambda)
    };
    let record = |k: usize, u: &[f64], lambda: f64| -> Result<TraceRecord> {
        let field = GridField::from_values(&d, u.to_vec())?;
        let nu = field.norm();
        let mut g = field.apply_neg_laplacian();
        g.axpy(gamma * (1.0 - 1.0 / nu), &field)?;
        Ok(TraceRecord {
            k,
            f_value: functional_value(&field, gamma),
            grad_norm: g.norm(),
            x_norm_b: nu,
            lambda_est: lambda,
        })
    };
    let lambda = loop {
        let (nu, lambda_k) = lambda_of(&u, &mut lu);
        // eigen-residual of the current iterate
        let mut r2 = 0.0;
        for &p in d.interior() {
            let r = lu[p] - lambda_k * u[p];
            r2 += r * r;
        }
        let eig_res = h * libm::sqrt(r2);
        trace.records.push(record(k, &u, lambda_k)?);
        if eig_res <= tol_l2 {
            trace.terminal_reason = TerminalReason::Converged;
            break lambda_k;
        }
        if k >= GRID_NEWTON_MAX_ITER {
            trace.terminal_reason = TerminalReason::MaxIter;
            break lambda_k;
        }
        if eig_res < best * 0.999 {
            best = eig_res;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= STAGNATION_WINDOW {
                trace.terminal_reason = TerminalReason::Stagnated;
                break lambda_k;
            }
        }

        let mut y = u.clone();
        for &p in d.interior() {
            y[p] /= nu;
        }
        let w = gamma + lambda_k;
        let h2 = h * h;
        let apply = |v: &[f64], out: &mut [f64]| {
            neg_laplacian_into(&d, v, out);
            let c = w * h2 * d.interior().iter().map(|&p| y[p] * v[p]).sum::<f64>();
            for &p in d.interior() {
                out[p] += c * y[p] - lambda_k * v[p];
            }
        };
        // correction form: x = x_guess + δ, M δ = γy − M x_guess
        let guess = gamma / w;
        let mut rhs = vec![0.0; d.len()];
        let mut mg = vec![0.0; d.len()];
        let x_guess: alloc::vec::Vec<f64> = y.iter().map(|v| guess * v).collect();
        apply(&x_guess, &mut mg);
        for &p in d.interior() {
            rhs[p] = gamma * y[p] - mg[p];
        }
        // Euclidean tolerance matching a quarter of the L² target
        let inner_tol = 0.25 * tol_l2 / h;
        let sol = minres(apply, &rhs, inner_tol, inner_cap);
        if !sol.converged {
            return Err(Error::InnerSolver(format!(
                "MINRES stopped after {} iterations with residual {:e} (target {:e})",
                sol.iterations, sol.residual, inner_tol
            )));
        }
        let mut x = x_guess;
        for &p in d.interior() {
            x[p] += sol.x[p];
        }
        let nx_norm = libm::sqrt(inner_interior(&d, &x, &x));
        if !nx_norm.is_finite() || nx_norm == 0.0 {
            trace.terminal_reason = TerminalReason::Diverged;
            break lambda_k;
        }
        let stop = (gamma * (1.0 - (1.0 + lambda_k / gamma) * inner_interior(&d, &y, &x))).abs();
        let norm_gap = (gamma - w * nx_norm).abs();
        u = x;
        k += 1;
        if to_stencil_units(h, stop.max(norm_gap)) <= cfg.tol {
            let (_, lambda) = lambda_of(&u, &mut lu);
            trace.records.push(record(k, &u, lambda)?);
            trace.terminal_reason = TerminalReason::Converged;
            break lambda;
        }
    };
    trace.iterations = k;
    Ok((lambda, GridField::from_values(&d, u)?, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{closed_form_square_eig, GridDomain};
    use core::f64::consts::PI;
    use rand::Rng;

    #[test]
    fn perturbed_eigenfield_converges_quickly() {
        let d = Arc::new(GridDomain::full_square(41).unwrap());
        let cfg = FlowConfig::new(&d);
        let lam = closed_form_square_eig(1, 1, d.h());
        let mut rng = crate::rng::stream(4, "noise");
        let mut exact = GridField::from_fn(&d, |x, y| libm::sin(PI * x) * libm::sin(PI * y));
        exact.scale(cfg.gamma / (cfg.gamma + lam) / exact.norm());
        let mut u0 = exact.clone();
        u0.axpy(1e-3, &GridField::from_fn(&d, |_, _| rng.random_range(-1.0..1.0)))
            .unwrap();
        let (lambda, _, trace) = newton_grid(&u0, &cfg, UpdateRule::NormBased).unwrap();
        assert!(trace.converged(), "{:?}", trace.terminal_reason);
        assert!(trace.iterations <= 10);
        assert!((lambda - lam).abs() < 1e-8, "{lambda} vs {lam}");
    }
}
