//! Matrix-free MINRES for symmetric, possibly indefinite, systems.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{axpy, dot, norm};

/// Result of a [`minres`] run. `residual` is the true residual
/// `‖b − Ax‖`, recomputed at exit.
#[derive(Debug, Clone, PartialEq)]
pub struct MinresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Solves `A x = b` for a symmetric operator given as `apply(v, out)`,
/// stopping when the recurrence residual drops to `tol` (absolute) or after
/// `max_iter` Lanczos steps. Starts from zero.
pub fn minres<F>(mut apply: F, b: &[f64], tol: f64, max_iter: usize) -> MinresOutcome
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let beta1 = norm(b);
    if beta1 <= tol {
        return MinresOutcome {
            x,
            iterations: 0,
            residual: beta1,
            converged: true,
        };
    }
    let mut v_prev = vec![0.0; n];
    let mut v: Vec<f64> = b.iter().map(|bi| bi / beta1).collect();
    let mut av = vec![0.0; n];
    let mut w_prev = vec![0.0; n];
    let mut w_prev2 = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut beta = beta1;
    let mut eta = beta1;
    let (mut c_prev, mut c) = (1.0, 1.0);
    let (mut s_prev, mut s) = (0.0, 0.0);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        apply(&v, &mut av);
        let alpha = dot(&v, &av);
        // next Lanczos vector, stored in `av`
        axpy(-alpha, &v, &mut av);
        axpy(-beta, &v_prev, &mut av);
        let beta_next = norm(&av);

        let delta = c * alpha - c_prev * s * beta;
        let rho1 = libm::hypot(delta, beta_next);
        let rho2 = s * alpha + c_prev * c * beta;
        let rho3 = s_prev * beta;
        if rho1 == 0.0 {
            break;
        }
        let c_next = delta / rho1;
        let s_next = beta_next / rho1;
        for i in 0..n {
            w[i] = (v[i] - rho3 * w_prev2[i] - rho2 * w_prev[i]) / rho1;
        }
        axpy(c_next * eta, &w, &mut x);
        eta *= -s_next;

        core::mem::swap(&mut w_prev2, &mut w_prev);
        core::mem::swap(&mut w_prev, &mut w);
        c_prev = c;
        c = c_next;
        s_prev = s;
        s = s_next;

        if eta.abs() <= tol || beta_next == 0.0 {
            converged = true;
            break;
        }
        core::mem::swap(&mut v_prev, &mut v);
        for (vi, ai) in v.iter_mut().zip(&av) {
            *vi = ai / beta_next;
        }
        beta = beta_next;
    }
    apply(&x, &mut av);
    let residual = libm::sqrt(b.iter().zip(&av).map(|(bi, ai)| (bi - ai) * (bi - ai)).sum());
    MinresOutcome {
        x,
        iterations,
        residual,
        converged,
    }
}
