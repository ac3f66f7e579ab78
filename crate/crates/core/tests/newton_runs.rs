use spectral_descent::functional::residual_norm;
use spectral_descent::gd::random_start;
use spectral_descent::linalg::{lu_solve, norm, sub, Matrix};
use spectral_descent::newton::{
    compare_update_rules, eigspace_from_eigval, eigvec_from_eigval, newton_solve,
    perturbed_eigvec_error, NewtonStepSystem, UpdateRule,
};
use spectral_descent::oracle::{
    jacobi_eigh, max_principal_angle_sin, random_pair, random_spd, with_spectrum, RandomProblemSpec,
};
use spectral_descent::{choose_gamma, Functional, SolverConfig, SymMatrix};

#[test]
fn converged_pairs_are_oracle_eigenpairs() {
    let a = random_spd(&RandomProblemSpec::spd_pair(10, 31)).unwrap();
    let ev = jacobi_eigh(&a).unwrap().eigenvalues;
    let cfg = SolverConfig::newton(choose_gamma(&a, None, 1.0));
    let mut converged = 0;
    for k in 0..100 {
        let x0 = random_start(10, k, "newton/x0");
        let (pair, trace) = newton_solve(&a, None, &cfg, &x0, UpdateRule::NormBased).unwrap();
        if !trace.converged() {
            continue;
        }
        converged += 1;
        assert!(ev.iter().any(|l| (l - pair.lambda).abs() < 1e-9), "start {k}: {}", pair.lambda);
        assert!((norm(&pair.x) - cfg.gamma / (cfg.gamma + pair.lambda)).abs() < 1e-9);
    }
    assert!(converged >= 95, "{converged}");
}

#[test]
fn step_equals_hessian_newton_step() {
    for k in 0..20 {
        let a = random_spd(&RandomProblemSpec::symmetric(6, 100 + k)).unwrap();
        let gamma = choose_gamma(&a, None, 1.0);
        let f = Functional::new(&a, None, gamma).unwrap();
        let x = random_start(6, k, "hess/x");
        let sys = NewtonStepSystem::new(&a, None, gamma, &x, UpdateRule::NormBased).unwrap();
        let next = sys.solve(&a, None).unwrap();
        let h = f.hessian(&x).unwrap();
        let g = f.gradient(&x).unwrap();
        let dx = lu_solve(h.matrix(), &g).unwrap();
        let classical = sub(&x, &dx);
        let diff = norm(&sub(&next, &classical)) / norm(&classical);
        assert!(diff < 1e-8, "seed {k}: {diff:e}");
    }
}

#[test]
fn residual_stop_equals_true_residual() {
    for k in 0..10 {
        let a = random_spd(&RandomProblemSpec::symmetric(8, 200 + k)).unwrap();
        let gamma = choose_gamma(&a, None, 1.0);
        let mut x = random_start(8, k, "stop/x");
        for _ in 0..6 {
            let sys = NewtonStepSystem::new(&a, None, gamma, &x, UpdateRule::NormBased).unwrap();
            let next = match sys.solve(&a, None) {
                Ok(v) => v,
                Err(_) => break,
            };
            let stop = sys.residual_stop(gamma, &next);
            let ax = a.matvec(&next);
            let r = norm(&ax.iter().zip(&next).map(|(u, v)| u - sys.lambda_k * v).collect::<Vec<_>>());
            assert!((stop - r).abs() < 1e-10 * (1.0 + a.frobenius_norm()), "seed {k}: {stop} vs {r}");
            x = next;
        }
    }
}

#[test]
fn one_step_eigenvector_for_simple_eigenvalue() {
    let a = random_spd(&RandomProblemSpec::symmetric(15, 5)).unwrap();
    let dec = jacobi_eigh(&a).unwrap();
    let lambda = dec.eigenvalues[2];
    let reference = dec.vector(2);
    for seed in 0..20 {
        let x = eigvec_from_eigval(&a, lambda, 1.0 + lambda.abs(), seed).unwrap();
        assert!(residual_norm(&a, None, lambda, &x) < 1e-8 * (1.0 + a.frobenius_norm()));
        let sin = max_principal_angle_sin(&[x], &[reference.clone()]).unwrap();
        assert!(sin < 1e-8, "seed {seed}: {sin:e}");
    }
}

#[test]
fn block_estimator_recovers_planted_eigenspace() {
    let eigs = [0.5, 2.0, 2.0, 2.0, 3.5, 5.0, 7.0];
    let a = with_spectrum(7, &eigs, 9, "planted").unwrap();
    let dec = jacobi_eigh(&a).unwrap();
    let planted: Vec<Vec<f64>> = (1..4).map(|i| dec.vector(i)).collect();
    for seed in 0..20 {
        let cols = eigspace_from_eigval(&a, 2.0, 3, 1.0, seed).unwrap();
        let sin = max_principal_angle_sin(&cols, &planted).unwrap();
        assert!(sin < 1e-7, "seed {seed}: {sin:e}");
    }
    assert!(eigvec_from_eigval(&a, 2.0, 1.0, 0).is_err());
}

fn check_linear_scaling(errors: &[(f64, f64)]) {
    let ratios: Vec<f64> = errors.iter().map(|(d, e)| e / d).collect();
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    assert!(lo > 0.0 && hi / lo < 2.0, "{ratios:?}");
}

#[test]
fn perturbed_error_scales_linearly_on_degenerate_cases() {
    let offsets = [1e-3, 1e-4, 1e-5];
    for seed in 0..5 {
        let a = with_spectrum(6, &[1.0, 1.0, 2.5, 3.0, 4.0, 6.0], seed, "degenerate").unwrap();
        let errs = perturbed_eigvec_error(a.matrix(), 1.0, &offsets, 1.0, seed).unwrap();
        check_linear_scaling(&errs);
    }
}

#[test]
fn perturbed_error_on_nonsymmetric_diagonalizable() {
    let s = Matrix::from_rows(&[
        vec![1.0, 0.5, 0.2],
        vec![0.0, 1.0, 0.3],
        vec![0.4, 0.0, 1.0],
    ])
    .unwrap();
    let s_inv = Matrix::from_columns(
        &(0..3)
            .map(|j| {
                let mut e = vec![0.0; 3];
                e[j] = 1.0;
                lu_solve(&s, &e).unwrap()
            })
            .collect::<Vec<_>>(),
    )
    .unwrap();
    let a = s.matmul(&Matrix::from_diagonal(&[1.0, 1.0, 3.0])).unwrap().matmul(&s_inv).unwrap();
    let errs = perturbed_eigvec_error(&a, 1.0, &[1e-3, 1e-4, 1e-5], 1.0, 3).unwrap();
    check_linear_scaling(&errs);
    assert!(perturbed_eigvec_error(&a, 1.0, &[0.0], 1.0, 3).is_err());
}

#[test]
fn norm_based_rule_dominates_on_a_random_pair() {
    let (a, b) = random_pair(&RandomProblemSpec::spd_pair(10, 2024)).unwrap();
    let cfg = SolverConfig::newton(choose_gamma(&a, Some(&b), 1.0)).with_seed(2024);
    let (stats, outcomes) = compare_update_rules(&a, Some(&b), 1000, &cfg).unwrap();
    assert_eq!(outcomes.len(), 1000);
    for r in [&stats.norm_based, &stats.rayleigh] {
        assert_eq!(r.trials, 1000);
        assert!(r.hits_on_min + r.failures <= r.trials);
    }
    assert!(stats.norm_based.hits_on_min > stats.rayleigh.hits_on_min, "{stats:?}");
    assert!(stats.norm_based.mean_lambda < stats.rayleigh.mean_lambda);
}

#[test]
fn zero_eigenvalue_one_step() {
    let a = SymMatrix::from_diagonal(&[0.0, 3.0]).unwrap();
    let x = eigvec_from_eigval(&a, 0.0, 1.0, 11).unwrap();
    assert!(x[1].abs() < 1e-12 && x[0].abs() > 0.1);
}
