use spectral_descent::functional::residual_norm;
use spectral_descent::gd::{gd_b_metric, gd_deflated, gd_generalized, gd_standard, random_start};
use spectral_descent::linalg::dot;
use spectral_descent::oracle::{
    generalized_eigh, jacobi_eigh, max_principal_angle_sin, random_pair, random_spd,
    RandomProblemSpec,
};
use spectral_descent::{choose_b_metric_stepsize, choose_gamma, choose_stepsize, SolverConfig, SymMatrix};

fn norm_law_holds(gamma: f64, lambda: f64, nb: f64) -> bool {
    (nb - gamma / (gamma + lambda)).abs() < 1e-9
}

#[test]
fn standard_matches_oracle_on_random_symmetric() {
    for k in 0..50 {
        let a = random_spd(&RandomProblemSpec::symmetric(10, 4000 + k)).unwrap();
        let cfg = SolverConfig::auto(&a, None).with_seed(k);
        let x0 = random_start(10, k, "gd/x0");
        let (pair, trace) = gd_standard(&a, &cfg, &x0).unwrap();
        assert!(trace.converged(), "seed {k}: {:?}", trace.terminal_reason);
        let exact = jacobi_eigh(&a).unwrap().eigenvalues[0];
        assert!((pair.lambda - exact).abs() < 1e-8, "seed {k}: {} vs {exact}", pair.lambda);
        assert!(trace.is_monotone(1e-12));
        let xnorm = spectral_descent::linalg::norm(&pair.x);
        assert!(norm_law_holds(cfg.gamma, pair.lambda, xnorm));
        assert!(residual_norm(&a, None, pair.lambda, &pair.x) <= 1e-8 * (1.0 + a.frobenius_norm()));
    }
}

#[test]
fn iterates_stay_outside_the_alpha_gamma_ball() {
    for k in 0..10 {
        let a = random_spd(&RandomProblemSpec::symmetric(6, 50 + k)).unwrap();
        let cfg = SolverConfig::auto(&a, None);
        let x0 = random_start(6, k, "ball/x0");
        let (_, trace) = gd_standard(&a, &cfg, &x0).unwrap();
        for r in trace.records.iter().skip(1) {
            assert!(r.x_norm_b > cfg.alpha * cfg.gamma, "seed {k} step {}", r.k);
        }
    }
}

#[test]
fn generalized_descent_reaches_some_pair() {
    for k in 0..50 {
        let (a, b) = random_pair(&RandomProblemSpec::spd_pair(8, 600 + k)).unwrap();
        let cfg = SolverConfig::auto(&a, Some(&b));
        let x0 = random_start(8, k, "gen/x0");
        let (pair, trace) = gd_generalized(&a, &b, &cfg, &x0).unwrap();
        assert!(trace.converged(), "seed {k}");
        assert!(residual_norm(&a, Some(&b), pair.lambda, &pair.x) < 1e-8 * (1.0 + a.frobenius_norm()));
        assert!(norm_law_holds(cfg.gamma, pair.lambda, b.norm(&pair.x)));
        let ev = generalized_eigh(&a, &b).unwrap().eigenvalues;
        assert!(ev.iter().any(|l| (l - pair.lambda).abs() < 1e-7));
    }
}

#[test]
fn b_metric_finds_smallest_from_many_starts() {
    let (a, b) = random_pair(&RandomProblemSpec::spd_pair(10, 77)).unwrap();
    let exact = generalized_eigh(&a, &b).unwrap().eigenvalues[0];
    let gamma = choose_gamma(&a, Some(&b), 1.0);
    let cfg = SolverConfig::new(gamma, choose_b_metric_stepsize(&a, Some(&b), gamma, 0.9));
    for k in 0..50 {
        let x0 = random_start(10, k, "bm/x0");
        let (pair, trace) = gd_b_metric(&a, &b, &cfg, &x0).unwrap();
        assert!(trace.converged());
        assert!((pair.lambda - exact).abs() < 1e-8, "start {k}");
        assert!(trace.is_monotone(1e-12));
    }
}

#[test]
fn deflation_on_a_double_eigenvalue() {
    let a = SymMatrix::from_diagonal(&[1.0, 1.0, 4.0]).unwrap();
    let cfg = SolverConfig::auto(&a, None);
    let out = gd_deflated(&a, None, &cfg, 2).unwrap();
    assert!(out.is_complete());
    for p in &out.pairs {
        assert!((p.lambda - 1.0).abs() < 1e-9);
    }
    let plane = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
    let sin = max_principal_angle_sin(out.basis.vectors(), &plane).unwrap();
    assert!(sin < 1e-6, "{sin:e}");
}

#[test]
fn deflated_pairs_match_oracle_and_are_b_orthonormal() {
    for k in 0..5 {
        let (a, b) = random_pair(&RandomProblemSpec::spd_pair(12, 900 + k)).unwrap();
        let gamma = choose_gamma(&a, Some(&b), 1.0);
        let cfg = SolverConfig::new(gamma, choose_b_metric_stepsize(&a, Some(&b), gamma, 0.9)).with_seed(k);
        let out = gd_deflated(&a, Some(&b), &cfg, 5).unwrap();
        assert!(out.is_complete());
        let ev = generalized_eigh(&a, &b).unwrap().eigenvalues;
        let v = out.basis.vectors();
        for j in 0..5 {
            assert!((out.pairs[j].lambda - ev[j]).abs() < 1e-7, "seed {k} pair {j}");
            for i in 0..5 {
                let g = dot(&v[i], &b.matvec(&v[j]));
                assert!((g - if i == j { 1.0 } else { 0.0 }).abs() < 1e-9);
            }
        }
        assert!(out.pairs.windows(2).all(|w| w[0].lambda <= w[1].lambda + 1e-12));
    }
}

#[test]
fn auto_stepsize_is_below_the_bound() {
    let a = random_spd(&RandomProblemSpec::symmetric(5, 1)).unwrap();
    let gamma = choose_gamma(&a, None, 1.0);
    let alpha = choose_stepsize(&a, None, gamma, 1.0);
    let forced = SolverConfig::new(gamma, 1.01 * alpha);
    assert!(gd_standard(&a, &forced, &random_start(5, 0, "x")).is_err());
}
