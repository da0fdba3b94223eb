mod common;

use common::{lowest_eigenpair, rel_err, tridiagonal_min_eigenvalue, Layout};
use cylnls::analysis::certify_negative_infimum;
use cylnls::grid::z_mass_center;
use cylnls::solver::Solver;
use cylnls::{
    build_grid, continuation, el_residual, l2_norm_sq, solve, Field, Functional, GridSpec, NonlinearitySpec,
    PotentialSpec, Preconditioner, SolveConfig, SolveResult,
};
use proptest::prelude::*;

/// Every accepted step stays on the sphere and never raises J.
fn assert_flow_invariants(res: &SolveResult) {
    assert!(res.max_constraint_drift <= 1e-12, "drift {}", res.max_constraint_drift);
    for w in res.trace.windows(2) {
        assert!(w[1].energy - w[0].energy <= 1e-14, "J rose by {}", w[1].energy - w[0].energy);
    }
}

fn aligned_distance(a: &Field, b: &Field) -> f64 {
    let g = a.grid();
    let plus = a.axpy(-1.0, b).unwrap();
    let minus = a.axpy(1.0, b).unwrap();
    g.dot(plus.values(), plus.values()).min(g.dot(minus.values(), minus.values())).sqrt()
}

#[test]
fn free_problem_finds_lowest_dense_mode() {
    let (n_r, n_z) = (12, 12);
    let g = build_grid(GridSpec::cylindrical(3, 2.0, 1.5, n_r, n_z)).unwrap();
    let layout = Layout::cylindrical(2, 2.0, 1.5, n_r, n_z);
    let (lam, y) = lowest_eigenpair(layout.dense_operator(|_, _| 0.0));
    let f = Functional::new(g.clone(), PotentialSpec::free(), NonlinearitySpec::quadratic(0.0)).unwrap();
    for pre in [Preconditioner::Sobolev, Preconditioner::None] {
        let cfg = SolveConfig {
            preconditioner: pre,
            tol_residual: 1e-10,
            ..SolveConfig::new(1.0)
        };
        let res = solve(&cfg, None, &f).unwrap();
        assert!(res.converged, "{pre:?}");
        assert_flow_invariants(&res);
        assert!(rel_err(res.lambda, lam) <= 1e-12, "{pre:?}: {} vs {lam}", res.lambda);
        let want = Field::new(g.clone(), layout.unsymmetrize(&y)).unwrap().normalized(1.0).unwrap();
        assert!(aligned_distance(&res.field, &want) <= 1e-8);
    }
}

#[test]
fn linear_hydrogen_matches_both_eigen_oracles() {
    let (r_max, n) = (20.0, 200);
    let g = build_grid(GridSpec::radial(3, r_max, n)).unwrap();
    let layout = Layout::radial(3, r_max, n);
    let v = |r: f64| 1.5 - 1.0 / r;
    let (d, e) = layout.radial_tridiagonal(v);
    let sturm = tridiagonal_min_eigenvalue(&d, &e);
    let (dense, _) = lowest_eigenpair(layout.dense_operator(|r, _| v(r)));
    assert!((sturm - dense).abs() <= 1e-12);

    let f = Functional::new(g, PotentialSpec::coulomb_unchecked(1.5), NonlinearitySpec::quadratic(0.0)).unwrap();
    let res = solve(&SolveConfig::new(1.0), None, &f).unwrap();
    assert!(res.converged);
    assert_flow_invariants(&res);
    assert!((res.lambda - sturm).abs() <= 1e-10, "{} vs {sturm}", res.lambda);
    // the exact ground state is e^{−r/2} with λ = Ω_V − 1/4
    assert!((res.lambda - 1.25).abs() <= 2e-3);
    let exact = Field::from_fn(f.grid().clone(), |r, _| (-0.5 * r).exp()).unwrap().normalized(1.0).unwrap();
    assert!(aligned_distance(&res.field, &exact) <= 1e-2);
}

#[test]
fn exact_eigenpair_is_a_fixed_point() {
    let g = build_grid(GridSpec::radial(3, 10.0, 64)).unwrap();
    let layout = Layout::radial(3, 10.0, 64);
    let (lam, y) = lowest_eigenpair(layout.dense_operator(|r, _| 1.0 / r));
    let u = Field::new(g.clone(), layout.unsymmetrize(&y)).unwrap().normalized(2.0).unwrap();
    let v = PotentialSpec::power(1.0, 1.0);
    let w = NonlinearitySpec::quadratic(0.0);
    assert!(el_residual(&u, lam, &v, &w).unwrap() <= 1e-10);
    let f = Functional::new(g, v, w).unwrap();
    let cfg = SolveConfig::new(2.0);
    let out = Solver::new(&f, &cfg).unwrap().step(&u, 0.5).unwrap();
    let moved = out.field.axpy(-1.0, &u).unwrap().max_abs();
    assert!(moved <= 1e-12 * u.max_abs(), "moved {moved}");
}

#[test]
fn continuation_agrees_with_cold_solves() {
    let g = build_grid(GridSpec::radial(3, 12.0, 192)).unwrap();
    let f = Functional::new(g, PotentialSpec::power(1.0, 1.0), NonlinearitySpec::power(1.0, 3.0)).unwrap();
    let cfg = SolveConfig {
        tol_residual: 1e-9,
        ..SolveConfig::new(1.0)
    };
    let rhos = [0.5, 1.0, 2.0, 3.0];
    let warm = continuation(&cfg, &rhos, &f, None).unwrap();
    for (res, &rho) in warm.iter().zip(&rhos) {
        let cold = solve(&cfg.with_rho(rho), None, &f).unwrap();
        assert!(res.converged && cold.converged);
        assert_flow_invariants(res);
        assert!(rel_err(res.breakdown.total, cold.breakdown.total) <= 1e-9);
        assert!(aligned_distance(&res.field, &cold.field) <= 1e-6 * rho);
    }
    // with a focusing part in W, I_ρ/ρ² strictly decreases in ρ
    let per_mass: Vec<f64> = warm.iter().map(|r| r.breakdown.total / (r.rho * r.rho)).collect();
    assert!(per_mass.windows(2).all(|p| p[1] < p[0]), "{per_mass:?}");
}

/// Vortex ground state from two seeds on a coarse grid: same minimizer.
#[test]
fn vortex_minimizer_is_seed_independent() {
    let cert_grid = build_grid(GridSpec::cylindrical(3, 12.0, 4.0, 192, 128)).unwrap();
    let v = PotentialSpec::vortex(1);
    let w = NonlinearitySpec::power(1.0, 3.0);
    let cert = certify_negative_infimum(&Functional::new(cert_grid, v, w).unwrap(), 8.0, &[1.0, 2.0, 4.0, 8.0]).unwrap();
    let rho = 1.5 * cert.rho0_estimate;

    // ℓ²/r² with a cubic W is scale covariant: lengths go as ρ⁻²
    let g = build_grid(GridSpec::cylindrical(3, 4000.0 / (rho * rho), 3000.0 / (rho * rho), 96, 96)).unwrap();
    let f = Functional::new(g, v, w).unwrap();
    let cfg = SolveConfig {
        recenter_every: 20,
        ..SolveConfig::new(rho)
    };
    let a = solve(&SolveConfig { seed: 1, ..cfg }, None, &f).unwrap();
    let b = solve(&SolveConfig { seed: 2, ..cfg }, None, &f).unwrap();
    for res in [&a, &b] {
        assert!(res.converged);
        assert!(res.breakdown.total < 0.0);
        assert_flow_invariants(res);
        assert!(z_mass_center(&res.field).abs() <= f.grid().dz());
    }
    assert!(rel_err(a.breakdown.total, b.breakdown.total) <= 1e-5);
    assert!(rel_err(a.lambda, b.lambda) <= 1e-5);
    assert!(aligned_distance(&a.field, &b.field) <= 1e-5 * rho);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn flow_stays_on_sphere_and_descends(
        seed in 0u64..1000,
        rho in 0.5f64..4.0,
        omega in 0.0f64..2.0,
        p in 2.2f64..3.3,
        plain in any::<bool>(),
    ) {
        let g = build_grid(GridSpec::cylindrical(3, 6.0, 6.0, 24, 24)).unwrap();
        let f = Functional::new(g, PotentialSpec::vortex(1), NonlinearitySpec::power(omega, p)).unwrap();
        let cfg = SolveConfig {
            seed,
            max_iters: 150,
            recenter_every: 7,
            preconditioner: if plain { Preconditioner::None } else { Preconditioner::Sobolev },
            ..SolveConfig::new(rho)
        };
        let res = solve(&cfg, None, &f).unwrap();
        prop_assert!(res.max_constraint_drift <= 1e-12);
        prop_assert!(res.trace.windows(2).all(|w| w[1].energy - w[0].energy <= 1e-14));
        prop_assert!((l2_norm_sq(&res.field) - rho * rho).abs() <= 1e-12 * rho * rho);
    }
}
