use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use solitary_core::postprocess::{rate_fit, reconstruct_eta, system_residual, unscale};
use solitary_core::solver::{
    calk_apply, calk_min_singular, cold_start_sweep, continuation_sweep, kdv_profile, newton_solve,
    phi_eval, phi_jacobian_apply, PhiMap, SolveConfig,
};
use solitary_core::spectral::{make_grid, Field, Grid};
use solitary_core::{check_assumptions, make_builtin, Error, ScanParams};
use std::sync::Arc;

fn random_even(grid: &Arc<Grid>, rng: &mut ChaCha8Rng, width: f64) -> Field {
    let amps: Vec<f64> = (0..=grid.len() / 2)
        .map(|k| {
            let xi = grid.frequency(k);
            rng.gen_range(-1.0..1.0) * (-(xi / width).powi(2)).exp()
        })
        .collect();
    Field::from_cosine_coeffs(grid, &amps)
}

fn small() -> SolveConfig {
    SolveConfig {
        n: 512,
        ..Default::default()
    }
}

#[test]
fn kdv_equation_holds_on_grid() {
    for gamma in [1.5, 4.5, -2.0] {
        let g = make_grid(50.0, 1024).unwrap();
        let sigma = kdv_profile(gamma, &g).unwrap();
        let d2 = sigma.derivative().derivative();
        let r = &(&sigma - &d2) - &sigma.square().scaled(gamma);
        assert!(r.hs_norm(1.0) <= 1e-10, "{gamma}: {}", r.hs_norm(1.0));
    }
}

#[test]
fn phi_at_sigma_shrinks_with_eps() {
    let spec = make_builtin("ddk").unwrap();
    let g = make_grid(50.0, 1024).unwrap();
    let sigma = kdv_profile(spec.gamma, &g).unwrap();
    let norms: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&e| phi_eval(&spec, &sigma, e).unwrap().hs_norm(1.0))
        .collect();
    assert!(norms[0] > norms[1] && norms[1] > norms[2], "{norms:?}");
    // Halving eps should cut the residual by at least 2^1.5 asymptotically.
    assert!(norms[1] / norms[2] > 2.0, "{norms:?}");
}

#[test]
fn jacobian_columns_match_apply() {
    let spec = make_builtin("hp").unwrap();
    let g = make_grid(30.0, 64).unwrap();
    let sigma = kdv_profile(spec.gamma, &g).unwrap();
    let map = PhiMap::new(&spec, &g, 0.2).unwrap();
    let jac = map.assemble_jacobian(&sigma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let w = random_even(&g, &mut rng, 3.0);
        let direct = map.jacobian_apply(&sigma, &w).unwrap().cosine_coeffs();
        let via_matrix = &jac * nalgebra::DVector::from_vec(w.cosine_coeffs());
        for (a, b) in direct.iter().zip(via_matrix.iter()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}

#[test]
fn limit_jacobian_is_calk() {
    let spec = make_builtin("asmp").unwrap();
    let g = make_grid(50.0, 256).unwrap();
    let sigma = kdv_profile(spec.gamma, &g).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let w = random_even(&g, &mut rng, 2.0);
        let a = phi_jacobian_apply(&spec, &sigma, 0.0, &w).unwrap();
        let b = calk_apply(spec.gamma, &w).unwrap();
        assert!((&a - &b).hs_norm(1.0) < 1e-12);
    }
    assert_eq!(calk_apply(4.5, &Field::zeros(&g)).unwrap().max_abs(), 0.0);
}

#[test]
fn calk_smallest_singular_value_is_frozen() {
    let g = make_grid(50.0, 1024).unwrap();
    let s = calk_min_singular(4.5, &g).unwrap();
    assert!((s - 0.360_344_935_9).abs() < 1e-6, "{s}");
}

#[test]
fn newton_example_and_evenness() {
    let spec = make_builtin("ddk").unwrap();
    let g = small().grid().unwrap();
    let sigma = kdv_profile(spec.gamma, &g).unwrap();
    let r = newton_solve(&spec, 0.05, &sigma, &small()).unwrap();
    assert!(r.iterations <= 6, "{}", r.iterations);
    assert!(r.deviation < 0.05);
    assert!(r.phi_norm <= 1e-11);
    assert!(r.profile.is_even());
    assert!(r.profile.odd_part_max() <= 1e-12 * r.profile.max_abs());
    assert!(r.omega > 1.0);
    assert!(r.jacobian_condition.is_finite() && r.jacobian_condition >= 1.0);
}

#[test]
fn newton_from_perturbed_seed_finds_same_profile() {
    let spec = make_builtin("hp").unwrap();
    let g = small().grid().unwrap();
    let sigma = kdv_profile(spec.gamma, &g).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let delta = random_even(&g, &mut rng, 1.0);
    let delta = delta.scaled(0.1 * sigma.hs_norm(1.0) / delta.hs_norm(1.0));
    let a = newton_solve(&spec, 0.1, &sigma, &small()).unwrap();
    let b = newton_solve(&spec, 0.1, &(&sigma + &delta), &small()).unwrap();
    assert!((&a.profile - &b.profile).hs_norm(1.0) < 1e-8);
}

#[test]
fn sweep_with_large_gap_reaches_same_fixed_point() {
    let spec = make_builtin("ddk").unwrap();
    let warm = continuation_sweep(&spec, &[0.5, 0.0125], &small())
        .unwrap()
        .into_result()
        .unwrap();
    let g = small().grid().unwrap();
    let cold = newton_solve(
        &spec,
        0.0125,
        &kdv_profile(spec.gamma, &g).unwrap(),
        &small(),
    )
    .unwrap();
    assert_eq!(warm.len(), 2);
    assert!((&warm[1].profile - &cold.profile).hs_norm(1.0) < 1e-8);
}

#[test]
fn cold_and_warm_sweeps_agree() {
    let spec = make_builtin("asmp").unwrap();
    let eps = [0.2, 0.1, 0.05];
    let warm = continuation_sweep(&spec, &eps, &small())
        .unwrap()
        .into_result()
        .unwrap();
    let cold = cold_start_sweep(&spec, &eps, &small()).unwrap();
    for (w, c) in warm.iter().zip(cold) {
        let c = c.unwrap();
        assert_eq!(w.eps, c.eps);
        assert!((&w.profile - &c.profile).hs_norm(1.0) < 1e-9);
    }
}

#[test]
fn converged_solves_satisfy_the_two_equation_system() {
    let cfg = small();
    for name in ["asmp", "hp", "ddk", "abcd"] {
        let spec = if name == "abcd" {
            solitary_core::make_abcd(-1.0 / 6.0, 1.0 / 3.0, -1.0 / 6.0, 1.0 / 3.0).unwrap()
        } else {
            make_builtin(name).unwrap()
        };
        let ops = spec.operators.clone().unwrap();
        let out = continuation_sweep(&spec, &[0.2, 0.1, 0.05], &cfg)
            .unwrap()
            .into_result()
            .unwrap();
        for r in out {
            let v = unscale(&r.profile, r.eps).unwrap();
            let eta = reconstruct_eta(&ops.kc, &ops.kd, &v, r.omega).unwrap();
            let (r1, r2) =
                system_residual(&ops.ka, &ops.kb, &ops.kc, &ops.kd, &eta, &v, r.omega, cfg.s)
                    .unwrap();
            assert!(
                r1.max(r2) <= 100.0 * cfg.newton_tol,
                "{name} eps={}: {r1} {r2}",
                r.eps
            );
        }
    }
}

#[test]
fn deviation_within_rate_envelope() {
    let spec = make_builtin("ddk").unwrap();
    let eps = [0.2, 0.1, 0.05, 0.025];
    let out = continuation_sweep(&spec, &eps, &small())
        .unwrap()
        .into_result()
        .unwrap();
    let report = check_assumptions(&spec, 1.0, ScanParams::default()).unwrap();
    let p = report.predicted_exponent;
    // A single constant fitted at the largest eps must bound the rest.
    let c = out[0].deviation / out[0].eps.powf(p);
    for r in &out {
        assert!(
            r.deviation <= 1.01 * c * r.eps.powf(p),
            "eps {}: {}",
            r.eps,
            r.deviation
        );
    }
    let g = small().grid().unwrap();
    let sigma = kdv_profile(spec.gamma, &g).unwrap();
    let study = rate_fit(&out, &sigma, 1.0, &report).unwrap();
    assert!(study.fitted_slope >= p - 0.1, "{}", study.fitted_slope);
}

#[test]
fn collision_is_reported_before_iterating() {
    let spec = make_builtin("ddk").unwrap();
    // A dispersion relation that turns upward crosses w_eps inside the grid.
    let g = make_grid(50.0, 64).unwrap();
    let sigma = kdv_profile(spec.gamma, &g).unwrap();
    let mut bump = spec.clone();
    bump.m = solitary_core::MultiplierSymbol::from_fn("rising", |x| 1.0 - x * x / 6.0 + x.powi(4))
        .with_origin(1.0, -1.0 / 3.0);
    let cfg = SolveConfig {
        n: 64,
        ..Default::default()
    };
    assert!(matches!(
        newton_solve(&bump, 0.3, &sigma, &cfg),
        Err(Error::SpectrumCollision { .. })
    ));
}
