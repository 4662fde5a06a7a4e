use proptest::prelude::*;

use solitary_core::dsl::{compile_symbol, parse_symbol};
use solitary_core::postprocess::{rate_from_points, rescale, unscale};
use solitary_core::spectral::{make_grid, Field};
use solitary_core::symbol::MultiplierSymbol;
use solitary_core::{make_abcd, make_builtin, SystemSpec};

fn model_symbols() -> Vec<MultiplierSymbol> {
    let mut out = vec![
        MultiplierSymbol::tanh_ratio(),
        MultiplierSymbol::quadratic(1.0, 0.3),
    ];
    for spec in builtin_specs() {
        out.extend([spec.m, spec.f, spec.g, spec.h, spec.t_outer, spec.t_inner]);
    }
    out
}

fn builtin_specs() -> Vec<SystemSpec> {
    let mut v: Vec<SystemSpec> = ["asmp", "hp", "ddk"]
        .iter()
        .map(|n| make_builtin(n).unwrap())
        .collect();
    v.push(make_abcd(-1.0 / 6.0, 1.0 / 3.0, -1.0 / 6.0, 1.0 / 3.0).unwrap());
    v
}

const EXPRESSIONS: &[&str] = &[
    "sqrt(tanh(k)/k)",
    "tanh(k)/k",
    "1 + k^2",
    "1/(1 + k^2)",
    "(cosh(k) - 1)/k^2",
    "sech(k)^2",
    "abs(k)",
    "1 - k^2/6 + k^4/120",
    "2*k^2/(3 + k^2)",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symbols_are_even(xi in -1e3f64..1e3) {
        for sym in model_symbols() {
            prop_assert_eq!(sym.eval(xi).unwrap().to_bits(), sym.eval(-xi).unwrap().to_bits());
        }
    }

    #[test]
    fn scaling_matches_direct_evaluation(eps in 1e-3f64..2.0, xi in -200f64..200.0) {
        for sym in model_symbols() {
            let a = sym.scale(eps).eval(xi).unwrap();
            let b = sym.eval(eps * xi).unwrap();
            prop_assert!((a - b).abs() <= 1e-14 * b.abs().max(1.0), "{} {} {}", sym.label(), a, b);
        }
    }

    #[test]
    fn double_scaling(a in 1e-2f64..2.0, b in 1e-2f64..2.0, xi in -100f64..100.0) {
        for sym in model_symbols() {
            let lhs = sym.scale(a).scale(b).eval(xi).unwrap();
            let rhs = sym.scale(a * b).eval(xi).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-13 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn compiled_matches_interpreter(k in -50f64..50.0) {
        prop_assume!(k.abs() > 1e-6);
        for text in EXPRESSIONS {
            let expr = parse_symbol(text).unwrap();
            let sym = compile_symbol(&expr);
            let direct = expr.ast.interpret(k.abs());
            let compiled = sym.eval(k).unwrap();
            prop_assert!((compiled - direct).abs() <= 1e-12 * direct.abs().max(1e-300), "{text} at {k}");
        }
    }

    #[test]
    fn transform_round_trip(amps in prop::collection::vec(-1.0f64..1.0, 33)) {
        let g = make_grid(20.0, 64).unwrap();
        let f = Field::from_cosine_coeffs(&g, &amps);
        let back = Field::from_cosine_coeffs(&g, &f.cosine_coeffs());
        let scale = f.max_abs().max(1e-300);
        for (a, b) in back.values().iter().zip(f.values()) {
            prop_assert!((a - b).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn multiplier_composition(amps in prop::collection::vec(-1.0f64..1.0, 65)) {
        let g = make_grid(30.0, 128).unwrap();
        let f = Field::from_cosine_coeffs(&g, &amps);
        let a = MultiplierSymbol::tanh_ratio();
        let b = MultiplierSymbol::quadratic(1.0, 0.25).recip();
        let nested = f.apply_multiplier(&b).unwrap().apply_multiplier(&a).unwrap();
        let once = f.apply_multiplier(&a.mul(&b)).unwrap();
        for (x, y) in nested.values().iter().zip(once.values()) {
            prop_assert!((x - y).abs() <= 1e-12 * f.max_abs().max(1e-300));
        }
    }

    #[test]
    fn norm_monotone_in_s(
        values in prop::collection::vec(-1.0f64..1.0, 64),
        s1 in -2.0f64..3.0,
        ds in 0.0f64..2.0,
    ) {
        let g = make_grid(7.0, 64).unwrap();
        let f = Field::from_values(&g, values).unwrap();
        prop_assert!(f.hs_norm(s1) <= f.hs_norm(s1 + ds) * (1.0 + 1e-14));
    }

    #[test]
    fn unscale_round_trip(eps in 0.01f64..=1.0) {
        let g = make_grid(50.0, 64).unwrap();
        let f = Field::from_even_fn(&g, |x| (-0.1 * x * x).exp());
        let back = rescale(&unscale(&f, eps).unwrap(), eps).unwrap();
        prop_assert!((back.grid().half_length() - 50.0).abs() < 1e-12);
        for (a, b) in back.values().iter().zip(f.values()) {
            prop_assert!((a - b).abs() <= 4.0 * f64::EPSILON * b.abs().max(1e-300));
        }
    }

    #[test]
    fn rate_slope_ignores_constant_factor(c in 1e-6f64..1e6, p in 0.5f64..3.0) {
        let eps = [0.2, 0.1, 0.05, 0.025];
        let base: Vec<f64> = eps.iter().map(|e: &f64| e.powf(p) * (1.0 + 0.1 * e.sin())).collect();
        let scaled: Vec<f64> = base.iter().map(|d| c * d).collect();
        let a = rate_from_points(&eps, &base, 1.5).unwrap();
        let b = rate_from_points(&eps, &scaled, 1.5).unwrap();
        prop_assert!((a.fitted_slope - b.fitted_slope).abs() < 1e-10);
    }
}

#[test]
fn numeric_origin_data_matches_overrides() {
    for spec in builtin_specs() {
        for sym in [
            &spec.m,
            &spec.f,
            &spec.g,
            &spec.h,
            &spec.t_outer,
            &spec.t_inner,
        ] {
            let Some(exact) = sym.origin_override() else {
                continue;
            };
            let bare = MultiplierSymbol::from_fn("bare", {
                let s = sym.clone();
                move |x| s.eval(x).unwrap()
            });
            let numeric = bare.origin_data().unwrap();
            assert!((numeric.value - exact.value).abs() <= 1e-12 * exact.value.abs().max(1.0));
            let tol = 1e-6 * exact.d2.abs().max(1e-8);
            assert!(
                (numeric.d2 - exact.d2).abs() <= tol,
                "{}: {} vs {}",
                spec.name,
                numeric.d2,
                exact.d2
            );
        }
    }
}
