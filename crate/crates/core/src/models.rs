//! Model construction: the reduction from the four operators `K_a..K_d` of
//! a Boussinesq-type system to the single-equation symbols `M, F, G, H, T`,
//! the abcd family, and the water-wave models built on `K = tanh(D)/D`.

use crate::assumptions::{estimate_growth, estimate_smoothing, log_slope};
use crate::error::{Error, Result};
use crate::symbol::MultiplierSymbol;

/// Default lower edge of the low-frequency band used by the assumption scan.
pub const DEFAULT_XI1: f64 = 1.0;

/// `|gamma|` below this is treated as zero.
pub const GAMMA_ZERO_TOL: f64 = 1e-12;

/// The four Fourier multipliers of the time-dependent system.
#[derive(Clone, Debug)]
pub struct BoussinesqOperators {
    pub ka: MultiplierSymbol,
    pub kb: MultiplierSymbol,
    pub kc: MultiplierSymbol,
    pub kd: MultiplierSymbol,
}

/// A complete model of the traveling-wave equation
///
/// ```text
/// (w^2 - M^2) v = w F v^2 + w G(v H v) + T(v, v, v),
/// T(f, g, h) = cubic_coeff * P(f * Q(g h)).
/// ```
#[derive(Clone, Debug)]
pub struct SystemSpec {
    pub name: String,
    pub m: MultiplierSymbol,
    pub f: MultiplierSymbol,
    pub g: MultiplierSymbol,
    pub h: MultiplierSymbol,
    /// Outer multiplier `P` of the trilinear term.
    pub t_outer: MultiplierSymbol,
    /// Inner multiplier `Q` of the trilinear term.
    pub t_inner: MultiplierSymbol,
    pub cubic_coeff: f64,
    /// NaN when the spec was built without validation and gamma is undefined.
    pub gamma: f64,
    pub beta: f64,
    pub s_h: f64,
    pub s_t: f64,
    pub xi1: f64,
    /// Present when the spec was reduced from a two-equation system.
    pub operators: Option<BoussinesqOperators>,
}

impl SystemSpec {
    pub fn m_origin(&self) -> Result<(f64, f64)> {
        let o = self.m.origin_data()?;
        Ok((o.value, o.d2))
    }
}

/// `gamma = -(F(0) + G(0) H(0)) / M''(0)`.
pub fn gamma_from_origin(m_d2: f64, f0: f64, g0h0: f64) -> Result<f64> {
    if m_d2 == 0.0 || !m_d2.is_finite() {
        return Err(Error::DerivativeUnstable(format!(
            "M''(0) = {m_d2} leaves gamma undefined"
        )));
    }
    let gamma = -(f0 + g0h0) / m_d2;
    if gamma.abs() <= GAMMA_ZERO_TOL {
        return Err(Error::GammaZero);
    }
    Ok(gamma)
}

pub fn gamma_of(
    m: &MultiplierSymbol,
    f: &MultiplierSymbol,
    g: &MultiplierSymbol,
    h: &MultiplierSymbol,
) -> Result<f64> {
    let m_d2 = m.origin_data()?.d2;
    // A flat dispersion relation shows up numerically as roundoff-sized M''.
    if m_d2.abs() < 1e-10 {
        return Err(Error::DerivativeUnstable(format!(
            "M''(0) = {m_d2:e} vanishes, gamma is undefined"
        )));
    }
    gamma_from_origin(m_d2, f.eval(0.0)?, g.eval(0.0)? * h.eval(0.0)?)
}

/// Reduction of `K_a..K_d` without validating gamma.
///
/// Eliminating `eta` from the second traveling-wave equation and applying
/// `K_b^{-1} K_c K_d^{-1}` to the first one gives
///
/// ```text
/// M = sqrt(K_a K_b^-1 K_c K_d^-1),  F = K_d^-1 / 2,
/// G = K_b^-1 K_c K_d^-1,            H = K_c^-1 K_d,
/// T(v, v, v) = -1/2 G(v K_c^-1 v^2).
/// ```
pub fn reduce_system_unchecked(ops: &BoussinesqOperators, name: &str) -> SystemSpec {
    let kb_inv = ops.kb.recip();
    let kc_inv = ops.kc.recip();
    let kd_inv = ops.kd.recip();
    let m = ops
        .ka
        .mul(&kb_inv)
        .mul(&ops.kc)
        .mul(&kd_inv)
        .sqrt()
        .with_label("M");
    let f = kd_inv.affine(0.5, 0.0).with_label("F");
    let g = kb_inv.mul(&ops.kc).mul(&kd_inv).with_label("G");
    let h = kc_inv.mul(&ops.kd).with_label("H");
    let gamma = gamma_of(&m, &f, &g, &h).unwrap_or(f64::NAN);
    SystemSpec {
        name: name.to_string(),
        t_outer: g.clone(),
        t_inner: kc_inv,
        m,
        f,
        g,
        h,
        cubic_coeff: -0.5,
        gamma,
        beta: 0.0,
        s_h: 0.0,
        s_t: 0.0,
        xi1: DEFAULT_XI1,
        operators: Some(ops.clone()),
    }
}

/// Reduction of `K_a..K_d` to a validated [`SystemSpec`].
///
/// The growth metadata (`beta`, `s_h`, `s_t`) is estimated numerically;
/// the named constructors overwrite it with the known values.
pub fn reduce_system(
    ka: &MultiplierSymbol,
    kb: &MultiplierSymbol,
    kc: &MultiplierSymbol,
    kd: &MultiplierSymbol,
) -> Result<SystemSpec> {
    let ops = BoussinesqOperators {
        ka: ka.clone(),
        kb: kb.clone(),
        kc: kc.clone(),
        kd: kd.clone(),
    };
    // Zeros away from the origin surface lazily when the inverses are sampled.
    for sym in [kb, kc, kd] {
        if sym.eval(0.0)? == 0.0 {
            return Err(Error::SymbolSingular(0.0));
        }
    }
    let mut spec = reduce_system_unchecked(&ops, "reduced");
    spec.gamma = gamma_of(&spec.m, &spec.f, &spec.g, &spec.h)?;
    fill_estimated_orders(&mut spec);
    Ok(spec)
}

/// A model given directly by its single-equation symbols.
pub fn custom_system(
    m: MultiplierSymbol,
    f: MultiplierSymbol,
    g: MultiplierSymbol,
    h: MultiplierSymbol,
    t_outer: MultiplierSymbol,
    t_inner: MultiplierSymbol,
    cubic_coeff: f64,
) -> Result<SystemSpec> {
    let gamma = gamma_of(&m, &f, &g, &h)?;
    let mut spec = SystemSpec {
        name: "custom".into(),
        m,
        f,
        g,
        h,
        t_outer,
        t_inner,
        cubic_coeff,
        gamma,
        beta: 0.0,
        s_h: 0.0,
        s_t: 0.0,
        xi1: DEFAULT_XI1,
        operators: None,
    };
    fill_estimated_orders(&mut spec);
    Ok(spec)
}

fn fill_estimated_orders(spec: &mut SystemSpec) {
    spec.beta = [&spec.m, &spec.f, &spec.g, &spec.h]
        .into_iter()
        .map(estimate_growth)
        .fold(0.0, f64::max);
    spec.s_h = estimate_smoothing(&spec.g, &spec.h)
        .unwrap_or_else(|_| log_slope(&spec.h, |s, x| s.raw(x).abs()).max(0.0));
    // The sandwich loses what the inner multiplier grows.
    spec.s_t = log_slope(&spec.t_inner, |s, x| s.raw(x).abs()).max(0.0);
}

/// First violated abcd condition, numbered 1..=4:
/// (1) `b, d >= 0` and `a, c <= 0`; (2) `a + b + c + d > 0`;
/// (3) `bd > ac` or `bd = ac = 0`; (4) `c < 0` or `d = 0`.
pub fn abcd_violation(a: f64, b: f64, c: f64, d: f64) -> Option<u8> {
    if !(b >= 0.0 && d >= 0.0 && a <= 0.0 && c <= 0.0) {
        return Some(1);
    }
    if a + b + c + d <= 0.0 {
        return Some(2);
    }
    if !(b * d > a * c || (b * d == 0.0 && a * c == 0.0)) {
        return Some(3);
    }
    if !(c < 0.0 || d == 0.0) {
        return Some(4);
    }
    None
}

/// Symbols `1 - a xi^2, 1 + b xi^2, 1 - c xi^2, 1 + d xi^2`.
pub fn abcd_operators(a: f64, b: f64, c: f64, d: f64) -> BoussinesqOperators {
    BoussinesqOperators {
        ka: MultiplierSymbol::quadratic(1.0, -a),
        kb: MultiplierSymbol::quadratic(1.0, b),
        kc: MultiplierSymbol::quadratic(1.0, -c),
        kd: MultiplierSymbol::quadratic(1.0, d),
    }
}

pub fn make_abcd(a: f64, b: f64, c: f64, d: f64) -> Result<SystemSpec> {
    if let Some(which) = abcd_violation(a, b, c, d) {
        return Err(Error::AbcdConditionViolated { which });
    }
    let ops = abcd_operators(a, b, c, d);
    let mut spec = reduce_system(&ops.ka, &ops.kb, &ops.kc, &ops.kd)?;
    spec.name = format!("abcd({a}, {b}, {c}, {d})");
    // Under the four conditions every symbol has a bounded derivative and
    // H = (1 + d xi^2)/(1 - c xi^2) stays bounded, so nothing is lost.
    spec.beta = 0.0;
    spec.s_h = 0.0;
    spec.s_t = 0.0;
    Ok(spec)
}

pub fn builtin_operators(name: &str) -> Result<BoussinesqOperators> {
    let k = MultiplierSymbol::tanh_ratio().with_label("K");
    let k_inv = k.recip().with_label("K^-1");
    let one = MultiplierSymbol::one;
    Ok(match name {
        "asmp" => BoussinesqOperators {
            ka: k,
            kb: one(),
            kc: one(),
            kd: one(),
        },
        "hp" => BoussinesqOperators {
            ka: one(),
            kb: one(),
            kc: k,
            kd: one(),
        },
        "ddk" => BoussinesqOperators {
            ka: k_inv.clone(),
            kb: k_inv.clone(),
            kc: one(),
            kd: k_inv,
        },
        other => return Err(Error::UnknownModel(other.to_string())),
    })
}

/// The water-wave models `asmp`, `hp` and `ddk`.
pub fn make_builtin(name: &str) -> Result<SystemSpec> {
    let ops = builtin_operators(name)?;
    let mut spec = reduce_system_unchecked(&ops, name);
    spec.gamma = gamma_of(&spec.m, &spec.f, &spec.g, &spec.h)?;
    let (beta, s_h, s_t) = match name {
        "asmp" => (0.0, 0.0, 0.0),
        "hp" => (0.0, 1.0, 1.0),
        _ => (0.0, 1.0, 0.0),
    };
    spec.beta = beta;
    spec.s_h = s_h;
    spec.s_t = s_t;
    Ok(spec)
}

/// Every built-in family with its conventional representative.
pub fn all_builtins() -> Vec<SystemSpec> {
    let mut v: Vec<SystemSpec> = ["asmp", "hp", "ddk"]
        .iter()
        .map(|n| make_builtin(n).expect("built-in model"))
        .collect();
    v.push(make_abcd(-1.0 / 6.0, 1.0 / 3.0, -1.0 / 6.0, 1.0 / 3.0).expect("abcd model"));
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_arithmetic() {
        assert_eq!(gamma_from_origin(-1.0, 1.0, 0.0).unwrap(), 1.0);
        assert!((gamma_from_origin(-1.0 / 3.0, 0.5, 1.0).unwrap() - 4.5).abs() < 1e-14);
        assert_eq!(gamma_from_origin(-1.0, 0.0, 0.0), Err(Error::GammaZero));
    }

    #[test]
    fn degenerate_identity_system() {
        let one = MultiplierSymbol::one();
        let err = reduce_system(&one, &one, &one, &one).unwrap_err();
        assert!(matches!(
            err,
            Error::DerivativeUnstable(_) | Error::GammaZero
        ));
    }

    #[test]
    fn asmp_reduction() {
        let k = MultiplierSymbol::tanh_ratio();
        let one = MultiplierSymbol::one();
        let spec = reduce_system(&k, &one, &one, &one).unwrap();
        for xi in [0.0f64, 0.4, 3.0, 25.0] {
            let m = (xi.tanh() / xi).sqrt();
            let m = if xi == 0.0 { 1.0 } else { m };
            assert!((spec.m.eval(xi).unwrap() - m).abs() < 1e-15);
            assert_eq!(spec.f.eval(xi).unwrap(), 0.5);
            assert_eq!(spec.g.eval(xi).unwrap(), 1.0);
            assert_eq!(spec.h.eval(xi).unwrap(), 1.0);
            assert_eq!(spec.t_outer.eval(xi).unwrap(), 1.0);
            assert_eq!(spec.t_inner.eval(xi).unwrap(), 1.0);
        }
        assert!((spec.gamma - 4.5).abs() < 1e-12);
    }

    #[test]
    fn abcd_conditions() {
        assert_eq!(
            make_abcd(0.0, 1.0 / 6.0, 0.0, 1.0 / 6.0).unwrap_err(),
            Error::AbcdConditionViolated { which: 4 }
        );
        assert_eq!(
            make_abcd(0.0, 0.0, 0.0, 0.0).unwrap_err(),
            Error::AbcdConditionViolated { which: 2 }
        );
        assert_eq!(abcd_violation(0.1, 1.0, 0.0, 0.0), Some(1));
        assert_eq!(abcd_violation(-1.0, 0.5, -1.0, 2.0), Some(3));
    }

    #[test]
    fn abcd_representative() {
        let spec = make_abcd(-1.0 / 6.0, 1.0 / 3.0, -1.0 / 6.0, 1.0 / 3.0).unwrap();
        let (m0, m2) = spec.m_origin().unwrap();
        assert_eq!(m0, 1.0);
        assert!((m2 + 1.0 / 3.0).abs() < 1e-14);
        assert!((spec.gamma - 4.5).abs() < 1e-12);
        assert_eq!((spec.beta, spec.s_h, spec.s_t), (0.0, 0.0, 0.0));
    }

    #[test]
    fn builtin_metadata() {
        let asmp = make_builtin("asmp").unwrap();
        let f0g0h0 =
            asmp.f.eval(0.0).unwrap() + asmp.g.eval(0.0).unwrap() * asmp.h.eval(0.0).unwrap();
        assert_eq!(f0g0h0, 1.5);
        assert!((asmp.m_origin().unwrap().1 + 1.0 / 3.0).abs() < 1e-15);
        let hp = make_builtin("hp").unwrap();
        assert_eq!((hp.beta, hp.s_h, hp.s_t), (0.0, 1.0, 1.0));
        let ddk = make_builtin("ddk").unwrap();
        assert_eq!((ddk.beta, ddk.s_h, ddk.s_t), (0.0, 1.0, 0.0));
        for xi in [0.5f64, 2.0, 30.0] {
            let k = xi.tanh() / xi;
            assert!((ddk.t_outer.eval(xi).unwrap() - k * k).abs() < 1e-14);
            assert!((ddk.t_inner.eval(xi).unwrap() - 1.0).abs() < 1e-15);
        }
        assert_eq!(
            make_builtin("kdv").unwrap_err(),
            Error::UnknownModel("kdv".into())
        );
    }

    #[test]
    fn custom_orders_are_estimated() {
        let k = MultiplierSymbol::tanh_ratio();
        let spec = custom_system(
            k.sqrt(),
            MultiplierSymbol::constant(0.5),
            k.clone(),
            k.recip(),
            k.clone(),
            k.recip(),
            -0.5,
        )
        .unwrap();
        assert!((spec.gamma - 4.5).abs() < 1e-12);
        assert!(spec.beta.abs() < 0.05);
        assert!((spec.s_h - 1.0).abs() < 0.05);
        assert!((spec.s_t - 1.0).abs() < 0.05);
    }
}
