//! Even Fourier-multiplier symbols.
//!
//! A [`MultiplierSymbol`] is an immutable, cheaply clonable function of the
//! frequency `xi`. It is always evaluated at `|xi|`, so evenness holds
//! bit-exactly. Symbols optionally carry analytic data at the origin
//! (`value`, second derivative) which doubles as a Taylor stub for
//! `|xi| < 1e-8`, where expressions like `tanh(xi)/xi` lose all digits.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type Evaluator = dyn Fn(f64) -> f64 + Send + Sync;

/// Radius below which a symbol with analytic origin data uses its Taylor stub.
pub const TAYLOR_RADIUS: f64 = 1e-8;

/// Initial step of the Richardson-extrapolated second difference.
const RICHARDSON_STEP: f64 = 1e-2;
const RICHARDSON_RTOL: f64 = 1e-8;
const RICHARDSON_MAX_LEVELS: usize = 7;

/// Value and second derivative of a symbol at `xi = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OriginData {
    pub value: f64,
    pub d2: f64,
}

/// Pointwise combination rules for [`combine`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Recipe {
    Product,
    Quotient,
    Sqrt,
    Reciprocal,
    /// `scale * s + offset`
    Affine {
        scale: f64,
        offset: f64,
    },
}

impl Recipe {
    fn name(&self) -> &'static str {
        match self {
            Recipe::Product => "product",
            Recipe::Quotient => "quotient",
            Recipe::Sqrt => "sqrt",
            Recipe::Reciprocal => "reciprocal",
            Recipe::Affine { .. } => "affine",
        }
    }
}

#[derive(Clone)]
pub struct MultiplierSymbol {
    eval: Arc<Evaluator>,
    origin: Option<OriginData>,
    growth_hint: Option<f64>,
    label: Arc<str>,
}

impl fmt::Debug for MultiplierSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiplierSymbol")
            .field("label", &self.label)
            .field("origin", &self.origin)
            .field("growth_hint", &self.growth_hint)
            .finish()
    }
}

impl MultiplierSymbol {
    /// Wraps an arbitrary function. It is only ever called with `xi >= 0`.
    pub fn from_fn<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(f),
            origin: None,
            growth_hint: None,
            label: Arc::from(label.into()),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_fn(format!("{c}"), move |_| c)
            .with_origin(c, 0.0)
            .with_growth(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    /// `c0 + c2 * xi^2`, the symbol of `c0 - c2 * d^2/dx^2`.
    pub fn quadratic(c0: f64, c2: f64) -> Self {
        Self::from_fn(format!("{c0} + {c2}*xi^2"), move |x| c0 + c2 * x * x)
            .with_origin(c0, 2.0 * c2)
            .with_growth(if c2 == 0.0 { 0.0 } else { 2.0 })
    }

    /// `tanh(xi) / xi`, the water-wave dispersion multiplier.
    pub fn tanh_ratio() -> Self {
        Self::from_fn("tanh(xi)/xi", |x| x.tanh() / x)
            .with_origin(1.0, -2.0 / 3.0)
            .with_growth(-1.0)
    }

    /// Attaches analytic origin data (also enables the Taylor stub).
    pub fn with_origin(mut self, value: f64, d2: f64) -> Self {
        self.origin = Some(OriginData { value, d2 });
        self
    }

    /// Attaches the power-law exponent of `|sym(xi)|` as `xi -> infinity`.
    pub fn with_growth(mut self, exponent: f64) -> Self {
        self.growth_hint = Some(exponent);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Arc::from(label.into());
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn growth_hint(&self) -> Option<f64> {
        self.growth_hint
    }

    pub fn origin_override(&self) -> Option<OriginData> {
        self.origin
    }

    /// Unchecked evaluation at `|xi|`; may return NaN or infinity.
    pub(crate) fn raw(&self, xi: f64) -> f64 {
        let r = xi.abs();
        match self.origin {
            Some(o) if r < TAYLOR_RADIUS => o.value + 0.5 * o.d2 * r * r,
            _ => (self.eval)(r),
        }
    }

    pub fn eval(&self, xi: f64) -> Result<f64> {
        let v = self.raw(xi);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::SymbolSingular(xi))
        }
    }

    /// `(sym(0), sym''(0))`, analytic when available.
    pub fn origin_data(&self) -> Result<OriginData> {
        if let Some(o) = self.origin {
            return Ok(o);
        }
        numeric_origin_data(self)
    }

    /// The symbol `xi -> sym(eps * xi)`.
    pub fn scale(&self, eps: f64) -> MultiplierSymbol {
        if eps == 0.0 {
            let c = self.raw(0.0);
            return MultiplierSymbol::constant(c).with_label(format!("({})_0", self.label));
        }
        let inner = self.clone();
        let mut out = MultiplierSymbol::from_fn(format!("({})_{eps}", self.label), move |x| {
            inner.raw(eps * x)
        });
        out.origin = self.origin.map(|o| OriginData {
            value: o.value,
            d2: o.d2 * eps * eps,
        });
        out.growth_hint = self.growth_hint;
        out
    }

    pub fn mul(&self, other: &MultiplierSymbol) -> MultiplierSymbol {
        binary(self, other, Recipe::Product)
    }

    pub fn div(&self, other: &MultiplierSymbol) -> MultiplierSymbol {
        binary(self, other, Recipe::Quotient)
    }

    pub fn sqrt(&self) -> MultiplierSymbol {
        unary(self, Recipe::Sqrt)
    }

    pub fn recip(&self) -> MultiplierSymbol {
        unary(self, Recipe::Reciprocal)
    }

    pub fn affine(&self, scale: f64, offset: f64) -> MultiplierSymbol {
        unary(self, Recipe::Affine { scale, offset })
    }

    /// Samples the symbol at each frequency, failing on the first singular one.
    pub fn sample(&self, xis: &[f64]) -> Result<Vec<f64>> {
        xis.iter().map(|&x| self.eval(x)).collect()
    }
}

/// Pointwise algebraic combination of symbols.
pub fn combine(symbols: &[MultiplierSymbol], recipe: Recipe) -> Result<MultiplierSymbol> {
    let expected = match recipe {
        Recipe::Product | Recipe::Quotient => 2,
        _ => 1,
    };
    if symbols.len() != expected {
        return Err(Error::RecipeArity {
            recipe: recipe.name(),
            expected,
            got: symbols.len(),
        });
    }
    Ok(match expected {
        2 => binary(&symbols[0], &symbols[1], recipe),
        _ => unary(&symbols[0], recipe),
    })
}

fn binary(a: &MultiplierSymbol, b: &MultiplierSymbol, recipe: Recipe) -> MultiplierSymbol {
    let (fa, fb) = (a.clone(), b.clone());
    let mut out = match recipe {
        Recipe::Product => {
            MultiplierSymbol::from_fn(format!("({})*({})", a.label, b.label), move |x| {
                fa.raw(x) * fb.raw(x)
            })
        }
        Recipe::Quotient => {
            MultiplierSymbol::from_fn(format!("({})/({})", a.label, b.label), move |x| {
                fa.raw(x) / fb.raw(x)
            })
        }
        _ => unreachable!("binary recipe"),
    };
    // Even symbols have zero first derivative at the origin, so the
    // second-derivative rules below drop all f'g' cross terms.
    if let (Some(p), Some(q)) = (a.origin, b.origin) {
        out.origin = Some(match recipe {
            Recipe::Product => OriginData {
                value: p.value * q.value,
                d2: p.d2 * q.value + p.value * q.d2,
            },
            _ => OriginData {
                value: p.value / q.value,
                d2: (p.d2 * q.value - p.value * q.d2) / (q.value * q.value),
            },
        });
    }
    if let (Some(ga), Some(gb)) = (a.growth_hint, b.growth_hint) {
        out.growth_hint = Some(match recipe {
            Recipe::Product => ga + gb,
            _ => ga - gb,
        });
    }
    out
}

fn unary(a: &MultiplierSymbol, recipe: Recipe) -> MultiplierSymbol {
    let fa = a.clone();
    let mut out = match recipe {
        Recipe::Sqrt => {
            MultiplierSymbol::from_fn(format!("sqrt({})", a.label), move |x| fa.raw(x).sqrt())
        }
        Recipe::Reciprocal => {
            MultiplierSymbol::from_fn(format!("1/({})", a.label), move |x| 1.0 / fa.raw(x))
        }
        Recipe::Affine { scale, offset } => {
            MultiplierSymbol::from_fn(format!("{scale}*({}) + {offset}", a.label), move |x| {
                scale * fa.raw(x) + offset
            })
        }
        _ => unreachable!("unary recipe"),
    };
    out.origin = a.origin.map(|p| match recipe {
        Recipe::Sqrt => OriginData {
            value: p.value.sqrt(),
            d2: p.d2 / (2.0 * p.value.sqrt()),
        },
        Recipe::Reciprocal => OriginData {
            value: 1.0 / p.value,
            d2: -p.d2 / (p.value * p.value),
        },
        Recipe::Affine { scale, offset } => OriginData {
            value: scale * p.value + offset,
            d2: scale * p.d2,
        },
        _ => unreachable!(),
    });
    out.growth_hint = a.growth_hint.map(|g| match recipe {
        Recipe::Sqrt => 0.5 * g,
        Recipe::Reciprocal => -g,
        Recipe::Affine { offset, .. } if offset != 0.0 => g.max(0.0),
        _ => g,
    });
    out
}

/// Richardson extrapolation of `2 (f(h) - f(0)) / h^2` over `h, h/2, h/4, ...`.
fn numeric_origin_data(sym: &MultiplierSymbol) -> Result<OriginData> {
    let f0 = sym.raw(0.0);
    if !f0.is_finite() {
        return Err(Error::SymbolSingular(0.0));
    }
    let second_difference = |h: f64| 2.0 * (sym.raw(h) - f0) / (h * h);

    let mut table: Vec<Vec<f64>> = Vec::with_capacity(RICHARDSON_MAX_LEVELS);
    let mut h = RICHARDSON_STEP;
    for level in 0..RICHARDSON_MAX_LEVELS {
        let mut row = vec![second_difference(h)];
        for j in 1..=level {
            let factor = 4f64.powi(j as i32);
            let prev = table[level - 1][j - 1];
            let cur = row[j - 1];
            row.push(cur + (cur - prev) / (factor - 1.0));
        }
        if !row[level].is_finite() {
            return Err(Error::DerivativeUnstable(format!(
                "non-finite difference quotient at h = {h:e}"
            )));
        }
        if level >= 2 {
            let best = row[level];
            let previous = table[level - 1][level - 1];
            let scale = best.abs().max(previous.abs());
            if (best - previous).abs() <= RICHARDSON_RTOL * scale || scale < 1e-300 {
                return Ok(OriginData {
                    value: f0,
                    d2: best,
                });
            }
        }
        table.push(row);
        h *= 0.5;
    }
    Err(Error::DerivativeUnstable(format!(
        "no agreement to {RICHARDSON_RTOL:e} after {RICHARDSON_MAX_LEVELS} refinements"
    )))
}
