//! Numerical verification of the structural hypotheses on `M, F, G, H`.
//!
//! Items are numbered 1..=7 as in the standard statement of the hypotheses:
//! (1) `M` has a strict maximum band around the origin (`m1 < M(0)`) and is
//! strictly concave there (`m2 < 0`); (2) `m3 = inf(M + M(0)) > 0`;
//! (3) derivative growth `<xi>^beta` with `beta < 1`; (4) bounded second
//! derivatives of `F, G, H` near the origin; (5) `F` bounded; (6) `G`
//! smooths what `H` loses; (7) `gamma != 0`.
//!
//! Everything here is a sampled estimate, not a proof.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{SystemSpec, GAMMA_ZERO_TOL};
use crate::spectral::Grid;
use crate::symbol::MultiplierSymbol;

/// Log-spaced window used for growth and smoothing slopes.
pub const SLOPE_WINDOW: (f64, f64) = (10.0, 1e4);
const SLOPE_POINTS: usize = 200;
const SMOOTHING_SLACK: f64 = 0.1;
/// Relative refinement mismatch that flags an under-sampled scan.
const SCAN_RTOL: f64 = 0.01;
/// Curvature stencil step as a fraction of `xi1`.
const CURVATURE_STEP_FRACTION: f64 = 1.0 / 2000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanParams {
    pub xi_max: f64,
    pub samples: usize,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self {
            xi_max: 1e4,
            samples: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub model: String,
    pub xi1: f64,
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub beta_est: f64,
    pub s_h_est: f64,
    pub s_t: f64,
    pub gamma: Option<f64>,
    pub predicted_exponent: f64,
    /// `passes[i]` is item `i + 1`.
    pub passes: Vec<bool>,
    pub all_pass: bool,
    pub notes: Vec<String>,
}

impl AssumptionReport {
    pub fn item(&self, n: usize) -> bool {
        self.passes[n - 1]
    }
}

/// Exponent of the deviation bound
/// `eps^((3 - 2 beta)/(2 - beta)) + eps^(4 - 2 max(s_h, s_t))`.
pub fn predicted_exponent(beta: f64, s_h: f64, s_t: f64) -> f64 {
    ((3.0 - 2.0 * beta) / (2.0 - beta)).min(4.0 - 2.0 * s_h.max(s_t))
}

fn five_point_second(sym: &MultiplierSymbol, x: f64, h: f64) -> f64 {
    let f = |t: f64| sym.raw(t);
    (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h))
        / (12.0 * h * h)
}

fn uniform(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(move |i| if i + 1 == n { b } else { a + step * i as f64 })
}

/// Extremum of `sym + shift` over `[a, b]` with a midpoint refinement check.
fn scan_extremum(
    sym: &MultiplierSymbol,
    a: f64,
    b: f64,
    samples: usize,
    maximize: bool,
) -> Result<f64> {
    let pick = |acc: f64, v: f64| if maximize { acc.max(v) } else { acc.min(v) };
    let init = if maximize {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    };
    let (mut coarse, mut lo, mut hi) = (init, f64::INFINITY, f64::NEG_INFINITY);
    for x in uniform(a, b, samples) {
        let v = sym.eval(x)?;
        coarse = pick(coarse, v);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let step = (b - a) / (samples - 1) as f64;
    let mut fine = coarse;
    for i in 0..samples - 1 {
        fine = pick(fine, sym.eval(a + step * (i as f64 + 0.5))?);
    }
    let range = (hi - lo).max(f64::MIN_POSITIVE);
    if (fine - coarse).abs() > SCAN_RTOL * range {
        return Err(Error::ScanUnresolved(format!(
            "{}: extremum moved by {:.3e} on refinement (range {:.3e}); increase samples",
            sym.label(),
            (fine - coarse).abs(),
            range
        )));
    }
    Ok(coarse)
}

/// Least-squares slope of `log g(xi)` against `log <xi>` on [`SLOPE_WINDOW`],
/// skipping samples where `g` vanishes. Zero when fewer than two remain.
pub(crate) fn log_slope(sym: &MultiplierSymbol, g: impl Fn(&MultiplierSymbol, f64) -> f64) -> f64 {
    let (lo, hi) = (SLOPE_WINDOW.0.ln(), SLOPE_WINDOW.1.ln());
    let pts: Vec<(f64, f64)> = (0..SLOPE_POINTS)
        .filter_map(|i| {
            let xi = (lo + (hi - lo) * i as f64 / (SLOPE_POINTS - 1) as f64).exp();
            let y = g(sym, xi);
            (y.is_finite() && y > 0.0).then(|| (0.5 * (1.0 + xi * xi).ln(), y.ln()))
        })
        .collect();
    least_squares_slope(&pts)
        .map(|(slope, _)| slope)
        .unwrap_or(0.0)
}

/// `(slope, r^2)` of an ordinary least-squares line through `pts`.
pub fn least_squares_slope(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Some((slope, r2))
}

fn abs_derivative(sym: &MultiplierSymbol, xi: f64) -> f64 {
    let h = 1e-5 * xi;
    ((sym.raw(xi + h) - sym.raw(xi - h)) / (2.0 * h)).abs()
}

/// Growth exponent `beta` of `|sym'(xi)| ~ <xi>^beta`, clamped at 0.
pub fn estimate_growth(sym: &MultiplierSymbol) -> f64 {
    log_slope(sym, abs_derivative).max(0.0)
}

/// Smoothing order `s_h` with `|H| ~ <xi>^s_h` and `|G| ~ <xi>^-s_h`.
pub fn estimate_smoothing(g: &MultiplierSymbol, h: &MultiplierSymbol) -> Result<f64> {
    let s_h = log_slope(h, |s, x| s.raw(x).abs()).max(0.0);
    let g_slope = log_slope(g, |s, x| s.raw(x).abs());
    let bound = -s_h + SMOOTHING_SLACK;
    if g_slope > bound {
        return Err(Error::SmoothingMismatch { g_slope, bound });
    }
    Ok(s_h)
}

pub fn check_assumptions(
    spec: &SystemSpec,
    xi1: f64,
    scan: ScanParams,
) -> Result<AssumptionReport> {
    if !(xi1 > 0.0 && scan.xi_max > xi1 && scan.samples >= 1000) {
        return Err(Error::InvalidConfig(format!(
            "need xi1 > 0, xi_max > xi1 and samples >= 1000 (got {xi1}, {}, {})",
            scan.xi_max, scan.samples
        )));
    }
    let mut notes = Vec::new();
    let m = &spec.m;
    let m0 = m.eval(0.0)?;

    // Item 1
    let mut m1 = scan_extremum(m, xi1, scan.xi_max, scan.samples, true)?;
    match m.growth_hint() {
        Some(g) if g > 0.0 => {
            notes.push(format!(
                "M grows like |xi|^{g} beyond xi_max, so m1 is unbounded"
            ));
            m1 = f64::INFINITY;
        }
        _ => {}
    }
    let h = xi1 * CURVATURE_STEP_FRACTION;
    let m2 = uniform(0.0, xi1, scan.samples)
        .map(|x| five_point_second(m, x, h))
        .fold(f64::NEG_INFINITY, f64::max);
    let item1 = m1 < m0 && m2 < 0.0;

    // Item 2
    let shifted = m.affine(1.0, m0);
    let mut m3 = scan_extremum(&shifted, 0.0, scan.xi_max, scan.samples, false)?;
    if m.growth_hint().is_some_and(|g| g < 0.0) {
        // M decays to 0, so M + M(0) tends to M(0).
        m3 = m3.min(m0);
    }
    let item2 = m3 > 0.0;

    // Item 3
    let beta_est = [&spec.m, &spec.f, &spec.g, &spec.h]
        .into_iter()
        .map(estimate_growth)
        .fold(0.0, f64::max);
    let item3 = beta_est < 1.0;

    // Item 4
    let item4 = [&spec.f, &spec.g, &spec.h]
        .into_iter()
        .all(|s| uniform(0.0, xi1, 200).all(|x| five_point_second(s, x, h).is_finite()));

    // Item 5
    let f_slope = log_slope(&spec.f, |s, x| s.raw(x).abs());
    let f_max = uniform(0.0, scan.xi_max, scan.samples)
        .map(|x| spec.f.raw(x).abs())
        .fold(0.0, f64::max);
    let item5 = f_max.is_finite() && f_slope <= SMOOTHING_SLACK;
    if !item5 {
        notes.push(format!("F grows with log-slope {f_slope:.3}"));
    }

    // Item 6
    let (s_h_est, item6) = match estimate_smoothing(&spec.g, &spec.h) {
        Ok(s) => (s, s < 2.0),
        Err(e) => {
            notes.push(e.to_string());
            (log_slope(&spec.h, |s, x| s.raw(x).abs()).max(0.0), false)
        }
    };

    // Item 7
    let gamma = spec.gamma.is_finite().then_some(spec.gamma);
    let item7 = gamma.is_some_and(|g| g.abs() > GAMMA_ZERO_TOL);
    if gamma.is_none() {
        notes.push("gamma is undefined (M''(0) = 0)".into());
    }

    if !item1 {
        notes.push(format!(
            "item 1 fails: m1 = {m1:.6} vs M(0) = {m0:.6}, m2 = {m2:.6}"
        ));
    }
    let passes = vec![item1, item2, item3, item4, item5, item6, item7];
    let all_pass = passes.iter().all(|&p| p);
    Ok(AssumptionReport {
        model: spec.name.clone(),
        xi1,
        m0,
        m1,
        m2,
        m3,
        beta_est,
        s_h_est,
        s_t: spec.s_t,
        gamma,
        predicted_exponent: predicted_exponent(beta_est, s_h_est, spec.s_t),
        passes,
        all_pass,
        notes,
    })
}

/// `sup_k | eps^2 / (M(0) - M''(0) eps^2 / 2 - M(eps xi_k)) + 2 / (M''(0)(1 + xi_k^2)) |`
/// over the grid frequencies; the bound says this is `O(eps^2)`.
pub fn verify_inverse_approx(spec: &SystemSpec, eps: f64, grid: &Arc<Grid>) -> Result<f64> {
    if eps == 0.0 {
        return Err(Error::InvalidConfig("eps must be nonzero".into()));
    }
    let (m0, m2) = spec.m_origin()?;
    if !(m2 < 0.0) {
        return Err(Error::AssumptionFailed(format!(
            "M''(0) = {m2} is not negative"
        )));
    }
    let omega = m0 - 0.5 * m2 * eps * eps;
    let mut sup: f64 = 0.0;
    for xi in grid.frequencies() {
        let gap = omega - spec.m.eval(eps * xi)?;
        if gap <= 0.0 {
            return Err(Error::SpectrumCollision { xi });
        }
        let v = (eps * eps / gap + 2.0 / (m2 * (1.0 + xi * xi))).abs();
        sup = sup.max(v);
    }
    Ok(sup)
}
