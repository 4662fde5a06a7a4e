//! Physical variables, system residuals and convergence-rate fits.

use std::io::{self, Write};

use serde::Serialize;

use crate::assumptions::{least_squares_slope, AssumptionReport};
use crate::error::{Error, Result};
use crate::solver::SolveResult;
use crate::spectral::Field;
use crate::symbol::MultiplierSymbol;

/// `v(x) = eps^2 V(eps x)` on the stretched grid `[-L/eps, L/eps)`.
pub fn unscale(profile: &Field, eps: f64) -> Result<Field> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "eps must lie in (0, 1], got {eps}"
        )));
    }
    let grid = profile.grid().stretched(eps)?;
    profile.scaled(eps * eps).on_grid(&grid)
}

/// Inverse of [`unscale`].
pub fn rescale(v: &Field, eps: f64) -> Result<Field> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "eps must lie in (0, 1], got {eps}"
        )));
    }
    let grid = crate::spectral::make_grid(v.grid().half_length() * eps, v.grid().len())?;
    v.scaled(1.0 / (eps * eps)).on_grid(&grid)
}

/// `eta = w K_c^-1 K_d v - K_c^-1 v^2 / 2`.
pub fn reconstruct_eta(
    kc: &MultiplierSymbol,
    kd: &MultiplierSymbol,
    v: &Field,
    omega: f64,
) -> Result<Field> {
    let inner = &v.apply_multiplier(kd)?.scaled(omega) - &v.square().scaled(0.5);
    let kc_table = kc.sample(&v.grid().frequencies())?;
    if let Some(k) = kc_table.iter().position(|&c| c == 0.0) {
        return Err(Error::SymbolSingular(v.grid().frequency(k)));
    }
    let inv: Vec<f64> = kc_table.iter().map(|c| 1.0 / c).collect();
    Ok(inner.apply_table(&inv))
}

/// `H^s` norms of `-w K_b eta + K_a v + eta v` and `-w K_d v + K_c eta + v^2/2`.
#[allow(clippy::too_many_arguments)]
pub fn system_residual(
    ka: &MultiplierSymbol,
    kb: &MultiplierSymbol,
    kc: &MultiplierSymbol,
    kd: &MultiplierSymbol,
    eta: &Field,
    v: &Field,
    omega: f64,
    s: f64,
) -> Result<(f64, f64)> {
    let first =
        &(&v.apply_multiplier(ka)? - &eta.apply_multiplier(kb)?.scaled(omega)) + &eta.product(v)?;
    let second = &(&eta.apply_multiplier(kc)? - &v.apply_multiplier(kd)?.scaled(omega))
        + &v.square().scaled(0.5);
    Ok((first.hs_norm(s), second.hs_norm(s)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateStudy {
    pub eps: Vec<f64>,
    pub deviations: Vec<f64>,
    pub fitted_slope: f64,
    pub fit_r2: f64,
    pub predicted_exponent: f64,
}

/// Least-squares slope of `log deviation` against `log eps`.
pub fn rate_from_points(
    eps: &[f64],
    deviations: &[f64],
    predicted_exponent: f64,
) -> Result<RateStudy> {
    if eps.len() != deviations.len() {
        return Err(Error::InsufficientData(
            "eps and deviation lengths differ".into(),
        ));
    }
    let mut distinct: Vec<f64> = eps.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 distinct eps values, got {}",
            distinct.len()
        )));
    }
    if eps
        .iter()
        .chain(deviations)
        .any(|&x| !(x > 0.0 && x.is_finite()))
    {
        return Err(Error::InsufficientData(
            "eps and deviations must be positive and finite".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(deviations)
        .map(|(e, d)| (e.ln(), d.ln()))
        .collect();
    let (fitted_slope, fit_r2) = least_squares_slope(&pts)
        .ok_or_else(|| Error::InsufficientData("degenerate eps values".into()))?;
    Ok(RateStudy {
        eps: eps.to_vec(),
        deviations: deviations.to_vec(),
        fitted_slope,
        fit_r2,
        predicted_exponent,
    })
}

/// Rate study over converged solves, with deviations measured against `sigma`.
pub fn rate_fit(
    results: &[SolveResult],
    sigma: &Field,
    s: f64,
    report: &AssumptionReport,
) -> Result<RateStudy> {
    let mut eps = Vec::with_capacity(results.len());
    let mut devs = Vec::with_capacity(results.len());
    for r in results {
        eps.push(r.eps);
        devs.push((&r.profile - sigma).hs_norm(s));
    }
    rate_from_points(&eps, &devs, report.predicted_exponent)
}

/// CSV with columns `x,v,eta` on the physical grid.
pub fn write_profile_csv<W: Write>(mut w: W, v: &Field, eta: Option<&Field>) -> io::Result<()> {
    writeln!(w, "x,v,eta")?;
    for (j, val) in v.values().iter().enumerate() {
        let x = v.grid().node(j);
        match eta {
            Some(e) => writeln!(w, "{x:e},{val:e},{:e}", e.values()[j])?,
            None => writeln!(w, "{x:e},{val:e},")?,
        }
    }
    Ok(())
}

/// One row of the sweep summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub omega: f64,
    pub iterations: usize,
    pub phi_norm: f64,
    pub deviation: f64,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
}

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(w, "eps,omega,iterations,phi_norm,deviation,r1,r2")?;
    let opt = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
    for r in rows {
        writeln!(
            w,
            "{:e},{:e},{},{:e},{:e},{},{}",
            r.eps,
            r.omega,
            r.iterations,
            r.phi_norm,
            r.deviation,
            opt(r.r1),
            opt(r.r2)
        )?;
    }
    Ok(())
}
