//! The rescaled fixed-point map and its Newton solver.
//!
//! With `v(x) = eps^2 V(eps x)` the traveling-wave equation becomes
//! `Phi(V, eps) = 0`, where
//!
//! ```text
//! Phi(v, eps) = v - eps^2 (w_eps^2 - M_eps^2)^-1
//!               [ w_eps F_eps v^2 + w_eps G_eps(v H_eps v) + eps^2 T_eps(v, v, v) ],
//! Phi(v, 0)   = v - gamma J^-2 v^2,
//! ```
//!
//! `w_eps = M(0) - M''(0) eps^2 / 2` and `J^-2 = (1 - d^2/dx^2)^-1`. At
//! `eps = 0` the root is the KdV profile `sigma = 3/(2 gamma) sech^2(x/2)`
//! and the linearization there is `K = 1 - 2 gamma J^-2 (sigma .)`, which is
//! invertible on even functions. Newton's method in the even cosine basis,
//! seeded with `sigma`, follows that root to small positive `eps`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::SystemSpec;
use crate::spectral::{make_grid, Field, Grid, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    /// Sobolev index of all reported norms.
    pub s: f64,
    pub half_length: f64,
    pub n: usize,
    pub newton_tol: f64,
    pub max_iter: usize,
    pub tail_tol: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            s: 1.0,
            half_length: 50.0,
            n: 1024,
            newton_tol: 1e-11,
            max_iter: 25,
            tail_tol: 1e-8,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.s >= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "s must be >= 1, got {}",
                self.s
            )));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::InvalidConfig("newton_tol must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be >= 1".into()));
        }
        if !(self.tail_tol > 0.0) {
            return Err(Error::InvalidConfig("tail_tol must be positive".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        make_grid(self.half_length, self.n)
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Rescaled profile `V^eps`.
    pub profile: Field,
    pub eps: f64,
    pub omega: f64,
    pub iterations: usize,
    pub phi_norm: f64,
    /// `||V - sigma||_{H^s}`.
    pub deviation: f64,
    pub jacobian_condition: f64,
}

/// `sigma(x) = 3/(2 gamma) sech^2(x/2)`.
pub fn kdv_profile(gamma: f64, grid: &Arc<Grid>) -> Result<Field> {
    if !(gamma.abs() > crate::models::GAMMA_ZERO_TOL) {
        return Err(Error::GammaZero);
    }
    let amp = 1.5 / gamma;
    Ok(Field::from_even_fn(grid, move |x| {
        let s = 1.0 / (0.5 * x).cosh();
        amp * s * s
    }))
}

/// Wave speed `w_eps = M(0) - M''(0) eps^2 / 2`.
pub fn omega_of(spec: &SystemSpec, eps: f64) -> Result<f64> {
    let (m0, m2) = spec.m_origin()?;
    Ok(m0 - 0.5 * m2 * eps * eps)
}

/// Symbol tables of one `eps`, sampled at `eps * xi_k`.
struct Tables {
    /// `eps^2 / (w^2 - M_eps^2)`
    resolvent: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    h: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
}

enum Mode {
    /// `eps = 0`: resolvent `gamma / (1 + xi^2)` applied to `v^2`.
    Limit {
        resolvent: Vec<f64>,
    },
    Finite(Tables),
}

/// `Phi(., eps)` on a fixed grid with its symbol tables cached.
pub struct PhiMap {
    grid: Arc<Grid>,
    eps: f64,
    omega: f64,
    cubic: f64,
    mode: Mode,
}

impl PhiMap {
    pub fn new(spec: &SystemSpec, grid: &Arc<Grid>, eps: f64) -> Result<PhiMap> {
        let freqs = grid.frequencies();
        let omega = omega_of(spec, eps)?;
        let mode = if eps == 0.0 {
            if !spec.gamma.is_finite() {
                return Err(Error::GammaZero);
            }
            Mode::Limit {
                resolvent: freqs
                    .iter()
                    .map(|xi| spec.gamma / (1.0 + xi * xi))
                    .collect(),
            }
        } else {
            let (m0, m2) = spec.m_origin()?;
            let scaled: Vec<f64> = freqs.iter().map(|xi| eps * xi).collect();
            let mut resolvent = Vec::with_capacity(freqs.len());
            for (&xi, &sx) in freqs.iter().zip(&scaled) {
                let m = spec.m.eval(sx)?;
                // w - M split so the O(eps^2) gap is formed without cancellation
                // against w itself.
                let gap = (m0 - m) - 0.5 * m2 * eps * eps;
                let denom = gap * (omega + m);
                if !(denom > 0.0) {
                    return Err(Error::SpectrumCollision { xi });
                }
                resolvent.push(eps * eps / denom);
            }
            Mode::Finite(Tables {
                resolvent,
                f: spec.f.sample(&scaled)?,
                g: spec.g.sample(&scaled)?,
                h: spec.h.sample(&scaled)?,
                p: spec.t_outer.sample(&scaled)?,
                q: spec.t_inner.sample(&scaled)?,
            })
        };
        Ok(PhiMap {
            grid: grid.clone(),
            eps,
            omega,
            cubic: spec.cubic_coeff,
            mode,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn check(&self, f: &Field) -> Result<()> {
        if f.grid().len() != self.grid.len() || **f.grid() != *self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    fn table(&self, spec: &[C64], table: &[f64]) -> Vec<C64> {
        let mut out = spec.to_vec();
        self.grid.apply_table_in_place(&mut out, table);
        out
    }

    /// `Phi(v, eps)`.
    pub fn eval(&self, v: &Field) -> Result<Field> {
        self.check(v)?;
        let grid = &self.grid;
        let vs = v.spectrum();
        let v_fine = grid.to_fine(&vs);
        let v2 = grid.from_fine(&mul(&v_fine, &v_fine));
        let mut correction = match &self.mode {
            Mode::Limit { resolvent } => self.table(&v2, resolvent),
            Mode::Finite(t) => {
                let hv_fine = grid.to_fine(&self.table(&vs, &t.h));
                let vhv = grid.from_fine(&mul(&v_fine, &hv_fine));
                let qv2_fine = grid.to_fine(&self.table(&v2, &t.q));
                let vqv2 = grid.from_fine(&mul(&v_fine, &qv2_fine));
                let e2 = self.eps * self.eps;
                let mut bracket = vec![C64::new(0.0, 0.0); grid.len()];
                for (idx, b) in bracket.iter_mut().enumerate() {
                    let k = grid.mode(idx);
                    *b = self.omega * t.f[k] * v2[idx]
                        + self.omega * t.g[k] * vhv[idx]
                        + e2 * self.cubic * t.p[k] * vqv2[idx];
                }
                self.table(&bracket, &t.resolvent)
            }
        };
        for (c, s) in correction.iter_mut().zip(&vs) {
            *c = s - *c;
        }
        Ok(Field::from_spectrum(grid, correction, v.is_even()))
    }

    /// Cached pieces of `v` reused by every Jacobian column.
    fn linearization(&self, v: &Field) -> Linearization {
        let grid = &self.grid;
        let vs = v.spectrum();
        let v_fine = grid.to_fine(&vs);
        let (hv_fine, qv2_fine) = match &self.mode {
            Mode::Limit { .. } => (Vec::new(), Vec::new()),
            Mode::Finite(t) => {
                let v2 = grid.from_fine(&mul(&v_fine, &v_fine));
                (
                    grid.to_fine(&self.table(&vs, &t.h)),
                    grid.to_fine(&self.table(&v2, &t.q)),
                )
            }
        };
        Linearization {
            v_fine,
            hv_fine,
            qv2_fine,
        }
    }

    /// `d/dv Phi(v, eps) w` for a spectrum `w`, returning a spectrum.
    fn jacobian_spectrum(&self, lin: &Linearization, ws: &[C64]) -> Vec<C64> {
        let grid = &self.grid;
        let w_fine = grid.to_fine(ws);
        let vw = grid.from_fine(&mul(&lin.v_fine, &w_fine));
        let mut out = match &self.mode {
            Mode::Limit { resolvent } => {
                let twice: Vec<C64> = vw.iter().map(|c| c * 2.0).collect();
                self.table(&twice, resolvent)
            }
            Mode::Finite(t) => {
                let hw_fine = grid.to_fine(&self.table(ws, &t.h));
                let mixed: Vec<f64> = (0..w_fine.len())
                    .map(|i| w_fine[i] * lin.hv_fine[i] + lin.v_fine[i] * hw_fine[i])
                    .collect();
                let mixed = grid.from_fine(&mixed);
                let qvw_fine = grid.to_fine(&self.table(&vw, &t.q));
                // T(w,v,v) + T(v,w,v) + T(v,v,w) for the sandwich
                // c P(f Q(gh)): c P(w Q(v^2)) + 2c P(v Q(vw)).
                let cubic: Vec<f64> = (0..w_fine.len())
                    .map(|i| w_fine[i] * lin.qv2_fine[i] + 2.0 * lin.v_fine[i] * qvw_fine[i])
                    .collect();
                let cubic = grid.from_fine(&cubic);
                let e2 = self.eps * self.eps;
                let mut bracket = vec![C64::new(0.0, 0.0); grid.len()];
                for (idx, b) in bracket.iter_mut().enumerate() {
                    let k = grid.mode(idx);
                    *b = 2.0 * self.omega * t.f[k] * vw[idx]
                        + self.omega * t.g[k] * mixed[idx]
                        + e2 * self.cubic * t.p[k] * cubic[idx];
                }
                self.table(&bracket, &t.resolvent)
            }
        };
        for (c, w) in out.iter_mut().zip(ws) {
            *c = w - *c;
        }
        out
    }

    /// `d/dv Phi(v, eps) w`.
    pub fn jacobian_apply(&self, v: &Field, w: &Field) -> Result<Field> {
        self.check(v)?;
        self.check(w)?;
        let lin = self.linearization(v);
        let out = self.jacobian_spectrum(&lin, &w.spectrum());
        Ok(Field::from_spectrum(
            &self.grid,
            out,
            v.is_even() && w.is_even(),
        ))
    }

    /// Jacobian at `v` in cosine-amplitude coordinates, `(N/2+1)^2`.
    /// Column `k` is the image of `cos(xi_k x)`.
    pub fn assemble_jacobian(&self, v: &Field) -> Result<DMatrix<f64>> {
        self.check(v)?;
        let lin = self.linearization(v);
        let dim = self.grid.len() / 2 + 1;
        let columns: Vec<Vec<f64>> = (0..dim)
            .into_par_iter()
            .map(|k| {
                let mut unit = vec![0.0; dim];
                unit[k] = 1.0;
                let ws = self.grid.spectrum_from_amplitudes(&unit);
                self.grid.amplitudes(&self.jacobian_spectrum(&lin, &ws))
            })
            .collect();
        Ok(DMatrix::from_fn(dim, dim, |i, j| columns[j][i]))
    }
}

struct Linearization {
    v_fine: Vec<f64>,
    hv_fine: Vec<f64>,
    qv2_fine: Vec<f64>,
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

pub fn phi_eval(spec: &SystemSpec, v: &Field, eps: f64) -> Result<Field> {
    PhiMap::new(spec, v.grid(), eps)?.eval(v)
}

pub fn phi_jacobian_apply(spec: &SystemSpec, v: &Field, eps: f64, w: &Field) -> Result<Field> {
    PhiMap::new(spec, v.grid(), eps)?.jacobian_apply(v, w)
}

/// `K f = f - 2 gamma J^-2 (sigma f)`, valid for fields of any parity.
pub fn calk_apply(gamma: f64, f: &Field) -> Result<Field> {
    let sigma = kdv_profile(gamma, f.grid())?;
    let sf = sigma.product(f)?;
    let j2: Vec<f64> = f
        .grid()
        .frequencies()
        .iter()
        .map(|xi| 2.0 * gamma / (1.0 + xi * xi))
        .collect();
    Ok(f - &sf.apply_table(&j2))
}

/// Matrix of `K` on even fields in L2-orthonormal cosine coordinates.
pub fn calk_matrix(gamma: f64, grid: &Arc<Grid>) -> Result<DMatrix<f64>> {
    let dim = grid.len() / 2 + 1;
    let weights = grid.amplitude_weights();
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    for k in 0..dim {
        let mut unit = vec![0.0; dim];
        unit[k] = 1.0;
        let col = calk_apply(gamma, &Field::from_cosine_coeffs(grid, &unit))?.cosine_coeffs();
        for (i, c) in col.iter().enumerate() {
            a[(i, k)] = *c;
        }
    }
    Ok(orthonormalize(a, &weights))
}

/// Smallest singular value of `K` restricted to even fields.
pub fn calk_min_singular(gamma: f64, grid: &Arc<Grid>) -> Result<f64> {
    let a = calk_matrix(gamma, grid)?;
    Ok(a.singular_values().min())
}

/// `W^{1/2} A W^{-1/2}` for amplitude weights `W`.
fn orthonormalize(mut a: DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let n = a.nrows();
    for j in 0..n {
        for i in 0..n {
            a[(i, j)] *= (weights[i] / weights[j]).sqrt();
        }
    }
    a
}

fn condition_number(jac: &DMatrix<f64>, weights: &[f64]) -> f64 {
    let sv = orthonormalize(jac.clone(), weights).singular_values();
    sv.max() / sv.min()
}

/// Newton iteration for `Phi(V, eps) = 0` from `init`.
pub fn newton_solve(
    spec: &SystemSpec,
    eps: f64,
    init: &Field,
    config: &SolveConfig,
) -> Result<SolveResult> {
    config.validate()?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "eps must lie in (0, 1), got {eps}"
        )));
    }
    let grid = init.grid().clone();
    let map = PhiMap::new(spec, &grid, eps)?;
    let sigma = kdv_profile(spec.gamma, &grid)?;
    let s = config.s;

    let check_tail = |f: &Field| -> Result<()> {
        let tail = f.tail_fraction(s);
        if tail > config.tail_tol {
            Err(Error::GridUnderResolved {
                tail,
                tol: config.tail_tol,
            })
        } else {
            Ok(())
        }
    };

    let mut v = init.project_even();
    check_tail(&v)?;
    let mut residual = map.eval(&v)?;
    let mut norm = residual.hs_norm(s);
    let mut iterations = 0;
    let mut increases = 0;
    let mut jacobian = None;

    while norm > config.newton_tol {
        if iterations >= config.max_iter {
            return Err(Error::NewtonDiverged {
                iterations,
                last_norm: norm,
            });
        }
        let jac = map.assemble_jacobian(&v)?;
        let rhs = DVector::from_vec(residual.cosine_coeffs());
        let step = jac
            .clone()
            .lu()
            .solve(&rhs)
            .ok_or(Error::JacobianSingular)?;
        if step.iter().any(|x| !x.is_finite()) {
            return Err(Error::JacobianSingular);
        }
        let amps = v.cosine_coeffs();
        let update = |fraction: f64| {
            let next: Vec<f64> = amps
                .iter()
                .zip(step.iter())
                .map(|(a, d)| a - fraction * d)
                .collect();
            Field::from_cosine_coeffs(&grid, &next).project_even()
        };
        let mut candidate = update(1.0);
        let mut cand_res = map.eval(&candidate)?;
        let mut cand_norm = cand_res.hs_norm(s);
        if !(cand_norm <= norm) {
            candidate = update(0.5);
            cand_res = map.eval(&candidate)?;
            cand_norm = cand_res.hs_norm(s);
        }
        iterations += 1;
        if !cand_norm.is_finite() {
            return Err(Error::NewtonDiverged {
                iterations,
                last_norm: cand_norm,
            });
        }
        if cand_norm > norm {
            increases += 1;
            if increases >= 2 {
                return Err(Error::NewtonDiverged {
                    iterations,
                    last_norm: cand_norm,
                });
            }
        } else {
            increases = 0;
        }
        check_tail(&candidate)?;
        v = candidate;
        residual = cand_res;
        norm = cand_norm;
        jacobian = Some(jac);
    }

    let jac = match jacobian {
        Some(j) => j,
        None => map.assemble_jacobian(&v)?,
    };
    let jacobian_condition = condition_number(&jac, &grid.amplitude_weights());
    let deviation = (&v - &sigma).hs_norm(s);
    Ok(SolveResult {
        profile: v,
        eps,
        omega: map.omega(),
        iterations,
        phi_norm: norm,
        deviation,
        jacobian_condition,
    })
}

/// Results of a sweep; `failure` records the first `eps` that could not be
/// solved, after which the sweep stopped.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub results: Vec<SolveResult>,
    pub failure: Option<(f64, Error)>,
}

impl SweepOutcome {
    pub fn into_result(self) -> Result<Vec<SolveResult>> {
        match self.failure {
            None => Ok(self.results),
            Some((_, e)) => Err(e),
        }
    }
}

fn check_sweep_list(eps_list: &[f64]) -> Result<()> {
    if eps_list.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::InvalidConfig("every eps must lie in (0, 1)".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidConfig(
            "eps list must be strictly descending".into(),
        ));
    }
    Ok(())
}

/// Warm-started continuation from the largest `eps` down.
///
/// The largest `eps` starts from `sigma`; if Newton diverges there, one
/// solve at `eps/2` is used as a stepping stone before giving up.
pub fn continuation_sweep(
    spec: &SystemSpec,
    eps_list: &[f64],
    config: &SolveConfig,
) -> Result<SweepOutcome> {
    check_sweep_list(eps_list)?;
    config.validate()?;
    let grid = config.grid()?;
    let sigma = kdv_profile(spec.gamma, &grid)?;
    let mut results: Vec<SolveResult> = Vec::with_capacity(eps_list.len());

    for (i, &eps) in eps_list.iter().enumerate() {
        let init = results.last().map(|r| &r.profile).unwrap_or(&sigma);
        let attempt = match newton_solve(spec, eps, init, config) {
            Err(Error::NewtonDiverged { .. }) if i == 0 => {
                newton_solve(spec, 0.5 * eps, &sigma, config)
                    .and_then(|stone| newton_solve(spec, eps, &stone.profile, config))
            }
            other => other,
        };
        match attempt {
            Ok(r) => results.push(r),
            Err(e) => {
                return Ok(SweepOutcome {
                    results,
                    failure: Some((eps, e)),
                })
            }
        }
    }
    Ok(SweepOutcome {
        results,
        failure: None,
    })
}

/// Independent solves from `sigma`, run in parallel.
pub fn cold_start_sweep(
    spec: &SystemSpec,
    eps_list: &[f64],
    config: &SolveConfig,
) -> Result<Vec<Result<SolveResult>>> {
    config.validate()?;
    let grid = config.grid()?;
    let sigma = kdv_profile(spec.gamma, &grid)?;
    Ok(eps_list
        .par_iter()
        .map(|&eps| newton_solve(spec, eps, &sigma, config))
        .collect())
}
