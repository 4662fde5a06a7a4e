//! Periodic pseudo-spectral discretization on a symmetric box `[-L, L)`.
//!
//! Nodes are `x_j = -L + 2Lj/N`; node `N/2` sits at the origin and the
//! mirror of node `j` is node `(N - j) mod N`. Internally the samples are
//! rotated so that index 0 of every transform is `x = 0`, which makes the
//! DFT of an even field real.
//!
//! Spectra are normalized so that `f(x) = sum_k c_k exp(i xi_k x)` with
//! `xi_k = pi k / L`, `k` in `(-N/2, N/2]`. The cosine view of an even
//! field stores amplitudes `a_k`, `f(x) = sum_{k=0}^{N/2} a_k cos(xi_k x)`.
//!
//! Sobolev norms use the discrete Parseval identity,
//! `||f||_{H^s}^2 = 2L sum_k (1 + xi_k^2)^s |c_k|^2`, which in terms of the
//! cosine amplitudes weights `|a_k|^2` by `2L` at `k = 0, N/2` and `L` in
//! between. `hs_norm(f, 0)` is exactly the trapezoid L2 norm of the samples.

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::symbol::MultiplierSymbol;

pub type C64 = Complex<f64>;

pub struct Grid {
    half_length: f64,
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    fwd_pad: Arc<dyn Fft<f64>>,
    inv_pad: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("half_length", &self.half_length)
            .field("n", &self.n)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.half_length == other.half_length && self.n == other.n
    }
}

pub fn make_grid(half_length: f64, n: usize) -> Result<Arc<Grid>> {
    if !(half_length > 0.0 && half_length.is_finite()) {
        return Err(Error::BadGrid(format!(
            "half-length must be positive, got {half_length}"
        )));
    }
    if n < 16 || !n.is_power_of_two() {
        return Err(Error::BadGrid(format!(
            "N must be a power of two >= 16, got {n}"
        )));
    }
    let mut planner = FftPlanner::new();
    Ok(Arc::new(Grid {
        half_length,
        n,
        fwd: planner.plan_fft_forward(n),
        inv: planner.plan_fft_inverse(n),
        fwd_pad: planner.plan_fft_forward(2 * n),
        inv_pad: planner.plan_fft_inverse(2 * n),
    }))
}

impl Grid {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.half_length + 2.0 * self.half_length * j as f64 / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    pub fn mirror(&self, j: usize) -> usize {
        (self.n - j) % self.n
    }

    /// `xi_k = pi k / L` for `k = 0..=N/2`.
    pub fn frequency(&self, k: usize) -> f64 {
        PI * k as f64 / self.half_length
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..=self.n / 2).map(|k| self.frequency(k)).collect()
    }

    pub fn max_frequency(&self) -> f64 {
        self.frequency(self.n / 2)
    }

    /// Signed frequency of spectrum slot `idx` in FFT ordering.
    pub fn signed_frequency(&self, idx: usize) -> f64 {
        let k = if idx <= self.n / 2 {
            idx as f64
        } else {
            idx as f64 - self.n as f64
        };
        PI * k / self.half_length
    }

    /// Slot `idx` of the spectrum to its cosine index `|k|`.
    pub(crate) fn mode(&self, idx: usize) -> usize {
        if idx <= self.n / 2 {
            idx
        } else {
            self.n - idx
        }
    }

    /// Same node count on `[-L/eps, L/eps)`.
    pub fn stretched(&self, eps: f64) -> Result<Arc<Grid>> {
        make_grid(self.half_length / eps, self.n)
    }

    pub(crate) fn forward(&self, values: &[f64]) -> Vec<C64> {
        let n = self.n;
        let half = n / 2;
        let mut buf: Vec<C64> = (0..n)
            .map(|m| C64::new(values[(m + half) % n], 0.0))
            .collect();
        self.fwd.process(&mut buf);
        let scale = 1.0 / n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    pub(crate) fn inverse(&self, mut spectrum: Vec<C64>) -> Vec<f64> {
        let n = self.n;
        let half = n / 2;
        self.inv.process(&mut spectrum);
        (0..n).map(|j| spectrum[(j + half) % n].re).collect()
    }

    /// Dealiased product of two spectra: zero-pad to `2N`, multiply, truncate.
    fn padded_product(&self, a: &[C64], b: &[C64]) -> Vec<C64> {
        let mut pa = self.pad(a);
        let mut pb = self.pad(b);
        self.inv_pad.process(&mut pa);
        self.inv_pad.process(&mut pb);
        for (x, y) in pa.iter_mut().zip(&pb) {
            *x = C64::new(x.re * y.re, 0.0);
        }
        self.fwd_pad.process(&mut pa);
        self.truncate(&pa)
    }

    /// Values of a spectrum on the 2x refined grid (origin-first order).
    pub(crate) fn to_fine(&self, spectrum: &[C64]) -> Vec<f64> {
        let mut p = self.pad(spectrum);
        self.inv_pad.process(&mut p);
        p.into_iter().map(|c| c.re).collect()
    }

    /// Spectrum, truncated to `N` modes, of values on the refined grid.
    pub(crate) fn from_fine(&self, values: &[f64]) -> Vec<C64> {
        let mut buf: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.fwd_pad.process(&mut buf);
        self.truncate(&buf)
    }

    /// Cosine amplitudes of an (even) spectrum.
    pub(crate) fn amplitudes(&self, spectrum: &[C64]) -> Vec<f64> {
        let half = self.n / 2;
        (0..=half)
            .map(|k| {
                if k == 0 || k == half {
                    spectrum[k].re
                } else {
                    2.0 * spectrum[k].re
                }
            })
            .collect()
    }

    pub(crate) fn spectrum_from_amplitudes(&self, amps: &[f64]) -> Vec<C64> {
        let n = self.n;
        let half = n / 2;
        assert_eq!(amps.len(), half + 1, "expected N/2 + 1 cosine amplitudes");
        let mut spec = vec![C64::new(0.0, 0.0); n];
        spec[0] = C64::new(amps[0], 0.0);
        for k in 1..half {
            spec[k] = C64::new(0.5 * amps[k], 0.0);
            spec[n - k] = spec[k];
        }
        spec[half] = C64::new(amps[half], 0.0);
        spec
    }

    /// Multiplies a spectrum in place by a table sampled at `xi_0..=xi_{N/2}`.
    pub(crate) fn apply_table_in_place(&self, spectrum: &mut [C64], table: &[f64]) {
        for (idx, c) in spectrum.iter_mut().enumerate() {
            *c *= table[self.mode(idx)];
        }
    }

    /// Weights turning cosine amplitudes into L2-orthonormal coordinates.
    pub(crate) fn amplitude_weights(&self) -> Vec<f64> {
        let half = self.n / 2;
        (0..=half)
            .map(|k| {
                if k == 0 || k == half {
                    2.0 * self.half_length
                } else {
                    self.half_length
                }
            })
            .collect()
    }

    fn pad(&self, c: &[C64]) -> Vec<C64> {
        let n = self.n;
        let half = n / 2;
        let mut out = vec![C64::new(0.0, 0.0); 2 * n];
        out[..half].copy_from_slice(&c[..half]);
        for k in 1..half {
            out[2 * n - k] = c[n - k];
        }
        out[half] = c[half] * 0.5;
        out[2 * n - half] = c[half] * 0.5;
        out
    }

    fn truncate(&self, p: &[C64]) -> Vec<C64> {
        let n = self.n;
        let half = n / 2;
        let scale = 1.0 / (2 * n) as f64;
        let mut out = vec![C64::new(0.0, 0.0); n];
        for k in 0..half {
            out[k] = p[k] * scale;
        }
        for k in 1..half {
            out[n - k] = p[2 * n - k] * scale;
        }
        out[half] = (p[half] + p[2 * n - half]) * scale;
        out
    }
}

/// Real grid function on a shared [`Grid`].
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
    even: bool,
}

impl Field {
    pub fn zeros(grid: &Arc<Grid>) -> Field {
        Field {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
            even: true,
        }
    }

    /// Samples `f` at the nodes. The even flag is not set; use
    /// [`Field::from_even_fn`] or [`Field::project_even`] for that.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: grid.clone(),
            values: grid.nodes().into_iter().map(f).collect(),
            even: false,
        }
    }

    /// Samples an even function `f` exactly symmetrically (`f(|x|)`).
    pub fn from_even_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Field {
        let mut field = Field::zeros(grid);
        for j in 0..grid.len() {
            field.values[j] = f(grid.node(j).abs());
        }
        // Node 0 is -L; its mirror is itself and |x| = L.
        field
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Field {
            grid: grid.clone(),
            values,
            even: false,
        })
    }

    /// Even field from cosine amplitudes `a_0..=a_{N/2}`.
    pub fn from_cosine_coeffs(grid: &Arc<Grid>, amps: &[f64]) -> Field {
        Field::from_spectrum(grid, grid.spectrum_from_amplitudes(amps), true)
    }

    pub(crate) fn from_spectrum(grid: &Arc<Grid>, spectrum: Vec<C64>, even: bool) -> Field {
        Field {
            grid: grid.clone(),
            values: grid.inverse(spectrum),
            even,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        self.even = false;
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_even(&self) -> bool {
        self.even
    }

    /// Marks the field even without touching the samples.
    pub fn assume_even(mut self) -> Field {
        self.even = true;
        self
    }

    /// Value at the node `x = 0`.
    pub fn at_origin(&self) -> f64 {
        self.values[self.grid.len() / 2]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Normalized spectrum in FFT slot order.
    pub fn spectrum(&self) -> Vec<C64> {
        self.grid.forward(&self.values)
    }

    /// Cosine amplitudes `a_0..=a_{N/2}` (real parts; exact for even fields).
    pub fn cosine_coeffs(&self) -> Vec<f64> {
        self.grid.amplitudes(&self.spectrum())
    }

    fn check_grid(&self, other: &Field) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `sym(D) f`: multiplies every mode by `sym(xi_k)`.
    pub fn apply_multiplier(&self, sym: &MultiplierSymbol) -> Result<Field> {
        let table = sym.sample(&self.grid.frequencies())?;
        Ok(self.apply_table(&table))
    }

    /// Multiplier given as pre-sampled values at `xi_0..=xi_{N/2}`.
    pub fn apply_table(&self, table: &[f64]) -> Field {
        debug_assert_eq!(table.len(), self.grid.len() / 2 + 1);
        if table.iter().all(|&t| t == 1.0) {
            return self.clone();
        }
        let mut spec = self.spectrum();
        self.grid.apply_table_in_place(&mut spec, table);
        Field::from_spectrum(&self.grid, spec, self.even)
    }

    /// Spectral first derivative (Nyquist mode dropped). Flips parity.
    pub fn derivative(&self) -> Field {
        let half = self.grid.len() / 2;
        let mut spec = self.spectrum();
        for (idx, c) in spec.iter_mut().enumerate() {
            if idx == half {
                *c = C64::new(0.0, 0.0);
            } else {
                *c *= C64::new(0.0, self.grid.signed_frequency(idx));
            }
        }
        Field::from_spectrum(&self.grid, spec, false)
    }

    /// Pointwise product, dealiased on a 2x padded grid.
    pub fn product(&self, other: &Field) -> Result<Field> {
        self.check_grid(other)?;
        let spec = self
            .grid
            .padded_product(&self.spectrum(), &other.spectrum());
        Ok(Field::from_spectrum(
            &self.grid,
            spec,
            self.even && other.even,
        ))
    }

    pub fn square(&self) -> Field {
        let s = self.spectrum();
        let spec = self.grid.padded_product(&s, &s);
        Field::from_spectrum(&self.grid, spec, self.even)
    }

    /// Pointwise product without dealiasing.
    pub fn product_pointwise(&self, other: &Field) -> Result<Field> {
        self.check_grid(other)?;
        Ok(Field {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
            even: self.even && other.even,
        })
    }

    pub fn hs_norm(&self, s: f64) -> f64 {
        let spec = self.spectrum();
        let sum: f64 = spec
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let xi = self.grid.signed_frequency(idx);
                (1.0 + xi * xi).powf(s) * c.norm_sqr()
            })
            .sum();
        (2.0 * self.grid.half_length * sum).sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.values.iter().map(|v| v * v).sum();
        (2.0 * self.grid.half_length / self.grid.len() as f64 * sum).sqrt()
    }

    /// `(f(x) + f(-x)) / 2` on the grid.
    pub fn project_even(&self) -> Field {
        let values = (0..self.grid.len())
            .map(|j| 0.5 * (self.values[j] + self.values[self.grid.mirror(j)]))
            .collect();
        Field {
            grid: self.grid.clone(),
            values,
            even: true,
        }
    }

    /// `max_j |f(x_j) - f(-x_j)| / 2`.
    pub fn odd_part_max(&self) -> f64 {
        (0..self.grid.len())
            .map(|j| 0.5 * (self.values[j] - self.values[self.grid.mirror(j)]).abs())
            .fold(0.0, f64::max)
    }

    /// Share of the squared `H^s` norm carried by modes with `|k| > N/3`.
    pub fn tail_fraction(&self, s: f64) -> f64 {
        let spec = self.spectrum();
        let cutoff = self.grid.len() / 3;
        let (mut tail, mut total) = (0.0, 0.0);
        for (idx, c) in spec.iter().enumerate() {
            let xi = self.grid.signed_frequency(idx);
            let e = (1.0 + xi * xi).powf(s) * c.norm_sqr();
            total += e;
            if self.grid.mode(idx) > cutoff {
                tail += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }

    pub fn scaled(&self, factor: f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
            even: self.even,
        }
    }

    /// Same samples reinterpreted on another grid with the same node count.
    pub fn on_grid(&self, grid: &Arc<Grid>) -> Result<Field> {
        if grid.len() != self.grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Field {
            grid: grid.clone(),
            values: self.values.clone(),
            even: self.even,
        })
    }

    /// CSV with columns `x,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,value")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(w, "{:e},{:e}", self.grid.node(j), v)?;
        }
        Ok(())
    }

    /// CSV with columns `k,xi,coeff` (cosine amplitudes).
    pub fn write_coeffs_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "k,xi,coeff")?;
        for (k, a) in self.cosine_coeffs().iter().enumerate() {
            writeln!(w, "{k},{:e},{:e}", self.grid.frequency(k), a)?;
        }
        Ok(())
    }
}

fn zip_with(a: &Field, b: &Field, op: impl Fn(f64, f64) -> f64) -> Field {
    assert_eq!(a.grid.len(), b.grid.len(), "fields on different grids");
    Field {
        grid: a.grid.clone(),
        values: a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| op(*x, *y))
            .collect(),
        even: a.even && b.even,
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        zip_with(self, rhs, |x, y| x + y)
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        zip_with(self, rhs, |x, y| x - y)
    }
}

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, rhs: f64) -> Field {
        self.scaled(rhs)
    }
}

/// `sym(D) f`.
pub fn apply_multiplier(sym: &MultiplierSymbol, f: &Field) -> Result<Field> {
    f.apply_multiplier(sym)
}

pub fn hs_norm(f: &Field, s: f64) -> f64 {
    f.hs_norm(s)
}

pub fn project_even(f: &Field) -> Field {
    f.project_even()
}

pub fn tail_fraction(f: &Field, s: f64) -> f64 {
    f.tail_fraction(s)
}
