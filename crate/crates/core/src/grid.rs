// Copyright 2026 Lightcone Lab Contributors
// SPDX-License-Identifier: Apache-2.0

//! Uniform periodic grids on `[-L/2, L/2)^d` and complex grid functions with
//! spacing-weighted norms.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::FftNd;

/// Numerical support threshold, relative to the sup norm of a function.
pub const SUPPORT_TOL: f64 = 1e-14;

/// `⟨t⟩ = (1 + t²)^{1/2}`.
#[inline]
pub fn jbracket(t: f64) -> f64 {
    t.hypot(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    points: usize,
    length: f64,
}

impl Grid {
    pub fn new(dim: usize, points: usize, length: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Config(format!("grid dimension must be 1 or 2, got {dim}")));
        }
        if !points.is_power_of_two() {
            return Err(Error::Config(format!("points per axis must be a power of two, got {points}")));
        }
        if points.pow(dim as u32) < 8 {
            return Err(Error::Config("grid must contain at least 8 points".into()));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Config(format!("box length must be positive, got {length}")));
        }
        Ok(Self { dim, points, length })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.points as f64
    }

    /// `h^d`, the Riemann weight of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Total number of grid points `P^d`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn axis_coordinate(&self, i: usize) -> f64 {
        -0.5 * self.length + i as f64 * self.spacing()
    }

    pub fn unravel(&self, flat: usize) -> [usize; 2] {
        if self.dim == 1 {
            [flat, 0]
        } else {
            [flat / self.points, flat % self.points]
        }
    }

    pub fn ravel(&self, idx: [usize; 2]) -> usize {
        if self.dim == 1 {
            idx[0]
        } else {
            idx[0] * self.points + idx[1]
        }
    }

    /// Coordinates of a flat index; the second entry is 0 when `d = 1`.
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let [i, j] = self.unravel(flat);
        if self.dim == 1 {
            [self.axis_coordinate(i), 0.0]
        } else {
            [self.axis_coordinate(i), self.axis_coordinate(j)]
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim && x.iter().all(|&c| c >= -0.5 * self.length && c < 0.5 * self.length)
    }

    fn wrap(&self, c: f64) -> f64 {
        let l = self.length;
        c - l * (c / l).round()
    }

    /// Minimal-image displacement `a - b` on the torus.
    pub fn displacement(&self, a: &[f64], b: &[f64]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for k in 0..self.dim {
            out[k] = self.wrap(a[k] - b[k]);
        }
        out
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let d = self.displacement(a, b);
        d[0].hypot(d[1])
    }

    /// Periodic distance of every grid point to `x`.
    pub fn distances_to(&self, x: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|i| self.distance(&self.point(i)[..self.dim], x)).collect()
    }

    /// Signed grid momentum `2πk/L` for FFT bin `k` along one axis.
    pub fn axis_momentum(&self, k: usize) -> f64 {
        let p = self.points as i64;
        let k = k as i64;
        let signed = if k <= p / 2 { k } else { k - p };
        2.0 * PI * signed as f64 / self.length
    }

    /// `|p|²` for every FFT bin, in the row-major layout of the grid.
    pub fn momentum_squared(&self) -> Vec<f64> {
        (0..self.len())
            .map(|flat| {
                let [i, j] = self.unravel(flat);
                let px = self.axis_momentum(i);
                let py = if self.dim == 2 { self.axis_momentum(j) } else { 0.0 };
                px * px + py * py
            })
            .collect()
    }

    /// Largest `|p|` representable on the grid.
    pub fn max_momentum(&self) -> f64 {
        let nyq = PI / self.spacing();
        nyq * (self.dim as f64).sqrt()
    }

    pub(crate) fn fft(&self) -> FftNd {
        FftNd::new(self.points, self.dim)
    }

    fn same_as(&self, other: &Grid) -> bool {
        self.dim == other.dim && self.points == other.points && self.length == other.length
    }
}

/// Complex function sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i)[..grid.dim()])).collect();
        Self { grid, values }
    }

    pub fn from_real(grid: Grid, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Normalized indicator of `{y : lo ≤ |y - x| < hi}`; falls back to the
    /// unnormalized zero function when no grid point qualifies.
    pub fn shell_indicator(grid: Grid, x: &[f64], lo: f64, hi: f64) -> Self {
        let d = grid.distances_to(x);
        let vals = d
            .iter()
            .map(|&r| if r >= lo && r < hi { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
            .collect();
        let mut f = Self { grid, values: vals };
        let n = f.l2_norm();
        if n > 0.0 {
            f.scale_mut(Complex64::new(1.0 / n, 0.0));
        }
        f
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `∫ f dy` as a Riemann sum.
    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.grid.cell_volume()
    }

    /// `⟨self, other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &GridFunction) -> Result<Complex64> {
        self.check_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.cell_volume())
    }

    /// Mask of grid points with `|v| > SUPPORT_TOL·‖f‖_∞`.
    pub fn support(&self) -> Vec<bool> {
        let thresh = SUPPORT_TOL * self.sup_norm();
        self.values.iter().map(|v| v.norm() > thresh).collect()
    }

    /// Smallest periodic distance from `x` to the numerical support.
    pub fn support_distance(&self, x: &[f64]) -> f64 {
        let supp = self.support();
        (0..self.grid.len())
            .filter(|&i| supp[i])
            .map(|i| self.grid.distance(&self.grid.point(i)[..self.grid.dim()], x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn scale_mut(&mut self, s: Complex64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.scale_mut(s);
        out
    }

    pub fn normalized(&self) -> Self {
        let n = self.l2_norm();
        self.scaled(Complex64::new(1.0 / n, 0.0))
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn abs_squared(&self) -> Self {
        self.map(|v| Complex64::new(v.norm_sqr(), 0.0))
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    fn zip_with(&self, other: &GridFunction, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub(crate) fn check_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::Shape("grid functions live on different grids".into()))
        }
    }

    /// `g(y) = f(-y)`, with `-y` taken on the periodic grid.
    pub fn reflected(&self) -> Self {
        let g = self.grid;
        let p = g.points_per_axis();
        let flip = |i: usize| (p - i) % p;
        let values = (0..g.len())
            .map(|flat| {
                let [i, j] = g.unravel(flat);
                // coordinate index i ↔ (i - P/2)h, so -x ↔ P - i (mod P)
                let src = if g.dim() == 1 { [flip(i), 0] } else { [flip(i), flip(j)] };
                self.values[g.ravel(src)]
            })
            .collect();
        Self { grid: g, values }
    }

    /// Spectral coefficients normalized so that `Σ|c_k|² = ‖f‖₂²`.
    pub fn fourier_coefficients(&self) -> Vec<Complex64> {
        let mut buf = self.values.clone();
        self.grid.fft().forward(&mut buf);
        let scale = (self.grid.cell_volume() / self.grid.len() as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= scale);
        buf
    }

    /// Applies a diagonal Fourier multiplier `m(k)` given per FFT bin.
    pub fn apply_multiplier(&self, multiplier: &[Complex64]) -> Self {
        let fft = self.grid.fft();
        let mut buf = self.values.clone();
        fft.forward(&mut buf);
        buf.iter_mut().zip(multiplier).for_each(|(v, m)| *v *= m);
        fft.inverse(&mut buf);
        Self { grid: self.grid, values: buf }
    }

    /// CSV with columns `(ix[, iy], re, im)`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        if self.grid.dim() == 1 {
            wr.write_record(["ix", "re", "im"])?;
        } else {
            wr.write_record(["ix", "iy", "re", "im"])?;
        }
        for (flat, v) in self.values.iter().enumerate() {
            let [i, j] = self.grid.unravel(flat);
            let mut rec = vec![i.to_string()];
            if self.grid.dim() == 2 {
                rec.push(j.to_string());
            }
            rec.push(v.re.to_string());
            rec.push(v.im.to_string());
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(grid: Grid, r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
        let mut seen = vec![false; grid.len()];
        let parse_idx = |s: &str| {
            s.trim().parse::<usize>().map_err(|e| Error::Shape(format!("bad index {s:?}: {e}")))
        };
        let parse_f = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Shape(format!("bad value {s:?}: {e}")));
        for rec in rd.records() {
            let rec = rec?;
            let need = grid.dim() + 2;
            if rec.len() != need {
                return Err(Error::Shape(format!("expected {need} columns, got {}", rec.len())));
            }
            let i = parse_idx(&rec[0])?;
            let j = if grid.dim() == 2 { parse_idx(&rec[1])? } else { 0 };
            if i >= grid.points_per_axis() || j >= grid.points_per_axis() {
                return Err(Error::Shape(format!("index ({i}, {j}) outside grid")));
            }
            let flat = grid.ravel([i, j]);
            values[flat] = Complex64::new(parse_f(&rec[need - 2])?, parse_f(&rec[need - 1])?);
            seen[flat] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Shape("CSV does not cover every grid point".into()));
        }
        Self::new(grid, values)
    }
}

/// Normalization convention for the smearing Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `(πσ²)^{-d/2} exp(-y²/2σ²)` exactly as written; integrates to `2^{d/2}`.
    AsPrinted,
    /// Rescaled so that `∫φ = 1` on the grid.
    #[default]
    L1,
    /// Rescaled so that `‖φ‖₂ = 1` on the grid.
    L2,
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as-printed" => Ok(Self::AsPrinted),
            "l1" => Ok(Self::L1),
            "l2" => Ok(Self::L2),
            other => Err(Error::Config(format!("unknown normalization {other:?}"))),
        }
    }
}

/// Samples the smearing Gaussian of width `sigma` centered at `x`.
pub fn make_gaussian(grid: Grid, sigma: f64, x: &[f64], normalization: Normalization) -> Result<GridFunction> {
    let h = grid.spacing();
    if !(sigma >= 2.0 * h) {
        return Err(Error::Resolution { sigma, spacing: h });
    }
    if !grid.contains(x) {
        return Err(Error::Parameter(format!("center {x:?} lies outside the box")));
    }
    let d = grid.dim() as i32;
    let prefactor = (PI * sigma * sigma).powf(-0.5 * d as f64);
    let mut f = GridFunction::from_fn(grid, |y| {
        let r = grid.distance(y, x);
        Complex64::new(prefactor * (-r * r / (2.0 * sigma * sigma)).exp(), 0.0)
    });
    match normalization {
        Normalization::AsPrinted => {}
        Normalization::L1 => {
            let m = f.l1_norm();
            f.scale_mut(Complex64::new(1.0 / m, 0.0));
        }
        Normalization::L2 => {
            let m = f.l2_norm();
            f.scale_mut(Complex64::new(1.0 / m, 0.0));
        }
    }
    Ok(f)
}

/// Smearing profile `φ`, evaluated at any center as `φ_x = φ(· - x)`.
#[derive(Debug, Clone)]
pub enum SmearingFunction {
    Gaussian { sigma: f64, normalization: Normalization },
    /// Samples of `φ` centered at the origin; only grid-point shifts are allowed.
    Table(GridFunction),
}

impl SmearingFunction {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::Parameter(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self::Gaussian { sigma, normalization: Normalization::L1 })
    }

    pub fn at(&self, grid: Grid, x: &[f64]) -> Result<GridFunction> {
        match self {
            Self::Gaussian { sigma, normalization } => make_gaussian(grid, *sigma, x, *normalization),
            Self::Table(table) => {
                if !table.grid.same_as(&grid) {
                    return Err(Error::Shape("smearing table lives on a different grid".into()));
                }
                if !grid.contains(x) {
                    return Err(Error::Parameter(format!("center {x:?} lies outside the box")));
                }
                let h = grid.spacing();
                let p = grid.points_per_axis() as i64;
                let mut shift = [0i64; 2];
                for k in 0..grid.dim() {
                    let s = x[k] / h;
                    if (s - s.round()).abs() > 1e-9 {
                        return Err(Error::Parameter("tabulated smearing requires grid-point centers".into()));
                    }
                    shift[k] = s.round() as i64;
                }
                let values = (0..grid.len())
                    .map(|flat| {
                        let [i, j] = grid.unravel(flat);
                        let si = (i as i64 - shift[0]).rem_euclid(p) as usize;
                        let sj = (j as i64 - shift[1]).rem_euclid(p) as usize;
                        table.values[grid.ravel([si, sj])]
                    })
                    .collect();
                GridFunction::new(grid, values)
            }
        }
    }

    /// `φ` itself, i.e. the profile centered at the origin.
    pub fn profile(&self, grid: Grid) -> Result<GridFunction> {
        self.at(grid, &[0.0, 0.0][..grid.dim()])
    }
}

/// `G_{n,t}(r) = 1 ∧ (⟨t⟩/r)^n`.
pub fn decay_envelope(n: i64, t: f64, r: f64) -> Result<f64> {
    if n <= 0 {
        return Err(Error::Parameter(format!("decay exponent must be positive, got {n}")));
    }
    if !(r >= 0.0) {
        return Err(Error::Parameter(format!("distance must be non-negative, got {r}")));
    }
    Ok(envelope_unchecked(n as i32, t, r))
}

#[inline]
pub(crate) fn envelope_unchecked(n: i32, t: f64, r: f64) -> f64 {
    let jt = jbracket(t);
    if r <= jt {
        1.0
    } else {
        (jt / r).powi(n)
    }
}

/// Splits `f` into dyadic shells around `x`: piece 0 covers `|y-x| ≤ 1`,
/// piece `k ≥ 1` covers `2^{k-1} < |y-x| ≤ 2^k`.
pub fn dyadic_decompose(f: &GridFunction, x: &[f64]) -> Vec<GridFunction> {
    let grid = f.grid;
    let dist = grid.distances_to(x);
    let shell = |r: f64| -> usize {
        if r <= 1.0 {
            0
        } else {
            let mut k = 1usize;
            while r > (1u64 << k) as f64 {
                k += 1;
            }
            k
        }
    };
    let kmax = dist.iter().map(|&r| shell(r)).max().unwrap_or(0);
    let mut pieces = vec![GridFunction::zeros(grid); kmax + 1];
    for (i, &r) in dist.iter().enumerate() {
        pieces[shell(r)].values[i] = f.values[i];
    }
    pieces
}

/// `(f∗g)(x) = Σ_y f(y) g(x−y) h^d` with periodic wrap, computed spectrally.
pub fn periodic_convolve(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    f.check_grid(g)?;
    let grid = f.grid;
    let fft = grid.fft();
    let mut a = f.values.clone();
    let mut b = g.values.clone();
    fft.forward(&mut a);
    fft.forward(&mut b);
    a.iter_mut().zip(&b).for_each(|(x, y)| *x *= y);
    fft.inverse(&mut a);
    // circular index m = i + j; coordinates carry an offset of P/2 per axis
    let p = grid.points_per_axis();
    let half = p / 2;
    let h = grid.cell_volume();
    let values = (0..grid.len())
        .map(|flat| {
            let [i, j] = grid.unravel(flat);
            let src = if grid.dim() == 1 { [(i + half) % p, 0] } else { [(i + half) % p, (j + half) % p] };
            a[grid.ravel(src)] * h
        })
        .collect();
    GridFunction::new(grid, values)
}
