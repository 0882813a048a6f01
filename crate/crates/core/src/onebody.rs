// Copyright 2026 Lightcone Lab Contributors
// SPDX-License-Identifier: Apache-2.0

//! Discretized one-body Schrödinger operator `T = -κΔ + V` on a periodic grid.
//!
//! The kinetic term is the spectral (Fourier multiplier) Laplacian. Below
//! [`DENSE_EIG_CAP`] grid points the operator is diagonalized once and every
//! functional-calculus operation (`e^{-itT}`, `g_E(T)`, spectral windows)
//! reuses that eigenbasis. Larger grids only support split-step propagation.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bounds::onebody_envelope;
use crate::error::{Error, Result};
use crate::grid::{jbracket, Grid, GridFunction};
use crate::jet::smooth_step_jet;
use crate::linalg::{eigh_real, eigvalsh_real, power_norm, RMat};

/// Largest grid (total points) that is diagonalized densely.
pub const DENSE_EIG_CAP: usize = 4096;

/// Squared overlaps below this value are treated as numerically zero when
/// fitting light-cone slopes.
pub const OVERLAP_FLOOR: f64 = 1e-26;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Potential {
    Zero,
    Constant { value: f64 },
    /// `amplitude · Σ_axes cos(2π y_k / wavelength)`; `wavelength` defaults to the box length.
    Cosine { amplitude: f64, wavelength: Option<f64> },
    /// Gaussian well or bump `depth · exp(-|y|²/2w²)`.
    Gaussian { depth: f64, width: f64 },
}

impl Potential {
    pub fn sample(&self, grid: Grid) -> GridFunction {
        GridFunction::from_fn(grid, |y| {
            let v = match *self {
                Potential::Zero => 0.0,
                Potential::Constant { value } => value,
                Potential::Cosine { amplitude, wavelength } => {
                    let lam = wavelength.unwrap_or(grid.length());
                    amplitude * y.iter().map(|c| (2.0 * PI * c / lam).cos()).sum::<f64>()
                }
                Potential::Gaussian { depth, width } => {
                    let r2: f64 = y.iter().map(|c| c * c).sum();
                    depth * (-r2 / (2.0 * width * width)).exp()
                }
            };
            Complex64::new(v, 0.0)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Spectral,
    /// Symmetric Strang splitting with step `dt`.
    SplitStep { dt: f64 },
}

#[derive(Debug, Clone)]
struct Spectrum {
    values: Vec<f64>,
    /// Columns are orthonormal eigenvectors in the unweighted inner product.
    vectors: RMat,
}

#[derive(Debug, Clone)]
pub struct OneBodyOperator {
    grid: Grid,
    kappa: f64,
    potential: Vec<f64>,
    /// `κ|p|²` per FFT bin.
    symbol: Vec<f64>,
    spectrum: Option<Spectrum>,
}

impl OneBodyOperator {
    /// Assembles `-κΔ + V`. Grids above [`DENSE_EIG_CAP`] are rejected unless
    /// `splitstep_fallback` is set, in which case no eigenbasis is built.
    pub fn assemble(grid: Grid, kappa: f64, v: &GridFunction, splitstep_fallback: bool) -> Result<Self> {
        crate::linalg::pin_serial();
        if !(kappa > 0.0) {
            return Err(Error::Parameter(format!("kinetic coefficient must be positive, got {kappa}")));
        }
        if v.grid() != &grid {
            return Err(Error::Shape("potential lives on a different grid".into()));
        }
        let scale = v.sup_norm().max(1.0);
        if v.values().iter().any(|z| z.im.abs() > 1e-14 * scale) {
            return Err(Error::Model("potential must be real-valued".into()));
        }
        let potential: Vec<f64> = v.values().iter().map(|z| z.re).collect();
        if potential.iter().any(|x| !x.is_finite()) {
            return Err(Error::Model("potential must be bounded on the grid".into()));
        }
        let symbol: Vec<f64> = grid.momentum_squared().into_iter().map(|p2| kappa * p2).collect();
        let mut op = Self { grid, kappa, potential, symbol, spectrum: None };
        if grid.len() <= DENSE_EIG_CAP {
            let (values, vectors) = eigh_real(&op.matrix());
            op.spectrum = Some(Spectrum { values, vectors });
        } else if !splitstep_fallback {
            return Err(Error::Capacity(format!(
                "{} grid points exceed the dense eigensolver cap of {DENSE_EIG_CAP}",
                grid.len()
            )));
        }
        Ok(op)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn has_spectrum(&self) -> bool {
        self.spectrum.is_some()
    }

    fn spectrum(&self) -> Result<&Spectrum> {
        self.spectrum.as_ref().ok_or_else(|| {
            Error::Capacity("functional calculus needs the dense eigenbasis; grid exceeds the cap".into())
        })
    }

    /// Ascending eigenvalues.
    /// Eigenvalues and orthonormal (Euclidean) eigenvectors as columns.
    pub fn eigenpairs(&self) -> Result<(&[f64], &RMat)> {
        let s = self.spectrum()?;
        Ok((&s.values, &s.vectors))
    }

    pub fn eigenvalues(&self) -> Result<&[f64]> {
        Ok(&self.spectrum()?.values)
    }

    /// Real symmetric matrix of `T` in the position basis.
    pub fn matrix(&self) -> RMat {
        let n = self.grid.len();
        let kernel = circulant_kernel(&self.grid, &self.symbol);
        let g = self.grid;
        let p = g.points_per_axis();
        Mat::from_fn(n, n, |i, j| {
            let [a, b] = g.unravel(i);
            let [c, d] = g.unravel(j);
            let k = g.ravel([(a + p - c) % p, (b + p - d) % p]);
            let diag = if i == j { self.potential[i] } else { 0.0 };
            kernel[k] + diag
        })
    }

    fn check(&self, f: &GridFunction) -> Result<()> {
        if f.grid() != &self.grid {
            return Err(Error::Shape("function lives on a different grid".into()));
        }
        Ok(())
    }

    /// Coefficients `V^T f` in the eigenbasis.
    fn to_eigenbasis(&self, f: &GridFunction) -> Result<Vec<Complex64>> {
        let s = self.spectrum()?;
        let n = self.grid.len();
        let cols = Mat::from_fn(n, 2, |i, k| if k == 0 { f.values()[i].re } else { f.values()[i].im });
        let c = s.vectors.transpose() * &cols;
        Ok((0..n).map(|i| Complex64::new(c[(i, 0)], c[(i, 1)])).collect())
    }

    fn from_eigenbasis(&self, coeffs: &[Complex64]) -> Result<GridFunction> {
        let s = self.spectrum()?;
        let n = self.grid.len();
        let cols = Mat::from_fn(n, 2, |i, k| if k == 0 { coeffs[i].re } else { coeffs[i].im });
        let v = &s.vectors * &cols;
        GridFunction::new(self.grid, (0..n).map(|i| Complex64::new(v[(i, 0)], v[(i, 1)])).collect())
    }

    /// Applies `F(T) = Σ F(λ_i)|v_i⟩⟨v_i|`.
    pub fn apply_function(&self, f: &GridFunction, func: impl Fn(f64) -> Complex64) -> Result<GridFunction> {
        self.check(f)?;
        let mut c = self.to_eigenbasis(f)?;
        let vals = &self.spectrum()?.values;
        c.iter_mut().zip(vals).for_each(|(z, &l)| *z *= func(l));
        self.from_eigenbasis(&c)
    }

    /// `T f`, through FFTs (no eigenbasis needed).
    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        self.check(f)?;
        let mult: Vec<Complex64> = self.symbol.iter().map(|&s| Complex64::new(s, 0.0)).collect();
        let kin = f.apply_multiplier(&mult);
        let values = kin
            .values()
            .iter()
            .zip(f.values())
            .zip(&self.potential)
            .map(|((k, v), &pot)| k + v * pot)
            .collect();
        GridFunction::new(self.grid, values)
    }

    /// `e^{-itT} f`.
    pub fn propagate(&self, f: &GridFunction, t: f64, method: Method) -> Result<GridFunction> {
        self.check(f)?;
        match method {
            Method::Spectral => self.apply_function(f, |l| Complex64::from_polar(1.0, -l * t)),
            Method::SplitStep { dt } => self.split_step(f, t, dt),
        }
    }

    fn split_step(&self, f: &GridFunction, t: f64, dt: f64) -> Result<GridFunction> {
        if !(dt > 0.0) {
            return Err(Error::Parameter(format!("split-step dt must be positive, got {dt}")));
        }
        if t == 0.0 {
            return Ok(f.clone());
        }
        let steps = (t.abs() / dt).ceil().max(1.0) as usize;
        let tau = t / steps as f64;
        let half: Vec<Complex64> = self.potential.iter().map(|&v| Complex64::from_polar(1.0, -0.5 * v * tau)).collect();
        let full: Vec<Complex64> = self.potential.iter().map(|&v| Complex64::from_polar(1.0, -v * tau)).collect();
        let kin: Vec<Complex64> = self.symbol.iter().map(|&s| Complex64::from_polar(1.0, -s * tau)).collect();
        let fft = self.grid.fft();
        let mut psi: Vec<Complex64> = f.values().iter().zip(&half).map(|(a, b)| a * b).collect();
        for step in 0..steps {
            fft.forward(&mut psi);
            psi.iter_mut().zip(&kin).for_each(|(a, b)| *a *= b);
            fft.inverse(&mut psi);
            let phase = if step + 1 == steps { &half } else { &full };
            psi.iter_mut().zip(phase).for_each(|(a, b)| *a *= b);
        }
        GridFunction::new(self.grid, psi)
    }

    /// `g_E(T)` as a spectral operator.
    pub fn spectral_cutoff(&self, cutoff: &EnergyCutoff) -> Result<SpectralOperator<'_>> {
        let vals = &self.spectrum()?.values;
        Ok(SpectralOperator { op: self, weights: vals.iter().map(|&l| Complex64::new(cutoff.value(l), 0.0)).collect() })
    }

    /// `c_E = ‖|p̂| 1_{(-∞, α²E]}(T)‖`.
    pub fn c_e(&self, alpha: f64, energy: f64) -> Result<f64> {
        let s = self.spectrum()?;
        let top = alpha * alpha * energy;
        let k = s.values.iter().take_while(|&&l| l <= top).count();
        if k == 0 {
            return Ok(0.0);
        }
        // ‖|p| Q‖² = λ_max(V_w^T p² V_w)
        let n = self.grid.len();
        let p2: Vec<Complex64> = self.grid.momentum_squared().into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        let mut pv = RMat::zeros(n, k);
        for col in 0..k {
            let vcol: Vec<f64> = (0..n).map(|i| s.vectors[(i, col)]).collect();
            let f = GridFunction::from_real(self.grid, &vcol)?;
            let out = f.apply_multiplier(&p2);
            for i in 0..n {
                pv[(i, col)] = out.values()[i].re;
            }
        }
        let window = s.vectors.as_ref().submatrix(0, 0, n, k);
        let gram = window.transpose() * &pv;
        let sym = Mat::from_fn(k, k, |i, j| 0.5 * (gram[(i, j)] + gram[(j, i)]));
        let top = eigvalsh_real(&sym).last().copied().unwrap_or(0.0);
        Ok(top.max(0.0).sqrt())
    }

    /// `‖1_{|x|≥R} e^{-itT} g_E(T) 1_{|x|≤r}‖`, distances measured from the origin.
    pub fn propagation_norm(&self, cutoff: &EnergyCutoff, r: f64, big_r: f64, t: f64) -> Result<f64> {
        if !(big_r > r && r > 0.0) {
            return Err(Error::Parameter(format!("need R > r > 0, got r = {r}, R = {big_r}")));
        }
        let s = self.spectrum()?;
        let origin = [0.0, 0.0];
        let dist = self.grid.distances_to(&origin[..self.grid.dim()]);
        let rows: Vec<usize> = (0..dist.len()).filter(|&i| dist[i] >= big_r).collect();
        let cols: Vec<usize> = (0..dist.len()).filter(|&i| dist[i] <= r).collect();
        if rows.is_empty() {
            return Err(Error::Parameter(format!("R = {big_r} exceeds the box")));
        }
        if cols.is_empty() {
            return Ok(0.0);
        }
        let modes: Vec<usize> = (0..s.values.len()).filter(|&m| cutoff.value(s.values[m]) != 0.0).collect();
        let weights: Vec<Complex64> =
            modes.iter().map(|&m| Complex64::from_polar(cutoff.value(s.values[m]), -s.values[m] * t)).collect();
        let k = modes.len();
        if k == s.values.len() && weights.iter().all(|w| *w == weights[0]) {
            // scalar multiple of the identity between disjoint regions
            return Ok(0.0);
        }
        // B = diag(w) V_w^T restricted to the inner columns; A = V_w restricted to the outer rows
        let inner = Mat::from_fn(k, cols.len(), |a, j| s.vectors[(cols[j], modes[a])]);
        let outer = Mat::from_fn(rows.len(), k, |i, a| s.vectors[(rows[i], modes[a])]);
        let wre: Vec<f64> = weights.iter().map(|w| w.re).collect();
        let wim: Vec<f64> = weights.iter().map(|w| w.im).collect();
        let scale_rows = |w: &[f64]| Mat::from_fn(k, cols.len(), |a, j| w[a] * inner[(a, j)]);
        let m_re = &outer * scale_rows(&wre);
        let m_im = &outer * scale_rows(&wim);
        let (nr, nc) = (rows.len(), cols.len());
        if nc <= 512 {
            // Gram matrix of the complex block through its real embedding
            let emb = Mat::from_fn(2 * nr, 2 * nc, |i, j| {
                let (ri, ii) = (i % nr, i / nr);
                let (cj, jj) = (j % nc, j / nc);
                match (ii, jj) {
                    (0, 0) | (1, 1) => m_re[(ri, cj)],
                    (0, 1) => -m_im[(ri, cj)],
                    _ => m_im[(ri, cj)],
                }
            });
            let gram = emb.transpose() * &emb;
            let top = eigvalsh_real(&gram).last().copied().unwrap_or(0.0);
            return Ok(top.max(0.0).sqrt());
        }
        Ok(power_norm(
            nc,
            |x| {
                (0..nr)
                    .map(|i| (0..nc).map(|j| Complex64::new(m_re[(i, j)], m_im[(i, j)]) * x[j]).sum())
                    .collect()
            },
            |y| {
                (0..nc)
                    .map(|j| (0..nr).map(|i| Complex64::new(m_re[(i, j)], -m_im[(i, j)]) * y[i]).sum())
                    .collect()
            },
            200,
            1e-8,
        ))
    }
}

/// Inverse FFT of a real, even symbol: the first row of the circulant matrix.
fn circulant_kernel(grid: &Grid, symbol: &[f64]) -> Vec<f64> {
    let mut buf: Vec<Complex64> = symbol.iter().map(|&s| Complex64::new(s, 0.0)).collect();
    grid.fft().inverse(&mut buf);
    buf.into_iter().map(|z| z.re).collect()
}

/// Operator `Σ w_i |v_i⟩⟨v_i|` diagonal in the eigenbasis of a [`OneBodyOperator`].
#[derive(Debug, Clone)]
pub struct SpectralOperator<'a> {
    op: &'a OneBodyOperator,
    weights: Vec<Complex64>,
}

impl SpectralOperator<'_> {
    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        self.op.check(f)?;
        let mut c = self.op.to_eigenbasis(f)?;
        c.iter_mut().zip(&self.weights).for_each(|(z, w)| *z *= w);
        self.op.from_eigenbasis(&c)
    }
}

/// Smooth energy window `g_E(x) = ξ((x−E)/((α−1)E))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyCutoff {
    energy: f64,
    alpha: f64,
}

impl EnergyCutoff {
    pub fn new(energy: f64, alpha: f64) -> Result<Self> {
        if !(energy > 0.0) {
            return Err(Error::Parameter(format!("cutoff energy must be positive, got {energy}")));
        }
        if !(alpha > 1.0) {
            return Err(Error::Parameter(format!("alpha must exceed 1, got {alpha}")));
        }
        Ok(Self { energy, alpha })
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Width `(α−1)E` of the transition region.
    pub fn width(&self) -> f64 {
        (self.alpha - 1.0) * self.energy
    }

    pub fn value(&self, x: f64) -> f64 {
        smooth_step_jet((x - self.energy) / self.width(), 0).value()
    }

    /// `g_E^{(k)}(x)` for `k = 0..=order`.
    pub fn derivatives(&self, x: f64, order: usize) -> Vec<f64> {
        let w = self.width();
        smooth_step_jet((x - self.energy) / w, order)
            .derivatives()
            .into_iter()
            .enumerate()
            .map(|(k, d)| d / w.powi(k as i32))
            .collect()
    }
}

/// A normalized probe function tagged with its distance label.
#[derive(Debug, Clone)]
pub struct Probe {
    pub distance: f64,
    pub f: GridFunction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub t: f64,
    pub distance: f64,
    pub lhs_overlap: f64,
    pub lhs_diff_overlap: f64,
    pub rhs_envelope: f64,
    /// `lhs_overlap² / (⟨t⟩^{1+2δ} · rhs_envelope)`: the implied one-body constant.
    pub ratio: f64,
}

/// `|⟨f, e^{-itT}φ_x⟩|` and `|⟨f, (e^{-itT} − 1)φ_x⟩|` for every probe and time.
pub fn overlap_scan(
    op: &OneBodyOperator,
    phi_x: &GridFunction,
    x: &[f64],
    probes: &[Probe],
    times: &[f64],
    n: i64,
    delta: f64,
) -> Result<Vec<ScanRow>> {
    for p in probes {
        if (p.f.l2_norm() - 1.0).abs() > 1e-8 {
            return Err(Error::Parameter(format!("probe at distance {} is not normalized", p.distance)));
        }
    }
    let mut rows = Vec::with_capacity(probes.len() * times.len());
    for &t in times {
        let psi = op.propagate(phi_x, t, Method::Spectral)?;
        let diff = psi.sub(phi_x)?;
        for p in probes {
            let lhs = p.f.inner(&psi)?.norm();
            let lhs_diff = if t == 0.0 { 0.0 } else { p.f.inner(&diff)?.norm() };
            let rhs = onebody_envelope(&p.f, x, n, t)?;
            let scale = jbracket(t).powf(1.0 + 2.0 * delta) * rhs;
            rows.push(ScanRow {
                t,
                distance: p.distance,
                lhs_overlap: lhs,
                lhs_diff_overlap: lhs_diff,
                rhs_envelope: rhs,
                ratio: if scale > 0.0 { lhs * lhs / scale } else { 0.0 },
            });
        }
    }
    Ok(rows)
}

/// Radius `⟨t⟩^{1+(1+2δ)/n}` of the almost-linear light cone.
pub fn light_cone_radius(t: f64, n: i64, delta: f64) -> f64 {
    jbracket(t).powf(1.0 + (1.0 + 2.0 * delta) / n as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LightConeFit {
    pub t: f64,
    /// `(R, |⟨f_R, e^{-itT}φ_x⟩|²)` samples, log-spaced over one decade.
    pub samples: Vec<(f64, f64)>,
    /// Least-squares slope of `ln value` against `ln R`; values under
    /// [`OVERLAP_FLOOR`] are clamped to it.
    pub slope: f64,
}

/// Fits the log–log decay of `|⟨f_R, e^{-itT}φ_x⟩|²` over `R ∈ [R₀, 10R₀]`,
/// `R₀ = 2⟨t⟩^{1+(1+2δ)/n}`, with `f_R` the normalized unit shell at distance `R`.
pub fn light_cone_slope(
    op: &OneBodyOperator,
    phi_x: &GridFunction,
    x: &[f64],
    t: f64,
    n: i64,
    delta: f64,
    points: usize,
) -> Result<LightConeFit> {
    if points < 3 {
        return Err(Error::Parameter("slope fit needs at least 3 distances".into()));
    }
    let r0 = 2.0 * light_cone_radius(t, n, delta);
    if 10.0 * r0 + 1.0 >= 0.5 * op.grid().length() {
        return Err(Error::Parameter(format!("box too small for a decade beyond R0 = {r0}")));
    }
    let psi = op.propagate(phi_x, t, Method::Spectral)?;
    let mut samples = Vec::with_capacity(points);
    for i in 0..points {
        let r = r0 * 10f64.powf(i as f64 / (points - 1) as f64);
        let probe = GridFunction::shell_indicator(*op.grid(), x, r, r + 1.0);
        samples.push((r, probe.inner(&psi)?.norm_sqr()));
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.max(OVERLAP_FLOOR).ln()).collect();
    Ok(LightConeFit { t, samples, slope: least_squares_slope(&xs, &ys) })
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
