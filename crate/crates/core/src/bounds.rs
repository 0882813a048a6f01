// Copyright 2026 Lightcone Lab Contributors
// SPDX-License-Identifier: Apache-2.0

//! Analytic side of the light-cone estimates: decay envelopes integrated
//! against densities, the interaction kernel `K_t`, the iterated series
//! bounds and their resummation `Ξ_mb`, and the weighted smooth-function
//! norms used for energy cutoffs.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{envelope_unchecked, jbracket, periodic_convolve, Grid, GridFunction, SmearingFunction};
use crate::jet::smooth_step_jet;
use crate::onebody::{EnergyCutoff, Method, OneBodyOperator};
use crate::quadrature::{integrate, integrate_lower, integrate_upper, ABS_TOL, REL_TOL};

/// Largest index accepted by [`series_terms`].
pub const SERIES_KMAX: usize = 40;

/// Constants entering the one-body and many-body estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub n: i64,
    pub delta: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub n_v: i64,
    pub n_w: i64,
    pub c_w: f64,
    pub w_l1: f64,
    pub c_ob0: f64,
    pub c_ob1: f64,
    pub c_nw: f64,
    pub c_phi: f64,
    pub c_mb1: f64,
    pub c_mb2: f64,
}

impl Default for BoundParams {
    fn default() -> Self {
        let (c_mb1, c_mb2) = resummation_constants(1.0, 1.0, 1.0, 1.0);
        Self {
            n: 2,
            delta: 0.5,
            sigma: 1.0,
            alpha: 2.0,
            n_v: 4,
            n_w: 2,
            c_w: 1.0,
            w_l1: 1.0,
            c_ob0: 1.0,
            c_ob1: 1.0,
            c_nw: 1.0,
            c_phi: 1.0,
            c_mb1,
            c_mb2,
        }
    }
}

impl BoundParams {
    /// Every violated hypothesis, as human-readable messages.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.n < 1 {
            out.push(format!("n = {} must be at least 1", self.n));
        }
        if 2 * self.n > self.n_v {
            out.push(format!("n ≤ n_V/2 violated: n = {}, n_V = {}", self.n, self.n_v));
        }
        if self.n > self.n_w {
            out.push(format!("n ≤ n_W violated: n = {}, n_W = {}", self.n, self.n_w));
        }
        if !(self.alpha > 1.0) {
            out.push(format!("alpha = {} must exceed 1", self.alpha));
        }
        let positive = [
            ("delta", self.delta),
            ("sigma", self.sigma),
            ("c_W", self.c_w),
            ("|W|_1", self.w_l1),
            ("C_ob0", self.c_ob0),
            ("C_ob1", self.c_ob1),
            ("C_nW", self.c_nw),
            ("C_phi", self.c_phi),
            ("C_mb1", self.c_mb1),
            ("C_mb2", self.c_mb2),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                out.push(format!("{name} = {v} must be positive and finite"));
            }
        }
        out
    }

    pub fn validated(self) -> Result<Self> {
        let v = self.violations();
        if v.is_empty() {
            Ok(self)
        } else {
            Err(Error::Hypothesis(v.join("; ")))
        }
    }

    /// Replaces `C_mb1`, `C_mb2` by the values obtained from resumming the series bounds.
    pub fn with_resummed(mut self, phi_norm: f64) -> Self {
        let (a, b) = resummation_constants(self.c_ob0, self.c_nw, self.c_phi, phi_norm);
        self.c_mb1 = a;
        self.c_mb2 = b;
        self
    }
}

/// `(C_mb1, C_mb2)` such that `Σ_{k≥1} S_k ≤ Ξ_mb(t) ∫|f|²(G∗|g|²)`, using
/// `2^{k-1}(k-1)! ≤ 1·3···(2k−1)`.
pub fn resummation_constants(c_ob0: f64, c_nw: f64, c_phi: f64, phi_norm: f64) -> (f64, f64) {
    let p4 = phi_norm.powi(4);
    (2.0 * c_ob0 * c_ob0 * c_nw * p4, c_ob0 * c_nw * c_phi * p4)
}

/// `G_{n,t}(|y|)` sampled on the grid, centered at the origin.
pub fn envelope_function(grid: Grid, n: i64, t: f64) -> Result<GridFunction> {
    check_exponent(n)?;
    let origin = [0.0, 0.0];
    let d = grid.distances_to(&origin[..grid.dim()]);
    let v: Vec<f64> = d.iter().map(|&r| envelope_unchecked(n as i32, t, r)).collect();
    GridFunction::from_real(grid, &v)
}

fn check_exponent(n: i64) -> Result<()> {
    if n <= 0 {
        return Err(Error::Parameter(format!("decay exponent must be positive, got {n}")));
    }
    Ok(())
}

/// `∫ G_{n,t}(x−y)|f(y)|² dy`, the one-body right-hand side.
pub fn onebody_envelope(f: &GridFunction, x: &[f64], n: i64, t: f64) -> Result<f64> {
    check_exponent(n)?;
    let grid = f.grid();
    let dist = grid.distances_to(x);
    let s: f64 = f
        .values()
        .iter()
        .zip(&dist)
        .map(|(v, &r)| envelope_unchecked(n as i32, t, r) * v.norm_sqr())
        .sum();
    Ok(s * grid.cell_volume())
}

/// `∫∫ G_{n,t}(x−y)|f(x)|²|g(y)|² d(x,y)` as a direct double Riemann sum.
pub fn rhs_envelope(f: &GridFunction, g: &GridFunction, n: i64, t: f64) -> Result<f64> {
    check_exponent(n)?;
    f.check_grid(g)?;
    let grid = *f.grid();
    let fw: Vec<f64> = f.values().iter().map(|v| v.norm_sqr()).collect();
    let gw: Vec<f64> = g.values().iter().map(|v| v.norm_sqr()).collect();
    let fi: Vec<usize> = (0..fw.len()).filter(|&i| fw[i] != 0.0).collect();
    let gi: Vec<usize> = (0..gw.len()).filter(|&i| gw[i] != 0.0).collect();
    let mut s = 0.0;
    for &i in &fi {
        let xi = grid.point(i);
        let mut inner = 0.0;
        for &j in &gi {
            let r = grid.distance(&xi[..grid.dim()], &grid.point(j)[..grid.dim()]);
            inner += envelope_unchecked(n as i32, t, r) * gw[j];
        }
        s += fw[i] * inner;
    }
    let h = grid.cell_volume();
    Ok(s * h * h)
}

/// Same quantity as [`rhs_envelope`], through `⟨|f|², G_{n,t} ∗ |g|²⟩`.
pub fn rhs_envelope_convolved(f: &GridFunction, g: &GridFunction, n: i64, t: f64) -> Result<f64> {
    f.check_grid(g)?;
    let env = envelope_function(*f.grid(), n, t)?;
    let conv = periodic_convolve(&env, &g.abs_squared())?;
    let s: f64 = f.values().iter().zip(conv.values()).map(|(a, c)| a.norm_sqr() * c.re).sum();
    Ok(s * f.grid().cell_volume())
}

/// Pair interaction `W` sampled as a function of the displacement from the origin.
#[derive(Debug, Clone)]
pub struct InteractionSpec {
    profile: GridFunction,
    c_w: f64,
    n_w: i64,
    /// Region `Λ`; `None` means the whole box.
    lambda: Option<Vec<bool>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InteractionProfile {
    Zero,
    /// `strength · exp(−r²/2·range²)`.
    Gaussian { strength: f64, range: f64 },
    /// `strength · (1 ∧ 1/r)^exponent`.
    Power { strength: f64, exponent: i64 },
}

impl InteractionProfile {
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Gaussian { strength, range } => strength * (-r * r / (2.0 * range * range)).exp(),
            Self::Power { strength, exponent } => strength * (1.0f64).min(1.0 / r).powi(exponent as i32),
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            Self::Zero => true,
            Self::Gaussian { strength, .. } | Self::Power { strength, .. } => strength == 0.0,
        }
    }

    pub fn sample(&self, grid: Grid) -> GridFunction {
        let origin = [0.0, 0.0];
        let d = grid.distances_to(&origin[..grid.dim()]);
        let v: Vec<f64> = d.iter().map(|&r| self.value(r)).collect();
        GridFunction::from_real(grid, &v).expect("length matches grid")
    }
}

impl InteractionSpec {
    /// Checks `W(y) = W(−y)` and `|W(y)| ≤ c_W (1 ∧ 1/|y|)^{n_W}` on every sample.
    pub fn new(profile: GridFunction, c_w: f64, n_w: i64) -> Result<Self> {
        if n_w < 1 {
            return Err(Error::Hypothesis(format!("n_W = {n_w} must be at least 1")));
        }
        let scale = profile.sup_norm().max(f64::MIN_POSITIVE);
        let refl = profile.reflected();
        for (a, b) in profile.values().iter().zip(refl.values()) {
            if (a - b).norm() > 1e-12 * scale {
                return Err(Error::Hypothesis("interaction profile is not even".into()));
            }
        }
        let grid = *profile.grid();
        let origin = [0.0, 0.0];
        let d = grid.distances_to(&origin[..grid.dim()]);
        for (v, &r) in profile.values().iter().zip(&d) {
            let env = c_w * (1.0f64).min(1.0 / r).powi(n_w as i32);
            if v.norm() > env * (1.0 + 1e-12) {
                return Err(Error::Hypothesis(format!(
                    "|W| = {} exceeds c_W (1 ∧ 1/|y|)^n_W = {env} at |y| = {r}",
                    v.norm()
                )));
            }
        }
        Ok(Self { profile, c_w, n_w, lambda: None })
    }

    /// Samples `profile` and fits the smallest `c_W` for the given `n_W`.
    pub fn from_profile(grid: Grid, profile: &InteractionProfile, n_w: i64) -> Result<Self> {
        let w = profile.sample(grid);
        let c_w = fit_decay_constant(&w, n_w).max(f64::MIN_POSITIVE);
        Self::new(w, c_w, n_w)
    }

    pub fn with_region(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.profile.grid().len() {
            return Err(Error::Shape("region mask length differs from grid".into()));
        }
        self.lambda = Some(mask);
        Ok(self)
    }

    pub fn profile(&self) -> &GridFunction {
        &self.profile
    }

    pub fn c_w(&self) -> f64 {
        self.c_w
    }

    pub fn n_w(&self) -> i64 {
        self.n_w
    }

    pub fn region(&self) -> Option<&[bool]> {
        self.lambda.as_deref()
    }

    pub fn l1_norm(&self) -> f64 {
        self.profile.l1_norm()
    }
}

/// Smallest `c` with `|W(y)| ≤ c (1 ∧ 1/|y|)^{n}` on the samples.
pub fn fit_decay_constant(w: &GridFunction, n: i64) -> f64 {
    let grid = w.grid();
    let origin = [0.0, 0.0];
    let d = grid.distances_to(&origin[..grid.dim()]);
    w.values()
        .iter()
        .zip(&d)
        .map(|(v, &r)| v.norm() / (1.0f64).min(1.0 / r).powi(n as i32))
        .fold(0.0, f64::max)
}

/// `y ↦ |⟨e^{-itT}f, φ_y⟩|` on every grid point.
pub fn overlap_field(op: &OneBodyOperator, f: &GridFunction, phi: &SmearingFunction, t: f64) -> Result<GridFunction> {
    let psi = op.propagate(f, t, Method::Spectral)?;
    let profile = phi.profile(*op.grid())?;
    // ⟨ψ, φ_y⟩ = Σ_z conj ψ(z) φ(z − y) h^d = (conj ψ ∗ φ(−·))(y)
    let field = periodic_convolve(&psi.conj(), &profile.reflected())?;
    Ok(field.map(|z| Complex64::new(z.norm(), 0.0)))
}

/// `K_t(f, x) = ‖W‖₁|⟨e^{-itT}f, φ_x⟩| + (|W| ∗ |⟨e^{-itT}f, φ_•⟩|)(x)` on the grid.
pub fn kernel_kt(
    op: &OneBodyOperator,
    f: &GridFunction,
    w: &InteractionSpec,
    phi: &SmearingFunction,
    t: f64,
) -> Result<GridFunction> {
    let field = overlap_field(op, f, phi, t)?;
    let absw = w.profile().map(|z| Complex64::new(z.norm(), 0.0));
    let conv = periodic_convolve(&absw, &field)?;
    field.scaled(Complex64::new(w.l1_norm(), 0.0)).add(&conv)
}

/// `Ξ_mb(t) = C_mb1 |t| ⟨t⟩^{2(1+2δ+d)} exp(C_mb2 ⟨t⟩^{1+2δ+3d} t²)`.
/// Overflow saturates to `+∞`, meaning the bound is vacuous at that time.
pub fn xi_mb(t: f64, params: &BoundParams, d: usize) -> f64 {
    let jt = jbracket(t);
    let d = d as f64;
    let delta = params.delta;
    let log = params.c_mb1.ln()
        + t.abs().ln()
        + 2.0 * (1.0 + 2.0 * delta + d) * jt.ln()
        + params.c_mb2 * jt.powf(1.0 + 2.0 * delta + 3.0 * d) * t * t;
    if t == 0.0 {
        return 0.0;
    }
    let v = log.exp();
    if !v.is_finite() {
        log::warn!("Ξ_mb overflows at t = {t}; the many-body bound is vacuous there");
        return f64::INFINITY;
    }
    v
}

/// Upper bounds on the series terms for one `(f, g, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesTerms {
    pub t: f64,
    /// `S_1 … S_kmax` (index 0 holds `S_1`).
    pub main: Vec<f64>,
    /// `R_1 … R_kmax`.
    pub remainder: Vec<f64>,
    /// First `k` from which the main-term ratio stays below one, if reached.
    pub k_star: Option<usize>,
    /// `∫|f|²(G∗|g|²)`.
    pub envelope: f64,
}

fn ln_odd_double_factorial(k: usize) -> f64 {
    // 1·3···(2k−1)
    (1..=k).map(|j| ((2 * j - 1) as f64).ln()).sum()
}

/// Evaluates the displayed upper bounds for `S_k` and `R_N`, `1 ≤ k, N ≤ k_max`.
pub fn series_terms(
    k_max: usize,
    t: f64,
    params: &BoundParams,
    phi_norm: f64,
    f: &GridFunction,
    g: &GridFunction,
) -> Result<SeriesTerms> {
    if k_max == 0 || k_max > SERIES_KMAX {
        return Err(Error::Parameter(format!("k_max must lie in 1..={SERIES_KMAX}, got {k_max}")));
    }
    let grid = *f.grid();
    let d = grid.dim() as f64;
    let envelope = rhs_envelope_convolved(f, g, params.n, t)?;
    // ∫ (G ∗ |f|²) = ‖f‖² ∫ G over the box
    let env_mass = envelope_function(grid, params.n, t)?.integral().re;
    let remainder_integral = env_mass * f.l2_norm().powi(2);
    let g2 = g.l2_norm().powi(2);
    let jt = jbracket(t);
    let at = t.abs();
    let (c0, cn, cp, delta) = (params.c_ob0, params.c_nw, params.c_phi, params.delta);
    let mut main = Vec::with_capacity(k_max);
    let mut remainder = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let kf = k as f64;
        if at == 0.0 {
            main.push(0.0);
            remainder.push(0.0);
            continue;
        }
        let ln_s = (kf + 1.0) * c0.ln()
            + kf * cn.ln()
            + (kf - 1.0) * cp.ln()
            + 4.0 * kf * phi_norm.ln()
            + kf * 2f64.ln()
            + ((1.0 + 2.0 * delta) * (kf + 1.0) + d * (3.0 * kf - 1.0)) * jt.ln()
            + (2.0 * kf - 1.0) * at.ln()
            - ln_odd_double_factorial(k);
        main.push(ln_s.exp() * envelope);
        let ln_r = 36f64.ln()
            + (kf + 1.0) * (cn * c0).ln()
            + (kf - 1.0) * cp.ln()
            + 4.0 * kf * phi_norm.ln()
            + kf * 2f64.ln()
            + ((1.0 + delta) * (kf + 1.0) + d * (2.0 * kf - 1.0)) * jt.ln()
            + (2.0 * kf - 1.0) * at.ln()
            - ln_odd_double_factorial(k);
        remainder.push(ln_r.exp() * g2 * remainder_integral);
    }
    let k_star = (0..main.len().saturating_sub(1))
        .find(|&i| (i..main.len() - 1).all(|j| main[j + 1] < main[j] || main[j] == 0.0))
        .map(|i| i + 1);
    if k_star.is_none() {
        log::warn!("series terms at t = {t} do not start decreasing before k = {k_max}");
    }
    Ok(SeriesTerms { t, main, remainder, k_star, envelope })
}

/// Sup norms `‖ξ^{(k)}‖_∞`, `k = 0..=order`, of the smooth step.
pub fn smooth_step_sup_norms(order: usize) -> Vec<f64> {
    const SAMPLES: usize = 4000;
    let abs_k = |x: f64, k: usize| smooth_step_jet(x, k).derivatives()[k].abs();
    let mut out = vec![0.0; order + 1];
    let grid: Vec<f64> = (1..SAMPLES).map(|i| i as f64 / SAMPLES as f64).collect();
    let all: Vec<Vec<f64>> = grid.iter().map(|&x| smooth_step_jet(x, order).derivatives()).collect();
    for k in 0..=order {
        let vals: Vec<f64> = all.iter().map(|d| d[k].abs()).collect();
        let mut best = vals.iter().cloned().fold(0.0, f64::max);
        // refine every local maximum by golden-section search
        for i in 1..vals.len() - 1 {
            if vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1] && vals[i] > 0.5 * best {
                let (mut a, mut b) = (grid[i - 1], grid[i + 1]);
                let r = 0.5 * (5f64.sqrt() - 1.0);
                for _ in 0..60 {
                    let c = b - r * (b - a);
                    let e = a + r * (b - a);
                    if abs_k(c, k) > abs_k(e, k) {
                        b = e;
                    } else {
                        a = c;
                    }
                }
                best = best.max(abs_k(0.5 * (a + b), k));
            }
        }
        out[k] = best;
    }
    out[0] = out[0].max(1.0);
    out
}

/// `ι_k = ∫⟨x⟩^{−k−1} dx`.
pub fn iota(k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::Divergence(format!("ι_k diverges for k = {k} ≤ 0")));
    }
    let head = integrate(|x| (1.0 + x * x).powf(-(k + 1.0) / 2.0), 0.0, 1.0, 1e-13, 1e-15)?;
    // x = v^{-1/k} turns the tail into (1/k)∫₀¹ (1 + v^{2/k})^{-(k+1)/2} dv
    let tail = integrate(|v| (1.0 + v.powf(2.0 / k)).powf(-(k + 1.0) / 2.0) / k, 0.0, 1.0, 1e-13, 1e-15)?;
    // even integrand: twice the half line
    Ok(2.0 * (head.value + tail.value))
}

/// A smooth function given through its derivatives, with the finite points
/// where the derivative tables change character (support edges).
pub struct SmoothProfile<'a> {
    /// `(x, order) ↦ [f(x), f'(x), …, f^{(order)}(x)]`.
    pub derivatives: &'a dyn Fn(f64, usize) -> Vec<f64>,
    pub breakpoints: Vec<f64>,
}

/// `‖f‖_{n,p} = Σ_{k=0}^{n+2} ∫⟨x⟩^{k−p−1}|f^{(k)}(x)| dx`.
pub fn norm_np(f: &SmoothProfile<'_>, n: usize, p: f64) -> Result<f64> {
    let order = n + 2;
    let mut breaks = f.breakpoints.clone();
    breaks.sort_by(f64::total_cmp);
    if breaks.is_empty() {
        breaks.push(0.0);
    }
    let (lo, hi) = (breaks[0], *breaks.last().expect("non-empty"));
    let mut total = 0.0;
    for k in 0..=order {
        let w = k as f64 - p - 1.0;
        let integrand = |x: f64| (1.0 + x * x).powf(w / 2.0) * (f.derivatives)(x, order)[k].abs();
        // a tail that does not vanish needs ⟨x⟩^{k−p−1} integrable
        for far in [lo - 1e6, hi + 1e6] {
            if (f.derivatives)(far, order)[k].abs() > 0.0 && w >= -1.0 {
                return Err(Error::Divergence(format!(
                    "term k = {k} of the (n, p) = ({n}, {p}) norm is not integrable"
                )));
            }
        }
        total += integrate_lower(integrand, lo, REL_TOL, ABS_TOL)?.value;
        for pair in breaks.windows(2) {
            total += integrate(integrand, pair[0], pair[1], REL_TOL, ABS_TOL)?.value;
        }
        total += integrate_upper(integrand, hi, REL_TOL, ABS_TOL)?.value;
    }
    Ok(total)
}

/// `‖g_E‖_{n,p}` for the smooth energy cutoff.
pub fn cutoff_norm_np(cutoff: &EnergyCutoff, n: usize, p: f64) -> Result<f64> {
    let deriv = |x: f64, order: usize| cutoff.derivatives(x, order);
    let e = cutoff.energy();
    let profile = SmoothProfile { derivatives: &deriv, breakpoints: vec![e, cutoff.alpha() * e] };
    norm_np(&profile, n, p)
}

/// Right-hand side of the `g_E` norm estimate, given `sup[k] = ‖ξ^{(k)}‖_∞` for `k ≤ n+2`.
pub fn corg_e_bound(sup: &[f64], alpha: f64, energy: f64, n: usize, p: f64) -> Result<f64> {
    if sup.len() < n + 3 {
        return Err(Error::Parameter(format!("need {} derivative sup norms, got {}", n + 3, sup.len())));
    }
    if !(alpha > 1.0 && energy > 0.0 && p > 0.0) {
        return Err(Error::Parameter("need alpha > 1, E > 0 and p > 0".into()));
    }
    let ceil_p = p.ceil() as usize;
    let width = (alpha - 1.0) * energy;
    let mut s = iota(p)? * sup[0];
    for (k, &sk) in sup.iter().enumerate().take(ceil_p.min(n + 2) + 1).skip(1) {
        s += sk / width.powi(k as i32 - 1);
    }
    let je = jbracket(energy);
    for (k, &sk) in sup.iter().enumerate().take(n + 3).skip(ceil_p + 1) {
        let kf = k as f64;
        s += (alpha / (alpha - 1.0)).powf(kf - 1.0) * je.powf(kf - p - 1.0) / energy.powf(kf - 1.0) * sk;
    }
    Ok(s)
}

/// `c (1 ∨ a|x|)^{−e}` decay envelope for the convolution lemma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyDecay {
    pub c: f64,
    pub exponent: f64,
    pub scale: f64,
}

impl PolyDecay {
    pub fn value(&self, r: f64) -> f64 {
        self.c * (1.0f64).max(self.scale * r).powf(-self.exponent)
    }

    /// `∫_{ℝ^d} (1 ∨ a|y|)^{−e} dy`.
    pub fn mass(&self, d: usize) -> f64 {
        let (ball, sphere) = if d == 1 { (2.0, 2.0) } else { (PI, 2.0 * PI) };
        (ball + sphere / (self.exponent - d as f64)) / self.scale.powi(d as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionCheck {
    /// Smallest `c` making the lemma's inequality hold on the samples.
    pub fitted: f64,
    pub cap: f64,
    pub passed: bool,
    pub value_at_zero: f64,
    /// `c_f c_g · min(mass of f-envelope, mass of g-envelope)`.
    pub zero_bound: f64,
    /// `max |(f∗g)(x) − (f∗g)(−x)|`.
    pub asymmetry: f64,
}

/// Convolves the two envelopes on `grid` and fits the lemma's constant over `|x| ≤ L/4`.
pub fn convolution_decay_check(grid: Grid, f: PolyDecay, g: PolyDecay, cap: f64) -> Result<ConvolutionCheck> {
    let d = grid.dim() as f64;
    if f.exponent <= d || g.exponent <= d {
        return Err(Error::Hypothesis(format!(
            "decay exponents must exceed d = {d}; got {} and {}",
            f.exponent, g.exponent
        )));
    }
    let origin = [0.0, 0.0];
    let dist = grid.distances_to(&origin[..grid.dim()]);
    let fs = GridFunction::from_real(grid, &dist.iter().map(|&r| f.value(r)).collect::<Vec<_>>())?;
    let gs = GridFunction::from_real(grid, &dist.iter().map(|&r| g.value(r)).collect::<Vec<_>>())?;
    let conv = periodic_convolve(&fs, &gs)?;
    let ab = f.scale.min(g.scale);
    let e = f.exponent.min(g.exponent);
    let pref = f.c * g.c * ab.powf(-d);
    let mut fitted: f64 = 0.0;
    let mut value_at_zero = 0.0;
    for (i, &r) in dist.iter().enumerate() {
        if r > grid.length() / 4.0 {
            continue;
        }
        let v = conv.values()[i].norm();
        if r == 0.0 {
            value_at_zero = v;
        }
        fitted = fitted.max(v / (pref * (1.0f64).max(ab * r).powf(-e)));
    }
    let refl = conv.reflected();
    let asymmetry = conv.values().iter().zip(refl.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let zero_bound = f.c * g.c * f.mass(grid.dim()).min(g.mass(grid.dim()));
    Ok(ConvolutionCheck { fitted, cap, passed: fitted.is_finite() && fitted <= cap, value_at_zero, zero_bound, asymmetry })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralLemmaRow {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// `∫₀^t ⟨t−s⟩^α ⟨s⟩^β s^k ds` against `⟨t⟩^{α+β} t^{k+1}/(k+1)` for each `t`.
pub fn integral_lemma_check(alpha: f64, beta: f64, k: u32, times: &[f64]) -> Result<(bool, Vec<IntegralLemmaRow>)> {
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::Parameter(format!("need alpha, beta > 0, got {alpha}, {beta}")));
    }
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        if !(t >= 0.0) {
            return Err(Error::Parameter(format!("times must be non-negative, got {t}")));
        }
        let lhs = integrate(
            |s| jbracket(t - s).powf(alpha) * jbracket(s).powf(beta) * s.powi(k as i32),
            0.0,
            t,
            1e-12,
            0.0,
        )?
        .value;
        let rhs = jbracket(t).powf(alpha + beta) * t.powi(k as i32 + 1) / (k as f64 + 1.0);
        rows.push(IntegralLemmaRow { t, lhs, rhs });
    }
    let ok = rows.iter().all(|r| r.lhs <= r.rhs * (1.0 + 1e-12));
    Ok((ok, rows))
}

/// One entry of the constants report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantReport {
    pub name: String,
    pub fitted_value: f64,
    pub sweep_range: [f64; 2],
    pub max_ratio: f64,
}

/// Smallest `C_n` with `(|W| ∗ G_{n,t})(x) ≤ C_n c_W ⟨t⟩^d G_{n,t}(x)` over `|x| ≤ L/4` and `times`.
pub fn fit_convolution_constant(w: &InteractionSpec, n: i64, times: &[f64]) -> Result<f64> {
    let grid = *w.profile().grid();
    let absw = w.profile().map(|z| Complex64::new(z.norm(), 0.0));
    let dist = grid.distances_to(&[0.0, 0.0][..grid.dim()]);
    let mut fitted: f64 = 0.0;
    for &t in times {
        let env = envelope_function(grid, n, t)?;
        let conv = periodic_convolve(&absw, &env)?;
        let scale = w.c_w() * jbracket(t).powi(grid.dim() as i32);
        for (i, &r) in dist.iter().enumerate() {
            if r <= grid.length() / 4.0 {
                fitted = fitted.max(conv.values()[i].norm() / (scale * env.values()[i].re));
            }
        }
    }
    Ok(fitted)
}

/// `C_{n,W} = 2(‖W‖₁² + c_W ‖W‖₁ C_n)`.
pub fn kernel_prefactor(w: &InteractionSpec, c_n: f64) -> f64 {
    let l1 = w.l1_norm();
    2.0 * (l1 * l1 + w.c_w() * l1 * c_n)
}

/// Constants of the one-body and many-body bounds fitted on one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedConstants {
    pub c_w: f64,
    pub n_w: i64,
    pub w_l1: f64,
    pub c_ob0: f64,
    pub c_ob1: f64,
    pub c_n: f64,
    pub c_nw: f64,
    pub c_phi: f64,
    pub phi_norm: f64,
    pub c_mb1: f64,
    pub c_mb2: f64,
    pub reports: Vec<ConstantReport>,
}

impl FittedConstants {
    pub fn bound_params(&self, n: i64, delta: f64) -> BoundParams {
        BoundParams {
            n,
            delta,
            n_w: self.n_w,
            c_w: self.c_w,
            w_l1: self.w_l1,
            c_ob0: self.c_ob0,
            c_ob1: self.c_ob1,
            c_nw: self.c_nw,
            c_phi: self.c_phi,
            c_mb1: self.c_mb1,
            c_mb2: self.c_mb2,
            ..BoundParams::default()
        }
    }
}

/// Fits the one-body constants from `|⟨φ_y, e^{−itT}φ_x⟩|` with `y` at `distances` from `x`,
/// then `C_n`, `C_{n,W}`, `C_φ`, and the resummed many-body constants.
pub fn fit_constants(
    op: &OneBodyOperator,
    w: &InteractionSpec,
    phi: &SmearingFunction,
    n: i64,
    delta: f64,
    times: &[f64],
    distances: &[f64],
) -> Result<FittedConstants> {
    check_exponent(n)?;
    if times.is_empty() || distances.is_empty() {
        return Err(Error::Config("constant fits need non-empty time and distance lists".into()));
    }
    let grid = *op.grid();
    let d = grid.dim();
    let origin = vec![0.0; d];
    let phi_x = phi.at(grid, &origin)?;
    let phi_norm = phi_x.l2_norm();
    let mut c_ob0: f64 = 0.0;
    let mut c_ob1: f64 = 0.0;
    let mut positions = Vec::new();
    for &r in distances {
        let mut y = origin.clone();
        y[0] = r;
        positions.push(y);
    }
    for &t in times {
        let psi = op.propagate(&phi_x, t, Method::Spectral)?;
        let diff = psi.sub(&phi_x)?;
        let jt = jbracket(t).powf(1.0 + 2.0 * delta);
        for y in &positions {
            let f = phi.at(grid, y)?.normalized();
            let env = onebody_envelope(&f, &origin, n, t)?;
            c_ob0 = c_ob0.max(f.inner(&psi)?.norm_sqr() / (jt * env));
            if t != 0.0 {
                c_ob1 = c_ob1.max(f.inner(&diff)?.norm_sqr() / (t * t * jt * env));
            }
        }
    }
    let c_n = fit_convolution_constant(w, n, times)?;
    let c_nw = kernel_prefactor(w, c_n);
    let mut c_phi: f64 = 0.0;
    if c_nw > 0.0 {
        let dist = grid.distances_to(&origin);
        for &t in times {
            let k = kernel_kt(op, &phi_x, w, phi, t)?;
            let scale = phi_norm.powi(4) * c_nw * c_ob0 * jbracket(t).powf(1.0 + 2.0 * delta + 2.0 * d as f64);
            for (i, &r) in dist.iter().enumerate() {
                if r <= grid.length() / 4.0 {
                    c_phi = c_phi.max(k.values()[i].norm_sqr() / (scale * envelope_unchecked(n as i32, t, r)));
                }
            }
        }
    }
    let (c_mb1, c_mb2) = resummation_constants(c_ob0, c_nw, c_phi, phi_norm);
    let range = [times.iter().cloned().fold(f64::INFINITY, f64::min), times.iter().cloned().fold(0.0, f64::max)];
    let report = |name: &str, v: f64| ConstantReport { name: name.into(), fitted_value: v, sweep_range: range, max_ratio: 1.0 };
    let reports = vec![
        report("C_ob0", c_ob0),
        report("C_ob1", c_ob1),
        report("C_n", c_n),
        report("C_nW", c_nw),
        report("C_phi", c_phi),
        report("C_mb1", c_mb1),
        report("C_mb2", c_mb2),
    ];
    Ok(FittedConstants { c_w: w.c_w(), n_w: w.n_w(), w_l1: w.l1_norm(), c_ob0, c_ob1, c_n, c_nw, c_phi, phi_norm, c_mb1, c_mb2, reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_gaussian, Normalization};

    #[test]
    fn params_validation() {
        assert!(BoundParams::default().validated().is_ok());
        let bad = BoundParams { n: 5, n_v: 8, n_w: 6, ..BoundParams::default() };
        let v = bad.violations();
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("n_V/2"));
        let neg = BoundParams { c_ob0: 0.0, ..BoundParams::default() };
        assert!(matches!(neg.validated(), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn xi_is_even_zero_at_origin_and_saturates() {
        let p = BoundParams::default();
        assert_eq!(xi_mb(0.0, &p, 1), 0.0);
        assert_eq!(xi_mb(0.7, &p, 1), xi_mb(-0.7, &p, 1));
        assert_eq!(xi_mb(50.0, &p, 2), f64::INFINITY);
    }

    #[test]
    fn iota_values() {
        assert!((iota(2.0).unwrap() - 2.0).abs() < 1e-10);
        assert!((iota(1.0).unwrap() - PI).abs() < 1e-10);
        assert!(iota(3.0).unwrap() < iota(2.0).unwrap());
        assert!(matches!(iota(0.0), Err(Error::Divergence(_))));
    }

    #[test]
    fn norm_of_constant() {
        let one = |_: f64, order: usize| {
            let mut v = vec![0.0; order + 1];
            v[0] = 1.0;
            v
        };
        let prof = SmoothProfile { derivatives: &one, breakpoints: vec![] };
        assert!((norm_np(&prof, 0, 2.0).unwrap() - 2.0).abs() < 1e-8);
        assert!(matches!(norm_np(&prof, 0, -0.5), Err(Error::Divergence(_))));
        let zero = |_: f64, order: usize| vec![0.0; order + 1];
        let z = SmoothProfile { derivatives: &zero, breakpoints: vec![] };
        assert_eq!(norm_np(&z, 3, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn constant_xi_keeps_only_first_term() {
        let sup = [1.0, 0.0, 0.0, 0.0, 0.0];
        let b = corg_e_bound(&sup, 2.0, 3.0, 2, 1.5).unwrap();
        assert!((b - iota(1.5).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn smooth_step_sups_are_sane() {
        let s = smooth_step_sup_norms(3);
        assert_eq!(s[0], 1.0);
        // ξ'(1/2) is a lower bound on the first sup norm
        let mid = smooth_step_jet(0.5, 1).derivatives()[1].abs();
        assert!(s[1] >= mid && s[1].is_finite());
    }

    #[test]
    fn envelope_paths_agree_and_are_symmetric() {
        let g = Grid::new(1, 128, 64.0).unwrap();
        let f = make_gaussian(g, 1.0, &[-10.0], Normalization::L2).unwrap();
        let h = make_gaussian(g, 1.5, &[12.0], Normalization::L2).unwrap();
        let a = rhs_envelope(&f, &h, 2, 0.5).unwrap();
        let b = rhs_envelope_convolved(&f, &h, 2, 0.5).unwrap();
        let c = rhs_envelope(&h, &f, 2, 0.5).unwrap();
        assert!((a - b).abs() < 1e-10);
        assert!((a - c).abs() < 1e-12);
        assert!(a <= 1.0);
    }

    #[test]
    fn interaction_spec_checks() {
        let g = Grid::new(1, 64, 32.0).unwrap();
        let w = InteractionSpec::from_profile(g, &InteractionProfile::Gaussian { strength: 1.0, range: 1.0 }, 2).unwrap();
        assert!(w.c_w() >= 1.0);
        let odd = GridFunction::from_fn(g, |y| Complex64::new(y[0].tanh(), 0.0));
        assert!(InteractionSpec::new(odd, 1.0, 1).is_err());
        let big = InteractionProfile::Power { strength: 2.0, exponent: 1 }.sample(g);
        assert!(InteractionSpec::new(big, 1.0, 1).is_err());
    }

    #[test]
    fn convolution_lemma_rejects_slow_decay() {
        let g = Grid::new(1, 256, 64.0).unwrap();
        let f = PolyDecay { c: 1.0, exponent: 1.0, scale: 1.0 };
        assert!(matches!(convolution_decay_check(g, f, f, 32.0), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn series_zero_at_origin() {
        let g = Grid::new(1, 64, 32.0).unwrap();
        let f = make_gaussian(g, 1.0, &[0.0], Normalization::L2).unwrap();
        let s = series_terms(5, 0.0, &BoundParams::default(), 1.0, &f, &f).unwrap();
        assert!(s.main.iter().all(|&v| v == 0.0));
        assert!(series_terms(41, 1.0, &BoundParams::default(), 1.0, &f, &f).is_err());
    }
}
