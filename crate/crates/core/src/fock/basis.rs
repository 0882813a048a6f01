// Copyright 2026 Lightcone Lab Contributors
// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64;
use serde::Serialize;

use crate::grid::{make_gaussian, Grid, GridFunction, Normalization};
use crate::linalg::{to_c64, CMat};
use crate::onebody::OneBodyOperator;
use crate::{Error, Result};

use super::operator::{FockOperator, MAX_MODES};

const GS_DEPENDENCE_TOL: f64 = 1e-10;

/// Position and tier metadata carried by each mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeTag {
    pub label: String,
    pub center: Vec<f64>,
    /// Dyadic tier, when the mode was built for a partial trace.
    pub tier: Option<usize>,
}

impl ModeTag {
    pub fn at(label: impl Into<String>, center: &[f64]) -> Self {
        Self { label: label.into(), center: center.to_vec(), tier: None }
    }
}

/// Orthonormal family of `M` grid functions spanning the one-particle space of the model.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    grid: Grid,
    modes: Vec<GridFunction>,
    tags: Vec<ModeTag>,
}

/// Compactly supported `exp(1 − 1/(1 − (r/radius)²))` centered at `x`.
pub fn smooth_bump(grid: Grid, radius: f64, x: &[f64]) -> Result<GridFunction> {
    if !(radius > 0.0) {
        return Err(Error::Parameter(format!("bump radius must be positive, got {radius}")));
    }
    let d = grid.distances_to(x);
    let v: Vec<f64> = d
        .iter()
        .map(|&r| {
            let u = r / radius;
            if u < 1.0 {
                (1.0 - 1.0 / (1.0 - u * u)).exp()
            } else {
                0.0
            }
        })
        .collect();
    GridFunction::from_real(grid, &v)
}

impl ModeBasis {
    /// Modified Gram–Schmidt (two passes) over `seeds` in the given order.
    pub fn from_seeds(seeds: Vec<GridFunction>, tags: Vec<ModeTag>) -> Result<Self> {
        let m = seeds.len();
        if !(2..=MAX_MODES).contains(&m) {
            return Err(Error::Capacity(format!("mode count {m} outside 2..={MAX_MODES}")));
        }
        if tags.len() != m {
            return Err(Error::Shape(format!("{} tags for {m} modes", tags.len())));
        }
        let grid = *seeds[0].grid();
        let mut modes: Vec<GridFunction> = Vec::with_capacity(m);
        for (k, seed) in seeds.into_iter().enumerate() {
            let scale = seed.l2_norm();
            let mut v = seed;
            for _ in 0..2 {
                for q in &modes {
                    let c = q.inner(&v)?;
                    v = v.sub(&q.scaled(c))?;
                }
            }
            let n = v.l2_norm();
            if !(n > GS_DEPENDENCE_TOL * scale) {
                return Err(Error::Model(format!("seed {k} is linearly dependent on the previous seeds")));
            }
            modes.push(v.scaled(Complex64::new(1.0 / n, 0.0)));
        }
        Ok(Self { grid, modes, tags })
    }

    /// Orthonormalized Gaussians of width `sigma` at `centers`.
    pub fn gaussian_chain(grid: Grid, centers: &[Vec<f64>], sigma: f64) -> Result<Self> {
        let seeds = centers
            .iter()
            .map(|x| make_gaussian(grid, sigma, x, Normalization::L2))
            .collect::<Result<Vec<_>>>()?;
        let tags = centers.iter().enumerate().map(|(k, x)| ModeTag::at(format!("gauss{k}"), x)).collect();
        Self::from_seeds(seeds, tags)
    }

    /// Orthonormalized compact bumps; disjoint supports stay untouched by Gram–Schmidt.
    pub fn bump_chain(grid: Grid, centers: &[Vec<f64>], radius: f64) -> Result<Self> {
        let seeds = centers.iter().map(|x| smooth_bump(grid, radius, x)).collect::<Result<Vec<_>>>()?;
        let tags = centers.iter().enumerate().map(|(k, x)| ModeTag::at(format!("bump{k}"), x)).collect();
        Self::from_seeds(seeds, tags)
    }

    /// The `count` lowest eigenfunctions of `op`, which span a `T`-invariant subspace.
    pub fn eigenmodes(op: &OneBodyOperator, count: usize) -> Result<Self> {
        let grid = *op.grid();
        let (_, vecs) = op.eigenpairs()?;
        if count > vecs.ncols() {
            return Err(Error::Capacity(format!("{count} eigenmodes requested from {} points", vecs.ncols())));
        }
        let scale = 1.0 / grid.cell_volume().sqrt();
        let seeds = (0..count)
            .map(|k| {
                let v: Vec<f64> = (0..grid.len()).map(|i| vecs[(i, k)] * scale).collect();
                GridFunction::from_real(grid, &v)
            })
            .collect::<Result<Vec<_>>>()?;
        let tags = (0..count).map(|k| ModeTag::at(format!("eig{k}"), &vec![0.0; grid.dim()])).collect();
        Self::from_seeds(seeds, tags)
    }

    pub fn with_tiers(mut self, tiers: &[Option<usize>]) -> Result<Self> {
        if tiers.len() != self.len() {
            return Err(Error::Shape(format!("{} tiers for {} modes", tiers.len(), self.len())));
        }
        for (tag, &t) in self.tags.iter_mut().zip(tiers) {
            tag.tier = t;
        }
        Ok(self)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[GridFunction] {
        &self.modes
    }

    pub fn tags(&self) -> &[ModeTag] {
        &self.tags
    }

    /// `c_j = ⟨m_j, f⟩`.
    pub fn coefficients(&self, f: &GridFunction) -> Result<Vec<Complex64>> {
        self.modes.iter().map(|m| m.inner(f)).collect()
    }

    pub fn synthesize(&self, coeffs: &[Complex64]) -> Result<GridFunction> {
        if coeffs.len() != self.len() {
            return Err(Error::Shape(format!("{} coefficients for {} modes", coeffs.len(), self.len())));
        }
        let mut out = GridFunction::zeros(self.grid);
        for (m, &c) in self.modes.iter().zip(coeffs) {
            out = out.add(&m.scaled(c))?;
        }
        Ok(out)
    }

    /// Fraction of `‖f‖²` outside the span.
    pub fn projection_loss(&self, f: &GridFunction) -> Result<f64> {
        let total = f.l2_norm().powi(2);
        if total == 0.0 {
            return Ok(0.0);
        }
        let kept: f64 = self.coefficients(f)?.iter().map(|c| c.norm_sqr()).sum();
        Ok((1.0 - kept / total).max(0.0))
    }

    pub fn gram_error(&self) -> Result<f64> {
        let mut e = 0.0f64;
        for (i, a) in self.modes.iter().enumerate() {
            for (j, b) in self.modes.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                e = e.max((a.inner(b)? - target).norm());
            }
        }
        Ok(e)
    }

    /// `T_{jk} = ⟨m_j, T m_k⟩`.
    pub fn one_body_matrix(&self, op: &OneBodyOperator) -> Result<CMat> {
        let images = self.modes.iter().map(|m| op.apply(m)).collect::<Result<Vec<_>>>()?;
        let m = self.len();
        let mut t = CMat::zeros(m, m);
        for j in 0..m {
            for k in 0..m {
                t[(j, k)] = to_c64(self.modes[j].inner(&images[k])?);
            }
        }
        Ok(t)
    }

    /// Smallest distance from the region `mask` to the numerical support of mode `j`.
    pub fn support_distance(&self, j: usize, mask: &[bool]) -> Result<f64> {
        let m = self.modes.get(j).ok_or(Error::IndexOutOfRange { index: j, len: self.len() })?;
        if mask.len() != self.grid.len() {
            return Err(Error::Shape("region mask length differs from grid".into()));
        }
        let d = self.grid.dim();
        let supp = m.support();
        let inside: Vec<[f64; 2]> = (0..self.grid.len()).filter(|&i| mask[i]).map(|i| self.grid.point(i)).collect();
        let mut best = f64::INFINITY;
        for i in (0..self.grid.len()).filter(|&i| supp[i]) {
            let p = self.grid.point(i);
            for q in &inside {
                best = best.min(self.grid.distance(&p[..d], &q[..d]));
            }
        }
        Ok(best)
    }

    /// Appends the normalized out-of-span parts of `extra`, skipping those already in the span.
    pub fn extended(&self, extra: &[GridFunction]) -> Result<Self> {
        let mut modes = self.modes.clone();
        let mut tags = self.tags.clone();
        for (k, f) in extra.iter().enumerate() {
            let scale = f.l2_norm();
            let mut v = f.clone();
            for _ in 0..2 {
                for q in &modes {
                    let c = q.inner(&v)?;
                    v = v.sub(&q.scaled(c))?;
                }
            }
            let n = v.l2_norm();
            if n > 1e-7 * scale {
                if modes.len() == MAX_MODES {
                    return Err(Error::Capacity(format!("extension exceeds {MAX_MODES} modes")));
                }
                modes.push(v.scaled(Complex64::new(1.0 / n, 0.0)));
                tags.push(ModeTag::at(format!("residual{k}"), &vec![0.0; self.grid.dim()]));
            }
        }
        Ok(Self { grid: self.grid, modes, tags })
    }

    /// `a(f) = Σ_j conj(c_j) a_j`; the out-of-span part of `f` is dropped.
    pub fn a_of(&self, f: &GridFunction) -> Result<FockOperator> {
        let c: Vec<Complex64> = self.coefficients(f)?.iter().map(|z| z.conj()).collect();
        FockOperator::ladder_combination(&c, false)
    }

    /// `a†(f) = Σ_j c_j a†_j`.
    pub fn adag_of(&self, f: &GridFunction) -> Result<FockOperator> {
        FockOperator::ladder_combination(&self.coefficients(f)?, true)
    }
}
