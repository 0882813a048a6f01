// Copyright 2026 Lightcone Lab Contributors
// SPDX-License-Identifier: Apache-2.0

//! Operators on the fermionic Fock space of `M` modes in the Jordan–Wigner
//! occupation basis: bit `j` of a basis index is the occupation of mode `j`.

use num_complex::Complex64;
use sprs::{CsMat, TriMat};

use crate::linalg::{self, to_c64, to_complex, CMat};
use crate::{Error, Result};

pub const MAX_MODES: usize = 14;
/// Largest dimension for which dense storage and dense norms are used.
pub const DENSE_DIM_CAP: usize = 4096;
const PARITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

#[derive(Debug, Clone)]
enum Storage {
    Sparse(CsMat<Complex64>),
    Dense(CMat),
}

/// Immutable operator on `2^M` dimensions with a cached parity grading.
#[derive(Debug, Clone)]
pub struct FockOperator {
    modes: usize,
    storage: Storage,
    parity: Parity,
}

#[inline]
pub(crate) fn popcount(b: usize) -> u32 {
    b.count_ones()
}

/// `a_j` or `a†_j` acting on basis state `b`: the new state and its sign.
#[inline]
pub(crate) fn ladder(b: usize, j: usize, create: bool) -> Option<(f64, usize)> {
    let bit = 1usize << j;
    let occupied = b & bit != 0;
    if occupied == create {
        return None;
    }
    let sign = if popcount(b & (bit - 1)) % 2 == 0 { 1.0 } else { -1.0 };
    Some((sign, b ^ bit))
}

fn check_modes(m: usize) -> Result<()> {
    if m == 0 || m > MAX_MODES {
        return Err(Error::Capacity(format!("mode count {m} outside 1..={MAX_MODES}")));
    }
    Ok(())
}

impl FockOperator {
    fn build(modes: usize, storage: Storage) -> Self {
        let mut op = Self { modes, storage, parity: Parity::Even };
        op.parity = op.grade();
        op
    }

    pub fn from_sparse(modes: usize, m: CsMat<Complex64>) -> Result<Self> {
        crate::linalg::pin_serial();
        check_modes(modes)?;
        let dim = 1usize << modes;
        if m.rows() != dim || m.cols() != dim {
            return Err(Error::Shape(format!("expected {dim}×{dim}, got {}×{}", m.rows(), m.cols())));
        }
        Ok(Self::build(modes, Storage::Sparse(m.to_csr())))
    }

    pub fn from_dense(modes: usize, m: CMat) -> Result<Self> {
        crate::linalg::pin_serial();
        check_modes(modes)?;
        let dim = 1usize << modes;
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::Shape(format!("expected {dim}×{dim}, got {}×{}", m.nrows(), m.ncols())));
        }
        Ok(Self::build(modes, Storage::Dense(m)))
    }

    pub fn from_triplets(modes: usize, entries: impl IntoIterator<Item = (usize, usize, Complex64)>) -> Result<Self> {
        crate::linalg::pin_serial();
        check_modes(modes)?;
        let dim = 1usize << modes;
        let mut tri = TriMat::new((dim, dim));
        for (r, c, v) in entries {
            if v != Complex64::new(0.0, 0.0) {
                tri.add_triplet(r, c, v);
            }
        }
        Ok(Self::build(modes, Storage::Sparse(tri.to_csr())))
    }

    pub fn identity(modes: usize) -> Result<Self> {
        let dim = 1usize << modes.min(63);
        Self::from_triplets(modes, (0..dim).map(|b| (b, b, Complex64::new(1.0, 0.0))))
    }

    pub fn zero(modes: usize) -> Result<Self> {
        Self::from_triplets(modes, std::iter::empty())
    }

    /// Jordan–Wigner annihilator `a_j`.
    pub fn annihilator(j: usize, modes: usize) -> Result<Self> {
        Self::ladder_op(j, modes, false)
    }

    pub fn creator(j: usize, modes: usize) -> Result<Self> {
        Self::ladder_op(j, modes, true)
    }

    fn ladder_op(j: usize, modes: usize, create: bool) -> Result<Self> {
        check_modes(modes)?;
        if j >= modes {
            return Err(Error::IndexOutOfRange { index: j, len: modes });
        }
        let dim = 1usize << modes;
        Self::from_triplets(
            modes,
            (0..dim).filter_map(|b| ladder(b, j, create).map(|(s, nb)| (nb, b, Complex64::new(s, 0.0)))),
        )
    }

    /// `Σ_j c_j a_j` (or `Σ_j c_j a†_j`) built directly from the basis action.
    pub fn ladder_combination(coeffs: &[Complex64], create: bool) -> Result<Self> {
        let modes = coeffs.len();
        check_modes(modes)?;
        let dim = 1usize << modes;
        let mut entries = Vec::new();
        for b in 0..dim {
            for (j, &c) in coeffs.iter().enumerate() {
                if c == Complex64::new(0.0, 0.0) {
                    continue;
                }
                if let Some((s, nb)) = ladder(b, j, create) {
                    entries.push((nb, b, c * s));
                }
            }
        }
        Self::from_triplets(modes, entries)
    }

    /// Number operator `N̂`.
    pub fn number(modes: usize) -> Result<Self> {
        let dim = 1usize << modes.min(63);
        Self::from_triplets(modes, (0..dim).map(|b| (b, b, Complex64::new(popcount(b) as f64, 0.0))))
    }

    /// Total parity `(−1)^{N̂}`.
    pub fn parity_operator(modes: usize) -> Result<Self> {
        let dim = 1usize << modes.min(63);
        Self::from_triplets(
            modes,
            (0..dim).map(|b| (b, b, Complex64::new(if popcount(b) % 2 == 0 { 1.0 } else { -1.0 }, 0.0))),
        )
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        1 << self.modes
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    /// Calls `f(row, col, value)` on every stored entry.
    pub fn for_each_entry(&self, mut f: impl FnMut(usize, usize, Complex64)) {
        match &self.storage {
            Storage::Sparse(m) => {
                for (v, (r, c)) in m.iter() {
                    f(r, c, *v);
                }
            }
            Storage::Dense(m) => {
                for c in 0..m.ncols() {
                    for r in 0..m.nrows() {
                        let z = m[(r, c)];
                        if z.re != 0.0 || z.im != 0.0 {
                            f(r, c, to_complex(z));
                        }
                    }
                }
            }
        }
    }

    fn grade(&self) -> Parity {
        let (mut even, mut odd) = (0.0f64, 0.0f64);
        self.for_each_entry(|r, c, v| {
            if (popcount(r) + popcount(c)) % 2 == 0 {
                even = even.max(v.norm());
            } else {
                odd = odd.max(v.norm());
            }
        });
        let scale = even.max(odd);
        if odd <= PARITY_TOL * scale {
            Parity::Even
        } else if even <= PARITY_TOL * scale {
            Parity::Odd
        } else {
            Parity::Mixed
        }
    }

    pub fn to_dense(&self) -> CMat {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(s) => {
                let mut d = CMat::zeros(self.dim(), self.dim());
                for (v, (r, c)) in s.iter() {
                    d[(r, c)] = to_c64(*v);
                }
                d
            }
        }
    }

    fn same_space(&self, other: &Self) -> Result<()> {
        if self.modes != other.modes {
            return Err(Error::Shape(format!("operators on {} and {} modes", self.modes, other.modes)));
        }
        Ok(())
    }

    pub fn adjoint(&self) -> Self {
        let storage = match &self.storage {
            Storage::Sparse(s) => Storage::Sparse(s.transpose_view().map(|z| z.conj()).to_csr()),
            Storage::Dense(m) => Storage::Dense(m.adjoint().to_owned()),
        };
        Self { modes: self.modes, storage, parity: self.parity }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let storage = match &self.storage {
            Storage::Sparse(m) => Storage::Sparse(m.map(|z| z * s)),
            Storage::Dense(m) => {
                let s = to_c64(s);
                Storage::Dense(CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s))
            }
        };
        Self::build(self.modes, storage)
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, other: &Self, s: Complex64) -> Result<Self> {
        self.same_space(other)?;
        let storage = match (&self.storage, &other.storage) {
            (Storage::Sparse(a), Storage::Sparse(b)) => {
                let b = b.map(|z| z * s);
                Storage::Sparse(a + &b)
            }
            _ => {
                let mut d = self.to_dense();
                let s = to_c64(s);
                other.for_each_entry(|r, c, v| d[(r, c)] += to_c64(v) * s);
                Storage::Dense(d)
            }
        };
        Ok(Self::build(self.modes, storage))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, Complex64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, Complex64::new(-1.0, 0.0))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        crate::linalg::pin_serial();
        self.same_space(other)?;
        let dim = self.dim();
        let storage = match (&self.storage, &other.storage) {
            (Storage::Sparse(a), Storage::Sparse(b)) => Storage::Sparse(a * b),
            (Storage::Dense(a), Storage::Dense(b)) => Storage::Dense(a * b),
            (Storage::Sparse(a), Storage::Dense(b)) => {
                let mut out = CMat::zeros(dim, dim);
                for (r, row) in a.outer_iterator().enumerate() {
                    for (k, &v) in row.iter() {
                        let v = to_c64(v);
                        for c in 0..dim {
                            out[(r, c)] += v * b[(k, c)];
                        }
                    }
                }
                Storage::Dense(out)
            }
            (Storage::Dense(a), Storage::Sparse(b)) => {
                let mut out = CMat::zeros(dim, dim);
                for (k, row) in b.outer_iterator().enumerate() {
                    for (c, &v) in row.iter() {
                        let v = to_c64(v);
                        for r in 0..dim {
                            out[(r, c)] += a[(r, k)] * v;
                        }
                    }
                }
                Storage::Dense(out)
            }
        };
        Ok(Self::build(self.modes, storage))
    }

    /// `XY + sYX`.
    pub fn bracket(&self, other: &Self, s: f64) -> Result<Self> {
        self.mul(other)?.add_scaled(&other.mul(self)?, Complex64::new(s, 0.0))
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.bracket(other, -1.0)
    }

    pub fn anticommutator(&self, other: &Self) -> Result<Self> {
        self.bracket(other, 1.0)
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        self.for_each_entry(|_, _, v| m = m.max(v.norm()));
        m
    }

    /// Largest entrywise deviation `max |self − other|`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    pub fn trace(&self) -> Complex64 {
        let mut t = Complex64::new(0.0, 0.0);
        self.for_each_entry(|r, c, v| {
            if r == c {
                t += v
            }
        });
        t
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim() {
            return Err(Error::Shape(format!("vector of length {} for dimension {}", v.len(), self.dim())));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.for_each_entry(|r, c, z| out[r] += z * v[c]);
        Ok(out)
    }

    /// Nonzero blocks between particle-number sectors, keyed by `(row sector, col sector)`.
    pub(crate) fn sector_blocks(&self) -> Vec<((usize, usize), CMat)> {
        let sectors = Sectors::new(self.modes);
        let m = self.modes + 1;
        let mut blocks: Vec<Option<CMat>> = vec![None; m * m];
        self.for_each_entry(|r, c, v| {
            let (nr, nc) = (popcount(r) as usize, popcount(c) as usize);
            let blk = blocks[nr * m + nc]
                .get_or_insert_with(|| CMat::zeros(sectors.states[nr].len(), sectors.states[nc].len()));
            blk[(sectors.position[r], sectors.position[c])] += to_c64(v);
        });
        blocks
            .into_iter()
            .enumerate()
            .filter_map(|(k, b)| b.map(|b| ((k / m, k % m), b)))
            .collect()
    }

    /// Operator norm. Sector-structured operators whose blocks pair each row
    /// sector with at most one column sector reduce to the largest block norm.
    pub fn norm(&self) -> f64 {
        let blocks = self.sector_blocks();
        let m = self.modes + 1;
        let (mut rows, mut cols) = (vec![0usize; m], vec![0usize; m]);
        for ((r, c), _) in &blocks {
            rows[*r] += 1;
            cols[*c] += 1;
        }
        if rows.iter().chain(&cols).all(|&k| k <= 1) {
            return blocks.iter().map(|(_, b)| linalg::spectral_norm(b)).fold(0.0, f64::max);
        }
        if self.dim() <= DENSE_DIM_CAP {
            return linalg::spectral_norm(&self.to_dense());
        }
        let adj = self.adjoint();
        linalg::power_norm(
            self.dim(),
            |x| self.apply(x).expect("dimension checked"),
            |y| adj.apply(y).expect("dimension checked"),
            2000,
            1e-8,
        )
    }

    /// `⟨ψ, self φ⟩`.
    pub fn matrix_element(&self, psi: &[Complex64], phi: &[Complex64]) -> Result<Complex64> {
        let a = self.apply(phi)?;
        Ok(psi.iter().zip(&a).map(|(p, q)| p.conj() * q).sum())
    }
}

/// Basis states grouped by particle number, with the position of each state inside its sector.
#[derive(Debug, Clone)]
pub(crate) struct Sectors {
    pub states: Vec<Vec<usize>>,
    pub position: Vec<usize>,
}

impl Sectors {
    pub fn new(modes: usize) -> Self {
        let dim = 1usize << modes;
        let mut states = vec![Vec::new(); modes + 1];
        let mut position = vec![0; dim];
        for b in 0..dim {
            let n = popcount(b) as usize;
            position[b] = states[n].len();
            states[n].push(b);
        }
        Self { states, position }
    }
}
