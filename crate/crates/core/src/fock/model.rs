// Copyright 2026 Lightcone Lab Contributors
// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64;
use serde::Serialize;

use crate::bounds::InteractionProfile;
use crate::grid::{Grid, GridFunction, SmearingFunction};
use crate::linalg::{eigh, to_c64, to_complex, CMat};
use crate::onebody::OneBodyOperator;
use crate::{Error, Result};

use super::basis::ModeBasis;
use super::operator::{ladder, popcount, FockOperator, DENSE_DIM_CAP};

pub const MAX_CENTERS: usize = 12;
const DEGENERACY_TOL: f64 = 1e-8;
/// Largest `b·γ` accepted by the clustering probe.
pub const CLUSTERING_BGAP_CAP: f64 = 50.0;

/// `dΓ(A) = Σ_{jk} A_{jk} a†_j a_k`.
pub fn second_quantize(a: &CMat) -> Result<FockOperator> {
    let m = a.nrows();
    if a.ncols() != m {
        return Err(Error::Shape(format!("one-body matrix is {}×{}", m, a.ncols())));
    }
    check_hermitian(a, "one-body matrix")?;
    let dim = 1usize << m.min(63);
    let mut entries = Vec::new();
    for b in 0..dim {
        for k in 0..m {
            let Some((s1, b1)) = ladder(b, k, false) else { continue };
            for j in 0..m {
                let z = to_complex(a[(j, k)]);
                if z == Complex64::new(0.0, 0.0) {
                    continue;
                }
                if let Some((s2, b2)) = ladder(b1, j, true) {
                    entries.push((b2, b, z * (s1 * s2)));
                }
            }
        }
    }
    FockOperator::from_triplets(m, entries)
}

fn check_hermitian(a: &CMat, what: &str) -> Result<()> {
    let m = a.nrows();
    let mut scale = 1.0f64;
    let mut dev = 0.0f64;
    for j in 0..m {
        for k in 0..m {
            scale = scale.max(a[(j, k)].abs());
            dev = dev.max((a[(j, k)] - a[(k, j)].conj()).abs());
        }
    }
    if dev > 1e-12 * scale {
        return Err(Error::Model(format!("{what} is not Hermitian (deviation {dev:.3e})")));
    }
    Ok(())
}

/// Lattice of spacing `s` on `[lo, hi]^d`; the Riemann weight of each center is `s^d`.
pub fn lattice_centers(dim: usize, spacing: f64, lo: f64, hi: f64) -> Result<Vec<Vec<f64>>> {
    if !(spacing > 0.0) || !(hi >= lo) {
        return Err(Error::Parameter(format!("bad center lattice: spacing {spacing}, range [{lo}, {hi}]")));
    }
    let n = ((hi - lo) / spacing + 1e-9).floor() as usize + 1;
    let axis: Vec<f64> = (0..n).map(|i| lo + i as f64 * spacing).collect();
    Ok(match dim {
        1 => axis.iter().map(|&x| vec![x]).collect(),
        _ => axis.iter().flat_map(|&x| axis.iter().map(move |&y| vec![x, y])).collect(),
    })
}

/// Grid points whose coordinates all lie in `[lo, hi]`.
pub fn box_mask(grid: Grid, lo: f64, hi: f64) -> Vec<bool> {
    (0..grid.len())
        .map(|i| {
            let p = grid.point(i);
            p[..grid.dim()].iter().all(|&c| c >= lo && c <= hi)
        })
        .collect()
}

/// Mode-truncated model: basis, one-body matrix, and the Riemann-sum interaction.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    basis: ModeBasis,
    t_matrix: CMat,
    centers: Vec<Vec<f64>>,
    weight: f64,
    profile: InteractionProfile,
    smearing: SmearingFunction,
    lambda: Option<Vec<bool>>,
    smeared: Vec<Vec<Complex64>>,
    projection_loss: f64,
}

impl ModelSpec {
    pub fn new(
        basis: ModeBasis,
        t_matrix: CMat,
        profile: InteractionProfile,
        smearing: SmearingFunction,
        centers: Vec<Vec<f64>>,
        weight: f64,
        lambda: Option<Vec<bool>>,
    ) -> Result<Self> {
        let m = basis.len();
        if t_matrix.nrows() != m || t_matrix.ncols() != m {
            return Err(Error::Shape(format!("one-body matrix must be {m}×{m}")));
        }
        check_hermitian(&t_matrix, "one-body matrix")?;
        let t_matrix = CMat::from_fn(m, m, |j, k| (t_matrix[(j, k)] + t_matrix[(k, j)].conj()) * 0.5);
        if centers.len() > MAX_CENTERS {
            return Err(Error::Capacity(format!("{} interaction centers exceed {MAX_CENTERS}", centers.len())));
        }
        if !(weight > 0.0) {
            return Err(Error::Parameter(format!("center weight must be positive, got {weight}")));
        }
        let grid = *basis.grid();
        if let Some(mask) = &lambda {
            if mask.len() != grid.len() {
                return Err(Error::Shape("region mask length differs from grid".into()));
            }
        }
        for x in &centers {
            if x.len() != grid.dim() || !grid.contains(x) {
                return Err(Error::Config(format!("center {x:?} lies outside the box")));
            }
            if let Some(mask) = &lambda {
                if !mask[nearest_point(&grid, x)] {
                    return Err(Error::Config(format!("center {x:?} lies outside the interaction region")));
                }
            }
        }
        let mut smeared = Vec::with_capacity(centers.len());
        let mut projection_loss = 0.0f64;
        for x in &centers {
            let phi = smearing.at(grid, x)?;
            projection_loss = projection_loss.max(basis.projection_loss(&phi)?);
            smeared.push(basis.coefficients(&phi)?);
        }
        Ok(Self { basis, t_matrix, centers, weight, profile, smearing, lambda, smeared, projection_loss })
    }

    /// Same as [`ModelSpec::new`] with `T_{jk}` computed from `op`.
    pub fn from_operator(
        basis: ModeBasis,
        op: &OneBodyOperator,
        profile: InteractionProfile,
        smearing: SmearingFunction,
        centers: Vec<Vec<f64>>,
        weight: f64,
        lambda: Option<Vec<bool>>,
    ) -> Result<Self> {
        let t = basis.one_body_matrix(op)?;
        Self::new(basis, t, profile, smearing, centers, weight, lambda)
    }

    pub fn basis(&self) -> &ModeBasis {
        &self.basis
    }

    pub fn t_matrix(&self) -> &CMat {
        &self.t_matrix
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn profile(&self) -> &InteractionProfile {
        &self.profile
    }

    pub fn smearing(&self) -> &SmearingFunction {
        &self.smearing
    }

    pub fn lambda(&self) -> Option<&[bool]> {
        self.lambda.as_deref()
    }

    /// Largest fraction of `‖φ_x‖²` lost when projecting onto the modes.
    pub fn projection_loss(&self) -> f64 {
        self.projection_loss
    }

    /// `w_{xy} = W(x − y)·weight²`.
    pub fn pair_coefficients(&self) -> Vec<Vec<f64>> {
        let grid = *self.basis.grid();
        self.centers
            .iter()
            .map(|x| {
                self.centers
                    .iter()
                    .map(|y| self.profile.value(grid.distance(x, y)) * self.weight * self.weight)
                    .collect()
            })
            .collect()
    }

    pub fn is_free(&self) -> bool {
        self.profile.is_zero() || self.pair_coefficients().iter().flatten().all(|&w| w == 0.0)
    }

    /// `V_{ijkl} = Σ_{xy} w_{xy} c^x_i c^y_j conj(c^y_k) conj(c^x_l)` for `a†_i a†_j a_k a_l`.
    fn interaction_tensor(&self) -> Vec<Complex64> {
        let m = self.basis.len();
        let w = self.pair_coefficients();
        let mut v = vec![Complex64::new(0.0, 0.0); m * m * m * m];
        for (x, cx) in self.smeared.iter().enumerate() {
            for (y, cy) in self.smeared.iter().enumerate() {
                let wxy = w[x][y];
                if wxy == 0.0 {
                    continue;
                }
                for i in 0..m {
                    for j in 0..m {
                        let a = cx[i] * cy[j] * wxy;
                        for k in 0..m {
                            let b = a * cy[k].conj();
                            for l in 0..m {
                                v[((i * m + j) * m + k) * m + l] += b * cx[l].conj();
                            }
                        }
                    }
                }
            }
        }
        v
    }

    /// `dΓ(T)`.
    pub fn free_hamiltonian(&self) -> Result<FockOperator> {
        second_quantize(&self.t_matrix)
    }

    /// `H_Λ = dΓ(T) + Σ_{x,y} w_{xy} a†(φ_x)a†(φ_y)a(φ_y)a(φ_x)`.
    pub fn build_h(&self) -> Result<FockOperator> {
        let h0 = self.free_hamiltonian()?;
        if self.centers.is_empty() {
            log::warn!("no interaction centers: the Hamiltonian is dΓ(T)");
            return Ok(h0);
        }
        let m = self.basis.len();
        let v = self.interaction_tensor();
        let dim = 1usize << m;
        let mut entries = Vec::new();
        for b in 0..dim {
            for l in 0..m {
                let Some((s1, b1)) = ladder(b, l, false) else { continue };
                for k in 0..m {
                    let Some((s2, b2)) = ladder(b1, k, false) else { continue };
                    for j in 0..m {
                        let Some((s3, b3)) = ladder(b2, j, true) else { continue };
                        for i in 0..m {
                            let Some((s4, b4)) = ladder(b3, i, true) else { continue };
                            let z = v[((i * m + j) * m + k) * m + l];
                            if z != Complex64::new(0.0, 0.0) {
                                entries.push((b4, b, z * (s1 * s2 * s3 * s4)));
                            }
                        }
                    }
                }
            }
        }
        let h = h0.add(&FockOperator::from_triplets(m, entries)?)?;
        let dev = h.max_abs_diff(&h.adjoint())?;
        if dev > 1e-10 * h.max_abs().max(1.0) {
            return Err(Error::Numerical(format!("assembled Hamiltonian is not Hermitian ({dev:.3e})")));
        }
        Ok(h)
    }
}

fn nearest_point(grid: &Grid, x: &[f64]) -> usize {
    let d = grid.distances_to(x);
    (0..d.len()).min_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap_or(0)
}

#[derive(Debug, Clone)]
struct SectorEig {
    states: Vec<usize>,
    values: Vec<f64>,
    vectors: CMat,
}

/// Eigendecomposition of a Hamiltonian, blocked by particle number when it conserves `N̂`.
#[derive(Debug, Clone)]
pub struct Evolution {
    modes: usize,
    label: Vec<usize>,
    position: Vec<usize>,
    sectors: Vec<SectorEig>,
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    pub gap: f64,
    pub vector: Vec<Complex64>,
    pub degenerate: bool,
    pub residual: f64,
}

impl Evolution {
    pub fn new(h: &FockOperator) -> Result<Self> {
        crate::linalg::pin_serial();
        let modes = h.modes();
        let dim = h.dim();
        let n = FockOperator::number(modes)?;
        let conserving = h.commutator(&n)?.max_abs() <= 1e-10 * h.max_abs().max(1.0);
        let label: Vec<usize> = (0..dim).map(|b| if conserving { popcount(b) as usize } else { 0 }).collect();
        let count = label.iter().max().map_or(1, |m| m + 1);
        let mut states = vec![Vec::new(); count];
        let mut position = vec![0; dim];
        for b in 0..dim {
            position[b] = states[label[b]].len();
            states[label[b]].push(b);
        }
        if let Some(big) = states.iter().map(Vec::len).max().filter(|&s| s > DENSE_DIM_CAP) {
            return Err(Error::Capacity(format!("sector of dimension {big} exceeds {DENSE_DIM_CAP}")));
        }
        let mut blocks: Vec<CMat> = states.iter().map(|s| CMat::zeros(s.len(), s.len())).collect();
        let mut leak = 0.0f64;
        h.for_each_entry(|r, c, v| {
            if label[r] == label[c] {
                blocks[label[r]][(position[r], position[c])] += to_c64(v);
            } else {
                leak = leak.max(v.norm());
            }
        });
        debug_assert!(leak <= 1e-10 * h.max_abs().max(1.0));
        let sectors = states
            .into_iter()
            .zip(blocks)
            .map(|(states, blk)| {
                let (values, vectors) = eigh(&blk);
                SectorEig { states, values, vectors }
            })
            .collect();
        Ok(Self { modes, label, position, sectors })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// All eigenvalues, ascending.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.sectors.iter().flat_map(|s| s.values.iter().copied()).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// `V diag(f(λ)) V†` on one sector.
    fn sector_function(&self, s: usize, f: impl Fn(f64) -> Complex64) -> CMat {
        let sec = &self.sectors[s];
        let k = sec.states.len();
        let scaled = CMat::from_fn(k, k, |i, j| sec.vectors[(i, j)] * to_c64(f(sec.values[j])));
        &scaled * sec.vectors.adjoint()
    }

    /// `τ_t(B) = e^{itH} B e^{−itH}`.
    pub fn heisenberg(&self, b: &FockOperator, t: f64) -> Result<FockOperator> {
        if b.modes() != self.modes {
            return Err(Error::Shape(format!("operator on {} modes, Hamiltonian on {}", b.modes(), self.modes)));
        }
        if t == 0.0 {
            return Ok(b.clone());
        }
        let ns = self.sectors.len();
        let mut blocks: Vec<Option<CMat>> = vec![None; ns * ns];
        b.for_each_entry(|r, c, v| {
            let (sr, sc) = (self.label[r], self.label[c]);
            let blk = blocks[sr * ns + sc].get_or_insert_with(|| {
                CMat::zeros(self.sectors[sr].states.len(), self.sectors[sc].states.len())
            });
            blk[(self.position[r], self.position[c])] += to_c64(v);
        });
        let props: Vec<CMat> = (0..ns).map(|s| self.sector_function(s, |l| Complex64::from_polar(1.0, -t * l))).collect();
        let dim = b.dim();
        let mut dense = (dim <= DENSE_DIM_CAP).then(|| CMat::zeros(dim, dim));
        let mut triplets = Vec::new();
        for (k, blk) in blocks.into_iter().enumerate() {
            let Some(blk) = blk else { continue };
            let (sr, sc) = (k / ns, k % ns);
            let out = props[sr].adjoint() * &blk * &props[sc];
            let (rows, cols) = (&self.sectors[sr].states, &self.sectors[sc].states);
            for (j, &cj) in cols.iter().enumerate() {
                for (i, &ri) in rows.iter().enumerate() {
                    match dense.as_mut() {
                        Some(d) => d[(ri, cj)] = out[(i, j)],
                        None => triplets.push((ri, cj, to_complex(out[(i, j)]))),
                    }
                }
            }
        }
        match dense {
            Some(d) => FockOperator::from_dense(self.modes, d),
            None => FockOperator::from_triplets(self.modes, triplets),
        }
    }

    /// `e^{−b(H − shift)} ψ`.
    fn damp(&self, psi: &[Complex64], b: f64, shift: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
        for sec in &self.sectors {
            let k = sec.states.len();
            let coeffs: Vec<Complex64> = (0..k)
                .map(|e| {
                    let proj: Complex64 =
                        sec.states.iter().enumerate().map(|(i, &s)| to_complex(sec.vectors[(i, e)]).conj() * psi[s]).sum();
                    proj * (-b * (sec.values[e] - shift)).exp()
                })
                .collect();
            for (i, &s) in sec.states.iter().enumerate() {
                out[s] = (0..k).map(|e| to_complex(sec.vectors[(i, e)]) * coeffs[e]).sum();
            }
        }
        out
    }

    pub fn ground_state(&self, h: &FockOperator) -> Result<GroundState> {
        let mut best = (f64::INFINITY, 0usize, 0usize);
        for (s, sec) in self.sectors.iter().enumerate() {
            if let Some(&v) = sec.values.first() {
                if v < best.0 {
                    best = (v, s, 0);
                }
            }
        }
        let spec = self.spectrum();
        let gap = if spec.len() > 1 { spec[1] - spec[0] } else { f64::INFINITY };
        let sec = &self.sectors[best.1];
        let mut vector = vec![Complex64::new(0.0, 0.0); 1 << self.modes];
        for (i, &s) in sec.states.iter().enumerate() {
            vector[s] = to_complex(sec.vectors[(i, best.2)]);
        }
        let hv = h.apply(&vector)?;
        let residual = hv.iter().zip(&vector).map(|(a, b)| (a - b * best.0).norm_sqr()).sum::<f64>().sqrt();
        Ok(GroundState { energy: best.0, gap, vector, degenerate: gap < DEGENERACY_TOL, residual })
    }

    /// `e^{bE}⟨ψ₀, A e^{−bH} B ψ₀⟩`, computed with the shifted exponential `e^{−b(H−E)}`.
    pub fn clustering_probe(&self, gs: &GroundState, a: &FockOperator, b_op: &FockOperator, b: f64) -> Result<Complex64> {
        if gs.degenerate {
            return Err(Error::Hypothesis(format!("ground state is degenerate (gap {:.3e})", gs.gap)));
        }
        if !(b >= 0.0) || !b.is_finite() || b * gs.gap > CLUSTERING_BGAP_CAP {
            return Err(Error::Parameter(format!("b = {b} outside [0, {CLUSTERING_BGAP_CAP}/γ]")));
        }
        let phi = b_op.apply(&gs.vector)?;
        let damped = self.damp(&phi, b, gs.energy);
        a.matrix_element(&gs.vector, &damped)
    }
}

/// Interacting and free dynamics of one model.
#[derive(Debug, Clone)]
pub struct ManyBody {
    spec: ModelSpec,
    h: FockOperator,
    full: Evolution,
    free: Evolution,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FtSample {
    pub t: f64,
    pub value: f64,
    pub interaction_part: f64,
    pub creation_part: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct VolumeRow {
    pub t: f64,
    pub k: usize,
    pub difference: f64,
}

impl ManyBody {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        let h = spec.build_h()?;
        let h0 = spec.free_hamiltonian()?;
        let full = Evolution::new(&h)?;
        let free = Evolution::new(&h0)?;
        Ok(Self { spec, h, full, free })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn hamiltonian(&self) -> &FockOperator {
        &self.h
    }

    pub fn interacting(&self) -> &Evolution {
        &self.full
    }

    pub fn free(&self) -> &Evolution {
        &self.free
    }

    /// `‖{τ_t^Λ(a(f)) − τ_t^0(a(f)), a†(g)}‖ + ‖{τ_t^Λ(a†(f)), a†(g)}‖`.
    /// At `t = 0` and for vanishing interaction both terms are zero by the CAR and
    /// are returned as exact zeros.
    pub fn f_t(&self, f: &GridFunction, g: &GridFunction, t: f64) -> Result<FtSample> {
        if t == 0.0 || self.spec.is_free() {
            self.spec.basis.coefficients(f)?;
            self.spec.basis.coefficients(g)?;
            return Ok(FtSample { t, value: 0.0, interaction_part: 0.0, creation_part: 0.0 });
        }
        self.f_t_direct(f, g, t)
    }

    /// [`ManyBody::f_t`] evaluated by matrix computation in every case.
    pub fn f_t_direct(&self, f: &GridFunction, g: &GridFunction, t: f64) -> Result<FtSample> {
        let basis = &self.spec.basis;
        let af = basis.a_of(f)?;
        let adg = basis.adag_of(g)?;
        let full = self.full.heisenberg(&af, t)?;
        let diff = full.sub(&self.free.heisenberg(&af, t)?)?;
        let first = diff.anticommutator(&adg)?.norm();
        let second = full.adjoint().anticommutator(&adg)?.norm();
        Ok(FtSample { t, value: first + second, interaction_part: first, creation_part: second })
    }

    pub fn ground_state(&self) -> Result<GroundState> {
        self.full.ground_state(&self.h)
    }
}

/// `‖τ_t^{Λ_{k+1}}(a(f)) − τ_t^{Λ_k}(a(f))‖` for nested interaction regions.
pub fn volume_convergence(models: &[ManyBody], f: &GridFunction, times: &[f64]) -> Result<Vec<VolumeRow>> {
    if models.len() < 2 {
        return Err(Error::Config("volume convergence needs at least two regions".into()));
    }
    let base = models[0].spec.basis();
    for (k, m) in models.iter().enumerate().skip(1) {
        let b = m.spec.basis();
        let same = b.len() == base.len()
            && b.modes().iter().zip(base.modes()).all(|(x, y)| x.values() == y.values());
        if !same {
            return Err(Error::Config(format!("region {k} uses a different mode basis")));
        }
        let nested = match (models[k - 1].spec.lambda(), m.spec.lambda()) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some(a), Some(b)) => a.iter().zip(b).all(|(&x, &y)| !x || y),
        };
        if !nested {
            return Err(Error::Config(format!("region {} is not contained in region {k}", k - 1)));
        }
    }
    let af = base.a_of(f)?;
    let mut rows = Vec::new();
    for &t in times {
        let evolved = models.iter().map(|m| m.full.heisenberg(&af, t)).collect::<Result<Vec<_>>>()?;
        for k in 0..evolved.len() - 1 {
            rows.push(VolumeRow { t, k: k + 1, difference: evolved[k + 1].sub(&evolved[k])?.norm() });
        }
    }
    Ok(rows)
}
