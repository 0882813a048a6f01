// Copyright 2026 Lightcone Lab Contributors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;

use lightcone_core::grid::{make_gaussian, Grid, GridFunction, Normalization};
use lightcone_core::onebody::{overlap_scan, EnergyCutoff, Method, OneBodyOperator, Potential, Probe};
use lightcone_core::jet::smooth_step;
use num_complex::Complex64;
use proptest::prelude::*;

fn op1(p: usize, l: f64, kappa: f64, pot: &Potential) -> OneBodyOperator {
    let g = Grid::new(1, p, l).unwrap();
    OneBodyOperator::assemble(g, kappa, &pot.sample(g), false).unwrap()
}

fn l2_diff(a: &GridFunction, b: &GridFunction) -> f64 {
    a.sub(b).unwrap().l2_norm()
}

fn cosine() -> Potential {
    Potential::Cosine { amplitude: 1.0, wavelength: Some(8.0) }
}

#[test]
fn eigenvectors_are_orthonormal() {
    let op = op1(128, 32.0, 0.5, &cosine());
    let g = *op.grid();
    // V diag(λ) V^T reproduces the matrix; checked through the action on basis vectors
    let m = op.matrix();
    for j in [0usize, 17, 64, 127] {
        let mut e = vec![0.0; 128];
        e[j] = 1.0;
        let f = GridFunction::from_real(g, &e).unwrap();
        let via_spec = op.apply_function(&f, |l| Complex64::new(l, 0.0)).unwrap();
        for i in 0..128 {
            assert!((via_spec.values()[i].re - m[(i, j)]).abs() < 1e-10);
        }
        let back = op.apply_function(&f, |_| Complex64::new(1.0, 0.0)).unwrap();
        assert!(l2_diff(&back, &f) < 1e-12);
    }
}

/// Smallest eigenvalue of a symmetric tridiagonal matrix by Sturm-sequence bisection.
fn tridiagonal_min_eig(diag: &[f64], off: &[f64]) -> f64 {
    let count_below = |x: f64| {
        let mut c = 0;
        let mut q = diag[0] - x;
        if q < 0.0 {
            c += 1;
        }
        for i in 1..diag.len() {
            let qq = if q == 0.0 { 1e-300 } else { q };
            q = diag[i] - x - off[i - 1] * off[i - 1] / qq;
            if q < 0.0 {
                c += 1;
            }
        }
        c
    };
    let bound = diag.iter().zip(off.iter().chain([0.0].iter())).map(|(d, o)| d.abs() + 2.0 * o.abs()).fold(0.0, f64::max);
    let (mut lo, mut hi) = (-bound - 1.0, bound + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count_below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Ground energy of `-½ψ'' + cos(y)ψ` with second-order finite differences on
/// the even half period `[0, π]` (Neumann ends), `m` cells.
fn fd_ground(m: usize) -> f64 {
    let h = PI / m as f64;
    let diag: Vec<f64> = (0..=m).map(|i| 1.0 / (h * h) + (i as f64 * h).cos()).collect();
    let mut off = vec![-0.5 / (h * h); m];
    // reflected ghost points make the end rows non-symmetric; a diagonal similarity fixes that
    off[0] = -1.0 / (2f64.sqrt() * h * h);
    off[m - 1] = -1.0 / (2f64.sqrt() * h * h);
    tridiagonal_min_eig(&diag, &off)
}

#[test]
fn mathieu_ground_energy_matches_finite_differences() {
    let op = op1(128, 2.0 * PI, 0.5, &Potential::Cosine { amplitude: 1.0, wavelength: None });
    let spectral = op.eigenvalues().unwrap()[0];
    let (e1, e2, e3) = (fd_ground(400), fd_ground(800), fd_ground(1600));
    let r1 = (4.0 * e2 - e1) / 3.0;
    let r2 = (4.0 * e3 - e2) / 3.0;
    let oracle = (16.0 * r2 - r1) / 15.0;
    assert!((spectral - oracle).abs() < 1e-6, "{spectral} vs {oracle}");
}

#[test]
fn free_evolution_is_fourier_multiplier() {
    let op = op1(256, 40.0, 0.5, &Potential::Zero);
    let g = *op.grid();
    let f = make_gaussian(g, 1.0, &[3.0], Normalization::L2).unwrap();
    let t = 1.7;
    let mult: Vec<Complex64> = g.momentum_squared().iter().map(|&p2| Complex64::from_polar(1.0, -0.5 * p2 * t)).collect();
    let expect = f.apply_multiplier(&mult);
    assert!(l2_diff(&op.propagate(&f, t, Method::Spectral).unwrap(), &expect) < 1e-10);
    assert!(l2_diff(&op.propagate(&f, 0.0, Method::Spectral).unwrap(), &f) < 1e-12);
}

#[test]
fn spectral_and_split_step_agree() {
    let op = op1(256, 32.0, 0.5, &cosine());
    let f = make_gaussian(*op.grid(), 1.0, &[0.0], Normalization::L2).unwrap();
    let a = op.propagate(&f, 1.0, Method::Spectral).unwrap();
    let b = op.propagate(&f, 1.0, Method::SplitStep { dt: 1e-3 }).unwrap();
    assert!(l2_diff(&a, &b) < 1e-6, "{}", l2_diff(&a, &b));
}

#[test]
fn split_step_works_beyond_dense_cap() {
    let g = Grid::new(1, 8192, 256.0).unwrap();
    let op = OneBodyOperator::assemble(g, 0.5, &cosine().sample(g), true).unwrap();
    let f = make_gaussian(g, 1.0, &[0.0], Normalization::L2).unwrap();
    let out = op.propagate(&f, 0.5, Method::SplitStep { dt: 1e-2 }).unwrap();
    assert!((out.l2_norm() - 1.0).abs() < 1e-10);
    assert!(op.propagate(&f, 0.5, Method::Spectral).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn unitarity_and_group_law(t1 in -3.0f64..3.0, t2 in -3.0f64..3.0, x in -4.0f64..4.0) {
        let op = op1(128, 32.0, 0.5, &cosine());
        let f = make_gaussian(*op.grid(), 1.0, &[x], Normalization::L1).unwrap();
        let a = op.propagate(&f, t1, Method::Spectral).unwrap();
        prop_assert!((a.l2_norm() - f.l2_norm()).abs() < 1e-10);
        let ab = op.propagate(&a, t2, Method::Spectral).unwrap();
        let direct = op.propagate(&f, t1 + t2, Method::Spectral).unwrap();
        prop_assert!(l2_diff(&ab, &direct) < 1e-10);
        let c = EnergyCutoff::new(2.0, 1.5).unwrap();
        let cut = op.spectral_cutoff(&c).unwrap();
        let x1 = cut.apply(&a).unwrap();
        let x2 = op.propagate(&cut.apply(&f).unwrap(), t1, Method::Spectral).unwrap();
        prop_assert!(l2_diff(&x1, &x2) < 1e-12);
    }
}

#[test]
fn cutoff_extremes_and_free_multiplier() {
    let op = op1(128, 32.0, 0.5, &cosine());
    let f = make_gaussian(*op.grid(), 1.0, &[1.0], Normalization::L2).unwrap();
    let vals = op.eigenvalues().unwrap();
    let (lo, hi) = (vals[0], *vals.last().unwrap());
    let id = op.spectral_cutoff(&EnergyCutoff::new(hi + 1.0, 2.0).unwrap()).unwrap();
    assert!(l2_diff(&id.apply(&f).unwrap(), &f) < 1e-12);
    // shift so that αE sits below the spectrum: only possible with a positive spectrum
    let shifted = op1(128, 32.0, 0.5, &Potential::Constant { value: 10.0 });
    let low = 10.0 + lo.min(0.0) - 1.0;
    let zero = shifted.spectral_cutoff(&EnergyCutoff::new(low / 3.0, 2.0).unwrap()).unwrap();
    assert!(zero.apply(&f).unwrap().l2_norm() < 1e-14);

    let free = op1(128, 32.0, 0.5, &Potential::Zero);
    let g = *free.grid();
    let c = EnergyCutoff::new(3.0, 2.0).unwrap();
    let mult: Vec<Complex64> =
        g.momentum_squared().iter().map(|&p2| Complex64::new(smooth_step((0.5 * p2 - 3.0) / 3.0), 0.0)).collect();
    let expect = f.apply_multiplier(&mult);
    assert!(l2_diff(&free.spectral_cutoff(&c).unwrap().apply(&f).unwrap(), &expect) < 1e-12);
}

#[test]
fn c_e_matches_free_momenta() {
    let free = op1(256, 64.0, 0.5, &Potential::Zero);
    let g = *free.grid();
    let moms: Vec<f64> = g.momentum_squared().iter().map(|p| p.sqrt()).collect();
    let alpha = 2.0;
    let mut ratios = Vec::new();
    for e in [0.5, 1.0, 2.0, 4.0, 8.0] {
        let oracle = moms.iter().cloned().filter(|p| 0.5 * p * p <= alpha * alpha * e).fold(0.0, f64::max);
        let ce = free.c_e(alpha, e).unwrap();
        assert!((ce - oracle).abs() < 1e-8, "E = {e}: {ce} vs {oracle}");
        ratios.push(ce / e.sqrt());
    }
    // continuum value α(E/κ)^{1/2}/√E, up to one momentum shell 2π/L
    let shell = 2.0 * PI / g.length();
    for (r, e) in ratios.iter().zip([0.5f64, 1.0, 2.0, 4.0, 8.0]) {
        assert!((r - alpha * 2f64.sqrt()).abs() <= shell / e.sqrt() + 1e-12);
    }
    assert!((free.c_e(alpha, 1e6).unwrap() - g.max_momentum()).abs() < 1e-8);
    let empty = op1(64, 16.0, 0.5, &Potential::Constant { value: 50.0 });
    assert_eq!(empty.c_e(2.0, 1.0).unwrap(), 0.0);
}

#[test]
fn propagation_norm_properties() {
    let op = op1(512, 128.0, 0.5, &Potential::Zero);
    let full = EnergyCutoff::new(1e4, 2.0).unwrap();
    assert_eq!(op.propagation_norm(&full, 2.0, 6.0, 0.0).unwrap(), 0.0);
    let c = EnergyCutoff::new(4.0, 2.0).unwrap();
    let mut prev = f64::INFINITY;
    for big_r in [4.0, 6.0, 10.0, 16.0, 24.0, 40.0] {
        let v = op.propagation_norm(&c, 2.0, big_r, 1.0).unwrap();
        assert!(v <= prev * (1.0 + 1e-10), "R = {big_r}: {v} > {prev}");
        prev = v;
    }
    // with t within (R−r)/(c_E+1) the norm decays with R; the tail of g_E(T) itself
    // already limits the R = 4 → 10 drop to about a factor 17
    let ce = op.c_e(2.0, 4.0).unwrap();
    let t = 8.0 / (ce + 1.0);
    let near = op.propagation_norm(&c, 2.0, 4.0, t).unwrap();
    let far = op.propagation_norm(&c, 2.0, 10.0, t).unwrap();
    assert!(far < 0.1 * near, "{far} vs {near}");
}

#[test]
fn overlap_scan_trivial_rows() {
    let op = op1(256, 64.0, 0.5, &cosine());
    let g = *op.grid();
    let phi = make_gaussian(g, 1.0, &[0.0], Normalization::L1).unwrap();
    let probe = Probe { distance: 0.0, f: phi.normalized() };
    let far = Probe { distance: 10.0, f: GridFunction::shell_indicator(g, &[0.0], 10.0, 11.0) };
    let rows = overlap_scan(&op, &phi, &[0.0], &[probe, far], &[0.0, 1.0], 4, 0.5).unwrap();
    assert_eq!(rows[0].lhs_diff_overlap, 0.0);
    assert_eq!(rows[1].lhs_diff_overlap, 0.0);
    assert!((rows[0].lhs_overlap - phi.l2_norm()).abs() < 1e-12);
    assert!(rows.iter().all(|r| r.rhs_envelope > 0.0 && r.rhs_envelope <= 1.0 + 1e-12));
    let bad = Probe { distance: 0.0, f: phi.clone() };
    assert!(overlap_scan(&op, &phi, &[0.0], &[bad], &[0.0], 4, 0.5).is_err());
}

#[test]
fn free_overlap_matches_analytic_propagator() {
    let (p, l, kappa, t) = (512usize, 96.0, 0.5, 1.3);
    let op = op1(p, l, kappa, &Potential::Zero);
    let g = *op.grid();
    let phi = make_gaussian(g, 1.0, &[0.0], Normalization::L1).unwrap();
    let (a, b) = (6.0, 9.0);
    let mask: Vec<f64> = (0..g.len()).map(|i| if (a..=b).contains(&g.point(i)[0]) { 1.0 } else { 0.0 }).collect();
    let f = GridFunction::from_real(g, &mask).unwrap().normalized();
    let rows = overlap_scan(&op, &phi, &[0.0], &[Probe { distance: a, f: f.clone() }], &[t], 4, 0.5).unwrap();
    // exp(-y²/2s) evolves to sqrt(s/(s + 2iκt)) exp(-y²/2(s + 2iκt)); sum over periodic images
    let s = Complex64::new(1.0, 2.0 * kappa * t);
    let amp = (Complex64::new(1.0, 0.0) / s).sqrt() / (2.0 * PI).sqrt();
    let psi = |y: f64| (-2..=2).map(|k| amp * (-(y + k as f64 * l).powi(2) / (2.0 * s)).exp()).sum::<Complex64>();
    let h = g.spacing();
    let norm = 1.0 / (mask.iter().sum::<f64>() * h).sqrt();
    let oracle: Complex64 = (0..g.len()).filter(|&i| mask[i] > 0.0).map(|i| psi(g.point(i)[0]) * h * norm).sum();
    assert!((rows[0].lhs_overlap - oracle.norm()).abs() < 1e-8, "{} vs {}", rows[0].lhs_overlap, oracle.norm());
}
