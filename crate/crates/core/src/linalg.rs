// Copyright 2026 Lightcone Lab Contributors
// SPDX-License-Identifier: Apache-2.0

//! Thin helpers over `faer` for the dense decompositions used throughout.

use faer::complex_native::c64;
use faer::{Mat, Parallelism, Side};
use num_complex::Complex64;

pub type CMat = Mat<c64>;
pub type RMat = Mat<f64>;

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };

#[inline]
/// Keeps faer single-threaded so results do not depend on the rayon pool size;
/// callers parallelize over independent work items instead.
pub(crate) fn pin_serial() {
    static ONCE: std::sync::Once = std::sync::Once::new();
    ONCE.call_once(|| faer::set_global_parallelism(Parallelism::None));
}

pub fn to_c64(z: Complex64) -> c64 {
    c64::new(z.re, z.im)
}

#[inline]
pub fn to_complex(z: c64) -> Complex64 {
    Complex64::new(z.re, z.im)
}

/// Hermitian eigendecomposition with ascending eigenvalues. Real input
/// takes the cheaper real-symmetric path.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    pin_serial();
    let n = a.nrows();
    let is_real = (0..n).all(|j| (0..n).all(|i| a[(i, j)].im == 0.0));
    if is_real {
        let re = RMat::from_fn(n, n, |i, j| a[(i, j)].re);
        let (vals, vecs) = eigh_real(&re);
        (vals, CMat::from_fn(n, n, |i, j| c64::new(vecs[(i, j)], 0.0)))
    } else {
        let dec = a.selfadjoint_eigendecomposition(Side::Lower);
        let s = dec.s().column_vector();
        let vals = (0..n).map(|i| s.read(i).re).collect();
        (vals, dec.u().to_owned())
    }
}

pub fn eigh_real(a: &RMat) -> (Vec<f64>, RMat) {
    pin_serial();
    let n = a.nrows();
    let dec = a.selfadjoint_eigendecomposition(Side::Lower);
    let s = dec.s().column_vector();
    ((0..n).map(|i| s.read(i)).collect(), dec.u().to_owned())
}

pub fn eigvalsh(a: &CMat) -> Vec<f64> {
    pin_serial();
    let mut v: Vec<f64> = a.selfadjoint_eigenvalues(Side::Lower);
    v.sort_by(|x, y| x.total_cmp(y));
    v
}

pub fn eigvalsh_real(a: &RMat) -> Vec<f64> {
    pin_serial();
    let mut v: Vec<f64> = a.selfadjoint_eigenvalues(Side::Lower);
    v.sort_by(|x, y| x.total_cmp(y));
    v
}

/// Largest singular value; tall or wide inputs go through the smaller Gram matrix.
pub fn spectral_norm(a: &CMat) -> f64 {
    pin_serial();
    let (r, c) = (a.nrows(), a.ncols());
    if r == 0 || c == 0 {
        return 0.0;
    }
    if r.min(c) <= 4 || r == c {
        let s = a.singular_values();
        return s.into_iter().fold(0.0, f64::max);
    }
    let gram = if r > c { a.adjoint() * a } else { a * a.adjoint() };
    let top = eigvalsh(&gram).last().copied().unwrap_or(0.0);
    top.max(0.0).sqrt()
}

pub fn frobenius(a: &CMat) -> f64 {
    let mut s = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let z = a[(i, j)];
            s += z.re * z.re + z.im * z.im;
        }
    }
    s.sqrt()
}

pub fn max_abs(a: &CMat) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].abs());
        }
    }
    m
}

/// Operator-norm estimate by power iteration on `A*A`, for matrix-free operators.
pub fn power_norm(
    dim: usize,
    apply: impl Fn(&[Complex64]) -> Vec<Complex64>,
    apply_adjoint: impl Fn(&[Complex64]) -> Vec<Complex64>,
    max_iter: usize,
    tol: f64,
) -> f64 {
    if dim == 0 {
        return 0.0;
    }
    // deterministic, non-symmetric start vector
    let mut v: Vec<Complex64> =
        (0..dim).map(|i| Complex64::new(1.0 + (i as f64 * 0.618).sin() * 0.5, (i as f64 * 0.31).cos() * 0.1)).collect();
    let norm = |x: &[Complex64]| x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let n0 = norm(&v);
    v.iter_mut().for_each(|z| *z /= n0);
    let mut estimate = 0.0;
    for _ in 0..max_iter {
        let w = apply_adjoint(&apply(&v));
        let nw = norm(&w);
        if nw == 0.0 {
            return 0.0;
        }
        let next = nw.sqrt();
        v = w.into_iter().map(|z| z / nw).collect();
        if (next - estimate).abs() <= tol * next {
            return next;
        }
        estimate = next;
    }
    estimate
}
