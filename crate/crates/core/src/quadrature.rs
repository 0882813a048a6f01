// Copyright 2026 Lightcone Lab Contributors
// SPDX-License-Identifier: Apache-2.0

//! Globally adaptive 7/15-point Gauss–Kronrod quadrature with mappings for
//! half-lines and the full line.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

pub const REL_TOL: f64 = 1e-8;
pub const ABS_TOL: f64 = 1e-12;
const MAX_INTERVALS: usize = 4000;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

fn kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// `∫_a^b f` on a finite interval, bisecting the worst piece until the
/// error estimate meets `max(abs_tol, rel_tol·|I|)`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<Estimate> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Parameter("integrate expects finite limits".into()));
    }
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let (v, e) = kronrod(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value: v, error: e });
    let (mut total, mut err) = (v, e);
    while err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::Numerical(format!(
                "quadrature did not converge on [{a}, {b}]: estimate {total}, error {err}"
            )));
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = kronrod(&f, worst.a, mid);
        let (v2, e2) = kronrod(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
        if !total.is_finite() {
            return Err(Error::Divergence(format!("integrand is not integrable on [{a}, {b}]")));
        }
    }
    // recompute from pieces to shed accumulated rounding in the running sums
    let value = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.error).sum();
    Ok(Estimate { value, error })
}

/// `∫_a^∞ f` through `x = a + u/(1-u)`.
pub fn integrate_upper(f: impl Fn(f64) -> f64, a: f64, rel_tol: f64, abs_tol: f64) -> Result<Estimate> {
    integrate(
        |u| {
            if u >= 1.0 {
                return 0.0;
            }
            let w = 1.0 - u;
            let v = f(a + u / w) / (w * w);
            if v.is_finite() { v } else { 0.0 }
        },
        0.0,
        1.0,
        rel_tol,
        abs_tol,
    )
}

/// `∫_{-∞}^b f`.
pub fn integrate_lower(f: impl Fn(f64) -> f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<Estimate> {
    integrate_upper(|x| f(-x), -b, rel_tol, abs_tol)
}

/// `∫_ℝ f`, split at `0`.
pub fn integrate_line(f: impl Fn(f64) -> f64, rel_tol: f64, abs_tol: f64) -> Result<Estimate> {
    let left = integrate_lower(&f, 0.0, rel_tol, abs_tol)?;
    let right = integrate_upper(&f, 0.0, rel_tol, abs_tol)?;
    Ok(Estimate { value: left.value + right.value, error: left.error + right.error })
}

/// Integrates over consecutive pieces `[b_0, b_1], [b_1, b_2], …`, which lets
/// callers place kinks of the integrand on piece boundaries.
pub fn integrate_breakpoints(f: impl Fn(f64) -> f64, breaks: &[f64], rel_tol: f64, abs_tol: f64) -> Result<Estimate> {
    let mut out = Estimate { value: 0.0, error: 0.0 };
    for w in breaks.windows(2) {
        let e = integrate(&f, w[0], w[1], rel_tol, abs_tol)?;
        out.value += e.value;
        out.error += e.error;
    }
    Ok(out)
}
