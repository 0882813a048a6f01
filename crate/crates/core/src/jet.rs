// Copyright 2026 Lightcone Lab Contributors
// SPDX-License-Identifier: Apache-2.0

//! Truncated Taylor series arithmetic, used to get exact derivatives of the
//! smooth step without finite differences.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Taylor coefficients `c_k = f^{(k)}(x₀)/k!` up to a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    c: Vec<f64>,
}

impl Jet {
    pub fn constant(v: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = v;
        Self { c }
    }

    /// The identity function expanded at `x0`.
    pub fn variable(x0: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = x0;
        if order > 0 {
            c[1] = 1.0;
        }
        Self { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.c
    }

    /// `f^{(k)}(x₀)` for every `k` up to the order.
    pub fn derivatives(&self) -> Vec<f64> {
        let mut fact = 1.0;
        self.c
            .iter()
            .enumerate()
            .map(|(k, &ck)| {
                if k > 0 {
                    fact *= k as f64;
                }
                ck * fact
            })
            .collect()
    }

    pub fn exp(&self) -> Self {
        let n = self.c.len();
        let mut e = vec![0.0; n];
        e[0] = self.c[0].exp();
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| j as f64 * self.c[j] * e[k - j]).sum();
            e[k] = s / k as f64;
        }
        Self { c: e }
    }

    pub fn recip(&self) -> Self {
        Jet::constant(1.0, self.order()) / self.clone()
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        Jet { c: self.c.iter().zip(&rhs.c).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        Jet { c: self.c.iter().zip(&rhs.c).map(|(a, b)| a - b).collect() }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet { c: self.c.iter().map(|a| -a).collect() }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let n = self.c.len();
        let c = (0..n).map(|k| (0..=k).map(|j| self.c[j] * rhs.c[k - j]).sum()).collect();
        Jet { c }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        let n = self.c.len();
        let mut q = vec![0.0; n];
        for k in 0..n {
            let s: f64 = (1..=k).map(|j| rhs.c[j] * q[k - j]).sum();
            q[k] = (self.c[k] - s) / rhs.c[0];
        }
        Jet { c: q }
    }
}

/// Jet of `b(x) = exp(-1/x)·1_{x>0}`.
fn bump_factor(x: &Jet) -> Jet {
    let x0 = x.value();
    if x0 <= 0.0 || -1.0 / x0 < -700.0 {
        return Jet::constant(0.0, x.order());
    }
    (-x.recip()).exp()
}

/// Jet at `x0` of the smooth step `ξ(x) = b(1−x)/(b(x)+b(1−x))`, which is 1
/// on `(-∞, 0]`, 0 on `[1, ∞)` and monotone in between.
pub fn smooth_step_jet(x0: f64, order: usize) -> Jet {
    if x0 <= 0.0 {
        return Jet::constant(1.0, order);
    }
    if x0 >= 1.0 {
        return Jet::constant(0.0, order);
    }
    let x = Jet::variable(x0, order);
    let left = bump_factor(&x);
    let right = bump_factor(&(Jet::constant(1.0, order) - x));
    if left.value() == 0.0 {
        // only far below machine precision next to 0
        return right.clone() / right;
    }
    right.clone() / (left + right)
}

pub fn smooth_step(x: f64) -> f64 {
    smooth_step_jet(x, 0).value()
}
