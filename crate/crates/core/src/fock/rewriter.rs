// Copyright 2026 Lightcone Lab Contributors
// SPDX-License-Identifier: Apache-2.0

//! Symbolic expansion of `[a₁⋯a_N, b₁⋯b_M]` and `{a₁⋯a_N, b₁⋯b_M}` into
//! `N·M` terms, each carrying exactly one scalar anticommutator `{a_i, b_j}`.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::{Error, Result};

use super::operator::FockOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BracketMode {
    Commutator,
    Anticommutator,
}

impl BracketMode {
    /// `s` in `XY + sYX`.
    pub fn sign(self) -> f64 {
        match self {
            Self::Commutator => -1.0,
            Self::Anticommutator => 1.0,
        }
    }

    /// The bracket for which monomials of these lengths expand into anchors.
    pub fn natural(n: usize, m: usize) -> Self {
        if n % 2 == 1 && m % 2 == 1 {
            Self::Anticommutator
        } else {
            Self::Commutator
        }
    }
}

/// A declared `a^#` slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Slot {
    pub dagger: bool,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Factor {
    Lhs(usize),
    Rhs(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Term {
    pub sign: i8,
    /// Scalar anticommutators `{a_i, b_j}` as `(i, j)`.
    pub anchors: Vec<(usize, usize)>,
    pub factors: Vec<Factor>,
    /// Position in `factors` where the anchor was produced.
    pub anchor_at: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OperatorExpression {
    pub lhs: Vec<Slot>,
    pub rhs: Vec<Slot>,
    pub mode: BracketMode,
    pub terms: Vec<Term>,
}

struct Partial {
    sign: i8,
    anchor: (usize, usize),
    factors: Vec<Factor>,
    anchor_at: usize,
}

/// Expansion of `[L, R}` with the natural bracket for the lengths of `l` and `r`.
fn expand(l: &[usize], r: &[usize]) -> Vec<Partial> {
    if l.len() == 1 {
        let a = l[0];
        if r.len() == 1 {
            return vec![Partial { sign: 1, anchor: (a, r[0]), factors: vec![], anchor_at: 0 }];
        }
        // [a, b₁R'}_s = {a,b₁}R' − b₁[a,R'}_{−s}
        let mut out = vec![Partial {
            sign: 1,
            anchor: (a, r[0]),
            factors: r[1..].iter().map(|&j| Factor::Rhs(j)).collect(),
            anchor_at: 0,
        }];
        for p in expand(l, &r[1..]) {
            let mut factors = vec![Factor::Rhs(r[0])];
            factors.extend(p.factors);
            out.push(Partial { sign: -p.sign, anchor: p.anchor, factors, anchor_at: p.anchor_at + 1 });
        }
        return out;
    }
    // [a₁L', R} = a₁[L', R} − s₁[a₁, R}L', s₁ the natural sign of (L', R)
    let s1: i8 = if BracketMode::natural(l.len() - 1, r.len()) == BracketMode::Anticommutator { 1 } else { -1 };
    let mut out = Vec::new();
    for p in expand(&l[1..], r) {
        let mut factors = vec![Factor::Lhs(l[0])];
        factors.extend(p.factors);
        out.push(Partial { sign: p.sign, anchor: p.anchor, factors, anchor_at: p.anchor_at + 1 });
    }
    for p in expand(&l[..1], r) {
        let mut factors = p.factors;
        factors.extend(l[1..].iter().map(|&i| Factor::Lhs(i)));
        out.push(Partial { sign: -s1 * p.sign, anchor: p.anchor, factors, anchor_at: p.anchor_at });
    }
    out
}

/// Expands `[a₁⋯a_N, b₁⋯b_M}` into `N·M` anchored terms.
pub fn expand_commutator(lhs: &[Slot], rhs: &[Slot], mode: BracketMode) -> Result<OperatorExpression> {
    let (n, m) = (lhs.len(), rhs.len());
    if n == 0 || m == 0 {
        return Err(Error::Parameter("both monomials need at least one factor".into()));
    }
    if mode != BracketMode::natural(n, m) {
        return Err(Error::Hypothesis(match mode {
            BracketMode::Commutator => format!("commutator expansion needs N or M even (N = {n}, M = {m})"),
            BracketMode::Anticommutator => format!("anticommutator expansion needs N and M odd (N = {n}, M = {m})"),
        }));
    }
    let l: Vec<usize> = (0..n).collect();
    let r: Vec<usize> = (0..m).collect();
    let terms = expand(&l, &r)
        .into_iter()
        .map(|p| Term { sign: p.sign, anchors: vec![p.anchor], factors: p.factors, anchor_at: p.anchor_at })
        .collect();
    Ok(OperatorExpression { lhs: lhs.to_vec(), rhs: rhs.to_vec(), mode, terms })
}

/// `⟨f, g⟩` from mode coefficients, antilinear in `f`.
fn inner(f: &[Complex64], g: &[Complex64]) -> Complex64 {
    f.iter().zip(g).map(|(a, b)| a.conj() * b).sum()
}

/// `a^#(f)` from the mode coefficients of `f`.
pub fn ladder_from(dagger: bool, coeffs: &[Complex64]) -> Result<FockOperator> {
    if dagger {
        FockOperator::ladder_combination(coeffs, true)
    } else {
        let c: Vec<Complex64> = coeffs.iter().map(|z| z.conj()).collect();
        FockOperator::ladder_combination(&c, false)
    }
}

impl OperatorExpression {
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// `{a^#(f), a^#(g)}` as a scalar: `⟨f,g⟩` for `{a(f), a†(g)}`, `⟨g,f⟩` for the mirror, else 0.
    pub fn anchor_value(&self, i: usize, j: usize, lhs: &[Vec<Complex64>], rhs: &[Vec<Complex64>]) -> Complex64 {
        match (self.lhs[i].dagger, self.rhs[j].dagger) {
            (false, true) => inner(&lhs[i], &rhs[j]),
            (true, false) => inner(&rhs[j], &lhs[i]),
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// Evaluates the expression with slot functions given by mode coefficients.
    pub fn materialize(&self, lhs: &[Vec<Complex64>], rhs: &[Vec<Complex64>]) -> Result<FockOperator> {
        if lhs.len() != self.lhs.len() || rhs.len() != self.rhs.len() {
            return Err(Error::Shape("slot assignment does not match the declared slots".into()));
        }
        let modes = lhs[0].len();
        let lops = lhs.iter().zip(&self.lhs).map(|(c, s)| ladder_from(s.dagger, c)).collect::<Result<Vec<_>>>()?;
        let rops = rhs.iter().zip(&self.rhs).map(|(c, s)| ladder_from(s.dagger, c)).collect::<Result<Vec<_>>>()?;
        let mut total = FockOperator::zero(modes)?;
        for term in &self.terms {
            let mut scalar = Complex64::new(term.sign as f64, 0.0);
            for &(i, j) in &term.anchors {
                scalar *= self.anchor_value(i, j, lhs, rhs);
            }
            if scalar == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut prod = FockOperator::identity(modes)?;
            for f in &term.factors {
                let op = match *f {
                    Factor::Lhs(i) => &lops[i],
                    Factor::Rhs(j) => &rops[j],
                };
                prod = prod.mul(op)?;
            }
            total = total.add_scaled(&prod, scalar)?;
        }
        Ok(total)
    }

    /// The bracket computed directly from the matrices.
    pub fn direct(&self, lhs: &[Vec<Complex64>], rhs: &[Vec<Complex64>]) -> Result<FockOperator> {
        let modes = lhs[0].len();
        let product = |slots: &[Slot], coeffs: &[Vec<Complex64>]| -> Result<FockOperator> {
            let mut p = FockOperator::identity(modes)?;
            for (s, c) in slots.iter().zip(coeffs) {
                p = p.mul(&ladder_from(s.dagger, c)?)?;
            }
            Ok(p)
        };
        product(&self.lhs, lhs)?.bracket(&product(&self.rhs, rhs)?, self.mode.sign())
    }
}

impl fmt::Display for OperatorExpression {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, t) in self.terms.iter().enumerate() {
            match (k, t.sign < 0) {
                (0, true) => write!(out, "-")?,
                (0, false) => {}
                (_, true) => write!(out, " - ")?,
                (_, false) => write!(out, " + ")?,
            }
            for p in 0..=t.factors.len() {
                if p == t.anchor_at {
                    for &(i, j) in &t.anchors {
                        write!(out, "{{{},{}}}", self.lhs[i].name, self.rhs[j].name)?;
                    }
                }
                match t.factors.get(p) {
                    Some(Factor::Lhs(i)) => write!(out, "{}", self.lhs[*i].name)?,
                    Some(Factor::Rhs(j)) => write!(out, "{}", self.rhs[*j].name)?,
                    None => {}
                }
            }
        }
        Ok(())
    }
}
