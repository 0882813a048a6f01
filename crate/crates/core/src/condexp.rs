// Copyright 2026 Lightcone Lab Contributors
// SPDX-License-Identifier: Apache-2.0

//! Conditional expectations onto mode subalgebras in their Kraus form, the
//! quasi-free tracial state, and the tiered partial-trace plans.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fock::{FockOperator, ModeBasis, Parity};
use crate::grid::{jbracket, GridFunction};
use crate::onebody::{Method, OneBodyOperator};
use crate::{Error, Result};

const SUPPORT_TOL_ALGEBRA: f64 = 1e-10;
/// Literal `4^N` sums are refused beyond this depth.
pub const LITERAL_DEPTH_CAP: usize = 8;
pub const MAX_DEPTH: usize = 12;

/// `u⁰ = Id`, `u¹ = a†_n + a_n`, `u² = a†_n − a_n`, `u³ = Id − 2a†_n a_n`.
pub fn kraus_unitaries(n: usize, modes: usize) -> Result<[FockOperator; 4]> {
    let a = FockOperator::annihilator(n, modes)?;
    let ad = a.adjoint();
    let id = FockOperator::identity(modes)?;
    let u1 = ad.add(&a)?;
    let u2 = ad.sub(&a)?;
    let u3 = id.add_scaled(&ad.mul(&a)?, Complex64::new(-2.0, 0.0))?;
    Ok([id, u1, u2, u3])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tier {
    pub i: usize,
    pub floor: f64,
    pub budget: usize,
    pub mode_ids: Vec<usize>,
}

/// Modes averaged out by the conditional expectation, in averaging order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrausPlan {
    pub modes: usize,
    pub complement: Vec<usize>,
    #[serde(rename = "N")]
    pub depth: usize,
    pub tiers: Vec<Tier>,
    #[serde(rename = "C_X")]
    pub c_x: f64,
    #[serde(rename = "C_J")]
    pub c_j: f64,
    pub n: i64,
}

impl KrausPlan {
    /// Untiered plan averaging over the first `depth` entries of `complement`.
    pub fn new(modes: usize, complement: Vec<usize>, depth: usize) -> Result<Self> {
        for &k in &complement {
            if k >= modes {
                return Err(Error::IndexOutOfRange { index: k, len: modes });
            }
        }
        let mut sorted = complement.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != complement.len() {
            return Err(Error::Plan("complement lists a mode twice".into()));
        }
        if depth > complement.len() {
            return Err(Error::Truncation(format!("depth {depth} exceeds the {} complement modes", complement.len())));
        }
        Ok(Self { modes, complement, depth, tiers: Vec::new(), c_x: 0.0, c_j: 0.0, n: 0 })
    }

    pub fn with_depth(&self, depth: usize) -> Result<Self> {
        if depth > self.complement.len() {
            return Err(Error::Truncation(format!(
                "depth {depth} exceeds the {} complement modes",
                self.complement.len()
            )));
        }
        Ok(Self { depth, ..self.clone() })
    }

    /// Same plan on a basis extended by trailing modes, which stay in the kept subspace.
    pub fn on_modes(&self, modes: usize) -> Result<Self> {
        if modes < self.modes {
            return Err(Error::Shape(format!("cannot shrink a plan from {} to {modes} modes", self.modes)));
        }
        Ok(Self { modes, ..self.clone() })
    }

    pub fn averaged(&self) -> &[usize] {
        &self.complement[..self.depth]
    }

    pub fn manifest_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }
}

fn check_plan(a: &FockOperator, plan: &KrausPlan) -> Result<()> {
    if a.modes() != plan.modes {
        return Err(Error::Shape(format!("operator on {} modes, plan on {}", a.modes(), plan.modes)));
    }
    if plan.depth > MAX_DEPTH {
        return Err(Error::Capacity(format!("depth {} above {MAX_DEPTH}", plan.depth)));
    }
    Ok(())
}

/// `A ↦ ¼ Σ_α (u^α)* A u^α` for one mode.
fn average_mode(a: &FockOperator, n: usize) -> Result<FockOperator> {
    let us = kraus_unitaries(n, a.modes())?;
    let mut acc = a.clone();
    for u in &us[1..] {
        acc = acc.add(&u.adjoint().mul(a)?.mul(u)?)?;
    }
    Ok(acc.scale(Complex64::new(0.25, 0.0)))
}

/// `𝔼^N(A) = 4^{−N} Σ_α u(α)* A u(α)` as `N` sequential single-mode averages.
pub fn conditional_expectation(a: &FockOperator, plan: &KrausPlan) -> Result<FockOperator> {
    check_plan(a, plan)?;
    let mut out = a.clone();
    for &n in plan.averaged() {
        out = average_mode(&out, n)?;
    }
    Ok(out)
}

/// The literal `4^N`-term Kraus sum; only meant for cross-checking small depths.
pub fn conditional_expectation_literal(a: &FockOperator, plan: &KrausPlan) -> Result<FockOperator> {
    check_plan(a, plan)?;
    let modes = plan.averaged();
    if modes.len() > LITERAL_DEPTH_CAP {
        return Err(Error::Capacity(format!("literal sum limited to depth {LITERAL_DEPTH_CAP}")));
    }
    let us = modes.iter().map(|&n| kraus_unitaries(n, a.modes())).collect::<Result<Vec<_>>>()?;
    let total = 4usize.pow(modes.len() as u32);
    let mut acc = FockOperator::zero(a.modes())?;
    for code in 0..total {
        let mut u = FockOperator::identity(a.modes())?;
        let mut c = code;
        for set in &us {
            u = u.mul(&set[c % 4])?;
            c /= 4;
        }
        acc = acc.add(&u.adjoint().mul(a)?.mul(&u)?)?;
    }
    Ok(acc.scale(Complex64::new(1.0 / total as f64, 0.0)))
}

/// Smallest depth after which `𝔼^N(A)` no longer changes (to `tol`, entrywise).
pub fn stabilization_index(a: &FockOperator, plan: &KrausPlan, tol: f64) -> Result<usize> {
    check_plan(a, plan)?;
    let mut stages = vec![a.clone()];
    for &n in plan.averaged() {
        let next = average_mode(stages.last().expect("non-empty"), n)?;
        stages.push(next);
    }
    let last = stages.last().expect("non-empty");
    for (k, s) in stages.iter().enumerate() {
        if s.max_abs_diff(last)? <= tol {
            return Ok(k);
        }
    }
    Ok(plan.depth)
}

/// `Tr(A)/2^M`, the tracial state on the full mode algebra.
pub fn normalized_trace(a: &FockOperator) -> Complex64 {
    a.trace() / a.dim() as f64
}

/// Quasi-free tracial state of a monomial given as `(dagger, mode)` factors.
/// Normal-ordered monomials are evaluated combinatorially, all others by the trace.
pub fn tracial_state(monomial: &[(bool, usize)], modes: usize) -> Result<Complex64> {
    for &(_, k) in monomial {
        if k >= modes {
            return Err(Error::IndexOutOfRange { index: k, len: modes });
        }
    }
    let split = monomial.iter().position(|&(d, _)| !d).unwrap_or(monomial.len());
    let normal = monomial[split..].iter().all(|&(d, _)| !d);
    if normal {
        let cre: Vec<usize> = monomial[..split].iter().map(|&(_, k)| k).collect();
        let ann: Vec<usize> = monomial[split..].iter().rev().map(|&(_, k)| k).collect();
        let mut sc = cre.clone();
        sc.sort_unstable();
        let distinct = sc.windows(2).all(|w| w[0] != w[1]);
        let mut sa = ann.clone();
        sa.sort_unstable();
        if !distinct || sc != sa {
            return Ok(Complex64::new(0.0, 0.0));
        }
        // sign of the permutation taking the creator order to the reversed annihilator order
        let perm: Vec<usize> = cre.iter().map(|k| ann.iter().position(|x| x == k).expect("same set")).collect();
        let mut inversions = 0;
        for i in 0..perm.len() {
            for j in i + 1..perm.len() {
                if perm[i] > perm[j] {
                    inversions += 1;
                }
            }
        }
        let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
        return Ok(Complex64::new(sign / 2f64.powi(cre.len() as i32), 0.0));
    }
    let mut op = FockOperator::identity(modes)?;
    for &(d, k) in monomial {
        let f = if d { FockOperator::creator(k, modes)? } else { FockOperator::annihilator(k, modes)? };
        op = op.mul(&f)?;
    }
    Ok(normalized_trace(&op))
}

/// `‖𝔼(BAC) − B𝔼(A)C‖` for even `A` and even `B, C` living on the kept modes.
pub fn tomiyama_check(a: &FockOperator, b: &FockOperator, c: &FockOperator, plan: &KrausPlan) -> Result<f64> {
    for (name, op) in [("A", a), ("B", b), ("C", c)] {
        if op.parity() != Parity::Even {
            return Err(Error::Hypothesis(format!("{name} is not even ({:?})", op.parity())));
        }
        check_plan(op, plan)?;
    }
    for (name, op) in [("B", b), ("C", c)] {
        let scale = op.max_abs().max(1.0);
        for &n in plan.averaged() {
            let an = FockOperator::annihilator(n, plan.modes)?;
            if op.commutator(&an)?.max_abs() > SUPPORT_TOL_ALGEBRA * scale {
                return Err(Error::Hypothesis(format!("{name} acts on averaged mode {n}")));
            }
        }
    }
    let lhs = conditional_expectation(&b.mul(a)?.mul(c)?, plan)?;
    let rhs = b.mul(&conditional_expectation(a, plan)?)?.mul(c)?;
    Ok(lhs.sub(&rhs)?.norm())
}

/// `⌊C_J 2^{in/4}⌋`.
pub fn tier_budget(i: usize, c_j: f64, n: i64) -> usize {
    (c_j * 2f64.powf(i as f64 * n as f64 / 4.0) + 1e-9).floor() as usize
}

/// Assigns the modes outside `x_mask` to dyadic tiers `dist ≥ C_X 2^i`.
/// Modes with a declared tier are checked against its floor; undeclared modes
/// closer than `2C_X` stay in the kept subspace.
pub fn build_ppt_plan(x_mask: &[bool], basis: &ModeBasis, c_x: f64, c_j: f64, n: i64) -> Result<KrausPlan> {
    if !(c_x > 0.0) || !(c_j >= 0.0) || n < 1 {
        return Err(Error::Parameter(format!("need C_X > 0, C_J ≥ 0, n ≥ 1; got {c_x}, {c_j}, {n}")));
    }
    let mut by_tier: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for j in 0..basis.len() {
        let d = basis.support_distance(j, x_mask)?;
        if d == 0.0 {
            continue;
        }
        let tier = match basis.tags()[j].tier {
            Some(i) => {
                let floor = c_x * 2f64.powi(i as i32);
                if d < floor {
                    return Err(Error::Plan(format!(
                        "mode {j} at distance {d} violates the floor {floor} of tier {i}"
                    )));
                }
                Some(i)
            }
            None if d >= 2.0 * c_x => Some((d / c_x).log2().floor() as usize),
            None => None,
        };
        if let Some(i) = tier {
            by_tier.entry(i).or_default().push(j);
        }
    }
    let mut tiers = Vec::new();
    let mut complement = Vec::new();
    for (i, ids) in by_tier {
        let budget = tier_budget(i, c_j, n);
        if ids.len() > budget {
            return Err(Error::Plan(format!("tier {i} holds {} modes, budget {budget}", ids.len())));
        }
        complement.extend(&ids);
        tiers.push(Tier { i, floor: c_x * 2f64.powi(i as i32), budget, mode_ids: ids });
    }
    let depth = complement.len();
    Ok(KrausPlan { modes: basis.len(), complement, depth, tiers, c_x, c_j, n })
}

/// `‖τ_t(A) − 𝔼(τ_t(A))‖`.
pub fn localization_error(evolved: &FockOperator, plan: &KrausPlan) -> Result<f64> {
    Ok(evolved.sub(&conditional_expectation(evolved, plan)?)?.norm())
}

/// `C (Ξ^{1/2} + 2√C_ob1 |t|⟨t⟩^{1/2+δ}) (1/n)(⟨t⟩/C_X)^n`.
pub fn ppt_envelope(t: f64, c_fit: f64, xi: f64, c_ob1: f64, delta: f64, n: i64, c_x: f64) -> f64 {
    let jt = jbracket(t);
    c_fit * (xi.sqrt() + 2.0 * c_ob1.sqrt() * t.abs() * jt.powf(0.5 + delta)) * (jt / c_x).powi(n as i32) / n as f64
}

/// One factor `a^#(g)` of a local observable.
#[derive(Debug, Clone)]
pub struct LocalFactor {
    pub dagger: bool,
    pub g: GridFunction,
}

/// Checks that every factor is supported in `x_mask`.
pub fn check_local(factors: &[LocalFactor], x_mask: &[bool]) -> Result<()> {
    for (k, f) in factors.iter().enumerate() {
        let supp = f.g.support();
        if supp.len() != x_mask.len() {
            return Err(Error::Shape("region mask length differs from grid".into()));
        }
        if supp.iter().zip(x_mask).any(|(&s, &x)| s && !x) {
            return Err(Error::Hypothesis(format!("factor {k} is not supported in X")));
        }
    }
    Ok(())
}

/// Free evolution `τ⁰_t(a^#(g₁)⋯a^#(g_M)) = a^#(e^{itT}g₁)⋯` computed on the grid.
/// The out-of-span parts of the evolved functions are appended as extra kept modes,
/// so the result is exact on the enlarged mode algebra.
pub fn free_evolved_monomial(
    op: &OneBodyOperator,
    basis: &ModeBasis,
    factors: &[LocalFactor],
    t: f64,
) -> Result<(ModeBasis, FockOperator)> {
    if factors.is_empty() {
        return Err(Error::Parameter("empty monomial".into()));
    }
    let evolved = factors
        .iter()
        .map(|f| if t == 0.0 { Ok(f.g.clone()) } else { op.propagate(&f.g, -t, Method::Spectral) })
        .collect::<Result<Vec<_>>>()?;
    let ext = basis.extended(&evolved)?;
    let mut prod = FockOperator::identity(ext.len())?;
    for (f, g) in factors.iter().zip(&evolved) {
        let lad = if f.dagger { ext.adag_of(g)? } else { ext.a_of(g)? };
        prod = prod.mul(&lad)?;
    }
    Ok((ext, prod))
}
