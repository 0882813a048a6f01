// Copyright 2026 Lightcone Lab Contributors
// SPDX-License-Identifier: Apache-2.0

//! The experiments behind each CLI subcommand. Each returns typed rows; the
//! runner serializes them.

use lightcone_core::bounds::{
    fit_constants, rhs_envelope, xi_mb, ConstantReport, FittedConstants, InteractionSpec,
};
use lightcone_core::condexp::*;
use lightcone_core::fock::*;
use lightcone_core::grid::{decay_envelope, make_gaussian, Grid, GridFunction, Normalization};
use lightcone_core::onebody::{
    light_cone_radius, light_cone_slope, overlap_scan, EnergyCutoff, OneBodyOperator, Probe, ScanRow,
};
use lightcone_core::{Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

fn origin(grid: &Grid) -> Vec<f64> {
    vec![0.0; grid.dim()]
}

fn on_axis(grid: &Grid, x: f64) -> Vec<f64> {
    let mut p = origin(grid);
    p[0] = x;
    p
}

pub fn operator(cfg: &ExperimentConfig) -> Result<OneBodyOperator> {
    let grid = cfg.grid()?;
    OneBodyOperator::assemble(grid, cfg.model.kappa, &cfg.potential()?.sample(grid), false)
}

fn sorted_times(ts: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = ts.iter().map(|t| t.abs()).chain(std::iter::once(0.0)).collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeRow {
    pub t: f64,
    pub cone_radius: f64,
    pub slope: f64,
}

pub struct OnebodyOutput {
    pub rows: Vec<ScanRow>,
    pub slopes: Vec<SlopeRow>,
}

pub fn onebody_scan(cfg: &ExperimentConfig) -> Result<OnebodyOutput> {
    let op = operator(cfg)?;
    let grid = *op.grid();
    let x = origin(&grid);
    let phi = cfg.smearing()?.at(grid, &x)?;
    let probes: Vec<Probe> = cfg
        .sweep
        .distance
        .iter()
        .map(|&r| Probe { distance: r, f: GridFunction::shell_indicator(grid, &x, r, r + 1.0).normalized() })
        .collect();
    let (n, delta) = (cfg.bound.n, cfg.bound.delta);
    let chunks = cfg
        .sweep
        .t
        .par_iter()
        .map(|&t| overlap_scan(&op, &phi, &x, &probes, &[t], n, delta))
        .collect::<Result<Vec<_>>>()?;
    let slopes = cfg
        .sweep
        .t
        .par_iter()
        .filter_map(|&t| {
            light_cone_slope(&op, &phi, &x, t, n, delta, 12)
                .ok()
                .map(|fit| SlopeRow { t, cone_radius: light_cone_radius(t, n, delta), slope: fit.slope })
        })
        .collect();
    Ok(OnebodyOutput { rows: chunks.into_iter().flatten().collect(), slopes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationRow {
    pub energy: f64,
    pub alpha: f64,
    pub r: f64,
    pub big_r: f64,
    pub t: f64,
    pub c_e: f64,
    /// `(R − r)/(c_E + 1)`
    pub t_max: f64,
    pub norm: f64,
}

pub fn propagation_norm(cfg: &ExperimentConfig) -> Result<Vec<PropagationRow>> {
    let op = operator(cfg)?;
    let s = &cfg.sweep;
    let r = s.inner_radius;
    let mut points = Vec::new();
    for &e in &s.energy {
        for &a in &s.alpha {
            for &gap in &s.distance {
                for &t in &s.t {
                    points.push((e, a, gap, t));
                }
            }
        }
    }
    points
        .par_iter()
        .map(|&(energy, alpha, gap, t)| {
            let cutoff = EnergyCutoff::new(energy, alpha)?;
            let c_e = op.c_e(alpha, energy)?;
            let norm = op.propagation_norm(&cutoff, r, r + gap, t)?;
            Ok(PropagationRow { energy, alpha, r, big_r: r + gap, t, c_e, t_max: gap / (c_e + 1.0), norm })
        })
        .collect()
}

/// Centers `(k − (count−1)/2)·spacing`, `k < count`.
pub fn symmetric_lattice(count: usize, spacing: f64) -> Vec<f64> {
    (0..count).map(|k| (k as f64 - (count as f64 - 1.0) / 2.0) * spacing).collect()
}

fn mode_basis(cfg: &ExperimentConfig, grid: Grid) -> Result<ModeBasis> {
    let centers: Vec<Vec<f64>> =
        symmetric_lattice(cfg.fock.modes, cfg.fock.mode_spacing).iter().map(|&c| on_axis(&grid, c)).collect();
    ModeBasis::gaussian_chain(grid, &centers, cfg.fock.mode_sigma)
}

/// Many-body model of the config, with interaction centers restricted to `|x| ≤ half_width`
/// and `Λ` set to that box when a half-width is given.
pub fn many_body(cfg: &ExperimentConfig, op: &OneBodyOperator, half_width: Option<f64>) -> Result<ManyBody> {
    let grid = *op.grid();
    let basis = mode_basis(cfg, grid)?;
    let centers: Vec<Vec<f64>> = symmetric_lattice(cfg.fock.centers, cfg.fock.center_spacing)
        .into_iter()
        .filter(|c| half_width.map_or(true, |w| c.abs() <= w + 1e-12))
        .map(|c| on_axis(&grid, c))
        .collect();
    let lambda = half_width.map(|w| box_mask(grid, -w, w));
    let spec =
        ModelSpec::from_operator(basis, op, cfg.interaction()?, cfg.smearing()?, centers, cfg.fock.weight, lambda)?;
    check_loss("smeared centers", spec.projection_loss())?;
    ManyBody::new(spec)
}

/// Largest out-of-span fraction tolerated for functions lifted to the mode space.
pub const MAX_PROJECTION_LOSS: f64 = 0.05;

fn check_loss(what: &str, loss: f64) -> Result<()> {
    if loss > MAX_PROJECTION_LOSS {
        return Err(Error::Hypothesis(format!(
            "{what}: projection loss {loss:.3} exceeds {MAX_PROJECTION_LOSS}"
        )));
    }
    Ok(())
}

pub fn fitted_constants(cfg: &ExperimentConfig, op: &OneBodyOperator) -> Result<FittedConstants> {
    let grid = *op.grid();
    let w = InteractionSpec::from_profile(grid, &cfg.interaction()?, cfg.interaction.n_w)?;
    fit_constants(
        op,
        &w,
        &cfg.smearing()?,
        cfg.bound.n,
        cfg.bound.delta,
        &sorted_times(&cfg.sweep.t),
        &cfg.sweep.fit_distance,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManybodyRow {
    pub t: f64,
    pub dist: f64,
    #[serde(rename = "F_t")]
    pub f_t: f64,
    pub bound_rhs: f64,
    pub ratio: f64,
    pub projection_loss: f64,
    #[serde(rename = "M")]
    pub modes: usize,
    pub centers: usize,
}

pub struct ManybodyOutput {
    pub rows: Vec<ManybodyRow>,
    pub constants: FittedConstants,
}

pub fn manybody_scan(cfg: &ExperimentConfig) -> Result<ManybodyOutput> {
    let op = operator(cfg)?;
    let grid = *op.grid();
    let mb = many_body(cfg, &op, None)?;
    let constants = fitted_constants(cfg, &op)?;
    let params = constants.bound_params(cfg.bound.n, cfg.bound.delta);
    let basis = mb.spec().basis();
    let f = make_gaussian(grid, cfg.fock.mode_sigma, &on_axis(&grid, cfg.fock.probe), Normalization::L2)?;
    let probes = cfg
        .sweep
        .distance
        .iter()
        .map(|&d| {
            let g = make_gaussian(grid, cfg.fock.mode_sigma, &on_axis(&grid, cfg.fock.probe + d), Normalization::L2)?;
            let loss = basis.projection_loss(&f)?.max(basis.projection_loss(&g)?);
            check_loss(&format!("probe pair at distance {d}"), loss)?;
            Ok((d, g, loss))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut points = Vec::new();
    for &t in &cfg.sweep.t {
        for k in 0..probes.len() {
            points.push((t, k));
        }
    }
    let n = cfg.bound.n;
    let rows = points
        .par_iter()
        .map(|&(t, k)| {
            let (d, g, loss) = &probes[k];
            let value = mb.f_t(&f, g, t)?.value;
            let bound = (xi_mb(t, &params, grid.dim()) * rhs_envelope(&f, g, n, t)?).sqrt();
            Ok(ManybodyRow {
                t,
                dist: *d,
                f_t: value,
                bound_rhs: bound,
                ratio: if value == 0.0 { 0.0 } else { value / bound },
                projection_loss: *loss,
                modes: basis.len(),
                centers: mb.spec().centers().len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ManybodyOutput { rows, constants })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub check: String,
    pub sample: usize,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRow {
    fn new(check: &str, sample: usize, value: f64, tolerance: f64) -> Self {
        Self { check: check.into(), sample, value, tolerance, pass: value <= tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationRow {
    pub t: f64,
    pub c_x: f64,
    pub depth: usize,
    pub lhs: f64,
    pub envelope: f64,
    pub ratio: f64,
}

pub struct CondexpOutput {
    pub checks: Vec<CheckRow>,
    pub localization: Vec<LocalizationRow>,
    pub plans: Vec<KrausPlan>,
}

pub fn random_operator(rng: &mut ChaCha8Rng, modes: usize) -> Result<FockOperator> {
    let d = 1usize << modes;
    let mut entries = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            entries.push((i, j, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
        }
    }
    FockOperator::from_triplets(modes, entries)
}

pub fn even_part(a: &FockOperator) -> Result<FockOperator> {
    let p = FockOperator::parity_operator(a.modes())?;
    Ok(a.add(&p.mul(a)?.mul(&p)?)?.scale(Complex64::new(0.5, 0.0)))
}

fn monomial(factors: &[(bool, usize)], modes: usize) -> Result<FockOperator> {
    let mut op = FockOperator::identity(modes)?;
    for &(d, k) in factors {
        let f = if d { FockOperator::creator(k, modes)? } else { FockOperator::annihilator(k, modes)? };
        op = op.mul(&f)?;
    }
    Ok(op)
}

/// Contractivity, idempotence, tracial values, odd annihilation, Tomiyama and the
/// literal-sum equivalence on seeded random operators.
pub fn condexp_suite(cfg: &ExperimentConfig) -> Result<Vec<CheckRow>> {
    let c = &cfg.condexp;
    let m = c.modes;
    let plan = KrausPlan::new(m, (m - c.depth..m).rev().collect(), c.depth)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let samples: Vec<[FockOperator; 4]> = (0..c.samples)
        .map(|_| {
            Ok([
                random_operator(&mut rng, m)?,
                random_operator(&mut rng, m)?,
                random_operator(&mut rng, m)?,
                random_operator(&mut rng, m)?,
            ])
        })
        .collect::<Result<_>>()?;
    let per_sample = samples
        .par_iter()
        .enumerate()
        .map(|(k, [a, x, y, z])| {
            let e = conditional_expectation(a, &plan)?;
            let ee = conditional_expectation(&e, &plan)?;
            let even_a = even_part(x)?;
            let b = conditional_expectation(&even_part(y)?, &plan)?;
            let cc = conditional_expectation(&even_part(z)?, &plan)?;
            let mut rows = vec![
                CheckRow::new("contractivity", k, e.norm() - a.norm(), 1e-10),
                CheckRow::new("idempotence", k, ee.max_abs_diff(&e)?, 1e-10),
                CheckRow::new("tomiyama", k, tomiyama_check(&even_a, &b, &cc, &plan)?, 1e-10),
            ];
            if plan.depth <= LITERAL_DEPTH_CAP && k < 5 {
                let lit = conditional_expectation_literal(a, &plan)?;
                rows.push(CheckRow::new("literal-sum", k, lit.max_abs_diff(&e)?, 1e-12));
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<CheckRow> = per_sample.into_iter().flatten().collect();
    let full = KrausPlan::new(m, (0..m).collect(), m)?;
    let id = FockOperator::identity(m)?;
    let half = id.scale(Complex64::new(0.5, 0.0));
    let quarter = id.scale(Complex64::new(0.25, 0.0));
    let n0 = monomial(&[(true, 0), (false, 0)], m)?;
    rows.push(CheckRow::new("tracial-1/2", 0, conditional_expectation(&n0, &full)?.max_abs_diff(&half)?, 1e-12));
    rows.push(CheckRow::new("tracial-1/2", 1, (tracial_state(&[(true, 0), (false, 0)], m)? - 0.5).norm(), 1e-12));
    if m >= 2 {
        let pair = [(true, 0), (true, 1), (false, 1), (false, 0)];
        let p = monomial(&pair, m)?;
        rows.push(CheckRow::new("tracial-1/4", 0, conditional_expectation(&p, &full)?.max_abs_diff(&quarter)?, 1e-12));
        rows.push(CheckRow::new("tracial-1/4", 1, (tracial_state(&pair, m)? - 0.25).norm(), 1e-12));
    }
    for (k, &n) in plan.averaged().iter().enumerate() {
        for d in [true, false] {
            let odd = monomial(&[(d, n)], m)?;
            rows.push(CheckRow::new("odd-annihilation", 2 * k + d as usize, conditional_expectation(&odd, &plan)?.max_abs(), 0.0));
        }
    }
    Ok(rows)
}

/// Basis for the localization sweep: two compact modes inside `X = [−w, w]` and compact
/// modes at `outer_centers` outside it. Returns the basis, the mask of `X` and `A = a†(m₀) a(m₁)`.
pub fn ppt_geometry(cfg: &ExperimentConfig) -> Result<(ModeBasis, Vec<bool>, Vec<LocalFactor>)> {
    let grid = cfg.grid()?;
    let c = &cfg.condexp;
    let w = c.x_half_width;
    let rx = c.x_mode_radius;
    let mut seeds = vec![
        smooth_bump(grid, rx, &on_axis(&grid, -rx))?,
        smooth_bump(grid, rx, &on_axis(&grid, rx))?,
    ];
    let mut tags = vec![ModeTag::at("x0", &on_axis(&grid, -rx)), ModeTag::at("x1", &on_axis(&grid, rx))];
    for (k, &x) in c.outer_centers.iter().enumerate() {
        seeds.push(smooth_bump(grid, c.outer_radius, &on_axis(&grid, x))?);
        tags.push(ModeTag::at(format!("outer{k}"), &on_axis(&grid, x)));
    }
    let basis = ModeBasis::from_seeds(seeds, tags)?;
    let mask = box_mask(grid, -w, w);
    let factors = vec![
        LocalFactor { dagger: true, g: basis.modes()[0].clone() },
        LocalFactor { dagger: false, g: basis.modes()[1].clone() },
    ];
    check_local(&factors, &mask)?;
    Ok((basis, mask, factors))
}

/// `‖τ⁰_t(A) − 𝔼_X(τ⁰_t(A))‖` over `C_X × t`, with the envelope constant fitted as the largest
/// lhs/envelope ratio.
pub fn ppt_localization(cfg: &ExperimentConfig) -> Result<(Vec<LocalizationRow>, Vec<KrausPlan>)> {
    let c = &cfg.condexp;
    let op = operator(cfg)?;
    let (basis, mask, factors) = ppt_geometry(cfg)?;
    let plans = c
        .c_x
        .iter()
        .map(|&cx| build_ppt_plan(&mask, &basis, cx, c.c_j, c.n))
        .collect::<Result<Vec<_>>>()?;
    let constants = fitted_constants(cfg, &op)?;
    let params = constants.bound_params(c.n, cfg.bound.delta);
    let evolved = cfg
        .sweep
        .t
        .par_iter()
        .map(|&t| free_evolved_monomial(&op, &basis, &factors, t))
        .collect::<Result<Vec<_>>>()?;
    let mut raw = Vec::new();
    for (plan, &cx) in plans.iter().zip(&c.c_x) {
        for ((ext, a_t), &t) in evolved.iter().zip(&cfg.sweep.t) {
            let lhs = localization_error(a_t, &plan.on_modes(ext.len())?)?;
            let xi = xi_mb(t, &params, basis.grid().dim());
            let unit = ppt_envelope(t, 1.0, xi, constants.c_ob1, cfg.bound.delta, c.n, cx);
            raw.push((t, cx, plan.depth, lhs, unit));
        }
    }
    let c_fit = raw.iter().filter(|r| r.4 > 0.0).map(|r| r.3 / r.4).fold(0.0, f64::max);
    let rows = raw
        .into_iter()
        .map(|(t, c_x, depth, lhs, unit)| {
            let envelope = c_fit * unit;
            LocalizationRow { t, c_x, depth, lhs, envelope, ratio: if lhs == 0.0 { 0.0 } else { lhs / envelope } }
        })
        .collect();
    Ok((rows, plans))
}

pub fn condexp_check(cfg: &ExperimentConfig) -> Result<CondexpOutput> {
    let checks = condexp_suite(cfg)?;
    let (localization, plans) = ppt_localization(cfg)?;
    Ok(CondexpOutput { checks, localization, plans })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRow {
    pub t: f64,
    pub distance: f64,
    pub decay_envelope: f64,
    pub xi_mb: f64,
}

pub struct ConstantsOutput {
    pub constants: FittedConstants,
    pub reports: Vec<ConstantReport>,
    pub envelope: Vec<EnvelopeRow>,
}

pub fn constants_report(cfg: &ExperimentConfig) -> Result<ConstantsOutput> {
    let op = operator(cfg)?;
    let constants = fitted_constants(cfg, &op)?;
    let params = constants.bound_params(cfg.bound.n, cfg.bound.delta);
    let d = op.grid().dim();
    let mut envelope = Vec::new();
    for &t in &cfg.sweep.t {
        for &r in &cfg.sweep.fit_distance {
            envelope.push(EnvelopeRow {
                t,
                distance: r,
                decay_envelope: decay_envelope(cfg.bound.n, t, r)?,
                xi_mb: xi_mb(t, &params, d),
            });
        }
    }
    Ok(ConstantsOutput { reports: constants.reports.clone(), constants, envelope })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringRow {
    pub b: f64,
    pub mode: usize,
    pub distance: f64,
    pub gap: f64,
    pub value: f64,
    /// `e^{−bγ}`
    pub decay: f64,
}

pub fn clustering(cfg: &ExperimentConfig) -> Result<Vec<ClusteringRow>> {
    let op = operator(cfg)?;
    let mb = many_body(cfg, &op, None)?;
    let gs = mb.ground_state()?;
    let basis = mb.spec().basis();
    let a = basis.a_of(&basis.modes()[0])?;
    let x0 = basis.tags()[0].center.clone();
    let grid = *basis.grid();
    let mut points = Vec::new();
    for &b in &cfg.sweep.b {
        for k in 0..basis.len() {
            points.push((b, k));
        }
    }
    points
        .par_iter()
        .map(|&(b, k)| {
            let bop = basis.adag_of(&basis.modes()[k])?;
            let value = mb.interacting().clustering_probe(&gs, &a, &bop, b)?.norm();
            Ok(ClusteringRow {
                b,
                mode: k,
                distance: grid.distance(&basis.tags()[k].center, &x0),
                gap: gs.gap,
                value,
                decay: (-b * gs.gap).exp(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeOutRow {
    pub t: f64,
    pub k: usize,
    pub region: f64,
    pub difference: f64,
}

pub fn volume_convergence_rows(cfg: &ExperimentConfig) -> Result<Vec<VolumeOutRow>> {
    let op = operator(cfg)?;
    let grid = *op.grid();
    let mut regions = cfg.fock.regions.clone();
    regions.sort_by(f64::total_cmp);
    let models = regions
        .par_iter()
        .map(|&w| many_body(cfg, &op, Some(w)))
        .collect::<Result<Vec<_>>>()?;
    let f = make_gaussian(grid, cfg.fock.mode_sigma, &origin(&grid), Normalization::L2)?;
    check_loss("probe", models[0].spec().basis().projection_loss(&f)?)?;
    let rows = volume_convergence(&models, &f, &cfg.sweep.t)?;
    Ok(rows
        .into_iter()
        .map(|r| VolumeOutRow { t: r.t, k: r.k, region: regions[r.k], difference: r.difference })
        .collect())
}

/// `(max − min)/max` of the finite positive ratios, the spread of the fitted constant.
pub fn ratio_spread(ratios: &[f64]) -> Result<(f64, f64, f64)> {
    let finite: Vec<f64> = ratios.iter().copied().filter(|r| r.is_finite() && *r > 0.0).collect();
    if finite.is_empty() {
        return Err(Error::Numerical("no finite positive ratios".into()));
    }
    let max = finite.iter().copied().fold(0.0, f64::max);
    let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((min, max, (max - min) / max))
}
