// Copyright 2026 Lightcone Lab Contributors
// SPDX-License-Identifier: Apache-2.0

use lightcone_core::bounds::*;
use lightcone_core::grid::{jbracket, make_gaussian, Grid, GridFunction, Normalization, SmearingFunction};
use lightcone_core::onebody::{EnergyCutoff, Method, OneBodyOperator, Potential};
use num_complex::Complex64;
use proptest::prelude::*;
use statrs::function::gamma::gamma;

#[test]
fn norm_of_constant_matches_antiderivative() {
    let one = |_: f64, order: usize| {
        let mut v = vec![0.0; order + 1];
        v[0] = 1.0;
        v
    };
    let prof = SmoothProfile { derivatives: &one, breakpoints: vec![-1.0, 3.0] };
    // x/√(1+x²) runs from −1 to 1
    let closed = 1.0 - (-1.0);
    assert!((norm_np(&prof, 0, 2.0).unwrap() - closed).abs() < 1e-8);
}

#[test]
fn iota_matches_gamma_closed_form() {
    for k in [0.5, 1.0, 1.5, 2.0, 3.0, 4.5] {
        let closed = std::f64::consts::PI.sqrt() * gamma(k / 2.0) / gamma((k + 1.0) / 2.0);
        assert!((iota(k).unwrap() - closed).abs() < 1e-9 * closed, "k = {k}");
    }
    assert!((iota(2.0).unwrap() - 2.0).abs() < 1e-10);
}

#[test]
fn corg_e_dominates_norm_on_lattice() {
    let sup = smooth_step_sup_norms(6);
    let mut checked = 0;
    for e in [1.0, 4.0, 16.0] {
        for n in [0usize, 1, 2] {
            for p in [0.5, 1.0, 2.0] {
                let c = EnergyCutoff::new(e, 2.0).unwrap();
                let lhs = cutoff_norm_np(&c, n, p).unwrap();
                let rhs = corg_e_bound(&sup, 2.0, e, n, p).unwrap();
                assert!(lhs <= rhs, "E = {e}, n = {n}, p = {p}: {lhs} > {rhs}");
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 27);
    let c = EnergyCutoff::new(1.0, 2.0).unwrap();
    assert!(cutoff_norm_np(&c, 2, 1.0).unwrap() <= corg_e_bound(&sup, 2.0, 1.0, 2, 1.0).unwrap());
}

#[test]
fn corg_e_is_non_increasing_in_energy() {
    let sup = smooth_step_sup_norms(5);
    for (n, p) in [(1usize, 0.5), (2, 1.0), (3, 2.5)] {
        let mut prev = f64::INFINITY;
        for i in 0..40 {
            let e = 0.25 * 1.25f64.powi(i);
            let b = corg_e_bound(&sup, 2.0, e, n, p).unwrap();
            assert!(b <= prev * (1.0 + 1e-12), "n = {n}, p = {p}, E = {e}");
            prev = b;
        }
    }
}

#[test]
fn convolution_lemma_for_inverse_square_profiles() {
    let g = Grid::new(1, 1 << 15, 4096.0).unwrap();
    let env = PolyDecay { c: 1.0, exponent: 2.0, scale: 1.0 };
    let chk = convolution_decay_check(g, env, env, 32.0).unwrap();
    assert!(chk.passed && chk.fitted.is_finite(), "{chk:?}");
    // ∫(1 ∨ |y|)^{-4} dy = 2 + 2/3; the grid sum is a trapezoid rule across the
    // kinks at |y| = 1, whose error is h²/12 times the total jump of the derivative (8)
    let h = g.spacing();
    assert!((chk.value_at_zero - 8.0 / 3.0).abs() < h * h, "{}", chk.value_at_zero);
    assert!(chk.value_at_zero <= chk.zero_bound);
    assert!(chk.asymmetry < 1e-12);
}

/// Composite Simpson rule, independent of the adaptive integrator.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn integral_lemma_instances() {
    let (ok, rows) = integral_lemma_check(1.0, 1.0, 0, &[1.0]).unwrap();
    let oracle = simpson(|s| jbracket(1.0 - s) * jbracket(s), 0.0, 1.0, 2000);
    assert!(ok && (rows[0].lhs - oracle).abs() < 1e-10 && (rows[0].rhs - 2.0).abs() < 1e-14);
    let delta = 0.5;
    let (ok, rows) = integral_lemma_check(1.0 + 2.0 * delta, 2.0, 3, &[2.0]).unwrap();
    let oracle = simpson(|s| jbracket(2.0 - s).powf(2.0) * jbracket(s).powf(2.0) * s.powi(3), 0.0, 2.0, 4000);
    assert!(ok && (rows[0].lhs - oracle).abs() < 1e-8 * oracle);
    let (ok, rows) = integral_lemma_check(1.0, 2.0, 1, &[1e-6]).unwrap();
    assert!(ok && rows[0].lhs <= rows[0].rhs);
}

#[test]
fn integral_lemma_full_sweep() {
    let ts: Vec<f64> = (0..30).map(|i| 0.01 * 1.3f64.powi(i)).collect();
    for a in [0.25, 1.0, 2.0, 3.5] {
        for b in [0.25, 1.0, 2.0, 3.5] {
            for k in 0..5 {
                let (ok, _) = integral_lemma_check(a, b, k, &ts).unwrap();
                assert!(ok, "alpha = {a}, beta = {b}, k = {k}");
            }
        }
    }
}

fn setup() -> (OneBodyOperator, SmearingFunction) {
    let g = Grid::new(1, 256, 64.0).unwrap();
    let v = Potential::Cosine { amplitude: 0.5, wavelength: Some(8.0) }.sample(g);
    (OneBodyOperator::assemble(g, 0.5, &v, false).unwrap(), SmearingFunction::gaussian(1.0).unwrap())
}

#[test]
fn kernel_zero_interaction_and_point_mass() {
    let (op, phi) = setup();
    let g = *op.grid();
    let f = make_gaussian(g, 1.5, &[4.0], Normalization::L2).unwrap();
    let zero = InteractionSpec::from_profile(g, &InteractionProfile::Zero, 2);
    // an all-zero profile has c_W = 0, which the constructor clamps to the smallest positive value
    let zero = zero.unwrap();
    let k = kernel_kt(&op, &f, &zero, &phi, 0.8).unwrap();
    assert!(k.sup_norm() == 0.0);

    let w = 0.3;
    let mut vals = vec![0.0; g.len()];
    vals[g.len() / 2] = w / g.spacing();
    let point = InteractionSpec::new(GridFunction::from_real(g, &vals).unwrap(), w / g.spacing(), 1).unwrap();
    let k = kernel_kt(&op, &f, &point, &phi, 0.8).unwrap();
    let psi = op.propagate(&f, 0.8, Method::Spectral).unwrap();
    for i in (0..g.len()).step_by(17) {
        let x = g.point(i);
        let direct = psi.inner(&phi.at(g, &x[..1]).unwrap()).unwrap().norm();
        assert!((k.values()[i].re - 2.0 * w * direct).abs() < 1e-12);
    }
}

#[test]
fn kernel_vanishes_for_function_orthogonal_to_smearing() {
    let (op, phi) = setup();
    let g = *op.grid();
    // the Nyquist mode is invisible to a well-resolved Gaussian
    let f = GridFunction::from_fn(g, |y| Complex64::new((std::f64::consts::PI * y[0] / g.spacing()).cos(), 0.0)).normalized();
    let w = InteractionSpec::from_profile(g, &InteractionProfile::Gaussian { strength: 1.0, range: 1.0 }, 2).unwrap();
    let k = kernel_kt(&op, &f, &w, &phi, 0.0).unwrap();
    assert!(k.sup_norm() < 1e-12, "{}", k.sup_norm());
}

#[test]
fn xi_is_monotone_for_positive_times() {
    let p = BoundParams::default();
    let mut prev = 0.0;
    for i in 1..200 {
        let t = 0.01 * i as f64;
        let v = xi_mb(t, &p, 1);
        assert!(v > prev);
        prev = v;
    }
}

fn pair(g: Grid, a: f64, b: f64) -> (GridFunction, GridFunction) {
    (make_gaussian(g, 1.0, &[a], Normalization::L2).unwrap(), make_gaussian(g, 1.0, &[b], Normalization::L2).unwrap())
}

#[test]
fn series_terms_shrink_and_resum_below_xi() {
    let g = Grid::new(1, 256, 64.0).unwrap();
    let (f, h) = pair(g, -5.0, 5.0);
    let params = BoundParams { c_ob0: 0.8, c_nw: 0.6, c_phi: 1.1, ..BoundParams::default() }.with_resummed(1.0);
    for t in [0.5, 1.0, 2.0] {
        let s = series_terms(40, t, &params, 1.0, &f, &h).unwrap();
        let total: f64 = s.main.iter().sum();
        assert!(total <= xi_mb(t, &params, 1) * s.envelope * (1.0 + 1e-12), "t = {t}");
        let Some(k_star) = s.k_star else {
            // the ratio ~ 2C⟨t⟩^{1+2δ+3d}t²/(2k+1) only drops below one past k = 40 here
            assert_eq!(t, 2.0);
            continue;
        };
        // consecutive ratios tend to zero
        let r1 = s.main[k_star] / s.main[k_star - 1];
        let r2 = s.main[39] / s.main[38];
        assert!(r2 < r1 && r2 < 0.2, "t = {t}: {r1}, {r2}");
        // Cauchy: increments decrease beyond k*
        for k in k_star..39 {
            assert!(s.main[k + 1] <= s.main[k]);
        }
        assert!(s.remainder[39] < s.remainder[20] && s.remainder[39] < 1e-6);
    }
}

#[test]
fn envelope_far_apart_and_overlapping() {
    let g = Grid::new(1, 1024, 256.0).unwrap();
    let f = make_gaussian(g, 0.5, &[-10.0], Normalization::L2).unwrap();
    let h = make_gaussian(g, 0.5, &[10.0], Normalization::L2).unwrap();
    let t = 0.5;
    let v = rhs_envelope(&f, &h, 2, t).unwrap();
    let approx = (jbracket(t) / 20.0).powi(2);
    assert!((v / approx - 1.0).abs() < 0.01, "{v} vs {approx}");
    let (a, b) = pair(g, 0.0, 0.5);
    assert!(rhs_envelope(&a, &b, 2, t).unwrap() <= 1.0 + 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn envelope_two_paths_agree(seed in proptest::collection::vec(-1.0f64..1.0, 128), n in 1i64..5, t in 0.0f64..3.0) {
        let g = Grid::new(1, 64, 24.0).unwrap();
        let f = GridFunction::new(g, seed[..64].iter().map(|&v| Complex64::new(v, 0.3 * v)).collect()).unwrap();
        let h = GridFunction::new(g, seed[64..].iter().map(|&v| Complex64::new(v, -v * v)).collect()).unwrap();
        let a = rhs_envelope(&f, &h, n, t).unwrap();
        let b = rhs_envelope_convolved(&f, &h, n, t).unwrap();
        prop_assert!((a - b).abs() < 1e-10 * a.max(1.0));
        prop_assert!((a - rhs_envelope(&h, &f, n, t).unwrap()).abs() < 1e-12 * a.max(1.0));
        // evaluators are pure
        prop_assert_eq!(a.to_bits(), rhs_envelope(&f, &h, n, t).unwrap().to_bits());
        prop_assert_eq!(xi_mb(t, &BoundParams::default(), 1).to_bits(), xi_mb(t, &BoundParams::default(), 1).to_bits());
    }
}
