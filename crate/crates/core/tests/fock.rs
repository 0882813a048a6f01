// Copyright 2026 Lightcone Lab Contributors
// SPDX-License-Identifier: Apache-2.0

use lightcone_core::bounds::InteractionProfile;
use lightcone_core::fock::*;
use lightcone_core::grid::{make_gaussian, Grid, Normalization, SmearingFunction};
use lightcone_core::linalg::{eigh, to_c64, to_complex, CMat};
use lightcone_core::onebody::{OneBodyOperator, Potential};
use lightcone_core::Error;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cz(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_coeffs(rng: &mut ChaCha8Rng, m: usize) -> Vec<Complex64> {
    (0..m).map(|_| cz(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn chain(m: usize, strength: f64) -> ManyBody {
    let g = Grid::new(1, 256, 32.0).unwrap();
    let op = OneBodyOperator::assemble(g, 0.5, &Potential::Zero.sample(g), false).unwrap();
    let centers: Vec<Vec<f64>> = (0..m).map(|k| vec![2.0 * k as f64 - (m as f64 - 1.0)]).collect();
    let basis = ModeBasis::gaussian_chain(g, &centers, 1.0).unwrap();
    let cs: Vec<Vec<f64>> = centers[1..m - 1].iter().take(MAX_CENTERS).cloned().collect();
    let spec = ModelSpec::from_operator(
        basis,
        &op,
        InteractionProfile::Gaussian { strength, range: 1.0 },
        SmearingFunction::gaussian(1.0).unwrap(),
        cs,
        2.0,
        None,
    )
    .unwrap();
    ManyBody::new(spec).unwrap()
}

#[test]
fn car_relations_are_exact_for_ten_modes() {
    let m = 10;
    let a: Vec<_> = (0..m).map(|j| FockOperator::annihilator(j, m).unwrap()).collect();
    let id = FockOperator::identity(m).unwrap();
    let zero = FockOperator::zero(m).unwrap();
    for j in 0..m {
        for k in 0..m {
            let aa = a[j].anticommutator(&a[k]).unwrap();
            assert!(aa.max_abs_diff(&zero).unwrap() <= 1e-14);
            let ad = a[j].anticommutator(&a[k].adjoint()).unwrap();
            let target = if j == k { &id } else { &zero };
            assert!(ad.max_abs_diff(target).unwrap() <= 1e-14, "({j}, {k})");
        }
        let mut vacuum = vec![cz(0.0, 0.0); 1 << m];
        vacuum[0] = cz(1.0, 0.0);
        assert!(a[j].apply(&vacuum).unwrap().iter().all(|z| z.norm() == 0.0));
        assert_eq!(a[j].norm(), 1.0);
    }
    assert!(matches!(FockOperator::annihilator(10, 10), Err(Error::IndexOutOfRange { .. })));
    assert!(matches!(FockOperator::annihilator(0, 15), Err(Error::Capacity(_))));
}

#[test]
fn parity_grading_of_monomials() {
    let m = 5;
    let p = FockOperator::parity_operator(m).unwrap();
    for j in 0..m {
        let a = FockOperator::annihilator(j, m).unwrap();
        assert_eq!(a.parity(), Parity::Odd);
        assert!(a.anticommutator(&p).unwrap().max_abs() <= 1e-12);
        let pair = a.mul(&FockOperator::creator((j + 2) % m, m).unwrap()).unwrap();
        assert_eq!(pair.parity(), Parity::Even);
        assert!(pair.commutator(&p).unwrap().max_abs() <= 1e-12);
    }
}

#[test]
fn smeared_ladders_follow_the_car() {
    let g = Grid::new(1, 128, 24.0).unwrap();
    let centers: Vec<Vec<f64>> = (0..6).map(|k| vec![-7.5 + 3.0 * k as f64]).collect();
    let basis = ModeBasis::gaussian_chain(g, &centers, 1.2).unwrap();
    assert!(basis.gram_error().unwrap() < 1e-10);
    // f = m_0 gives a_0
    let a0 = basis.a_of(&basis.modes()[0]).unwrap();
    assert!(a0.max_abs_diff(&FockOperator::annihilator(0, 6).unwrap()).unwrap() < 1e-14);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let cf = random_coeffs(&mut rng, 6);
        let cg = random_coeffs(&mut rng, 6);
        let f = basis.synthesize(&cf).unwrap();
        let h = basis.synthesize(&cg).unwrap();
        let car = basis.a_of(&f).unwrap().anticommutator(&basis.adag_of(&h).unwrap()).unwrap();
        let ip = f.inner(&h).unwrap();
        let target = FockOperator::identity(6).unwrap().scale(ip);
        assert!(car.max_abs_diff(&target).unwrap() < 1e-12);
        // antilinearity
        let ai = basis.a_of(&f.scaled(cz(0.0, 1.0))).unwrap();
        let minus_i = basis.a_of(&f).unwrap().scale(cz(0.0, -1.0));
        assert!(ai.max_abs_diff(&minus_i).unwrap() < 1e-14);
        assert!((basis.a_of(&f).unwrap().norm() - f.l2_norm()).abs() < 1e-12);
    }
    // out-of-span mass is dropped and reported
    let far = make_gaussian(g, 0.5, &[11.0], Normalization::L2).unwrap();
    let loss = basis.projection_loss(&far).unwrap();
    assert!(loss > 0.5);
    let kept = (1.0 - loss).sqrt() * far.l2_norm();
    assert!((basis.a_of(&far).unwrap().norm() - kept).abs() < 1e-10);
}

fn random_hermitian(rng: &mut ChaCha8Rng, m: usize) -> CMat {
    let raw = CMat::from_fn(m, m, |_, _| to_c64(cz(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
    CMat::from_fn(m, m, |i, j| (raw[(i, j)] + raw[(j, i)].conj()) * 0.5)
}

#[test]
fn second_quantization_properties() {
    let m = 5;
    let id = CMat::from_fn(m, m, |i, j| to_c64(cz(if i == j { 1.0 } else { 0.0 }, 0.0)));
    let n = second_quantize(&id).unwrap();
    assert_eq!(n.max_abs_diff(&FockOperator::number(m).unwrap()).unwrap(), 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let a = random_hermitian(&mut rng, m);
    let da = second_quantize(&a).unwrap();
    // vacuum is annihilated; the one-particle block is A
    let mut vacuum = vec![cz(0.0, 0.0); 1 << m];
    vacuum[0] = cz(1.0, 0.0);
    assert!(da.apply(&vacuum).unwrap().iter().all(|z| z.norm() == 0.0));
    let dense = da.to_dense();
    for j in 0..m {
        for k in 0..m {
            assert!((dense[(1 << j, 1 << k)] - a[(j, k)]).abs() < 1e-12);
        }
    }
    let mut bad = a.clone();
    bad[(0, 1)] += to_c64(cz(0.5, 0.0));
    assert!(matches!(second_quantize(&bad), Err(Error::Model(_))));

    // e^{it dΓ(A)} a†(f) e^{−it dΓ(A)} = a†(e^{itA} f)
    let evo = Evolution::new(&da).unwrap();
    let (vals, vecs) = eigh(&a);
    let cf = random_coeffs(&mut rng, m);
    for t in [0.3, 1.7, -2.2] {
        let lhs = evo.heisenberg(&ladder_from(true, &cf).unwrap(), t).unwrap();
        let u = CMat::from_fn(m, m, |i, j| {
            (0..m).map(|e| vecs[(i, e)] * to_c64(Complex64::from_polar(1.0, t * vals[e])) * vecs[(j, e)].conj()).sum()
        });
        let evolved: Vec<Complex64> = (0..m).map(|i| (0..m).map(|j| to_complex(u[(i, j)]) * cf[j]).sum()).collect();
        let rhs = ladder_from(true, &evolved).unwrap();
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-10, "t = {t}");
    }
}

#[test]
fn hamiltonian_assembly() {
    let free = chain(6, 0.0);
    assert_eq!(
        free.hamiltonian().max_abs_diff(&free.spec().free_hamiltonian().unwrap()).unwrap(),
        0.0
    );
    let mb = chain(6, 0.7);
    let h = mb.hamiltonian();
    assert!(h.max_abs_diff(&h.adjoint()).unwrap() < 1e-10);
    let n = FockOperator::number(6).unwrap();
    assert!(h.commutator(&n).unwrap().max_abs() < 1e-10);
    assert_eq!(h.parity(), Parity::Even);

    // a single center: a(φ_x)a(φ_x) = 0
    let spec = mb.spec();
    let single = ModelSpec::new(
        spec.basis().clone(),
        spec.t_matrix().clone(),
        *spec.profile(),
        spec.smearing().clone(),
        vec![spec.centers()[1].clone()],
        2.0,
        None,
    )
    .unwrap();
    let diff = single.build_h().unwrap().sub(&single.free_hamiltonian().unwrap()).unwrap();
    assert!(diff.max_abs() < 1e-14, "{}", diff.max_abs());

    // centers outside the region are rejected
    let g = *spec.basis().grid();
    let mask = box_mask(g, -1.0, 1.0);
    let bad = ModelSpec::new(
        spec.basis().clone(),
        spec.t_matrix().clone(),
        *spec.profile(),
        spec.smearing().clone(),
        vec![vec![3.0]],
        2.0,
        Some(mask),
    );
    assert!(matches!(bad, Err(Error::Config(_))));
}

#[test]
fn heisenberg_dynamics_properties() {
    let mb = chain(6, 0.7);
    let basis = mb.spec().basis();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let b = ladder_from(false, &random_coeffs(&mut rng, 6))
        .unwrap()
        .mul(&ladder_from(true, &random_coeffs(&mut rng, 6)).unwrap())
        .unwrap();
    let evo = mb.interacting();
    assert_eq!(evo.heisenberg(&b, 0.0).unwrap().max_abs_diff(&b).unwrap(), 0.0);
    for t in [0.4, 1.3] {
        let bt = evo.heisenberg(&b, t).unwrap();
        assert!((bt.norm() - b.norm()).abs() < 1e-10 * b.norm());
        let composed = evo.heisenberg(&evo.heisenberg(&b, t).unwrap(), 0.7).unwrap();
        let direct = evo.heisenberg(&b, t + 0.7).unwrap();
        assert!(composed.max_abs_diff(&direct).unwrap() < 1e-9);
    }
    // {τ⁰_t(a(f)), a†(g)} = ⟨e^{itT}f, g⟩ = ⟨f, e^{−itT}g⟩ with T the mode matrix
    let tm = mb.spec().t_matrix();
    let (vals, vecs) = eigh(tm);
    for t in [0.5, 2.0] {
        let cf = random_coeffs(&mut rng, 6);
        let cg = random_coeffs(&mut rng, 6);
        let f = basis.synthesize(&cf).unwrap();
        let h = basis.synthesize(&cg).unwrap();
        let lhs = mb.free().heisenberg(&basis.a_of(&f).unwrap(), t).unwrap().anticommutator(&basis.adag_of(&h).unwrap()).unwrap();
        let m = 6;
        let evolved: Vec<Complex64> = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        let u: Complex64 = (0..m)
                            .map(|e| to_complex(vecs[(i, e)] * vecs[(j, e)].conj()) * Complex64::from_polar(1.0, t * vals[e]))
                            .sum();
                        u * cf[j]
                    })
                    .sum()
            })
            .collect();
        let ip: Complex64 = evolved.iter().zip(&cg).map(|(a, b)| a.conj() * b).sum();
        let target = FockOperator::identity(6).unwrap().scale(ip);
        assert!(lhs.max_abs_diff(&target).unwrap() < 1e-10);
    }
    let other = FockOperator::annihilator(0, 5).unwrap();
    assert!(matches!(evo.heisenberg(&other, 1.0), Err(Error::Shape(_))));
}

#[test]
fn ft_trivial_cases_and_trivial_bound() {
    let g = Grid::new(1, 256, 32.0).unwrap();
    let f = make_gaussian(g, 1.0, &[-3.0], Normalization::L2).unwrap();
    let h = make_gaussian(g, 1.0, &[1.0], Normalization::L2).unwrap();
    let mb = chain(6, 0.7);
    assert_eq!(mb.f_t(&f, &h, 0.0).unwrap().value, 0.0);
    let free = chain(6, 0.0);
    for t in [0.5, 1.0, 2.0] {
        assert_eq!(free.f_t(&f, &h, t).unwrap().value, 0.0);
        assert!(free.f_t_direct(&f, &h, t).unwrap().value < 1e-13);
        let s = mb.f_t(&f, &h, t).unwrap();
        assert!(s.value > 0.0 && s.value <= 6.0 * f.l2_norm() * h.l2_norm());
    }
}

fn slots(n: usize, daggers: &[bool], prefix: &str) -> Vec<Slot> {
    (0..n).map(|i| Slot { dagger: daggers[i], name: format!("{prefix}{}", i + 1) }).collect()
}

#[test]
fn rewriter_small_cases() {
    let e = expand_commutator(&slots(1, &[false], "a"), &slots(2, &[true, false], "b"), BracketMode::Commutator).unwrap();
    assert_eq!(e.term_count(), 2);
    assert_eq!(e.terms[0].sign, 1);
    assert_eq!(e.terms[0].anchors, vec![(0, 0)]);
    assert_eq!(e.terms[0].factors, vec![Factor::Rhs(1)]);
    assert_eq!(e.terms[1].sign, -1);
    assert_eq!(e.terms[1].anchors, vec![(0, 1)]);
    assert_eq!(e.terms[1].factors, vec![Factor::Rhs(0)]);
    assert_eq!(e.to_string(), "{a1,b1}b2 - b1{a1,b2}");

    let one = expand_commutator(&slots(1, &[false], "a"), &slots(1, &[true], "b"), BracketMode::Anticommutator).unwrap();
    assert_eq!(one.term_count(), 1);
    assert!(one.terms[0].factors.is_empty());

    assert!(matches!(
        expand_commutator(&slots(1, &[false], "a"), &slots(1, &[true], "b"), BracketMode::Commutator),
        Err(Error::Hypothesis(_))
    ));
    assert!(matches!(
        expand_commutator(&slots(2, &[false, true], "a"), &slots(1, &[true], "b"), BracketMode::Anticommutator),
        Err(Error::Hypothesis(_))
    ));
}

/// `(−1)^{(N−i)M + (j−1)}` with factors `a₁⋯a_{i−1} b₁⋯b_{j−1} b_{j+1}⋯b_M a_{i+1}⋯a_N`.
fn closed_form(n: usize, m: usize) -> Vec<(i8, (usize, usize), Vec<Factor>)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..m {
            let e = (n - 1 - i) * m + j;
            let sign = if e % 2 == 0 { 1 } else { -1 };
            let mut f: Vec<Factor> = (0..i).map(Factor::Lhs).collect();
            f.extend((0..m).filter(|&k| k != j).map(Factor::Rhs));
            f.extend((i + 1..n).map(Factor::Lhs));
            out.push((sign, (i, j), f));
        }
    }
    out.sort_by_key(|x| x.1);
    out
}

#[test]
fn rewriter_matches_closed_form() {
    for n in 1..=5 {
        for m in 1..=5 {
            let mode = BracketMode::natural(n, m);
            let e = expand_commutator(&slots(n, &[false; 5], "a"), &slots(m, &[true; 5], "b"), mode).unwrap();
            assert_eq!(e.term_count(), n * m);
            let mut got: Vec<_> = e.terms.iter().map(|t| (t.sign, t.anchors[0], t.factors.clone())).collect();
            got.sort_by_key(|x| x.1);
            assert_eq!(got, closed_form(n, m), "N = {n}, M = {m}");
        }
    }
}

#[test]
fn rewriter_materializes_to_the_matrix_bracket() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let modes = 6;
    for _ in 0..40 {
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=3);
        let dl: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let dr: Vec<bool> = (0..m).map(|_| rng.gen()).collect();
        let e = expand_commutator(&slots(n, &dl, "a"), &slots(m, &dr, "b"), BracketMode::natural(n, m)).unwrap();
        let lc: Vec<_> = (0..n).map(|_| random_coeffs(&mut rng, modes)).collect();
        let rc: Vec<_> = (0..m).map(|_| random_coeffs(&mut rng, modes)).collect();
        let diff = e.materialize(&lc, &rc).unwrap().max_abs_diff(&e.direct(&lc, &rc).unwrap()).unwrap();
        assert!(diff < 1e-12, "N = {n}, M = {m}: {diff}");
    }
}

#[test]
fn free_ground_state_is_the_vacuum() {
    let m = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let raw = random_hermitian(&mut rng, m);
    // shift to a positive one-body spectrum
    let (vals, _) = eigh(&raw);
    let shift = 0.3 - vals[0];
    let a = CMat::from_fn(m, m, |i, j| raw[(i, j)] + to_c64(cz(if i == j { shift } else { 0.0 }, 0.0)));
    let h = second_quantize(&a).unwrap();
    let evo = Evolution::new(&h).unwrap();
    let gs = evo.ground_state(&h).unwrap();
    assert!(gs.energy.abs() < 1e-12);
    assert!((gs.vector[0].norm() - 1.0).abs() < 1e-12);
    assert!((gs.gap - 0.3).abs() < 1e-10);
    assert!(gs.residual < 1e-8 && !gs.degenerate);
}

#[test]
fn interacting_ground_state_and_clustering() {
    let mb = chain(6, 0.7);
    let gs = mb.ground_state().unwrap();
    assert!(gs.residual <= 1e-8);
    let evo = mb.interacting();
    let basis = mb.spec().basis();
    let a = basis.a_of(&basis.modes()[0]).unwrap();
    let b = basis.adag_of(&basis.modes()[5]).unwrap();
    let direct = a.mul(&b).unwrap().matrix_element(&gs.vector, &gs.vector).unwrap();
    let at0 = evo.clustering_probe(&gs, &a, &b, 0.0).unwrap();
    assert!((at0 - direct).norm() < 1e-14);
    // B ψ₀ = ψ₀ for B = Id: value independent of b
    let id = FockOperator::identity(6).unwrap();
    let n0 = FockOperator::number(6).unwrap();
    let v0 = evo.clustering_probe(&gs, &n0, &id, 0.0).unwrap();
    for bb in [0.5, 2.0, 5.0] {
        assert!((evo.clustering_probe(&gs, &n0, &id, bb).unwrap() - v0).norm() < 1e-12);
    }
    assert!(matches!(evo.clustering_probe(&gs, &a, &b, -1.0), Err(Error::Parameter(_))));
}

#[test]
fn clustering_decays_with_distance() {
    let mb = chain(10, 0.7);
    let gs = mb.ground_state().unwrap();
    assert!(!gs.degenerate);
    let basis = mb.spec().basis();
    let a = basis.a_of(&basis.modes()[0]).unwrap();
    let values: Vec<f64> = [1, 2, 3]
        .iter()
        .map(|&k| {
            let b = basis.adag_of(&basis.modes()[k]).unwrap();
            mb.interacting().clustering_probe(&gs, &a, &b, 1.0).unwrap().norm()
        })
        .collect();
    assert!(values.windows(2).all(|w| w[1] <= w[0]), "{values:?}");
}

#[test]
fn volume_convergence_trivial_cases() {
    let g = Grid::new(1, 256, 32.0).unwrap();
    let f = make_gaussian(g, 1.0, &[-1.0], Normalization::L2).unwrap();
    let same = vec![chain(6, 0.7), chain(6, 0.7)];
    for row in volume_convergence(&same, &f, &[0.5, 1.0]).unwrap() {
        assert_eq!(row.difference, 0.0);
    }
    let free = vec![chain(6, 0.0), chain(6, 0.0)];
    assert!(volume_convergence(&free, &f, &[1.0]).unwrap().iter().all(|r| r.difference == 0.0));
}

#[test]
fn volume_convergence_decays_with_the_region() {
    let g = Grid::new(1, 256, 32.0).unwrap();
    let op = OneBodyOperator::assemble(g, 0.5, &Potential::Zero.sample(g), false).unwrap();
    let centers: Vec<Vec<f64>> = (0..8).map(|k| vec![-7.0 + 2.0 * k as f64]).collect();
    let basis = ModeBasis::gaussian_chain(g, &centers, 1.0).unwrap();
    let models: Vec<ManyBody> = [1.0, 3.0, 5.0, 7.0]
        .iter()
        .map(|&r| {
            let cs = lattice_centers(1, 2.0, -r, r).unwrap();
            let spec = ModelSpec::from_operator(
                basis.clone(),
                &op,
                InteractionProfile::Gaussian { strength: 0.7, range: 1.0 },
                SmearingFunction::gaussian(1.0).unwrap(),
                cs,
                2.0,
                Some(box_mask(g, -r, r)),
            )
            .unwrap();
            ManyBody::new(spec).unwrap()
        })
        .collect();
    let f = make_gaussian(g, 1.0, &[-1.0], Normalization::L2).unwrap();
    let rows = volume_convergence(&models, &f, &[1.0]).unwrap();
    assert!(rows[2].difference <= 0.2 * rows[0].difference);
    assert!(rows.windows(2).all(|w| w[1].difference <= w[0].difference));
    // non-nested regions are rejected
    let rev: Vec<ManyBody> = models.into_iter().rev().collect();
    assert!(matches!(volume_convergence(&rev, &f, &[1.0]), Err(Error::Config(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn heisenberg_preserves_car_structure(seed in 0u64..1000, t in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = 4;
        let a = random_hermitian(&mut rng, m);
        let h = second_quantize(&a).unwrap();
        let evo = Evolution::new(&h).unwrap();
        let cf = random_coeffs(&mut rng, m);
        let cg = random_coeffs(&mut rng, m);
        let af = evo.heisenberg(&ladder_from(false, &cf).unwrap(), t).unwrap();
        let ag = evo.heisenberg(&ladder_from(false, &cg).unwrap(), t).unwrap();
        // the CAR survive the evolution
        let car = af.anticommutator(&ag.adjoint()).unwrap();
        let ip: Complex64 = cf.iter().zip(&cg).map(|(x, y)| x.conj() * y).sum();
        let target = FockOperator::identity(m).unwrap().scale(ip);
        prop_assert!(car.max_abs_diff(&target).unwrap() < 1e-10);
        prop_assert!(af.anticommutator(&ag).unwrap().max_abs() < 1e-10);
    }
}
