use geb_core::constraints::{dispersion, gaussian_amplitude, OnShellKind, OnShellState};
use geb_core::multievent::*;
use geb_core::{AxisGrid, ComplexField, FourVector, Grid, Grid3D, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn line_grid(n: usize, delta: f64) -> Grid3D {
    let one = AxisGrid::new(1, 1.0, 0.0).unwrap();
    Grid::new([AxisGrid::new(n, delta, 0.0).unwrap(), one, one]).unwrap()
}

fn kg(g: &Grid3D, p0: f64, x0: f64, width: f64) -> OnShellState {
    let f = gaussian_amplitude(g, [p0, 0.0, 0.0], [width, 1.0, 1.0], [x0, 0.0, 0.0], &[C64::new(1.0, 0.0)]).unwrap();
    OnShellState::from_amplitude(OnShellKind::KgPositive, 1.0, f).unwrap()
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

fn random_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<C64> {
    (0..len).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

#[test]
fn product_lift_and_slices() {
    let g: Grid3D = Grid::cubic(8).unwrap();
    let a = OnShellState::from_amplitude(OnShellKind::KgPositive, 1.0, gaussian_amplitude(&g, [0.3, 0.0, 0.0], [0.7; 3], [0.2, 0.0, 0.0], &[one()]).unwrap()).unwrap();
    let b = OnShellState::from_amplitude(OnShellKind::KgPositive, 1.0, gaussian_amplitude(&g, [-0.2, 0.1, 0.0], [0.6; 3], [0.0, -0.3, 0.0], &[one()]).unwrap()).unwrap();
    let single = lift_product_form(&[one()], &[vec![a.clone(), b.clone()]]).unwrap();
    let direct = tensor_product(&[a.amplitude().data(), b.amplitude().data()]);
    let scale = direct.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    assert!(max_diff(single.data(), &direct.iter().map(|v| v / scale).collect::<Vec<_>>()) < 1e-15);

    // a product slices to the product of the factor slices
    let t = 0.8;
    let slice = slice_equal_time(&single, t).unwrap();
    let expected = tensor_product(&[a.slice(t).data(), b.slice(t).data()]);
    assert!(max_diff(&slice, &expected) < 1e-12);

    // symmetric combination: a symmetric two-particle wavefunction evolving under H₁ + H₂
    let bell = lift_product_form(&[one(), one()], &[vec![a.clone(), b.clone()], vec![b, a]]).unwrap();
    assert!(bell.symmetry_defect(Exchange::Symmetric) < 1e-15);
    let modes = *bell.modes().unwrap();
    let start = slice_equal_time(&bell, 0.0).unwrap();
    for t in [0.7, 3.0] {
        let s = slice_equal_time(&bell, t).unwrap();
        let evolved = evolve_equal_time(&start, 2, &modes, t).unwrap();
        assert!(max_diff(&s, &evolved) < 1e-10, "t = {t}");
        assert!(max_diff(&permute(&s, 2, modes.dim(), &[1, 0]), &s) < 1e-12);
    }
    let other = Grid::cubic(4).unwrap();
    let c = OnShellState::from_amplitude(OnShellKind::KgPositive, 1.0, gaussian_amplitude(&other, [0.0; 3], [0.7; 3], [0.0; 3], &[one()]).unwrap()).unwrap();
    assert!(lift_product_form(&[one()], &[vec![single_factor(&g), c]]).is_err());
}

fn single_factor(g: &Grid3D) -> OnShellState {
    OnShellState::from_amplitude(OnShellKind::KgPositive, 1.0, gaussian_amplitude(g, [0.0; 3], [0.7; 3], [0.0; 3], &[one()]).unwrap()).unwrap()
}

#[test]
fn single_modes_pick_up_the_summed_phase() {
    let g: Grid3D = Grid::cubic(4).unwrap();
    let mode = |k: usize| {
        let mut f = ComplexField::zeros(g, 1).unwrap();
        f.data_mut()[k] = one();
        OnShellState::from_amplitude(OnShellKind::KgPositive, 1.3, f).unwrap()
    };
    let (k1, k2) = (5, 42);
    let state = lift_product_form(&[one()], &[vec![mode(k1), mode(k2)]]).unwrap();
    let e = |k: usize| dispersion(1.3, &g.momentum(&g.unravel(k)));
    let (s0, s1) = (slice_equal_time(&state, 0.0).unwrap(), slice_equal_time(&state, 2.1).unwrap());
    let phase = C64::from_polar(1.0, -(e(k1) + e(k2)) * 2.1);
    for i in (0..s0.len()).step_by(97) {
        assert!((s1[i] - s0[i] * phase).norm() < 1e-12);
    }
}

#[test]
fn dirac_pairs_evolve_with_summed_hamiltonians() {
    let g: Grid3D = Grid::cubic(4).unwrap();
    let spinor = |w: [C64; 4], p: f64| OnShellState::from_amplitude(OnShellKind::Dirac, 0.8, gaussian_amplitude(&g, [p, 0.0, 0.0], [0.9; 3], [0.0; 3], &w).unwrap()).unwrap();
    let z = C64::default();
    let a = spinor([z, one(), z, C64::new(0.0, 0.5)], 0.3);
    let b = spinor([one(), z, C64::new(0.3, 0.0), z], -0.4);
    let pair = symmetrize(&lift_product_form(&[one()], &[vec![a, b]]).unwrap(), Exchange::Antisymmetric).unwrap();
    let modes = *pair.modes().unwrap();
    let start = slice_equal_time(&pair, 0.0).unwrap();
    let s = slice_equal_time(&pair, 1.7).unwrap();
    assert!(max_diff(&s, &evolve_equal_time(&start, 2, &modes, 1.7).unwrap()) < 1e-10);
    let swapped: Vec<C64> = permute(&s, 2, modes.dim(), &[1, 0]).iter().map(|v| -v).collect();
    assert!(max_diff(&swapped, &s) < 1e-12);
}

#[test]
fn three_events_on_a_line() {
    let g = line_grid(32, 0.5);
    let f = [kg(&g, 0.2, -1.0, 0.8), kg(&g, -0.1, 0.5, 0.9), kg(&g, 0.0, 1.5, 0.7)];
    let state = symmetrize(&lift_product_form(&[one()], &[f.to_vec()]).unwrap(), Exchange::Symmetric).unwrap();
    let modes = *state.modes().unwrap();
    let start = slice_equal_time(&state, 0.0).unwrap();
    let s = slice_equal_time(&state, 4.0).unwrap();
    assert!(max_diff(&s, &evolve_equal_time(&start, 3, &modes, 4.0).unwrap()) < 1e-10);
    let norm: f64 = s.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.cell_volume().powi(3);
    assert!((norm - 1.0).abs() < 1e-12);
}

#[test]
fn dense_event_cap() {
    assert!(matches!(NEventState::new(5, 2, vec![one(); 32], Symmetry::None), Err(geb_core::Error::DimensionCap { .. })));
    assert!(NEventState::new(2, 2, vec![C64::default(); 4], Symmetry::None).is_err());
}

#[test]
fn nbody_constraint_examples() {
    let m = 1.0;
    let p = [0.3, 0.0, 0.0];
    let on = FourVector::new(dispersion(m, &p), p[0], p[1], p[2]);
    let modes = [on, FourVector::new(on[0] + 0.4, p[0], 0.0, 0.0), FourVector::new(0.5, 0.0, 0.2, 0.0)];
    let k = NBodyConstraint::kg(&modes, m, 2);
    assert!(k.symbols[0][0] < 1e-14 && k.symbols[0][1] > 0.1 && k.symbols[0][2] > 0.1);
    let e = |i: usize| -> Vec<C64> { (0..3).map(|j| if i == j { one() } else { C64::default() }).collect() };
    let inside = NEventState::new(2, 3, tensor_product(&[&e(0), &e(0)]), Symmetry::Symmetric).unwrap();
    assert!(nbody_apply(&k, &inside).unwrap().1 < 1e-14);
    let mixed = NEventState::new(2, 3, tensor_product(&[&e(0), &e(1)]), Symmetry::None).unwrap();
    assert!((nbody_apply(&k, &mixed).unwrap().1 - k.symbols[0][1]).abs() < 1e-14);

    // the sum commutes with exchange
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let raw = NEventState::new(2, 3, random_vec(&mut rng, 9), Symmetry::None).unwrap();
    for kind in [Exchange::Symmetric, Exchange::Antisymmetric] {
        let s = symmetrize(&raw, kind).unwrap();
        let (image, _) = nbody_apply(&k, &s).unwrap();
        assert!(max_diff(&project(&image, 2, 3, kind), &image) < 1e-12);
    }

    // exactly one on-shell mode: the kernel is one dimensional for any n
    let ks: Vec<DMatrix<C64>> = k.symbols.iter().map(|s| diagonal_constraint(s)).collect();
    let r = kernel_intersection_check(&ks, 1e-10).unwrap();
    assert_eq!((r.sum_kernel_dim, r.intersection_dim, r.dense_sum_kernel_dim), (1, 1, Some(1)));
    let r = kernel_intersection_check(&[ks[0].clone(), ks[0].clone(), ks[0].clone()], 1e-10).unwrap();
    assert!(r.coincide && r.sum_kernel_dim == 1 && r.dense_projector_distance.unwrap() < 1e-12);

    let dirac = NBodyConstraint::dirac(&[on], m, 2);
    assert_eq!(dirac.symbols[0].iter().filter(|v| **v < 1e-12).count(), 2);
    assert!(dirac.is_positive());
}

#[test]
fn kernel_cap_is_enforced_without_the_dense_oracle() {
    let k = diagonal_constraint(&[0.0, 1.0, 2.0, 0.5, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 3.0]);
    let r = kernel_intersection_check(&[k.clone(), k.clone(), k.clone()], 1e-10).unwrap();
    assert_eq!((r.dimension, r.sum_kernel_dim, r.dense_sum_kernel_dim), (4096, 1, None));
    let bigger = diagonal_constraint(&[1.0; 17]);
    assert!(kernel_intersection_check(&[k.clone(), k, bigger], 1e-10).is_err());
    let asym = DMatrix::from_row_slice(2, 2, &[one(), one(), C64::default(), one()]);
    assert!(kernel_intersection_check(&[asym], 1e-10).is_err());
}

#[test]
fn occupation_form_examples() {
    let m = 1.0;
    let p = [0.2, 0.0, 0.0];
    let on = FourVector::new(dispersion(m, &p), p[0], 0.0, 0.0);
    let off = FourVector::new(0.0, 0.0, 0.0, 0.0);
    let mut modes = ModeSet::kg(m, &[on, off]).unwrap();
    modes.modes[1].kappa = 0.3;
    assert!(modes.modes[0].onshell && !modes.modes[1].onshell);

    let vac = FockState::vacuum(Statistics::Bose, 2);
    assert_eq!(fock_constraint_apply(OnShellKind::KgPositive, &vac, &modes).unwrap().1, 0.0);

    let h = 0.5f64.sqrt();
    let mixed = FockState::new(
        Statistics::Bose,
        [(vec![0, 0], one()), (vec![1, 1], one())].into_iter().collect(),
        vec![C64::new(h, 0.0), C64::default(), C64::new(0.0, h)],
    )
    .unwrap();
    let (_, r) = fock_constraint_apply(OnShellKind::KgPositive, &mixed, &modes).unwrap();
    assert!((r - 0.3 * h).abs() < 1e-15);

    let on_shell_only = FockState::new(Statistics::Bose, [(vec![0, 0], one()), (vec![3, 0], C64::new(0.2, 0.1))].into_iter().collect(), vec![C64::new(0.6, 0.0), C64::default(), C64::default(), C64::new(0.8, 0.0)]).unwrap();
    assert_eq!(fock_constraint_apply(OnShellKind::KgPositive, &on_shell_only, &modes).unwrap().1, 0.0);

    // the mode weights agree with the one-body operator built from them
    let d = diagonal_constraint(&[modes.modes[0].kappa, modes.modes[1].kappa]);
    let (image, _) = fock_constraint_apply(OnShellKind::KgPositive, &mixed, &modes).unwrap();
    let via_operator = one_body(Statistics::Bose, &d, &mixed.vector()).unwrap();
    for (k, v) in &image {
        assert!((via_operator[k] - v).norm() < 1e-15);
    }

    let json = fock_to_json(&mixed, &modes).unwrap();
    let (back, back_modes) = fock_from_json(&json).unwrap();
    assert_eq!(back, mixed);
    assert_eq!(back_modes, modes);

    let fermi = FockState::new(Statistics::Fermi, [(vec![2, 0], one())].into_iter().collect(), vec![C64::default(), C64::default(), one()]);
    assert!(matches!(fermi, Err(geb_core::Error::PauliViolation { mode: 0, occupation: 2 })));
    assert!(fock_constraint_apply(OnShellKind::Dirac, &mixed, &modes).is_err());
    assert!(ModeSet::new(Statistics::Bose, vec![modes.modes[0].clone(); 17]).is_err());
    let six: FockVector = [(vec![6, 0], one())].into_iter().collect();
    assert!(create(Statistics::Bose, 1, &six).is_err());
}

#[test]
fn dirac_weights_agree_in_both_mode_bases() {
    let m = 1.0;
    let momenta = [
        FourVector::new(dispersion(m, &[0.3, 0.1, 0.0]), 0.3, 0.1, 0.0),
        FourVector::new(0.4, -0.2, 0.0, 0.5),
    ];
    let modes = ModeSet::dirac(m, &momenta).unwrap();
    assert_eq!(modes.len(), 8);
    assert_eq!(modes.modes.iter().filter(|k| k.onshell).count(), 2);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let occupations = [vec![1, 1, 0, 0, 0, 0, 0, 0], vec![0, 1, 0, 1, 0, 0, 1, 0], vec![0, 0, 0, 0, 1, 0, 0, 1], vec![0, 0, 0, 0, 0, 0, 0, 0]];
    let terms: FockVector = occupations.iter().map(|o| (o.clone(), random_vec(&mut rng, 1)[0])).collect();
    let fock = FockState::from_vector(Statistics::Fermi, terms).unwrap();
    let (image, r) = fock_constraint_apply(OnShellKind::Dirac, &fock, &modes).unwrap();
    assert!(r > 0.0);

    // standard spinor modes: D = u diag(κ) u†, a†_σ = Σ_k u_{kσ} b†_k
    let u = modes.dirac_rotation(m);
    assert!((u.adjoint() * &u - DMatrix::<C64>::identity(8, 8)).iter().all(|v| v.norm() < 1e-12));
    let kappa = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(8, modes.modes.iter().map(|k| C64::new(k.kappa, 0.0))));
    let d = &u * kappa * u.adjoint();
    let standard = change_basis(Statistics::Fermi, &u.adjoint(), &fock.vector()).unwrap();
    let lhs = one_body(Statistics::Fermi, &d, &standard).unwrap();
    let rhs = change_basis(Statistics::Fermi, &u.adjoint(), &image).unwrap();
    let keys: std::collections::BTreeSet<_> = lhs.keys().chain(rhs.keys()).cloned().collect();
    let err = keys.iter().map(|k| (lhs.get(k).copied().unwrap_or_default() - rhs.get(k).copied().unwrap_or_default()).norm()).fold(0.0, f64::max);
    assert!(err < 1e-12, "{err}");
    assert!((fock_norm(&standard) - 1.0).abs() < 1e-12);
}

#[test]
fn boosts_act_event_by_event() {
    let g = line_grid(64, 0.6);
    let (a, b) = (kg(&g, 0.0, -2.0, 0.4), kg(&g, 0.2, 3.0, 0.45));
    let product = lift_product_form(&[one()], &[vec![a.clone(), b.clone()]]).unwrap();
    assert_eq!(boost_multievent(&product, 1, 0.0).unwrap(), product);
    let v = 0.4;
    let boosted = boost_multievent(&product, 1, v).unwrap();
    let (ba, bb) = (a.onshell_boost(1, v).unwrap(), b.onshell_boost(1, v).unwrap());
    let expected = lift_product_form(&[one()], &[vec![ba.clone(), bb.clone()]]).unwrap();
    assert!(max_diff(boosted.data(), expected.data()) < 1e-10);

    // an entangled symmetric pair stays symmetric and matches single-event boosts
    let pair = symmetrize(&product, Exchange::Symmetric).unwrap();
    let bp = boost_multievent(&pair, 1, v).unwrap();
    assert_eq!(bp.symmetry(), Symmetry::Symmetric);
    assert!(bp.symmetry_defect(Exchange::Symmetric) < 1e-12);
    let reference = symmetrize(&expected, Exchange::Symmetric).unwrap();
    let overlap = reference.inner(&bp).unwrap();
    let aligned: Vec<C64> = reference.data().iter().map(|x| x * overlap / overlap.norm()).collect();
    assert!(max_diff(bp.data(), &aligned) < 1e-8);
    let modes = *bp.modes().unwrap();
    let slice = slice_equal_time(&bp, 0.0).unwrap();
    let mean = |j| slice_mean_position(&slice, 2, &modes, j)[0];
    let reference_slice = slice_equal_time(&reference, 0.0).unwrap();
    let reference_mean = slice_mean_position(&reference_slice, 2, &modes, 0)[0];
    assert!((mean(0) - mean(1)).abs() < 1e-10 && (mean(0) - reference_mean).abs() < 1e-8, "{} {} {reference_mean}", mean(0), mean(1));

    assert!(boost_multievent(&product, 1, 1.0).is_err());
    let edge = lift_product_form(&[one()], &[vec![a, kg(&g, 0.0, 17.0, 0.4)]]).unwrap();
    assert!(matches!(boost_multievent(&edge, 1, v), Err(geb_core::Error::Clearance(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn projectors_on_random_tensors(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random_vec(&mut rng, 27);
        let s = project(&psi, 3, 3, Exchange::Symmetric);
        let a = project(&psi, 3, 3, Exchange::Antisymmetric);
        prop_assert!(max_diff(&project(&s, 3, 3, Exchange::Symmetric), &s) < 1e-12);
        prop_assert!(max_diff(&project(&a, 3, 3, Exchange::Antisymmetric), &a) < 1e-12);
        prop_assert!(project(&s, 3, 3, Exchange::Antisymmetric).iter().all(|v| v.norm() < 1e-12));
        // antisymmetric diagonal entries vanish
        prop_assert!(a[0].norm() < 1e-15 && a[13].norm() < 1e-15 && a[26].norm() < 1e-15);
        let psi2 = random_vec(&mut rng, 16);
        let sum: Vec<C64> = project(&psi2, 2, 4, Exchange::Symmetric).iter().zip(project(&psi2, 2, 4, Exchange::Antisymmetric)).map(|(x, y)| x + y).collect();
        prop_assert!(max_diff(&sum, &psi2) < 1e-15);
    }

    #[test]
    fn lifts_do_not_depend_on_the_factorization(seed in 0u64..10_000) {
        let g = line_grid(16, 0.7);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut raw = || ComplexField::zeros(g, 1).unwrap().with_data(random_vec(&mut rng, 16)).unwrap();
        let (a, b, c, d) = (raw(), raw(), raw(), raw());
        let dv = g.momentum_cell_volume();
        let term = |x: &geb_core::Field3, y: &geb_core::Field3| {
            let nx = (x.sum_sqr() * dv).sqrt();
            let ny = (y.sum_sqr() * dv).sqrt();
            let sx = OnShellState::from_amplitude(OnShellKind::KgPositive, 1.0, x.clone()).unwrap();
            let sy = OnShellState::from_amplitude(OnShellKind::KgPositive, 1.0, y.clone()).unwrap();
            (C64::new(nx * ny, 0.0), vec![sx, sy])
        };
        let add = |x: &geb_core::Field3, y: &geb_core::Field3, s: f64| x.with_data(x.data().iter().zip(y.data()).map(|(p, q)| p + q * s).collect()).unwrap();
        // a⊗b + c⊗d = (a+c)⊗b + c⊗(d−b) = a⊗(b+d) + (c−a)⊗d
        let forms = [
            vec![term(&a, &b), term(&c, &d)],
            vec![term(&add(&a, &c, 1.0), &b), term(&c, &add(&d, &b, -1.0))],
            vec![term(&a, &add(&b, &d, 1.0)), term(&add(&c, &a, -1.0), &d)],
        ];
        let lifts: Vec<NEventState> = forms
            .iter()
            .map(|f| lift_product_form(&f.iter().map(|t| t.0).collect::<Vec<_>>(), &f.iter().map(|t| t.1.clone()).collect::<Vec<_>>()).unwrap())
            .collect();
        for l in &lifts[1..] {
            prop_assert!(max_diff(l.data(), lifts[0].data()) < 1e-10);
            let t = 1.3;
            prop_assert!(max_diff(&slice_equal_time(l, t).unwrap(), &slice_equal_time(&lifts[0], t).unwrap()) < 1e-10);
        }
    }

    #[test]
    fn positive_sums_have_intersection_kernels(seed in 0u64..10_000, rank in 1usize..3, n in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_vec(rank, 3, random_vec(&mut rng, 3 * rank));
        let k = a.adjoint() * a;
        let r = kernel_intersection_check(&vec![k; n], 1e-9).unwrap();
        prop_assert!(r.positive && r.coincide);
        prop_assert_eq!(r.intersection_dim, (3 - rank).pow(n as u32));
        prop_assert_eq!(r.dense_sum_kernel_dim, Some(r.intersection_dim));
        prop_assert!(r.dense_projector_distance.unwrap() < 1e-9);
    }

    #[test]
    fn fock_kernel_is_the_on_shell_span(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kappas = [0.0, 0.7, 0.0, 1.2];
        let modes = ModeSet::new(Statistics::Bose, kappas.iter().enumerate().map(|(i, k)| Mode { id: i as u32, kappa: *k, onshell: *k == 0.0, p3: [0.0; 3], p0: 0.0, branch: None }).collect()).unwrap();
        let mut terms = FockVector::new();
        for _ in 0..5 {
            let occ = vec![rng.gen_range(0..3u32), 0, rng.gen_range(0..3u32), 0];
            terms.insert(occ, random_vec(&mut rng, 1)[0]);
        }
        let fock = FockState::from_vector(Statistics::Bose, terms.clone()).unwrap();
        prop_assert_eq!(fock_constraint_apply(OnShellKind::KgPositive, &fock, &modes).unwrap().1, 0.0);
        terms.insert(vec![0, 1, 0, 0], one());
        let fock = FockState::from_vector(Statistics::Bose, terms).unwrap();
        prop_assert!(fock_constraint_apply(OnShellKind::KgPositive, &fock, &modes).unwrap().1 > 0.0);
    }
}
