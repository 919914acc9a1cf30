use std::collections::BTreeSet;

use geb_core::constraints::{dispersion, gaussian_amplitude, OnShellKind, OnShellState};
use geb_core::multievent::*;
use geb_core::{AxisGrid, ComplexField, Error, FourVector, Grid, Grid3D, C64};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{c, max_diff};
use crate::config::Settings;
use crate::report::{Check, Recorder};

#[derive(Serialize)]
struct KernelRow {
    case: String,
    events: usize,
    dimension: usize,
    positive: bool,
    sum_kernel_dim: usize,
    intersection_dim: usize,
    dense_sum_kernel_dim: Option<usize>,
    coincide: bool,
}

impl KernelRow {
    fn new(case: &str, events: usize, r: &KernelReport) -> Self {
        KernelRow {
            case: case.into(),
            events,
            dimension: r.dimension,
            positive: r.positive,
            sum_kernel_dim: r.sum_kernel_dim,
            intersection_dim: r.intersection_dim,
            dense_sum_kernel_dim: r.dense_sum_kernel_dim,
            coincide: r.coincide,
        }
    }
}

#[derive(Serialize)]
struct FockRow {
    case: String,
    residual: f64,
}

#[derive(Serialize)]
struct DynamicsRow {
    case: String,
    difference: f64,
}

const KERNEL_TOL: f64 = 1e-9;
const RANDOM_KERNEL_CASES: usize = 8;

fn one() -> C64 {
    c(1.0, 0.0)
}

fn random_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<C64> {
    (0..len).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

/// Grid with one point on the transverse axes, for events on a line.
fn line_grid(n: usize, delta: f64) -> geb_core::Result<Grid3D> {
    let single = AxisGrid::new(1, 1.0, 0.0)?;
    Grid::new([AxisGrid::new(n, delta, 0.0)?, single, single])
}

fn kg_line(g: &Grid3D, m: f64, p0: f64, x0: f64, width: f64) -> geb_core::Result<OnShellState> {
    let f = gaussian_amplitude(g, [p0, 0.0, 0.0], [width, 1.0, 1.0], [x0, 0.0, 0.0], &[one()])?;
    OnShellState::from_amplitude(OnShellKind::KgPositive, m, f)
}

fn kernels(s: &Settings, rec: &mut Recorder) -> anyhow::Result<()> {
    let m = s.mass;
    let mut rows = Vec::new();
    let proj_tol = s.tol("kernel_projector");

    // three modes, one of them on shell
    let p = [0.3, 0.0, 0.0];
    let on = FourVector::new(dispersion(m, &p), p[0], p[1], p[2]);
    let modes = [on, FourVector::new(on[0] + 0.4, p[0], 0.0, 0.0), FourVector::new(0.5, 0.0, 0.2, 0.0)];
    let k = NBodyConstraint::kg(&modes, m, 2);
    let ks: Vec<DMatrix<C64>> = k.symbols.iter().map(|v| diagonal_constraint(v)).collect();
    let r = kernel_intersection_check(&ks, KERNEL_TOL)?;
    rec.check(Check::exact("kernel/kg_three_modes/dimensions", r.coincide && r.sum_kernel_dim == 1 && r.dense_sum_kernel_dim == Some(1)));
    rec.check(Check::max("kernel/kg_three_modes/projector", r.dense_projector_distance.unwrap_or(f64::NAN), proj_tol));
    rows.push(KernelRow::new("kg three modes", 2, &r));

    // a pair sitting on the shell is annihilated, a mixed pair is not
    let e = |i: usize| -> Vec<C64> { (0..3).map(|j| if i == j { one() } else { C64::default() }).collect() };
    let inside = NEventState::new(2, 3, tensor_product(&[&e(0), &e(0)]), Symmetry::Symmetric)?;
    rec.check(Check::max("kernel/kg_three_modes/onshell_pair_residual", nbody_apply(&k, &inside)?.1, s.tol("constraint")));
    let mixed = NEventState::new(2, 3, tensor_product(&[&e(0), &e(1)]), Symmetry::None)?;
    let expected = k.symbols[0][1];
    rec.check(Check::max("kernel/kg_three_modes/mixed_pair_residual", (nbody_apply(&k, &mixed)?.1 - expected).abs(), s.tol("constraint")));

    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    for i in 0..RANDOM_KERNEL_CASES {
        let rank = 1 + i % 2;
        let n = 2 + (i / 2) % 2;
        let a = DMatrix::from_vec(rank, 3, random_vec(&mut rng, 3 * rank));
        let kk = a.adjoint() * a;
        let r = kernel_intersection_check(&vec![kk; n], KERNEL_TOL)?;
        let want = (3 - rank).pow(n as u32);
        let name = format!("random_psd_{i}");
        rec.check(Check::exact(format!("kernel/{name}/dimensions"), r.positive && r.coincide && r.intersection_dim == want && r.dense_sum_kernel_dim == Some(want)));
        rec.check(Check::max(format!("kernel/{name}/projector"), r.dense_projector_distance.unwrap_or(f64::NAN), proj_tol));
        rows.push(KernelRow::new(&format!("random psd rank {rank} of 3"), n, &r));
    }

    // 16 modes, 3 events: 4096 dimensions, eigen sums only
    let mut symbol = vec![1.0; 16];
    symbol[0] = 0.0;
    symbol[5] = 0.25;
    let d = diagonal_constraint(&symbol);
    let r = kernel_intersection_check(&[d.clone(), d.clone(), d], KERNEL_TOL)?;
    rec.check(Check::exact("kernel/diagonal_4096/dimensions", r.dimension == 4096 && r.coincide && r.sum_kernel_dim == 1));
    rows.push(KernelRow::new("diagonal 16 modes", 3, &r));
    let a = DMatrix::from_vec(15, 16, random_vec(&mut rng, 15 * 16));
    let kk = a.adjoint() * a;
    let r = kernel_intersection_check(&[kk.clone(), kk.clone(), kk], KERNEL_TOL)?;
    rec.check(Check::exact("kernel/random_psd_4096/dimensions", r.dimension == 4096 && r.coincide && r.sum_kernel_dim == 1));
    rows.push(KernelRow::new("random psd rank 15 of 16", 3, &r));

    // without positivity the sum has kernel vectors outside the intersection
    let indefinite = diagonal_constraint(&[1.0, -1.0]);
    let r = kernel_intersection_check(&[indefinite.clone(), indefinite], KERNEL_TOL)?;
    rec.check(Check::exact(
        "kernel/indefinite_counterexample",
        !r.positive && !r.coincide && r.sum_kernel_dim == 2 && r.intersection_dim == 0 && r.dense_sum_kernel_dim == Some(2),
    ));
    rows.push(KernelRow::new("indefinite diag(1, -1)", 2, &r));
    rec.series("kernels", &rows)
}

fn symmetry(s: &Settings, rec: &mut Recorder) -> anyhow::Result<()> {
    let tol = s.tol("projector");
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ 0x5eed);
    let psi = random_vec(&mut rng, 27);
    let sym = project(&psi, 3, 3, Exchange::Symmetric);
    let anti = project(&psi, 3, 3, Exchange::Antisymmetric);
    rec.check(Check::max("projector/symmetric_idempotent", max_diff(&project(&sym, 3, 3, Exchange::Symmetric), &sym), tol));
    rec.check(Check::max("projector/antisymmetric_idempotent", max_diff(&project(&anti, 3, 3, Exchange::Antisymmetric), &anti), tol));
    let cross = project(&sym, 3, 3, Exchange::Antisymmetric).iter().map(|v| v.norm()).fold(0.0, f64::max);
    rec.check(Check::max("projector/orthogonal", cross, tol));
    let diagonal = [0usize, 13, 26].iter().map(|&k| anti[k].norm()).fold(0.0, f64::max);
    rec.check(Check::max("projector/antisymmetric_diagonal", diagonal, tol));
    let pair = random_vec(&mut rng, 16);
    let sum: Vec<C64> = project(&pair, 2, 4, Exchange::Symmetric).iter().zip(project(&pair, 2, 4, Exchange::Antisymmetric)).map(|(x, y)| x + y).collect();
    rec.check(Check::max("projector/two_event_completeness", max_diff(&sum, &pair), tol));

    // a ⊗ a has no antisymmetric part
    let a = random_vec(&mut rng, 3);
    let same = NEventState::new(2, 3, tensor_product(&[&a, &a]), Symmetry::None)?;
    rec.check(Check::exact("pauli/antisymmetrized_product_vanishes", matches!(symmetrize(&same, Exchange::Antisymmetric), Err(Error::Annihilated))));
    let raw = NEventState::new(2, 3, random_vec(&mut rng, 9), Symmetry::None)?;
    let wrong_flag = NEventState::new(2, 3, raw.data().to_vec(), Symmetry::Symmetric);
    rec.check(Check::exact("symmetry_flag_is_verified", wrong_flag.is_err()));
    Ok(())
}

fn fock(s: &Settings, rec: &mut Recorder) -> anyhow::Result<()> {
    let tol = s.tol("fock");
    let m = s.mass;
    let mut rows = Vec::new();
    let p = [0.2, 0.0, 0.0];
    let on = FourVector::new(dispersion(m, &p), p[0], 0.0, 0.0);
    let mut modes = ModeSet::kg(m, &[on, FourVector::ZERO])?;
    modes.modes[1].kappa = 0.3;

    let vac = FockState::vacuum(Statistics::Bose, 2);
    let r = fock_constraint_apply(OnShellKind::KgPositive, &vac, &modes)?.1;
    rec.check(Check::max("fock/vacuum", r, tol));
    rows.push(FockRow { case: "vacuum".into(), residual: r });

    // vacuum plus three on-shell events: different event numbers, still a kernel state
    let superposition = FockState::new(
        Statistics::Bose,
        [(vec![0, 0], one()), (vec![3, 0], c(0.2, 0.1))].into_iter().collect(),
        vec![c(0.6, 0.0), C64::default(), C64::default(), c(0.8, 0.0)],
    )?;
    let r = fock_constraint_apply(OnShellKind::KgPositive, &superposition, &modes)?.1;
    rec.check(Check::max("fock/event_number_superposition", r, tol));
    rows.push(FockRow { case: "on-shell event-number superposition".into(), residual: r });

    let h = 0.5f64.sqrt();
    let mixed = FockState::new(Statistics::Bose, [(vec![0, 0], one()), (vec![1, 1], one())].into_iter().collect(), vec![c(h, 0.0), C64::default(), c(0.0, h)])?;
    let (image, r) = fock_constraint_apply(OnShellKind::KgPositive, &mixed, &modes)?;
    rec.check(Check::max("fock/off_shell_weight", (r - 0.3 * h).abs(), tol));
    rows.push(FockRow { case: "one off-shell event".into(), residual: r });
    let d = diagonal_constraint(&[modes.modes[0].kappa, modes.modes[1].kappa]);
    let via_operator = one_body(Statistics::Bose, &d, &mixed.vector())?;
    let err = image.iter().map(|(k, v)| (via_operator.get(k).copied().unwrap_or_default() - v).norm()).fold(0.0, f64::max);
    rec.check(Check::max("fock/one_body_operator", err, tol));

    let json = fock_to_json(&mixed, &modes)?;
    let (back, back_modes) = fock_from_json(&json)?;
    rec.check(Check::exact("fock/json_round_trip", back == mixed && back_modes == modes));
    let violation = FockState::new(Statistics::Fermi, [(vec![2, 0], one())].into_iter().collect(), vec![C64::default(), C64::default(), one()]);
    rec.check(Check::exact("fock/pauli_violation_rejected", matches!(violation, Err(Error::PauliViolation { .. }))));

    // Dirac: the same constraint in the eigenmode and the standard spinor basis
    let momenta = [FourVector::new(dispersion(m, &[0.3, 0.1, 0.0]), 0.3, 0.1, 0.0), FourVector::new(0.4, -0.2, 0.0, 0.5)];
    let dmodes = ModeSet::dirac(m, &momenta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ 0xf0c);
    let occupations = [vec![1, 1, 0, 0, 0, 0, 0, 0], vec![0, 1, 0, 1, 0, 0, 1, 0], vec![0, 0, 0, 0, 1, 0, 0, 1], vec![0; 8]];
    let terms: FockVector = occupations.iter().map(|o| (o.clone(), random_vec(&mut rng, 1)[0])).collect();
    let state = FockState::from_vector(Statistics::Fermi, terms)?;
    let (image, r) = fock_constraint_apply(OnShellKind::Dirac, &state, &dmodes)?;
    rows.push(FockRow { case: "dirac mixed occupations".into(), residual: r });
    let u = dmodes.dirac_rotation(m);
    let kappa = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(dmodes.len(), dmodes.modes.iter().map(|k| c(k.kappa, 0.0))));
    let dd = &u * kappa * u.adjoint();
    let standard = change_basis(Statistics::Fermi, &u.adjoint(), &state.vector())?;
    let lhs = one_body(Statistics::Fermi, &dd, &standard)?;
    let rhs = change_basis(Statistics::Fermi, &u.adjoint(), &image)?;
    let keys: BTreeSet<_> = lhs.keys().chain(rhs.keys()).cloned().collect();
    let err = keys.iter().map(|k| (lhs.get(k).copied().unwrap_or_default() - rhs.get(k).copied().unwrap_or_default()).norm()).fold(0.0, f64::max);
    rec.check(Check::max("fock/dirac_two_bases", err, tol));
    rec.series("fock", &rows)
}

fn dynamics(s: &Settings, rec: &mut Recorder) -> anyhow::Result<()> {
    let m = s.mass;
    let mut rows = Vec::new();
    let g = line_grid(s.grid.n, s.grid.delta())?;
    let f = [kg_line(&g, m, 0.2, -1.0, 0.8)?, kg_line(&g, m, -0.1, 0.5, 0.9)?, kg_line(&g, m, 0.0, 1.5, 0.7)?];
    let state = symmetrize(&lift_product_form(&[one()], &[f.to_vec()])?, Exchange::Symmetric)?;
    let modes = *state.modes().ok_or_else(|| anyhow::anyhow!("lifted state has no modes"))?;
    let start = slice_equal_time(&state, 0.0)?;
    let mut worst = 0.0f64;
    for t in &s.times {
        let d = max_diff(&slice_equal_time(&state, *t)?, &evolve_equal_time(&start, 3, &modes, *t)?);
        worst = worst.max(d);
        rows.push(DynamicsRow { case: format!("three events t={t}"), difference: d });
    }
    rec.check(Check::max("equal_time/three_events", worst, s.tol("evolution")));

    // boosts act event by event
    let bg = line_grid(64, 0.6)?;
    let (a, b) = (kg_line(&bg, m, 0.0, -2.0, 0.4)?, kg_line(&bg, m, 0.2, 3.0, 0.45)?);
    let product = lift_product_form(&[one()], &[vec![a.clone(), b.clone()]])?;
    let v = 0.4;
    let boosted = boost_multievent(&product, 1, v)?;
    let expected = lift_product_form(&[one()], &[vec![a.onshell_boost(1, v)?, b.onshell_boost(1, v)?]])?;
    let d = max_diff(boosted.data(), expected.data());
    rec.check(Check::max("boost/product_state", d, s.tol("boost")));
    rows.push(DynamicsRow { case: format!("boosted product v={v}"), difference: d });
    let pair = boost_multievent(&symmetrize(&product, Exchange::Symmetric)?, 1, v)?;
    let reference = symmetrize(&expected, Exchange::Symmetric)?;
    let overlap = reference.inner(&pair)?;
    let aligned: Vec<C64> = reference.data().iter().map(|x| x * overlap / overlap.norm()).collect();
    let d = max_diff(pair.data(), &aligned);
    rec.check(Check::max("boost/symmetric_pair", d, s.tol("boost")));
    rec.check(Check::max("boost/symmetric_pair_defect", pair.symmetry_defect(Exchange::Symmetric), s.tol("projector")));
    rows.push(DynamicsRow { case: format!("boosted symmetric pair v={v}"), difference: d });

    // a⊗b + c⊗d = (a+c)⊗b + c⊗(d−b)
    let fg = line_grid(16, 0.7)?;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ 0xfac);
    let mut raw = || ComplexField::zeros(fg, 1).and_then(|z| z.with_data(random_vec(&mut rng, 16)));
    let (fa, fb, fc, fd) = (raw()?, raw()?, raw()?, raw()?);
    let dv = fg.momentum_cell_volume();
    let term = |x: &geb_core::Field3, y: &geb_core::Field3| -> geb_core::Result<(C64, Vec<OnShellState>)> {
        let nx = (x.sum_sqr() * dv).sqrt();
        let ny = (y.sum_sqr() * dv).sqrt();
        let sx = OnShellState::from_amplitude(OnShellKind::KgPositive, m, x.clone())?;
        let sy = OnShellState::from_amplitude(OnShellKind::KgPositive, m, y.clone())?;
        Ok((c(nx * ny, 0.0), vec![sx, sy]))
    };
    let add = |x: &geb_core::Field3, y: &geb_core::Field3, w: f64| x.with_data(x.data().iter().zip(y.data()).map(|(p, q)| p + q * w).collect());
    let lift = |terms: Vec<(C64, Vec<OnShellState>)>| {
        let (alphas, factors): (Vec<C64>, Vec<Vec<OnShellState>>) = terms.into_iter().unzip();
        lift_product_form(&alphas, &factors)
    };
    let first = lift(vec![term(&fa, &fb)?, term(&fc, &fd)?])?;
    let second = lift(vec![term(&add(&fa, &fc, 1.0)?, &fb)?, term(&fc, &add(&fd, &fb, -1.0)?)?])?;
    let d = max_diff(first.data(), second.data()).max(max_diff(&slice_equal_time(&first, 1.3)?, &slice_equal_time(&second, 1.3)?));
    rec.check(Check::max("lift/factorization_independent", d, s.tol("factorization")));
    rows.push(DynamicsRow { case: "refactorized product form".into(), difference: d });
    rec.series("dynamics", &rows)
}

pub fn run(s: &Settings, rec: &mut Recorder) {
    if s.runs("kernels") {
        rec.section("kernels", |rec| kernels(s, rec));
    }
    if s.runs("symmetry") {
        rec.section("symmetry", |rec| symmetry(s, rec));
    }
    if s.runs("fock") {
        rec.section("fock", |rec| fock(s, rec));
    }
    if s.runs("dynamics") {
        rec.section("dynamics", |rec| dynamics(s, rec));
    }
}
