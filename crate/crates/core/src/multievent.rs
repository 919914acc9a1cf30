//! Several events at once: tensor states with exchange symmetry, multi-time
//! product lifts, n-body constraint sums and their kernels, and the
//! occupation-number form of the constraints on a finite mode set.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraints::{boost_amplitude, evolve_amplitude, kg_symbol_squared, Branch, OnShellKind, OnShellState};
use crate::correspondence::{dirac_evolve, schrodinger_evolve, schrodinger_evolve_negative};
use crate::dirac;
use crate::error::{Error, Result};
use crate::event::CLEARANCE_SIGMAS;
use crate::fft::ifft3;
use crate::field::{ComplexField, Field3, C64};
use crate::grid::Grid3D;
use crate::vector::FourVector;

/// Largest event number for dense tensors.
pub const MAX_DENSE_EVENTS: usize = 4;
/// Largest event number in occupation form.
pub const MAX_FOCK_EVENTS: usize = 6;
pub const MAX_MODES: usize = 16;
/// Largest tensor dimension for the kernel-intersection check.
pub const KERNEL_DIMENSION_CAP: usize = 4096;
/// Largest dimension on which the full n-body matrix is also diagonalized.
pub const DENSE_ORACLE_CAP: usize = 1024;
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
/// Largest tensor size (entries) held in memory.
pub const MAX_TENSOR_LEN: usize = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    None,
    Symmetric,
    Antisymmetric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exchange {
    #[serde(rename = "S")]
    Symmetric,
    #[serde(rename = "A")]
    Antisymmetric,
}

impl From<Exchange> for Symmetry {
    fn from(e: Exchange) -> Self {
        match e {
            Exchange::Symmetric => Symmetry::Symmetric,
            Exchange::Antisymmetric => Symmetry::Antisymmetric,
        }
    }
}

/// Single-event on-shell mode space shared by every event of a tensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OnShellModes {
    pub kind: OnShellKind,
    pub mass: f64,
    pub grid: Grid3D,
}

impl OnShellModes {
    pub fn dim(&self) -> usize {
        self.kind.components() * self.grid.len()
    }
}

/// Rank-n amplitude tensor over a `dim`-dimensional single-event space,
/// stored row-major with event 1 slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct NEventState {
    n: usize,
    dim: usize,
    data: Vec<C64>,
    symmetry: Symmetry,
    modes: Option<OnShellModes>,
}

fn l2(data: &[C64]) -> f64 {
    data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn tensor_len(n: usize, dim: usize) -> Result<usize> {
    if n == 0 || dim == 0 {
        return Err(Error::Invalid("empty tensor".into()));
    }
    if n > MAX_DENSE_EVENTS {
        return Err(Error::DimensionCap { dim: n, cap: MAX_DENSE_EVENTS });
    }
    let mut len = 1usize;
    for _ in 0..n {
        len = len.checked_mul(dim).filter(|l| *l <= MAX_TENSOR_LEN).ok_or(Error::DimensionCap { dim: usize::MAX, cap: MAX_TENSOR_LEN })?;
    }
    Ok(len)
}

impl NEventState {
    /// Normalizes `data` and checks the declared symmetry.
    pub fn new(n: usize, dim: usize, data: Vec<C64>, symmetry: Symmetry) -> Result<Self> {
        let len = tensor_len(n, dim)?;
        if data.len() != len {
            return Err(Error::ShapeMismatch { expected: len, got: data.len() });
        }
        let norm = l2(&data);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let data: Vec<C64> = data.into_iter().map(|v| v / norm).collect();
        let state = NEventState { n, dim, data, symmetry, modes: None };
        let kind = match symmetry {
            Symmetry::None => return Ok(state),
            Symmetry::Symmetric => Exchange::Symmetric,
            Symmetry::Antisymmetric => Exchange::Antisymmetric,
        };
        let defect = max_diff(&project(&state.data, n, dim, kind), &state.data);
        if defect > SYMMETRY_TOLERANCE {
            return Err(Error::Invalid(format!("declared {symmetry:?} symmetry violated by {defect:e}")));
        }
        Ok(state)
    }

    /// Attaches the on-shell mode space the tensor indices refer to.
    pub fn with_modes(mut self, modes: OnShellModes) -> Result<Self> {
        if modes.dim() != self.dim {
            return Err(Error::ShapeMismatch { expected: modes.dim(), got: self.dim });
        }
        self.modes = Some(modes);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn modes(&self) -> Option<&OnShellModes> {
        self.modes.as_ref()
    }

    pub fn inner(&self, other: &NEventState) -> Result<C64> {
        if self.n != other.n || self.dim != other.dim {
            return Err(Error::ShapeMismatch { expected: self.data.len(), got: other.data.len() });
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum())
    }

    /// `max |Π ψ − ψ|` for the given projector.
    pub fn symmetry_defect(&self, kind: Exchange) -> f64 {
        max_diff(&project(&self.data, self.n, self.dim, kind), &self.data)
    }
}

/// All permutations of `0..n` with their parities, in lexicographic order.
pub fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            prefix.push(x);
            rec(prefix, rest, out);
            prefix.pop();
            rest.insert(i, x);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out.into_iter()
        .map(|p| {
            let inversions = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count();
            let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
            (p, sign)
        })
        .collect()
}

/// `(Pψ)(i₁,…,iₙ) = ψ(i_{p(1)},…,i_{p(n)})`.
pub fn permute(data: &[C64], n: usize, dim: usize, perm: &[usize]) -> Vec<C64> {
    let mut out = vec![C64::default(); data.len()];
    let mut idx = vec![0usize; n];
    for (flat, slot) in out.iter_mut().enumerate() {
        let mut r = flat;
        for k in (0..n).rev() {
            idx[k] = r % dim;
            r /= dim;
        }
        let src = perm.iter().fold(0usize, |acc, &p| acc * dim + idx[p]);
        *slot = data[src];
    }
    out
}

/// `Π^{(n,S)}` or `Π^{(n,A)}` applied to a raw tensor.
pub fn project(data: &[C64], n: usize, dim: usize, kind: Exchange) -> Vec<C64> {
    let perms = permutations(n);
    let scale = 1.0 / perms.len() as f64;
    let mut out = vec![C64::default(); data.len()];
    for (p, sign) in &perms {
        let w = if kind == Exchange::Symmetric { scale } else { scale * sign };
        for (o, v) in out.iter_mut().zip(permute(data, n, dim, p)) {
            *o += v * w;
        }
    }
    out
}

/// Projects onto the symmetric or antisymmetric subspace and renormalizes.
pub fn symmetrize(state: &NEventState, kind: Exchange) -> Result<NEventState> {
    if state.n > MAX_FOCK_EVENTS {
        return Err(Error::DimensionCap { dim: state.n, cap: MAX_FOCK_EVENTS });
    }
    let data = project(&state.data, state.n, state.dim, kind);
    if l2(&data) <= SYMMETRY_TOLERANCE * l2(&state.data) {
        return Err(Error::Annihilated);
    }
    let norm = l2(&data);
    let data = data.into_iter().map(|v| v / norm).collect();
    Ok(NEventState { n: state.n, dim: state.dim, data, symmetry: kind.into(), modes: state.modes })
}

pub fn tensor_product(factors: &[&[C64]]) -> Vec<C64> {
    factors.iter().fold(vec![C64::new(1.0, 0.0)], |acc, f| acc.iter().flat_map(|a| f.iter().map(move |b| a * b)).collect())
}

/// `Σ_ℓ α_ℓ ψ^{(ℓ₁)} ⊗ ⋯ ⊗ ψ^{(ℓₙ)}` over on-shell amplitudes.
pub fn lift_product_form(alphas: &[C64], factors: &[Vec<OnShellState>]) -> Result<NEventState> {
    if alphas.len() != factors.len() || factors.is_empty() {
        return Err(Error::ShapeMismatch { expected: alphas.len(), got: factors.len() });
    }
    let first = factors[0].first().ok_or_else(|| Error::Invalid("empty product term".into()))?;
    let modes = OnShellModes { kind: first.kind(), mass: first.mass(), grid: *first.grid() };
    let n = factors[0].len();
    let len = tensor_len(n, modes.dim())?;
    let mut data = vec![C64::default(); len];
    for (alpha, term) in alphas.iter().zip(factors) {
        if term.len() != n {
            return Err(Error::ShapeMismatch { expected: n, got: term.len() });
        }
        for f in term {
            if f.kind() != modes.kind || f.mass() != modes.mass {
                return Err(Error::Invalid("product factors must share kind and mass".into()));
            }
            f.grid().check_same(&modes.grid)?;
        }
        let parts: Vec<&[C64]> = term.iter().map(|f| f.amplitude().data()).collect();
        for (d, v) in data.iter_mut().zip(tensor_product(&parts)) {
            *d += alpha * v;
        }
    }
    NEventState::new(n, modes.dim(), data, Symmetry::None)?.with_modes(modes)
}

/// Applies a single-event linear map to every fiber along event axis `j`.
pub fn apply_event_map<F>(data: &[C64], n: usize, dim: usize, j: usize, f: F) -> Vec<C64>
where
    F: Fn(&[C64]) -> Vec<C64> + Sync,
{
    let stride = dim.pow((n - 1 - j) as u32);
    let outer = data.len() / (dim * stride);
    let fibers: Vec<Vec<C64>> = (0..outer * stride)
        .into_par_iter()
        .map(|l| {
            let (o, r) = (l / stride, l % stride);
            let base = o * dim * stride + r;
            let fiber: Vec<C64> = (0..dim).map(|i| data[base + i * stride]).collect();
            f(&fiber)
        })
        .collect();
    let mut out = vec![C64::default(); data.len()];
    for (l, fiber) in fibers.iter().enumerate() {
        let (o, r) = (l / stride, l % stride);
        let base = o * dim * stride + r;
        for (i, v) in fiber.iter().enumerate() {
            out[base + i * stride] = *v;
        }
    }
    out
}

fn require_modes(state: &NEventState) -> Result<OnShellModes> {
    state.modes.ok_or_else(|| Error::Invalid("tensor has no on-shell mode space attached".into()))
}

fn unit_slice(data: Vec<C64>, grid: &Grid3D, n: usize) -> Vec<C64> {
    let norm = (data.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.cell_volume().powi(n as i32)).sqrt();
    data.into_iter().map(|v| v / norm).collect()
}

/// The n-particle wavefunction with all event times set to `t`, unit norm.
pub fn slice_equal_time(state: &NEventState, t: f64) -> Result<Vec<C64>> {
    let modes = require_modes(state)?;
    let template = ComplexField::zeros(modes.grid, modes.kind.components())?;
    let mut data = state.data.clone();
    for j in 0..state.n {
        data = apply_event_map(&data, state.n, state.dim, j, |fiber| {
            let amp = template.with_data(fiber.to_vec()).expect("fiber shape");
            ifft3(&evolve_amplitude(modes.kind, modes.mass, &amp, t, 0)).into_data()
        });
    }
    Ok(unit_slice(data, &modes.grid, state.n))
}

/// `e^{−i(H₁+⋯+Hₙ)t}` on an equal-time n-particle wavefunction, one
/// spectral single-particle evolution per event.
pub fn evolve_equal_time(psi: &[C64], n: usize, modes: &OnShellModes, t: f64) -> Result<Vec<C64>> {
    let template = ComplexField::zeros(modes.grid, modes.kind.components())?;
    let mut data = psi.to_vec();
    for j in 0..n {
        data = apply_event_map(&data, n, modes.dim(), j, |fiber| {
            let f: Field3 = template.with_data(fiber.to_vec()).expect("fiber shape");
            match modes.kind {
                OnShellKind::KgPositive => schrodinger_evolve(&f, modes.mass, t),
                OnShellKind::KgNegative => schrodinger_evolve_negative(&f, modes.mass, t),
                OnShellKind::Dirac => dirac_evolve(&f, modes.mass, t).expect("spinor fiber"),
            }
            .into_data()
        });
    }
    Ok(data)
}

/// Per-event marginal mean and standard deviation of `|ψ|²` over a 3D grid,
/// read as positions or momenta.
fn marginal_moments(data: &[C64], n: usize, modes: &OnShellModes, j: usize, momentum: bool) -> ([f64; 3], [f64; 3]) {
    let dim = modes.dim();
    let points = modes.grid.len();
    let stride = dim.pow((n - 1 - j) as u32);
    let mut weight = vec![0.0; points];
    for (flat, v) in data.iter().enumerate() {
        weight[((flat / stride) % dim) % points] += v.norm_sqr();
    }
    let total: f64 = weight.iter().sum();
    let coord = |k: usize| {
        let idx = modes.grid.unravel(k);
        if momentum {
            modes.grid.momentum(&idx)
        } else {
            modes.grid.position(&idx)
        }
    };
    let mut mean = [0.0; 3];
    for (k, w) in weight.iter().enumerate() {
        let c = coord(k);
        for d in 0..3 {
            mean[d] += w * c[d] / total;
        }
    }
    let mut var = [0.0; 3];
    for (k, w) in weight.iter().enumerate() {
        let c = coord(k);
        for d in 0..3 {
            var[d] += w * (c[d] - mean[d]).powi(2) / total;
        }
    }
    (mean, var.map(f64::sqrt))
}

fn check_marginal_clearance(state: &NEventState, modes: &OnShellModes) -> Result<()> {
    let slice = slice_equal_time(state, 0.0)?;
    let mut bad = Vec::new();
    for j in 0..state.n {
        for (label, data, momentum) in [("x", &slice, false), ("p", &state.data, true)] {
            let (mean, sd) = marginal_moments(data, state.n, modes, j, momentum);
            for d in 0..3 {
                let a = if momentum { modes.grid.axes[d].dual() } else { modes.grid.axes[d] };
                let (lo, hi) = (a.x(0) - 0.5 * a.delta, a.x(a.n - 1) + 0.5 * a.delta);
                let half = CLEARANCE_SIGMAS * sd[d];
                if mean[d] - half < lo || mean[d] + half > hi {
                    bad.push(format!("event {} {label}{}: {:.3} ± {:.3} not inside [{lo:.3}, {hi:.3}]", j + 1, d + 1, mean[d], half));
                }
            }
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::Clearance(bad.join("; ")))
    }
}

/// `U_Λ^{⊗n}` for a boost along `axis`: the on-shell boost formula on every
/// event index, then a global renormalization.
pub fn boost_multievent(state: &NEventState, axis: usize, v: f64) -> Result<NEventState> {
    let modes = require_modes(state)?;
    if modes.kind == OnShellKind::Dirac {
        return Err(Error::Invalid("multi-event boosts are implemented for Klein-Gordon tensors".into()));
    }
    if !(1..=3).contains(&axis) {
        return Err(Error::InvalidAxis(axis));
    }
    if !v.is_finite() || v.abs() >= 1.0 {
        return Err(Error::Superluminal(v));
    }
    if v == 0.0 {
        return Ok(state.clone());
    }
    let slice = slice_equal_time(state, 0.0)?;
    let template = ComplexField::zeros(modes.grid, 1)?;
    let mut data = state.data.clone();
    for j in 0..state.n {
        let xc = marginal_moments(&slice, state.n, &modes, j, false).0[axis - 1];
        data = apply_event_map(&data, state.n, state.dim, j, |fiber| {
            let amp = template.with_data(fiber.to_vec()).expect("fiber shape");
            boost_amplitude(modes.kind, modes.mass, &amp, axis, v, xc).expect("validated boost").into_data()
        });
    }
    let norm = l2(&data);
    if norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let out = NEventState { n: state.n, dim: state.dim, data: data.into_iter().map(|x| x / norm).collect(), symmetry: state.symmetry, modes: Some(modes) };
    check_marginal_clearance(&out, &modes)?;
    Ok(out)
}

/// Single-event constraint symbols, diagonal in the mode basis, summed over
/// events.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NBodyConstraint {
    pub symbols: Vec<Vec<f64>>,
}

impl NBodyConstraint {
    /// Rejects any negative symbol value.
    pub fn new(symbols: Vec<Vec<f64>>) -> Result<Self> {
        for (j, s) in symbols.iter().enumerate() {
            if let Some(v) = s.iter().find(|v| !(**v >= 0.0)) {
                return Err(Error::Invalid(format!("symbol of event {} is not positive semidefinite ({v})", j + 1)));
            }
        }
        Ok(NBodyConstraint { symbols })
    }

    /// No positivity check; for demonstrating what goes wrong without it.
    pub fn indefinite(symbols: Vec<Vec<f64>>) -> Self {
        NBodyConstraint { symbols }
    }

    /// `(Θ(p⁰)p̄·p̲ − m²)²` on the given modes, the same for all `n` events.
    pub fn kg(modes: &[FourVector], m: f64, n: usize) -> Self {
        let s: Vec<f64> = modes.iter().map(|p| kg_symbol_squared(p, m, Branch::Positive)).collect();
        NBodyConstraint { symbols: vec![s; n] }
    }

    /// `λ_σ(p̄)²` on the φ-basis modes `(p̄, σ)`, σ fastest.
    pub fn dirac(modes: &[FourVector], m: f64, n: usize) -> Self {
        let s: Vec<f64> = modes.iter().flat_map(|p| dirac::dirac_eigensystem(p, m).lambda.map(|l| l * l)).collect();
        NBodyConstraint { symbols: vec![s; n] }
    }

    pub fn is_positive(&self) -> bool {
        self.symbols.iter().flatten().all(|v| *v >= 0.0)
    }
}

/// `K^{[n]}ψ = Σ_j K_j ψ` and `‖K^{[n]}ψ‖/‖ψ‖`.
pub fn nbody_apply(k: &NBodyConstraint, state: &NEventState) -> Result<(Vec<C64>, f64)> {
    if k.symbols.len() != state.n {
        return Err(Error::ShapeMismatch { expected: state.n, got: k.symbols.len() });
    }
    if let Some(s) = k.symbols.iter().find(|s| s.len() != state.dim) {
        return Err(Error::ShapeMismatch { expected: state.dim, got: s.len() });
    }
    let n = state.n;
    let dim = state.dim;
    let image: Vec<C64> = state
        .data
        .iter()
        .enumerate()
        .map(|(flat, v)| {
            let mut r = flat;
            let mut sum = 0.0;
            for j in (0..n).rev() {
                sum += k.symbols[j][r % dim];
                r /= dim;
            }
            v * sum
        })
        .collect();
    let residual = l2(&image) / l2(&state.data);
    Ok((image, residual))
}

/// Outcome of comparing `ker Σ_j K_j` with `∩_j ker K_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub dimension: usize,
    /// Every single-event operator is positive semidefinite.
    pub positive: bool,
    pub sum_kernel_dim: usize,
    pub intersection_dim: usize,
    pub coincide: bool,
    /// Dimension of `ker Σ_j K_j` from diagonalizing the full matrix, when
    /// small enough.
    pub dense_sum_kernel_dim: Option<usize>,
    /// `max |P_sum − P_∩|` with `P_sum` from the full matrix and `P_∩` the
    /// tensor product of single-event kernel projectors.
    pub dense_projector_distance: Option<f64>,
}

fn hermitian_eigen(k: &DMatrix<C64>) -> Result<(Vec<f64>, DMatrix<C64>)> {
    if !k.is_square() {
        return Err(Error::Invalid("constraint matrix must be square".into()));
    }
    let scale = k.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let asym = (k - k.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
    if asym > 1e-12 * scale {
        return Err(Error::Invalid(format!("constraint matrix is not Hermitian ({asym:e})")));
    }
    let eig = SymmetricEigen::new(k.clone());
    Ok((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors))
}

fn kernel_projector(vals: &[f64], vecs: &DMatrix<C64>, tol: f64) -> DMatrix<C64> {
    let d = vecs.nrows();
    let mut p = DMatrix::zeros(d, d);
    for (i, l) in vals.iter().enumerate() {
        if l.abs() <= tol {
            let c = vecs.column(i);
            p += &c * c.adjoint();
        }
    }
    p
}

fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ra, ca, rb, cb) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    DMatrix::from_fn(ra * rb, ca * cb, |i, j| a[(i / rb, j / cb)] * b[(i % rb, j % cb)])
}

/// `I ⊗ ⋯ ⊗ K_j ⊗ ⋯ ⊗ I`.
fn embed(ks: &[DMatrix<C64>], j: usize) -> DMatrix<C64> {
    ks.iter()
        .enumerate()
        .map(|(i, k)| if i == j { k.clone() } else { DMatrix::identity(k.nrows(), k.nrows()) })
        .reduce(|a, b| kron(&a, &b))
        .expect("at least one event")
}

/// Compares the kernel of `Σ_j K_j` with the intersection of the single-event
/// kernels, using the product eigenbasis; small cases are also diagonalized
/// as one dense matrix.
pub fn kernel_intersection_check(ks: &[DMatrix<C64>], tol: f64) -> Result<KernelReport> {
    if ks.is_empty() {
        return Err(Error::Invalid("no constraint operators".into()));
    }
    let dims: Vec<usize> = ks.iter().map(|k| k.nrows()).collect();
    let dimension = dims.iter().try_fold(1usize, |a, d| a.checked_mul(*d).filter(|v| *v <= KERNEL_DIMENSION_CAP));
    let dimension = dimension.ok_or(Error::DimensionCap { dim: dims.iter().product(), cap: KERNEL_DIMENSION_CAP })?;
    let eigs = ks.iter().map(hermitian_eigen).collect::<Result<Vec<_>>>()?;
    let positive = eigs.iter().all(|(vals, _)| vals.iter().all(|l| *l >= -tol));
    let (mut sum_kernel_dim, mut intersection_dim, mut coincide) = (0, 0, true);
    for flat in 0..dimension {
        let mut r = flat;
        let (mut sum, mut all_zero) = (0.0, true);
        for j in (0..ks.len()).rev() {
            let l = eigs[j].0[r % dims[j]];
            r /= dims[j];
            sum += l;
            all_zero &= l.abs() <= tol;
        }
        let in_sum = sum.abs() <= tol;
        sum_kernel_dim += in_sum as usize;
        intersection_dim += all_zero as usize;
        coincide &= in_sum == all_zero;
    }
    let (mut dense_sum_kernel_dim, mut dense_projector_distance) = (None, None);
    if dimension <= DENSE_ORACLE_CAP {
        let total = (0..ks.len()).map(|j| embed(ks, j)).reduce(|a, b| a + b).expect("nonempty");
        let eig = SymmetricEigen::new(total);
        let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        dense_sum_kernel_dim = Some(vals.iter().filter(|l| l.abs() <= tol).count());
        let p_sum = kernel_projector(&vals, &eig.eigenvectors, tol);
        let p_int = eigs.iter().map(|(v, u)| kernel_projector(v, u, tol)).reduce(|a, b| kron(&a, &b)).expect("nonempty");
        dense_projector_distance = Some((p_sum - p_int).iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    Ok(KernelReport { dimension, positive, sum_kernel_dim, intersection_dim, coincide, dense_sum_kernel_dim, dense_projector_distance })
}

/// Diagonal single-event constraint as a matrix.
pub fn diagonal_constraint(symbol: &[f64]) -> DMatrix<C64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(symbol.len(), symbol.iter().map(|v| C64::new(*v, 0.0))))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Bose,
    Fermi,
}

/// One discretized single-event mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub id: u32,
    /// Constraint weight `κ ≥ 0` of one event in this mode.
    pub kappa: f64,
    pub onshell: bool,
    pub p3: [f64; 3],
    #[serde(default)]
    pub p0: f64,
    /// Dirac branch σ (0-based) for φ-basis modes.
    #[serde(default)]
    pub branch: Option<usize>,
}

/// A finite, totally ordered list of modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    pub statistics: Statistics,
    pub modes: Vec<Mode>,
}

/// Weights below this count as on shell.
pub const ONSHELL_KAPPA: f64 = 1e-12;

impl ModeSet {
    pub fn new(statistics: Statistics, modes: Vec<Mode>) -> Result<Self> {
        if modes.len() > MAX_MODES {
            return Err(Error::DimensionCap { dim: modes.len(), cap: MAX_MODES });
        }
        if let Some(m) = modes.iter().find(|m| !(m.kappa >= 0.0 && m.kappa.is_finite())) {
            return Err(Error::Invalid(format!("mode {} has weight {}", m.id, m.kappa)));
        }
        Ok(ModeSet { statistics, modes })
    }

    /// Bosonic modes at the given four-momenta with `κ = (Θ(p⁰)p̄·p̲ − m²)²`.
    pub fn kg(m: f64, momenta: &[FourVector]) -> Result<Self> {
        let modes = momenta
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let kappa = kg_symbol_squared(p, m, Branch::Positive);
                Mode { id: i as u32, kappa, onshell: kappa <= ONSHELL_KAPPA, p3: p.spatial(), p0: p[0], branch: None }
            })
            .collect();
        ModeSet::new(Statistics::Bose, modes)
    }

    /// Fermionic φ-basis modes, four per four-momentum, `κ = λ_σ(p̄)²`.
    pub fn dirac(m: f64, momenta: &[FourVector]) -> Result<Self> {
        let mut modes = Vec::new();
        for p in momenta {
            let sys = dirac::dirac_eigensystem(p, m);
            for s in 0..4 {
                let kappa = sys.lambda[s] * sys.lambda[s];
                modes.push(Mode { id: modes.len() as u32, kappa, onshell: kappa <= ONSHELL_KAPPA, p3: p.spatial(), p0: p[0], branch: Some(s) });
            }
        }
        ModeSet::new(Statistics::Fermi, modes)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Block-diagonal `u(p⃗)` taking standard spinor modes to φ modes
    /// (column σ of each block is `φ_σ`), for Dirac mode sets.
    pub fn dirac_rotation(&self, m: f64) -> DMatrix<C64> {
        let d = self.len();
        let mut u = DMatrix::zeros(d, d);
        for b in (0..d).step_by(4) {
            let block = dirac::u_matrix(m, &self.modes[b].p3);
            for i in 0..4.min(d - b) {
                for j in 0..4.min(d - b) {
                    u[(b + i, b + j)] = block[(i, j)];
                }
            }
        }
        u
    }
}

/// Occupation vector → amplitude.
pub type FockVector = BTreeMap<Vec<u32>, C64>;

/// A superposition of event numbers `Σ_n α_n |Φ^{[n]}⟩`, each `|Φ^{[n]}⟩`
/// given by unnormalized occupation amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    pub statistics: Statistics,
    pub terms: FockVector,
    pub alphas: Vec<C64>,
}

fn event_number(occ: &[u32]) -> usize {
    occ.iter().map(|v| *v as usize).sum()
}

impl FockState {
    pub fn new(statistics: Statistics, terms: FockVector, alphas: Vec<C64>) -> Result<Self> {
        let width = terms.keys().next().map_or(0, |k| k.len());
        let mut sectors = vec![0.0; alphas.len()];
        for (occ, amp) in &terms {
            if occ.len() != width {
                return Err(Error::ShapeMismatch { expected: width, got: occ.len() });
            }
            if occ.len() > MAX_MODES {
                return Err(Error::DimensionCap { dim: occ.len(), cap: MAX_MODES });
            }
            if statistics == Statistics::Fermi {
                if let Some((mode, &occupation)) = occ.iter().enumerate().find(|(_, v)| **v > 1) {
                    return Err(Error::PauliViolation { mode, occupation });
                }
            }
            let n = event_number(occ);
            if n > MAX_FOCK_EVENTS {
                return Err(Error::DimensionCap { dim: n, cap: MAX_FOCK_EVENTS });
            }
            if n >= alphas.len() {
                return Err(Error::Invalid(format!("no weight α_{n} for a {n}-event term")));
            }
            sectors[n] += amp.norm_sqr();
        }
        let mut total = 0.0;
        for (n, a) in alphas.iter().enumerate() {
            if a.norm() > 0.0 && sectors[n] == 0.0 {
                return Err(Error::Invalid(format!("α_{n} ≠ 0 but the {n}-event component is empty")));
            }
            if sectors[n] > 0.0 {
                total += a.norm_sqr();
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!("Σ|α_n|² = {total}, expected 1")));
        }
        Ok(FockState { statistics, terms, alphas })
    }

    /// The event vacuum: no events anywhere, at any time.
    pub fn vacuum(statistics: Statistics, modes: usize) -> Self {
        FockState { statistics, terms: BTreeMap::from([(vec![0; modes], C64::new(1.0, 0.0))]), alphas: vec![C64::new(1.0, 0.0)] }
    }

    /// Splits a normalized occupation vector into event-number sectors.
    pub fn from_vector(statistics: Statistics, vector: FockVector) -> Result<Self> {
        let total = vector.values().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if total == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let top = vector.keys().map(|k| event_number(k)).max().unwrap_or(0);
        let mut sectors = vec![0.0; top + 1];
        for (k, v) in &vector {
            sectors[event_number(k)] += v.norm_sqr();
        }
        let alphas = sectors.iter().map(|s| C64::new(s.sqrt() / total, 0.0)).collect();
        FockState::new(statistics, vector, alphas)
    }

    /// The normalized occupation amplitudes of the whole superposition.
    pub fn vector(&self) -> FockVector {
        let mut sectors = vec![0.0; self.alphas.len()];
        for (k, v) in &self.terms {
            sectors[event_number(k)] += v.norm_sqr();
        }
        self.terms
            .iter()
            .map(|(k, v)| {
                let n = event_number(k);
                (k.clone(), v * self.alphas[n] / sectors[n].sqrt())
            })
            .filter(|(_, v)| v.norm() > 0.0)
            .collect()
    }
}

pub fn fock_norm(v: &FockVector) -> f64 {
    v.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

fn add_to(out: &mut FockVector, key: Vec<u32>, amp: C64) {
    *out.entry(key).or_default() += amp;
}

/// `a†_k`, with `(−1)^{#occupied modes before k}` for fermions.
pub fn create(stats: Statistics, k: usize, v: &FockVector) -> Result<FockVector> {
    let mut out = FockVector::new();
    for (occ, amp) in v {
        let mut next = occ.clone();
        let factor = match stats {
            Statistics::Bose => ((occ[k] + 1) as f64).sqrt(),
            Statistics::Fermi => {
                if occ[k] == 1 {
                    continue;
                }
                if occ[..k].iter().sum::<u32>() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        next[k] += 1;
        if event_number(&next) > MAX_FOCK_EVENTS {
            return Err(Error::DimensionCap { dim: event_number(&next), cap: MAX_FOCK_EVENTS });
        }
        add_to(&mut out, next, amp * factor);
    }
    Ok(out)
}

/// `a_k`.
pub fn annihilate(stats: Statistics, k: usize, v: &FockVector) -> FockVector {
    let mut out = FockVector::new();
    for (occ, amp) in v {
        if occ[k] == 0 {
            continue;
        }
        let factor = match stats {
            Statistics::Bose => (occ[k] as f64).sqrt(),
            Statistics::Fermi => {
                if occ[..k].iter().sum::<u32>() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        let mut next = occ.clone();
        next[k] -= 1;
        add_to(&mut out, next, amp * factor);
    }
    out
}

/// `Σ_{kl} D_kl a†_k a_l`.
pub fn one_body(stats: Statistics, d: &DMatrix<C64>, v: &FockVector) -> Result<FockVector> {
    let mut out = FockVector::new();
    for l in 0..d.ncols() {
        let lowered = annihilate(stats, l, v);
        if lowered.is_empty() {
            continue;
        }
        for k in 0..d.nrows() {
            let c = d[(k, l)];
            if c == C64::default() {
                continue;
            }
            for (key, amp) in create(stats, k, &lowered)? {
                add_to(&mut out, key, amp * c);
            }
        }
    }
    Ok(out)
}

/// Re-expresses a state in new modes `b_σ = Σ_k u*_{kσ} a_k`.
pub fn change_basis(stats: Statistics, u: &DMatrix<C64>, v: &FockVector) -> Result<FockVector> {
    let modes = u.nrows();
    let mut out = FockVector::new();
    for (occ, amp) in v {
        // |occ⟩ = Π_k (a†_k)^{n_k}/√(n_k!) |0⟩ with k ascending leftmost
        let mut state = FockVector::from([(vec![0u32; modes], *amp)]);
        let mut norm = 1.0;
        for k in (0..modes).rev() {
            for c in 0..occ[k] {
                norm *= ((c + 1) as f64).sqrt();
                let mut next = FockVector::new();
                for s in 0..modes {
                    let w = u[(k, s)].conj();
                    if w == C64::default() {
                        continue;
                    }
                    for (key, a) in create(stats, s, &state)? {
                        add_to(&mut next, key, a * w);
                    }
                }
                state = next;
            }
        }
        for (key, a) in state {
            add_to(&mut out, key, a / norm);
        }
    }
    out.retain(|_, a| a.norm() > 1e-300);
    Ok(out)
}

/// `Σ_k κ_k n̂_k` on the whole superposition, and `‖Kψ‖/‖ψ‖`.
pub fn fock_constraint_apply(kind: OnShellKind, fock: &FockState, modes: &ModeSet) -> Result<(FockVector, f64)> {
    let expected = match kind {
        OnShellKind::Dirac => Statistics::Fermi,
        _ => Statistics::Bose,
    };
    if fock.statistics != expected || modes.statistics != expected {
        return Err(Error::Invalid(format!("{kind:?} constraints act on {expected:?} states")));
    }
    let v = fock.vector();
    let mut image = FockVector::new();
    for (occ, amp) in &v {
        if occ.len() != modes.len() {
            return Err(Error::ShapeMismatch { expected: modes.len(), got: occ.len() });
        }
        let k: f64 = occ.iter().zip(&modes.modes).map(|(n, m)| *n as f64 * m.kappa).sum();
        if k != 0.0 {
            image.insert(occ.clone(), amp * k);
        }
    }
    let residual = fock_norm(&image) / fock_norm(&v);
    Ok((image, residual))
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    occupations: Vec<u32>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct FockJson {
    statistics: Statistics,
    modes: Vec<Mode>,
    terms: Vec<TermJson>,
    alphas: Vec<[f64; 2]>,
}

pub fn fock_to_json(fock: &FockState, modes: &ModeSet) -> Result<String> {
    let doc = FockJson {
        statistics: fock.statistics,
        modes: modes.modes.clone(),
        terms: fock.terms.iter().map(|(k, v)| TermJson { occupations: k.clone(), re: v.re, im: v.im }).collect(),
        alphas: fock.alphas.iter().map(|a| [a.re, a.im]).collect(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn fock_from_json(text: &str) -> Result<(FockState, ModeSet)> {
    let doc: FockJson = serde_json::from_str(text)?;
    let modes = ModeSet::new(doc.statistics, doc.modes)?;
    let terms = doc.terms.into_iter().map(|t| (t.occupations, C64::new(t.re, t.im))).collect();
    let alphas = doc.alphas.into_iter().map(|[re, im]| C64::new(re, im)).collect();
    Ok((FockState::new(doc.statistics, terms, alphas)?, modes))
}

/// Marginal mean position of event `j` in an equal-time slice.
pub fn slice_mean_position(slice: &[C64], n: usize, modes: &OnShellModes, j: usize) -> [f64; 3] {
    marginal_moments(slice, n, modes, j, false).0
}
