//! Dictionary between 3D+1 quantum trajectories and event distributions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraints::{self, branch_norms, dispersion, OnShellKind, OnShellState};
use crate::dirac::{self, Mat4c, Spinor};
use crate::error::{Error, Result};
use crate::event::{EventState, Rep};
use crate::fft::{fft3, ifft3};
use crate::field::{ComplexField, Field3, C64};

/// Largest negative-to-positive branch norm ratio accepted when lifting a
/// Klein-Gordon trajectory with a known time derivative.
pub const BRANCH_TOLERANCE: f64 = 1e-8;

/// Initial data of an ordinary time-dependent wavefunction.
#[derive(Clone, Debug)]
pub struct QMTrajectory {
    pub mass: f64,
    pub kind: OnShellKind,
    pub psi0: Field3,
    /// `∂_tψ` at `t = 0`; when present the branch content is checked.
    pub dpsi0_dt: Option<Field3>,
    pub times: Vec<f64>,
}

impl QMTrajectory {
    pub fn new(kind: OnShellKind, mass: f64, psi0: Field3) -> Self {
        QMTrajectory { mass, kind, psi0, dpsi0_dt: None, times: Vec::new() }
    }

    pub fn with_times(mut self, times: Vec<f64>) -> Self {
        self.times = times;
        self
    }

    pub fn with_time_derivative(mut self, dpsi: Field3) -> Self {
        self.dpsi0_dt = Some(dpsi);
        self
    }

    /// Slices of the lifted state at every evaluation time.
    pub fn slices(&self) -> Result<Vec<(f64, Field3)>> {
        let state = lift_qm_to_geb(self)?;
        Ok(self.times.iter().map(|&t| (t, state.slice(t))).collect())
    }
}

fn map_momenta(field: &Field3, f: impl Fn([f64; 3], C64) -> C64) -> Field3 {
    let grid = field.grid();
    let points = field.points();
    let data = field.data().iter().enumerate().map(|(k, v)| f(grid.momentum(&grid.unravel(k % points)), *v)).collect();
    field.with_data(data).expect("same shape")
}

/// Applies a 4×4 matrix depending on `p⃗` to every momentum sample.
fn map_spinors(field: &Field3, f: impl Fn([f64; 3]) -> Mat4c) -> Field3 {
    let grid = field.grid();
    let points = field.points();
    let src = field.data();
    let mut out = vec![C64::default(); 4 * points];
    for k in 0..points {
        let m = f(grid.momentum(&grid.unravel(k)));
        let v = m * Spinor::from_fn(|c, _| src[c * points + k]);
        for c in 0..4 {
            out[c * points + k] = v[c];
        }
    }
    field.with_data(out).expect("same shape")
}

/// On-shell state whose `t = 0` slice is `ψ₀`.
pub fn lift_qm_to_geb(traj: &QMTrajectory) -> Result<OnShellState> {
    let m = traj.mass;
    let psi = &traj.psi0;
    if psi.components() != traj.kind.components() {
        return Err(Error::ShapeMismatch { expected: traj.kind.components(), got: psi.components() });
    }
    let ft = fft3(psi);
    match traj.kind {
        OnShellKind::Dirac => {
            let alpha = map_spinors(&ft, |p| dirac::u_matrix(m, &p).adjoint());
            OnShellState::from_amplitude(OnShellKind::Dirac, m, alpha)
        }
        kind => {
            if let Some(dpsi) = &traj.dpsi0_dt {
                let (pos, neg) = branch_norms(psi, dpsi, m)?;
                let ratio = if kind == OnShellKind::KgPositive { neg / pos } else { pos / neg };
                if !(ratio < BRANCH_TOLERANCE) {
                    return Err(Error::BranchViolation(ratio));
                }
            }
            OnShellState::from_amplitude(kind, m, ft)
        }
    }
}

/// The 3D wavefunction at time `t`.
pub fn slice_at_time(state: &OnShellState, t: f64) -> Field3 {
    state.slice(t)
}

/// `e^{−iHt}ψ₀` with `H = √(m² − ∇²)`, as a spectral multiplier.
pub fn schrodinger_evolve(psi0: &Field3, m: f64, t: f64) -> Field3 {
    evolve_scalar(psi0, m, t, 1.0)
}

/// `e^{+iHt}ψ₀`, the negative-energy Klein-Gordon branch.
pub fn schrodinger_evolve_negative(psi0: &Field3, m: f64, t: f64) -> Field3 {
    evolve_scalar(psi0, m, t, -1.0)
}

fn evolve_scalar(psi0: &Field3, m: f64, t: f64, sign: f64) -> Field3 {
    if t == 0.0 {
        return psi0.clone();
    }
    let ft = fft3(psi0);
    ifft3(&map_momenta(&ft, |p, v| v * C64::from_polar(1.0, -sign * dispersion(m, &p) * t)))
}

/// Free Dirac Hamiltonian `α⃗·p⃗ + βm` at one momentum.
pub fn dirac_hamiltonian(m: f64, p: &[f64; 3]) -> Mat4c {
    let mut h = dirac::gamma(0) * C64::new(m, 0.0);
    for (j, pj) in p.iter().enumerate() {
        h += dirac::alpha(j + 1) * C64::new(*pj, 0.0);
    }
    h
}

/// `e^{−iHt}ψ₀` through `e^{−iHt} = cos(Et) − i sin(Et) H/E`.
pub fn dirac_evolve(psi0: &Field3, m: f64, t: f64) -> Result<Field3> {
    if psi0.components() != 4 {
        return Err(Error::ShapeMismatch { expected: 4, got: psi0.components() });
    }
    if t == 0.0 {
        return Ok(psi0.clone());
    }
    let ft = fft3(psi0);
    let evolved = map_spinors(&ft, |p| {
        let e = dispersion(m, &p);
        if e == 0.0 {
            return Mat4c::identity();
        }
        let h = dirac_hamiltonian(m, &p);
        Mat4c::identity() * C64::new((e * t).cos(), 0.0) - h * C64::new(0.0, (e * t).sin() / e)
    });
    Ok(ifft3(&evolved))
}

/// Projects a spinor wavefunction onto branch `σ` content:
/// returns the 3D norm of `α_σ` for every σ.
pub fn branch_content(psi: &Field3, m: f64) -> Result<[f64; 4]> {
    let traj = QMTrajectory::new(OnShellKind::Dirac, m, psi.clone());
    let ft = fft3(&traj.psi0);
    let alpha = map_spinors(&ft, |p| dirac::u_matrix(m, &p).adjoint());
    let dv = alpha.grid().momentum_cell_volume();
    Ok(std::array::from_fn(|s| (alpha.component(s).iter().map(|v| v.norm_sqr()).sum::<f64>() * dv).sqrt()))
}

fn l2_norm(field: &Field3) -> f64 {
    (field.sum_sqr() * field.grid().cell_volume()).sqrt()
}

/// `‖slice(τ) − target‖ / ‖target‖`.
pub fn check_initial_condition(state: &OnShellState, tau: f64, target: &Field3) -> Result<f64> {
    let slice = state.slice(tau);
    let norm = l2_norm(target);
    if norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((slice.dist_sqr(target)? * target.grid().cell_volume()).sqrt() / norm)
}

/// `t ↦ Σ_x⃗ |Φ(t,x⃗)|² d³x` for every time plane.
pub fn norm_modulation(state: &EventState) -> Result<Vec<f64>> {
    if state.rep() != Rep::Position {
        return Err(Error::WrongRepresentation { expected: "position" });
    }
    let grid = state.grid();
    let nt = grid.axes[0].n;
    let n3 = grid.len() / nt;
    let d3: f64 = grid.axes[1..].iter().map(|a| a.delta).product();
    let field = state.field();
    Ok((0..nt)
        .map(|j| (0..field.components()).map(|c| field.component(c)[j * n3..(j + 1) * n3].iter().map(|v| v.norm_sqr()).sum::<f64>()).sum::<f64>() * d3)
        .collect())
}

/// Klein-Gordon four-current `j^μ = i(ψ*∂^μψ − ψ∂^μψ*)` at one instant.
/// `j⁰` is a charge density: positive on the positive branch, negative on
/// the negative one.
#[derive(Clone, Debug)]
pub struct KgCurrent {
    pub j0: Vec<f64>,
    pub j: [Vec<f64>; 3],
    /// `max |∂_μ j^μ|` over the grid.
    pub max_divergence: f64,
    /// `max |j^μ|` over the grid and all μ.
    pub scale: f64,
}

impl KgCurrent {
    pub fn relative_divergence(&self) -> f64 {
        if self.scale == 0.0 {
            0.0
        } else {
            self.max_divergence / self.scale
        }
    }
}

pub fn kg_current(state: &OnShellState, t: f64) -> Result<KgCurrent> {
    if state.kind() == OnShellKind::Dirac {
        return Err(Error::Invalid("the four-current diagnostic is for Klein-Gordon states".into()));
    }
    let psi = state.slice(t);
    let dt = state.slice_derivative(t, 1);
    let dtt = state.slice_derivative(t, 2);
    let grad: [Field3; 3] = std::array::from_fn(|k| constraints::spatial_derivative(&psi, k));
    let lap = constraints::laplacian(&psi);
    let s = psi.data();
    let j0: Vec<f64> = s.iter().zip(dt.data()).map(|(a, b)| -2.0 * (a.conj() * b).im).collect();
    let j: [Vec<f64>; 3] = std::array::from_fn(|k| s.iter().zip(grad[k].data()).map(|(a, b)| 2.0 * (a.conj() * b).im).collect());
    // ∂_t j⁰ = −2 Im(ψ*∂_t²ψ), ∂_k j^k = 2 Im(ψ*∇²ψ); the |∂ψ|² terms are real
    let max_divergence = (0..s.len())
        .map(|k| (-2.0 * (s[k].conj() * dtt.data()[k]).im + 2.0 * (s[k].conj() * lap.data()[k]).im).abs())
        .fold(0.0, f64::max);
    let scale = j0.iter().chain(j.iter().flatten()).fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(KgCurrent { j0, j, max_divergence, scale })
}

/// `S Ψ(Λ⁻¹x)` and its time derivative on the plane `t` of the boosted
/// frame, for a boost along `axis` with velocity `v` (`t' = γ(t − v x^k)`);
/// `S` is the spinor boost for Dirac states and 1 otherwise. Evaluated
/// pointwise from the on-shell amplitudes; points whose preimage leaves the
/// box along `axis` are set to zero.
pub fn boosted_slice(state: &OnShellState, axis: usize, v: f64, t: f64) -> Result<(Field3, Field3)> {
    let lambda = crate::lorentz::boost_matrix(axis, v)?;
    let d = axis - 1;
    let m = state.mass();
    let comps = state.kind().components();
    let gamma = 1.0 / (1.0 - v * v).sqrt();
    let grid = *state.grid();
    let points = grid.len();
    let line = grid.axes[d];
    // spinor amplitudes per energy sign: Σ_σ φ_σ α_σ, or the scalar amplitude
    let mut branches: Vec<(f64, Field3)> = Vec::new();
    match state.kind() {
        OnShellKind::KgPositive => branches.push((1.0, state.amplitude().clone())),
        OnShellKind::KgNegative => branches.push((-1.0, state.amplitude().clone())),
        OnShellKind::Dirac => {
            for s in [-1.0, 1.0] {
                let keep: Vec<bool> = (0..4).map(|sg| dirac::branch_sign(sg) == s).collect();
                let masked = map_spinors(state.amplitude(), |p| {
                    let mut u = dirac::u_matrix(m, &p);
                    for (c, k) in keep.iter().enumerate() {
                        if !k {
                            u.column_mut(c).fill(C64::default());
                        }
                    }
                    u
                });
                branches.push((s, masked));
            }
        }
    }
    let momenta: Vec<[f64; 3]> = (0..points).map(|k| grid.momentum(&grid.unravel(k))).collect();
    let planes: Vec<Option<(Field3, Field3)>> = (0..line.n)
        .into_par_iter()
        .map(|i| {
            let x = line.x(i);
            let y0 = gamma * (t + v * x);
            let yk = gamma * (x + v * t);
            // preimages outside the box are zero, as in the resampling action
            if yk < line.x(0) - 0.5 * line.delta || yk >= line.x(line.n - 1) + 0.5 * line.delta {
                return None;
            }
            // the inverse transform below supplies e^{i p^k x}, so only the
            // remaining e^{i p^k (y^k − x)} is put in by hand
            let mut h = vec![C64::default(); comps * points];
            let mut hd = vec![C64::default(); comps * points];
            for (sign, amp) in &branches {
                for (k, p) in momenta.iter().enumerate() {
                    let e = sign * dispersion(m, p);
                    let w = C64::from_polar(1.0, p[d] * (yk - x) - e * y0);
                    let wd = w * C64::new(0.0, gamma * (v * p[d] - e));
                    for c in 0..comps {
                        h[c * points + k] += amp.data()[c * points + k] * w;
                        hd[c * points + k] += amp.data()[c * points + k] * wd;
                    }
                }
            }
            let h = ifft3(&state.amplitude().with_data(h).expect("same shape"));
            let hd = ifft3(&state.amplitude().with_data(hd).expect("same shape"));
            Some((h, hd))
        })
        .collect();
    let spin = (comps == 4).then(|| dirac::standard_spinor(&lambda));
    let stride: usize = grid.shape()[d + 1..].iter().product();
    let mut value = ComplexField::zeros(grid, comps)?;
    let mut deriv = ComplexField::zeros(grid, comps)?;
    for k in 0..points {
        let Some((h, hd)) = &planes[(k / stride) % line.n] else { continue };
        for (src, dst) in [(h, &mut value), (hd, &mut deriv)] {
            match &spin {
                None => dst.data_mut()[k] = src.data()[k],
                Some(s) => {
                    let out = s * Spinor::from_fn(|c, _| src.data()[c * points + k]);
                    for c in 0..4 {
                        dst.data_mut()[c * points + k] = out[c];
                    }
                }
            }
        }
    }
    Ok((value, deriv))
}

/// Result of comparing the on-shell boost with the transformed event
/// distribution on one slice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostComparison {
    pub velocity: f64,
    /// Max pointwise difference of the unit-normalized slices.
    pub max_difference: f64,
    /// Wrong-branch to right-branch norm ratio of the transformed slice; for
    /// Dirac states, the change in the negative-branch share of the norm.
    pub leakage: f64,
}

pub fn boost_two_path(state: &OnShellState, axis: usize, v: f64, t: f64) -> Result<BoostComparison> {
    let a = state.onshell_boost(axis, v)?.slice(t);
    let (b, db) = boosted_slice(state, axis, v, t)?;
    let nb = l2_norm(&b);
    if nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let b_unit = b.clone().scaled(1.0 / nb);
    let a_unit = a.clone().scaled(1.0 / l2_norm(&a));
    let leakage = match state.kind() {
        OnShellKind::KgPositive => {
            let (pos, neg) = branch_norms(&b, &db, state.mass())?;
            neg / pos
        }
        OnShellKind::KgNegative => {
            let (pos, neg) = branch_norms(&b, &db, state.mass())?;
            pos / neg
        }
        OnShellKind::Dirac => {
            // each branch's share of the norm is frame independent
            let share = |c: [f64; 4]| {
                let neg = c[0] * c[0] + c[2] * c[2];
                (neg / (neg + c[1] * c[1] + c[3] * c[3])).sqrt()
            };
            let before = share(branch_content(&state.slice(0.0), state.mass())?);
            let after = share(branch_content(&b, state.mass())?);
            (after - before).abs()
        }
    };
    Ok(BoostComparison { velocity: v, max_difference: a_unit.max_abs_diff(&b_unit)?, leakage })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{build_onshell_kg, gaussian_amplitude, Branch};
    use crate::grid::{AxisGrid, Grid, Grid3D};

    fn grid() -> Grid3D {
        Grid::cubic(16).unwrap()
    }

    fn packet(g: &Grid3D, comps: &[C64]) -> Field3 {
        let f = ComplexField::from_fn(*g, comps.len(), |c, idx| {
            let x = g.position(&idx);
            let r2 = x[0] * x[0] + (x[1] - 0.3).powi(2) + x[2] * x[2];
            comps[c] * C64::from_polar((-r2 / 2.0).exp(), 0.4 * x[0])
        })
        .unwrap();
        let n = l2_norm(&f);
        f.scaled(1.0 / n)
    }

    #[test]
    fn kg_round_trip_and_evolution() {
        let g = grid();
        let psi = packet(&g, &[C64::new(1.0, 0.0)]);
        let traj = QMTrajectory::new(OnShellKind::KgPositive, 1.0, psi.clone()).with_times(vec![0.0, 0.5, 1.0]);
        let state = lift_qm_to_geb(&traj).unwrap();
        assert!(state.slice(0.0).max_abs_diff(&psi).unwrap() < 1e-12);
        for (t, s) in traj.slices().unwrap() {
            assert!(s.max_abs_diff(&schrodinger_evolve(&psi, 1.0, t)).unwrap() < 1e-12);
            assert!((l2_norm(&s) - 1.0).abs() < 1e-12);
        }
        assert_eq!(schrodinger_evolve(&psi, 1.0, 0.0), psi);
        let back = schrodinger_evolve_negative(&schrodinger_evolve(&psi, 1.0, 2.0), 1.0, 2.0);
        assert!(back.max_abs_diff(&psi).unwrap() < 1e-12);
    }

    #[test]
    fn dirac_oracle_matches_slices() {
        let g = grid();
        let w = [C64::new(1.0, 0.0), C64::new(0.0, 0.3), C64::new(0.2, 0.0), C64::new(0.0, -0.1)];
        let psi = packet(&g, &w);
        let state = lift_qm_to_geb(&QMTrajectory::new(OnShellKind::Dirac, 1.0, psi.clone())).unwrap();
        for t in [0.0, 0.7, 3.0] {
            let a = state.slice(t);
            let b = dirac_evolve(&psi, 1.0, t).unwrap();
            assert!(a.max_abs_diff(&b).unwrap() < 1e-12, "{t}");
        }
    }

    #[test]
    fn positive_spinors_have_no_negative_content() {
        let g = grid();
        let alpha = gaussian_amplitude(&g, [0.2, 0.0, 0.0], [0.8; 3], [0.0; 3], &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.5, 0.5)]).unwrap();
        let state = constraints::build_onshell_dirac(&alpha, 1.0).unwrap();
        let psi = dirac_evolve(&state.slice(0.0), 1.0, 1.5).unwrap();
        let c = branch_content(&psi, 1.0).unwrap();
        assert!(c[0] < 1e-12 && c[2] < 1e-12 && c[1] > 0.1 && c[3] > 0.1, "{c:?}");
    }

    #[test]
    fn branch_check_on_lift() {
        let g = grid();
        let psi = packet(&g, &[C64::new(1.0, 0.0)]);
        let state = lift_qm_to_geb(&QMTrajectory::new(OnShellKind::KgPositive, 1.0, psi.clone())).unwrap();
        let good = QMTrajectory::new(OnShellKind::KgPositive, 1.0, psi.clone()).with_time_derivative(state.slice_derivative(0.0, 1));
        assert!(lift_qm_to_geb(&good).is_ok());
        let still = QMTrajectory::new(OnShellKind::KgPositive, 1.0, psi).with_time_derivative(ComplexField::zeros(g, 1).unwrap());
        assert!(matches!(lift_qm_to_geb(&still), Err(Error::BranchViolation(_))));
    }

    #[test]
    fn initial_condition_phase_mismatch() {
        let g = grid();
        let idx = [9usize, 8, 8];
        let mut f = ComplexField::zeros(g, 1).unwrap();
        f.data_mut()[g.ravel(&idx)] = C64::new(1.0, 0.0);
        let state = build_onshell_kg(&f, 1.0, Branch::Positive).unwrap();
        let e = dispersion(1.0, &g.momentum(&idx));
        let target = state.slice(0.3);
        assert!(check_initial_condition(&state, 0.3, &target).unwrap() < 1e-12);
        let r = check_initial_condition(&state, 0.8, &target).unwrap();
        assert!((r - 2.0 * (e * 0.5 / 2.0).sin().abs()).abs() < 1e-12);
    }

    #[test]
    fn current_of_modes() {
        let g = grid();
        let idx = [10usize, 8, 8];
        let p = g.momentum(&idx);
        let e = dispersion(1.0, &p);
        let mut f = ComplexField::zeros(g, 1).unwrap();
        f.data_mut()[g.ravel(&idx)] = C64::new(1.0, 0.0);
        let cur = kg_current(&build_onshell_kg(&f, 1.0, Branch::Positive).unwrap(), 0.4).unwrap();
        let rho = 1.0 / g.axes.iter().map(|a| a.length()).product::<f64>();
        assert!(cur.j0.iter().all(|v| (v - 2.0 * e * rho).abs() < 1e-12 * e * rho));
        assert!(cur.j[0].iter().all(|v| (v - 2.0 * p[0] * rho).abs() < 1e-12 * e * rho));
        assert!(cur.relative_divergence() < 1e-12);
        // standing wave: real f symmetric under p → −p
        let mirror = [6usize, 8, 8];
        f.data_mut()[g.ravel(&mirror)] = C64::new(1.0, 0.0);
        let cur = kg_current(&build_onshell_kg(&f, 1.0, Branch::Positive).unwrap(), 0.0).unwrap();
        assert!(cur.j.iter().flatten().all(|v| v.abs() < 1e-14));
        let neg = kg_current(&build_onshell_kg(&f, 1.0, Branch::Negative).unwrap(), 0.0).unwrap();
        assert!(neg.j0.iter().all(|v| *v <= 1e-15));
    }

    #[test]
    fn boost_paths_agree() {
        let g: Grid3D = Grid::new([AxisGrid::new(128, 0.3, 0.0).unwrap(), AxisGrid::new(16, 0.63, 0.0).unwrap(), AxisGrid::new(16, 0.63, 0.0).unwrap()]).unwrap();
        let psi = ComplexField::from_fn(g, 1, |_, idx| {
            let x = g.position(&idx);
            C64::new((-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 2.0).exp(), 0.0)
        })
        .unwrap();
        let state = lift_qm_to_geb(&QMTrajectory::new(OnShellKind::KgPositive, 1.0, psi)).unwrap();
        for v in [0.2, -0.4] {
            let c = boost_two_path(&state, 1, v, 0.0).unwrap();
            assert!(c.max_difference < 1e-4 && c.leakage < 1e-8, "{c:?}");
        }
    }
}
