//! Dirac matrices, the Hermitian constraint matrix `M(p̄) = γ⁰(γ̄·p̲ − m)`,
//! and its closed-form eigensystem in the helicity basis.

use nalgebra::{Matrix2, Matrix4, Vector4};

use crate::field::C64;
use crate::lorentz::{Elementary, LorentzTransform};
use crate::vector::FourVector;

pub type Mat4c = Matrix4<C64>;
pub type Spinor = Vector4<C64>;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn pauli(i: usize) -> Matrix2<C64> {
    match i {
        1 => Matrix2::new(ZERO, ONE, ONE, ZERO),
        2 => Matrix2::new(ZERO, -I, I, ZERO),
        3 => Matrix2::new(ONE, ZERO, ZERO, -ONE),
        _ => panic!("Pauli index {i} out of range"),
    }
}

fn blocks(a: Matrix2<C64>, b: Matrix2<C64>, c: Matrix2<C64>, d: Matrix2<C64>) -> Mat4c {
    let mut m = Mat4c::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(&a);
    m.fixed_view_mut::<2, 2>(0, 2).copy_from(&b);
    m.fixed_view_mut::<2, 2>(2, 0).copy_from(&c);
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(&d);
    m
}

/// Dirac representation: `γ⁰ = diag(1, 1, −1, −1)`, `γⁱ = [[0, σᵢ], [−σᵢ, 0]]`.
pub fn gamma(mu: usize) -> Mat4c {
    let z = Matrix2::zeros();
    let one = Matrix2::identity();
    match mu {
        0 => blocks(one, z, z, -one),
        1..=3 => blocks(z, pauli(mu), -pauli(mu), z),
        _ => panic!("gamma index {mu} out of range"),
    }
}

/// `Σᵢ = diag(σᵢ, σᵢ)`.
pub fn spin(i: usize) -> Mat4c {
    let z = Matrix2::zeros();
    blocks(pauli(i), z, z, pauli(i))
}

/// `αᵢ = γ⁰γⁱ`.
pub fn alpha(i: usize) -> Mat4c {
    gamma(0) * gamma(i)
}

pub fn dispersion(m: f64, p: &[f64; 3]) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + m * m).sqrt()
}

fn sigma_dot(p: &[f64; 3]) -> Matrix2<C64> {
    pauli(1) * C64::from(p[0]) + pauli(2) * C64::from(p[1]) + pauli(3) * C64::from(p[2])
}

/// `[[(p⁰ − m)𝟙, −σ⃗·p⃗], [−σ⃗·p⃗, (p⁰ + m)𝟙]]`.
pub fn dirac_matrix(p: &FourVector, m: f64) -> Mat4c {
    let sp = sigma_dot(&p.spatial());
    let one = Matrix2::<C64>::identity();
    blocks(one * C64::from(p[0] - m), -sp, -sp, one * C64::from(p[0] + m))
}

/// `E^{(σ)}_p`: `−E_p` for σ = 1, 3 and `+E_p` for σ = 2, 4 (0-based here).
pub fn branch_energies(m: f64, p: &[f64; 3]) -> [f64; 4] {
    let e = dispersion(m, p);
    [-e, e, -e, e]
}

/// Branch sign of eigen-index `sigma` (0-based): `−1` for σ = 0, 2.
pub fn branch_sign(sigma: usize) -> f64 {
    if sigma % 2 == 0 {
        -1.0
    } else {
        1.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiracEigen {
    /// `λ_σ = p⁰ − E^{(σ)}_p`.
    pub lambda: [f64; 4],
    pub energies: [f64; 4],
    /// Columns are the eigenvectors `φ_σ` in the standard spinor basis.
    pub u: Mat4c,
}

impl DiracEigen {
    pub fn phi(&self, sigma: usize) -> Spinor {
        self.u.column(sigma).into_owned()
    }
}

/// Unit helicity two-spinors `(χ₊, χ₋)` for direction `n̂`, in the chart that
/// avoids the `√(1 ± n³)` singularity.
fn helicity_pair(n: [f64; 3]) -> (nalgebra::Vector2<C64>, nalgebra::Vector2<C64>) {
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let np = C64::new(n[0], n[1]);
    let nm = np.conj();
    if n[2] >= 0.0 {
        let a = (1.0 + n[2]).sqrt();
        let plus = nalgebra::Vector2::new(C64::from(a), np / a) * C64::from(s2);
        let minus = nalgebra::Vector2::new(-nm / a, C64::from(a)) * C64::from(s2);
        (plus, minus)
    } else {
        let b = (1.0 - n[2]).sqrt();
        let plus = nalgebra::Vector2::new(nm / b, C64::from(b)) * C64::from(s2);
        let minus = nalgebra::Vector2::new(C64::from(b), -np / b) * C64::from(s2);
        (plus, minus)
    }
}

/// Rotates the column so its largest-magnitude entry is real and positive.
fn fix_phase(v: &mut Spinor) {
    let max = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if let Some(k) = v.iter().position(|c| c.norm() >= max * (1.0 - 1e-9)) {
        let ph = v[k].conj() / v[k].norm();
        *v *= ph;
    }
}

/// The unitary `u(p⃗)` whose columns diagonalize `M(p̄)` for every `p⁰`.
pub fn u_matrix(m: f64, p: &[f64; 3]) -> Mat4c {
    let e = dispersion(m, p);
    let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    let n = if norm > 0.0 { [p[0] / norm, p[1] / norm, p[2] / norm] } else { [0.0, 0.0, 1.0] };
    let ratio = if e > 0.0 { m / e } else { 1.0 };
    let (lo, hi) = ((1.0 - ratio).max(0.0).sqrt(), (1.0 + ratio).sqrt());
    let (plus, minus) = helicity_pair(n);
    let up = |chi: &nalgebra::Vector2<C64>| Spinor::new(chi[0], chi[1], ZERO, ZERO);
    let down = |chi: &nalgebra::Vector2<C64>| Spinor::new(ZERO, ZERO, chi[0], chi[1]);
    let (s1, s2, s3, s4) = (up(&plus), down(&plus), up(&minus), down(&minus));
    let h = C64::from(std::f64::consts::FRAC_1_SQRT_2);
    let (lo, hi) = (C64::from(lo), C64::from(hi));
    let mut cols = [
        (s1 * lo - s2 * hi) * h,
        (s1 * hi + s2 * lo) * h,
        (s3 * lo + s4 * hi) * h,
        (s3 * hi - s4 * lo) * h,
    ];
    for c in cols.iter_mut() {
        fix_phase(c);
    }
    Mat4c::from_columns(&cols)
}

pub fn dirac_eigensystem(p: &FourVector, m: f64) -> DiracEigen {
    let p3 = p.spatial();
    let energies = branch_energies(m, &p3);
    DiracEigen { lambda: energies.map(|e| p[0] - e), energies, u: u_matrix(m, &p3) }
}

/// Generic Hermitian eigen-solver, eigenvalues ascending.
pub fn oracle_eigensystem(mat: &Mat4c) -> ([f64; 4], Mat4c) {
    let eig = nalgebra::SymmetricEigen::new(*mat);
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = std::array::from_fn(|k| eig.eigenvalues[order[k]]);
    let cols: Vec<Spinor> = order.iter().map(|&k| eig.eigenvectors.column(k).into_owned()).collect();
    (values, Mat4c::from_columns(&cols))
}

/// Agreement of the closed-form eigensystem with the generic solver at one
/// four-momentum. Errors are relative to `1 + |p̄| + m`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct OracleComparison {
    pub eigenvalue_error: f64,
    /// `max |M u − u diag(λ)|`.
    pub eigenvector_residual: f64,
    /// `max |u†u − 𝟙|`, absolute.
    pub unitarity_error: f64,
    /// Eigenspace projectors against the solver's, per degenerate pair.
    pub projector_error: f64,
}

pub fn oracle_comparison(p: &FourVector, m: f64) -> OracleComparison {
    let mm = dirac_matrix(p, m);
    let sys = dirac_eigensystem(p, m);
    let scale = 1.0 + p.0.iter().map(|v| v.abs()).sum::<f64>() + m;
    let diag = Mat4c::from_diagonal(&nalgebra::Vector4::from_iterator(sys.lambda.iter().map(|l| C64::from(*l))));
    let eigenvector_residual = max_abs(&(mm * sys.u - sys.u * diag)) / scale;
    let unitarity_error = max_abs(&(sys.u.adjoint() * sys.u - Mat4c::identity()));
    let (vals, vecs) = oracle_eigensystem(&mm);
    let mut ours = sys.lambda;
    ours.sort_by(f64::total_cmp);
    let eigenvalue_error = vals.iter().zip(ours).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
    let proj = |cols: &[Spinor]| cols.iter().fold(Mat4c::zeros(), |acc, c| acc + c * c.adjoint());
    let mut projector_error = 0.0f64;
    // when the two branches coincide (p⁰ and m both zero at p⃗ = 0) the
    // eigenspace is all of ℂ⁴ and there is nothing to compare
    for pair in [[0usize, 2], [1, 3]] {
        let value = sys.lambda[pair[0]];
        let cols: Vec<Spinor> = (0..4).filter(|&k| (vals[k] - value).abs() < 1e-6 * scale).map(|k| vecs.column(k).into_owned()).collect();
        if cols.len() == 2 {
            projector_error = projector_error.max(max_abs(&(proj(&[sys.phi(pair[0]), sys.phi(pair[1])]) - proj(&cols))));
        }
    }
    OracleComparison { eigenvalue_error, eigenvector_residual, unitarity_error, projector_error }
}

/// Standard spinor representation `S` of one plane transform, satisfying
/// `S⁻¹ γ^μ S = Λ^μ_ν γ^ν`.
pub fn elementary_spinor(e: &Elementary) -> Mat4c {
    match *e {
        Elementary::Rotation { axis, angle } => {
            let (s, c) = (0.5 * angle).sin_cos();
            Mat4c::identity() * C64::from(c) - spin(axis) * (I * s)
        }
        Elementary::Boost { axis, rapidity } => {
            let (s, c) = ((0.5 * rapidity).sinh(), (0.5 * rapidity).cosh());
            Mat4c::identity() * C64::from(c) - alpha(axis) * C64::from(s)
        }
    }
}

/// Standard spinor representation of a whole transform via its plane factors.
pub fn standard_spinor(lambda: &LorentzTransform) -> Mat4c {
    lambda.elementary_factors().iter().fold(Mat4c::identity(), |acc, f| acc * elementary_spinor(f))
}

/// `max |S⁻¹γ^μS − Λ^μ_ν γ^ν|` over all μ.
pub fn covariance_defect(s: &Mat4c, lambda: &LorentzTransform) -> f64 {
    let inv = s.try_inverse().expect("spinor representation is invertible");
    (0..4)
        .map(|mu| {
            let lhs = inv * gamma(mu) * s;
            let rhs = (0..4).fold(Mat4c::zeros(), |acc, nu| acc + gamma(nu) * C64::from(lambda.matrix[mu][nu]));
            (lhs - rhs).iter().map(|c| c.norm()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

pub fn max_abs(m: &Mat4c) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}
