//! Proper orthochronous Lorentz transforms as 4×4 real matrices `Λ^μ_ν`.
//!
//! Every transform can be factored into elementary boosts and rotations, each
//! acting on a single coordinate plane. The resampling code in
//! [`crate::poincare`] relies on that factorization: a plane transform with
//! equal diagonal entries is exactly three shears.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{FourVector, ETA};

pub type Mat4 = [[f64; 4]; 4];

const IDENTITY: Mat4 = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
];

/// Tolerance for `ΛᵀηΛ = η`, scaled by the largest entry squared.
pub const LORENTZ_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum TransformKind {
    Identity,
    Boost { axis: usize, velocity: f64 },
    Rotation { axis: usize, angle: f64 },
    Composite,
}

/// A transform acting on a single coordinate plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Elementary {
    /// Boost along spatial `axis` with the given rapidity (`v = tanh η`).
    Boost { axis: usize, rapidity: f64 },
    /// Right-handed rotation about spatial `axis`.
    Rotation { axis: usize, angle: f64 },
}

impl Elementary {
    /// The coordinate plane `(i, j)` and the 2×2 block `[[a, b], [c, d]]` with
    /// `(x_i', x_j') = block · (x_i, x_j)`.
    pub fn plane(&self) -> ((usize, usize), [[f64; 2]; 2]) {
        match *self {
            Elementary::Boost { axis, rapidity } => {
                let (ch, sh) = (rapidity.cosh(), rapidity.sinh());
                ((0, axis), [[ch, -sh], [-sh, ch]])
            }
            Elementary::Rotation { axis, angle } => {
                let (s, c) = angle.sin_cos();
                (rotation_plane(axis), [[c, -s], [s, c]])
            }
        }
    }

    pub fn inverse(&self) -> Elementary {
        match *self {
            Elementary::Boost { axis, rapidity } => Elementary::Boost { axis, rapidity: -rapidity },
            Elementary::Rotation { axis, angle } => Elementary::Rotation { axis, angle: -angle },
        }
    }

    pub fn matrix(&self) -> Mat4 {
        let ((i, j), b) = self.plane();
        let mut m = IDENTITY;
        m[i][i] = b[0][0];
        m[i][j] = b[0][1];
        m[j][i] = b[1][0];
        m[j][j] = b[1][1];
        m
    }
}

/// Spatial plane rotated by a rotation about `axis` (cyclic order).
fn rotation_plane(axis: usize) -> (usize, usize) {
    match axis {
        1 => (2, 3),
        2 => (3, 1),
        _ => (1, 2),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorentzTransform {
    pub matrix: Mat4,
    pub kind: TransformKind,
}

impl Default for LorentzTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl LorentzTransform {
    pub fn identity() -> Self {
        LorentzTransform { matrix: IDENTITY, kind: TransformKind::Identity }
    }

    /// Validates a raw matrix and wraps it as a composite transform.
    pub fn from_matrix(matrix: Mat4) -> Result<Self> {
        let t = LorentzTransform { matrix, kind: TransformKind::Composite };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.matrix;
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NotLorentz("non-finite entry".into()));
        }
        let dev = self.metric_deviation();
        let scale = m.iter().flatten().fold(1.0f64, |a, v| a.max(v.abs())).powi(2);
        if dev > LORENTZ_TOL * scale {
            return Err(Error::NotLorentz(format!("max |ΛᵀηΛ − η| = {dev:e}")));
        }
        if m[0][0] < 1.0 - LORENTZ_TOL * scale {
            return Err(Error::NotLorentz(format!("Λ⁰₀ = {} < 1", m[0][0])));
        }
        let det = det4(m);
        if (det - 1.0).abs() > 1e-9 * scale * scale {
            return Err(Error::NotLorentz(format!("det Λ = {det}")));
        }
        Ok(())
    }

    /// `max |(ΛᵀηΛ − η)_{ij}|`.
    pub fn metric_deviation(&self) -> f64 {
        let m = &self.matrix;
        let mut dev = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                let s: f64 = (0..4).map(|k| m[k][i] * ETA[k] * m[k][j]).sum();
                let target = if i == j { ETA[i] } else { 0.0 };
                dev = dev.max((s - target).abs());
            }
        }
        dev
    }

    pub fn apply(&self, a: &FourVector) -> FourVector {
        FourVector(std::array::from_fn(|mu| (0..4).map(|nu| self.matrix[mu][nu] * a.0[nu]).sum()))
    }

    /// `self ∘ other`, i.e. the matrix product `self · other`.
    pub fn compose(&self, other: &LorentzTransform) -> LorentzTransform {
        let kind = match (self.kind, other.kind) {
            (TransformKind::Identity, k) | (k, TransformKind::Identity) => k,
            _ => TransformKind::Composite,
        };
        LorentzTransform { matrix: matmul(&self.matrix, &other.matrix), kind }
    }

    /// `Λ⁻¹ = η Λᵀ η`.
    pub fn inverse(&self) -> LorentzTransform {
        let m = &self.matrix;
        let inv = std::array::from_fn(|i| std::array::from_fn(|j| ETA[i] * m[j][i] * ETA[j]));
        let kind = match self.kind {
            TransformKind::Boost { axis, velocity } => TransformKind::Boost { axis, velocity: -velocity },
            TransformKind::Rotation { axis, angle } => TransformKind::Rotation { axis, angle: -angle },
            k => k,
        };
        LorentzTransform { matrix: inv, kind }
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        max_abs_diff(&self.matrix, &IDENTITY) <= tol
    }

    /// Factors `Λ` into plane transforms with `Λ = F₀ F₁ ⋯ F_k`.
    pub fn elementary_factors(&self) -> Vec<Elementary> {
        match self.kind {
            TransformKind::Identity => Vec::new(),
            TransformKind::Boost { axis, velocity } => {
                vec![Elementary::Boost { axis, rapidity: velocity.atanh() }]
            }
            TransformKind::Rotation { axis, angle } => vec![Elementary::Rotation { axis, angle }],
            TransformKind::Composite => decompose(&self.matrix),
        }
    }
}

/// Standard boost along spatial `axis`: `t' = γ(t − v x)`, `x' = γ(x − v t)`.
pub fn boost_matrix(axis: usize, v: f64) -> Result<LorentzTransform> {
    check_axis(axis)?;
    if !v.is_finite() || v.abs() >= 1.0 {
        return Err(Error::Superluminal(v));
    }
    let e = Elementary::Boost { axis, rapidity: v.atanh() };
    Ok(LorentzTransform { matrix: e.matrix(), kind: TransformKind::Boost { axis, velocity: v } })
}

/// Spatial rotation by `theta` about `axis`; time row and column untouched.
pub fn rotation_matrix(axis: usize, theta: f64) -> Result<LorentzTransform> {
    check_axis(axis)?;
    let e = Elementary::Rotation { axis, angle: theta };
    Ok(LorentzTransform { matrix: e.matrix(), kind: TransformKind::Rotation { axis, angle: theta } })
}

fn check_axis(axis: usize) -> Result<()> {
    if (1..=3).contains(&axis) {
        Ok(())
    } else {
        Err(Error::InvalidAxis(axis))
    }
}

pub fn matmul(a: &Mat4, b: &Mat4) -> Mat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|k| a[i][k] * b[k][j]).sum()))
}

pub fn max_abs_diff(a: &Mat4, b: &Mat4) -> f64 {
    let mut d = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            d = d.max((a[i][j] - b[i][j]).abs());
        }
    }
    d
}

fn det4(m: &Mat4) -> f64 {
    // Laplace expansion along the first row.
    let minor = |col: usize| -> f64 {
        let rows: Vec<[f64; 3]> = (1..4)
            .map(|r| {
                let mut out = [0.0; 3];
                let mut k = 0;
                for c in 0..4 {
                    if c != col {
                        out[k] = m[r][c];
                        k += 1;
                    }
                }
                out
            })
            .collect();
        rows[0][0] * (rows[1][1] * rows[2][2] - rows[1][2] * rows[2][1])
            - rows[0][1] * (rows[1][0] * rows[2][2] - rows[1][2] * rows[2][0])
            + rows[0][2] * (rows[1][0] * rows[2][1] - rows[1][1] * rows[2][0])
    };
    (0..4).map(|c| if c % 2 == 0 { 1.0 } else { -1.0 } * m[0][c] * minor(c)).sum()
}

/// Polar decomposition `Λ = B R`, with the boost `B` rotated onto the x axis
/// and `R` split into z-y-z Euler rotations.
fn decompose(m: &Mat4) -> Vec<Elementary> {
    let mut factors = Vec::new();
    let u = [m[1][0], m[2][0], m[3][0]];
    let speed_gamma = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    let mut rest = *m;
    if speed_gamma > 1e-14 {
        let n = [u[0] / speed_gamma, u[1] / speed_gamma, u[2] / speed_gamma];
        let rapidity = speed_gamma.asinh();
        let polar = n[2].clamp(-1.0, 1.0).acos();
        let azimuth = n[1].atan2(n[0]);
        // R_n maps x̂ onto n̂.
        let orient = [
            Elementary::Rotation { axis: 3, angle: azimuth },
            Elementary::Rotation { axis: 2, angle: polar - std::f64::consts::FRAC_PI_2 },
        ];
        // boost_matrix(1, v) sends e₀ to (γ, −γv); B sends e₀ to (γ, γβ n̂).
        let boost = Elementary::Boost { axis: 1, rapidity: -rapidity };
        // B = R_n · boost · R_n⁻¹
        let seq = [orient[0], orient[1], boost, orient[1].inverse(), orient[0].inverse()];
        let b = product(&seq);
        factors.extend_from_slice(&seq);
        let b_inv = LorentzTransform { matrix: b, kind: TransformKind::Composite }.inverse();
        rest = matmul(&b_inv.matrix, m);
    }
    // rest is a pure rotation; extract z-y-z Euler angles.
    // γ is read off the residual so that the product reproduces `rest` even
    // when β is tiny and α is poorly determined.
    let rho = rest[1][3].hypot(rest[2][3]);
    let alpha = if rho > 0.0 { rest[2][3].atan2(rest[1][3]) } else { 0.0 };
    let beta = rho.atan2(rest[3][3]);
    let undo = product(&[Elementary::Rotation { axis: 2, angle: -beta }, Elementary::Rotation { axis: 3, angle: -alpha }]);
    let residual = matmul(&undo, &rest);
    let gam = residual[2][1].atan2(residual[1][1]);
    for (axis, angle) in [(3, alpha), (2, beta), (3, gam)] {
        if angle.abs() > 0.0 {
            factors.push(Elementary::Rotation { axis, angle });
        }
    }
    factors
}

/// Product of elementary factors, leftmost first.
pub fn product(factors: &[Elementary]) -> Mat4 {
    factors.iter().fold(IDENTITY, |acc, f| matmul(&acc, &f.matrix()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::minkowski_dot;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn boost_examples() {
        assert!(boost_matrix(1, 0.0).unwrap().is_identity(0.0));
        let b = boost_matrix(1, 0.6).unwrap();
        let expected = [
            [1.25, -0.75, 0.0, 0.0],
            [-0.75, 1.25, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ];
        assert!(max_abs_diff(&b.matrix, &expected) < 1e-14);
        let back = b.compose(&boost_matrix(1, -0.6).unwrap());
        assert!(back.is_identity(1e-12));
        assert!(matches!(boost_matrix(2, 1.0), Err(Error::Superluminal(_))));
        assert!(matches!(boost_matrix(4, 0.1), Err(Error::InvalidAxis(4))));
    }

    #[test]
    fn rotation_examples() {
        assert!(rotation_matrix(3, 0.0).unwrap().is_identity(0.0));
        let half = rotation_matrix(3, PI).unwrap().apply(&FourVector::new(0.0, 1.0, 0.0, 0.0));
        assert!(half.max_abs_diff(&FourVector::new(0.0, -1.0, 0.0, 0.0)) < 1e-15);
        let q = rotation_matrix(2, PI / 2.0).unwrap().apply(&FourVector::new(0.0, 0.0, 0.0, 1.0));
        assert!(q.max_abs_diff(&FourVector::new(0.0, 1.0, 0.0, 0.0)) < 1e-15);
    }

    #[test]
    fn rejects_parity() {
        let mut m = IDENTITY;
        m[1][1] = -1.0;
        assert!(LorentzTransform::from_matrix(m).is_err());
        let mut t = IDENTITY;
        t[0][0] = -1.0;
        assert!(LorentzTransform::from_matrix(t).is_err());
    }

    fn random_transform(params: &[(usize, bool, f64)]) -> LorentzTransform {
        params.iter().fold(LorentzTransform::identity(), |acc, &(axis, is_boost, p)| {
            let f = if is_boost {
                boost_matrix(axis, p * 0.9).unwrap()
            } else {
                rotation_matrix(axis, p * PI).unwrap()
            };
            acc.compose(&f)
        })
    }

    fn factor_strategy() -> impl Strategy<Value = Vec<(usize, bool, f64)>> {
        prop::collection::vec((1usize..=3, any::<bool>(), -1.0f64..1.0), 1..5)
    }

    proptest! {
        #[test]
        fn compositions_preserve_metric(params in factor_strategy()) {
            let l = random_transform(&params);
            prop_assert!(l.metric_deviation() < 1e-12);
            prop_assert!(l.validate().is_ok());
        }

        #[test]
        fn dot_is_invariant(params in factor_strategy(),
                            a in prop::array::uniform4(-5.0f64..5.0),
                            b in prop::array::uniform4(-5.0f64..5.0)) {
            let l = random_transform(&params);
            let (a, b) = (FourVector(a), FourVector(b));
            let before = minkowski_dot(&a, &b);
            let after = minkowski_dot(&l.apply(&a), &l.apply(&b));
            prop_assert!((before - after).abs() < 1e-12 * (1.0 + before.abs()) * 100.0);
        }

        #[test]
        fn factorization_reconstructs(params in factor_strategy()) {
            let l = random_transform(&params);
            let composite = LorentzTransform::from_matrix(l.matrix).unwrap();
            let rebuilt = product(&composite.elementary_factors());
            prop_assert!(max_abs_diff(&rebuilt, &l.matrix) < 1e-11);
        }
    }
}
