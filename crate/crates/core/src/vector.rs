//! Contravariant four-vectors `(t, x, y, z)` in natural units and the
//! Minkowski metric `diag(+1, -1, -1, -1)`.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// The metric tensor `η = diag(1, -1, -1, -1)`.
pub const ETA: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

/// Metric component `η^{μν}` (equal to `η_{μν}`).
#[inline]
pub fn eta(mu: usize, nu: usize) -> f64 {
    if mu == nu {
        ETA[mu]
    } else {
        0.0
    }
}

/// A contravariant four-vector; index 0 is time-like.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FourVector(pub [f64; 4]);

impl FourVector {
    pub const ZERO: FourVector = FourVector([0.0; 4]);

    pub const fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        FourVector([t, x, y, z])
    }

    /// Time-like unit vector along `t`.
    pub const fn time_unit() -> Self {
        FourVector([1.0, 0.0, 0.0, 0.0])
    }

    pub fn spatial(&self) -> [f64; 3] {
        [self.0[1], self.0[2], self.0[3]]
    }

    /// Applies `η`, mapping contravariant to covariant components (and back).
    pub fn lower(&self) -> Self {
        FourVector(std::array::from_fn(|mu| ETA[mu] * self.0[mu]))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn norm_sqr(&self) -> f64 {
        minkowski_dot(self, self)
    }

    pub fn max_abs_diff(&self, other: &FourVector) -> f64 {
        (0..4).map(|mu| (self.0[mu] - other.0[mu]).abs()).fold(0.0, f64::max)
    }
}

/// `a⁰b⁰ − a⃗·b⃗`.
pub fn minkowski_dot(a: &FourVector, b: &FourVector) -> f64 {
    a.0[0] * b.0[0] - a.0[1] * b.0[1] - a.0[2] * b.0[2] - a.0[3] * b.0[3]
}

impl Index<usize> for FourVector {
    type Output = f64;
    fn index(&self, mu: usize) -> &f64 {
        &self.0[mu]
    }
}

impl IndexMut<usize> for FourVector {
    fn index_mut(&mut self, mu: usize) -> &mut f64 {
        &mut self.0[mu]
    }
}

impl Add for FourVector {
    type Output = FourVector;
    fn add(self, rhs: FourVector) -> FourVector {
        FourVector(std::array::from_fn(|mu| self.0[mu] + rhs.0[mu]))
    }
}

impl Sub for FourVector {
    type Output = FourVector;
    fn sub(self, rhs: FourVector) -> FourVector {
        FourVector(std::array::from_fn(|mu| self.0[mu] - rhs.0[mu]))
    }
}

impl Neg for FourVector {
    type Output = FourVector;
    fn neg(self) -> FourVector {
        FourVector(self.0.map(|c| -c))
    }
}

impl Mul<f64> for FourVector {
    type Output = FourVector;
    fn mul(self, s: f64) -> FourVector {
        FourVector(self.0.map(|c| c * s))
    }
}

impl From<[f64; 4]> for FourVector {
    fn from(c: [f64; 4]) -> Self {
        FourVector(c)
    }
}
