//! Uniform periodic grids and their FFT-dual momentum axes.

use std::f64::consts::PI;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// One uniform axis. Sample `j` sits at `origin + (j − n/2)·delta`; the dual
/// momentum sample `m` sits at `(m − n/2)·2π/(n·delta)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisGrid {
    pub n: usize,
    pub delta: f64,
    #[serde(default)]
    pub origin: f64,
}

impl AxisGrid {
    pub fn new(n: usize, delta: f64, origin: f64) -> Result<Self> {
        let axis = AxisGrid { n, delta, origin };
        axis.validate(0)?;
        Ok(axis)
    }

    /// Balanced axis whose position and momentum extents are equal.
    pub fn balanced(n: usize) -> Result<Self> {
        Self::new(n, (2.0 * PI / n as f64).sqrt(), 0.0)
    }

    fn validate(&self, index: usize) -> Result<()> {
        if !self.n.is_power_of_two() {
            return Err(Error::InvalidGrid { axis: index, reason: format!("n = {} is not a power of two", self.n) });
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::InvalidGrid { axis: index, reason: format!("spacing {} must be positive", self.delta) });
        }
        if !self.origin.is_finite() {
            return Err(Error::InvalidGrid { axis: index, reason: "non-finite origin".into() });
        }
        Ok(())
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.origin + (j as f64 - (self.n / 2) as f64) * self.delta
    }

    pub fn dp(&self) -> f64 {
        2.0 * PI / (self.n as f64 * self.delta)
    }

    #[inline]
    pub fn p(&self, m: usize) -> f64 {
        (m as f64 - (self.n / 2) as f64) * self.dp()
    }

    pub fn length(&self) -> f64 {
        self.n as f64 * self.delta
    }

    /// Half-width of the momentum window.
    pub fn p_max(&self) -> f64 {
        0.5 * self.n as f64 * self.dp()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    pub fn momenta(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.p(m)).collect()
    }

    /// The dual axis, viewed as a position grid of its own (origin 0).
    pub fn dual(&self) -> AxisGrid {
        AxisGrid { n: self.n, delta: self.dp(), origin: 0.0 }
    }

    /// Nearest sample index to coordinate `x`, if inside the axis.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let j = ((x - self.origin) / self.delta + (self.n / 2) as f64).round();
        (j >= 0.0 && (j as usize) < self.n).then_some(j as usize)
    }

    pub fn momentum_index_of(&self, p: f64) -> Option<usize> {
        let m = (p / self.dp() + (self.n / 2) as f64).round();
        (m >= 0.0 && (m as usize) < self.n).then_some(m as usize)
    }
}

/// A `D`-dimensional product grid (axis 0 is time for `D = 4`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid<const D: usize> {
    pub axes: [AxisGrid; D],
}

pub type Grid4D = Grid<4>;
pub type Grid3D = Grid<3>;

impl<const D: usize> Grid<D> {
    pub fn new(axes: [AxisGrid; D]) -> Result<Self> {
        for (i, a) in axes.iter().enumerate() {
            a.validate(i)?;
        }
        Ok(Grid { axes })
    }

    /// Same balanced axis repeated on every dimension.
    pub fn cubic(n: usize) -> Result<Self> {
        Self::new([AxisGrid::balanced(n)?; D])
    }

    pub fn uniform(n: usize, delta: f64) -> Result<Self> {
        Self::new([AxisGrid::new(n, delta, 0.0)?; D])
    }

    pub fn shape(&self) -> [usize; D] {
        self.axes.map(|a| a.n)
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.delta).product()
    }

    pub fn momentum_cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.dp()).product()
    }

    pub fn dual(&self) -> Grid<D> {
        Grid { axes: self.axes.map(|a| a.dual()) }
    }

    /// Row-major multi-index of a flat index.
    #[inline]
    pub fn unravel(&self, mut flat: usize) -> [usize; D] {
        let mut idx = [0; D];
        for d in (0..D).rev() {
            let n = self.axes[d].n;
            idx[d] = flat % n;
            flat /= n;
        }
        idx
    }

    #[inline]
    pub fn ravel(&self, idx: &[usize; D]) -> usize {
        idx.iter().zip(self.axes.iter()).fold(0, |acc, (&i, a)| acc * a.n + i)
    }

    pub fn position(&self, idx: &[usize; D]) -> [f64; D] {
        std::array::from_fn(|d| self.axes[d].x(idx[d]))
    }

    pub fn momentum(&self, idx: &[usize; D]) -> [f64; D] {
        std::array::from_fn(|d| self.axes[d].p(idx[d]))
    }

    /// Geometric center of the sampled box along each axis.
    pub fn center(&self) -> [f64; D] {
        std::array::from_fn(|d| {
            let a = &self.axes[d];
            a.origin - 0.5 * a.delta
        })
    }

    pub fn check_same(&self, other: &Grid<D>) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{:?} vs {:?}", self.shape(), other.shape())))
        }
    }
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    axes: Vec<AxisGrid>,
}

impl<const D: usize> Serialize for Grid<D> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GridRepr { axes: self.axes.to_vec() }.serialize(s)
    }
}

impl<'de, const D: usize> Deserialize<'de> for Grid<D> {
    fn deserialize<De: Deserializer<'de>>(d: De) -> std::result::Result<Self, De::Error> {
        let repr = GridRepr::deserialize(d)?;
        let axes: [AxisGrid; D] = repr
            .axes
            .try_into()
            .map_err(|v: Vec<AxisGrid>| De::Error::custom(format!("expected {D} axes, got {}", v.len())))?;
        Grid::new(axes).map_err(De::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_coordinates() {
        let a = AxisGrid::new(8, 0.5, 1.0).unwrap();
        assert_eq!(a.x(4), 1.0);
        assert_eq!(a.x(0), -1.0);
        assert_eq!(a.p(4), 0.0);
        assert!((a.dp() - 2.0 * PI / 4.0).abs() < 1e-15);
        assert_eq!(a.index_of(1.5), Some(5));
        assert_eq!(a.index_of(100.0), None);
    }

    #[test]
    fn rejects_bad_axes() {
        assert!(AxisGrid::new(12, 0.1, 0.0).is_err());
        assert!(AxisGrid::new(16, 0.0, 0.0).is_err());
        assert!(AxisGrid::new(16, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn ravel_round_trip() {
        let g = Grid::<4>::new([
            AxisGrid::new(4, 1.0, 0.0).unwrap(),
            AxisGrid::new(8, 1.0, 0.0).unwrap(),
            AxisGrid::new(2, 1.0, 0.0).unwrap(),
            AxisGrid::new(16, 1.0, 0.0).unwrap(),
        ])
        .unwrap();
        for flat in [0, 1, 17, 511, 1023] {
            assert_eq!(g.ravel(&g.unravel(flat)), flat);
        }
    }

    #[test]
    fn json_schema() {
        let g = Grid::<4>::cubic(16).unwrap();
        let text = serde_json::to_string(&g).unwrap();
        assert!(text.starts_with("{\"axes\":[{\"n\":16"));
        let back: Grid<4> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<Grid<3>>(&text).is_err());
    }
}
