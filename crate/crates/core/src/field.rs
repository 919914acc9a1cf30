//! Complex sample fields on a product grid, optionally carrying a 4-spinor index.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;

pub type C64 = Complex64;

/// Values stored as `[component][row-major grid index]`.
///
/// The grid is always the position-space grid; whether the samples are
/// position or momentum amplitudes is tracked by the owning state.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField<const D: usize> {
    grid: Grid<D>,
    components: usize,
    data: Vec<C64>,
}

pub type Field4 = ComplexField<4>;
pub type Field3 = ComplexField<3>;

impl<const D: usize> ComplexField<D> {
    pub fn new(grid: Grid<D>, components: usize, data: Vec<C64>) -> Result<Self> {
        if components != 1 && components != 4 {
            return Err(Error::Invalid(format!("{components} components (expected 1 or 4)")));
        }
        let expected = components * grid.len();
        if data.len() != expected {
            return Err(Error::ShapeMismatch { expected, got: data.len() });
        }
        Ok(ComplexField { grid, components, data })
    }

    pub fn zeros(grid: Grid<D>, components: usize) -> Result<Self> {
        Self::new(grid, components, vec![C64::default(); components * grid.len()])
    }

    /// Fills every sample from `f(component, multi-index)`.
    pub fn from_fn(grid: Grid<D>, components: usize, f: impl Fn(usize, [usize; D]) -> C64) -> Result<Self> {
        let len = grid.len();
        let data = (0..components * len).map(|i| f(i / len, grid.unravel(i % len))).collect();
        Self::new(grid, components, data)
    }

    pub fn grid(&self) -> &Grid<D> {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn is_spinor(&self) -> bool {
        self.components == 4
    }

    /// Number of grid points (per component).
    pub fn points(&self) -> usize {
        self.grid.len()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn component(&self, c: usize) -> &[C64] {
        let n = self.points();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [C64] {
        let n = self.points();
        &mut self.data[c * n..(c + 1) * n]
    }

    /// Shape including the leading component axis.
    pub fn full_shape(&self) -> Vec<usize> {
        std::iter::once(self.components).chain(self.grid.shape()).collect()
    }

    pub fn with_data(&self, data: Vec<C64>) -> Result<Self> {
        Self::new(self.grid, self.components, data)
    }

    /// Plain sum of `|v|²` over all samples (no cell measure).
    pub fn sum_sqr(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Plain sum of `conj(self)·other`.
    pub fn dot(&self, other: &Self) -> Result<C64> {
        self.check_compatible(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn scale(&mut self, s: C64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.data.iter_mut().for_each(|v| *v *= s);
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// `Σ|a − b|²`, unweighted.
    pub fn dist_sqr(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm_sqr()).sum())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Per-point density summed over components.
    pub fn density(&self) -> Vec<f64> {
        let n = self.points();
        let mut out = vec![0.0; n];
        for c in 0..self.components {
            for (o, v) in out.iter_mut().zip(self.component(c)) {
                *o += v.norm_sqr();
            }
        }
        out
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        if self.components != other.components {
            return Err(Error::ShapeMismatch { expected: self.data.len(), got: other.data.len() });
        }
        Ok(())
    }
}
