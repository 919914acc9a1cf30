//! Unitary continuum-normalized Fourier transforms on uniform grids.
//!
//! Along an axis with sign `s`, the forward transform approximates
//! `f̃(p) = ∫ dx/√(2π) e^{i s p x} f(x)` at the dual momenta, and the inverse
//! undoes it. The 4D spacetime transform uses `s = (+1, −1, −1, −1)`, so the
//! kernel is `e^{i x̄·p̲}`; the 3D spatial transform uses `s = −1` per axis.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::field::{ComplexField, C64};
use crate::grid::AxisGrid;

/// Sign of `p·x` in the forward kernel of the 4D transform, per axis.
pub const SPACETIME_SIGNS: [f64; 4] = [1.0, -1.0, -1.0, -1.0];
pub const SPATIAL_SIGNS: [f64; 3] = [-1.0, -1.0, -1.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    ToMomentum,
    ToPosition,
}

/// Index helper for the set of 1D lines running along one axis of a
/// row-major array.
#[derive(Clone, Debug)]
pub struct Lines {
    shape: Vec<usize>,
    axis: usize,
    stride: usize,
}

impl Lines {
    pub fn new(shape: &[usize], axis: usize) -> Self {
        let stride = shape[axis + 1..].iter().product();
        Lines { shape: shape.to_vec(), axis, stride }
    }

    pub fn len(&self) -> usize {
        self.shape[self.axis]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn count(&self) -> usize {
        self.shape.iter().product::<usize>() / self.len()
    }

    /// Index along axis `d` (≠ the line axis) of line `l`.
    pub fn coord(&self, l: usize, d: usize) -> usize {
        let (o, r) = (l / self.stride, l % self.stride);
        if d < self.axis {
            let below: usize = self.shape[d + 1..self.axis].iter().product();
            (o / below) % self.shape[d]
        } else {
            let below: usize = self.shape[d + 1..].iter().product();
            (r / below) % self.shape[d]
        }
    }

    /// Flat offset of element `k` of line `l`.
    #[inline]
    pub fn offset(&self, l: usize, k: usize) -> usize {
        let (o, r) = (l / self.stride, l % self.stride);
        o * self.len() * self.stride + k * self.stride + r
    }
}

/// Runs `f(state, line_id, line)` on every line along `axis`.
pub fn map_lines<S, I, F>(data: &mut [C64], shape: &[usize], axis: usize, init: I, f: F)
where
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize, &mut [C64]) + Sync + Send,
{
    let lines = Lines::new(shape, axis);
    let n = lines.len();
    debug_assert_eq!(data.len(), shape.iter().product::<usize>());
    if lines.stride == 1 {
        data.par_chunks_mut(n).enumerate().for_each_init(&init, |s, (l, line)| f(s, l, line));
        return;
    }
    // each [n][stride] block transposes to `stride` contiguous lines, in the
    // same line order as `Lines::offset`; tiled along `stride` for locality
    const TILE: usize = 16;
    let stride = lines.stride;
    let block = n * stride;
    let mut buf = vec![C64::default(); data.len()];
    for (src, dst) in data.chunks(block).zip(buf.chunks_mut(block)) {
        for r0 in (0..stride).step_by(TILE) {
            let r1 = (r0 + TILE).min(stride);
            for k in 0..n {
                for r in r0..r1 {
                    dst[r * n + k] = src[k * stride + r];
                }
            }
        }
    }
    buf.par_chunks_mut(n).enumerate().for_each_init(&init, |s, (l, line)| f(s, l, line));
    for (src, dst) in buf.chunks(block).zip(data.chunks_mut(block)) {
        for r0 in (0..stride).step_by(TILE) {
            let r1 = (r0 + TILE).min(stride);
            for k in 0..n {
                for r in r0..r1 {
                    dst[k * stride + r] = src[r * n + k];
                }
            }
        }
    }
}

fn parity(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

struct AxisPlan {
    fft: Arc<dyn Fft<f64>>,
    pre: Vec<C64>,
    post: Vec<C64>,
}

impl AxisPlan {
    fn new(planner: &mut FftPlanner<f64>, axis: &AxisGrid, sign: f64, dir: Direction) -> Self {
        let n = axis.n;
        let half = parity(n / 2);
        // e^{i s p_m x_j} = e^{i s 2π m j / N} (−1)^{j+m+N/2} e^{i s p_m origin}
        let (fft_dir, pre, post) = match dir {
            Direction::ToMomentum => {
                let w = axis.delta / (2.0 * PI).sqrt();
                let pre = (0..n).map(|j| C64::new(parity(j), 0.0)).collect();
                let post = (0..n)
                    .map(|m| C64::from_polar(w * parity(m) * half, sign * axis.p(m) * axis.origin))
                    .collect();
                (if sign > 0.0 { FftDirection::Inverse } else { FftDirection::Forward }, pre, post)
            }
            Direction::ToPosition => {
                let w = axis.dp() / (2.0 * PI).sqrt();
                let pre = (0..n).map(|m| C64::from_polar(parity(m), -sign * axis.p(m) * axis.origin)).collect();
                let post = (0..n).map(|j| C64::new(w * parity(j) * half, 0.0)).collect();
                (if sign > 0.0 { FftDirection::Forward } else { FftDirection::Inverse }, pre, post)
            }
        };
        AxisPlan { fft: planner.plan_fft(n, fft_dir), pre, post }
    }
}

/// Transforms one grid axis in place. `shape` includes the leading component
/// axis, so grid axis `d` is array axis `d + 1`.
pub fn transform_axis(data: &mut [C64], shape: &[usize], d: usize, axis: &AxisGrid, sign: f64, dir: Direction) {
    let mut planner = FftPlanner::new();
    let plan = AxisPlan::new(&mut planner, axis, sign, dir);
    let scratch_len = plan.fft.get_inplace_scratch_len();
    map_lines(
        data,
        shape,
        d + 1,
        || vec![C64::default(); scratch_len],
        |scratch, _, line| {
            line.iter_mut().zip(&plan.pre).for_each(|(v, w)| *v *= w);
            plan.fft.process_with_scratch(line, scratch);
            line.iter_mut().zip(&plan.post).for_each(|(v, w)| *v *= w);
        },
    );
}

/// Transforms every axis of `field` with the given per-axis kernel signs.
pub fn transform<const D: usize>(field: &ComplexField<D>, signs: [f64; D], dir: Direction) -> ComplexField<D> {
    let shape = field.full_shape();
    let mut data = field.data().to_vec();
    for (d, axis) in field.grid().axes.iter().enumerate() {
        transform_axis(&mut data, &shape, d, axis, signs[d], dir);
    }
    field.with_data(data).expect("shape unchanged")
}

/// Position → momentum with kernel `e^{i x̄·p̲}/(4π²)`.
pub fn fft4(field: &ComplexField<4>) -> ComplexField<4> {
    transform(field, SPACETIME_SIGNS, Direction::ToMomentum)
}

pub fn ifft4(field: &ComplexField<4>) -> ComplexField<4> {
    transform(field, SPACETIME_SIGNS, Direction::ToPosition)
}

/// Position → momentum with kernel `e^{−i p⃗·x⃗}/(2π)^{3/2}`.
pub fn fft3(field: &ComplexField<3>) -> ComplexField<3> {
    transform(field, SPATIAL_SIGNS, Direction::ToMomentum)
}

pub fn ifft3(field: &ComplexField<3>) -> ComplexField<3> {
    transform(field, SPATIAL_SIGNS, Direction::ToPosition)
}

/// FFT wavenumbers for an axis, in the order returned by an unshifted DFT.
/// The Nyquist bin carries wavenumber `nyquist_sign·π/Δ`.
pub fn wavenumbers(axis: &AxisGrid, nyquist_sign: f64) -> Vec<f64> {
    let n = axis.n as isize;
    let dk = axis.dp();
    (0..n)
        .map(|k| {
            if k < n / 2 {
                k as f64 * dk
            } else if k == n / 2 {
                nyquist_sign * (n / 2) as f64 * dk
            } else {
                (k - n) as f64 * dk
            }
        })
        .collect()
}

/// Replaces each line `f` along grid axis `d` by `x ↦ f(x + shift(line))`
/// using the periodic trigonometric interpolant. Unitary on the grid.
pub fn shift_lines<F>(data: &mut [C64], shape: &[usize], d: usize, axis: &AxisGrid, nyquist_sign: f64, shift: F)
where
    F: Fn(&Lines, usize) -> f64 + Sync + Send,
{
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(axis.n);
    let inv = planner.plan_fft_inverse(axis.n);
    let k = wavenumbers(axis, nyquist_sign);
    let lines = Lines::new(shape, d + 1);
    let norm = 1.0 / axis.n as f64;
    let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
    map_lines(
        data,
        shape,
        d + 1,
        || vec![C64::default(); scratch_len],
        |scratch, l, line| {
            let s = shift(&lines, l);
            if s == 0.0 {
                return;
            }
            fwd.process_with_scratch(line, scratch);
            for (v, &kk) in line.iter_mut().zip(&k) {
                *v *= C64::from_polar(norm, kk * s);
            }
            inv.process_with_scratch(line, scratch);
        },
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{AxisGrid, Grid};

    fn gauss4(g: Grid<4>) -> ComplexField<4> {
        ComplexField::from_fn(g, 1, |_, idx| {
            let x = g.position(&idx);
            C64::new((-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp(), 0.0)
        })
        .unwrap()
    }

    #[test]
    fn delta_maps_to_flat_modulus() {
        let g = Grid::<4>::cubic(8).unwrap();
        let mut f = ComplexField::zeros(g, 1).unwrap();
        let origin = g.ravel(&[4, 4, 4, 4]);
        f.data_mut()[origin] = C64::new(1.0, 0.0);
        let ft = fft4(&f);
        let m0 = ft.data()[0].norm();
        assert!(ft.data().iter().all(|v| (v.norm() - m0).abs() < 1e-14));
        let expected = g.cell_volume() / (4.0 * PI * PI);
        assert!((m0 - expected).abs() < 1e-14);
    }

    #[test]
    fn gaussian_is_self_dual() {
        let g = Grid::<4>::cubic(32).unwrap();
        let f = gauss4(g);
        let ft = fft4(&f);
        // same balanced grid on both sides, so the samples must coincide
        assert!(ft.max_abs_diff(&f).unwrap() < 1e-10);
    }

    #[test]
    fn plane_wave_localizes_at_plus_p0() {
        let axes = [AxisGrid::new(16, 0.5, 0.25).unwrap(); 4];
        let g = Grid::new(axes).unwrap();
        let target = [9usize, 5, 12, 7];
        let p0 = g.momentum(&target);
        let f = ComplexField::from_fn(g, 1, |_, idx| {
            let x = g.position(&idx);
            // e^{−i p̄₀·x̲} with x̲ = (t, −x⃗)
            let phase = -(p0[0] * x[0] - p0[1] * x[1] - p0[2] * x[2] - p0[3] * x[3]);
            C64::from_polar(1.0, phase)
        })
        .unwrap();
        let ft = fft4(&f);
        let peak = ft.data().iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).unwrap().0;
        assert_eq!(g.unravel(peak), target);
        let rest: f64 = ft.data().iter().enumerate().filter(|(i, _)| *i != peak).map(|(_, v)| v.norm()).sum();
        assert!(rest < 1e-9);
    }

    #[test]
    fn round_trip_and_isometry_3d() {
        let axes = [AxisGrid::new(8, 0.3, -0.4).unwrap(), AxisGrid::new(4, 1.1, 0.0).unwrap(), AxisGrid::new(16, 0.2, 2.0).unwrap()];
        let g = Grid::new(axes).unwrap();
        let f = ComplexField::from_fn(g, 4, |c, idx| C64::new((c + idx[0]) as f64 * 0.1, idx[2] as f64 - idx[1] as f64)).unwrap();
        let ft = fft3(&f);
        let back = ifft3(&ft);
        assert!(back.max_abs_diff(&f).unwrap() < 1e-12);
        let n0 = f.sum_sqr() * g.cell_volume();
        let n1 = ft.sum_sqr() * g.momentum_cell_volume();
        assert!((n0 - n1).abs() < 1e-12 * n0);
    }

    #[test]
    fn line_shift_translates_gaussian() {
        let g = Grid::<3>::cubic(32).unwrap();
        let f = ComplexField::from_fn(g, 1, |_, idx| {
            let x = g.position(&idx);
            C64::new((-0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp(), 0.0)
        })
        .unwrap();
        let shape = f.full_shape();
        let mut data = f.data().to_vec();
        shift_lines(&mut data, &shape, 1, &g.axes[1], -1.0, |_, _| -0.7);
        let expected = ComplexField::from_fn(g, 1, |_, idx| {
            let x = g.position(&idx);
            let y = x[1] - 0.7;
            C64::new((-0.5 * (x[0] * x[0] + y * y + x[2] * x[2])).exp(), 0.0)
        })
        .unwrap();
        let shifted = f.with_data(data).unwrap();
        assert!(shifted.max_abs_diff(&expected).unwrap() < 1e-8);
    }

    #[test]
    fn lines_coordinates() {
        let shape = [2, 3, 4, 5];
        let lines = Lines::new(&shape, 2);
        assert_eq!(lines.count(), 30);
        for l in 0..lines.count() {
            let i0 = lines.coord(l, 0);
            let i1 = lines.coord(l, 1);
            let i3 = lines.coord(l, 3);
            assert_eq!(lines.offset(l, 2), ((i0 * 3 + i1) * 4 + 2) * 5 + i3);
        }
    }
}
