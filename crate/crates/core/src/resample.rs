//! Band-limited evaluation of sampled fields at linearly transformed points.
//!
//! A plane transform `(u, v) ↦ A·(u, v)` is applied by summing the periodic
//! trigonometric interpolant of the samples at every preimage. Preimages that
//! fall outside the fundamental cell of the grid evaluate to zero, since the
//! periodic copies are artifacts of the discretization and not of the state.

use nalgebra::DMatrix;

use crate::field::C64;
use crate::grid::AxisGrid;

/// Periodic band-limited cardinal function of an `n`-point axis, at offset
/// `d` measured in samples.
pub fn dirichlet(n: usize, d: f64) -> f64 {
    if n == 1 {
        return 1.0;
    }
    let nf = n as f64;
    let r = d - nf * (d / nf).round();
    if r.abs() < 1e-12 {
        return 1.0;
    }
    let x = std::f64::consts::PI * r;
    x.sin() / (nf * (x / nf).tan())
}

fn in_cell(axis: &AxisGrid, x: f64) -> bool {
    let lo = axis.x(0) - 0.5 * axis.delta;
    let hi = axis.x(axis.n - 1) + 0.5 * axis.delta;
    x >= lo && x < hi
}

/// The two grid axes of a plane plus the preimage map.
#[derive(Clone, Copy, Debug)]
pub struct PlaneMap {
    /// Grid axes `(a, b)` spanning the plane, `a < b` not required.
    pub axes: (usize, usize),
    /// Sample coordinates along each plane axis.
    pub grids: [AxisGrid; 2],
    /// `preimage = inverse · target`.
    pub inverse: [[f64; 2]; 2],
    /// Carrier wavenumbers removed before interpolation and restored at the
    /// preimage, for samples that carry a known linear phase.
    pub carrier: [f64; 2],
}

impl PlaneMap {
    /// Kernel matrix `K[source, target]` together with target phases.
    fn kernel(&self) -> (DMatrix<f64>, Vec<C64>) {
        let [ga, gb] = self.grids;
        let (na, nb) = (ga.n, gb.n);
        let p = na * nb;
        let mut k = DMatrix::<f64>::zeros(p, p);
        let mut phase = vec![C64::default(); p];
        let mut da = vec![0.0; na];
        let mut db = vec![0.0; nb];
        for i in 0..na {
            for j in 0..nb {
                let (u, v) = (ga.x(i), gb.x(j));
                let up = self.inverse[0][0] * u + self.inverse[0][1] * v;
                let vp = self.inverse[1][0] * u + self.inverse[1][1] * v;
                if !(in_cell(&ga, up) && in_cell(&gb, vp)) {
                    continue;
                }
                let t = i * nb + j;
                phase[t] = C64::from_polar(1.0, self.carrier[0] * up + self.carrier[1] * vp);
                for (s, w) in da.iter_mut().enumerate() {
                    *w = dirichlet(na, (up - ga.x(s)) / ga.delta);
                }
                for (s, w) in db.iter_mut().enumerate() {
                    *w = dirichlet(nb, (vp - gb.x(s)) / gb.delta);
                }
                let mut col = k.column_mut(t);
                for (si, wa) in da.iter().enumerate() {
                    for (sj, wb) in db.iter().enumerate() {
                        col[si * nb + sj] = wa * wb;
                    }
                }
            }
        }
        (k, phase)
    }

    /// Applies the map to `data` laid out row-major over `shape` (the leading
    /// component axis included). Plane axis `a` is array axis `a + 1`.
    pub fn apply(&self, data: &[C64], shape: &[usize]) -> Vec<C64> {
        let (a, b) = (self.axes.0 + 1, self.axes.1 + 1);
        let [ga, gb] = self.grids;
        let nb = gb.n;
        let p = ga.n * nb;
        let lines = data.len() / p;
        let (kernel, phase) = self.kernel();

        // row-major strides of the full array
        let mut strides = vec![1usize; shape.len()];
        for d in (0..shape.len() - 1).rev() {
            strides[d] = strides[d + 1] * shape[d + 1];
        }
        // flat offset of (line, plane point) pairs
        let other: Vec<usize> = (0..shape.len()).filter(|&d| d != a && d != b).collect();
        let line_base: Vec<usize> = (0..lines)
            .map(|mut l| {
                let mut off = 0;
                for &d in other.iter().rev() {
                    off += (l % shape[d]) * strides[d];
                    l /= shape[d];
                }
                off
            })
            .collect();
        let plane_off: Vec<usize> = (0..p).map(|t| (t / nb) * strides[a] + (t % nb) * strides[b]).collect();

        let source_phase: Vec<C64> = (0..p)
            .map(|t| C64::from_polar(1.0, -(self.carrier[0] * ga.x(t / nb) + self.carrier[1] * gb.x(t % nb))))
            .collect();
        let mut re = DMatrix::<f64>::zeros(lines, p);
        let mut im = DMatrix::<f64>::zeros(lines, p);
        for t in 0..p {
            for (l, &base) in line_base.iter().enumerate() {
                let v = data[base + plane_off[t]] * source_phase[t];
                re[(l, t)] = v.re;
                im[(l, t)] = v.im;
            }
        }
        let re = re * &kernel;
        let im = im * &kernel;
        let mut out = vec![C64::default(); data.len()];
        for t in 0..p {
            for (l, &base) in line_base.iter().enumerate() {
                out[base + plane_off[t]] = C64::new(re[(l, t)], im[(l, t)]) * phase[t];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cardinal_function_interpolates_samples() {
        assert_eq!(dirichlet(16, 0.0), 1.0);
        for k in 1..16 {
            assert!(dirichlet(16, k as f64).abs() < 1e-14);
        }
        assert!((dirichlet(16, 16.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rotation_by_quarter_turn_permutes_samples() {
        let g = AxisGrid::new(8, 0.5, 0.0).unwrap();
        let shape = [1, 8, 8];
        let data: Vec<C64> = (0..64).map(|i| C64::new(i as f64, 0.0)).collect();
        // f'(u, v) = f(v, −u) on samples whose preimage stays inside the cell
        let map = PlaneMap { axes: (0, 1), grids: [g, g], inverse: [[0.0, 1.0], [-1.0, 0.0]], carrier: [0.0; 2] };
        let out = map.apply(&data, &shape);
        for i in 1..8 {
            for j in 1..8 {
                let (si, sj) = (j, 8 - i);
                assert!((out[i * 8 + j] - data[si * 8 + sj]).norm() < 1e-12);
            }
        }
        // row i = 0 has preimage v' = 2, outside the cell [−2.25, 1.75)
        assert!(out[..8].iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn boost_of_gaussian_matches_analytic() {
        let g = AxisGrid::new(32, 0.4, 0.0).unwrap();
        let shape = [1, 32, 32];
        let sigma: f64 = 0.8;
        let f = |t: f64, x: f64| (-(t * t + (x - 1.0) * (x - 1.0)) / (2.0 * sigma * sigma)).exp();
        let data: Vec<C64> = (0..1024).map(|i| C64::new(f(g.x(i / 32), g.x(i % 32)), 0.0)).collect();
        let (ch, sh) = (1.25, 0.75);
        let map = PlaneMap { axes: (0, 1), grids: [g, g], inverse: [[ch, sh], [sh, ch]], carrier: [0.0; 2] };
        let out = map.apply(&data, &shape);
        let mut err = 0.0f64;
        for i in 0..32 {
            for j in 0..32 {
                let (t, x) = (g.x(i), g.x(j));
                let exact = f(ch * t + sh * x, sh * t + ch * x);
                err = err.max((out[i * 32 + j].re - exact).abs());
            }
        }
        assert!(err < 1e-8, "{err}");
    }
}
