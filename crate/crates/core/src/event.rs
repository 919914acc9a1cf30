//! Single-event kinematic states: amplitudes over whole spacetime events.

use std::ops::Range;

use log::warn;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{fft4, ifft4};
use crate::field::{ComplexField, Field4, C64};
use crate::grid::Grid4D;
use crate::lorentz::{LorentzTransform, Mat4};
use crate::vector::FourVector;

/// How many standard deviations of the probability density must fit inside
/// the box (in both representations).
pub const CLEARANCE_SIGMAS: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rep {
    Position,
    Momentum,
}

impl Rep {
    pub fn name(self) -> &'static str {
        match self {
            Rep::Position => "position",
            Rep::Momentum => "momentum",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observable {
    X(usize),
    P(usize),
}

/// Half-open index ranges per grid axis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region(pub [Range<usize>; 4]);

impl Region {
    pub fn full(grid: &Grid4D) -> Self {
        Region(std::array::from_fn(|d| 0..grid.axes[d].n))
    }

    /// Full grid except along `axis`, where `range` applies.
    pub fn slab(grid: &Grid4D, axis: usize, range: Range<usize>) -> Self {
        let mut r = Self::full(grid);
        r.0[axis] = range;
        r
    }

    fn validate(&self, grid: &Grid4D) -> Result<()> {
        for (d, r) in self.0.iter().enumerate() {
            if r.start > r.end || r.end > grid.axes[d].n {
                return Err(Error::InvalidRegion(format!("axis {d}: {r:?} outside 0..{}", grid.axes[d].n)));
            }
        }
        Ok(())
    }

    fn contains(&self, idx: &[usize; 4]) -> bool {
        self.0.iter().zip(idx).all(|(r, i)| r.contains(i))
    }
}

/// First and second moments of a probability density on the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub total: f64,
    pub mean: [f64; 4],
    pub covariance: Mat4,
}

impl Moments {
    pub fn std_dev(&self, mu: usize) -> f64 {
        self.covariance[mu][mu].max(0.0).sqrt()
    }

    /// Moments of the pushed-forward density under `y = Λ x + a`.
    pub fn transformed(&self, lambda: &Mat4, shift: &[f64; 4]) -> Moments {
        let mean = std::array::from_fn(|i| (0..4).map(|j| lambda[i][j] * self.mean[j]).sum::<f64>() + shift[i]);
        let covariance = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let mut s = 0.0;
                for k in 0..4 {
                    for l in 0..4 {
                        s += lambda[i][k] * self.covariance[k][l] * lambda[j][l];
                    }
                }
                s
            })
        });
        Moments { total: self.total, mean, covariance }
    }
}

/// Where a density sits relative to the box, axis by axis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxisClearance {
    pub axis: usize,
    pub low: f64,
    pub high: f64,
    pub box_low: f64,
    pub box_high: f64,
}

impl AxisClearance {
    pub fn ok(&self) -> bool {
        self.low >= self.box_low && self.high <= self.box_high
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClearanceReport {
    pub position: Vec<AxisClearance>,
    pub momentum: Vec<AxisClearance>,
}

impl ClearanceReport {
    pub fn ok(&self) -> bool {
        self.position.iter().chain(&self.momentum).all(AxisClearance::ok)
    }

    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        for (label, list) in [("x", &self.position), ("p", &self.momentum)] {
            for a in list.iter().filter(|a| !a.ok()) {
                parts.push(format!(
                    "{label}{}: [{:.3}, {:.3}] not inside [{:.3}, {:.3}]",
                    a.axis, a.low, a.high, a.box_low, a.box_high
                ));
            }
        }
        if parts.is_empty() {
            "ok".into()
        } else {
            parts.join("; ")
        }
    }

    /// Checks `mean ± k σ` of both densities against the box.
    pub fn evaluate(grid: &Grid4D, position: &Moments, momentum: &Moments) -> Self {
        let make = |m: &Moments, dual: bool| {
            (0..4)
                .map(|d| {
                    let a = if dual { grid.axes[d].dual() } else { grid.axes[d] };
                    let half = CLEARANCE_SIGMAS * m.std_dev(d);
                    AxisClearance {
                        axis: d,
                        low: m.mean[d] - half,
                        high: m.mean[d] + half,
                        box_low: a.x(0) - 0.5 * a.delta,
                        box_high: a.x(a.n - 1) + 0.5 * a.delta,
                    }
                })
                .collect()
        };
        ClearanceReport { position: make(position, false), momentum: make(momentum, true) }
    }
}

/// A single-event state in position or momentum representation.
#[derive(Clone, Debug, PartialEq)]
pub struct EventState {
    rep: Rep,
    field: Field4,
    mass_hint: Option<f64>,
    warning: Option<String>,
}

impl EventState {
    pub fn new(rep: Rep, field: Field4) -> Result<Self> {
        if !field.is_finite() {
            return Err(Error::Invalid("non-finite amplitudes".into()));
        }
        Ok(EventState { rep, field, mass_hint: None, warning: None })
    }

    pub fn with_mass_hint(mut self, m: f64) -> Self {
        self.mass_hint = Some(m);
        self
    }

    pub fn rep(&self) -> Rep {
        self.rep
    }

    pub fn field(&self) -> &Field4 {
        &self.field
    }

    pub fn into_field(self) -> Field4 {
        self.field
    }

    pub fn grid(&self) -> &Grid4D {
        self.field.grid()
    }

    pub fn is_spinor(&self) -> bool {
        self.field.is_spinor()
    }

    pub fn mass_hint(&self) -> Option<f64> {
        self.mass_hint
    }

    /// Set when the state was built without the required edge clearance.
    pub fn warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }

    pub(crate) fn replace_field(&self, field: Field4) -> Self {
        EventState { rep: self.rep, field, mass_hint: self.mass_hint, warning: self.warning.clone() }
    }

    pub(crate) fn with_rep_field(&self, rep: Rep, field: Field4) -> Self {
        EventState { rep, field, mass_hint: self.mass_hint, warning: self.warning.clone() }
    }

    /// Volume element of the current representation.
    pub fn cell_measure(&self) -> f64 {
        match self.rep {
            Rep::Position => self.grid().cell_volume(),
            Rep::Momentum => self.grid().momentum_cell_volume(),
        }
    }

    pub fn norm(&self) -> f64 {
        (self.field.sum_sqr() * self.cell_measure()).sqrt()
    }

    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok(self.replace_field(self.field.clone().scaled(1.0 / n)))
    }

    pub fn to_momentum_rep(&self) -> Self {
        match self.rep {
            Rep::Momentum => self.clone(),
            Rep::Position => self.with_rep_field(Rep::Momentum, fft4(&self.field)),
        }
    }

    pub fn to_position_rep(&self) -> Self {
        match self.rep {
            Rep::Position => self.clone(),
            Rep::Momentum => self.with_rep_field(Rep::Position, ifft4(&self.field)),
        }
    }

    pub fn to_rep(&self, rep: Rep) -> Self {
        match rep {
            Rep::Position => self.to_position_rep(),
            Rep::Momentum => self.to_momentum_rep(),
        }
    }

    /// Probability that the event falls in `region` of the current
    /// representation (spinor components summed).
    pub fn born_probability(&self, region: &Region) -> Result<f64> {
        let grid = *self.grid();
        region.validate(&grid)?;
        let density = self.field.density();
        let sum: f64 = density.iter().enumerate().filter(|(i, _)| region.contains(&grid.unravel(*i))).map(|(_, d)| d).sum();
        Ok(sum * self.cell_measure())
    }

    /// Probability of spinor component `sigma` (0-based), summed over the grid.
    pub fn spinor_probability(&self, sigma: usize) -> Result<f64> {
        if sigma >= self.field.components() {
            return Err(Error::Invalid(format!("spinor index {sigma} out of range")));
        }
        Ok(self.field.component(sigma).iter().map(|v| v.norm_sqr()).sum::<f64>() * self.cell_measure())
    }

    /// `⟨self|other⟩` with the cell measure; `other` is brought to this rep.
    pub fn inner(&self, other: &EventState) -> Result<C64> {
        let other = other.to_rep(self.rep);
        Ok(self.field.dot(&other.field)? * self.cell_measure())
    }

    pub fn overlap_probability(&self, other: &EventState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Moments of `|Φ|²` in the current representation.
    pub fn moments(&self) -> Moments {
        let grid = self.grid();
        let axes: [Vec<f64>; 4] = std::array::from_fn(|d| match self.rep {
            Rep::Position => grid.axes[d].positions(),
            Rep::Momentum => grid.axes[d].momenta(),
        });
        density_moments(grid, &self.field.density(), &axes, self.cell_measure())
    }

    pub fn position_moments(&self) -> Moments {
        self.to_position_rep().moments()
    }

    pub fn momentum_moments(&self) -> Moments {
        self.to_momentum_rep().moments()
    }

    pub fn expectation(&self, observable: Observable) -> Result<f64> {
        match observable {
            Observable::X(mu) if mu < 4 => Ok(self.position_moments().mean[mu]),
            Observable::P(mu) if mu < 4 => Ok(self.momentum_moments().mean[mu]),
            _ => Err(Error::Invalid(format!("{observable:?}: index must be 0..=3"))),
        }
    }

    pub fn mean_position(&self) -> FourVector {
        FourVector(self.position_moments().mean)
    }

    pub fn mean_momentum(&self) -> FourVector {
        FourVector(self.momentum_moments().mean)
    }

    /// `(ΔX^μ, ΔP^μ, ΔX^μ ΔP^μ)`.
    pub fn uncertainty_product(&self, mu: usize) -> Result<(f64, f64, f64)> {
        if mu >= 4 {
            return Err(Error::Invalid(format!("index {mu} must be 0..=3")));
        }
        let dx = self.position_moments().std_dev(mu);
        let dp = self.momentum_moments().std_dev(mu);
        Ok((dx, dp, dx * dp))
    }

    /// All four products at once, sharing one transform.
    pub fn uncertainty_products(&self) -> [(f64, f64, f64); 4] {
        let x = self.position_moments();
        let p = self.momentum_moments();
        std::array::from_fn(|mu| {
            let (dx, dp) = (x.std_dev(mu), p.std_dev(mu));
            (dx, dp, dx * dp)
        })
    }

    /// Edge clearance of the state after `x ↦ Λx + a`, `p ↦ Λp`.
    pub fn clearance(&self, lambda: &LorentzTransform, translation: &FourVector) -> ClearanceReport {
        let x = self.position_moments().transformed(&lambda.matrix, &translation.0);
        let p = self.momentum_moments().transformed(&lambda.matrix, &[0.0; 4]);
        ClearanceReport::evaluate(self.grid(), &x, &p)
    }
}

fn density_moments(grid: &Grid4D, density: &[f64], axes: &[Vec<f64>; 4], measure: f64) -> Moments {
    let mut total = 0.0;
    let mut first = [0.0; 4];
    let mut second = [[0.0; 4]; 4];
    for (i, &w) in density.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let idx = grid.unravel(i);
        let c: [f64; 4] = std::array::from_fn(|d| axes[d][idx[d]]);
        total += w;
        for a in 0..4 {
            first[a] += w * c[a];
            for b in a..4 {
                second[a][b] += w * c[a] * c[b];
            }
        }
    }
    if total == 0.0 {
        return Moments { total: 0.0, mean: [0.0; 4], covariance: [[0.0; 4]; 4] };
    }
    let mean: [f64; 4] = first.map(|f| f / total);
    let mut covariance = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in a..4 {
            let v = second[a][b] / total - mean[a] * mean[b];
            covariance[a][b] = v;
            covariance[b][a] = v;
        }
    }
    Moments { total: total * measure, mean, covariance }
}

/// Product Gaussian `Π exp(−(x^μ − c^μ)²/(2σ_μ²))` times the carrier
/// `e^{−i p̄₀·(x̲ − c̲)}`, normalized. The state records a warning when the
/// packet does not keep the clearance rule in either representation.
pub fn gaussian_packet(
    grid: &Grid4D,
    center: FourVector,
    widths: [f64; 4],
    carrier: FourVector,
    spinor_weights: Option<[C64; 4]>,
) -> Result<EventState> {
    if widths.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::Invalid(format!("widths must be positive, got {widths:?}")));
    }
    if !center.is_finite() || !carrier.is_finite() {
        return Err(Error::Invalid("non-finite packet parameters".into()));
    }
    let weights = match spinor_weights {
        None => None,
        Some(w) => {
            let n = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if n == 0.0 || !n.is_finite() {
                return Err(Error::Invalid("spinor weights must be nonzero".into()));
            }
            Some(w.map(|c| c / n))
        }
    };
    let components = if weights.is_some() { 4 } else { 1 };
    let field = ComplexField::from_fn(*grid, components, |c, idx| {
        let x = grid.position(&idx);
        let mut exponent = 0.0;
        let mut phase = 0.0;
        for mu in 0..4 {
            let y = x[mu] - center[mu];
            exponent -= y * y / (2.0 * widths[mu] * widths[mu]);
            let metric = if mu == 0 { 1.0 } else { -1.0 };
            phase -= metric * carrier[mu] * y;
        }
        let w = weights.map_or(C64::new(1.0, 0.0), |w| w[c]);
        w * C64::from_polar(exponent.exp(), phase)
    })?;
    let mut state = EventState::new(Rep::Position, field)?.normalize()?;

    let sd = |w: f64| w / std::f64::consts::SQRT_2;
    let diag = |s: [f64; 4]| std::array::from_fn(|i| std::array::from_fn(|j| if i == j { s[i] * s[i] } else { 0.0 }));
    let x = Moments { total: 1.0, mean: center.0, covariance: diag(widths.map(sd)) };
    let p = Moments { total: 1.0, mean: carrier.0, covariance: diag(widths.map(|w| sd(1.0 / w))) };
    let report = ClearanceReport::evaluate(grid, &x, &p);
    if !report.ok() {
        let msg = report.describe();
        warn!("gaussian packet lacks clearance: {msg}");
        state.warning = Some(msg);
    }
    Ok(state)
}

/// A random superposition of a few clearance-respecting Gaussian packets.
pub fn random_packet(grid: &Grid4D, seed: u64, terms: usize) -> Result<EventState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total: Option<Field4> = None;
    for _ in 0..terms.max(1) {
        let mut center = [0.0; 4];
        let mut carrier = [0.0; 4];
        let mut widths = [0.0; 4];
        for d in 0..4 {
            let a = grid.axes[d];
            let (xl, pl) = (0.5 * a.length(), a.p_max());
            // keep 5 density σ (= 5 w/√2) of room on both sides in x and p
            let lo = (2.0 * 5.0 / std::f64::consts::SQRT_2 / pl).max(0.25 * xl / 5.0);
            let hi = (0.5 * xl * std::f64::consts::SQRT_2 / 5.0).max(lo);
            let w = rng.gen_range(lo..=hi);
            let room_x = (xl - 5.0 * w / std::f64::consts::SQRT_2 - a.delta).max(0.0);
            let room_p = (pl - 5.0 / (w * std::f64::consts::SQRT_2) - a.dp()).max(0.0);
            widths[d] = w;
            center[d] = a.origin + rng.gen_range(-0.5..=0.5) * room_x;
            carrier[d] = rng.gen_range(-0.5..=0.5) * room_p;
        }
        let amp = C64::from_polar(rng.gen_range(0.2..1.0), rng.gen_range(0.0..std::f64::consts::TAU));
        let packet = gaussian_packet(grid, FourVector(center), widths, FourVector(carrier), None)?;
        let mut f = packet.into_field();
        f.scale(amp);
        total = Some(match total {
            None => f,
            Some(t) => {
                let data = t.data().iter().zip(f.data()).map(|(a, b)| a + b).collect();
                t.with_data(data)?
            }
        });
    }
    EventState::new(Rep::Position, total.expect("at least one term"))?.normalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisGrid;
    use proptest::prelude::*;

    fn grid(n: usize) -> Grid4D {
        Grid4D::cubic(n).unwrap()
    }

    fn unit_gaussian(g: &Grid4D) -> EventState {
        gaussian_packet(g, FourVector::ZERO, [1.0; 4], FourVector::ZERO, None).unwrap()
    }

    // ∫_{-a}^{a} e^{-x²} dx / √π, by composite Simpson on a fine mesh
    fn erf_oracle(a: f64) -> f64 {
        let n = 20_000;
        let h = a / n as f64;
        let f = |x: f64| (-x * x).exp();
        let mut s = f(0.0) + f(a);
        for k in 1..n {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
        }
        2.0 * s * h / 3.0 / std::f64::consts::PI.sqrt()
    }

    #[test]
    fn normalize_examples() {
        let g = grid(16);
        let s = unit_gaussian(&g);
        assert!((s.norm() - 1.0).abs() < 1e-12);
        assert!(s.normalize().unwrap().field().max_abs_diff(s.field()).unwrap() < 1e-12);
        let scaled = s.replace_field(s.field().clone().scaled(7.0));
        assert!(scaled.normalize().unwrap().field().max_abs_diff(s.field()).unwrap() < 1e-12);
        let zero = s.replace_field(ComplexField::zeros(g, 1).unwrap());
        assert!(matches!(zero.normalize(), Err(Error::ZeroNorm)));
    }

    #[test]
    fn born_probability_examples() {
        let g = grid(32);
        let s = unit_gaussian(&g);
        assert!((s.born_probability(&Region::full(&g)).unwrap() - 1.0).abs() < 1e-10);
        // even grid: index 16 is the center sample; split it evenly
        let upper = s.born_probability(&Region::slab(&g, 1, 17..32)).unwrap();
        let center = s.born_probability(&Region::slab(&g, 1, 16..17)).unwrap();
        assert!((upper + 0.5 * center - 0.5).abs() < 1e-10);
        // |x¹| < 1 with unit-σ amplitude: density ∝ e^{−x²}. Cells of width
        // 2/15 put the region edge on a cell boundary; the remaining midpoint
        // rule error is ≈ 0.035 Δ² < 1e−3.
        let coarse = AxisGrid::new(16, 0.8, 0.0).unwrap();
        let fine = AxisGrid::new(64, 2.0 / 15.0, 0.0).unwrap();
        let gf = Grid4D::new([coarse, fine, coarse, coarse]).unwrap();
        let wide = gaussian_packet(&gf, FourVector::ZERO, [1.0; 4], FourVector::ZERO, None).unwrap();
        let inside: Vec<usize> = (0..fine.n).filter(|&j| fine.x(j).abs() < 1.0).collect();
        let region = Region::slab(&gf, 1, inside[0]..inside[inside.len() - 1] + 1);
        let p = wide.born_probability(&region).unwrap();
        assert!((p - erf_oracle(1.0)).abs() < 1e-3, "{p}");
        let err = Region::slab(&g, 2, 0..33);
        assert!(matches!(s.born_probability(&err), Err(Error::InvalidRegion(_))));
    }

    #[test]
    fn overlap_examples() {
        let g = grid(32);
        let a = unit_gaussian(&g);
        assert!((a.overlap_probability(&a).unwrap() - 1.0).abs() < 1e-12);
        // unit width of the density means amplitude width √2; the squared
        // overlap is then e^{−d²/4}
        let wide = Grid4D::new([AxisGrid::new(32, 0.6, 0.0).unwrap(); 4]).unwrap();
        let w = [std::f64::consts::SQRT_2; 4];
        let a2 = gaussian_packet(&wide, FourVector::ZERO, w, FourVector::ZERO, None).unwrap();
        let b2 = gaussian_packet(&wide, FourVector::new(0.0, 2.0, 0.0, 0.0), w, FourVector::ZERO, None).unwrap();
        let expected = (-1.0f64).exp();
        assert!((a2.overlap_probability(&b2).unwrap() - expected).abs() < 1e-9);
        let b = gaussian_packet(&g, FourVector::new(0.0, 2.0, 0.0, 0.0), [1.0; 4], FourVector::ZERO, None).unwrap();
        let far_l = gaussian_packet(&g, FourVector::new(0.0, -4.5, 0.0, 0.0), [0.3; 4], FourVector::ZERO, None).unwrap();
        let far_r = gaussian_packet(&g, FourVector::new(0.0, 4.5, 0.0, 0.0), [0.3; 4], FourVector::ZERO, None).unwrap();
        assert!(far_l.overlap_probability(&far_r).unwrap() < 1e-10);
        let ab = a.overlap_probability(&b).unwrap();
        let ba = b.overlap_probability(&a).unwrap();
        assert!((ab - ba).abs() < 1e-14);
        let rotated = b.replace_field({
            let mut f = b.field().clone();
            f.scale(C64::from_polar(1.0, 1.3));
            f
        });
        assert!((a.overlap_probability(&rotated).unwrap() - ab).abs() < 1e-14);
    }

    #[test]
    fn expectation_examples() {
        let g = grid(32);
        let s = gaussian_packet(&g, FourVector::new(0.0, 1.0, 0.0, 0.0), [1.0; 4], FourVector::ZERO, None).unwrap();
        assert!(s.mean_position().max_abs_diff(&FourVector::new(0.0, 1.0, 0.0, 0.0)) < 1e-8);
        assert!(s.mean_momentum().max_abs_diff(&FourVector::ZERO) < 1e-12);
        let p0 = FourVector::new(0.8, -0.5, 0.3, 1.1);
        let c = gaussian_packet(&g, FourVector::ZERO, [1.0; 4], p0, None).unwrap();
        assert!(c.mean_momentum().max_abs_diff(&p0) < 1e-6);
        assert!((c.expectation(Observable::P(3)).unwrap() - 1.1).abs() < 1e-6);
        assert!(c.expectation(Observable::X(4)).is_err());
    }

    #[test]
    fn representation_round_trip() {
        let g = grid(16);
        let s = gaussian_packet(&g, FourVector::new(0.2, 0.0, -0.3, 0.1), [1.0, 0.9, 1.2, 1.0], FourVector::new(0.5, 0.0, 0.4, -0.2), Some([C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::default(), C64::new(0.5, 0.0)])).unwrap();
        let m = s.to_momentum_rep();
        assert!((m.norm() - 1.0).abs() < 1e-12);
        assert!(m.to_position_rep().field().max_abs_diff(s.field()).unwrap() < 1e-12);
    }

    #[test]
    fn uncertainty_examples() {
        let g = grid(32);
        let s = unit_gaussian(&g);
        for (dx, dp, prod) in s.uncertainty_products() {
            assert!((dx - 0.5f64.sqrt()).abs() < 1e-6);
            assert!((dp - 0.5f64.sqrt()).abs() < 1e-6);
            assert!((prod - 0.5).abs() < 1e-6);
        }
        let long = Grid4D::new([AxisGrid::new(32, 0.6, 0.0).unwrap(), g.axes[1], g.axes[2], g.axes[3]]).unwrap();
        let t = gaussian_packet(&long, FourVector::ZERO, [2.0, 1.0, 1.0, 1.0], FourVector::ZERO, None).unwrap();
        let (dx, dp, prod) = t.uncertainty_product(0).unwrap();
        assert!((dx - 2.0f64.sqrt()).abs() < 1e-6);
        assert!((dp - 1.0 / (2.0 * 2.0f64.sqrt())).abs() < 1e-6);
        assert!((prod - 0.5).abs() < 1e-6);
    }

    #[test]
    fn spinor_weights() {
        let g = grid(8);
        let one = C64::new(1.0, 0.0);
        let z = C64::default();
        let s = gaussian_packet(&g, FourVector::ZERO, [1.0; 4], FourVector::ZERO, Some([one, z, z, z])).unwrap();
        assert!((s.spinor_probability(0).unwrap() - 1.0).abs() < 1e-12);
        let mixed = gaussian_packet(&g, FourVector::ZERO, [1.0; 4], FourVector::ZERO, Some([one, one, z, one])).unwrap();
        let marginal: f64 = (0..4).map(|c| mixed.spinor_probability(c).unwrap()).sum();
        assert!((marginal - mixed.born_probability(&Region::full(&g)).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn clearance_warning() {
        let g = grid(16);
        let ok = unit_gaussian(&g);
        assert!(ok.warning().is_none());
        let edge = gaussian_packet(&g, FourVector::new(0.0, 4.0, 0.0, 0.0), [1.0; 4], FourVector::ZERO, None).unwrap();
        assert!(edge.warning().is_some());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn random_states_respect_heisenberg(seed in any::<u64>()) {
            let s = random_packet(&grid(16), seed, 3).unwrap();
            prop_assert!((s.born_probability(&Region::full(s.grid())).unwrap() - 1.0).abs() < 1e-10);
            let m = s.to_momentum_rep();
            prop_assert!((m.born_probability(&Region::full(m.grid())).unwrap() - 1.0).abs() < 1e-10);
            for (_, _, prod) in s.uncertainty_products() {
                prop_assert!(prod >= 0.5 - 1e-6);
            }
        }
    }
}
