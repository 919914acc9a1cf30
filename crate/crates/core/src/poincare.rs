//! The Poincaré group acting on single-event states.
//!
//! `g = (Λ, a)` maps `Φ(x̄) ↦ Φ(Λ⁻¹(x̄ − ā))` in position representation and
//! `Φ̃(p̄) ↦ e^{i ā·p̲} Φ̃(Λ⁻¹p̄)` in momentum representation. Lorentz parts are
//! applied plane by plane with band-limited interpolation, translations with
//! exact spectral shifts.

use std::collections::HashMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dirac::{self, Mat4c};
use crate::error::{Error, Result};
use crate::event::{EventState, Rep};
use crate::fft::{fft4, ifft4, shift_lines, SPACETIME_SIGNS};
use crate::field::{Field4, C64};
use crate::grid::{AxisGrid, Grid4D};
use crate::lorentz::{Elementary, LorentzTransform, Mat4, TransformKind};
use crate::resample::PlaneMap;
use crate::vector::{eta, FourVector};

const UNITARY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct PoincareElement {
    pub lorentz: LorentzTransform,
    pub translation: FourVector,
    /// The matrix `S(Λ)` of `Φ'(x̄, σ) = Σ_σ' S⁻¹_{σ'σ} Φ(Λ⁻¹x̄, σ')`.
    pub spinor_block: Option<Mat4c>,
}

fn is_rotation(lambda: &LorentzTransform) -> bool {
    let m = &lambda.matrix;
    (m[0][0] - 1.0).abs() < 1e-12 && (1..4).all(|i| m[0][i].abs() < 1e-12 && m[i][0].abs() < 1e-12)
}

fn unitarity_defect(s: &Mat4c) -> f64 {
    dirac::max_abs(&(s.adjoint() * s - Mat4c::identity()))
}

impl PoincareElement {
    /// Spin indices follow rotations; under boosts they are left alone.
    pub fn new(lorentz: LorentzTransform, translation: FourVector) -> Result<Self> {
        lorentz.validate()?;
        if !translation.is_finite() {
            return Err(Error::Invalid("non-finite translation".into()));
        }
        let spinor_block = is_rotation(&lorentz).then(|| storage_block(&dirac::standard_spinor(&lorentz)));
        Ok(PoincareElement { lorentz, translation, spinor_block })
    }

    pub fn identity() -> Self {
        PoincareElement { lorentz: LorentzTransform::identity(), translation: FourVector::ZERO, spinor_block: None }
    }

    pub fn lorentz(lorentz: LorentzTransform) -> Result<Self> {
        Self::new(lorentz, FourVector::ZERO)
    }

    pub fn translation(a: FourVector) -> Result<Self> {
        Self::new(LorentzTransform::identity(), a)
    }

    /// Also mixes spin components under boosts, with the finite-dimensional
    /// (non-unitary) representation. States are renormalized afterwards.
    pub fn with_boost_spinor(mut self) -> Self {
        self.spinor_block = Some(storage_block(&dirac::standard_spinor(&self.lorentz)));
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.lorentz.validate()?;
        if let Some(s) = &self.spinor_block {
            if s.iter().any(|c| !c.is_finite()) || s.try_inverse().is_none() {
                return Err(Error::Invalid("spinor block must be finite and invertible".into()));
            }
            if is_rotation(&self.lorentz) && unitarity_defect(s) > UNITARY_TOL {
                return Err(Error::Invalid(format!("rotation spinor block not unitary: {:e}", unitarity_defect(s))));
            }
        }
        Ok(())
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &PoincareElement) -> PoincareElement {
        let spinor_block = match (&self.spinor_block, &other.spinor_block) {
            (None, None) => None,
            (a, b) => Some(a.unwrap_or_else(Mat4c::identity) * b.unwrap_or_else(Mat4c::identity)),
        };
        PoincareElement {
            lorentz: self.lorentz.compose(&other.lorentz),
            translation: self.lorentz.apply(&other.translation) + self.translation,
            spinor_block,
        }
    }

    pub fn inverse(&self) -> PoincareElement {
        let inv = self.lorentz.inverse();
        PoincareElement {
            translation: -inv.apply(&self.translation),
            lorentz: inv,
            spinor_block: self.spinor_block.map(|s| s.try_inverse().expect("validated spinor block")),
        }
    }

    /// Matrix applied to the spin index: `Φ'_σ = Σ_σ' A_{σσ'} Φ_σ'`.
    fn spin_action(&self) -> Option<Mat4c> {
        self.spinor_block.map(|s| s.try_inverse().expect("validated spinor block").transpose())
    }

    fn is_trivial(&self) -> bool {
        self.lorentz.is_identity(0.0)
            && self.translation.0 == [0.0; 4]
            && self.spinor_block.is_none_or(|s| s == Mat4c::identity())
    }

    fn renormalizes(&self) -> bool {
        self.spinor_block.is_some_and(|s| unitarity_defect(&s) > UNITARY_TOL)
    }
}

/// Converts a standard representation matrix `S_std` (acting on spinors as
/// `S_std Φ`) to the stored `S` with `(S⁻¹)ᵀ = S_std`.
pub fn storage_block(standard: &Mat4c) -> Mat4c {
    standard.try_inverse().expect("spinor representation is invertible").transpose()
}

#[derive(Serialize, Deserialize)]
struct ElementJson {
    matrix: Vec<f64>,
    translation: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spinor: Option<Vec<f64>>,
}

impl Serialize for PoincareElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ElementJson {
            matrix: self.lorentz.matrix.iter().flatten().copied().collect(),
            translation: self.translation.0.to_vec(),
            spinor: self.spinor_block.map(|m| {
                let mut out = Vec::with_capacity(32);
                for i in 0..4 {
                    for j in 0..4 {
                        out.extend([m[(i, j)].re, m[(i, j)].im]);
                    }
                }
                out
            }),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PoincareElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = ElementJson::deserialize(d)?;
        if raw.matrix.len() != 16 || raw.translation.len() != 4 {
            return Err(D::Error::custom("expected 16 matrix and 4 translation entries"));
        }
        let matrix: Mat4 = std::array::from_fn(|i| std::array::from_fn(|j| raw.matrix[4 * i + j]));
        let lorentz = LorentzTransform { matrix, kind: TransformKind::Composite };
        let translation = FourVector(std::array::from_fn(|i| raw.translation[i]));
        let spinor_block = match raw.spinor {
            None => None,
            Some(v) if v.len() == 32 => Some(Mat4c::from_fn(|i, j| C64::new(v[8 * i + 2 * j], v[8 * i + 2 * j + 1]))),
            Some(_) => return Err(D::Error::custom("spinor block needs 32 reals")),
        };
        let elem = PoincareElement { lorentz, translation, spinor_block };
        elem.validate().map_err(D::Error::custom)?;
        Ok(elem)
    }
}

/// Applies the Lorentz part plane by plane, rightmost factor first.
/// `track` is the mean of the conjugate variable, used to remove the dominant
/// linear phase before interpolation; `wave` turns it into per-axis wavenumbers.
fn resample(data: Vec<C64>, shape: &[usize], axes: [AxisGrid; 4], lambda: &LorentzTransform, track: FourVector, wave: impl Fn(usize, f64) -> f64) -> Vec<C64> {
    let mut data = data;
    let mut track = track;
    for factor in lambda.elementary_factors().iter().rev() {
        let ((i, j), _) = factor.plane();
        let (_, inverse) = factor.inverse().plane();
        let map = PlaneMap {
            axes: (i, j),
            grids: [axes[i], axes[j]],
            inverse,
            carrier: [wave(i, track[i]), wave(j, track[j])],
        };
        data = map.apply(&data, shape);
        track = apply_elementary(factor, &track);
    }
    data
}

fn apply_elementary(e: &Elementary, v: &FourVector) -> FourVector {
    let m = e.matrix();
    FourVector(std::array::from_fn(|mu| (0..4).map(|nu| m[mu][nu] * v[nu]).sum()))
}

fn mix_spin(data: &mut [C64], points: usize, action: &Mat4c) {
    for k in 0..points {
        let v: [C64; 4] = std::array::from_fn(|c| data[c * points + k]);
        for r in 0..4 {
            data[r * points + k] = (0..4).map(|c| action[(r, c)] * v[c]).sum();
        }
    }
}

fn check_clearance(elem: &PoincareElement, state: &EventState) -> Result<()> {
    let report = state.clearance(&elem.lorentz, &elem.translation);
    if report.ok() {
        Ok(())
    } else {
        Err(Error::Clearance(report.describe()))
    }
}

fn finish(elem: &PoincareElement, state: &EventState, rep: Rep, mut data: Vec<C64>) -> Result<EventState> {
    let field = state.field();
    if field.is_spinor() {
        if let Some(action) = elem.spin_action() {
            mix_spin(&mut data, field.points(), &action);
        }
    }
    let out = state.to_rep(rep).replace_field(field.with_data(data)?);
    if elem.renormalizes() && field.is_spinor() {
        let target = state.norm();
        let now = out.norm();
        if now == 0.0 {
            return Err(Error::ZeroNorm);
        }
        return Ok(out.replace_field(out.field().clone().scaled(target / now)));
    }
    Ok(out)
}

/// `Φ'(x̄) = Φ(Λ⁻¹(x̄ − ā))`, spin components mixed by `S⁻¹`.
pub fn apply_position(elem: &PoincareElement, state: &EventState) -> Result<EventState> {
    if state.rep() != Rep::Position {
        return Err(Error::WrongRepresentation { expected: "position" });
    }
    if elem.is_trivial() {
        return Ok(state.clone());
    }
    check_clearance(elem, state)?;
    let grid = *state.grid();
    let shape = state.field().full_shape();
    let mut data = state.field().data().to_vec();
    if !elem.lorentz.is_identity(0.0) {
        let p = state.mean_momentum();
        data = resample(data, &shape, grid.axes, &elem.lorentz, p, |d, pd| -SPACETIME_SIGNS[d] * pd);
    }
    for d in 0..4 {
        let a = elem.translation[d];
        if a != 0.0 {
            shift_lines(&mut data, &shape, d, &grid.axes[d], nyquist_sign(d), |_, _| -a);
        }
    }
    finish(elem, state, Rep::Position, data)
}

/// Sign of the Nyquist wavenumber that matches the momentum grid's first row.
fn nyquist_sign(d: usize) -> f64 {
    SPACETIME_SIGNS[d]
}

/// `Φ̃'(p̄) = e^{i ā·p̲} Φ̃(Λ⁻¹p̄)`, spin components mixed by `S⁻¹`.
pub fn apply_momentum(elem: &PoincareElement, state: &EventState) -> Result<EventState> {
    if state.rep() != Rep::Momentum {
        return Err(Error::WrongRepresentation { expected: "momentum" });
    }
    if elem.is_trivial() {
        return Ok(state.clone());
    }
    check_clearance(elem, state)?;
    let grid = *state.grid();
    let dual = grid.dual().axes;
    let shape = state.field().full_shape();
    let mut data = state.field().data().to_vec();
    if !elem.lorentz.is_identity(0.0) {
        let x = state.mean_position();
        data = resample(data, &shape, dual, &elem.lorentz, x, |d, xd| SPACETIME_SIGNS[d] * xd);
    }
    if elem.translation.0 != [0.0; 4] {
        let points = grid.len();
        let a = elem.translation;
        let momenta: [Vec<f64>; 4] = std::array::from_fn(|d| grid.axes[d].momenta());
        for (k, v) in data.iter_mut().enumerate() {
            let idx = grid.unravel(k % points);
            let phase: f64 = (0..4).map(|d| SPACETIME_SIGNS[d] * a[d] * momenta[d][idx[d]]).sum();
            *v *= C64::from_polar(1.0, phase);
        }
    }
    finish(elem, state, Rep::Momentum, data)
}

/// Dispatches on the state's representation.
pub fn apply(elem: &PoincareElement, state: &EventState) -> Result<EventState> {
    match state.rep() {
        Rep::Position => apply_position(elem, state),
        Rep::Momentum => apply_momentum(elem, state),
    }
}

/// `(⟨a|b⟩, ⟨ga|gb⟩)`.
pub fn scalar_product_invariance(elem: &PoincareElement, a: &EventState, b: &EventState) -> Result<(C64, C64)> {
    let before = a.inner(b)?;
    let ga = apply(elem, a)?;
    let gb = apply(elem, &b.to_rep(a.rep()))?;
    Ok((before, ga.inner(&gb)?))
}

/// Errors of `⟨X̄⟩' = Λ⟨X̄⟩ + ā` and `⟨P̄⟩' = Λ⟨P̄⟩` for one application.
pub fn moment_covariance(elem: &PoincareElement, state: &EventState) -> Result<(f64, f64)> {
    let after = apply(elem, state)?;
    let x = elem.lorentz.apply(&state.mean_position()) + elem.translation;
    let p = elem.lorentz.apply(&state.mean_momentum());
    Ok((after.mean_position().max_abs_diff(&x), after.mean_momentum().max_abs_diff(&p)))
}

/// Spacetime position, momentum, or Lorentz generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Operator {
    X(usize),
    P(usize),
    /// `M^{μν} = X^μP^ν − X^νP^μ`.
    M(usize, usize),
}

impl std::fmt::Display for Operator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Operator::X(m) => write!(f, "X{m}"),
            Operator::P(m) => write!(f, "P{m}"),
            Operator::M(m, n) => write!(f, "M{m}{n}"),
        }
    }
}

impl Operator {
    fn check(self) -> Result<()> {
        let ok = match self {
            Operator::X(m) | Operator::P(m) => m < 4,
            Operator::M(m, n) => m < 4 && n < 4,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("{self}: indices must be 0..=3")))
        }
    }

    /// Acts on a position-representation field.
    pub fn act(self, field: &Field4) -> Field4 {
        match self {
            Operator::X(mu) => multiply_coordinate(field, mu, false),
            Operator::P(mu) => ifft4(&multiply_coordinate(&fft4(field), mu, true)),
            Operator::M(mu, nu) => {
                let ft = fft4(field);
                let a = multiply_coordinate(&ifft4(&multiply_coordinate(&ft, nu, true)), mu, false);
                let b = multiply_coordinate(&ifft4(&multiply_coordinate(&ft, mu, true)), nu, false);
                let data = a.data().iter().zip(b.data()).map(|(x, y)| x - y).collect();
                field.with_data(data).expect("same shape")
            }
        }
    }
}

fn multiply_coordinate(field: &Field4, mu: usize, momentum: bool) -> Field4 {
    let grid: &Grid4D = field.grid();
    let coords = if momentum { grid.axes[mu].momenta() } else { grid.axes[mu].positions() };
    let shape = grid.shape();
    let stride: usize = shape[mu + 1..].iter().product();
    let n = shape[mu];
    let data = field.data().iter().enumerate().map(|(k, v)| v * coords[(k / stride) % n]).collect();
    field.with_data(data).expect("same shape")
}

/// A linear combination of operators; `None` stands for the identity.
pub type OperatorSum = Vec<(C64, Option<Operator>)>;

/// Right-hand side of `[a, b]` from the canonical and Poincaré relations.
pub fn commutator_rhs(a: Operator, b: Operator) -> Result<OperatorSum> {
    a.check()?;
    b.check()?;
    let i = C64::new(0.0, 1.0);
    let negate = |v: OperatorSum| v.into_iter().map(|(c, o)| (-c, o)).collect();
    Ok(match (a, b) {
        (Operator::X(_), Operator::X(_)) | (Operator::P(_), Operator::P(_)) => Vec::new(),
        (Operator::X(mu), Operator::P(nu)) => vec![(-i * eta(mu, nu), None)],
        (Operator::P(_), Operator::X(_)) => negate(commutator_rhs(b, a)?),
        (Operator::M(mu, nu), Operator::P(rho)) => {
            vec![(-i * eta(mu, rho), Some(Operator::P(nu))), (i * eta(nu, rho), Some(Operator::P(mu)))]
        }
        (Operator::M(mu, nu), Operator::X(rho)) => {
            vec![(-i * eta(mu, rho), Some(Operator::X(nu))), (i * eta(nu, rho), Some(Operator::X(mu)))]
        }
        (Operator::P(_) | Operator::X(_), Operator::M(..)) => negate(commutator_rhs(b, a)?),
        (Operator::M(mu, nu), Operator::M(rho, sigma)) => vec![
            (i * eta(nu, rho), Some(Operator::M(mu, sigma))),
            (-i * eta(mu, rho), Some(Operator::M(nu, sigma))),
            (-i * eta(mu, sigma), Some(Operator::M(rho, nu))),
            (i * eta(nu, sigma), Some(Operator::M(rho, mu))),
        ],
    }
    .into_iter()
    .filter(|(c, _)| *c != C64::default())
    .collect())
}

/// `‖[a, b]ψ − rhs ψ‖ / ‖ψ‖`, every operator applied spectrally.
pub fn commutator_check(a: Operator, b: Operator, state: &EventState) -> Result<f64> {
    let rhs = commutator_rhs(a, b)?;
    let psi = state.to_position_rep().into_field();
    let ab = a.act(&b.act(&psi));
    let ba = b.act(&a.act(&psi));
    let mut diff: Vec<C64> = ab.data().iter().zip(ba.data()).map(|(x, y)| x - y).collect();
    for (c, op) in rhs {
        let term = match op {
            None => psi.clone(),
            Some(op) => op.act(&psi),
        };
        diff.iter_mut().zip(term.data()).for_each(|(d, t)| *d -= c * t);
    }
    let num: f64 = diff.iter().map(|v| v.norm_sqr()).sum();
    Ok((num / psi.sum_sqr()).sqrt())
}

/// Many `commutator_check`s on one state. Each `opψ` and its four momentum
/// images are computed once and shared between pairs.
pub fn commutator_checks(pairs: &[(Operator, Operator)], state: &EventState) -> Result<Vec<f64>> {
    let psi = state.to_position_rep().into_field();
    let norm = psi.sum_sqr();
    let mut cache = ActionCache { ft: fft4(&psi), psi, first: HashMap::new(), second: HashMap::new() };
    pairs
        .iter()
        .map(|&(a, b)| {
            let rhs = commutator_rhs(a, b)?;
            let ab = cache.outer(a, b);
            let ba = cache.outer(b, a);
            let mut diff: Vec<C64> = ab.data().iter().zip(ba.data()).map(|(x, y)| x - y).collect();
            for (c, op) in rhs {
                let term = match op {
                    None => &cache.psi,
                    Some(op) => cache.first(op),
                };
                diff.iter_mut().zip(term.data()).for_each(|(d, t)| *d -= c * t);
            }
            let num: f64 = diff.iter().map(|v| v.norm_sqr()).sum();
            Ok((num / norm).sqrt())
        })
        .collect()
}

struct ActionCache {
    psi: Field4,
    ft: Field4,
    first: HashMap<Operator, Field4>,
    /// `P_ρ(opψ)` for ρ = 0..3.
    second: HashMap<Operator, Vec<Field4>>,
}

impl ActionCache {
    fn first(&mut self, op: Operator) -> &Field4 {
        if !self.first.contains_key(&op) {
            let f = match op {
                Operator::X(mu) => multiply_coordinate(&self.psi, mu, false),
                Operator::P(mu) => ifft4(&multiply_coordinate(&self.ft, mu, true)),
                Operator::M(mu, nu) => {
                    let a = multiply_coordinate(self.first(Operator::P(nu)), mu, false);
                    let b = multiply_coordinate(self.first(Operator::P(mu)), nu, false);
                    subtract(&a, &b)
                }
            };
            self.first.insert(op, f);
        }
        &self.first[&op]
    }

    fn momenta(&mut self, op: Operator) -> &[Field4] {
        if !self.second.contains_key(&op) {
            let ft = fft4(self.first(op));
            let p = (0..4).map(|rho| ifft4(&multiply_coordinate(&ft, rho, true))).collect();
            self.second.insert(op, p);
        }
        &self.second[&op]
    }

    /// `a(bψ)`.
    fn outer(&mut self, a: Operator, b: Operator) -> Field4 {
        match a {
            Operator::X(mu) => multiply_coordinate(self.first(b), mu, false),
            Operator::P(rho) => self.momenta(b)[rho].clone(),
            Operator::M(mu, nu) => {
                let p = self.momenta(b);
                subtract(&multiply_coordinate(&p[nu], mu, false), &multiply_coordinate(&p[mu], nu, false))
            }
        }
    }
}

fn subtract(a: &Field4, b: &Field4) -> Field4 {
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x - y).collect();
    a.with_data(data).expect("same shape")
}

/// The finite transform `Λ` with `U(Λ) = exp(−iθ M^{μν})`.
pub fn generator_transform(mu: usize, nu: usize, theta: f64) -> Result<LorentzTransform> {
    let (a, b, s) = if mu < nu { (mu, nu, theta) } else { (nu, mu, -theta) };
    let e = match (a, b) {
        (0, k @ 1..=3) => Elementary::Boost { axis: k, rapidity: -s },
        (1, 2) => Elementary::Rotation { axis: 3, angle: s },
        (2, 3) => Elementary::Rotation { axis: 1, angle: s },
        (1, 3) => Elementary::Rotation { axis: 2, angle: -s },
        _ => return Err(Error::Invalid(format!("M{mu}{nu} is not a generator"))),
    };
    let kind = match e {
        Elementary::Boost { axis, rapidity } => TransformKind::Boost { axis, velocity: rapidity.tanh() },
        Elementary::Rotation { axis, angle } => TransformKind::Rotation { axis, angle },
    };
    Ok(LorentzTransform { matrix: e.matrix(), kind })
}

/// Relative difference between `Σ_{k≤order} (−iθM)^k ψ / k!` and the exact
/// resampled action of the corresponding finite transform.
pub fn generator_exponential_check(generator: (usize, usize), theta: f64, state: &EventState, order: usize) -> Result<f64> {
    let (mu, nu) = generator;
    let lambda = generator_transform(mu, nu, theta)?;
    let psi = state.to_position_rep();
    if theta == 0.0 {
        return Ok(0.0);
    }
    let scalar = EventState::new(Rep::Position, psi.field().clone())?;
    let exact = apply_position(&PoincareElement { lorentz: lambda, translation: FourVector::ZERO, spinor_block: None }, &scalar)?;
    let op = Operator::M(mu, nu);
    let mut term = psi.field().clone();
    let mut sum = term.data().to_vec();
    let factor = C64::new(0.0, -theta);
    for k in 1..=order {
        term = op.act(&term);
        term.scale(factor / k as f64);
        sum.iter_mut().zip(term.data()).for_each(|(s, t)| *s += t);
    }
    let num: f64 = sum.iter().zip(exact.field().data()).map(|(s, e)| (s - e).norm_sqr()).sum();
    Ok((num / psi.field().sum_sqr()).sqrt())
}
