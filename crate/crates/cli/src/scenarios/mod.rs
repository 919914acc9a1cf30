//! One module per command. Each section records its checks and series on a
//! [`Recorder`]; nothing here decides exit codes.

use geb_core::{ComplexField, Field3, Grid3D, C64};

use crate::config::{Command, Settings};
use crate::report::Recorder;

mod algebra;
mod boost;
mod constraint;
mod correspondence;
pub mod evolve;
mod multievent;
mod uncertainty;

pub fn run(settings: &Settings, rec: &mut Recorder) {
    match settings.command {
        Command::AlgebraCheck => algebra::run(settings, rec),
        Command::Uncertainty => uncertainty::run(settings, rec),
        Command::BoostDemo => boost::run(settings, rec),
        Command::ConstraintResidual => constraint::run(settings, rec),
        Command::Correspondence => correspondence::run(settings, rec),
        Command::Multievent => multievent::run(settings, rec),
        Command::Evolve => unreachable!("evolve needs a trajectory and runs through evolve::run"),
    }
}

/// Unit-normalized Gaussian `exp(−|x − c|²/(2w²)) e^{ik·x}` with constant
/// spinor weights.
pub(crate) fn packet3(g: &Grid3D, center: [f64; 3], carrier: [f64; 3], width: f64, spin: &[C64]) -> anyhow::Result<Field3> {
    let f = ComplexField::from_fn(*g, spin.len(), |c, idx| {
        let x = g.position(&idx);
        let r2: f64 = (0..3).map(|d| (x[d] - center[d]).powi(2)).sum();
        let phase: f64 = (0..3).map(|d| carrier[d] * x[d]).sum();
        spin[c] * C64::from_polar((-r2 / (2.0 * width * width)).exp(), phase)
    })?;
    let n = l2_norm3(&f);
    Ok(f.scaled(1.0 / n))
}

pub(crate) fn l2_norm3(f: &Field3) -> f64 {
    (f.sum_sqr() * f.grid().cell_volume()).sqrt()
}

pub(crate) fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::NAN;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
