use geb_core::event::{gaussian_packet, EventState};
use geb_core::poincare::{commutator_checks, Operator};
use geb_core::{FourVector, Grid4D};
use serde::Serialize;

use crate::config::Settings;
use crate::report::{Check, Recorder};

#[derive(Serialize)]
struct Row {
    a: String,
    b: String,
    residual: f64,
}

const GENERATORS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

pub fn run(s: &Settings, rec: &mut Recorder) {
    let mut rows = Vec::new();
    let tol = s.tol("commutator");
    let state = |s: &Settings| -> anyhow::Result<_> {
        let g: Grid4D = s.grid.grid()?;
        Ok(gaussian_packet(&g, FourVector::new(0.2, -0.1, 0.3, 0.0), [1.0; 4], FourVector::new(0.1, 0.2, 0.0, -0.1), None)?)
    };
    let record = |rec: &mut Recorder, rows: &mut Vec<Row>, pairs: &[(Operator, Operator)], psi: &EventState| -> anyhow::Result<()> {
        for (&(a, b), r) in pairs.iter().zip(commutator_checks(pairs, psi)?) {
            rec.check(Check::max(format!("[{a},{b}]"), r, tol));
            rows.push(Row { a: a.to_string(), b: b.to_string(), residual: r });
        }
        Ok(())
    };
    if s.runs("canonical") {
        rec.section("canonical", |rec| {
            let mut pairs = Vec::new();
            for mu in 0..4 {
                for nu in 0..4 {
                    pairs.push((Operator::X(mu), Operator::P(nu)));
                }
            }
            for mu in 0..4 {
                for nu in mu + 1..4 {
                    pairs.push((Operator::X(mu), Operator::X(nu)));
                    pairs.push((Operator::P(mu), Operator::P(nu)));
                }
            }
            record(rec, &mut rows, &pairs, &state(s)?)
        });
    }
    if s.runs("poincare") {
        rec.section("poincare", |rec| {
            let mut pairs = Vec::new();
            for (i, &(mu, nu)) in GENERATORS.iter().enumerate() {
                let m = Operator::M(mu, nu);
                for rho in 0..4 {
                    pairs.push((m, Operator::P(rho)));
                    pairs.push((m, Operator::X(rho)));
                }
                for &(rho, sigma) in &GENERATORS[i + 1..] {
                    pairs.push((m, Operator::M(rho, sigma)));
                }
            }
            record(rec, &mut rows, &pairs, &state(s)?)
        });
    }
    if let Err(e) = rec.series("commutators", &rows) {
        rec.check(Check::exact("series/commutators", false).with_note(format!("{e:#}")));
    }
}
