use geb_core::constraints::{
    build_onshell_dirac, build_onshell_kg, gaussian_amplitude, kg_residual, negative_energy_weight, Branch,
};
use geb_core::dirac::oracle_comparison;
use geb_core::event::{gaussian_packet, random_packet};
use geb_core::{FourVector, Grid, Grid3D, Grid4D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{c, packet3};
use crate::config::Settings;
use crate::report::{Check, Recorder};

#[derive(Serialize)]
struct ResidualRow {
    state: String,
    onshell_residual: f64,
    equation_residual: f64,
}

#[derive(Serialize)]
struct PenaltyRow {
    carrier_p0: f64,
    negative_weight: f64,
    residual: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct OracleRow {
    sample: usize,
    p0: f64,
    p1: f64,
    p2: f64,
    p3: f64,
    eigenvalue_error: f64,
    eigenvector_residual: f64,
    projector_error: f64,
    unitarity_error: f64,
}

#[derive(Serialize)]
struct OrderingRow {
    seed: u64,
    plain: f64,
    squared: f64,
}

const PENALTY_GRID: usize = 16;
const ORDERING_GRID: usize = 8;
const ORDERING_STATES: u64 = 20;
/// The `−m²` penalty has to show up at this fraction at least.
const PENALTY_FRACTION: f64 = 0.9;

pub fn run(s: &Settings, rec: &mut Recorder) {
    let m = s.mass;
    if s.runs("onshell") {
        rec.section("onshell", |rec| {
            let g: Grid3D = s.grid.grid()?;
            let f = packet3(&g, [0.0; 3], [0.3, -0.2, 0.0], 1.0, &[c(1.0, 0.0)])?;
            let mut rows = Vec::new();
            let t = 0.8;
            for (name, branch) in [("kg+", Branch::Positive), ("kg-", Branch::Negative)] {
                let st = build_onshell_kg(&f, m, branch)?;
                rows.push(ResidualRow { state: name.into(), onshell_residual: st.onshell_residual(), equation_residual: st.equation_residual(t) });
            }
            let w = [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)];
            let alpha = gaussian_amplitude(&g, [0.2, 0.0, 0.1], [0.8; 3], [0.0; 3], &w)?;
            let st = build_onshell_dirac(&alpha, m)?;
            rows.push(ResidualRow { state: "dirac".into(), onshell_residual: st.onshell_residual(), equation_residual: st.equation_residual(t) });
            for r in &rows {
                rec.check(Check::max(format!("onshell/{}", r.state), r.onshell_residual, s.tol("onshell_residual")));
                rec.check(Check::max(format!("equation/{}", r.state), r.equation_residual, s.tol("onshell_residual")));
            }
            rec.series("onshell_residuals", &rows)
        });
    }
    if s.runs("penalty") {
        rec.section("penalty", |rec| {
            let g: Grid4D = Grid::cubic(PENALTY_GRID)?;
            let mut rows = Vec::new();
            for p0 in [-1.5, -0.5, 0.0] {
                let st = gaussian_packet(&g, FourVector::ZERO, [1.5; 4], FourVector::new(p0, 0.2, 0.0, 0.0), None)?.to_momentum_rep();
                let w = negative_energy_weight(&st)?;
                let r = kg_residual(&st, m, Branch::Positive, false)?;
                let ratio = r / (m * m * w);
                rec.check(Check::min(format!("penalty/p0={p0}"), ratio, PENALTY_FRACTION).with_note(format!("negative-energy weight {w:.6}")));
                rows.push(PenaltyRow { carrier_p0: p0, negative_weight: w, residual: r, ratio });
            }
            rec.series("penalty", &rows)
        });
    }
    if s.runs("dirac-oracle") {
        rec.section("dirac-oracle", |rec| {
            let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
            let mut rows = Vec::new();
            let (mut eig, mut unit) = (0.0f64, 0.0f64);
            for sample in 0..s.samples {
                let p = FourVector::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
                let o = oracle_comparison(&p, m);
                eig = eig.max(o.eigenvalue_error).max(o.eigenvector_residual).max(o.projector_error);
                unit = unit.max(o.unitarity_error);
                rows.push(OracleRow {
                    sample,
                    p0: p[0],
                    p1: p[1],
                    p2: p[2],
                    p3: p[3],
                    eigenvalue_error: o.eigenvalue_error,
                    eigenvector_residual: o.eigenvector_residual,
                    projector_error: o.projector_error,
                    unitarity_error: o.unitarity_error,
                });
            }
            let note = format!("{} random four-momenta", s.samples);
            rec.check(Check::max("dirac-oracle/eigensystem", eig, s.tol("dirac_eigen")).with_note(note.clone()));
            rec.check(Check::max("dirac-oracle/unitarity", unit, s.tol("dirac_unitarity")).with_note(note));
            rec.series("dirac_oracle", &rows)
        });
    }
    if s.runs("ordering") {
        rec.section("ordering", |rec| {
            let g: Grid4D = Grid::cubic(ORDERING_GRID)?;
            let mut rows = Vec::new();
            let mut worst = 0.0f64;
            for k in 0..ORDERING_STATES {
                let seed = s.seed.wrapping_add(k);
                let st = random_packet(&g, seed, 2)?.to_momentum_rep();
                let plain = kg_residual(&st, m, Branch::Positive, false)?;
                let squared = kg_residual(&st, m, Branch::Positive, true)?;
                worst = worst.max(plain * plain / squared);
                rows.push(OrderingRow { seed, plain, squared });
            }
            // ‖Kψ‖² ≤ ‖K²ψ‖ for unit ψ
            rec.check(Check::max("ordering/plain_squared_over_squared", worst, 1.0 + 1e-12));
            rec.series("residual_ordering", &rows)
        });
    }
}
