//! Slices a trajectory given as a spec file and writes each slice as a
//! field file.

use std::path::Path;

use geb_core::constraints::OnShellKind;
use geb_core::correspondence::{dirac_evolve, lift_qm_to_geb, schrodinger_evolve, schrodinger_evolve_negative};
use geb_core::io::{load_trajectory, save_field3};
use serde::Serialize;

use super::l2_norm3;
use crate::config::Settings;
use crate::report::{Check, Recorder};

#[derive(Serialize)]
struct Row {
    t: f64,
    norm: f64,
    oracle_difference: f64,
    equation_residual: f64,
    file: String,
}

pub fn run(s: &Settings, trajectory: &Path, rec: &mut Recorder) {
    rec.section("slices", |rec| {
        let (spec, traj) = load_trajectory(trajectory)?;
        let state = lift_qm_to_geb(&traj)?;
        let mut rows = Vec::new();
        let (mut diff, mut drift) = (0.0f64, 0.0f64);
        // the lift normalizes, so the oracle starts from the normalized data too
        let start = l2_norm3(&traj.psi0);
        let psi0 = traj.psi0.clone().scaled(1.0 / start);
        for (k, &t) in spec.times.iter().enumerate() {
            let slice = state.slice(t);
            let oracle = match traj.kind {
                OnShellKind::KgPositive => schrodinger_evolve(&psi0, traj.mass, t),
                OnShellKind::KgNegative => schrodinger_evolve_negative(&psi0, traj.mass, t),
                OnShellKind::Dirac => dirac_evolve(&psi0, traj.mass, t)?,
            };
            let d = slice.max_abs_diff(&oracle)?;
            let n = l2_norm3(&slice);
            diff = diff.max(d);
            drift = drift.max((n - 1.0).abs());
            let file = format!("slice_{k:04}.bin");
            save_field3(&rec.dir().join(&file), &slice)?;
            rows.push(Row { t, norm: n, oracle_difference: d, equation_residual: state.equation_residual(t), file });
        }
        let oracle = Check::max("slice_oracle", diff, s.tol("slice_oracle"));
        rec.check(if (start - 1.0).abs() > 1e-12 { oracle.with_note(format!("initial data rescaled from norm {start}")) } else { oracle });
        rec.check(Check::max("slice_norm", drift, s.tol("slice_norm")));
        rec.series("trajectory", &rows)
    });
}
