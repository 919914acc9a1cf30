use geb_core::constraints::OnShellKind;
use geb_core::correspondence::{
    boost_two_path, dirac_evolve, kg_current, lift_qm_to_geb, schrodinger_evolve, schrodinger_evolve_negative, QMTrajectory,
};
use geb_core::{AxisGrid, Field3, Grid, Grid3D, C64};
use serde::Serialize;

use super::{c, l2_norm3, packet3};
use crate::config::Settings;
use crate::report::{Check, Recorder};

#[derive(Serialize)]
struct SliceRow {
    kind: &'static str,
    t: f64,
    oracle_difference: f64,
    norm: f64,
}

#[derive(Serialize)]
struct CurrentRow {
    kind: &'static str,
    t: f64,
    max_divergence: f64,
    scale: f64,
}

#[derive(Serialize)]
struct BoostRow {
    kind: &'static str,
    v: f64,
    max_difference: f64,
    leakage: f64,
    boosted_onshell_residual: f64,
}

const CURRENT_GRID: usize = 32;
const CURRENT_TIMES: [f64; 2] = [0.0, 2.0];

/// Long along the boost axis so the tilted slice keeps its preimage in the box.
fn boost_grid() -> geb_core::Result<Grid3D> {
    Grid::new([AxisGrid::new(256, 0.22, 0.0)?, AxisGrid::new(16, 0.63, 0.0)?, AxisGrid::new(16, 0.63, 0.0)?])
}

fn spin() -> [C64; 4] {
    [c(0.6, 0.0), c(0.0, 0.3), c(0.2, -0.1), c(0.0, 0.0)]
}

fn kinds(s: &Settings) -> Vec<(&'static str, OnShellKind)> {
    let mut out = Vec::new();
    if s.kind.kg() {
        out.push(("kg+", OnShellKind::KgPositive));
        out.push(("kg-", OnShellKind::KgNegative));
    }
    if s.kind.dirac() {
        out.push(("dirac", OnShellKind::Dirac));
    }
    out
}

fn oracle(kind: OnShellKind, psi: &Field3, m: f64, t: f64) -> geb_core::Result<Field3> {
    match kind {
        OnShellKind::KgPositive => Ok(schrodinger_evolve(psi, m, t)),
        OnShellKind::KgNegative => Ok(schrodinger_evolve_negative(psi, m, t)),
        OnShellKind::Dirac => dirac_evolve(psi, m, t),
    }
}

pub fn run(s: &Settings, rec: &mut Recorder) {
    let m = s.mass;
    if s.runs("slices") {
        rec.section("slices", |rec| {
            let g: Grid3D = s.grid.grid()?;
            let mut rows = Vec::new();
            for (name, kind) in kinds(s) {
                let psi = match kind {
                    OnShellKind::Dirac => packet3(&g, [0.0, 0.2, -0.4], [0.0, 0.3, 0.0], 1.2, &spin())?,
                    _ => packet3(&g, [0.5, -0.3, 0.0], [0.4, 0.0, -0.2], 1.0, &[c(1.0, 0.0)])?,
                };
                let traj = QMTrajectory::new(kind, m, psi.clone()).with_times(s.times.clone());
                let state = lift_qm_to_geb(&traj)?;
                let round_trip = state.slice(0.0).max_abs_diff(&psi)?;
                rec.check(Check::max(format!("lift_round_trip/{name}"), round_trip, s.tol("lift_round_trip")));
                let (mut diff, mut drift) = (0.0f64, 0.0f64);
                for (t, slice) in traj.slices()? {
                    let d = slice.max_abs_diff(&oracle(kind, &psi, m, t)?)?;
                    let n = l2_norm3(&slice);
                    diff = diff.max(d);
                    drift = drift.max((n - 1.0).abs());
                    rows.push(SliceRow { kind: name, t, oracle_difference: d, norm: n });
                }
                rec.check(Check::max(format!("slice_oracle/{name}"), diff, s.tol("slice_oracle")));
                rec.check(Check::max(format!("slice_norm/{name}"), drift, s.tol("slice_norm")));
            }
            rec.series("slices", &rows)
        });
    }
    if s.runs("current") && s.kind.kg() {
        rec.section("current", |rec| {
            let g: Grid3D = Grid::cubic(CURRENT_GRID)?;
            let psi = packet3(&g, [0.2, 0.0, -0.3], [0.5, -0.2, 0.0], 1.0, &[c(1.0, 0.0)])?;
            let mut rows = Vec::new();
            for (name, kind) in [("kg+", OnShellKind::KgPositive), ("kg-", OnShellKind::KgNegative)] {
                let state = lift_qm_to_geb(&QMTrajectory::new(kind, m, psi.clone()))?;
                let mut worst = 0.0f64;
                for t in CURRENT_TIMES {
                    let j = kg_current(&state, t)?;
                    worst = worst.max(j.relative_divergence());
                    rows.push(CurrentRow { kind: name, t, max_divergence: j.max_divergence, scale: j.scale });
                }
                rec.check(Check::max(format!("current_divergence/{name}"), worst, s.tol("current")));
            }
            rec.series("current", &rows)
        });
    }
    if s.runs("boost") {
        rec.section("boost", |rec| {
            let g = boost_grid()?;
            let mut rows = Vec::new();
            let mut cases = Vec::new();
            if s.kind.kg() {
                cases.push(("kg+", QMTrajectory::new(OnShellKind::KgPositive, m, packet3(&g, [0.0; 3], [0.0; 3], 1.0, &[c(1.0, 0.0)])?)));
            }
            if s.kind.dirac() {
                cases.push(("dirac", QMTrajectory::new(OnShellKind::Dirac, m, packet3(&g, [0.0; 3], [0.2, 0.0, 0.0], 1.0, &spin())?)));
            }
            for (name, traj) in cases {
                let state = lift_qm_to_geb(&traj)?;
                for &v in &s.velocities {
                    let cmp = boost_two_path(&state, 1, v, 0.0)?;
                    let boosted = state.onshell_boost(1, v)?.onshell_residual();
                    rec.check(Check::max(format!("two_path/{name}/v={v}"), cmp.max_difference, s.tol("two_path")));
                    rec.check(Check::max(format!("leakage/{name}/v={v}"), cmp.leakage, s.tol("leakage")));
                    rec.check(Check::max(format!("boosted_onshell/{name}/v={v}"), boosted, s.tol("boosted_residual")));
                    rows.push(BoostRow { kind: name, v, max_difference: cmp.max_difference, leakage: cmp.leakage, boosted_onshell_residual: boosted });
                }
            }
            rec.series("two_path_boost", &rows)
        });
    }
}
