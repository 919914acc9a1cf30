//! Field files: little-endian interleaved `(re, im)` doubles in storage order,
//! next to a JSON sidecar describing the shape and what the samples mean.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constraints::{Branch, OnShellKind, OnShellState};
use crate::correspondence::QMTrajectory;
use crate::error::{Error, Result};
use crate::event::{EventState, Rep};
use crate::field::{ComplexField, C64};
use crate::grid::{AxisGrid, Grid};

pub const LAYOUT: &str = "f64 little-endian, interleaved re/im, component-major then row-major grid index";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub axes: Vec<AxisGrid>,
    /// `[components, n₀, n₁, …]`.
    pub shape: Vec<usize>,
    pub spinor: bool,
    pub layout: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rep: Option<Rep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<OnShellKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<Branch>,
}

impl Sidecar {
    pub fn for_field<const D: usize>(field: &ComplexField<D>) -> Self {
        let mut shape = vec![field.components()];
        shape.extend(field.grid().shape());
        Sidecar {
            axes: field.grid().axes.to_vec(),
            shape,
            spinor: field.is_spinor(),
            layout: LAYOUT.into(),
            rep: None,
            mass: None,
            kind: None,
            branch: None,
        }
    }
}

pub fn sidecar_path(bin: &Path) -> PathBuf {
    bin.with_extension("json")
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().ok_or_else(|| Error::Invalid(format!("{} has no file name", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn encode(data: &[C64]) -> Vec<u8> {
    data.iter().flat_map(|v| v.re.to_le_bytes().into_iter().chain(v.im.to_le_bytes())).collect()
}

pub fn decode(bytes: &[u8]) -> Result<Vec<C64>> {
    if bytes.len() % 16 != 0 {
        return Err(Error::Invalid(format!("{} bytes is not a whole number of complex samples", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            C64::new(re, im)
        })
        .collect())
}

/// Writes the binary samples to `path` and the sidecar next to it.
pub fn write_field<const D: usize>(path: &Path, field: &ComplexField<D>, sidecar: &Sidecar) -> Result<()> {
    write_atomic(path, &encode(field.data()))?;
    write_atomic(&sidecar_path(path), serde_json::to_string_pretty(sidecar)?.as_bytes())
}

pub fn read_field<const D: usize>(path: &Path) -> Result<(ComplexField<D>, Sidecar)> {
    let sidecar: Sidecar = serde_json::from_slice(&fs::read(sidecar_path(path))?)?;
    let axes: [AxisGrid; D] = sidecar.axes.clone().try_into().map_err(|v: Vec<AxisGrid>| Error::ShapeMismatch { expected: D, got: v.len() })?;
    let grid = Grid::new(axes)?;
    let components = sidecar.shape.first().copied().unwrap_or(1);
    let field = ComplexField::new(grid, components, decode(&fs::read(path)?)?)?;
    if sidecar.shape[1..] != grid.shape()[..] || sidecar.spinor != field.is_spinor() {
        return Err(Error::Invalid("sidecar shape disagrees with its axes".into()));
    }
    Ok((field, sidecar))
}

pub fn save_event_state(path: &Path, state: &EventState) -> Result<()> {
    let mut sidecar = Sidecar::for_field(state.field());
    sidecar.rep = Some(state.rep());
    sidecar.mass = state.mass_hint();
    write_field(path, state.field(), &sidecar)
}

pub fn load_event_state(path: &Path) -> Result<EventState> {
    let (field, sidecar) = read_field::<4>(path)?;
    let rep = sidecar.rep.ok_or_else(|| Error::Invalid("sidecar has no representation".into()))?;
    let state = EventState::new(rep, field)?;
    Ok(match sidecar.mass {
        Some(m) => state.with_mass_hint(m),
        None => state,
    })
}

/// Stores the momentum amplitude of an on-shell state.
pub fn save_onshell(path: &Path, state: &OnShellState) -> Result<()> {
    let mut sidecar = Sidecar::for_field(state.amplitude());
    sidecar.rep = Some(Rep::Momentum);
    sidecar.mass = Some(state.mass());
    sidecar.kind = Some(state.kind());
    sidecar.branch = match state.kind() {
        OnShellKind::KgPositive => Some(Branch::Positive),
        OnShellKind::KgNegative => Some(Branch::Negative),
        OnShellKind::Dirac => None,
    };
    write_field(path, state.amplitude(), &sidecar)
}

pub fn load_onshell(path: &Path) -> Result<OnShellState> {
    let (field, sidecar) = read_field::<3>(path)?;
    let kind = sidecar.kind.ok_or_else(|| Error::Invalid("sidecar has no on-shell kind".into()))?;
    let mass = sidecar.mass.ok_or_else(|| Error::Invalid("sidecar has no mass".into()))?;
    OnShellState::from_amplitude(kind, mass, field)
}

/// A 3D position-space field (e.g. an initial wavefunction).
pub fn load_field3(path: &Path) -> Result<crate::field::Field3> {
    Ok(read_field::<3>(path)?.0)
}

pub fn save_field3(path: &Path, field: &crate::field::Field3) -> Result<()> {
    let mut sidecar = Sidecar::for_field(field);
    sidecar.rep = Some(Rep::Position);
    write_field(path, field, &sidecar)
}

/// Field equation of a trajectory spec.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquationKind {
    Kg,
    Dirac,
}

/// Initial data and evaluation times of a trajectory, with the field files
/// given relative to the spec's own directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub mass: f64,
    pub kind: EquationKind,
    /// `positive` or `negative`; Klein-Gordon only, defaults to positive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<Branch>,
    pub times: Vec<f64>,
    pub psi0: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dpsi0_dt: Option<PathBuf>,
}

impl TrajectorySpec {
    pub fn onshell_kind(&self) -> Result<OnShellKind> {
        match (self.kind, self.branch) {
            (EquationKind::Kg, None | Some(Branch::Positive)) => Ok(OnShellKind::KgPositive),
            (EquationKind::Kg, Some(Branch::Negative)) => Ok(OnShellKind::KgNegative),
            (EquationKind::Dirac, None) => Ok(OnShellKind::Dirac),
            (kind, Some(branch)) => Err(Error::Invalid(format!("branch {branch:?} does not apply to {kind:?} trajectories"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass.is_finite() && self.mass >= 0.0) {
            return Err(Error::Invalid(format!("mass must be finite and non-negative, got {}", self.mass)));
        }
        if self.times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Invalid("times must be finite".into()));
        }
        if self.dpsi0_dt.is_some() && self.kind == EquationKind::Dirac {
            return Err(Error::Invalid("dpsi0_dt only applies to Klein-Gordon trajectories".into()));
        }
        self.onshell_kind().map(|_| ())
    }
}

/// Reads a trajectory spec and the field files it points to.
pub fn load_trajectory(path: &Path) -> Result<(TrajectorySpec, QMTrajectory)> {
    let spec: TrajectorySpec = serde_json::from_slice(&fs::read(path)?)?;
    spec.validate()?;
    let base = path.parent().unwrap_or(Path::new(""));
    let psi0 = load_field3(&base.join(&spec.psi0))?;
    let mut traj = QMTrajectory::new(spec.onshell_kind()?, spec.mass, psi0).with_times(spec.times.clone());
    if let Some(d) = &spec.dpsi0_dt {
        traj = traj.with_time_derivative(load_field3(&base.join(d))?);
    }
    Ok((spec, traj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{build_onshell_kg, gaussian_amplitude};
    use crate::event::random_packet;
    use crate::grid::Grid3D;

    #[test]
    fn byte_layout() {
        let bytes = encode(&[C64::new(1.0, -2.0)]);
        assert_eq!(bytes.len(), 16);
        assert_eq!(&bytes[..8], &1.0f64.to_le_bytes());
        assert_eq!(&bytes[8..], &(-2.0f64).to_le_bytes());
        assert!(decode(&bytes[..15]).is_err());
    }

    #[test]
    fn round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::cubic(4).unwrap();
        let s = random_packet(&g, 5, 2).unwrap().with_mass_hint(1.5);
        let path = dir.path().join("state.bin");
        save_event_state(&path, &s).unwrap();
        assert_eq!(load_event_state(&path).unwrap(), s);
        let sidecar: serde_json::Value = serde_json::from_slice(&fs::read(sidecar_path(&path)).unwrap()).unwrap();
        assert_eq!(sidecar["rep"], "position");
        assert_eq!(sidecar["shape"], serde_json::json!([1, 4, 4, 4, 4]));

        let g3: Grid3D = Grid::cubic(8).unwrap();
        let f = gaussian_amplitude(&g3, [0.1, 0.0, 0.0], [0.8; 3], [0.0; 3], &[C64::new(1.0, 0.0)]).unwrap();
        let on = build_onshell_kg(&f, 1.0, Branch::Negative).unwrap();
        let path = dir.path().join("onshell.bin");
        save_onshell(&path, &on).unwrap();
        let back = load_onshell(&path).unwrap();
        assert_eq!((back.kind(), back.mass()), (on.kind(), on.mass()));
        let d = back.amplitude().max_abs_diff(on.amplitude()).unwrap();
        assert!(d < 1e-14, "{d}");
        assert!(load_event_state(&path).is_err());
    }

    #[test]
    fn trajectory_specs() {
        let dir = tempfile::tempdir().unwrap();
        let g3: Grid3D = Grid::cubic(8).unwrap();
        let f = gaussian_amplitude(&g3, [0.0; 3], [0.8; 3], [0.0; 3], &[C64::new(1.0, 0.0)]).unwrap();
        save_field3(&dir.path().join("psi0.bin"), &f).unwrap();
        let spec = r#"{"mass": 1.0, "kind": "kg", "branch": "negative", "times": [0, 1.5], "psi0": "psi0.bin"}"#;
        fs::write(dir.path().join("traj.json"), spec).unwrap();
        let (spec, traj) = load_trajectory(&dir.path().join("traj.json")).unwrap();
        assert_eq!(traj.kind, OnShellKind::KgNegative);
        assert_eq!(traj.times, vec![0.0, 1.5]);
        assert_eq!(traj.psi0, f);
        assert_eq!(spec.kind, EquationKind::Kg);

        let bad = r#"{"mass": 1.0, "kind": "dirac", "branch": "positive", "times": [], "psi0": "psi0.bin"}"#;
        fs::write(dir.path().join("bad.json"), bad).unwrap();
        assert!(load_trajectory(&dir.path().join("bad.json")).is_err());
        let unknown = r#"{"mass": 1.0, "kind": "kg", "times": [], "psi0": "psi0.bin", "extra": 1}"#;
        fs::write(dir.path().join("unknown.json"), unknown).unwrap();
        assert!(load_trajectory(&dir.path().join("unknown.json")).is_err());
    }
}
