//! Scenario configuration: JSON file, command-line overrides, validation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    AlgebraCheck,
    Uncertainty,
    BoostDemo,
    ConstraintResidual,
    Correspondence,
    Multievent,
    /// Slices a user-supplied trajectory; not part of the suite.
    Evolve,
}

impl Command {
    /// The commands `suite` runs.
    pub const ALL: [Command; 6] = [
        Command::AlgebraCheck,
        Command::Uncertainty,
        Command::BoostDemo,
        Command::ConstraintResidual,
        Command::Correspondence,
        Command::Multievent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::AlgebraCheck => "algebra-check",
            Command::Uncertainty => "uncertainty",
            Command::BoostDemo => "boost-demo",
            Command::ConstraintResidual => "constraint-residual",
            Command::Correspondence => "correspondence",
            Command::Multievent => "multievent",
            Command::Evolve => "evolve",
        }
    }

    /// Tolerance families and their defaults.
    pub fn tolerances(self) -> &'static [(&'static str, f64)] {
        match self {
            Command::AlgebraCheck => &[("commutator", 1e-6)],
            Command::Uncertainty => &[("gaussian_product", 1e-4), ("random_product_slack", 1e-6)],
            Command::BoostDemo => &[
                ("scalar_product", 1e-6),
                ("norm", 1e-6),
                ("moments", 1e-5),
                ("group_law", 2e-6),
                ("generator_series", 1e-5),
                ("spinor_covariance", 1e-10),
            ],
            Command::ConstraintResidual => &[
                ("onshell_residual", 1e-6),
                ("dirac_eigen", 1e-10),
                ("dirac_unitarity", 1e-12),
            ],
            Command::Correspondence => &[
                ("slice_oracle", 1e-10),
                ("slice_norm", 1e-10),
                ("lift_round_trip", 1e-10),
                ("current", 1e-6),
                ("two_path", 1e-4),
                ("leakage", 1e-8),
                ("boosted_residual", 1e-6),
            ],
            Command::Multievent => &[
                ("projector", 1e-12),
                ("kernel_projector", 1e-9),
                ("constraint", 1e-12),
                ("fock", 1e-12),
                ("evolution", 1e-10),
                ("boost", 1e-8),
                ("factorization", 1e-10),
            ],
            Command::Evolve => &[("slice_oracle", 1e-10), ("slice_norm", 1e-10)],
        }
    }

    /// Parts of the command that can be run on their own.
    pub fn sections(self) -> &'static [&'static str] {
        match self {
            Command::AlgebraCheck => &["canonical", "poincare"],
            Command::Uncertainty => &["gaussian", "random"],
            Command::BoostDemo => &["transforms", "group", "generators", "spinors"],
            Command::ConstraintResidual => &["onshell", "penalty", "dirac-oracle", "ordering"],
            Command::Correspondence => &["slices", "current", "boost"],
            Command::Multievent => &["kernels", "symmetry", "fock", "dynamics"],
            Command::Evolve => &["slices"],
        }
    }

    /// Primary grid when the config leaves it out.
    pub fn default_grid(self) -> GridSpec {
        match self {
            Command::AlgebraCheck | Command::Uncertainty | Command::BoostDemo | Command::ConstraintResidual => GridSpec { n: 32, delta: None },
            Command::Correspondence | Command::Evolve => GridSpec { n: 64, delta: None },
            Command::Multievent => GridSpec { n: 32, delta: Some(0.5) },
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which equations `correspondence` exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Kg,
    Dirac,
    All,
}

impl Kind {
    pub fn kg(self) -> bool {
        matches!(self, Kind::Kg | Kind::All)
    }

    pub fn dirac(self) -> bool {
        matches!(self, Kind::Dirac | Kind::All)
    }
}

/// A cubic grid of `n` points per axis; `delta` defaults to the balanced
/// spacing `√(2π/n)` with equal position and momentum extent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

impl GridSpec {
    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or_else(|| (std::f64::consts::TAU / self.n as f64).sqrt())
    }

    pub fn grid<const D: usize>(&self) -> geb_core::Result<geb_core::Grid<D>> {
        geb_core::Grid::uniform(self.n, self.delta())
    }
}

/// Contents of a `--config` file. Every field is optional; flags given on
/// the command line take precedence.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocities: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<Kind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sections: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
}

/// Problems found in a config, reported together.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Diagnostics(pub Vec<String>);

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "config: {d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for Diagnostics {}

pub fn read_config(path: &Path) -> Result<ScenarioConfig, Diagnostics> {
    let text = std::fs::read_to_string(path).map_err(|e| Diagnostics(vec![format!("{}: {e}", path.display())]))?;
    serde_json::from_str(&text).map_err(|e| Diagnostics(vec![format!("{}: {e}", path.display())]))
}

/// Fully resolved settings for one command.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Settings {
    pub command: Command,
    pub seed: u64,
    pub tolerance_scale: f64,
    pub mass: f64,
    pub grid: GridSpec,
    pub velocities: Vec<f64>,
    pub kind: Kind,
    pub samples: usize,
    pub times: Vec<f64>,
    pub sections: Vec<String>,
    /// Unscaled tolerances, every family present.
    pub tolerances: BTreeMap<String, f64>,
}

impl Settings {
    /// Tolerance of a family after `tolerance_scale`.
    pub fn tol(&self, family: &str) -> f64 {
        self.tolerances[family] * self.tolerance_scale
    }

    pub fn runs(&self, section: &str) -> bool {
        self.sections.iter().any(|s| s == section)
    }
}

pub const DEFAULT_SEED: u64 = 20_240_917;

impl ScenarioConfig {
    /// Checks the config against `command` and fills in defaults.
    pub fn resolve(&self, command: Command) -> Result<Settings, Diagnostics> {
        let mut d = Vec::new();
        if let Some(c) = self.command {
            if c != command {
                d.push(format!("config is for `{c}` but `{command}` was run"));
            }
        }
        let tolerance_scale = self.tolerance_scale.unwrap_or(1.0);
        if !(tolerance_scale.is_finite() && tolerance_scale > 0.0) {
            d.push(format!("tolerance_scale must be a positive number, got {tolerance_scale}"));
        }
        let mass = self.mass.unwrap_or(1.0);
        if !(mass.is_finite() && mass > 0.0) {
            d.push(format!("mass must be positive, got {mass}"));
        }
        let grid = self.grid.unwrap_or(command.default_grid());
        if !grid.n.is_power_of_two() || grid.n < 8 || grid.n > 128 {
            d.push(format!("grid.n must be a power of two between 8 and 128, got {}", grid.n));
        }
        if let Some(delta) = grid.delta {
            if !(delta.is_finite() && delta > 0.0) {
                d.push(format!("grid.delta must be positive, got {delta}"));
            }
        }
        let velocities = self.velocities.clone().unwrap_or_else(|| vec![0.2, 0.4, 0.6]);
        if velocities.is_empty() {
            d.push("velocities must not be empty".into());
        }
        for v in &velocities {
            if !(v.is_finite() && v.abs() < 1.0) {
                d.push(format!("velocity {v} is not below the speed of light"));
            }
        }
        let samples = self.samples.unwrap_or(200);
        if samples == 0 || samples > 100_000 {
            d.push(format!("samples must be between 1 and 100000, got {samples}"));
        }
        let times = self.times.clone().unwrap_or_else(|| vec![0.0, 0.5, 1.0, 5.0]);
        if times.is_empty() || times.iter().any(|t| !t.is_finite()) {
            d.push("times must be a non-empty list of finite numbers".into());
        }
        let known = command.sections();
        let sections = match &self.sections {
            None => known.iter().map(|s| s.to_string()).collect(),
            Some(list) => {
                for s in list {
                    if !known.contains(&s.as_str()) {
                        d.push(format!("unknown section `{s}` for `{command}`; expected one of {}", known.join(", ")));
                    }
                }
                if list.is_empty() {
                    d.push("sections must not be empty".into());
                }
                list.clone()
            }
        };
        let mut tolerances: BTreeMap<String, f64> = command.tolerances().iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (k, v) in &self.tolerances {
            match tolerances.get_mut(k) {
                None => d.push(format!(
                    "unknown tolerance `{k}` for `{command}`; expected one of {}",
                    command.tolerances().iter().map(|t| t.0).collect::<Vec<_>>().join(", ")
                )),
                Some(slot) => {
                    if !(v.is_finite() && *v > 0.0) {
                        d.push(format!("tolerance `{k}` must be positive, got {v}"));
                    }
                    *slot = *v;
                }
            }
        }
        if !d.is_empty() {
            return Err(Diagnostics(d));
        }
        Ok(Settings {
            command,
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            tolerance_scale,
            mass,
            grid,
            velocities,
            kind: self.kind.unwrap_or(Kind::All),
            samples,
            times,
            sections,
            tolerances,
        })
    }

    /// The config a suite run hands to each command: command-specific
    /// fields are dropped, tolerances are passed to the commands that know
    /// them.
    pub fn for_suite(&self, command: Command) -> ScenarioConfig {
        let families: Vec<&str> = command.tolerances().iter().map(|t| t.0).collect();
        ScenarioConfig {
            command: None,
            seed: self.seed,
            tolerance_scale: self.tolerance_scale,
            out: None,
            mass: self.mass,
            tolerances: self.tolerances.iter().filter(|(k, _)| families.contains(&k.as_str())).map(|(k, v)| (k.clone(), *v)).collect(),
            ..ScenarioConfig::default()
        }
    }

    /// Suite configs may only carry settings shared by every command.
    pub fn check_suite(&self) -> Result<(), Diagnostics> {
        let mut d = Vec::new();
        if self.command.is_some() {
            d.push("a suite config must not name a command".into());
        }
        let only_one = [
            ("grid", self.grid.is_some()),
            ("velocities", self.velocities.is_some()),
            ("kind", self.kind.is_some()),
            ("samples", self.samples.is_some()),
            ("times", self.times.is_some()),
            ("sections", self.sections.is_some()),
        ];
        for (name, set) in only_one {
            if set {
                d.push(format!("`{name}` is per command and not accepted by `suite`"));
            }
        }
        for k in self.tolerances.keys() {
            if !Command::ALL.iter().any(|c| c.tolerances().iter().any(|t| t.0 == k)) {
                d.push(format!("unknown tolerance `{k}`"));
            }
        }
        if d.is_empty() {
            Ok(())
        } else {
            Err(Diagnostics(d))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let s = ScenarioConfig::default().resolve(Command::Correspondence).unwrap();
        assert_eq!(s.grid.n, 64);
        assert_eq!(s.sections, vec!["slices", "current", "boost"]);
        assert_eq!(s.tol("two_path"), 1e-4);
        assert_eq!(s.kind, Kind::All);
    }

    #[test]
    fn diagnostics_are_collected() {
        let cfg: ScenarioConfig = serde_json::from_str(
            r#"{"command": "uncertainty", "velocities": [1.2], "tolerances": {"gaussian_product": -1, "bogus": 1}, "grid": {"n": 12}}"#,
        )
        .unwrap();
        let d = cfg.resolve(Command::AlgebraCheck).unwrap_err();
        assert_eq!(d.0.len(), 5, "{d}");
        assert!(d.to_string().lines().all(|l| l.starts_with("config: ")));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<ScenarioConfig>(r#"{"sead": 3}"#).is_err());
        assert!(serde_json::from_str::<ScenarioConfig>(r#"{"grid": {"n": 8, "spacing": 1}}"#).is_err());
    }

    #[test]
    fn scale_applies_to_every_family() {
        let cfg = ScenarioConfig { tolerance_scale: Some(10.0), ..Default::default() };
        let s = cfg.resolve(Command::AlgebraCheck).unwrap();
        assert!((s.tol("commutator") - 1e-5).abs() < 1e-20);
    }

    #[test]
    fn suite_configs_stay_generic() {
        let mut cfg = ScenarioConfig { seed: Some(4), ..Default::default() };
        cfg.tolerances.insert("two_path".into(), 1e-3);
        cfg.check_suite().unwrap();
        assert!(cfg.for_suite(Command::AlgebraCheck).tolerances.is_empty());
        assert_eq!(cfg.for_suite(Command::Correspondence).tolerances["two_path"], 1e-3);
        cfg.kind = Some(Kind::Dirac);
        assert!(cfg.check_suite().is_err());
    }
}
