use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use geb_cli::config::{read_config, Command, Kind, ScenarioConfig};
use geb_cli::{run_command, run_evolve, run_suite, EXIT_CONFIG, EXIT_FAIL, EXIT_PASS};

#[derive(Parser)]
#[command(name = "geb", version, about = "Verification suites for event-based relativistic quantum mechanics")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON scenario config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: geb-out].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Multiplies every tolerance.
    #[arg(long)]
    tolerance_scale: Option<f64>,
    /// Run only these sections (repeatable).
    #[arg(long = "section")]
    sections: Vec<String>,
}

#[derive(Subcommand)]
enum Sub {
    /// Canonical and Poincaré commutators on a Gaussian event packet.
    AlgebraCheck(Common),
    /// ΔX^μ ΔP^μ for a Gaussian width sweep and random packets.
    Uncertainty(Common),
    /// Scalar products, moments and the group law under Poincaré transforms.
    BoostDemo(Common),
    /// Klein-Gordon and Dirac constraint residuals, Dirac eigensystem oracle.
    ConstraintResidual(Common),
    /// Lift, slice and evolve equivalence; current conservation; boosts.
    Correspondence {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        kind: Option<Kind>,
        /// Single boost velocity instead of the configured list.
        #[arg(long = "v", allow_negative_numbers = true)]
        v: Option<f64>,
    },
    /// Kernel intersections, exchange symmetry and occupation-number states.
    Multievent(Common),
    /// Slices a trajectory spec and writes one field file per time.
    Evolve {
        #[command(flatten)]
        common: Common,
        /// Trajectory spec: {mass, kind, branch, times, psi0}.
        #[arg(long)]
        trajectory: PathBuf,
    },
    /// Every command in turn with its default settings.
    Suite(Common),
}

fn merge(common: &Common) -> Result<ScenarioConfig, geb_cli::config::Diagnostics> {
    let mut cfg = match &common.config {
        Some(path) => read_config(path)?,
        None => ScenarioConfig::default(),
    };
    if common.out.is_some() {
        cfg.out = common.out.clone();
    }
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    if common.tolerance_scale.is_some() {
        cfg.tolerance_scale = common.tolerance_scale;
    }
    if !common.sections.is_empty() {
        cfg.sections = Some(common.sections.clone());
    }
    Ok(cfg)
}

fn out_dir(cfg: &ScenarioConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from("geb-out"))
}

fn config_error(d: impl std::fmt::Display) -> ExitCode {
    eprintln!("{d}");
    ExitCode::from(EXIT_CONFIG)
}

fn finish(result: anyhow::Result<bool>) -> ExitCode {
    match result {
        Ok(true) => ExitCode::from(EXIT_PASS),
        Ok(false) => {
            eprintln!("geb: some checks failed, see the report");
            ExitCode::from(EXIT_FAIL)
        }
        Err(e) => {
            eprintln!("geb: {e:#}");
            ExitCode::from(EXIT_FAIL)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match &cli.command {
        Sub::AlgebraCheck(c) => (Command::AlgebraCheck, c),
        Sub::Uncertainty(c) => (Command::Uncertainty, c),
        Sub::BoostDemo(c) => (Command::BoostDemo, c),
        Sub::ConstraintResidual(c) => (Command::ConstraintResidual, c),
        Sub::Correspondence { common, .. } => (Command::Correspondence, common),
        Sub::Multievent(c) => (Command::Multievent, c),
        Sub::Evolve { common, .. } => (Command::Evolve, common),
        Sub::Suite(common) => {
            let cfg = match merge(common) {
                Ok(cfg) => cfg,
                Err(d) => return config_error(d),
            };
            if let Err(d) = cfg.check_suite() {
                return config_error(d);
            }
            return finish(run_suite(&cfg, &out_dir(&cfg)));
        }
    };
    let mut cfg = match merge(common) {
        Ok(cfg) => cfg,
        Err(d) => return config_error(d),
    };
    if let Sub::Correspondence { kind, v, .. } = &cli.command {
        if kind.is_some() {
            cfg.kind = *kind;
        }
        if let Some(v) = v {
            cfg.velocities = Some(vec![*v]);
        }
    }
    let settings = match cfg.resolve(command) {
        Ok(s) => s,
        Err(d) => return config_error(d),
    };
    let out = out_dir(&cfg);
    let result = match &cli.command {
        Sub::Evolve { trajectory, .. } => run_evolve(&settings, trajectory, &out),
        _ => run_command(&settings, &out),
    };
    finish(result.map(|r| r.pass))
}
