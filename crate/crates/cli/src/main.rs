//! `qgyro`: experiments on a spin-l reference frame that measures a stream
//! of spin-1/2 particles.
//!
//! Exit codes: 0 success, 2 validation failure, 3 numerical-tolerance or
//! integrity failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qgyro_cli::config::{
    ExperimentConfig, ExperimentKind, ExperimentSection, GeometrySection, TwiceEll,
};
use qgyro_cli::{experiments, manifest, resolve_out_dir, sweep, CliError};

#[derive(Parser)]
#[command(name = "qgyro", version, about = "Spin reference-frame back-action laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Iterate the exact channel and record the reference direction.
    Evolve(RunArgs),
    /// Asymptotic polarization vs source polarization (one curve per size).
    ThermalCurve(RunArgs),
    /// Inverse spectral gap vs reference size with the drift estimate.
    GapSweep(RunArgs),
    /// Antiparallel hitting-time sums and the epsilon-relaxed variant.
    HittingTime(RunArgs),
    /// Exact vs semiclassical angle trajectories across sizes.
    TrajectoryCompare(RunArgs),
    /// Induced POVM and figure of merit of one reference state.
    PovmReport(RunArgs),
    /// Run several configs concurrently and aggregate a manifest.
    Sweep(SweepArgs),
    /// Verify the checksums stored in a run manifest.
    SelfCheck(SelfCheckArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: config, then $QGYRO_OUT_DIR, then ./qgyro-out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized initial states.
    #[arg(long)]
    seed: Option<u64>,
    /// Reference sizes as 2l values, comma separated.
    #[arg(long, value_delimiter = ',')]
    twice_ell: Option<Vec<u32>>,
    /// Source polarization <S_z>.
    #[arg(long)]
    s_z: Option<f64>,
    /// Several polarizations (gap sweeps), comma separated.
    #[arg(long, value_delimiter = ',')]
    s_z_list: Option<Vec<f64>>,
    /// Number of channel applications.
    #[arg(long)]
    steps: Option<usize>,
    /// Steps per unit of l (alternative to --steps).
    #[arg(long)]
    steps_per_ell: Option<usize>,
    /// Sample count for curves.
    #[arg(long)]
    n_points: Option<usize>,
    /// Relaxation parameter for the epsilon hitting time.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Initial polar angle of the reference (radians).
    #[arg(long)]
    theta0: Option<f64>,
    /// Initial azimuth of the reference (radians).
    #[arg(long)]
    phi0: Option<f64>,
    /// Initial state kind: coherent | mixed | thermal | random.
    #[arg(long)]
    state: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    /// Config files to run; one experiment each.
    #[arg(long, required = true, num_args = 1..)]
    config: Vec<PathBuf>,
    /// Maximum number of configs running at once.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    /// Directory for the aggregated manifest and default child outputs.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelfCheckArgs {
    /// Path to a run_manifest.json.
    #[arg(long)]
    manifest: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Evolve(args) => run_experiment(ExperimentKind::Evolve, args),
        Command::ThermalCurve(args) => run_experiment(ExperimentKind::ThermalCurve, args),
        Command::GapSweep(args) => run_experiment(ExperimentKind::GapSweep, args),
        Command::HittingTime(args) => run_experiment(ExperimentKind::HittingTime, args),
        Command::TrajectoryCompare(args) => run_experiment(ExperimentKind::TrajectoryCompare, args),
        Command::PovmReport(args) => run_experiment(ExperimentKind::PovmReport, args),
        Command::Sweep(args) => run_sweep(args),
        Command::SelfCheck(args) => run_self_check(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run_experiment(kind: ExperimentKind, args: RunArgs) -> Result<(), CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let config = ExperimentConfig::from_toml(&text)?;
            if config.experiment.kind != kind {
                return Err(CliError::Validation(format!(
                    "config is for '{}', invoked as '{}'",
                    config.experiment.kind.name(),
                    kind.name()
                )));
            }
            config
        }
        None => default_config(kind),
    };
    apply_overrides(&mut config, &args);
    config.validate()?;

    let out_dir = resolve_out_dir(args.out.as_deref(), &config);
    let outcome = experiments::run(&config, &out_dir)?;
    println!(
        "{}: wrote {} output file(s) and {} to {}",
        config.experiment.kind.name(),
        outcome.outputs.len(),
        manifest::MANIFEST_NAME,
        out_dir.display()
    );
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<(), CliError> {
    let out = args.out.unwrap_or_else(|| {
        std::env::var(qgyro_cli::OUT_DIR_ENV)
            .ok()
            .filter(|dir| !dir.is_empty())
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("qgyro-out"))
    });
    let (summary, any_failed) = sweep::sweep(&args.config, args.parallel, &out)?;
    for entry in &summary.entries {
        println!("{} -> {} [{}]", entry.config_path, entry.out_dir, entry.status);
    }
    if any_failed {
        return Err(CliError::Validation("one or more sweep configs failed".into()));
    }
    Ok(())
}

fn run_self_check(args: SelfCheckArgs) -> Result<(), CliError> {
    let checked = manifest::self_check(&args.manifest)?;
    println!("self-check: {checked} output file(s) verified");
    Ok(())
}

/// Built-in defaults so every experiment runs without a config file; sizes
/// and parameters mirror the standard sweeps.
fn default_config(kind: ExperimentKind) -> ExperimentConfig {
    let mut config = ExperimentConfig {
        experiment: ExperimentSection { kind, seed: 0 },
        geometry: GeometrySection { twice_ell: TwiceEll::Many(vec![40, 80, 160]) },
        source: Default::default(),
        initial: Default::default(),
        run: Default::default(),
        output: Default::default(),
        tolerances: Default::default(),
    };
    match kind {
        ExperimentKind::ThermalCurve => {
            config.run.n_points = Some(201);
        }
        ExperimentKind::GapSweep => {
            config.geometry.twice_ell =
                TwiceEll::Many((1..=8).map(|k| 20 * k).collect());
            config.source.s_z_list = Some(vec![0.05, 0.1, 0.2, 0.3]);
        }
        ExperimentKind::HittingTime => {
            config.run.epsilon = Some(0.2);
        }
        ExperimentKind::Evolve => {
            config.geometry.twice_ell = TwiceEll::One(160);
            config.source.s_z = Some(0.25);
            config.initial.theta0 = std::f64::consts::FRAC_PI_2;
            config.run.steps = Some(1000);
            config.run.merit_axis = Some([0.0, 0.0, 1.0]);
        }
        ExperimentKind::TrajectoryCompare => {
            config.source.s_z = Some(0.25);
            config.initial.theta0 = 15.0 * std::f64::consts::PI / 16.0;
            config.run.steps_per_ell = Some(24);
        }
        ExperimentKind::PovmReport => {
            config.geometry.twice_ell = TwiceEll::One(40);
            config.run.merit_axis = Some([0.0, 0.0, 1.0]);
        }
    }
    config
}

fn apply_overrides(config: &mut ExperimentConfig, args: &RunArgs) {
    if let Some(seed) = args.seed {
        config.experiment.seed = seed;
    }
    if let Some(sizes) = &args.twice_ell {
        config.geometry.twice_ell = TwiceEll::Many(sizes.clone());
    }
    if let Some(s_z) = args.s_z {
        config.source.s_z = Some(s_z);
        config.source.bloch = None;
    }
    if let Some(list) = &args.s_z_list {
        config.source.s_z_list = Some(list.clone());
    }
    if args.steps.is_some() {
        config.run.steps = args.steps;
    }
    if args.steps_per_ell.is_some() {
        config.run.steps_per_ell = args.steps_per_ell;
    }
    if args.n_points.is_some() {
        config.run.n_points = args.n_points;
    }
    if args.epsilon.is_some() {
        config.run.epsilon = args.epsilon;
    }
    if let Some(theta0) = args.theta0 {
        config.initial.theta0 = theta0;
    }
    if let Some(phi0) = args.phi0 {
        config.initial.phi0 = phi0;
    }
    if let Some(state) = &args.state {
        config.initial.state = state.clone();
    }
}
