//! Experiment runners: each consumes a validated config and emits CSV data
//! files plus a JSON manifest into the output directory.

use std::path::{Path, PathBuf};

use rand_chacha::rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

use qgyro::channel::{iterate, IterateOptions};
use qgyro::markov;
use qgyro::measurement;
use qgyro::semiclassical;
use qgyro::spin::{coherent_state, state_statistics, DensityMatrix, ReferenceGeometry};
use qgyro::thermo;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{CliError, Result};
use crate::manifest::{self, RunManifest};
use crate::output::{full_precision, CsvFile};

/// Outcome of one experiment run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest_path: PathBuf,
    pub outputs: Vec<PathBuf>,
}

/// Run a validated config, writing into `out_dir`.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let started_at = chrono::Utc::now().to_rfc3339();

    let outputs = match config.experiment.kind {
        ExperimentKind::ThermalCurve => thermal_curve(config, out_dir)?,
        ExperimentKind::GapSweep => gap_sweep(config, out_dir)?,
        ExperimentKind::HittingTime => hitting_time(config, out_dir)?,
        ExperimentKind::Evolve => evolve(config, out_dir)?,
        ExperimentKind::TrajectoryCompare => trajectory_compare(config, out_dir)?,
        ExperimentKind::PovmReport => povm_report(config, out_dir)?,
    };

    let manifest = RunManifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: config.experiment.kind.name().to_string(),
        seed: config.experiment.seed,
        started_at,
        finished_at: chrono::Utc::now().to_rfc3339(),
        tolerances: config.tolerances,
        config: config.clone(),
        outputs: manifest::collect_outputs(out_dir, &outputs)?,
    };
    let manifest_path = manifest::write_manifest(out_dir, &manifest)?;
    Ok(RunOutcome { manifest_path, outputs })
}

fn geometry(twice_ell: u32) -> Result<ReferenceGeometry> {
    ReferenceGeometry::new(twice_ell).map_err(CliError::from)
}

/// Initial reference state per the `[initial]` section.
fn initial_state(config: &ExperimentConfig, geom: ReferenceGeometry) -> Result<DensityMatrix> {
    match config.initial.state.as_str() {
        "coherent" => Ok(coherent_state(geom, config.initial.theta0, config.initial.phi0)),
        "mixed" => Ok(DensityMatrix::maximally_mixed(geom.dim())),
        "thermal" => {
            let s = config.source.s_z.unwrap_or(0.0);
            thermo::thermal_state(s, geom).map_err(CliError::from)
        }
        "random" => {
            let mut rng =
                rand_chacha::ChaCha8Rng::seed_from_u64(config.experiment.seed);
            Ok(qgyro::sample::random_density_matrix(geom, &mut rng))
        }
        other => Err(CliError::Validation(format!("unknown initial state '{other}'"))),
    }
}

/// Post-run numerical guard: the final state of an iteration must satisfy
/// the tolerances in force. Breaches exit with code 3.
fn check_final_state(config: &ExperimentConfig, state: &DensityMatrix) -> Result<()> {
    let trace_error = (state.trace() - 1.0).abs();
    if trace_error > config.tolerances.trace {
        return Err(CliError::Numerical(format!(
            "final trace error {trace_error:.3e} exceeds {:.1e}",
            config.tolerances.trace
        )));
    }
    let min_eigenvalue = state.eigenvalues()[0];
    if min_eigenvalue < config.tolerances.positivity {
        return Err(CliError::Numerical(format!(
            "final minimum eigenvalue {min_eigenvalue:.3e} below {:.1e}",
            config.tolerances.positivity
        )));
    }
    Ok(())
}

/// Normalized asymptotic polarization vs source polarization, one curve per
/// reference size.
fn thermal_curve(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let n_points = config.run.n_points.unwrap_or(201);
    let mut csv = CsvFile::new(
        out_dir.join("thermal_curve.csv"),
        "ell,s_z,Lz_over_ell",
    );
    for twice_ell in config.geometry.twice_ell.values() {
        let geom = geometry(twice_ell)?;
        for (s_z, value) in thermo::thermal_curve(geom, n_points).map_err(CliError::from)? {
            csv.push_row(&[
                full_precision(geom.ell()),
                full_precision(s_z),
                full_precision(value),
            ]);
        }
    }
    Ok(vec![csv.finish()?])
}

/// Inverse spectral gap vs reference size, with the drift estimate column.
fn gap_sweep(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut csv = CsvFile::new(
        out_dir.join("gap_sweep.csv"),
        "ell,s_z,inv_gap,estimate",
    );
    for s_z in config.source_polarizations()? {
        if s_z == 0.0 || s_z.abs() >= 0.5 {
            return Err(CliError::Validation(format!(
                "gap sweep needs 0 < |s_z| < 1/2, got {s_z}"
            )));
        }
        for twice_ell in config.geometry.twice_ell.values() {
            let geom = geometry(twice_ell)?;
            let chain = markov::transition_matrix(geom, s_z).map_err(CliError::from)?;
            let gap = chain.spectral_gap().map_err(CliError::from)?;
            csv.push_row(&[
                full_precision(geom.ell()),
                full_precision(s_z),
                full_precision(gap.relaxation_time),
                full_precision(geom.ell() / (2.0 * s_z.abs())),
            ]);
        }
    }
    Ok(vec![csv.finish()?])
}

/// Antiparallel hitting-time sums, plus the epsilon-relaxed variant when
/// `run.epsilon` is set.
fn hitting_time(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let mut csv = CsvFile::new(
        out_dir.join("hitting_time.csv"),
        "ell,d,exact_sum,closed_form,ratio",
    );
    for twice_ell in config.geometry.twice_ell.values() {
        let geom = geometry(twice_ell)?;
        let t = markov::hitting_time_antiparallel(geom);
        csv.push_row(&[
            full_precision(geom.ell()),
            geom.dim().to_string(),
            full_precision(t.exact_sum),
            full_precision(t.closed_form),
            full_precision(t.exact_sum / t.closed_form),
        ]);
    }
    files.push(csv.finish()?);

    if let Some(epsilon) = config.run.epsilon {
        let mut relaxed = CsvFile::new(
            out_dir.join("hitting_time_epsilon.csv"),
            "ell,d,epsilon,truncated_sum,closed_form,empirical_steps",
        );
        for twice_ell in config.geometry.twice_ell.values() {
            let geom = geometry(twice_ell)?;
            let out = markov::hitting_time_epsilon(geom, epsilon).map_err(CliError::from)?;
            relaxed.push_row(&[
                full_precision(geom.ell()),
                geom.dim().to_string(),
                full_precision(epsilon),
                full_precision(out.truncated_sum),
                full_precision(out.closed_form),
                out.empirical_steps.to_string(),
            ]);
        }
        files.push(relaxed.finish()?);
    }
    Ok(files)
}

/// One exact channel trajectory with per-step direction statistics.
fn evolve(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let sizes = config.geometry.twice_ell.values();
    if sizes.len() != 1 {
        return Err(CliError::Validation(
            "evolve runs one geometry; give a single twice_ell".into(),
        ));
    }
    let geom = geometry(sizes[0])?;
    let rho0 = initial_state(config, geom)?;
    let xi = config.source_state()?;
    let steps = config.steps_for(sizes[0], 1000);
    let opts = IterateOptions { merit_axis: config.run.merit_axis, ..Default::default() };
    let record = iterate(&rho0, &xi, geom, steps, &opts).map_err(CliError::from)?;
    check_final_state(config, &record.final_state)?;

    let header = if record.merit.is_some() {
        "t,Lx,Ly,Lz,r,theta,merit"
    } else {
        "t,Lx,Ly,Lz,r,theta"
    };
    let mut csv = CsvFile::new(out_dir.join("trajectory.csv"), header);
    for t in 0..record.len() {
        let mut row = vec![
            t.to_string(),
            full_precision(record.l_exp[t][0]),
            full_precision(record.l_exp[t][1]),
            full_precision(record.l_exp[t][2]),
            full_precision(record.r[t]),
            // Undefined direction (zero-length <L>) emits an empty field.
            record.theta[t].map(full_precision).unwrap_or_default(),
        ];
        if let Some(merit) = &record.merit {
            row.push(full_precision(merit[t]));
        }
        csv.push_row(&row);
    }
    Ok(vec![csv.finish()?])
}

/// Exact vs semiclassical angle trajectories across reference sizes.
fn trajectory_compare(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let theta0 = config.initial.theta0;
    let s_z = config.source.s_z.unwrap_or(0.25);
    let mut detail = CsvFile::new(
        out_dir.join("trajectory_compare.csv"),
        "ell,t,theta_exact,theta_sc,r_exact",
    );
    let mut summary = CsvFile::new(
        out_dir.join("trajectory_compare_summary.csv"),
        "ell,steps,max_deviation,min_r",
    );
    for twice_ell in config.geometry.twice_ell.values() {
        let geom = geometry(twice_ell)?;
        let steps = config.steps_for(twice_ell, 24 * geom.ell().ceil() as usize);
        let out = semiclassical::compare_exact_semiclassical(geom, theta0, s_z, steps)
            .map_err(CliError::from)?;
        for t in 0..out.theta_exact.len() {
            detail.push_row(&[
                full_precision(geom.ell()),
                t.to_string(),
                full_precision(out.theta_exact[t]),
                full_precision(out.theta_sc[t]),
                full_precision(out.r_exact[t]),
            ]);
        }
        summary.push_row(&[
            full_precision(geom.ell()),
            steps.to_string(),
            full_precision(out.max_deviation),
            full_precision(out.min_r),
        ]);
    }
    Ok(vec![detail.finish()?, summary.finish()?])
}

/// Serializable POVM report.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PovmReport {
    pub ell: f64,
    pub n_rho: [f64; 3],
    pub r: f64,
    pub theta: Option<f64>,
    /// 2x2 complex matrices as [re, im] pairs, row major.
    pub lambda_plus: [[[f64; 2]; 2]; 2],
    pub lambda_minus: [[[f64; 2]; 2]; 2],
    pub merit_axis: [f64; 3],
    pub q_ave: f64,
}

fn complex_matrix_to_array(mat: &qgyro::CMatrix) -> [[[f64; 2]; 2]; 2] {
    let mut out = [[[0.0; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = [mat[(i, j)].re, mat[(i, j)].im];
        }
    }
    out
}

/// Induced POVM and figure of merit of the configured reference state.
fn povm_report(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let sizes = config.geometry.twice_ell.values();
    if sizes.len() != 1 {
        return Err(CliError::Validation(
            "povm-report runs one geometry; give a single twice_ell".into(),
        ));
    }
    let geom = geometry(sizes[0])?;
    let rho = initial_state(config, geom)?;
    let stats = state_statistics(&rho, geom).map_err(CliError::from)?;
    let povm = measurement::induced_povm(&rho, geom).map_err(CliError::from)?;
    let axis = config.run.merit_axis.unwrap_or([0.0, 0.0, 1.0]);
    let q_ave = measurement::figure_of_merit(&rho, axis, geom).map_err(CliError::from)?;

    let report = PovmReport {
        ell: geom.ell(),
        n_rho: stats.n_rho,
        r: stats.r,
        theta: stats.theta,
        lambda_plus: complex_matrix_to_array(&povm.lambda_plus),
        lambda_minus: complex_matrix_to_array(&povm.lambda_minus),
        merit_axis: axis,
        q_ave,
    };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Validation(format!("report serialization: {e}")))?;
    let path = out_dir.join("povm_report.json");
    crate::output::write_atomic(&path, json.as_bytes())?;

    println!("POVM report (l = {}):", report.ell);
    println!("  n_rho = [{:.6}, {:.6}, {:.6}], r = {:.6}", report.n_rho[0], report.n_rho[1], report.n_rho[2], report.r);
    match report.theta {
        Some(theta) => println!("  theta = {theta:.6} rad"),
        None => println!("  theta undefined (state has no direction)"),
    }
    println!("  Q_ave against [{:.3}, {:.3}, {:.3}] = {:.6}", axis[0], axis[1], axis[2], report.q_ave);
    Ok(vec![path])
}
