//! Experiment configuration: TOML sections mapping onto the library's
//! parameters, validated before any computation runs.

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Which experiment a config drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Evolve,
    ThermalCurve,
    GapSweep,
    HittingTime,
    TrajectoryCompare,
    PovmReport,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Evolve => "evolve",
            Self::ThermalCurve => "thermal-curve",
            Self::GapSweep => "gap-sweep",
            Self::HittingTime => "hitting-time",
            Self::TrajectoryCompare => "trajectory-compare",
            Self::PovmReport => "povm-report",
        }
    }
}

/// `[experiment]` section.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    /// Seed for randomized initial states; echoed into the manifest so
    /// failures are reproducible.
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    0
}

/// `[geometry]`: one reference size or a list of them (2l values).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometrySection {
    pub twice_ell: TwiceEll,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TwiceEll {
    One(u32),
    Many(Vec<u32>),
}

impl TwiceEll {
    pub fn values(&self) -> Vec<u32> {
        match self {
            Self::One(v) => vec![*v],
            Self::Many(vs) => vs.clone(),
        }
    }
}

/// `[source]`: polarization along z, a full Bloch vector, or a list of
/// polarizations for sweeps.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SourceSection {
    pub s_z: Option<f64>,
    pub bloch: Option<[f64; 3]>,
    pub s_z_list: Option<Vec<f64>>,
}

/// `[initial]`: the starting reference state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitialSection {
    /// "coherent" (default), "mixed", "thermal", "random".
    #[serde(default = "default_state")]
    pub state: String,
    #[serde(default)]
    pub theta0: f64,
    #[serde(default)]
    pub phi0: f64,
}

fn default_state() -> String {
    "coherent".into()
}

impl Default for InitialSection {
    fn default() -> Self {
        Self { state: default_state(), theta0: 0.0, phi0: 0.0 }
    }
}

/// `[run]`: step counts and experiment-specific knobs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunSection {
    pub steps: Option<usize>,
    /// Alternative to `steps`: per-size step count steps = k * l.
    pub steps_per_ell: Option<usize>,
    pub n_points: Option<usize>,
    pub epsilon: Option<f64>,
    /// Measurement axis for merit reporting.
    pub merit_axis: Option<[f64; 3]>,
}

/// `[output]`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OutputSection {
    pub dir: Option<String>,
}

/// `[tolerances]`: post-run check thresholds, defaulting to the library's
/// constants. Recorded in the manifest as the tolerances in force.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ToleranceSection {
    #[serde(default = "default_trace")]
    pub trace: f64,
    #[serde(default = "default_positivity")]
    pub positivity: f64,
}

fn default_trace() -> f64 {
    qgyro::tol::TRACE
}

fn default_positivity() -> f64 {
    qgyro::tol::POSITIVITY
}

impl Default for ToleranceSection {
    fn default() -> Self {
        Self { trace: default_trace(), positivity: default_positivity() }
    }
}

/// A full experiment configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub geometry: GeometrySection,
    #[serde(default)]
    pub source: SourceSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)
            .map_err(|e| CliError::Validation(format!("config parse error: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Validate every numeric field against the preconditions of the
    /// operations it feeds; rejected configs never reach any computation.
    pub fn validate(&self) -> Result<()> {
        let sizes = self.geometry.twice_ell.values();
        if sizes.is_empty() {
            return Err(CliError::Validation("geometry.twice_ell must not be empty".into()));
        }
        for &twice_ell in &sizes {
            qgyro::ReferenceGeometry::new(twice_ell)
                .map_err(|e| CliError::Validation(e.to_string()))?;
        }
        for s in self.source_polarizations()? {
            if s.abs() > 0.5 {
                return Err(CliError::Validation(format!(
                    "source polarization {s} violates |<S_z>| <= 1/2"
                )));
            }
        }
        if let Some(bloch) = self.source.bloch {
            qgyro::SourceState::new(bloch).map_err(|e| CliError::Validation(e.to_string()))?;
        }
        if let Some(eps) = self.run.epsilon {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(CliError::Validation(format!(
                    "run.epsilon must lie in (0, 1), got {eps}"
                )));
            }
        }
        if let Some(n) = self.run.n_points {
            if n < 3 {
                return Err(CliError::Validation(format!(
                    "run.n_points must be at least 3, got {n}"
                )));
            }
        }
        if let Some(axis) = self.run.merit_axis {
            let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
            if (norm - 1.0).abs() > qgyro::tol::UNIT_AXIS {
                return Err(CliError::Validation(format!(
                    "run.merit_axis must be a unit vector, |n| = {norm}"
                )));
            }
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.initial.theta0) {
            return Err(CliError::Validation(format!(
                "initial.theta0 must lie in [0, pi], got {}",
                self.initial.theta0
            )));
        }
        match self.initial.state.as_str() {
            "coherent" | "mixed" | "thermal" | "random" => {}
            other => {
                return Err(CliError::Validation(format!(
                    "initial.state must be coherent|mixed|thermal|random, got '{other}'"
                )))
            }
        }
        Ok(())
    }

    /// The list of source polarizations this config addresses (z-axis
    /// convention): `s_z_list` if given, else the single `s_z`, else the
    /// z component of `bloch`, else 0.
    pub fn source_polarizations(&self) -> Result<Vec<f64>> {
        if let Some(list) = &self.source.s_z_list {
            if list.is_empty() {
                return Err(CliError::Validation("source.s_z_list must not be empty".into()));
            }
            return Ok(list.clone());
        }
        if let Some(s) = self.source.s_z {
            return Ok(vec![s]);
        }
        if let Some(b) = self.source.bloch {
            return Ok(vec![b[2]]);
        }
        Ok(vec![0.0])
    }

    /// The single source state for trajectory experiments.
    pub fn source_state(&self) -> Result<qgyro::SourceState> {
        if let Some(bloch) = self.source.bloch {
            return qgyro::SourceState::new(bloch)
                .map_err(|e| CliError::Validation(e.to_string()));
        }
        let s_z = self.source.s_z.unwrap_or(0.0);
        qgyro::SourceState::polarized_z(s_z).map_err(|e| CliError::Validation(e.to_string()))
    }

    /// Steps for a given size: explicit `steps` wins, else steps_per_ell * l.
    pub fn steps_for(&self, twice_ell: u32, default: usize) -> usize {
        if let Some(steps) = self.run.steps {
            return steps;
        }
        if let Some(k) = self.run.steps_per_ell {
            return k * (twice_ell as usize) / 2;
        }
        default
    }
}
