//! Scenario configuration: a single JSON document, optionally overridden by
//! command-line flags. Reproducibility over convenience: no environment
//! variables except the output directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dvflow::potential::{AnalyticPotential, PolyTerm};
use dvflow::{ParticleMeasure, ProblemSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub p: f64,
    pub delta: f64,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub grad_tol: Option<f64>,
    #[serde(default)]
    pub max_iters: Option<usize>,
}

impl ProblemConfig {
    pub fn to_spec(&self) -> Result<ProblemSpec, String> {
        let mut spec = ProblemSpec::new(self.p, self.delta).map_err(|e| e.to_string())?;
        if let Some(h) = self.horizon {
            spec.horizon = h;
        }
        if let Some(m) = self.steps {
            spec.steps = m;
        }
        if let Some(t) = self.grad_tol {
            spec.grad_tol = t;
        }
        if let Some(n) = self.max_iters {
            spec.max_iters = n;
        }
        spec.validate().map_err(|e| e.to_string())?;
        if spec.steps < 10 {
            return Err(format!("steps must be at least 10, got {}", spec.steps));
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialConfig {
    Zero,
    Linear {
        w: Vec<f64>,
        #[serde(default)]
        c: f64,
    },
    /// V(x) = sign |x|^e / e; the exponent defaults to the problem's p.
    Power {
        sign: f64,
        #[serde(default)]
        exponent: Option<f64>,
    },
    Polynomial {
        coefficients: Vec<PolyTerm>,
    },
}

impl PotentialConfig {
    pub fn to_potential(&self, p: f64) -> AnalyticPotential {
        match self {
            PotentialConfig::Zero => AnalyticPotential::Zero,
            PotentialConfig::Linear { w, c } => AnalyticPotential::Linear {
                w: w.clone(),
                c: *c,
            },
            PotentialConfig::Power { sign, exponent } => AnalyticPotential::Power {
                sign: *sign,
                exponent: exponent.unwrap_or(p),
            },
            PotentialConfig::Polynomial { coefficients } => AnalyticPotential::Polynomial {
                coefficients: coefficients.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasureSource {
    File {
        file: PathBuf,
    },
    Inline {
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
}

impl MeasureSource {
    pub fn load(&self, base_dir: &Path) -> Result<ParticleMeasure, String> {
        match self {
            MeasureSource::File { file } => {
                let path = if file.is_absolute() {
                    file.clone()
                } else {
                    base_dir.join(file)
                };
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| format!("cannot read measure file {}: {e}", path.display()))?;
                ParticleMeasure::from_json(&text).map_err(|e| e.to_string())
            }
            MeasureSource::Inline { points, weights } => {
                ParticleMeasure::new(points.clone(), weights.clone()).map_err(|e| e.to_string())
            }
        }
    }

    pub fn exists(&self, base_dir: &Path) -> bool {
        match self {
            MeasureSource::File { file } => {
                let path = if file.is_absolute() {
                    file.clone()
                } else {
                    base_dir.join(file)
                };
                path.exists()
            }
            MeasureSource::Inline { .. } => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    #[default]
    Decoupled,
    Direct,
    Both,
}

/// The full scenario document. `mode` is informational when loaded from a
/// file; the subcommand decides what actually runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub problem: ProblemConfig,
    pub potential: PotentialConfig,
    #[serde(default)]
    pub measure: Option<MeasureSource>,
    /// Starting point for classical solves.
    #[serde(default)]
    pub point: Option<Vec<f64>>,
    #[serde(default)]
    pub mode: Option<String>,
    #[serde(default)]
    pub solver_mode: SolverChoice,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let config: ScenarioConfig =
            serde_json::from_str(&text).map_err(|e| format!("config error: {e}"))?;
        // Referenced files must exist at parse time.
        if let Some(source) = &config.measure {
            if !source.exists(Path::new(".")) {
                return Err("config error: referenced measure file does not exist".into());
            }
        }
        Ok(config)
    }

    /// Canonical serialization used for the stamped hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

pub fn config_hash(config: &ScenarioConfig) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(config.canonical_json().as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
