//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "model": { "kind": "tabular_bernoulli", "random": { "n_atoms": 16, "n_contexts": 4, "n_actions": 2, "seed": 1 } },
//!   "adversary": { "kind": "iid_uniform" },
//!   "horizon": 200,
//!   "runs": 2000,
//!   "master_seed": 7,
//!   "diagnostics": false,
//!   "output": { "dir": "out" }
//! }
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::instances::{random_ball_features, random_tabular, random_unit_features};
use crate::environment::ContextAdversary;
use crate::error::{Error, Result};
use crate::geometry::{discretize_ball, PriorDensity};
use crate::model::{BanditModel, FeatureMap, ParameterGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    #[serde(default = "default_adversary")]
    pub adversary: AdversarySpec,
    pub horizon: usize,
    pub runs: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub diagnostics: bool,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_adversary() -> AdversarySpec {
    AdversarySpec::IidUniform
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Directory receiving `rounds.csv` and `report.json`.
    pub dir: Option<PathBuf>,
    /// Skip the per-round CSV.
    #[serde(default)]
    pub no_rounds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversarySpec {
    IidUniform,
    RoundRobin,
    FixedSequence { contexts: Vec<usize> },
}

impl AdversarySpec {
    pub fn build(&self) -> ContextAdversary {
        match self {
            AdversarySpec::IidUniform => ContextAdversary::IidUniform,
            AdversarySpec::RoundRobin => ContextAdversary::RoundRobin,
            AdversarySpec::FixedSequence { contexts } => ContextAdversary::FixedSequence(contexts.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// Either `table` (`[atom][context][action]`) or `random`.
    TabularBernoulli {
        #[serde(default)]
        table: Option<Vec<Vec<Vec<f64>>>>,
        #[serde(default)]
        random: Option<RandomTable>,
        /// Defaults to uniform for explicit tables and random for generated ones.
        #[serde(default)]
        prior: Option<Vec<f64>>,
    },
    LogisticLinear { features: FeatureSpec, prior: GridSpec },
    GaussianLinear {
        features: FeatureSpec,
        noise_std: f64,
        prior_scale: f64,
        /// Posterior draws per round for the ratio estimate (diagnostics only).
        #[serde(default)]
        ratio_draws: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomTable {
    pub n_atoms: usize,
    pub n_contexts: usize,
    pub n_actions: usize,
    pub seed: u64,
}

/// Explicit `[context][action][dim]` features or a random draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureSpec {
    Explicit(Vec<Vec<Vec<f64>>>),
    Random(RandomFeatures),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomFeatures {
    pub dim: usize,
    pub n_contexts: usize,
    pub n_actions: usize,
    pub seed: u64,
    /// `unit` puts every feature on the unit sphere, otherwise uniform in the ball.
    #[serde(default)]
    pub unit: bool,
    #[serde(default = "one")]
    pub bound: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridSpec {
    /// Lattice points in the ball; `spacing` defaults to `1 / (B T)`.
    Lattice {
        radius: f64,
        #[serde(default)]
        spacing: Option<f64>,
        #[serde(default = "uniform_density")]
        density: PriorDensity,
    },
    Atoms {
        atoms: Vec<Vec<f64>>,
        #[serde(default)]
        prior: Option<Vec<f64>>,
    },
}

fn uniform_density() -> PriorDensity {
    PriorDensity::Uniform
}

/// A validated, instantiated problem.
#[derive(Debug, Clone)]
pub enum Problem {
    Discrete {
        grid: Arc<ParameterGrid>,
        model: Arc<BanditModel>,
    },
    Gaussian {
        model: Arc<BanditModel>,
        prior_scale: f64,
        ratio_draws: usize,
    },
}

impl Problem {
    pub fn model(&self) -> &Arc<BanditModel> {
        match self {
            Problem::Discrete { model, .. } | Problem::Gaussian { model, .. } => model,
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates; errors carry `path:line:column` when known.
    pub fn from_str_at(text: &str, origin: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column())))?;
        cfg.validate()
            .map_err(|(key, msg)| Error::Config(format!("{origin}:{}: {key}: {msg}", locate(text, key))))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str_at(&text, &path.display().to_string())
    }

    fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        if self.horizon == 0 {
            return Err(("horizon", "must be >= 1".into()));
        }
        if self.runs == 0 {
            return Err(("runs", "must be >= 1".into()));
        }
        let problem = self.problem().map_err(|e| ("model", e.to_string()))?;
        self.adversary
            .build()
            .validate(problem.model().n_contexts())
            .map_err(|e| ("adversary", e.to_string()))?;
        if let ModelSpec::GaussianLinear { ratio_draws: 1, .. } = self.model {
            return Err(("ratio_draws", "must be 0 or >= 2".into()));
        }
        Ok(())
    }

    /// Builds the grid and model described by the configuration.
    pub fn problem(&self) -> Result<Problem> {
        match &self.model {
            ModelSpec::TabularBernoulli { table, random, prior } => {
                let (grid, model) = match (table, random) {
                    (Some(t), None) => {
                        let n = t.len();
                        let nx = t.first().map_or(0, Vec::len);
                        let k = t.first().and_then(|r| r.first()).map_or(0, Vec::len);
                        for (i, atom) in t.iter().enumerate() {
                            if atom.len() != nx || atom.iter().any(|r| r.len() != k) {
                                return Err(Error::Config(format!("table row for atom {i} has the wrong shape")));
                            }
                        }
                        let flat = t.iter().flatten().flatten().copied().collect();
                        let model = BanditModel::tabular_bernoulli(n, nx, k, flat)?;
                        (Arc::new(ParameterGrid::uniform_tabular(n)?), model)
                    }
                    (None, Some(r)) => {
                        let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
                        random_tabular(&mut rng, r.n_atoms, r.n_contexts, r.n_actions)?
                    }
                    _ => return Err(Error::Config("give exactly one of `table` or `random`".into())),
                };
                let grid = match prior {
                    Some(p) => Arc::new(grid.with_prior(p.clone())?),
                    None => grid,
                };
                Ok(Problem::Discrete {
                    grid,
                    model: Arc::new(model),
                })
            }
            ModelSpec::LogisticLinear { features, prior } => {
                let fm = features.build()?;
                let bound = fm.max_norm();
                let dim = fm.dim();
                let model = BanditModel::logistic_linear(fm)?;
                let grid = match prior {
                    GridSpec::Lattice {
                        radius,
                        spacing,
                        density,
                    } => {
                        let h = spacing.unwrap_or(1.0 / (bound.max(1e-12) * self.horizon as f64));
                        discretize_ball(dim, *radius, h, *density)?
                    }
                    GridSpec::Atoms { atoms, prior } => {
                        let n = atoms.len();
                        let p = prior.clone().unwrap_or_else(|| vec![1.0 / n.max(1) as f64; n]);
                        ParameterGrid::from_points(atoms.clone(), p, None)?
                    }
                };
                model.check_grid(&grid)?;
                Ok(Problem::Discrete {
                    grid: Arc::new(grid),
                    model: Arc::new(model),
                })
            }
            ModelSpec::GaussianLinear {
                features,
                noise_std,
                prior_scale,
                ratio_draws,
            } => {
                if !(*prior_scale > 0.0 && prior_scale.is_finite()) {
                    return Err(Error::Config(format!("prior_scale must be positive, got {prior_scale}")));
                }
                let model = BanditModel::gaussian_linear(features.build()?, *noise_std)?;
                Ok(Problem::Gaussian {
                    model: Arc::new(model),
                    prior_scale: *prior_scale,
                    ratio_draws: *ratio_draws,
                })
            }
        }
    }
}

impl FeatureSpec {
    pub fn build(&self) -> Result<FeatureMap> {
        match self {
            FeatureSpec::Explicit(nested) => FeatureMap::from_nested(nested),
            FeatureSpec::Random(r) => {
                let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
                if r.unit {
                    let fm = random_unit_features(&mut rng, r.dim, r.n_contexts, r.n_actions)?;
                    let data = (0..r.n_contexts)
                        .flat_map(|x| (0..r.n_actions).map(move |a| (x, a)))
                        .flat_map(|(x, a)| fm.get(x, a).iter().map(|v| v * r.bound).collect::<Vec<_>>())
                        .collect();
                    FeatureMap::new(r.dim, r.n_contexts, r.n_actions, data)
                } else {
                    random_ball_features(&mut rng, r.dim, r.n_contexts, r.n_actions, r.bound)
                }
            }
        }
    }
}

/// 1-based line of the first occurrence of `"key"`, or 1.
fn locate(text: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map_or(1, |i| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABULAR: &str = r#"{
  "model": {
    "kind": "tabular_bernoulli",
    "table": [[[0.2, 0.8]], [[0.8, 0.2]]]
  },
  "adversary": { "kind": "round_robin" },
  "horizon": 10,
  "runs": 3,
  "master_seed": 5
}"#;

    #[test]
    fn parses_tabular() {
        let cfg = ExperimentConfig::from_str_at(TABULAR, "t.json").unwrap();
        let Problem::Discrete { grid, model } = cfg.problem().unwrap() else { panic!() };
        assert_eq!(grid.len(), 2);
        assert_eq!(model.n_actions(), 2);
        assert!(!cfg.diagnostics);
    }

    #[test]
    fn parse_error_has_line() {
        let bad = TABULAR.replace("\"runs\": 3,", "\"runs\": 3,,");
        let err = ExperimentConfig::from_str_at(&bad, "t.json").unwrap_err().to_string();
        assert!(err.contains("t.json:8:"), "{err}");
    }

    #[test]
    fn validation_error_points_at_key() {
        let bad = TABULAR.replace("\"horizon\": 10", "\"horizon\": 0");
        let err = ExperimentConfig::from_str_at(&bad, "t.json").unwrap_err().to_string();
        assert!(err.contains("t.json:7: horizon"), "{err}");
        let bad = TABULAR.replace("0.8]], [[0.8", "1.8]], [[0.8");
        let err = ExperimentConfig::from_str_at(&bad, "t.json").unwrap_err().to_string();
        assert!(err.contains("t.json:2: model"), "{err}");
        let bad = TABULAR.replace("\"kind\": \"round_robin\"", "\"kind\": \"fixed_sequence\", \"contexts\": [0, 4]");
        let err = ExperimentConfig::from_str_at(&bad, "t.json").unwrap_err().to_string();
        assert!(err.contains(":6: adversary"), "{err}");
    }

    #[test]
    fn logistic_lattice_spacing_defaults_to_resolution() {
        let text = r#"{
  "model": {
    "kind": "logistic_linear",
    "features": { "dim": 2, "n_contexts": 1, "n_actions": 3, "seed": 1, "unit": true },
    "prior": { "kind": "lattice", "radius": 1.0 }
  },
  "horizon": 10,
  "runs": 1
}"#;
        let cfg = ExperimentConfig::from_str_at(text, "l.json").unwrap();
        let Problem::Discrete { grid, .. } = cfg.problem().unwrap() else { panic!() };
        // spacing 0.1 in the unit disk
        assert_eq!(grid.len(), 317);
    }

    #[test]
    fn gaussian_config() {
        let text = r#"{
  "model": {
    "kind": "gaussian_linear",
    "features": [[[1.0, 0.0], [0.0, 1.0]]],
    "noise_std": 1.0,
    "prior_scale": 1.0
  },
  "horizon": 5,
  "runs": 2
}"#;
        let cfg = ExperimentConfig::from_str_at(text, "g.json").unwrap();
        assert!(matches!(cfg.problem().unwrap(), Problem::Gaussian { .. }));
    }
}
