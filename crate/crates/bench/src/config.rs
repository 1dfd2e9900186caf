use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use modeqaoa_core::adam::AdamConfig;
use modeqaoa_core::bo::{Method, SearchConfig, StagnationConfig, TpeConfig};
use modeqaoa_core::graph::WeightScheme;
use modeqaoa_core::shots::AdaptiveConfig;
use modeqaoa_core::stage2::AmplifyConfig;
use modeqaoa_core::GdConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    QubitSweep,
    DepthSweep,
    NoiseSweep,
    Single,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::QubitSweep => "qubit_sweep",
            ExperimentKind::DepthSweep => "depth_sweep",
            ExperimentKind::NoiseSweep => "noise_sweep",
            ExperimentKind::Single => "single",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qubit_sweep" => Ok(ExperimentKind::QubitSweep),
            "depth_sweep" => Ok(ExperimentKind::DepthSweep),
            "noise_sweep" => Ok(ExperimentKind::NoiseSweep),
            "single" => Ok(ExperimentKind::Single),
            other => Err(BenchError::Config(format!("unknown experiment `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    pub n_values: Vec<usize>,
    pub p_values: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub instances_per_point: usize,
    pub degree: usize,
    pub weights: WeightScheme,
    pub methods: Vec<Method>,
    pub threshold: f64,
    pub master_seed: u64,
    pub stage2: bool,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    pub t_max: usize,
    pub n_fix: u64,
    pub n_final: u64,
    pub final_bootstrap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StagnationSection {
    pub enabled: bool,
    pub patience: usize,
    pub min_delta: f64,
}

/// Gradient baseline settings; shots per evaluation come from `search.n_fix`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GdSection {
    pub iterations: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub exact_gradients: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplifySection {
    pub steps: usize,
    pub shots_per_shift: u64,
    pub learning_rate: f64,
    pub reeval_period: usize,
    pub use_exact: bool,
}

/// Full experiment description. Every field is written out when a config
/// file is created, so a results directory documents itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub search: SearchSection,
    pub adaptive: AdaptiveConfig,
    pub tpe: TpeConfig,
    pub stagnation: StagnationSection,
    pub gd: GdSection,
    pub amplify: AmplifySection,
}

impl ExperimentConfig {
    pub fn preset(kind: ExperimentKind) -> Self {
        let (n_values, p_values, lambdas) = match kind {
            ExperimentKind::QubitSweep => (vec![3, 4, 6, 8, 10, 12], vec![2], vec![0.0]),
            ExperimentKind::DepthSweep => (vec![10], (1..=6).collect(), vec![0.0]),
            ExperimentKind::NoiseSweep => (
                vec![10],
                vec![2],
                vec![0.0, 0.002, 0.004, 0.006, 0.008, 0.01],
            ),
            ExperimentKind::Single => (vec![6], vec![2], vec![0.0]),
        };
        let search = SearchConfig::default();
        let stag = StagnationConfig::default();
        let gd = GdConfig::default();
        let amp = AmplifyConfig::default();
        ExperimentConfig {
            experiment: ExperimentSection {
                kind,
                n_values,
                p_values,
                lambdas,
                instances_per_point: 10,
                degree: 3,
                weights: WeightScheme::Unit,
                methods: Method::ALL.to_vec(),
                threshold: 0.80,
                master_seed: 0,
                stage2: false,
                output_dir: PathBuf::from("results"),
            },
            search: SearchSection {
                t_max: search.t_max,
                n_fix: gd.shots_per_eval,
                n_final: search.n_final,
                final_bootstrap: search.final_bootstrap,
            },
            adaptive: AdaptiveConfig::default(),
            tpe: TpeConfig::default(),
            stagnation: StagnationSection {
                enabled: true,
                patience: stag.patience,
                min_delta: stag.min_delta,
            },
            gd: GdSection {
                iterations: gd.iterations,
                learning_rate: gd.adam.learning_rate,
                beta1: gd.adam.beta1,
                beta2: gd.adam.beta2,
                eps: gd.adam.eps,
                exact_gradients: gd.exact_gradients,
            },
            amplify: AmplifySection {
                steps: amp.steps,
                shots_per_shift: amp.shots_per_shift,
                learning_rate: amp.adam.learning_rate,
                reeval_period: amp.reeval_period,
                use_exact: amp.use_exact,
            },
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()).map_err(|e| BenchError::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        let bad = |msg: String| Err(BenchError::Config(msg));
        if e.instances_per_point < 1 {
            return bad("instances_per_point must be at least 1".into());
        }
        if e.n_values.is_empty()
            || e.p_values.is_empty()
            || e.lambdas.is_empty()
            || e.methods.is_empty()
        {
            return bad("n_values, p_values, lambdas and methods must be nonempty".into());
        }
        if let Some(n) = e
            .n_values
            .iter()
            .find(|&&n| !(2..=modeqaoa_core::simulator::MAX_QUBITS).contains(&n))
        {
            return bad(format!(
                "n = {n} outside [2, {}]",
                modeqaoa_core::simulator::MAX_QUBITS
            ));
        }
        if e.p_values.contains(&0) {
            return bad("depth must be at least 1".into());
        }
        if let Some(l) = e.lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return bad(format!("noise rate {l} outside [0, 1]"));
        }
        if e.degree < 1 {
            return bad("degree must be at least 1".into());
        }
        if !(e.threshold > 0.0 && e.threshold <= 1.0) {
            return bad("threshold must lie in (0, 1]".into());
        }
        if self.search.n_fix < 1 {
            return bad("n_fix must be at least 1".into());
        }
        if self.gd.iterations < 1 {
            return bad("gd iterations must be at least 1".into());
        }
        self.search_config(e.p_values[0]).validate()?;
        self.adaptive.validate()?;
        self.amplify_config().validate()?;
        Ok(())
    }

    pub fn search_config(&self, depth: usize) -> SearchConfig {
        SearchConfig {
            depth,
            t_max: self.search.t_max,
            tpe: self.tpe,
            stagnation: self.stagnation.enabled.then_some(StagnationConfig {
                patience: self.stagnation.patience,
                min_delta: self.stagnation.min_delta,
            }),
            n_final: self.search.n_final,
            final_bootstrap: self.search.final_bootstrap,
        }
    }

    pub fn gd_config(&self) -> GdConfig {
        GdConfig {
            iterations: self.gd.iterations,
            adam: AdamConfig {
                learning_rate: self.gd.learning_rate,
                beta1: self.gd.beta1,
                beta2: self.gd.beta2,
                eps: self.gd.eps,
            },
            shots_per_eval: self.search.n_fix,
            exact_gradients: self.gd.exact_gradients,
        }
    }

    pub fn amplify_config(&self) -> AmplifyConfig {
        AmplifyConfig {
            steps: self.amplify.steps,
            shots_per_shift: self.amplify.shots_per_shift,
            adam: AdamConfig {
                learning_rate: self.amplify.learning_rate,
                ..AdamConfig::default()
            },
            reeval_period: self.amplify.reeval_period,
            use_exact: self.amplify.use_exact,
        }
    }

    /// Hex SHA-256 of the serialized config with the output directory
    /// blanked, so relocating results keeps the hash.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.experiment.output_dir = PathBuf::new();
        let digest = Sha256::digest(c.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
