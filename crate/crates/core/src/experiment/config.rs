use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coldstart::{ColdStartRates, GeneratorConfig, Scenario};
use crate::eval::BenchOptions;
use crate::models::{ModelKind, TrainConfig};
use crate::{Error, Result};

pub const CONFIG_VERSION: u32 = 1;

/// Environment variable that overrides every seed in the config.
pub const SEED_ENV: &str = "CG_SEED";

/// Training settings that replace `train` values for one model.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainOverride {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
}

impl TrainOverride {
    fn epochs(epochs: usize) -> Self {
        Self {
            epochs: Some(epochs),
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerModel {
    pub coldguess: TrainOverride,
    pub naive: TrainOverride,
    pub sign: TrainOverride,
    pub rgcn_expanded: TrainOverride,
    pub tabular: TrainOverride,
}

impl Default for PerModel {
    fn default() -> Self {
        Self {
            coldguess: TrainOverride::default(),
            naive: TrainOverride::epochs(100),
            sign: TrainOverride::epochs(100),
            rgcn_expanded: TrainOverride {
                epochs: Some(3),
                batch_size: Some(256),
                lr: Some(5e-3),
            },
            tabular: TrainOverride::epochs(100),
        }
    }
}

impl PerModel {
    pub fn get(&self, kind: ModelKind) -> &TrainOverride {
        match kind {
            ModelKind::Coldguess => &self.coldguess,
            ModelKind::Naive => &self.naive,
            ModelKind::Sign => &self.sign,
            ModelKind::RgcnExpanded => &self.rgcn_expanded,
            ModelKind::Tabular => &self.tabular,
        }
    }

    pub fn set_epochs(&mut self, epochs: usize) {
        for o in [
            &mut self.coldguess,
            &mut self.naive,
            &mut self.sign,
            &mut self.rgcn_expanded,
            &mut self.tabular,
        ] {
            o.epochs = Some(epochs);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    /// Target edge counts.
    pub sizes: Vec<usize>,
    pub options: BenchOptions,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![10_000, 20_000, 40_000, 80_000],
            options: BenchOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub version: u32,
    /// Train graph; the test graph uses `seed + 1`.
    pub generator: GeneratorConfig,
    pub train: TrainConfig,
    pub per_model: PerModel,
    pub models: Vec<ModelKind>,
    pub scenarios: Vec<Scenario>,
    pub rates: ColdStartRates,
    pub scenario_seed: u64,
    /// Deltas in reports are taken against this model.
    pub baseline: ModelKind,
    pub bench: BenchConfig,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            generator: GeneratorConfig::default(),
            train: TrainConfig::default(),
            per_model: PerModel::default(),
            models: ModelKind::ALL.to_vec(),
            scenarios: Scenario::ALL.to_vec(),
            rates: ColdStartRates::default(),
            scenario_seed: 11,
            baseline: ModelKind::Tabular,
            bench: BenchConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(path: &Path, text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::format(path, e.to_string()))?;
        if cfg.version != CONFIG_VERSION {
            return Err(Error::Version {
                path: path.to_path_buf(),
                found: cfg.version,
                expected: CONFIG_VERSION,
            });
        }
        cfg.validate()
            .map_err(|e| Error::format(path, e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(path, &text)
    }

    /// Defaults, then the file if given, then `CG_SEED`.
    pub fn resolve(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Ok(v) = std::env::var(SEED_ENV) {
            let seed = v.trim().parse().map_err(|_| {
                Error::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))
            })?;
            cfg.set_seed(seed);
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        if self.models.is_empty() {
            return Err(Error::Config(
                "models: at least one model is required".into(),
            ));
        }
        if self.scenarios.is_empty() {
            return Err(Error::Config(
                "scenarios: at least one scenario is required".into(),
            ));
        }
        for kind in ModelKind::ALL {
            if self.train_config(kind).batch_size == 0 {
                return Err(Error::Config(format!(
                    "batch_size for {} must be positive",
                    kind.name()
                )));
            }
        }
        for &c in &self.rates.minority_classes {
            if c >= crate::NUM_CLASSES {
                return Err(Error::Config(format!(
                    "rates.minority_classes: class {c} out of range"
                )));
            }
        }
        Ok(())
    }

    /// Sets the generator, training and scenario seeds together.
    pub fn set_seed(&mut self, seed: u64) {
        self.generator.seed = seed;
        self.train.seed = seed;
        self.scenario_seed = seed;
    }

    pub fn train_config(&self, kind: ModelKind) -> TrainConfig {
        let o = self.per_model.get(kind);
        TrainConfig {
            epochs: o.epochs.unwrap_or(self.train.epochs),
            batch_size: o.batch_size.unwrap_or(self.train.batch_size),
            lr: o.lr.unwrap_or(self.train.lr),
            ..self.train.clone()
        }
    }

    pub fn test_generator(&self) -> GeneratorConfig {
        GeneratorConfig {
            seed: self.generator.seed.wrapping_add(1),
            ..self.generator.clone()
        }
    }
}
