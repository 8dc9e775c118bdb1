use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::correction::CorrectionConfig;
use crate::data::{DatasetSchema, SyntheticSpec};
use crate::debias::{DebiasConfig, TrainerVariant};
use crate::error::{Error, Result};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "FAIRSP_OUT_DIR";
/// Environment variable naming the default dataset cache directory.
pub const CACHE_DIR_ENV: &str = "FAIRSP_CACHE_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SchemaSource {
    /// Path to a TOML or JSON schema file.
    Path(PathBuf),
    Inline(DatasetSchema),
}

impl SchemaSource {
    pub fn resolve(&self, base: Option<&Path>) -> Result<DatasetSchema> {
        match self {
            SchemaSource::Inline(s) => {
                s.validate()?;
                Ok(s.clone())
            }
            SchemaSource::Path(p) => DatasetSchema::from_file(resolve_path(p, base)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticPreset {
    Biased,
    Unbiased,
    AdultProxy,
}

impl SyntheticPreset {
    pub fn spec(self, n: usize, seed: u64) -> SyntheticSpec {
        match self {
            SyntheticPreset::Biased => SyntheticSpec::biased(n, seed),
            SyntheticPreset::Unbiased => SyntheticSpec::unbiased(n, seed),
            SyntheticPreset::AdultProxy => SyntheticSpec::adult_proxy(n, seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        schema: SchemaSource,
    },
    /// A generated dataset. The generator seed is fixed by the config; run
    /// seeds only drive splitting, noise and training.
    Synthetic {
        preset: SyntheticPreset,
        n: usize,
        #[serde(default)]
        seed: u64,
    },
    SyntheticSpec {
        spec: SyntheticSpec,
    },
}

impl DatasetSource {
    pub fn synthetic_spec(&self) -> Option<SyntheticSpec> {
        match self {
            DatasetSource::Csv { .. } => None,
            DatasetSource::Synthetic { preset, n, seed } => Some(preset.spec(*n, *seed)),
            DatasetSource::SyntheticSpec { spec } => Some(spec.clone()),
        }
    }
}

fn default_variants() -> Vec<TrainerVariant> {
    vec![TrainerVariant::Fairsp]
}

fn default_epsilons() -> Vec<f64> {
    vec![0.5, 1.0]
}

fn default_ratios() -> Vec<f64> {
    vec![0.2]
}

pub const DEFAULT_SEEDS: [u64; 5] = [5, 7, 11, 19, 29];

fn default_seeds() -> Vec<u64> {
    DEFAULT_SEEDS.to_vec()
}

fn default_test_fraction() -> f64 {
    0.5
}

fn default_workers() -> usize {
    1
}

/// Everything needed to reproduce a set of runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    #[serde(default = "default_variants")]
    pub variants: Vec<TrainerVariant>,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_ratios")]
    pub clean_ratios: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub debias: DebiasConfig,
    #[serde(default)]
    pub correction: CorrectionConfig,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    /// Parallel sweep cells.
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Directory relative paths in the config are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetSource) -> Self {
        Self {
            dataset,
            variants: default_variants(),
            epsilons: default_epsilons(),
            clean_ratios: default_ratios(),
            seeds: default_seeds(),
            test_fraction: default_test_fraction(),
            debias: DebiasConfig::default(),
            correction: CorrectionConfig::default(),
            out_dir: None,
            cache_dir: None,
            workers: default_workers(),
            base_dir: None,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_toml_str(&std::fs::read_to_string(path)?)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        if self.variants.is_empty() {
            return Err(Error::Config("variant list is empty".into()));
        }
        if self.epsilons.is_empty() {
            return Err(Error::Config("epsilon list is empty".into()));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::Config(format!("epsilon {e} is not positive")));
        }
        if self.clean_ratios.is_empty() {
            return Err(Error::Config("clean ratio list is empty".into()));
        }
        if let Some(r) = self
            .clean_ratios
            .iter()
            .find(|r| !(**r > 0.0 && **r <= 1.0))
        {
            return Err(Error::Config(format!("clean ratio {r} outside (0, 1]")));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test_fraction {} outside (0, 1)",
                self.test_fraction
            )));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be positive".into()));
        }
        self.debias
            .validate()
            .map_err(|e| Error::Config(format!("debias: {e}")))?;
        self.correction
            .train
            .validate()
            .map_err(|e| Error::Config(format!("correction: {e}")))?;
        Ok(())
    }

    /// Explicit setting, else the environment variable, else `./fairsp-out`.
    pub fn resolved_out_dir(&self) -> PathBuf {
        self.out_dir
            .as_ref()
            .map(|p| resolve_path(p, self.base_dir.as_deref()))
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("fairsp-out"))
    }

    /// Explicit setting, else the environment variable, else no caching.
    pub fn resolved_cache_dir(&self) -> Option<PathBuf> {
        self.cache_dir
            .as_ref()
            .map(|p| resolve_path(p, self.base_dir.as_deref()))
            .or_else(|| std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from))
    }
}

pub(crate) fn resolve_path(p: &Path, base: Option<&Path>) -> PathBuf {
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p.to_path_buf(),
    }
}
