use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::config::{resolve_path, DatasetSource, ExperimentConfig};
use crate::data::{
    load_csv_reader, split_indices, synthesize, DatasetSchema, EncodedDataset, EncodingMap,
    RawTable,
};
use crate::error::{Result, StageExt};

/// A loaded dataset, before any per-seed processing.
#[derive(Debug, Clone, PartialEq)]
pub enum PreparedData {
    /// Parsed CSV rows; encoding is fitted per split on the training rows.
    Table { name: String, raw: RawTable },
    /// Generated rows, already numeric.
    Synthetic { name: String, data: EncodedDataset },
}

/// One seeded train/test split, encoded.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitData {
    pub train: EncodedDataset,
    pub test: EncodedDataset,
    /// `None` for synthetic data.
    pub encoding: Option<EncodingMap>,
    /// Test cells whose category never appeared in training rows.
    pub unseen_test_categories: usize,
}

impl PreparedData {
    /// Loads the configured dataset, through the cache when one is configured.
    pub fn load(config: &ExperimentConfig) -> Result<Self> {
        match &config.dataset {
            DatasetSource::Csv { path, schema } => {
                let base = config.base_dir.as_deref();
                let schema = schema.resolve(base).stage("load")?;
                let path = resolve_path(path, base);
                let raw = load_table(&path, &schema, config.resolved_cache_dir().as_deref())
                    .stage("load")?;
                let name = path
                    .file_stem()
                    .map_or_else(|| "csv".into(), |s| s.to_string_lossy().into_owned());
                Ok(PreparedData::Table { name, raw })
            }
            other => {
                let spec = other.synthetic_spec().expect("non-csv source");
                let data = synthesize(&spec).stage("load")?;
                let name = match other {
                    DatasetSource::Synthetic { preset, .. } => {
                        format!("synthetic_{}", preset_name(*preset))
                    }
                    _ => "synthetic".into(),
                };
                Ok(PreparedData::Synthetic { name, data })
            }
        }
    }

    pub fn name(&self) -> &str {
        match self {
            PreparedData::Table { name, .. } | PreparedData::Synthetic { name, .. } => name,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            PreparedData::Table { raw, .. } => raw.len(),
            PreparedData::Synthetic { data, .. } => data.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Splits with the run seed. Raw tables are split before encoding so that
    /// normalization statistics come from training rows only.
    pub fn split(&self, test_fraction: f64, seed: u64) -> Result<SplitData> {
        let (train_idx, test_idx) =
            split_indices(self.len(), test_fraction, seed).stage("split")?;
        match self {
            PreparedData::Synthetic { data, .. } => Ok(SplitData {
                train: data.select(&train_idx),
                test: data.select(&test_idx),
                encoding: None,
                unseen_test_categories: 0,
            }),
            PreparedData::Table { raw, .. } => {
                let train_raw = raw.select(&train_idx);
                let test_raw = raw.select(&test_idx);
                let map = EncodingMap::fit(&train_raw).stage("encode")?;
                let train = map.transform(&train_raw).stage("encode")?;
                let test = map.transform(&test_raw).stage("encode")?;
                Ok(SplitData {
                    train: train.dataset,
                    test: test.dataset,
                    encoding: Some(map),
                    unseen_test_categories: test.unseen_categories,
                })
            }
        }
    }
}

fn preset_name(p: super::config::SyntheticPreset) -> &'static str {
    use super::config::SyntheticPreset::*;
    match p {
        Biased => "biased",
        Unbiased => "unbiased",
        AdultProxy => "adult_proxy",
    }
}

/// Hex SHA-256 over the CSV bytes and the canonical JSON of the schema.
pub fn content_hash(csv_bytes: &[u8], schema: &DatasetSchema) -> Result<String> {
    let mut h = Sha256::new();
    h.update(csv_bytes);
    h.update([0u8]);
    h.update(serde_json::to_vec(schema)?);
    Ok(hex::encode(h.finalize()))
}

pub fn cache_path(cache_dir: &Path, hash: &str) -> PathBuf {
    cache_dir.join(format!("{hash}.json"))
}

/// Parses `path`, reusing a cached table keyed by content hash. A changed
/// CSV or schema changes the key, so stale entries are never read.
pub fn load_table(
    path: &Path,
    schema: &DatasetSchema,
    cache_dir: Option<&Path>,
) -> Result<RawTable> {
    let bytes = std::fs::read(path)?;
    let Some(dir) = cache_dir else {
        return load_csv_reader(bytes.as_slice(), schema);
    };
    let entry = cache_path(dir, &content_hash(&bytes, schema)?);
    if let Ok(text) = std::fs::read(&entry) {
        match serde_json::from_slice::<RawTable>(&text) {
            Ok(t) if t.schema == *schema => {
                log::debug!("cache hit {}", entry.display());
                return Ok(t);
            }
            _ => log::warn!("ignoring unreadable cache entry {}", entry.display()),
        }
    }
    let table = load_csv_reader(bytes.as_slice(), schema)?;
    std::fs::create_dir_all(dir)?;
    // Write then rename so a concurrent reader never sees a partial file.
    let tmp = entry.with_extension(format!("tmp{}", std::process::id()));
    std::fs::write(&tmp, serde_json::to_vec(&table)?)?;
    std::fs::rename(&tmp, &entry)?;
    Ok(table)
}
