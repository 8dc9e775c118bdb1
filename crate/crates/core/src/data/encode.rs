//! One-hot and z-score encoding fitted on training rows.

use serde::{Deserialize, Serialize};

use super::dataset::EncodedDataset;
use super::schema::DatasetSchema;
use super::table::{RawTable, RawValue};
use crate::error::{Error, Result};
use crate::nn::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnEncoding {
    /// `(v − mean) / std` with the population standard deviation. A constant
    /// training column has `std = 1`.
    Numeric { name: String, mean: f64, std: f64 },
    /// One indicator per category, ordered by first occurrence in training rows.
    OneHot {
        name: String,
        categories: Vec<String>,
    },
}

impl ColumnEncoding {
    fn width(&self) -> usize {
        match self {
            ColumnEncoding::Numeric { .. } => 1,
            ColumnEncoding::OneHot { categories, .. } => categories.len(),
        }
    }

    fn source(&self) -> &str {
        match self {
            ColumnEncoding::Numeric { name, .. } | ColumnEncoding::OneHot { name, .. } => name,
        }
    }
}

/// The fitted encoding, serializable for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingMap {
    pub columns: Vec<ColumnEncoding>,
    pub sensitive_column: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub dataset: EncodedDataset,
    /// Categorical cells not seen during fitting; they encode as all zeros.
    pub unseen_categories: usize,
}

impl EncodingMap {
    pub fn fit(train: &RawTable) -> Result<Self> {
        let schema = &train.schema;
        if train.is_empty() {
            return Err(Error::EmptySplit(
                "cannot fit an encoding on zero rows".into(),
            ));
        }
        let n = train.len() as f64;
        let mut columns = Vec::with_capacity(schema.columns.len());
        for (j, spec) in schema.columns.iter().enumerate() {
            let values = train.records.iter().map(|r| &r.features[j]);
            match spec.kind {
                super::schema::ColumnKind::Numeric => {
                    let nums: Vec<f64> = values
                        .map(|v| match v {
                            RawValue::Number(x) => Ok(*x),
                            RawValue::Category(_) => Err(Error::Schema(format!(
                                "column `{}` holds a category but is declared numeric",
                                spec.name
                            ))),
                        })
                        .collect::<Result<_>>()?;
                    let mean = nums.iter().sum::<f64>() / n;
                    let var = nums.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                    let std = if var > 0.0 { var.sqrt() } else { 1.0 };
                    columns.push(ColumnEncoding::Numeric {
                        name: spec.name.clone(),
                        mean,
                        std,
                    });
                }
                super::schema::ColumnKind::Categorical => {
                    let mut categories: Vec<String> = Vec::new();
                    for v in values {
                        let key = category_key(v);
                        if !categories.contains(&key) {
                            categories.push(key);
                        }
                    }
                    columns.push(ColumnEncoding::OneHot {
                        name: spec.name.clone(),
                        categories,
                    });
                }
            }
        }
        let map = Self {
            columns,
            sensitive_column: schema.sensitive.column.clone(),
        };
        map.audit(schema)?;
        Ok(map)
    }

    pub fn width(&self) -> usize {
        self.columns.iter().map(ColumnEncoding::width).sum()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.columns
            .iter()
            .flat_map(|c| match c {
                ColumnEncoding::Numeric { name, .. } => vec![name.clone()],
                ColumnEncoding::OneHot { name, categories } => {
                    categories.iter().map(|k| format!("{name}={k}")).collect()
                }
            })
            .collect()
    }

    /// Confirms the sensitive column contributes no feature.
    pub fn audit(&self, schema: &DatasetSchema) -> Result<()> {
        let sensitive = &schema.sensitive.column;
        if let Some(c) = self.columns.iter().find(|c| c.source() == sensitive) {
            return Err(Error::Schema(format!(
                "sensitive column `{}` would be encoded as a feature",
                c.source()
            )));
        }
        Ok(())
    }

    pub fn transform(&self, table: &RawTable) -> Result<Encoded> {
        self.audit(&table.schema)?;
        if table.schema.columns.len() != self.columns.len() {
            return Err(Error::Schema(
                "table and encoding have different column counts".into(),
            ));
        }
        let width = self.width();
        let mut data = Vec::with_capacity(table.len() * width);
        let mut unseen = 0;
        for rec in &table.records {
            for (enc, v) in self.columns.iter().zip(&rec.features) {
                match (enc, v) {
                    (ColumnEncoding::Numeric { mean, std, .. }, RawValue::Number(x)) => {
                        data.push((x - mean) / std);
                    }
                    (ColumnEncoding::OneHot { categories, .. }, v) => {
                        let key = category_key(v);
                        let hit = categories.iter().position(|c| *c == key);
                        if hit.is_none() {
                            unseen += 1;
                        }
                        data.extend((0..categories.len()).map(|k| {
                            if Some(k) == hit {
                                1.0
                            } else {
                                0.0
                            }
                        }));
                    }
                    (ColumnEncoding::Numeric { name, .. }, RawValue::Category(c)) => {
                        return Err(Error::Schema(format!(
                            "numeric column `{name}` holds category {c:?}"
                        )));
                    }
                }
            }
        }
        let x = Matrix::from_vec(table.len(), width, data)?;
        let y = table.records.iter().map(|r| r.label).collect();
        let a: Vec<u8> = table.records.iter().map(|r| r.sensitive).collect();
        Ok(Encoded {
            dataset: EncodedDataset::with_clean_attributes(x, y, a)?,
            unseen_categories: unseen,
        })
    }
}

fn category_key(v: &RawValue) -> String {
    match v {
        RawValue::Category(s) => s.clone(),
        RawValue::Number(x) => x.to_string(),
    }
}

/// Fits the encoding on `raw` and encodes it.
pub fn encode(raw: &RawTable, schema: &DatasetSchema) -> Result<(EncodedDataset, EncodingMap)> {
    if raw.schema != *schema {
        return Err(Error::Schema(
            "table was loaded with a different schema".into(),
        ));
    }
    let map = EncodingMap::fit(raw)?;
    let enc = map.transform(raw)?;
    Ok((enc.dataset, map))
}
