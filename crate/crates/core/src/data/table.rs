//! CSV ingestion into a typed raw table.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::schema::{ColumnKind, DatasetSchema};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RawValue {
    Number(f64),
    Category(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    /// One value per schema feature column, in schema order.
    pub features: Vec<RawValue>,
    pub label: u8,
    pub sensitive: u8,
}

/// Parsed rows restricted to the schema's columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTable {
    pub schema: DatasetSchema,
    pub records: Vec<RawRecord>,
    /// Rows dropped because a used column was missing.
    pub dropped_rows: usize,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> RawTable {
        RawTable {
            schema: self.schema.clone(),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            dropped_rows: 0,
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<RawTable> {
    let file = std::fs::File::open(path.as_ref())?;
    load_csv_reader(file, schema)
}

pub fn load_csv_reader<R: Read>(reader: R, schema: &DatasetSchema) -> Result<RawTable> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    // First occurrence wins when a header repeats.
    let position = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("column `{name}` not found in CSV header")))
    };
    let feature_pos = schema
        .columns
        .iter()
        .map(|c| position(&c.name))
        .collect::<Result<Vec<_>>>()?;
    let label_pos = position(&schema.label.column)?;
    let sensitive_pos = position(&schema.sensitive.column)?;

    let mut records = Vec::new();
    let mut dropped_rows = 0;
    for (row_no, row) in rdr.records().enumerate() {
        let row = row?;
        let cell = |i: usize| row.get(i).unwrap_or("");
        let used = feature_pos.iter().chain([&label_pos, &sensitive_pos]);
        if used.into_iter().any(|&i| schema.is_missing(cell(i))) {
            dropped_rows += 1;
            continue;
        }
        let mut features = Vec::with_capacity(feature_pos.len());
        for (spec, &i) in schema.columns.iter().zip(&feature_pos) {
            let raw = cell(i);
            features.push(match spec.kind {
                ColumnKind::Numeric => {
                    let v: f64 = raw.parse().map_err(|_| Error::Parse {
                        row: row_no + 1,
                        column: spec.name.clone(),
                        value: raw.to_string(),
                    })?;
                    if !v.is_finite() {
                        return Err(Error::Parse {
                            row: row_no + 1,
                            column: spec.name.clone(),
                            value: raw.to_string(),
                        });
                    }
                    RawValue::Number(v)
                }
                ColumnKind::Categorical => RawValue::Category(raw.to_string()),
            });
        }
        let label = u8::from(schema.label.positive.iter().any(|p| p == cell(label_pos)));
        let sensitive = u8::from(
            schema
                .sensitive
                .protected
                .iter()
                .any(|p| p == cell(sensitive_pos)),
        );
        records.push(RawRecord {
            features,
            label,
            sensitive,
        });
    }
    Ok(RawTable {
        schema: schema.clone(),
        records,
        dropped_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> DatasetSchema {
        DatasetSchema::from_toml_str(
            r#"
            columns = [
                { name = "age", kind = "numeric" },
                { name = "color", kind = "categorical" },
            ]
            label = { column = "y", positive = ["yes"] }
            sensitive = { column = "g", protected = ["F"] }
            missing_tokens = ["", "?"]
            "#,
        )
        .unwrap()
    }

    #[test]
    fn drops_rows_with_missing_values() {
        let csv = "age,color,y,g\n30,red,yes,F\n41,blue,,M\n29, red ,no,M\n";
        let t = load_csv_reader(csv.as_bytes(), &schema()).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.dropped_rows, 1);
        assert_eq!(t.records[0].label, 1);
        assert_eq!(t.records[0].sensitive, 1);
        assert_eq!(t.records[1].features[1], RawValue::Category("red".into()));
        assert_eq!(t.records[1].sensitive, 0);
    }

    #[test]
    fn question_mark_is_missing_when_configured() {
        let csv = "age,color,y,g\n30,?,yes,F\n";
        let t = load_csv_reader(csv.as_bytes(), &schema()).unwrap();
        assert_eq!((t.len(), t.dropped_rows), (0, 1));
    }

    #[test]
    fn missing_column_errors() {
        let csv = "age,colour,y,g\n30,red,yes,F\n";
        assert!(matches!(
            load_csv_reader(csv.as_bytes(), &schema()),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn unparseable_numeric_errors() {
        let csv = "age,color,y,g\nthirty,red,yes,F\n";
        let err = load_csv_reader(csv.as_bytes(), &schema()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 1, .. }), "{err}");
    }

    #[test]
    fn extra_columns_are_ignored() {
        let csv = "id,age,color,y,g,age\n1,30,red,yes,F,99\n";
        let t = load_csv_reader(csv.as_bytes(), &schema()).unwrap();
        assert_eq!(t.records[0].features[0], RawValue::Number(30.0));
    }
}
