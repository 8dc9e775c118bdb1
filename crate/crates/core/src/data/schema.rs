use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelColumn {
    pub column: String,
    /// Raw values that map to `Y = 1`; everything else maps to 0.
    pub positive: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensitiveColumn {
    pub column: String,
    /// Raw values that map to `A = 1`; everything else maps to 0.
    pub protected: Vec<String>,
}

fn default_missing() -> Vec<String> {
    vec![String::new()]
}

/// Column layout of a tabular dataset with a binary label and a binary
/// sensitive attribute. The sensitive column is never a feature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub columns: Vec<ColumnSpec>,
    pub label: LabelColumn,
    pub sensitive: SensitiveColumn,
    /// Cell values treated as missing (after trimming). Rows with a missing
    /// value in any used column are dropped.
    #[serde(default = "default_missing")]
    pub missing_tokens: Vec<String>,
}

impl DatasetSchema {
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for name in self
            .columns
            .iter()
            .map(|c| c.name.as_str())
            .chain([self.label.column.as_str(), self.sensitive.column.as_str()])
        {
            if !seen.insert(name) {
                return Err(Error::Schema(format!("column `{name}` is listed twice")));
            }
        }
        if self.columns.is_empty() {
            return Err(Error::Schema("no feature columns".into()));
        }
        if self.label.positive.is_empty() {
            return Err(Error::Schema(
                "label needs at least one positive value".into(),
            ));
        }
        if self.sensitive.protected.is_empty() {
            return Err(Error::Schema(
                "sensitive attribute needs at least one protected value".into(),
            ));
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let schema: Self = toml::from_str(s)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => {
                let schema: Self = serde_json::from_str(&text)?;
                schema.validate()?;
                Ok(schema)
            }
            _ => Self::from_toml_str(&text),
        }
    }

    pub(crate) fn is_missing(&self, cell: &str) -> bool {
        self.missing_tokens.iter().any(|m| m == cell)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = r#"
        columns = [
            { name = "age", kind = "numeric" },
            { name = "color", kind = "categorical" },
        ]
        label = { column = "income", positive = [">50K"] }
        sensitive = { column = "gender", protected = ["F"] }
    "#;

    #[test]
    fn parses_toml() {
        let s = DatasetSchema::from_toml_str(TOY).unwrap();
        assert_eq!(s.columns.len(), 2);
        assert_eq!(s.missing_tokens, vec![String::new()]);
    }

    #[test]
    fn rejects_sensitive_as_feature() {
        let bad = TOY.replace("\"color\"", "\"gender\"");
        assert!(matches!(
            DatasetSchema::from_toml_str(&bad),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn rejects_duplicates() {
        let bad = TOY.replace("\"color\"", "\"age\"");
        assert!(DatasetSchema::from_toml_str(&bad).is_err());
    }
}
