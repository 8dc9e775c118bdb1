//! Dataset ingestion, encoding, splitting and synthetic generation.

pub mod dataset;
pub mod encode;
pub mod schema;
pub mod split;
pub mod synthetic;
pub mod table;

pub use dataset::{EncodedDataset, LabeledView};
pub use encode::{encode, ColumnEncoding, Encoded, EncodingMap};
pub use schema::{ColumnKind, ColumnSpec, DatasetSchema, LabelColumn, SensitiveColumn};
pub use split::{partition_semi_private, split_indices, split_train_test, SemiPrivatePartition};
pub use synthetic::{synthesize, GroupGaussian, LabelMode, LabelRule, SyntheticSpec};
pub use table::{load_csv, load_csv_reader, RawRecord, RawTable, RawValue};
