//! Tabular ingestion and preprocessing.
//!
//! A flattened CSV is read against a [`TabularSchema`], numeric columns are
//! min-max scaled to `[0, 1]`, categorical columns are one-hot encoded, and
//! the target is collapsed to a binary label. [`four_way_split`] then cuts
//! the rows into the victim and attack halves used by the audit.

mod preprocess;
mod raw;
mod schema;
mod split;
mod synth;

pub use preprocess::{preprocess, Dataset, NumericBounds, Preprocessor};
pub use raw::{load_csv, read_csv, ColumnValues, RawColumn, RawTable};
pub use schema::{ColumnKind, ColumnSpec, TabularSchema};
pub use split::{four_way_split, four_way_split_with, FourWaySplit, DEFAULT_INNER_TRAIN_FRACTION};
pub use synth::{synth_generate, SynthParams};
