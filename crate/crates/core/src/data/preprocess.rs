use std::collections::BTreeSet;
use std::io::{Read, Write};

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::raw::{ColumnValues, RawTable};
use super::schema::{ColumnKind, TabularSchema};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericBounds {
    pub column: String,
    pub min: f64,
    pub max: f64,
}

impl NumericBounds {
    /// Min-max scaling; a constant column maps to 0.
    pub fn scale(&self, x: f64) -> f64 {
        let range = self.max - self.min;
        if range > 0.0 {
            (x - self.min) / range
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Encoding {
    Numeric(NumericBounds),
    /// Category names in lexicographic order, one feature column each.
    OneHot { column: String, categories: Vec<String> },
}

/// Normalization bounds and category vocabularies fitted on a raw table.
///
/// Applying the fitted preprocessor to other tables with the same schema
/// gives matching feature columns; categories unseen during fitting encode
/// as an all-zero block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    encodings: Vec<Encoding>,
    target: String,
    positive_labels: BTreeSet<String>,
}

impl Preprocessor {
    pub fn fit(raw: &RawTable, schema: &TabularSchema) -> Result<Self> {
        schema.validate()?;
        let mut encodings = Vec::new();
        for spec in &schema.columns {
            if matches!(spec.kind, ColumnKind::Drop | ColumnKind::Target) {
                continue;
            }
            let column = raw.column(&spec.name).ok_or_else(|| Error::MissingColumn(spec.name.clone()))?;
            match (&column.values, spec.kind) {
                (ColumnValues::Numeric(v), ColumnKind::Numeric) => {
                    let (min, max) = v
                        .iter()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
                    if v.is_empty() {
                        return Err(Error::Empty(format!("column `{}` has no values", spec.name)));
                    }
                    encodings.push(Encoding::Numeric(NumericBounds {
                        column: spec.name.clone(),
                        min,
                        max,
                    }));
                }
                (ColumnValues::Categorical(v), ColumnKind::Categorical) => {
                    if v.iter().all(|s| s.is_empty()) {
                        return Err(Error::Degenerate(format!("categorical column `{}` is entirely missing", spec.name)));
                    }
                    let categories: BTreeSet<&str> = v.iter().map(String::as_str).collect();
                    encodings.push(Encoding::OneHot {
                        column: spec.name.clone(),
                        categories: categories.into_iter().map(str::to_string).collect(),
                    });
                }
                _ => {
                    return Err(Error::Schema(format!("column `{}` was read with a different kind", spec.name)));
                }
            }
        }

        let target = schema.target().name.clone();
        let observed: BTreeSet<&str> = match raw.column(&target).map(|c| &c.values) {
            Some(ColumnValues::Target(v)) => v.iter().map(String::as_str).collect(),
            _ => return Err(Error::MissingColumn(target)),
        };
        if let Some(missing) = schema.positive_labels.iter().find(|p| !observed.contains(p.as_str())) {
            return Err(Error::Schema(format!("positive label `{missing}` never occurs in `{target}`")));
        }
        if observed.iter().all(|o| schema.positive_labels.contains(*o)) {
            return Err(Error::Schema(format!(
                "every observed `{target}` category is positive; the binary target would have one class"
            )));
        }
        Ok(Self {
            encodings,
            target,
            positive_labels: schema.positive_labels.clone(),
        })
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for enc in &self.encodings {
            match enc {
                Encoding::Numeric(b) => names.push(b.column.clone()),
                Encoding::OneHot { column, categories } => {
                    names.extend(categories.iter().map(|c| format!("{column}={c}")));
                }
            }
        }
        names
    }

    pub fn transform(&self, raw: &RawTable) -> Result<Dataset> {
        let names = self.feature_names();
        let n = raw.n_rows();
        let mut features = Array2::<f64>::zeros((n, names.len()));
        let mut offset = 0;
        for enc in &self.encodings {
            match enc {
                Encoding::Numeric(bounds) => {
                    let Some(ColumnValues::Numeric(v)) = raw.column(&bounds.column).map(|c| &c.values) else {
                        return Err(Error::MissingColumn(bounds.column.clone()));
                    };
                    for (row, &x) in v.iter().enumerate() {
                        features[[row, offset]] = bounds.scale(x);
                    }
                    offset += 1;
                }
                Encoding::OneHot { column, categories } => {
                    let Some(ColumnValues::Categorical(v)) = raw.column(column).map(|c| &c.values) else {
                        return Err(Error::MissingColumn(column.clone()));
                    };
                    for (row, value) in v.iter().enumerate() {
                        if let Ok(k) = categories.binary_search(value) {
                            features[[row, offset + k]] = 1.0;
                        }
                    }
                    offset += categories.len();
                }
            }
        }
        let Some(ColumnValues::Target(targets)) = raw.column(&self.target).map(|c| &c.values) else {
            return Err(Error::MissingColumn(self.target.clone()));
        };
        let labels = targets.iter().map(|t| u8::from(self.positive_labels.contains(t))).collect();
        let normalization_bounds = self
            .encodings
            .iter()
            .filter_map(|e| match e {
                Encoding::Numeric(b) => Some(b.clone()),
                Encoding::OneHot { .. } => None,
            })
            .collect();
        Dataset::new(features, labels, names, normalization_bounds)
    }
}

/// Fits a [`Preprocessor`] on `raw` and applies it.
pub fn preprocess(raw: &RawTable, schema: &TabularSchema) -> Result<Dataset> {
    Preprocessor::fit(raw, schema)?.transform(raw)
}

/// Preprocessed feature matrix with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<u8>,
    feature_names: Vec<String>,
    normalization_bounds: Vec<NumericBounds>,
}

impl Dataset {
    pub fn new(
        features: Array2<f64>,
        labels: Vec<u8>,
        feature_names: Vec<String>,
        normalization_bounds: Vec<NumericBounds>,
    ) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::invalid(
                "dataset",
                format!("{} feature rows but {} labels", features.nrows(), labels.len()),
            ));
        }
        if features.ncols() != feature_names.len() {
            return Err(Error::DimensionMismatch {
                expected: feature_names.len(),
                actual: features.ncols(),
            });
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::invalid("labels", "must be 0 or 1"));
        }
        Ok(Self {
            features,
            labels,
            feature_names,
            normalization_bounds,
        })
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn normalization_bounds(&self) -> &[NumericBounds] {
        &self.normalization_bounds
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Copies out the given rows.
    pub fn subset(&self, rows: &[usize]) -> (Array2<f64>, Vec<u8>) {
        (
            self.features.select(Axis(0), rows),
            rows.iter().map(|&r| self.labels[r]).collect(),
        )
    }

    /// Writes the feature matrix plus a trailing `label` column.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push("label");
        out.write_record(&header)?;
        for (row, &label) in self.features.rows().into_iter().zip(&self.labels) {
            let mut record: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
            record.push(label.to_string());
            out.write_record(&record)?;
        }
        out.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    /// Reads a matrix written by [`Dataset::write_csv`]. Normalization bounds
    /// are not stored in that format and come back empty.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let header = rdr.headers()?.clone();
        let Some((last, names)) = header.iter().collect::<Vec<_>>().split_last().map(|(l, n)| (*l, n.to_vec())) else {
            return Err(Error::Empty("no header row".into()));
        };
        if last != "label" {
            return Err(Error::MissingColumn("label".into()));
        }
        let d = names.len();
        let mut flat = Vec::new();
        let mut labels = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            for (j, cell) in record.iter().enumerate().take(d) {
                flat.push(cell.parse::<f64>().map_err(|_| Error::ParseNumeric {
                    row: i + 1,
                    column: names[j].to_string(),
                    value: cell.to_string(),
                })?);
            }
            let label = record.get(d).unwrap_or("");
            labels.push(label.parse::<u8>().map_err(|_| Error::ParseNumeric {
                row: i + 1,
                column: "label".into(),
                value: label.to_string(),
            })?);
        }
        let features = Array2::from_shape_vec((labels.len(), d), flat)
            .map_err(|e| Error::invalid("dataset", e.to_string()))?;
        Self::new(features, labels, names.iter().map(|s| s.to_string()).collect(), Vec::new())
    }
}
