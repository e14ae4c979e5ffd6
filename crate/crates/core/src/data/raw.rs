use std::io::{Read, Write};
use std::path::Path;

use super::schema::{ColumnKind, TabularSchema};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnValues {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
    Target(Vec<String>),
}

impl ColumnValues {
    fn len(&self) -> usize {
        match self {
            ColumnValues::Numeric(v) => v.len(),
            ColumnValues::Categorical(v) | ColumnValues::Target(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawColumn {
    pub name: String,
    pub values: ColumnValues,
}

/// Typed columns as read from CSV, in schema order. `drop` columns are not
/// kept.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    columns: Vec<RawColumn>,
    n_rows: usize,
}

impl RawTable {
    pub fn new(columns: Vec<RawColumn>) -> Result<Self> {
        let n_rows = columns.first().map_or(0, |c| c.values.len());
        if let Some(bad) = columns.iter().find(|c| c.values.len() != n_rows) {
            return Err(Error::invalid(
                "table",
                format!("column `{}` has {} rows, expected {n_rows}", bad.name, bad.values.len()),
            ));
        }
        Ok(Self { columns, n_rows })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn columns(&self) -> &[RawColumn] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&RawColumn> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Writes the table as CSV with a header row. Floats use the shortest
    /// representation that parses back to the same value.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        for row in 0..self.n_rows {
            let record: Vec<String> = self
                .columns
                .iter()
                .map(|c| match &c.values {
                    ColumnValues::Numeric(v) => format!("{:?}", v[row]),
                    ColumnValues::Categorical(v) | ColumnValues::Target(v) => v[row].clone(),
                })
                .collect();
            out.write_record(&record)?;
        }
        out.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &TabularSchema) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

/// Reads comma-separated UTF-8 with a header row. Row numbers in errors are
/// 1-based data rows (the header is not counted).
pub fn read_csv<R: Read>(reader: R, schema: &TabularSchema) -> Result<RawTable> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Err(Error::Empty("CSV has no header row".into()));
    }

    let mut positions = Vec::new();
    for spec in schema.columns.iter().filter(|c| c.kind != ColumnKind::Drop) {
        let pos = headers
            .iter()
            .position(|h| h.trim() == spec.name)
            .ok_or_else(|| Error::MissingColumn(spec.name.clone()))?;
        let values = match spec.kind {
            ColumnKind::Numeric => ColumnValues::Numeric(Vec::new()),
            ColumnKind::Categorical => ColumnValues::Categorical(Vec::new()),
            ColumnKind::Target => ColumnValues::Target(Vec::new()),
            ColumnKind::Drop => unreachable!(),
        };
        positions.push((pos, RawColumn { name: spec.name.clone(), values }));
    }

    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        for (pos, column) in positions.iter_mut() {
            let cell = record.get(*pos).unwrap_or("").trim();
            match &mut column.values {
                ColumnValues::Numeric(v) => {
                    let x = cell
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| Error::ParseNumeric {
                            row,
                            column: column.name.clone(),
                            value: cell.to_string(),
                        })?;
                    v.push(x);
                }
                ColumnValues::Categorical(v) => v.push(cell.to_string()),
                ColumnValues::Target(v) => {
                    if cell.is_empty() {
                        return Err(Error::MissingTarget {
                            row,
                            column: column.name.clone(),
                        });
                    }
                    v.push(cell.to_string());
                }
            }
        }
    }

    let table = RawTable::new(positions.into_iter().map(|(_, c)| c).collect())?;
    if table.n_rows() == 0 {
        return Err(Error::Empty("CSV has a header but no data rows".into()));
    }
    Ok(table)
}
