//! Header-row CSV tables of numeric columns.

use std::io::{Read, Write};
use std::path::Path;

use nsgp_core::{Location, Matrix, RegressionDesign};

use crate::error::{CliError, CliResult};

/// A parsed numeric table. Row numbers in error messages count the header
/// as line 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(headers: Vec<String>) -> Self {
        Self {
            headers,
            rows: Vec::new(),
        }
    }

    pub fn read_path(path: &Path) -> CliResult<Self> {
        let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
        Self::read(file).map_err(|e| match e {
            CliError::Data(msg) => CliError::Data(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn read<R: Read>(input: R) -> CliResult<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(input);
        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| CliError::Data(format!("cannot read header: {e}")))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        if headers.is_empty() || headers.iter().any(|h| h.is_empty()) {
            return Err(CliError::Data("header has empty column names".into()));
        }
        for (i, h) in headers.iter().enumerate() {
            if headers[..i].contains(h) {
                return Err(CliError::Data(format!("duplicate column '{h}'")));
            }
        }
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| CliError::Data(format!("row {line}: {e}")))?;
            let mut row = Vec::with_capacity(headers.len());
            for (field, name) in record.iter().zip(&headers) {
                let field = field.trim();
                if field.is_empty() {
                    return Err(CliError::Data(format!(
                        "row {line}: missing value in column '{name}'"
                    )));
                }
                let v: f64 = field.parse().map_err(|_| {
                    CliError::Data(format!(
                        "row {line}: column '{name}': '{field}' is not a number"
                    ))
                })?;
                if !v.is_finite() {
                    return Err(CliError::Data(format!(
                        "row {line}: missing value in column '{name}'"
                    )));
                }
                row.push(v);
            }
            rows.push(row);
        }
        Ok(Self { headers, rows })
    }

    pub fn write<W: Write>(&self, out: W) -> CliResult<()> {
        let mut w = csv::Writer::from_writer(out);
        let map = |e: csv::Error| CliError::Data(format!("cannot write CSV: {e}"));
        w.write_record(&self.headers).map_err(map)?;
        for row in &self.rows {
            // Display for f64 is the shortest string that parses back exactly
            w.write_record(row.iter().map(|v| v.to_string()))
                .map_err(map)?;
        }
        w.flush()
            .map_err(|e| CliError::Data(format!("cannot write CSV: {e}")))?;
        Ok(())
    }

    pub fn to_bytes(&self) -> CliResult<Vec<u8>> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(buf)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> CliResult<usize> {
        self.headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Data(format!(
                "column '{name}' not found (have: {})",
                self.headers.join(", ")
            ))
        })
    }

    pub fn column(&self, name: &str) -> CliResult<Vec<f64>> {
        let j = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn select_rows(&self, idx: &[usize]) -> Table {
        Table {
            headers: self.headers.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

/// Column roles used to turn a table into model inputs.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Columns {
    #[serde(default = "default_coords")]
    pub coords: [String; 2],
    /// Mean-model covariates; the intercept is always included.
    #[serde(default)]
    pub covariates: Vec<String>,
    /// Response columns, one per replicate. Empty selects every column that
    /// is neither a coordinate nor a covariate.
    #[serde(default)]
    pub responses: Vec<String>,
}

fn default_coords() -> [String; 2] {
    ["x".to_string(), "y".to_string()]
}

impl Default for Columns {
    fn default() -> Self {
        Self {
            coords: default_coords(),
            covariates: Vec::new(),
            responses: Vec::new(),
        }
    }
}

impl Columns {
    /// Responses with the empty-list default resolved against `table`.
    pub fn resolve(&self, table: &Table) -> CliResult<Columns> {
        let mut out = self.clone();
        if out.responses.is_empty() {
            out.responses = table
                .headers
                .iter()
                .filter(|h| !self.coords.contains(h) && !self.covariates.contains(h))
                .cloned()
                .collect();
            if out.responses.is_empty() {
                return Err(CliError::Data("no response columns in the data".into()));
            }
        }
        Ok(out)
    }
}

/// Locations, design and responses from a table.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub coords: Vec<Location>,
    pub design: RegressionDesign,
    pub data: Matrix,
}

pub fn locations(table: &Table, columns: &Columns) -> CliResult<Vec<Location>> {
    let xs = table.column(&columns.coords[0])?;
    let ys = table.column(&columns.coords[1])?;
    Ok(xs
        .into_iter()
        .zip(ys)
        .map(|(x, y)| Location::new(x, y))
        .collect())
}

/// `[1, covariates...]` per row.
pub fn design_matrix(table: &Table, columns: &Columns) -> CliResult<Matrix> {
    let cols: Vec<usize> = columns
        .covariates
        .iter()
        .map(|c| table.column_index(c))
        .collect::<CliResult<_>>()?;
    let p = cols.len() + 1;
    let mut values = Vec::with_capacity(table.len() * p);
    for row in &table.rows {
        values.push(1.0);
        values.extend(cols.iter().map(|&j| row[j]));
    }
    Ok(Matrix::from_vec(table.len(), p, values)?)
}

impl Dataset {
    /// `columns` must already be resolved.
    pub fn from_table(table: &Table, columns: &Columns) -> CliResult<Self> {
        if table.is_empty() {
            return Err(CliError::Data("the data file has no rows".into()));
        }
        let coords = locations(table, columns)?;
        let design = RegressionDesign::new(design_matrix(table, columns)?)
            .map_err(|e| CliError::Data(format!("mean model: {e}")))?;
        let resp: Vec<usize> = columns
            .responses
            .iter()
            .map(|c| table.column_index(c))
            .collect::<CliResult<_>>()?;
        let mut values = Vec::with_capacity(table.len() * resp.len());
        for row in &table.rows {
            values.extend(resp.iter().map(|&j| row[j]));
        }
        let data = Matrix::from_vec(table.len(), resp.len(), values)?;
        Ok(Self {
            coords,
            design,
            data,
        })
    }
}
