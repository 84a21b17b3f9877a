//! Flow records, the dense dataset type, and CSV input/output.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::Schema;

/// One raw cell of a flow record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Number(f64),
    Text(String),
    Missing,
}

impl Cell {
    /// Canonical string form, used when a cell feeds a categorical column.
    pub fn as_category(&self) -> String {
        match self {
            Cell::Number(v) => format_f64(*v),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }
}

/// One network flow row: raw feature cells aligned with a schema, plus the
/// binary label (0 = normal, 1 = attack).
#[derive(Debug, Clone)]
pub struct FlowRecord {
    schema: Arc<Schema>,
    values: Vec<Cell>,
    pub label: u8,
}

impl FlowRecord {
    pub fn new(schema: Arc<Schema>, values: Vec<Cell>, label: u8) -> Result<FlowRecord> {
        if values.len() != schema.columns.len() {
            return Err(Error::InvalidInput(format!(
                "record has {} cells, schema '{}' expects {}",
                values.len(),
                schema.name,
                schema.columns.len()
            )));
        }
        if label > 1 {
            return Err(Error::InvalidInput(format!("label {label} is not binary")));
        }
        Ok(FlowRecord { schema, values, label })
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    /// Cell for a feature name, if the name is in the schema.
    pub fn get(&self, name: &str) -> Option<&Cell> {
        self.schema.column_index(name).map(|i| &self.values[i])
    }

    pub fn cells(&self) -> &[Cell] {
        &self.values
    }
}

/// Per-class record counts `(normal, attack)`.
pub fn class_counts(records: &[FlowRecord]) -> (usize, usize) {
    let attack = records.iter().filter(|r| r.label == 1).count();
    (records.len() - attack, attack)
}

/// How a dataset column is encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnKind {
    Numeric,
    /// Values are indices into the column's category table.
    Categorical,
    /// Indicator column derived from one-hot encoding, values in {0, 1}.
    OneHot,
}

/// Column metadata: name, encoding, and the category table for
/// categorical columns (code -> string, in first-appearance order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
}

impl Column {
    pub fn numeric(name: &str) -> Column {
        Column { name: name.to_string(), kind: ColumnKind::Numeric, categories: Vec::new() }
    }

    pub fn one_hot(name: String) -> Column {
        Column { name, kind: ColumnKind::OneHot, categories: Vec::new() }
    }
}

/// Dense row-major matrix of feature values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    data: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
}

impl Matrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Matrix {
        Matrix { data: vec![0.0; n_rows * n_cols], n_rows, n_cols }
    }

    pub fn from_vec(data: Vec<f64>, n_rows: usize, n_cols: usize) -> Matrix {
        assert_eq!(data.len(), n_rows * n_cols, "matrix shape mismatch");
        Matrix { data, n_rows, n_cols }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Matrix {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in rows {
            assert_eq!(r.len(), n_cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix { data, n_rows, n_cols }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n_cols + j] = v;
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.n_cols, "row width mismatch");
        self.data.extend_from_slice(row);
        self.n_rows += 1;
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cols.max(1)).take(self.n_rows)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Column-wise copy keeping only `keep` (by index, in the given order).
    pub fn select_columns(&self, keep: &[usize]) -> Matrix {
        let mut out = Vec::with_capacity(self.n_rows * keep.len());
        for i in 0..self.n_rows {
            let r = self.row(i);
            for &j in keep {
                out.push(r[j]);
            }
        }
        Matrix::from_vec(out, self.n_rows, keep.len())
    }
}

/// A dense feature matrix with column metadata and aligned labels.
///
/// `row_ids` track row provenance through splitting and sampling so the
/// pipeline can audit that test rows never reach a training stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub columns: Vec<Column>,
    pub x: Matrix,
    pub y: Vec<u8>,
    pub row_ids: Vec<u64>,
    pub label_name: String,
    /// Count of numeric cells that were missing or unparseable and imputed as 0.
    pub imputed_cells: usize,
    /// Set once min-max normalization has been applied; guards re-application.
    pub minmax_applied: bool,
}

/// Row id namespace for rows synthesized by a sampler (never collides with
/// file/generator row ids).
pub const SYNTHETIC_ID_BASE: u64 = 1 << 63;

impl Dataset {
    pub fn new(columns: Vec<Column>, x: Matrix, y: Vec<u8>, label_name: &str) -> Dataset {
        assert_eq!(x.n_rows(), y.len(), "X row count must equal y length");
        assert_eq!(x.n_cols(), columns.len(), "X column count must equal columns length");
        let row_ids = (0..y.len() as u64).collect();
        Dataset {
            columns,
            x,
            y,
            row_ids,
            label_name: label_name.to_string(),
            imputed_cells: 0,
            minmax_applied: false,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.x.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.x.n_cols()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// `(normal, attack)` label counts.
    pub fn label_counts(&self) -> (usize, usize) {
        let attack = self.y.iter().filter(|&&l| l == 1).count();
        (self.y.len() - attack, attack)
    }

    /// Label values present, ascending.
    pub fn classes(&self) -> Vec<u8> {
        let (n0, n1) = self.label_counts();
        let mut out = Vec::new();
        if n0 > 0 {
            out.push(0);
        }
        if n1 > 0 {
            out.push(1);
        }
        out
    }

    /// Copy of the rows at `idx`, preserving ids and labels.
    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        let mut x = Matrix {
            data: Vec::with_capacity(idx.len() * self.n_cols()),
            n_rows: 0,
            n_cols: self.n_cols(),
        };
        let mut y = Vec::with_capacity(idx.len());
        let mut ids = Vec::with_capacity(idx.len());
        for &i in idx {
            x.push_row(self.x.row(i));
            y.push(self.y[i]);
            ids.push(self.row_ids[i]);
        }
        Dataset {
            columns: self.columns.clone(),
            x,
            y,
            row_ids: ids,
            label_name: self.label_name.clone(),
            imputed_cells: 0,
            minmax_applied: self.minmax_applied,
        }
    }

    /// Copy keeping only the named columns, in the given order.
    pub fn select_columns_by_name(&self, names: &[String]) -> Result<Dataset> {
        let mut keep = Vec::with_capacity(names.len());
        for n in names {
            let i = self
                .column_index(n)
                .ok_or_else(|| Error::Schema(format!("unknown column '{n}'")))?;
            keep.push(i);
        }
        Ok(Dataset {
            columns: keep.iter().map(|&i| self.columns[i].clone()).collect(),
            x: self.x.select_columns(&keep),
            y: self.y.clone(),
            row_ids: self.row_ids.clone(),
            label_name: self.label_name.clone(),
            imputed_cells: self.imputed_cells,
            minmax_applied: self.minmax_applied,
        })
    }

    /// Verify no cell is NaN or infinite.
    pub fn check_finite(&self) -> Result<()> {
        if let Some(pos) = self.x.as_slice().iter().position(|v| !v.is_finite()) {
            let (r, c) = (pos / self.n_cols(), pos % self.n_cols());
            return Err(Error::InvalidInput(format!(
                "non-finite value at row {r}, column '{}'",
                self.columns[c].name
            )));
        }
        Ok(())
    }
}

/// Shortest decimal form of `v` that parses back to the same bits.
pub fn format_f64(v: f64) -> String {
    format!("{v}")
}

fn parse_cell(raw: &str) -> Cell {
    let t = raw.trim();
    if t.is_empty() {
        return Cell::Missing;
    }
    if let Ok(v) = t.parse::<f64>() {
        return Cell::Number(v);
    }
    // Bot-IoT port columns mix decimal and hex encodings.
    if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        if !hex.is_empty() {
            if let Ok(v) = u64::from_str_radix(hex, 16) {
                return Cell::Number(v as f64);
            }
        }
    }
    Cell::Text(t.to_string())
}

fn parse_label(raw: &str, line: usize) -> Result<u8> {
    match raw.trim() {
        "0" | "0.0" => Ok(0),
        "1" | "1.0" => Ok(1),
        other => Err(Error::Row { line, msg: format!("label '{other}' is not binary") }),
    }
}

/// Load a CSV of flow records against a schema.
///
/// The header must contain every schema feature column and the label column
/// (matched case-insensitively); extra columns in the schema's `ignored`
/// list are skipped, any other unknown column is an error. Hex-encoded
/// ports decode to integers, empty cells become [`Cell::Missing`].
pub fn load_csv(path: &Path, schema: &Arc<Schema>) -> Result<Vec<FlowRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();

    let lower: Vec<String> = headers.iter().map(|h| h.trim().to_lowercase()).collect();
    let find = |name: &str| -> Option<usize> { lower.iter().position(|h| h == &name.to_lowercase()) };

    let label_idx = find(&schema.label_column).ok_or_else(|| {
        Error::Schema(format!(
            "label column '{}' not found in header of {}",
            schema.label_column,
            path.display()
        ))
    })?;

    let mut feature_idx = Vec::with_capacity(schema.columns.len());
    let mut missing = Vec::new();
    for col in &schema.columns {
        match find(col) {
            Some(i) => feature_idx.push(i),
            None => missing.push(col.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Schema(format!(
            "header is missing schema columns: {}",
            missing.join(", ")
        )));
    }

    for (i, h) in headers.iter().enumerate() {
        if i == label_idx || feature_idx.contains(&i) {
            continue;
        }
        let h_lower = h.trim().to_lowercase();
        if !schema.ignored.iter().any(|ig| ig.to_lowercase() == h_lower) {
            return Err(Error::Schema(format!("unexpected column '{h}' in header")));
        }
    }

    let expected_arity = headers.len();
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2; // 1-based, after the header
        let row = row.map_err(|e| Error::Row { line, msg: e.to_string() })?;
        if row.len() != expected_arity {
            return Err(Error::Row {
                line,
                msg: format!("expected {expected_arity} fields, got {}", row.len()),
            });
        }
        let label = parse_label(&row[label_idx], line)?;
        let values = feature_idx.iter().map(|&j| parse_cell(&row[j])).collect();
        records.push(FlowRecord { schema: Arc::clone(schema), values, label });
    }
    Ok(records)
}

/// Assemble records into a dense dataset.
///
/// Numeric columns take cell values directly; missing or textual cells in a
/// numeric column are imputed as 0 and counted. Categorical columns are
/// string-coded against a per-column table built in first-appearance order,
/// pending one-hot encoding.
pub fn to_dataset(records: &[FlowRecord], schema: &Arc<Schema>) -> Result<Dataset> {
    if records.is_empty() {
        return Err(Error::InvalidInput("cannot build a dataset from zero records".into()));
    }
    for (i, r) in records.iter().enumerate() {
        if r.schema.name != schema.name || r.schema.columns != schema.columns {
            return Err(Error::Schema(format!(
                "record {i} was built against schema '{}', expected '{}'",
                r.schema.name, schema.name
            )));
        }
    }

    let n_cols = schema.columns.len();
    let is_cat: Vec<bool> =
        schema.columns.iter().map(|c| schema.categorical.contains(c)).collect();

    let mut columns: Vec<Column> = schema
        .columns
        .iter()
        .zip(&is_cat)
        .map(|(name, &cat)| Column {
            name: name.clone(),
            kind: if cat { ColumnKind::Categorical } else { ColumnKind::Numeric },
            categories: Vec::new(),
        })
        .collect();

    let mut code_maps: Vec<HashMap<String, usize>> = vec![HashMap::new(); n_cols];
    let mut data = Vec::with_capacity(records.len() * n_cols);
    let mut y = Vec::with_capacity(records.len());
    let mut imputed = 0usize;

    for r in records {
        for (j, cell) in r.values.iter().enumerate() {
            if is_cat[j] {
                let key = cell.as_category();
                let next = columns[j].categories.len();
                let code = *code_maps[j].entry(key.clone()).or_insert_with(|| {
                    columns[j].categories.push(key);
                    next
                });
                data.push(code as f64);
            } else {
                match cell {
                    Cell::Number(v) if v.is_finite() => data.push(*v),
                    _ => {
                        imputed += 1;
                        data.push(0.0);
                    }
                }
            }
        }
        y.push(r.label);
    }

    let n_rows = records.len();
    let mut d = Dataset::new(columns, Matrix::from_vec(data, n_rows, n_cols), y, &schema.label_column);
    d.imputed_cells = imputed;
    Ok(d)
}

/// Write a dataset as CSV: feature columns (categorical cells decoded back
/// to their strings) followed by the label column.
pub fn write_csv(d: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = d.columns.iter().map(|c| c.name.as_str()).collect();
    header.push(&d.label_name);
    w.write_record(&header)?;

    let mut buf = Vec::with_capacity(header.len());
    for i in 0..d.n_rows() {
        buf.clear();
        for (j, col) in d.columns.iter().enumerate() {
            let v = d.x.get(i, j);
            match col.kind {
                ColumnKind::Categorical => {
                    let code = v as usize;
                    let s = col.categories.get(code).cloned().unwrap_or_default();
                    buf.push(s);
                }
                _ => buf.push(format_f64(v)),
            }
        }
        buf.push(format!("{}", d.y[i]));
        w.write_record(&buf)?;
    }
    w.flush()?;
    Ok(())
}

/// Convenience: load a CSV straight into a dataset.
pub fn load_dataset(path: &Path, schema: &Arc<Schema>) -> Result<Dataset> {
    let records = load_csv(path, schema)?;
    to_dataset(&records, schema)
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n0, n1) = self.label_counts();
        write!(
            f,
            "{} rows x {} columns ({} normal / {} attack)",
            self.n_rows(),
            self.n_cols(),
            n0,
            n1,
        )
    }
}
