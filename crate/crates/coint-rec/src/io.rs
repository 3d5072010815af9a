//! File formats: versioned CSV with a commented provenance header, JSON
//! documents embedding the resolved config, and numeric CSV input.

use std::fs;
use std::io::Write;
use std::path::Path;

use coint_rec_core::dgp::SimulatedSample;
use coint_rec_core::Matrix;
use serde_json::{json, Value};

use crate::config::ResolvedConfig;
use crate::error::{AppError, AppResult};
use crate::experiments::ReplicationRecord;

pub const SCHEMA_VERSION: u32 = 1;

/// Comment lines heading every CSV file.
pub fn csv_preamble(kind: &str, resolved: &ResolvedConfig) -> AppResult<String> {
    let config =
        serde_json::to_string(&resolved.config).map_err(|e| AppError::Input(e.to_string()))?;
    let overrides =
        serde_json::to_string(&resolved.overrides).map_err(|e| AppError::Input(e.to_string()))?;
    Ok(format!(
        "# schema={SCHEMA_VERSION}\n# kind={kind}\n# master_seed={}\n# overrides={overrides}\n# config={config}\n",
        resolved.config.master_seed
    ))
}

fn csv_error(e: csv::Error) -> AppError {
    AppError::Input(format!("csv: {e}"))
}

/// Records as CSV, one row per replication, after the preamble.
pub fn records_csv(
    kind: &str,
    resolved: &ResolvedConfig,
    records: &[ReplicationRecord],
) -> AppResult<Vec<u8>> {
    let mut out = csv_preamble(kind, resolved)?.into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        for r in records {
            w.serialize(r).map_err(csv_error)?;
        }
        w.flush().map_err(|e| AppError::io("<records>", e))?;
    }
    Ok(out)
}

/// A simulated sample as CSV with columns `t, y, x_1..x_N`.
pub fn sample_csv(resolved: &ResolvedConfig, sample: &SimulatedSample) -> AppResult<Vec<u8>> {
    let mut out = csv_preamble("sample", resolved)?.into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        let mut header = vec!["t".to_string(), "y".to_string()];
        header.extend((1..=sample.regressors()).map(|j| format!("x_{j}")));
        w.write_record(&header).map_err(csv_error)?;
        for t in 0..sample.horizon() {
            let mut row = vec![(t + 1).to_string(), sample.y[t].to_string()];
            row.extend((0..sample.regressors()).map(|j| sample.x[(t, j)].to_string()));
            w.write_record(&row).map_err(csv_error)?;
        }
        w.flush().map_err(|e| AppError::io("<sample>", e))?;
    }
    Ok(out)
}

/// A JSON document carrying the resolved config alongside `body`.
pub fn document(kind: &str, resolved: &ResolvedConfig, body: Value) -> Value {
    json!({
        "schema": SCHEMA_VERSION,
        "kind": kind,
        "master_seed": resolved.config.master_seed,
        "overrides": resolved.overrides,
        "config": resolved.config,
        "result": body,
    })
}

pub fn to_pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    s.push('\n');
    s
}

pub fn write_file(path: &Path, bytes: &[u8]) -> AppResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| AppError::io(dir.display().to_string(), e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| AppError::io(path.display().to_string(), e))?;
    f.write_all(bytes)
        .map_err(|e| AppError::io(path.display().to_string(), e))
}

/// Flatten scalars of a JSON value into `key,value` CSV rows.
pub fn flat_csv(value: &Value) -> AppResult<Vec<u8>> {
    fn walk(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
        let join = |k: &str| {
            if prefix.is_empty() {
                k.to_string()
            } else {
                format!("{prefix}.{k}")
            }
        };
        match v {
            Value::Object(map) => map.iter().for_each(|(k, v)| walk(&join(k), v, rows)),
            Value::Array(items) => items
                .iter()
                .enumerate()
                .for_each(|(i, v)| walk(&join(&i.to_string()), v, rows)),
            Value::String(s) => rows.push((prefix.to_string(), s.clone())),
            Value::Null => rows.push((prefix.to_string(), String::new())),
            other => rows.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut rows = Vec::new();
    walk("", value, &mut rows);
    let mut out = format!("# schema={SCHEMA_VERSION}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["key", "value"]).map_err(csv_error)?;
        for (k, v) in rows {
            w.write_record([k, v]).map_err(csv_error)?;
        }
        w.flush().map_err(|e| AppError::io("<csv>", e))?;
    }
    Ok(out)
}

/// Numeric table read from CSV; `#` lines are skipped and a non-numeric
/// first row is taken as the header.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub data: Matrix,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.as_ref()?.iter().position(|h| h == name)
    }

    /// The `x_*` columns if present, otherwise the whole table.
    pub fn regressors(&self) -> Matrix {
        let idx: Vec<usize> = match &self.header {
            Some(h) => h
                .iter()
                .enumerate()
                .filter(|(_, n)| n.starts_with("x_"))
                .map(|(i, _)| i)
                .collect(),
            None => Vec::new(),
        };
        if idx.is_empty() {
            self.data.clone()
        } else {
            self.data.select_columns(&idx)
        }
    }
}

pub fn read_table(path: &Path) -> AppResult<Table> {
    let text = fs::read_to_string(path)
        .map_err(|e| AppError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_table(&text)
}

pub fn parse_table(text: &str) -> AppResult<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut header = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if i == 0 => header = Some(rec.iter().map(str::to_string).collect()),
            Err(e) => return Err(AppError::Input(format!("row {}: {e}", i + 1))),
        }
    }
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(AppError::Input(
            "table must be a non-empty rectangle of numbers".into(),
        ));
    }
    let data = Matrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    Ok(Table { header, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_with_header_and_comments() {
        let t = parse_table("# schema=1\nt,y,x_1,x_2\n1,0.5,1,2\n2,1.5,3,4\n").unwrap();
        assert_eq!(t.column_index("y"), Some(1));
        assert_eq!(
            t.regressors(),
            Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0])
        );
    }

    #[test]
    fn bare_matrix() {
        let t = parse_table("1,2\n3,4\n5,6\n").unwrap();
        assert!(t.header.is_none());
        assert_eq!(t.regressors().shape(), (3, 2));
        assert!(parse_table("1,2\n3\n").is_err());
        assert!(parse_table("a,b\n1,x\n").is_err());
    }

    #[test]
    fn flat_csv_paths() {
        let v = json!({"a": 1, "b": {"c": [true, null]}});
        let text = String::from_utf8(flat_csv(&v).unwrap()).unwrap();
        assert!(text.contains("a,1\n"));
        assert!(text.contains("b.c.0,true\n"));
        assert!(text.contains("b.c.1,\n"));
    }
}
