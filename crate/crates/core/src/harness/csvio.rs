//! CSV emission with a fixed schema and reproducible float formatting.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Column type in a [`Schema`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnType {
    Int,
    Float,
    Str,
}

/// An ordered list of named, typed columns.
#[derive(Debug, Clone)]
pub struct Schema {
    columns: Vec<(String, ColumnType)>,
}

impl Schema {
    pub fn new(columns: &[(&str, ColumnType)]) -> Self {
        Self {
            columns: columns
                .iter()
                .map(|(n, t)| (n.to_string(), *t))
                .collect(),
        }
    }

    pub fn columns(&self) -> &[(String, ColumnType)] {
        &self.columns
    }
}

/// A single CSV cell. `Empty` renders as an empty field under any column type.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Str(String),
    Empty,
}

/// Formats a float with 17 significant digits so parsing recovers the exact
/// bits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn quote(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') || field.contains('\r') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn render(value: &Value) -> String {
    match value {
        Value::Int(i) => i.to_string(),
        Value::Float(f) => format_float(*f),
        Value::Str(s) => quote(s),
        Value::Empty => String::new(),
    }
}

fn check_records(records: &[Vec<Value>], schema: &Schema) -> Result<()> {
    for (row_idx, record) in records.iter().enumerate() {
        if record.len() != schema.columns.len() {
            return Err(Error::SchemaMismatch(format!(
                "row {row_idx} has {} fields, schema has {}",
                record.len(),
                schema.columns.len()
            )));
        }
        for (value, (name, ty)) in record.iter().zip(&schema.columns) {
            let ok = matches!(
                (value, ty),
                (Value::Int(_), ColumnType::Int)
                    | (Value::Float(_), ColumnType::Float)
                    | (Value::Str(_), ColumnType::Str)
                    | (Value::Empty, _)
            );
            if !ok {
                return Err(Error::SchemaMismatch(format!(
                    "row {row_idx}, column `{name}`: value {value:?} does not match {ty:?}"
                )));
            }
        }
    }
    Ok(())
}

/// Validates every record against the schema, then writes header plus rows.
/// Nothing is written if any record mismatches.
pub fn emit_csv(records: &[Vec<Value>], schema: &Schema, path: &Path) -> Result<()> {
    check_records(records, schema)?;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut out = Vec::new();
    let header: Vec<String> = schema.columns.iter().map(|(n, _)| quote(n)).collect();
    writeln!(out, "{}", header.join(",")).expect("vec write");
    for record in records {
        let row: Vec<String> = record.iter().map(render).collect();
        writeln!(out, "{}", row.join(",")).expect("vec write");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        for x in [0.1, 1.0 / 3.0, -2.5e-17, 1e300, std::f64::consts::PI] {
            let s = format_float(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn empty_records_give_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        let schema = Schema::new(&[("a", ColumnType::Int), ("b", ColumnType::Float)]);
        emit_csv(&[], &schema, &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "a,b\n");
    }

    #[test]
    fn schema_mismatch_errors_before_write() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let schema = Schema::new(&[("a", ColumnType::Int)]);
        let records = vec![vec![Value::Int(1)], vec![Value::Str("oops".into())]];
        assert!(emit_csv(&records, &schema, &path).is_err());
        assert!(!path.exists());
    }

    #[test]
    fn strings_are_quoted_when_needed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.csv");
        let schema = Schema::new(&[("s", ColumnType::Str)]);
        let records = vec![
            vec![Value::Str("plain".into())],
            vec![Value::Str("a,b".into())],
            vec![Value::Str("say \"hi\"".into())],
        ];
        emit_csv(&records, &schema, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "s\nplain\n\"a,b\"\n\"say \"\"hi\"\"\"\n");
    }
}
