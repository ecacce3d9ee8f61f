//! Table ingestion: RFC 4180 CSV with a header row, and the JSON form
//! `{"columns": [...], "rows": [[...], ...]}`.

use std::path::Path;

use thiserror::Error;

use crate::table::{Table, TableError};
use crate::value::Value;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("csv input has no header row")]
    MissingHeader,
    #[error("json table: {0}")]
    Json(String),
    #[error("json table row {row}, column {col}: {message}")]
    JsonCell {
        row: usize,
        col: usize,
        message: String,
    },
    #[error(transparent)]
    Table(#[from] TableError),
}

pub fn read_csv_str(text: &str) -> Result<Table, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.is_empty() {
        return Err(IngestError::MissingHeader);
    }
    let columns: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        rows.push(rec.iter().map(Value::infer).collect());
    }
    Ok(Table::new(columns, rows)?)
}

fn csv_err(e: csv::Error) -> IngestError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    let message = match e.kind() {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => format!("expected {expected_len} fields, found {len}"),
        _ => e.to_string(),
    };
    IngestError::Csv { line, message }
}

pub fn read_json_table(v: &serde_json::Value) -> Result<Table, IngestError> {
    let obj = v
        .as_object()
        .ok_or_else(|| IngestError::Json("expected an object with `columns` and `rows`".into()))?;
    let columns = obj
        .get("columns")
        .and_then(|c| c.as_array())
        .ok_or_else(|| IngestError::Json("missing `columns` array".into()))?
        .iter()
        .map(|c| {
            c.as_str()
                .map(str::to_string)
                .ok_or_else(|| IngestError::Json(format!("column name {c} is not a string")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let raw_rows = obj
        .get("rows")
        .and_then(|r| r.as_array())
        .ok_or_else(|| IngestError::Json("missing `rows` array".into()))?;
    let mut rows = Vec::with_capacity(raw_rows.len());
    for (i, r) in raw_rows.iter().enumerate() {
        let cells = r
            .as_array()
            .ok_or_else(|| IngestError::Json(format!("row {i} is not an array")))?;
        let row = cells
            .iter()
            .enumerate()
            .map(|(j, c)| {
                Value::from_json(c).map_err(|message| IngestError::JsonCell {
                    row: i,
                    col: j,
                    message,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(Table::new(columns, rows)?)
}

/// Reads a table file, choosing the format from the extension (`.json`
/// means the JSON form, anything else is CSV).
pub fn read_table_file(path: &Path) -> Result<Table, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| IngestError::Json(e.to_string()))?;
        read_json_table(&v)
    } else {
        read_csv_str(&text)
    }
}

pub fn write_csv(t: &Table) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    // writing into a Vec cannot fail
    w.write_record(t.columns()).unwrap();
    for r in t.rows() {
        w.write_record(r.iter().map(|v| if v.is_null() { String::new() } else { v.to_string() }))
            .unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_infers_types() {
        let t = read_csv_str("ID,Cond,Gender,When\n1,1.0,M,2020-01-02\n2,,F,x\n").unwrap();
        assert_eq!(t.columns(), ["ID", "Cond", "Gender", "When"]);
        assert_eq!(t.rows()[0][1], Value::num(1.0));
        assert!(t.rows()[1][1].is_null());
        assert_eq!(t.rows()[0][3].kind_name(), "datetime");
        assert_eq!(t.rows()[1][3].kind_name(), "text");
    }

    #[test]
    fn ragged_csv_reports_line() {
        let err = read_csv_str("a,b\n1,2\n3\n").unwrap_err();
        match err {
            IngestError::Csv { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("expected 2"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_round_trip() {
        let t = read_csv_str("a,b\n1,\"x,y\"\n2.5,\n").unwrap();
        assert_eq!(read_csv_str(&write_csv(&t)).unwrap(), t);
    }

    #[test]
    fn json_table() {
        let v = serde_json::json!({"columns": ["a", "b"], "rows": [[1, "M"], [null, "7"]]});
        let t = read_json_table(&v).unwrap();
        assert_eq!(t.rows()[1][1], Value::num(7.0));
        let bad = serde_json::json!({"columns": ["a"], "rows": [[[1]]]});
        assert!(matches!(
            read_json_table(&bad),
            Err(IngestError::JsonCell { row: 0, col: 0, .. })
        ));
        let dup = serde_json::json!({"columns": ["a", "a"], "rows": []});
        assert!(read_json_table(&dup).is_err());
    }
}
