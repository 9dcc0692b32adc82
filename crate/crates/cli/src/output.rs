use std::io::Write;

use serde::Serialize;

use crate::input::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn from_flags(json: bool) -> Self {
        if json {
            Format::Json
        } else {
            Format::Csv
        }
    }
}

#[derive(Serialize)]
struct Document<'a, R: Serialize> {
    rows: &'a [R],
    warnings: &'a [String],
}

/// Writes `rows` as CSV with a header line, or as a JSON document
/// `{"rows": [...], "warnings": [...]}`.
pub fn emit<R: Serialize, W: Write>(out: W, format: Format, rows: &[R], warnings: &[String]) -> Result<(), Failure> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, &Document { rows, warnings })?;
            writeln!(out)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
pub struct SpectrumRow {
    pub n: usize,
    pub omega: Option<f64>,
    pub lambda: f64,
    pub multiplicity: usize,
    pub generic: Option<bool>,
    pub fully_supported: Option<bool>,
}

#[derive(Serialize)]
pub struct ScanRow {
    pub omega: f64,
    pub det: f64,
}

#[derive(Serialize)]
pub struct GenericRow {
    pub n: usize,
    pub omega: f64,
    pub lambda: f64,
    pub multiplicity: usize,
    pub generic: bool,
    pub fully_supported: bool,
    pub min_vertex_ratio: f64,
    pub min_edge_ratio: f64,
    pub limit_distance: Option<f64>,
}

#[derive(Serialize)]
pub struct NodalCsvRow {
    pub n: Option<usize>,
    pub omega: f64,
    pub nu: Option<usize>,
    pub ratio: Option<f64>,
    pub flags: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_leaves_missing_values_empty() {
        let rows = [SpectrumRow {
            n: 1,
            omega: None,
            lambda: -0.5,
            multiplicity: 1,
            generic: None,
            fully_supported: Some(true),
        }];
        let mut buf = Vec::new();
        emit(&mut buf, Format::Csv, &rows, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "n,omega,lambda,multiplicity,generic,fully_supported\n1,,-0.5,1,,true\n"
        );
    }

    #[test]
    fn json_wraps_rows_and_warnings() {
        let rows = [ScanRow { omega: 1.0, det: 0.25 }];
        let mut buf = Vec::new();
        emit(&mut buf, Format::Json, &rows, &["w".to_string()]).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["rows"][0]["det"], 0.25);
        assert_eq!(v["warnings"][0], "w");
    }
}
