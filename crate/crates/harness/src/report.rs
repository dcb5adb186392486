//! CSV reports and PGM set dumps.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lacunary_core::grid::io::write_pgm;

use crate::pipeline::{Row, RunReport, TIMING_COLUMNS};

/// First line of every report; bump when the columns change.
pub const SCHEMA_LINE: &str = "# report schema 1";

/// The report as CSV text: the schema line, the header, one line per row.
pub fn to_csv(report: &RunReport) -> Result<String> {
    let mut buf = Vec::new();
    writeln!(buf, "{SCHEMA_LINE}")?;
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(Row::columns())?;
        for row in &report.rows {
            w.write_record(row.cells().into_iter().map(|(_, v)| v))?;
        }
        w.flush()?;
    }
    Ok(String::from_utf8(buf)?)
}

/// The CSV with the timing columns removed, for determinism checks.
pub fn without_timing(csv_text: &str) -> Result<String> {
    let mut lines = csv_text.lines();
    let schema = lines.next().unwrap_or_default();
    let body: String = lines.map(|l| format!("{l}\n")).collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers()?.clone();
    let keep: Vec<usize> = (0..header.len()).filter(|&i| !TIMING_COLUMNS.contains(&&header[i])).collect();
    let mut out = Vec::new();
    writeln!(out, "{schema}")?;
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(keep.iter().map(|&i| &header[i]))?;
        for rec in r.records() {
            let rec = rec?;
            w.write_record(keep.iter().map(|&i| &rec[i]))?;
        }
        w.flush()?;
    }
    Ok(String::from_utf8(out)?)
}

/// Writes `report.csv` and any kept sets as `<row>_<stage>.pgm`; returns the CSV path.
pub fn write_report(report: &RunReport, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join("report.csv");
    fs::write(&path, to_csv(report)?).with_context(|| format!("writing {}", path.display()))?;
    for row in &report.rows {
        for (stage, set) in [("omega", &row.omega), ("exceptional", &row.exceptional)] {
            if let Some(set) = set {
                let p = dir.join(format!("{}_{stage}.pgm", row.row));
                let file = File::create(&p).with_context(|| format!("creating {}", p.display()))?;
                write_pgm(set, BufWriter::new(file))?;
            }
        }
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_has_schema_and_header() {
        let text = to_csv(&RunReport::default()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(SCHEMA_LINE));
        assert!(lines.next().unwrap().ends_with("runtime_ms"));
        assert!(lines.next().is_none());
        let stripped = without_timing(&text).unwrap();
        assert!(!stripped.contains("runtime_ms"));
        assert!(stripped.contains("invariants_ok"));
    }

    #[test]
    fn columns_are_unique() {
        let cols = Row::columns();
        let mut sorted = cols.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), cols.len());
    }
}
