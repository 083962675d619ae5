//! CSV output shared by the command-line tools.
//!
//! Numbers use scientific notation with 17 significant digits so that every
//! value reads back bit-exactly. Files are written to a temporary sibling and
//! renamed into place.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// `{:.16e}` with `nan`, `inf` and `-inf` for the non-finite values.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

pub fn parse_number(s: &str) -> Option<f64> {
    match s.trim() {
        "nan" | "NaN" => Some(f64::NAN),
        t => t.parse().ok(),
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `header` and `rows` to `path` atomically.
pub fn write_rows<R, I>(path: &Path, header: &[&str], rows: R) -> Result<()>
where
    R: IntoIterator<Item = I>,
    I: IntoIterator,
    I::Item: AsRef<[u8]>,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_error(path, e))?;
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(std::io::BufWriter::new(tmp.as_file()));
        let csv_err = |e: csv::Error| io_error(path, e.into());
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| io_error(path, e))?;
    }
    tmp.as_file().sync_all().map_err(|e| io_error(path, e))?;
    tmp.persist(path).map_err(|e| io_error(path, e.error))?;
    Ok(())
}

/// Writes rows of numbers.
pub fn write_numeric(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<()> {
    write_rows(
        path,
        header,
        rows.into_iter()
            .map(|r| r.into_iter().map(format_number).collect::<Vec<_>>()),
    )
}

/// Writes `key,value` pairs.
pub fn write_summary(path: &Path, pairs: &[(&str, f64)]) -> Result<()> {
    write_rows(
        path,
        &["key", "value"],
        pairs
            .iter()
            .map(|(k, v)| [k.to_string(), format_number(*v)]),
    )
}

/// A numeric table read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

/// Reads a table whose fields are all numeric.
pub fn read_numeric(path: &Path) -> Result<Table> {
    let bad = |what: String| {
        io_error(
            path,
            std::io::Error::new(std::io::ErrorKind::InvalidData, what),
        )
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = r
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        rows.push(
            rec.iter()
                .map(|f| parse_number(f).ok_or_else(|| bad(format!("not a number: {f:?}"))))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok(Table { header, rows })
}

/// Reads a `key,value` summary.
pub fn read_summary(path: &Path) -> Result<Vec<(String, f64)>> {
    let bad = |what: String| {
        io_error(
            path,
            std::io::Error::new(std::io::ErrorKind::InvalidData, what),
        )
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let value = rec
                .get(1)
                .and_then(parse_number)
                .ok_or_else(|| bad(format!("{rec:?}")))?;
            Ok((rec.get(0).unwrap_or_default().to_string(), value))
        })
        .collect()
}

/// Writes text atomically.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_error(path, e))?;
    tmp.write_all(text.as_bytes())
        .map_err(|e| io_error(path, e))?;
    tmp.persist(path).map_err(|e| io_error(path, e.error))?;
    Ok(())
}
