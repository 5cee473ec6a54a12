//! CSV input with line-numbered errors and artifact writers that embed the
//! resolved run configuration.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::CliError;

/// Parsed numeric table with the source line of every row.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<Vec<f64>>,
    pub lines: Vec<u64>,
}

/// Reads a headed CSV whose header must equal `expected`. Lines starting
/// with `#` are ignored.
pub fn read_table(path: &Path, expected: &[&str]) -> Result<Table, CliError> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        .clone();
    let names: Vec<&str> = header.iter().collect();
    if names != expected {
        return Err(CliError::Input(format!(
            "{}: line 1: expected header `{}`, found `{}`",
            path.display(),
            expected.join(","),
            names.join(",")
        )));
    }
    let mut columns = vec![Vec::new(); expected.len()];
    let mut lines = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Input(format!("{}: line {line}: {e}", path.display()))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != expected.len() {
            return Err(CliError::Input(format!(
                "{}: line {line}: expected {} fields, found {}",
                path.display(),
                expected.len(),
                record.len()
            )));
        }
        for (col, field) in columns.iter_mut().zip(record.iter()) {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Input(format!("{}: line {line}: `{field}` is not a number", path.display()))
            })?;
            if !v.is_finite() {
                return Err(CliError::Input(format!(
                    "{}: line {line}: non-finite value `{field}`",
                    path.display()
                )));
            }
            col.push(v);
        }
        lines.push(line);
    }
    Ok(Table { columns, lines })
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("serialising {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

/// Writes a CSV whose first line is `# config: <json>`.
pub fn write_csv<C: Serialize>(
    path: &Path,
    config: &C,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<(), CliError> {
    let io_err = |e: std::io::Error| CliError::Io(format!("writing {}: {e}", path.display()));
    let file = fs::File::create(path).map_err(io_err)?;
    let mut out = std::io::BufWriter::new(file);
    let cfg = serde_json::to_string(config)
        .map_err(|e| CliError::Io(format!("serialising config: {e}")))?;
    writeln!(out, "# config: {cfg}").map_err(io_err)?;
    let mut writer = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| CliError::Io(format!("writing {}: {e}", path.display()));
    writer.write_record(header).map_err(csv_err)?;
    for row in rows {
        writer.write_record(&row).map_err(csv_err)?;
    }
    writer.flush().map_err(io_err)
}
