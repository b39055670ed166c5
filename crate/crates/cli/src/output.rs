use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub const SCHEMA: &str = "qwf-output/1";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One CSV cell: integers verbatim, reals with 17 significant digits.
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) => format!("{x:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

pub struct Csv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    /// Key-value layout for scalar reports.
    pub fn key_value(pairs: &[(&str, f64)]) -> Self {
        let mut csv = Csv::new(&["quantity", "value"]);
        for (k, v) in pairs {
            csv.push(vec![Cell::Text(k.to_string()), Cell::Real(*v)]);
        }
        csv
    }
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    schema: &'static str,
    software: Software,
    config: &'a C,
    warnings: &'a [String],
    result: &'a R,
}

#[derive(Serialize)]
struct Software {
    name: &'static str,
    version: &'static str,
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Write `<stem>.json` and `<stem>.csv`; both carry the config echo.
pub fn write_outputs<C: Serialize, R: Serialize>(
    stem: &Path,
    config: &C,
    warnings: &[String],
    result: &R,
    csv: &Csv,
) -> Result<(PathBuf, PathBuf), CliError> {
    let config_json = serde_json::to_string(config).map_err(|e| CliError::Io(e.to_string()))?;
    let json_path = with_ext(stem, "json");
    let envelope = Envelope {
        schema: SCHEMA,
        software: Software {
            name: "qwf",
            version: VERSION,
        },
        config,
        warnings,
        result,
    };
    let mut text =
        serde_json::to_string_pretty(&envelope).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(&json_path, text).map_err(|e| io_err(&json_path, e))?;

    let csv_path = with_ext(stem, "csv");
    let file = File::create(&csv_path).map_err(|e| io_err(&csv_path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# schema={SCHEMA} software=qwf {VERSION}").map_err(|e| io_err(&csv_path, e))?;
    writeln!(w, "# config={config_json}").map_err(|e| io_err(&csv_path, e))?;
    let mut cw = csv::Writer::from_writer(w);
    cw.write_record(&csv.header)
        .map_err(|e| io_err(&csv_path, e))?;
    for row in &csv.rows {
        cw.write_record(row.iter().map(Cell::render))
            .map_err(|e| io_err(&csv_path, e))?;
    }
    cw.flush().map_err(|e| io_err(&csv_path, e))?;
    Ok((json_path, csv_path))
}
