use std::io::Write;
use std::path::Path;

use hom_witness::homodyne::QuadratureSample;

use crate::error::{CliError, CliResult};

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so a failed run never leaves a partial file behind.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(path, e))?;
    tmp.write_all(contents).map_err(|e| io_err(path, e))?;
    tmp.as_file().sync_all().map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

/// CSV with the given header; rows are already formatted fields.
pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| io_err(path, e))?;
    write_atomic(path, &bytes)
}

/// `x1,x2` records; `{}` formatting round-trips every f64 exactly.
pub fn write_samples(path: &Path, samples: &[QuadratureSample]) -> CliResult<()> {
    write_table(path, &["x1", "x2"], samples.iter().map(|s| vec![s.x1.to_string(), s.x2.to_string()]))
}

pub fn read_samples(path: &Path) -> CliResult<Vec<QuadratureSample>> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    parse_samples(file).map_err(|e| match e {
        CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_samples(reader: impl std::io::Read) -> CliResult<Vec<QuadratureSample>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = r.headers().map_err(|e| CliError::Data(format!("line 1: {e}")))?.clone();
    if header.iter().collect::<Vec<_>>() != ["x1", "x2"] {
        return Err(CliError::Data(format!("line 1: expected header `x1,x2`, found `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Data(format!("line {line}: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(CliError::Data(format!("line {line}: expected 2 fields, found {}", record.len())));
        }
        let field = |i: usize| -> CliResult<f64> {
            let v: f64 = record[i]
                .parse()
                .map_err(|_| CliError::Data(format!("line {line}: `{}` is not a number", &record[i])))?;
            if !v.is_finite() {
                return Err(CliError::Data(format!("line {line}: non-finite value `{}`", &record[i])));
            }
            Ok(v)
        };
        out.push(QuadratureSample { x1: field(0)?, x2: field(1)? });
    }
    if out.is_empty() {
        return Err(CliError::Data("no sample records".into()));
    }
    Ok(out)
}
