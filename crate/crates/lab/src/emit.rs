//! CSV and JSON serialization with atomic writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::report::{Field, Format, Kind, Report};
use crate::CliError;

/// Seventeen significant digits, enough to recover every `f64`.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn header(report: &Report) -> Vec<String> {
    let mut out = Vec::new();
    for c in &report.columns {
        if c.kind == Kind::Complex {
            out.push(format!("{}_re", c.name));
            out.push(format!("{}_im", c.name));
        } else {
            out.push(c.name.clone());
        }
    }
    out
}

fn cells(kind: Kind, f: Option<&Field>, out: &mut Vec<String>) {
    let width = if kind == Kind::Complex { 2 } else { 1 };
    match f {
        Some(Field::Int(i)) => out.push(i.to_string()),
        Some(Field::Real(x)) if kind == Kind::Complex => {
            out.push(format_real(*x));
            out.push(format_real(0.0));
        }
        Some(Field::Real(x)) => out.push(format_real(*x)),
        Some(Field::Complex { re, im }) => {
            out.push(format_real(*re));
            out.push(format_real(*im));
        }
        Some(Field::Text(s)) => out.push(s.clone()),
        Some(Field::Bool(b)) => out.push(b.to_string()),
        Some(Field::Null) | None => out.extend(std::iter::repeat(String::new()).take(width)),
    }
}

pub fn to_csv(report: &Report) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header(report)).map_err(|e| CliError::Io(e.to_string()))?;
    for rec in &report.records {
        let mut row = Vec::new();
        for c in &report.columns {
            cells(c.kind, rec.get(&c.name), &mut row);
        }
        w.write_record(&row).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub fn to_json(report: &Report) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(report).map_err(|e| CliError::Io(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

pub fn parse_json(bytes: &[u8]) -> Result<Report, CliError> {
    serde_json::from_slice(bytes).map_err(|e| CliError::Usage(format!("malformed report: {e}")))
}

pub fn render(report: &Report, format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Csv => to_csv(report),
        Format::Json => to_json(report),
    }
}

/// Writes to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let name = path.file_name().ok_or_else(|| CliError::Io(format!("{}: not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io)
}

/// Renders `report` and writes it to `path`, or to stdout without a path.
pub fn emit(report: &Report, format: Format, path: Option<&Path>) -> Result<(), CliError> {
    let bytes = render(report, format)?;
    match path {
        Some(p) => write_atomic(p, &bytes),
        None => std::io::stdout().write_all(&bytes).map_err(|e| CliError::Io(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::{Outcome, RunConfig};
    use grushin::linops::c;

    fn report(rows: usize) -> Report {
        let mut o = Outcome::new(&[("k", Kind::Int), ("z", Kind::Complex), ("x", Kind::Real)]);
        for i in 0..rows {
            o.push(vec![Field::int(i), Field::complex(c(1.0, -2.0)), Field::real(f64::NAN)]);
        }
        let cfg = RunConfig { subcommand: "t".into(), params: Default::default(), seed: 0, out: None, format: None };
        Report::new(cfg, o)
    }

    #[test]
    fn empty_records_still_emit_the_header() {
        assert_eq!(to_csv(&report(0)).unwrap(), b"k,z_re,z_im,x\n");
    }

    #[test]
    fn complex_cells_split_and_nan_is_empty() {
        let text = String::from_utf8(to_csv(&report(1)).unwrap()).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "0,1.0000000000000000e0,-2.0000000000000000e0,");
    }

    #[test]
    fn real_formatting_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, f64::MAX] {
            assert_eq!(format_real(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_temporary() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        write_atomic(&path, b"old").unwrap();
        write_atomic(&path, b"new").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"new");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(write_atomic(&dir.path().join("missing/r.json"), b"x").is_err());
    }
}
