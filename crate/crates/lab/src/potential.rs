//! Builtin potentials and the tabulated-potential file format.
//!
//! A tabulated potential holds one real per line: the values at the `m + 2`
//! grid nodes `a, a + step, ..., b`, so the file fixes `m`. Blank lines are
//! ignored.

use std::path::Path;

use grushin::bvp1d::{Discretization, Potential};

use crate::CliError;

pub const BUILTIN: &[&str] = &["zero", "harmonic", "well"];

pub fn builtin(name: &str) -> Result<Potential, CliError> {
    match name {
        "zero" => Ok(Potential::Zero),
        "harmonic" => Ok(Potential::Harmonic),
        "well" => Ok(Potential::Well),
        other => Err(CliError::Usage(format!("unknown potential {other:?}"))),
    }
}

pub fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        match t.parse::<f64>() {
            Ok(x) if x.is_finite() => out.push(x),
            _ => return Err(CliError::Usage(format!("potential line {}: {t:?} is not a finite real", i + 1))),
        }
    }
    if out.len() < 3 {
        return Err(CliError::Usage("a tabulated potential needs at least 3 values".into()));
    }
    Ok(out)
}

pub fn read_values(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_values(&text)
}

/// The file at `file` when it is nonempty, else the builtin `name` sampled
/// with `m` interior nodes.
pub fn discretize(name: &str, file: &str, a: f64, b: f64, m: usize) -> Result<Discretization, CliError> {
    if file.is_empty() {
        Ok(builtin(name)?.discretize(a, b, m)?)
    } else {
        Ok(Discretization::from_values(a, b, read_values(Path::new(file))?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_skip_blank_lines() {
        assert_eq!(parse_values("1\n\n 2.5 \n-3\n").unwrap(), vec![1.0, 2.5, -3.0]);
    }

    #[test]
    fn rejects_short_or_malformed_tables() {
        assert!(parse_values("1\n2\n").is_err());
        assert!(parse_values("1\nx\n3\n").is_err());
        assert!(parse_values("1\nnan\n3\n").is_err());
        assert!(builtin("cubic").is_err());
    }

    #[test]
    fn file_fixes_the_grid() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        std::fs::write(&path, "0\n1\n2\n3\n4\n").unwrap();
        let d = discretize("zero", path.to_str().unwrap(), 0.0, 1.0, 99).unwrap();
        assert_eq!(d.m(), 3);
        assert_eq!(d.potential(), &[0.0, 1.0, 2.0, 3.0, 4.0]);
    }
}
