//! Typed parameter tables shared by the command line and config files.

use std::collections::BTreeMap;

use crate::report::ParamValue;
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ParamKind {
    Int,
    Float,
    /// Free text; an empty default means "unset".
    Text,
    Choice(&'static [&'static str]),
    /// Comma-separated reals.
    FloatList,
    /// Comma-separated nonnegative integers.
    IntList,
}

#[derive(Clone, Copy, Debug)]
pub struct ParamSpec {
    pub name: &'static str,
    pub kind: ParamKind,
    pub default: &'static str,
    pub help: &'static str,
}

pub const fn param(name: &'static str, kind: ParamKind, default: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec { name, kind, default, help }
}

fn bad(spec: &ParamSpec, raw: &str) -> CliError {
    CliError::Usage(format!("invalid value {raw:?} for --{}", spec.name))
}

fn parse_list<T: std::str::FromStr>(spec: &ParamSpec, raw: &str) -> Result<Vec<T>, CliError> {
    raw.split(',').map(|s| s.trim().parse::<T>().map_err(|_| bad(spec, raw))).collect()
}

/// Parses a raw string into the canonical value for `spec`.
pub fn parse_raw(spec: &ParamSpec, raw: &str) -> Result<ParamValue, CliError> {
    match spec.kind {
        ParamKind::Int => raw.trim().parse::<i64>().map(ParamValue::Int).map_err(|_| bad(spec, raw)),
        ParamKind::Float => match raw.trim().parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(ParamValue::Float(x)),
            _ => Err(bad(spec, raw)),
        },
        ParamKind::Text => Ok(ParamValue::Text(raw.to_string())),
        ParamKind::Choice(options) => {
            if options.contains(&raw) {
                Ok(ParamValue::Text(raw.to_string()))
            } else {
                Err(CliError::Usage(format!("--{} must be one of {}", spec.name, options.join(", "))))
            }
        }
        ParamKind::FloatList => {
            let v: Vec<f64> = parse_list(spec, raw)?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(bad(spec, raw));
            }
            Ok(ParamValue::Text(raw.to_string()))
        }
        ParamKind::IntList => {
            parse_list::<usize>(spec, raw)?;
            Ok(ParamValue::Text(raw.to_string()))
        }
    }
}

fn normalize(spec: &ParamSpec, v: &ParamValue) -> Result<ParamValue, CliError> {
    match (spec.kind, v) {
        (ParamKind::Int, ParamValue::Int(_)) => Ok(v.clone()),
        (ParamKind::Float, ParamValue::Int(i)) => Ok(ParamValue::Float(*i as f64)),
        (ParamKind::Float, ParamValue::Float(_)) => Ok(v.clone()),
        (_, ParamValue::Text(s)) => parse_raw(spec, s),
        (ParamKind::FloatList, ParamValue::Float(x)) => Ok(ParamValue::Text(x.to_string())),
        (ParamKind::FloatList | ParamKind::IntList, ParamValue::Int(i)) => Ok(ParamValue::Text(i.to_string())),
        _ => Err(CliError::Usage(format!("wrong type for parameter {:?}", spec.name))),
    }
}

/// Fully resolved parameters: every key of the table, nothing else.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    values: BTreeMap<String, ParamValue>,
}

impl Params {
    /// Fills defaults and rejects keys absent from `specs`.
    pub fn resolve(specs: &[ParamSpec], given: &BTreeMap<String, ParamValue>) -> Result<Params, CliError> {
        if let Some(k) = given.keys().find(|k| !specs.iter().any(|s| s.name == k.as_str())) {
            return Err(CliError::Usage(format!("unknown parameter {k:?}")));
        }
        let mut values = BTreeMap::new();
        for s in specs {
            let v = match given.get(s.name) {
                Some(v) => normalize(s, v)?,
                None => parse_raw(s, s.default)?,
            };
            values.insert(s.name.to_string(), v);
        }
        Ok(Params { values })
    }

    pub fn into_map(self) -> BTreeMap<String, ParamValue> {
        self.values
    }

    fn get(&self, name: &str) -> &ParamValue {
        self.values.get(name).unwrap_or_else(|| panic!("parameter {name} missing from its table"))
    }

    pub fn int(&self, name: &str) -> i64 {
        match self.get(name) {
            ParamValue::Int(i) => *i,
            other => panic!("parameter {name} is not an integer: {other:?}"),
        }
    }

    /// A nonnegative integer parameter.
    pub fn count(&self, name: &str) -> Result<usize, CliError> {
        usize::try_from(self.int(name)).map_err(|_| CliError::Usage(format!("--{name} must be nonnegative")))
    }

    pub fn float(&self, name: &str) -> f64 {
        match self.get(name) {
            ParamValue::Float(x) => *x,
            ParamValue::Int(i) => *i as f64,
            other => panic!("parameter {name} is not a number: {other:?}"),
        }
    }

    pub fn text(&self, name: &str) -> &str {
        match self.get(name) {
            ParamValue::Text(s) => s,
            other => panic!("parameter {name} is not text: {other:?}"),
        }
    }

    pub fn floats(&self, name: &str) -> Vec<f64> {
        self.text(name).split(',').map(|s| s.trim().parse().expect("validated list")).collect()
    }

    pub fn counts(&self, name: &str) -> Vec<usize> {
        self.text(name).split(',').map(|s| s.trim().parse().expect("validated list")).collect()
    }
}
