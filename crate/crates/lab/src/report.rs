//! Run configuration and the report every subcommand produces.

use std::collections::BTreeMap;
use std::path::PathBuf;

use grushin::C64;
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// `csv` for paths ending in `.csv`, `json` otherwise.
    pub fn infer(path: Option<&std::path::Path>) -> Format {
        match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Json,
        }
    }
}

/// A parameter value as it appears on the command line or in a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: String,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}

/// One cell of a record. Non-finite reals are stored as `Null` so that the
/// JSON form round-trips.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Field {
    Null,
    Bool(bool),
    Int(i64),
    Real(f64),
    Complex { re: f64, im: f64 },
    Text(String),
}

impl Field {
    pub fn real(x: f64) -> Field {
        if x.is_finite() {
            Field::Real(x)
        } else {
            Field::Null
        }
    }

    pub fn complex(z: C64) -> Field {
        if z.re.is_finite() && z.im.is_finite() {
            Field::Complex { re: z.re, im: z.im }
        } else {
            Field::Null
        }
    }

    pub fn int(x: impl TryInto<i64>) -> Field {
        x.try_into().map(Field::Int).unwrap_or(Field::Null)
    }

    pub fn text(s: impl Into<String>) -> Field {
        Field::Text(s.into())
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Field::Real(x) => Some(x),
            Field::Int(i) => Some(i as f64),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match *self {
            Field::Int(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_complex(&self) -> Option<C64> {
        match *self {
            Field::Complex { re, im } => Some(C64::new(re, im)),
            Field::Real(x) => Some(C64::new(x, 0.0)),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Int,
    Real,
    Complex,
    Text,
    Bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: Kind,
}

pub type Record = IndexMap<String, Field>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

/// Pass/fail of one gate: `value relation limit`. A missing value fails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub value: Option<f64>,
    pub relation: Relation,
    pub limit: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Gate {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Gate {
        Gate::new(name, value, Relation::AtMost, limit)
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Gate {
        Gate::new(name, value, Relation::AtLeast, limit)
    }

    fn new(name: &str, value: f64, relation: Relation, limit: f64) -> Gate {
        let pass = match relation {
            Relation::AtMost => value <= limit,
            Relation::AtLeast => value >= limit,
        };
        Gate {
            name: name.to_string(),
            value: value.is_finite().then_some(value),
            relation,
            limit,
            pass,
            detail: None,
        }
    }

    pub fn failed(name: &str, detail: impl Into<String>) -> Gate {
        Gate {
            name: name.to_string(),
            value: None,
            relation: Relation::AtMost,
            limit: 0.0,
            pass: false,
            detail: Some(detail.into()),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Gate {
        self.detail = Some(detail.into());
        self
    }
}

/// Columns, records and gates of one experiment.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub columns: Vec<Column>,
    pub records: Vec<Record>,
    pub summary: Vec<Gate>,
}

impl Outcome {
    pub fn new(columns: &[(&str, Kind)]) -> Outcome {
        Outcome {
            columns: columns.iter().map(|&(n, k)| Column { name: n.to_string(), kind: k }).collect(),
            records: Vec::new(),
            summary: Vec::new(),
        }
    }

    /// Appends a record whose fields follow the column order.
    pub fn push(&mut self, fields: Vec<Field>) {
        debug_assert_eq!(fields.len(), self.columns.len());
        let rec = self.columns.iter().map(|c| c.name.clone()).zip(fields).collect();
        self.records.push(rec);
    }

    pub fn gate(&mut self, g: Gate) {
        self.summary.push(g);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub config: RunConfig,
    pub columns: Vec<Column>,
    pub records: Vec<Record>,
    pub summary: Vec<Gate>,
    pub pass: bool,
    pub version: String,
}

impl Report {
    pub fn new(config: RunConfig, outcome: Outcome) -> Report {
        let pass = outcome.summary.iter().all(|g| g.pass);
        Report {
            config,
            columns: outcome.columns,
            records: outcome.records,
            summary: outcome.summary,
            pass,
            version: grushin::VERSION.to_string(),
        }
    }
}
