//! Argument parsing, config resolution and the exit-code contract:
//! 0 when every gate passes, 1 when a gate fails (the report is still
//! written), 2 for usage, config and I/O errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Arg, ArgMatches};

use crate::commands::{find, COMMANDS};
use crate::emit::emit;
use crate::params::{parse_raw, ParamKind, Params};
use crate::report::{Format, Gate, Outcome, Report, RunConfig};
use crate::CliError;

pub const SEED_ENV: &str = "GRUSHIN_SEED";

fn kind_hint(kind: ParamKind) -> &'static str {
    match kind {
        ParamKind::Int => "INT",
        ParamKind::Float => "REAL",
        ParamKind::Text => "TEXT",
        ParamKind::Choice(_) => "CHOICE",
        ParamKind::FloatList => "REALS",
        ParamKind::IntList => "INTS",
    }
}

pub fn command() -> clap::Command {
    let mut app = clap::Command::new("grushin-lab")
        .version(grushin::VERSION)
        .about("Seeded experiments with bordered systems and effective Hamiltonians")
        .arg(Arg::new("seed").long("seed").global(true).value_parser(clap::value_parser!(u64)).help("root seed (GRUSHIN_SEED overrides)"))
        .arg(Arg::new("out").long("out").global(true).value_parser(clap::value_parser!(PathBuf)).help("report path; stdout when absent"))
        .arg(Arg::new("format").long("format").global(true).value_parser(["csv", "json"]).help("report format; inferred from --out"))
        .arg(Arg::new("config").long("config").value_parser(clap::value_parser!(PathBuf)).help("JSON run configuration"));
    for cmd in COMMANDS {
        let mut sub = clap::Command::new(cmd.name).about(cmd.about);
        for p in cmd.params {
            let mut help = p.help.to_string();
            if !p.default.is_empty() {
                help.push_str(&format!(" [default: {}]", p.default));
            }
            if let ParamKind::Choice(options) = p.kind {
                help.push_str(&format!(" [one of: {}]", options.join(", ")));
            }
            sub = sub.arg(Arg::new(p.name).long(p.name).value_name(kind_hint(p.kind)).allow_hyphen_values(true).help(help));
        }
        app = app.subcommand(sub);
    }
    app
}

fn global<'a, T: Clone + Send + Sync + 'static>(top: &'a ArgMatches, sub: Option<&'a ArgMatches>, id: &str) -> Option<T> {
    sub.and_then(|m| m.get_one::<T>(id)).or_else(|| top.get_one::<T>(id)).cloned()
}

/// Seed override from the environment, if set.
fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse().map(Some).map_err(|_| CliError::Usage(format!("{SEED_ENV}={s:?} is not a 64-bit unsigned integer"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Usage(format!("{SEED_ENV}: {e}"))),
    }
}

/// The run configuration named by parsed arguments.
pub fn config_from_matches(top: &ArgMatches) -> Result<RunConfig, CliError> {
    let sub = top.subcommand();
    let mut cfg = match (top.get_one::<PathBuf>("config"), sub) {
        (Some(_), Some(_)) => return Err(CliError::Usage("--config cannot be combined with a subcommand".into())),
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<RunConfig>(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        (None, Some((name, m))) => {
            let cmd = find(name).ok_or_else(|| CliError::Usage(format!("unknown subcommand {name:?}")))?;
            let mut params = BTreeMap::new();
            for p in cmd.params {
                if let Some(raw) = m.get_one::<String>(p.name) {
                    params.insert(p.name.to_string(), parse_raw(p, raw)?);
                }
            }
            RunConfig { subcommand: name.to_string(), params, seed: 0, out: None, format: None }
        }
        (None, None) => return Err(CliError::Usage("a subcommand or --config is required; see --help".into())),
    };
    let sub_m = sub.map(|(_, m)| m);
    if let Some(seed) = global::<u64>(top, sub_m, "seed") {
        cfg.seed = seed;
    }
    if let Some(out) = global::<PathBuf>(top, sub_m, "out") {
        cfg.out = Some(out);
    }
    if let Some(f) = global::<String>(top, sub_m, "format") {
        cfg.format = Some(if f == "csv" { Format::Csv } else { Format::Json });
    }
    if let Some(seed) = env_seed()? {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Runs a configuration: resolves parameters, executes the subcommand and
/// builds the report. A library failure becomes a failed `completed` gate.
pub fn execute(cfg: &RunConfig) -> Result<Report, CliError> {
    let cmd = find(&cfg.subcommand).ok_or_else(|| CliError::Usage(format!("unknown subcommand {:?}", cfg.subcommand)))?;
    let params = Params::resolve(cmd.params, &cfg.params)?;
    let format = cfg.format.unwrap_or_else(|| Format::infer(cfg.out.as_deref()));
    let outcome = match (cmd.run)(&params, cfg.seed) {
        Ok(o) => o,
        Err(CliError::Numerical(e)) => {
            let mut o = Outcome::default();
            o.gate(Gate::failed("completed", e.to_string()));
            o
        }
        Err(e) => return Err(e),
    };
    let echo = RunConfig {
        subcommand: cfg.subcommand.clone(),
        params: params.into_map(),
        seed: cfg.seed,
        out: cfg.out.clone(),
        format: Some(format),
    };
    Ok(Report::new(echo, outcome))
}

fn describe(g: &Gate) -> String {
    let verdict = if g.pass { "PASS" } else { "FAIL" };
    let rel = match g.relation {
        crate::report::Relation::AtMost => "<=",
        crate::report::Relation::AtLeast => ">=",
    };
    let value = g.value.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6e}"));
    let mut line = format!("{verdict} {}: {value} {rel} {:e}", g.name, g.limit);
    if let Some(d) = &g.detail {
        line.push_str(&format!(" ({d})"));
    }
    line
}

fn run_inner<I, T>(argv: I) -> Result<i32, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return Ok(code);
        }
    };
    let cfg = config_from_matches(&matches)?;
    let report = execute(&cfg)?;
    let format = report.config.format.unwrap_or(Format::Json);
    emit(&report, format, report.config.out.as_deref())?;
    for g in &report.summary {
        eprintln!("{}", describe(g));
    }
    Ok(if report.pass { 0 } else { 1 })
}

/// Parses `argv` (program name first), runs and emits; returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match run_inner(argv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("grushin-lab: {e}");
            e.exit_code()
        }
    }
}
