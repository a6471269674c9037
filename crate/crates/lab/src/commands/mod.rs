//! The experiment subcommands. Each one maps resolved parameters and a root
//! seed to an [`Outcome`] whose gates can be recomputed from its records.

pub mod bvp;
pub mod contour;
pub mod spectral;

use grushin::rng::child_seed;

use crate::params::{Params, ParamSpec};
use crate::report::Outcome;
use crate::CliError;

pub type Runner = fn(&Params, u64) -> Result<Outcome, CliError>;

pub struct Command {
    pub name: &'static str,
    pub about: &'static str,
    pub params: &'static [ParamSpec],
    pub run: Runner,
}

pub const COMMANDS: &[Command] = &[
    spectral::JORDAN_CLOUD,
    spectral::JORDAN_SERIES,
    spectral::LIDSKII,
    spectral::PSEUDOSPECTRUM,
    spectral::ESTIMATE_CHECK,
    spectral::MP_CHECK,
    contour::TRACE_COUNT,
    contour::LOOP_IDENTITY,
    contour::POISSON,
    bvp::BVP_N2D,
    bvp::BVP_TRACE,
    spectral::FESHBACH,
    spectral::CIRCULANT,
    contour::OBSTRUCTION,
];

pub fn find(name: &str) -> Option<&'static Command> {
    COMMANDS.iter().find(|c| c.name == name)
}

/// Seed of task `index` within subcommand `name`.
pub fn task_seed(root: u64, name: &str, index: u64) -> u64 {
    child_seed(root, name, index)
}

/// `max / min` of positive values; infinite when any is nonpositive.
pub(crate) fn drift(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if values.is_empty() || !(min > 0.0) {
        return f64::INFINITY;
    }
    max / min
}

/// Largest value, zero for none; NaN is sticky so a failed entry fails the gate.
pub(crate) fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drift_and_sticky_max() {
        assert_eq!(drift(&[2.0, 8.0, 4.0]), 4.0);
        assert!(drift(&[]).is_infinite() && drift(&[1.0, 0.0]).is_infinite());
        assert!(max_of([1.0, f64::NAN, 2.0]).is_nan());
        assert_eq!(max_of(std::iter::empty()), 0.0);
    }

    #[test]
    fn command_names_are_unique() {
        for (i, c) in COMMANDS.iter().enumerate() {
            assert!(COMMANDS[i + 1..].iter().all(|d| d.name != c.name));
            assert_eq!(find(c.name).unwrap().about, c.about);
        }
    }
}
