use core::fmt;

/// Every failure the library can signal.
///
/// Variants carry the number that triggered the failure so callers can
/// report how far from the threshold the input was.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    DimensionMismatch { expected: (usize, usize), got: (usize, usize) },
    NonFinite,
    SingularMatrix { pivot: f64, tolerance: f64 },
    ConvergenceFailure { iterations: usize },
    NonConvergent { last: (f64, f64), previous: (f64, f64) },
    IllPosed { condition: f64 },
    EffectiveSingular { sigma_min: f64, tolerance: f64 },
    CornerSingular { sigma_min: f64, tolerance: f64 },
    RankAmbiguous { sigma: f64, tolerance: f64 },
    TransferSingular { condition: f64 },
    InnerSingular { condition: f64 },
    ComplementSingular { sigma_min: f64, tolerance: f64 },
    InvalidSplit,
    BasisNotOrthonormal { deviation: f64 },
    OutsideConvergenceRegime { lambda_abs: f64, contraction: f64 },
    ContractionViolated { delta: f64 },
    DegenerateLeadingMatrix { gap: f64 },
    ThresholdOnSingularValue { sigma: f64, h: f64 },
    OnSpectrum { sigma_min: f64 },
    NonInteger { value: (f64, f64) },
    OnContourSingular { node: (f64, f64) },
    IllPosedOnContour { node: (f64, f64), condition: f64 },
    TruncationTooShort { tail_bound: f64 },
    SingularAtNode { t: f64, s: f64 },
    ContractionCertificateFails { t: f64, s: f64, norm: f64 },
    SupportViolation { support: f64, limit: f64 },
    NeumannEigenvalue { z: (f64, f64) },
    InvalidArgument(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Error::*;
        match self {
            DimensionMismatch { expected, got } => write!(
                f,
                "dimension mismatch: expected {}x{}, got {}x{}",
                expected.0, expected.1, got.0, got.1
            ),
            NonFinite => write!(f, "matrix entry is NaN or infinite"),
            SingularMatrix { pivot, tolerance } => {
                write!(f, "singular matrix: pivot {pivot:e} below tolerance {tolerance:e}")
            }
            ConvergenceFailure { iterations } => {
                write!(f, "no convergence after {iterations} iterations")
            }
            NonConvergent { last, previous } => write!(
                f,
                "quadrature did not converge: last {}{:+}i, previous {}{:+}i",
                last.0, last.1, previous.0, previous.1
            ),
            IllPosed { condition } => write!(f, "ill-posed bordered system: condition {condition:e}"),
            EffectiveSingular { sigma_min, tolerance } => write!(
                f,
                "effective Hamiltonian singular: sigma_min {sigma_min:e}, tolerance {tolerance:e}"
            ),
            CornerSingular { sigma_min, tolerance } => write!(
                f,
                "corner block singular: sigma_min {sigma_min:e}, tolerance {tolerance:e}"
            ),
            RankAmbiguous { sigma, tolerance } => write!(
                f,
                "numerical rank ambiguous: singular value {sigma:e} near tolerance {tolerance:e}"
            ),
            TransferSingular { condition } => {
                write!(f, "transferred problem ill posed: condition {condition:e}")
            }
            InnerSingular { condition } => write!(f, "inner system singular: condition {condition:e}"),
            ComplementSingular { sigma_min, tolerance } => write!(
                f,
                "complement block singular: sigma_min {sigma_min:e}, tolerance {tolerance:e}"
            ),
            InvalidSplit => write!(f, "split must be a nonempty proper subset of the indices"),
            BasisNotOrthonormal { deviation } => {
                write!(f, "basis not orthonormal: deviation {deviation:e}")
            }
            OutsideConvergenceRegime { lambda_abs, contraction } => write!(
                f,
                "outside series regime: |lambda| = {lambda_abs}, eps*|EQ| = {contraction}"
            ),
            ContractionViolated { delta } => write!(f, "contraction violated: delta = {delta}"),
            DegenerateLeadingMatrix { gap } => {
                write!(f, "leading 2x2 matrix has a repeated eigenvalue: gap {gap:e}")
            }
            ThresholdOnSingularValue { sigma, h } => {
                write!(f, "singular value {sigma:e} too close to threshold h = {h:e}")
            }
            OnSpectrum { sigma_min } => write!(f, "point lies on the spectrum: sigma_min {sigma_min:e}"),
            NonInteger { value } => {
                write!(f, "count is not an integer: {}{:+}i", value.0, value.1)
            }
            OnContourSingular { node } => {
                write!(f, "family singular at contour node {}{:+}i", node.0, node.1)
            }
            IllPosedOnContour { node, condition } => write!(
                f,
                "bordered system ill-posed at contour node {}{:+}i: condition {condition:e}",
                node.0, node.1
            ),
            TruncationTooShort { tail_bound } => {
                write!(f, "truncation too short: certified tail bound {tail_bound:e}")
            }
            SingularAtNode { t, s } => write!(f, "loop family singular at t = {t}, s = {s}"),
            ContractionCertificateFails { t, s, norm } => write!(
                f,
                "contraction certificate fails at t = {t}, s = {s}: norm {norm:e}"
            ),
            SupportViolation { support, limit } => write!(
                f,
                "Fourier support {support} exceeds the limit {limit}"
            ),
            NeumannEigenvalue { z } => {
                write!(f, "z = {}{:+}i is a Neumann eigenvalue", z.0, z.1)
            }
            InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
