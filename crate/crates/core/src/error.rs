use thiserror::Error;

/// Everything that can go wrong inside the library.
///
/// Numeric payloads are carried as `f64` regardless of the working scalar so
/// the error type stays non-generic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("partition size {k} exceeds the enumeration guard of {max}")]
    SizeGuard { k: usize, max: usize },

    #[error("sequence order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("degenerate measure: variance is {variance}")]
    Degenerate { variance: f64 },

    #[error("measure is not in Q3 (mean {mean}, variance {variance})")]
    NotInQ3 { mean: f64, variance: f64 },

    #[error("Cauchy transform evaluated on the real axis at {re}")]
    RealArgument { re: f64 },

    #[error("Cauchy transform is numerically zero at {re}{im:+}i")]
    VanishingCauchy { re: f64, im: f64 },

    #[error("point {re}{im:+}i is off the working axis")]
    OffAxis { re: f64, im: f64 },

    #[error("F-inversion failed after {iterations} iterations (residual {residual:e})")]
    InversionFailure { iterations: usize, residual: f64 },

    #[error("Newton iterate left the working half-plane at {re}{im:+}i")]
    BranchEscape { re: f64, im: f64 },

    #[error("subordination did not converge after {iterations} iterations (residual {residual:e})")]
    Subordination { iterations: usize, residual: f64 },

    #[error("atomic measures have no density")]
    NoDensity,

    #[error("contraction ratio undefined: reference distance is {distance:e}")]
    UndefinedRatio { distance: f64 },

    #[error("at y = {y}: {source}")]
    AtGridPoint {
        y: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
