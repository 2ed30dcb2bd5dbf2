use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("spline degree must be at least 1")]
    ZeroDegree,
    #[error("knot vector needs at least two entries, got {0}")]
    TooFewKnots(usize),
    #[error("knots must be non-decreasing (knot {index} = {value} is below its predecessor)")]
    KnotsDecreasing { index: usize, value: f64 },
    #[error("non-finite value {value} at position {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("time grid is empty")]
    EmptyGrid,
    #[error("time grid is not strictly increasing at sample {index} (t = {value})")]
    NotIncreasing { index: usize, value: f64 },
    #[error("coefficient vector has length {got}, expected {expected}")]
    CoeffLength { expected: usize, got: usize },
    #[error("sample {index} at t = {time} lies outside the knot span [{start}, {end}]")]
    OutsideKnots {
        index: usize,
        time: f64,
        start: f64,
        end: f64,
    },
    #[error("knot span [{start}, {end}] is not bound to the sample span [{first}, {last}]")]
    Unbound {
        start: f64,
        end: f64,
        first: f64,
        last: f64,
    },
    #[error("interval {0} contains no samples")]
    EmptyInterval(usize),
    #[error("tabulated prototype has {got} values but the grid has {expected} samples")]
    TabulatedLength { expected: usize, got: usize },
    #[error("prototype has {got} samples but the grid has {expected}")]
    SamplesLength { expected: usize, got: usize },
    #[error("signal has {got} values but the grid has {expected} samples")]
    SignalLength { expected: usize, got: usize },
    #[error("invalid grid configuration: {0}")]
    GridConfig(String),
    #[error("normal equations failed; matrix not certified full rank")]
    NormalEquations,
    #[error("design matrix has {rows} rows, right-hand side has {len}")]
    RhsLength { rows: usize, len: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
