use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A space needs at least one point.
    EmptySpace,
    /// Label count and matrix size disagree, or a row has the wrong length.
    NotSquare {
        row: usize,
        len: usize,
        expected: usize,
    },
    DuplicateLabel(String),
    Asymmetric {
        i: usize,
        j: usize,
        forward: f64,
        backward: f64,
    },
    NonZeroDiagonal {
        i: usize,
        value: f64,
    },
    /// Two distinct points at distance zero.
    ZeroDistance {
        i: usize,
        j: usize,
    },
    NonFinite {
        i: usize,
        j: usize,
    },
    NegativeDistance {
        i: usize,
        j: usize,
        value: f64,
    },
    InvalidTolerance {
        rel: f64,
        abs: f64,
    },
    /// The strict-radius relation failed to be an equivalence; `(x, y, z)`
    /// has `x ~ y`, `y ~ z` but not `x ~ z` (or a class/cross-pair mismatch).
    NotUltrametric {
        x: usize,
        y: usize,
        z: usize,
    },
    InvalidExponent(f64),
    InvalidRadius {
        radius: f64,
        outer: f64,
    },
    PointOutOfRange {
        index: usize,
        len: usize,
    },
    TooFewPoints {
        needed: usize,
        got: usize,
    },
    CollapsedPair {
        i: usize,
        j: usize,
    },
    NotInjective {
        target: usize,
    },
    UnknownLabel(String),
    SizeMismatch {
        expected: usize,
        got: usize,
    },
    CapExceeded {
        n: usize,
        cap: usize,
    },
    InvalidBound(f64),
    InvalidSpec(&'static str),
}

impl Error {
    /// Structural problems with an input matrix (as opposed to domain failures).
    pub fn is_shape_error(&self) -> bool {
        matches!(
            self,
            Error::EmptySpace
                | Error::NotSquare { .. }
                | Error::DuplicateLabel(_)
                | Error::Asymmetric { .. }
                | Error::NonZeroDiagonal { .. }
                | Error::ZeroDistance { .. }
                | Error::NonFinite { .. }
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptySpace => write!(f, "space has no points"),
            Error::NotSquare { row, len, expected } => {
                write!(f, "distance matrix is not square: row {row} has {len} entries, expected {expected}")
            }
            Error::DuplicateLabel(l) => write!(f, "duplicate point label {l:?}"),
            Error::Asymmetric {
                i,
                j,
                forward,
                backward,
            } => {
                write!(
                    f,
                    "distance matrix is not symmetric at ({i}, {j}): {forward} vs {backward}"
                )
            }
            Error::NonZeroDiagonal { i, value } => {
                write!(f, "diagonal entry {i} is {value}, expected 0")
            }
            Error::ZeroDistance { i, j } => {
                write!(f, "distinct points {i} and {j} are at distance 0")
            }
            Error::NonFinite { i, j } => write!(f, "distance ({i}, {j}) is not finite"),
            Error::NegativeDistance { i, j, value } => {
                write!(f, "negative distance {value} at ({i}, {j})")
            }
            Error::InvalidTolerance { rel, abs } => {
                write!(f, "tolerances must be non-negative (rel {rel}, abs {abs})")
            }
            Error::NotUltrametric { x, y, z } => {
                write!(
                    f,
                    "space is not ultrametric (points {x}, {y}, {z} break the ball partition)"
                )
            }
            Error::InvalidExponent(p) => write!(f, "p must be >= 1 (got {p})"),
            Error::InvalidRadius { radius, outer } => {
                write!(
                    f,
                    "invalid radii: need 0 <= R <= R' (got R = {radius}, R' = {outer})"
                )
            }
            Error::PointOutOfRange { index, len } => {
                write!(f, "point index {index} out of range for {len} points")
            }
            Error::TooFewPoints { needed, got } => {
                write!(f, "need at least {needed} points, got {got}")
            }
            Error::CollapsedPair { i, j } => {
                write!(f, "map collapses points {i} and {j} to distance 0")
            }
            Error::NotInjective { target } => {
                write!(f, "map is not injective (target {target} hit twice)")
            }
            Error::UnknownLabel(l) => write!(f, "unknown point label {l:?}"),
            Error::SizeMismatch { expected, got } => {
                write!(f, "size mismatch: expected {expected}, got {got}")
            }
            Error::CapExceeded { n, cap } => {
                write!(
                    f,
                    "exact search is capped at {cap} points (space has {n}); use the greedy method"
                )
            }
            Error::InvalidBound(b) => write!(f, "distortion bound must be >= 1 (got {b})"),
            Error::InvalidSpec(msg) => write!(f, "invalid generator spec: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
