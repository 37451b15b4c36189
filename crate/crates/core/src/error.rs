use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

/// Errors raised by the computational routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// τ outside the open unit interval.
    TauOutOfRange {
        /// Offending value.
        tau: f64,
    },
    /// `n·τ` is an integer (within 1e-9); such orders are not admissible.
    DegenerateTau {
        /// Requested order.
        tau: f64,
        /// Number of observations.
        n: usize,
    },
    /// The regression design admits no unique exact-fit vertex.
    DegenerateDesign {
        /// Observations involved in the tie or singular block.
        indices: Vec<usize>,
    },
    /// The data are not in general position at the solution.
    DegenerateData {
        /// Observations involved in the degeneracy.
        indices: Vec<usize>,
    },
    /// The pivot limit was exceeded.
    NoConvergence {
        /// Number of pivots performed.
        pivots: usize,
    },
    /// Fitted-row block of the gradient conditions is singular.
    SingularFittedBlock,
    /// The stationarity system for the Lagrange multiplier is singular.
    SingularSystem,
    /// Operation needs a larger dimension.
    DimensionTooSmall {
        /// Dimension supplied.
        k: usize,
    },
    /// Vector or matrix dimensions do not agree.
    DimensionMismatch {
        /// Expected dimension.
        expected: usize,
        /// Dimension found.
        found: usize,
    },
    /// A bounded region was required.
    NotBounded,
    /// The region is empty.
    EmptyRegion,
    /// One of the open halfspaces contains no observation.
    EmptyHalfspace,
    /// Outlier offset outside `0..=14`.
    EllOutOfRange {
        /// Offending offset.
        ell: u32,
    },
    /// Sweep arcs failed to tile the circle.
    ArcGap {
        /// Angle at which the gap was detected.
        at: f64,
    },
    /// Regression quantiles were fitted on different data or orders.
    MixedModels,
    /// A coverage bin holds fewer than five observations.
    TooFewPointsPerBin {
        /// Bin index.
        bin: usize,
        /// Number of observations in it.
        count: usize,
    },
    /// Malformed input.
    InvalidInput(&'static str),
    /// Failure while processing one direction of a batch.
    AtDirection {
        /// Position of the direction in the input list.
        index: usize,
        /// Underlying error.
        source: Box<Error>,
    },
}

/// Result alias for this crate.
pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    /// Strips any [`Error::AtDirection`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtDirection { source, .. } => source.root(),
            e => e,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::TauOutOfRange { tau } => write!(f, "tau = {tau} is outside (0, 1)"),
            Error::DegenerateTau { tau, n } => {
                write!(f, "n*tau = {} is an integer (n = {n}, tau = {tau})", *n as f64 * tau)
            }
            Error::DegenerateDesign { indices } => {
                write!(f, "degenerate design, observations {indices:?}")
            }
            Error::DegenerateData { indices } => {
                write!(f, "data not in general position, observations {indices:?}")
            }
            Error::NoConvergence { pivots } => write!(f, "no convergence after {pivots} pivots"),
            Error::SingularFittedBlock => f.write_str("fitted block is singular"),
            Error::SingularSystem => f.write_str("stationarity system is singular"),
            Error::DimensionTooSmall { k } => write!(f, "dimension {k} is too small"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::NotBounded => f.write_str("region is not bounded"),
            Error::EmptyRegion => f.write_str("region is empty"),
            Error::EmptyHalfspace => f.write_str("an open halfspace holds no observation"),
            Error::EllOutOfRange { ell } => write!(f, "outlier offset {ell} outside 0..=14"),
            Error::ArcGap { at } => write!(f, "sweep arcs leave a gap at angle {at}"),
            Error::MixedModels => f.write_str("models disagree on data or tau"),
            Error::TooFewPointsPerBin { bin, count } => {
                write!(f, "bin {bin} holds only {count} observations (need 5)")
            }
            Error::InvalidInput(msg) => f.write_str(msg),
            Error::AtDirection { index, source } => write!(f, "direction #{index}: {source}"),
        }
    }
}

impl core::error::Error for Error {}
