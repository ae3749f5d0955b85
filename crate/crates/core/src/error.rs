use thiserror::Error;

/// Errors produced while building, fitting or assessing an interpolant.
#[derive(Debug, Error)]
pub enum RbfError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid user configuration (kernel parameters, optimizer settings, study specs).
    #[error("configuration error: {0}")]
    Config(String),

    /// Two data sites coincide, so the interpolation matrix has two equal rows.
    #[error("degenerate input: points {first} and {second} coincide (separation {separation:e})")]
    DegenerateInput {
        first: usize,
        second: usize,
        separation: f64,
    },

    /// Factorization hit a pivot that is zero relative to the matrix scale.
    #[error("singular system: pivot {pivot:e} at elimination step {index} is below the tolerance{}", hint_suffix(.hint))]
    SingularSystem {
        index: usize,
        pivot: f64,
        hint: Option<&'static str>,
    },

    /// A leave-one-out refit failed.
    #[error("leave-one-out refit without point {left_out} failed: {source}")]
    LeaveOneOut {
        left_out: usize,
        #[source]
        source: Box<RbfError>,
    },

    /// A computed quantity underflowed or overflowed in a way that invalidates the result.
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    /// The symmetric eigensolver did not converge.
    #[error("eigensolver failure: {0}")]
    Eigen(String),

    /// Malformed text input.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn hint_suffix(hint: &Option<&'static str>) -> String {
    match hint {
        Some(h) => format!(" ({h})"),
        None => String::new(),
    }
}

impl RbfError {
    /// True for failures caused by the numbers rather than by the request.
    ///
    /// Optimizers turn these into a sentinel cost instead of aborting.
    pub fn is_numerical(&self) -> bool {
        match self {
            RbfError::SingularSystem { .. }
            | RbfError::NumericalBreakdown(_)
            | RbfError::Eigen(_) => true,
            RbfError::LeaveOneOut { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T, E = RbfError> = std::result::Result<T, E>;
