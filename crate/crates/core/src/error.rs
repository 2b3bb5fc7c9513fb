use thiserror::Error;

/// Refusals and failures raised by the library.
///
/// Every variant is a deliberate refusal: an operation never degrades silently
/// when its arithmetic budget or preconditions are not met.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("error budget exceeded: accumulated {accumulated:e} > allowed {allowed:e} ({context})")]
    BudgetExceeded {
        accumulated: f64,
        allowed: f64,
        context: String,
    },

    #[error("point kind mismatch: expected {expected}, found {found}")]
    PointKind {
        expected: &'static str,
        found: &'static str,
    },

    #[error("substitution is not primitive: no power up to {max_power} of the incidence matrix is positive")]
    NotPrimitive { max_power: usize },

    #[error("substitution does not grow; no infinite fixed point exists")]
    NonGrowing,

    #[error("not minimal at this entourage: {diagnosis}")]
    NotMinimal { diagnosis: String },

    #[error("covering search exceeded K_max = {k_max}: {detail}")]
    KMaxExceeded { k_max: u64, detail: String },

    #[error("degenerate window: {0}")]
    DegenerateWindow(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("bound violated at {point}: window [{start}, {end}) frequency {frequency} < bound {bound}")]
    Violation {
        point: String,
        start: f64,
        end: f64,
        frequency: f64,
        bound: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
