use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degree undefined for the zero polynomial")]
    ZeroDegree,

    #[error("arity mismatch: derivation acts on {expected} components, element uses component {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("truncation mismatch: {left} vs {right}")]
    TruncationMismatch { left: usize, right: usize },

    #[error("jet depth exceeded: order {order} required, depth is {depth}")]
    JetDepthExceeded { order: u32, depth: u32 },

    #[error("flow characteristic has a degree-0 term in component {component}")]
    DegreeZeroFlow { component: usize },

    #[error("element is not homogeneous of degree 0: {0}")]
    NotHomogeneous(String),

    #[error("unknown Kac-Moody type {0}")]
    UnknownType(String),

    #[error("unsupported vertex c{vertex} for {kind}")]
    UnsupportedVertex { kind: String, vertex: usize },

    #[error("structure validation failed: {0}")]
    Validation(String),

    #[error("grading mismatch: {0}")]
    Grading(String),

    #[error("lambda-window exhausted while solving principal degree {degree}")]
    WindowExhausted { degree: i64 },

    #[error("depth insufficient: {0}")]
    DepthInsufficient(String),

    #[error("omega entry ({k1},{k2}) is not covered by the computed resolvents")]
    OmegaUncovered { k1: usize, k2: usize },

    #[error("element is not in {0}")]
    NotInSubspace(String),

    #[error("invalid gauge: {0}")]
    InvalidGauge(String),

    #[error("not a gauge invariant: {0}")]
    NotGaugeInvariant(String),

    #[error("leading map not invertible over the coefficient field: {0}")]
    NotInvertible(String),

    #[error("tau-coordinates degenerate: {0}")]
    DegenerateCoordinates(String),

    #[error("flow label {0} out of range")]
    BadLabel(String),

    #[error("flows do not commute: {0}")]
    NonCommuting(String),

    #[error("pole at the expansion point: {0}")]
    Pole(String),

    #[error("shift window overflow: shift {shift} outside [{min}, {max}]")]
    WindowOverflow { shift: i64, min: i64, max: i64 },

    #[error("identity failed: {0}")]
    IdentityFailed(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
