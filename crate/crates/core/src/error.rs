use thiserror::Error;

/// Errors produced by the spectral and dynamical computations.
#[derive(Debug, Error)]
pub enum Error {
    /// A sign decision could not be certified even at the maximum working
    /// precision. The caller may retry with a different formulation, but
    /// usually this means the queried point sits exactly on a boundary.
    #[error("precision exhausted at {bits} bits: {context}")]
    PrecisionExhausted { bits: u32, context: String },

    /// The band hierarchy did not contain the child count guaranteed by the
    /// nesting lemma. Signals numerical failure or λ ≤ 4.
    #[error("band structure violation at level {level}: expected {expected} children, found {found}")]
    StructureViolation {
        level: u32,
        expected: usize,
        found: usize,
    },

    /// An argument was outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A bisection bracket did not exhibit the required sign change.
    #[error("no sign change on bracket [{lo}, {hi}]")]
    NoSignChange { lo: String, hi: String },

    /// Too few usable points for a least-squares fit.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// The fractional part of nφ⁻¹ + θ could not be placed on either side
    /// of a potential breakpoint.
    #[error("potential value ambiguous at site {site}: argument is exactly a breakpoint")]
    BoundaryAmbiguous { site: i64 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}
