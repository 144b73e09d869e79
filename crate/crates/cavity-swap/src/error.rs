use thiserror::Error;

/// Errors shared by the state, dynamics, protocol and analysis layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Two subsystems in one layout carry the same label.
    #[error("duplicate subsystem label `{0}`")]
    LabelCollision(String),

    /// A label does not name any subsystem of the layout at hand.
    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),

    /// A label names a subsystem of the wrong kind (atom where a cavity
    /// is needed, or vice versa).
    #[error("subsystem `{label}` is not {expected}")]
    WrongSubsystemKind { label: String, expected: &'static str },

    /// An amplitude or phase vector does not match the dimension it is
    /// applied to.
    #[error("vector of length {got} does not match dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An explicit amplitude vector has no weight to normalize.
    #[error("state has zero norm")]
    ZeroNorm,

    /// An operation that requires a unit-norm state received one whose
    /// norm drifted beyond the stated tolerance.
    #[error("state norm {norm} differs from 1 by more than {tol}")]
    UnnormalizedInput { norm: f64, tol: f64 },

    /// Measurement cells fail to partition the local basis.
    #[error("cells do not partition 0..{dim} of `{label}`: {reason}")]
    InvalidPartition {
        label: String,
        dim: usize,
        reason: String,
    },

    /// A fidelity target refers to subsystems the state does not contain
    /// or whose kind/dimension disagrees.
    #[error("target subsystem `{0}` does not match the state layout")]
    LabelMismatch(String),

    /// Population sits on the top Fock level of an excited-atom manifold,
    /// so one interaction step would rotate it out of the truncated space.
    #[error(
        "population {population:.3e} on |e,{level}> would leave the truncated Fock space; \
         raise the truncation"
    )]
    TruncationLeak { level: usize, population: f64 },

    /// Parameter validation failed (amplitudes, ranges, truncation, ...).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, Error>;
