//! Crate-wide error type.
//!
//! Every fallible operation returns [`Result`]; variants carry the offending
//! magnitude (residual norm, eigenvalue, dimension) so that callers can report
//! *how far* an input was from satisfying a precondition.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    // -- matrix-level --
    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NonHermitian(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("matrix is not an isometry (deviation {0:.3e})")]
    NotIsometry(f64),
    #[error("eigenvalue iteration failed to converge")]
    NoConvergence,
    #[error("block-constrained unitary completion infeasible: {0}")]
    InfeasibleBlockCompletion(String),
    #[error("non-finite entry encountered: {0}")]
    NonFinite(String),

    // -- state / POVM level --
    #[error("density matrix has invalid trace {0:.6e}")]
    InvalidTrace(f64),
    #[error("state is not pure (second eigenvalue {0:.3e})")]
    NotPure(f64),
    #[error("POVM completeness violated (deviation {0:.3e})")]
    CompletenessViolation(f64),
    #[error("Bloch-vector POVM constraint violated: {0}")]
    BlochConstraintViolation(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    // -- Naimark extensions --
    #[error("extension relation verification failed: {0}")]
    RelationVerificationFailed(String),
    #[error("unsupported extension pair: {0}")]
    UnsupportedPair(String),
    #[error("Kraus lift verification failed: {0}")]
    LiftVerificationFailed(String),
    #[error("projector block is empty or has zero rank: {0}")]
    EmptyBlock(String),

    // -- free operations --
    #[error("Kraus set is not block-incoherent (residual {0:.3e})")]
    NotBlockIncoherent(f64),
    #[error("Kraus set is not subspace-preserving (residual {0:.3e})")]
    NotSubspacePreserving(f64),
    #[error("Kraus set is not complete (deviation {0:.3e})")]
    NotComplete(f64),
    #[error("channel does not preserve block-incoherent states (residual {0:.3e})")]
    NotMbi(f64),
    #[error("channel does not preserve the embedded subspace (residual {0:.3e})")]
    NotEmbeddedPreserving(f64),
    #[error("sampler exhausted after {0} rejection attempts")]
    SamplerExhausted(usize),
    #[error("sampler family is degenerate: {0}")]
    DegenerateFamily(String),

    // -- SDP --
    #[error("SDP numerical failure after {iterations} iterations (primal residual {primal_residual:.3e}, dual residual {dual_residual:.3e}, gap {gap:.3e})")]
    NumericalFailure {
        iterations: usize,
        primal_residual: f64,
        dual_residual: f64,
        gap: f64,
    },

    // -- search --
    #[error("optimizer did not converge: {0}")]
    NotConverged(String),

    // -- I/O --
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("unknown name: {0}")]
    UnknownName(String),
}
