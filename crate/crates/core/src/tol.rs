//! Centralized numerical tolerances.
//!
//! Each constant documents the single decision it encodes; modules refer to
//! these rather than scattering magic numbers.

/// Maximum allowed deviation `||M - M†||_F` for inputs declared Hermitian.
pub const HERM_TOL: f64 = 1e-9;

/// Eigenvalues above `-PSD_TOL` are accepted as nonnegative for PSD checks.
pub const PSD_TOL: f64 = 1e-9;

/// Allowed deviation of a density-matrix trace from one.
pub const TRACE_TOL: f64 = 1e-9;

/// Allowed deviation `||Σ_i E_i - 1||_F` for POVM completeness, and
/// `||Σ_m K_m† K_m - 1||_F` for Kraus completeness.
pub const COMPLETENESS_TOL: f64 = 1e-8;

/// Eigenvalues below this are treated as zero inside entropies, ranks,
/// purification supports and spectral functions with singular arguments.
pub const EIG_CLIP: f64 = 1e-12;

/// Outcome probabilities below this are dropped from measurement statistics.
pub const PROB_FLOOR: f64 = 1e-12;

/// Residual tolerance for structural identities that must hold by
/// construction (isometry contracts, projector algebra, Kraus lifts).
pub const STRUCT_TOL: f64 = 1e-8;

/// Residual tolerance for block-incoherence / subspace-preservation checks
/// on individual Kraus operators.
pub const KRAUS_TOL: f64 = 1e-9;

/// Relative duality-gap tolerance at which the SDP solver declares optimality.
pub const SDP_GAP_TOL: f64 = 1e-7;

/// Primal/dual feasibility tolerance for the SDP solver.
pub const SDP_FEAS_TOL: f64 = 1e-8;

/// Fraction of the step to the cone boundary taken by the SDP solver.
pub const SDP_STEP_FRACTION: f64 = 0.98;

/// Iteration cap for the SDP solver.
pub const SDP_MAX_ITER: usize = 200;

/// Smallest singular value at which stacked constraint rows count as
/// linearly independent; rows below are pruned.
pub const ROW_PRUNE_TOL: f64 = 1e-10;

/// Objective spread of the simplex at which Nelder-Mead stops.
pub const SIMPLEX_F_TOL: f64 = 1e-9;

/// Margin tolerance for monotonicity checks: a measure may decrease by at
/// most this much and still count as monotone (solver noise allowance).
pub const MONOTONE_TOL: f64 = 1e-7;
