//! Coherence of quantum states relative to general (POVM) measurements.
//!
//! The resource-theoretic coherence of a state with respect to a POVM is
//! defined through Naimark dilation: the POVM is extended to a projective
//! measurement on a larger space, and block-coherence machinery is applied
//! there. This crate provides
//!
//! * dense complex matrix kernels ([`matops`]),
//! * states, POVMs and sampling ([`quantum`]),
//! * Naimark extensions, block dephasing and extension relations ([`naimark`]),
//! * a small dense SDP solver with primal/dual certificates ([`sdp`]),
//! * the coherence measures themselves ([`measures`]),
//! * free (POVM-incoherent) operations and monotonicity checks ([`freeops`]),
//! * the unpredictability/randomness reading of relative-entropy
//!   coherence ([`randomness`]),
//! * derivative-free extremal-state searches ([`search`]),
//! * JSON/CSV serialization ([`io`]) and batch verification suites
//!   ([`verify`]).

pub mod error;
pub mod freeops;
pub mod io;
pub mod matops;
pub mod measures;
pub mod naimark;
pub mod quantum;
pub mod randomness;
pub mod sdp;
pub mod search;
pub mod tol;
pub mod verify;

pub use error::{Error, Result};
pub use matops::CMat;
