//! Moment-SOS relaxations for polynomial optimization under a polynomial
//! matrix inequality `G(x) ⪰ 0`.
//!
//! The crate builds the trace-block hierarchies over the binary hypercube and
//! the unit ball, the Kronecker (Hol–Scherer) baseline, and the scalar
//! characteristic-coefficient relaxation; solves them through an interior-point
//! SDP backend; extracts SOS certificates; and ships the univariate penalty
//! machinery and brute-force oracles used to check everything at desk scale.

pub mod error;
pub mod instance;
pub mod matpoly;
pub mod oracle;
pub mod penalty;
pub mod poly;
pub mod relax;
pub mod sdp;

pub use error::{Error, Result};
pub use instance::{Domain, Instance, random_instance, random_suite};
pub use matpoly::{SymPolyMatrix, TraceBlocks};
pub use penalty::{ChebPoly, PenaltySpec, ShiftMode, UniPoly};
pub use poly::{Monomial, MomentVector, MultiPoly};
pub use relax::{RelaxKind, RelaxSpec};
pub use sdp::{Certificate, SDPProblem, SDPSolution, SolveStatus};
