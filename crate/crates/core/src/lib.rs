//! Explicit Bellman functions on the A-infinity domain
//! `Omega_C = {e^{x1} <= x2 <= C e^{x1}}`, the sharp John-Nirenberg constant,
//! explicit optimizers, and an independent verification engine.

pub mod candidates;
pub mod domain;
pub mod error;
pub mod num;
pub mod optimizers;
pub mod quadrature;
pub mod roots;
pub mod scalar;
pub mod special;
pub mod tolerance;
pub mod verification;

pub use candidates::{CandidateKind, Extended};
pub use domain::{Branch, Point, RegionB1, RegionD};
pub use error::{Error, Result};
pub use optimizers::{FunctionKind, Piece, PieceKind, PiecewiseLogStep};
pub use scalar::DomainParams;
pub use tolerance::Tolerance;
