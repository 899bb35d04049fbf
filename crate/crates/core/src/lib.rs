//! Quasi-Monte Carlo point sequences on a triangle.
//!
//! Digital sequences over F₂ address cells of a recursive 4-way partition of
//! a triangle; each point is the centroid of its cell. Alongside the points
//! the crate computes dual nets and their weights, the dyadic Walsh
//! analysis of discretized integrands, and convergence studies.

pub mod bitcore;
pub mod digital;
pub mod error;
pub mod harness;
pub mod par;
pub mod partition;
pub mod quality;
pub mod verify;
pub mod walsh;

pub use bitcore::{BitMatrix, BitVector, IndexMatrix, Pair};
pub use digital::{basu_owen_pair, pascal_pair, GeneratorKind, GeneratorPair, NetSpec};
pub use error::{Error, Result};
pub use harness::{ConvergenceRow, RateFit, TestFunction};
pub use partition::{CenteredFrame, Point, Triangle};
pub use quality::{DualNet, WeightReport};
pub use walsh::{DecayReport, DiscretizedTable};
