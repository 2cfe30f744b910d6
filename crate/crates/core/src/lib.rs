//! Douglas–Rachford splitting for pairs of maximally monotone operators:
//! resolvent calculus, the Attouch–Théra dual pair, range samplers for `Id − T`
//! and `T`, the perturbed problem, infimal displacement estimation, and a
//! sampled convex-geometry layer for comparing nearly convex sets.

pub mod catalog;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod operators;
pub mod prox;
pub mod ranges;
pub mod sets;
pub mod spec;
pub mod splitting;

pub use error::{Error, Result};
pub use geometry::PointCloud;
pub use linalg::Vector;
pub use operators::{Flags, OperatorDescriptor};
pub use ranges::{PerturbedVerdict, Status};
pub use sets::{SetDescriptor, SetKind, Window};
pub use splitting::{DRTrace, OperatorPair};
