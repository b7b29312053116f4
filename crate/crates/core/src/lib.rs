//! Topological simplification of scalar fields on regular grids by
//! persistence optimization.
//!
//! The pipeline: a [`ScalarField`] is triangulated implicitly ([`grid`]), a
//! lower-star [`DiscreteGradient`] is built ([`gradient`]), its critical cells
//! are paired into a [`PersistenceDiagram`] ([`persistence`]), the diagram is
//! matched against a target by a Wasserstein assignment ([`assignment`]) and
//! the field is moved along the resulting birth/death gradients ([`solver`]).
//! [`morse`] post-processes gradients (saddle connectors, filaments) and
//! [`io`] holds the file formats used by the command-line tool.

pub mod assignment;
pub mod error;
pub mod gradient;
pub mod grid;
pub mod io;
pub mod morse;
pub mod oracle;
pub mod persistence;
pub mod solver;
pub mod synth;

pub use error::{Error, Result};
pub use gradient::{DiscreteGradient, Pairing, UpdatedVertexSet};
pub use grid::{Grid, ScalarField, SimplexKey, SimplexRef, VertexOrder};
pub use assignment::{Assignment, Target};
pub use persistence::{PairKey, PersistenceDiagram, PersistencePair};
pub use solver::{SolverConfig, SolverReport, TargetSpec};

