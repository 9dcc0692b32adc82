//! Spectra of compact metric graphs through a real secular determinant.
//!
//! The [`secular`] module assembles the matrix whose kernel is isomorphic to
//! the eigenspace at frequency `ω`; [`spectral`] finds its zeros and
//! reconstructs eigenfunctions; [`nodal`] counts nodal domains; [`surgery`]
//! checks the determinant identities under graph surgery; [`oracle`] is an
//! independent finite-difference discretization for cross-validation.

pub mod corpus;
pub mod error;
pub mod format;
pub mod graph;
pub mod linalg;
pub mod nodal;
pub mod oracle;
pub mod rootfind;
pub mod secular;
pub mod spectral;
pub mod surgery;
pub mod unionfind;

pub use error::{Error, Result};
pub use graph::{betti, normalize, validate, Edge, GraphIndexMap, MetricGraph, Vertex, VertexCondition, Violation};
