use thiserror::Error;

use crate::graph::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {}", join_violations(.0))]
    InvalidGraph(Vec<Violation>),

    #[error("graph is disconnected after Dirichlet splitting; components: {}", join_components(.0))]
    Disconnected(Vec<Vec<String>>),

    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("unknown edge `{0}`")]
    UnknownEdge(String),

    #[error("frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),

    #[error("frequency {omega} is below the potential ceiling of edge `{edge}` (omega^2 <= q = {potential})")]
    BelowPotentialCeiling { omega: f64, edge: String, potential: f64 },

    #[error("A0 undefined for δ-couplings (vertex `{0}`)")]
    DeltaAtZero(String),

    #[error("A0 undefined for nonzero potentials (edge `{0}`)")]
    PotentialAtZero(String),

    #[error("derivative order {0} not supported (0..=4)")]
    DerivativeOrder(usize),

    #[error("finite-difference step underflow at omega = {0}")]
    StepUnderflow(f64),

    #[error("root/kernel mismatch at omega = {omega}: no singular value below threshold (smallest relative singular value {smallest})")]
    RootKernelMismatch { omega: f64, smallest: f64 },

    #[error("inconsistent kernel vector on edge `{edge}`: endpoint mismatch {mismatch:e}")]
    InconsistentKernelVector { edge: String, mismatch: f64 },

    #[error("zero edge: wave vanishes identically")]
    ZeroEdge,

    #[error("eigenfunction vanishes identically")]
    ZeroFunction,

    #[error("grid too coarse: root set did not stabilise after {halvings} grid halvings")]
    GridTooCoarse { halvings: usize },

    #[error("invalid search range: {0}")]
    InvalidRange(String),

    #[error("hypotheses violated: {0}")]
    HypothesesViolated(String),

    #[error("vertex `{0}` does not carry standard conditions")]
    NotStandardVertex(String),

    #[error("{0}")]
    Precondition(String),

    #[error("mesh too coarse: {0} points per unit length (need at least 100)")]
    MeshTooCoarse(usize),

    #[error("eigensolver did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

fn join_components(c: &[Vec<String>]) -> String {
    c.iter()
        .map(|comp| format!("{{{}}}", comp.join(", ")))
        .collect::<Vec<_>>()
        .join(" ")
}
