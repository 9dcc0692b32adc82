use std::fmt;
use std::path::Path;

use log::info;
use qgraph_core::format::parse_graph;
use qgraph_core::{normalize, Error, MetricGraph};

/// A failure with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse { .. }
            | Error::InvalidGraph(_)
            | Error::Disconnected(_)
            | Error::UnknownVertex(_)
            | Error::UnknownEdge(_)
            | Error::NonPositiveFrequency(_)
            | Error::BelowPotentialCeiling { .. }
            | Error::HypothesesViolated(_)
            | Error::Precondition(_)
            | Error::MeshTooCoarse(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::runtime(format!("i/o error: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::runtime(format!("csv error: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::runtime(format!("json error: {e}"))
    }
}

/// Reads, validates and normalizes a graph description file.
pub fn parse_graph_file(path: &Path) -> Result<MetricGraph, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let raw = parse_graph(&text).map_err(|e| match e {
        Error::Parse { line, message } => Failure::usage(format!("{}:{line}: {message}", path.display())),
        other => Failure::from(other),
    })?;
    let graph = normalize(&raw).map_err(|e| match e {
        Error::InvalidGraph(vs) => {
            let list: Vec<String> = vs.iter().map(|v| format!("  {v}")).collect();
            Failure::usage(format!("{}: invalid graph:\n{}", path.display(), list.join("\n")))
        }
        other => Failure::from(other),
    })?;
    if graph.edges().len() != raw.edges().len() || graph.vertices().len() != raw.vertices().len() {
        info!(
            "{}: normalized {} vertices / {} edges to {} / {}",
            path.display(),
            raw.vertices().len(),
            raw.edges().len(),
            graph.vertices().len(),
            graph.edges().len()
        );
    }
    Ok(graph)
}
