//! Line-oriented graph description files.
//!
//! ```text
//! # a star with a δ-coupled centre
//! vertex c delta=1.5
//! vertex a standard
//! vertex b dirichlet
//! edge e1 c a len=1
//! edge e2 c b len=1.414 q=0.5
//! ```
//!
//! Everything after `#` is ignored. Records may come in any order, but every
//! vertex an edge mentions must be declared somewhere in the file.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{Edge, MetricGraph, Vertex, VertexCondition};

pub fn parse_graph(text: &str) -> Result<MetricGraph> {
    let mut vertices = Vec::new();
    let mut edges: Vec<(usize, Edge)> = Vec::new();
    let mut vertex_lines: BTreeMap<String, usize> = BTreeMap::new();
    let mut edge_lines: BTreeMap<String, usize> = BTreeMap::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line, message };
        let tokens: Vec<&str> = content.split_whitespace().collect();
        match tokens[0] {
            "vertex" => {
                if tokens.len() != 3 {
                    return Err(err(format!("expected `vertex <id> <condition>`, got `{content}`")));
                }
                let id = tokens[1].to_string();
                let condition = parse_condition(tokens[2]).map_err(err)?;
                if let Some(prev) = vertex_lines.insert(id.clone(), line) {
                    return Err(err(format!(
                        "duplicate vertex id `{id}` (first declared on line {prev})"
                    )));
                }
                vertices.push(Vertex { id, condition });
            }
            "edge" => {
                if tokens.len() < 5 || tokens.len() > 6 {
                    return Err(err(format!(
                        "expected `edge <id> <v> <w> len=<length> [q=<potential>]`, got `{content}`"
                    )));
                }
                let id = tokens[1].to_string();
                let mut length = None;
                let mut potential = 0.0;
                for kv in &tokens[4..] {
                    let (key, value) = kv
                        .split_once('=')
                        .ok_or_else(|| err(format!("expected key=value, got `{kv}`")))?;
                    let x: f64 = value
                        .parse()
                        .map_err(|_| err(format!("invalid number `{value}` for `{key}`")))?;
                    match key {
                        "len" => length = Some(x),
                        "q" => potential = x,
                        _ => return Err(err(format!("unknown edge attribute `{key}`"))),
                    }
                }
                let length = length.ok_or_else(|| err("missing `len=`".to_string()))?;
                if !(length > 0.0 && length.is_finite()) {
                    return Err(err(format!(
                        "edge `{id}` has nonpositive or non-finite length {length}"
                    )));
                }
                if !potential.is_finite() {
                    return Err(err(format!("edge `{id}` has non-finite potential")));
                }
                if let Some(prev) = edge_lines.insert(id.clone(), line) {
                    return Err(err(format!("duplicate edge id `{id}` (first declared on line {prev})")));
                }
                edges.push((
                    line,
                    Edge::new(id, tokens[2], tokens[3], length).with_potential(potential),
                ));
            }
            other => return Err(err(format!("unknown record `{other}`"))),
        }
    }

    for (line, e) in &edges {
        for end in [&e.initial, &e.terminal] {
            if !vertex_lines.contains_key(end.as_str()) {
                return Err(Error::Parse {
                    line: *line,
                    message: format!("edge `{}` references undeclared vertex `{end}`", e.id),
                });
            }
        }
    }
    Ok(MetricGraph::new(vertices, edges.into_iter().map(|(_, e)| e).collect()))
}

fn parse_condition(token: &str) -> std::result::Result<VertexCondition, String> {
    match token {
        "standard" => Ok(VertexCondition::Standard),
        "dirichlet" => Ok(VertexCondition::Dirichlet),
        _ => {
            if let Some(value) = token.strip_prefix("delta=") {
                let alpha: f64 = value.parse().map_err(|_| format!("invalid δ coupling `{value}`"))?;
                if !alpha.is_finite() {
                    return Err(format!("non-finite δ coupling `{value}`"));
                }
                Ok(VertexCondition::Delta(alpha))
            } else {
                Err(format!("unknown vertex condition `{token}`"))
            }
        }
    }
}

/// Serialises a graph in the same format `parse_graph` reads. Floats are
/// written in shortest round-trip form, so parsing the output reproduces the
/// graph exactly.
pub fn to_text(graph: &MetricGraph) -> String {
    let mut out = String::new();
    for v in graph.vertices() {
        let _ = writeln!(out, "vertex {} {}", v.id, v.condition);
    }
    for e in graph.edges() {
        let _ = write!(out, "edge {} {} {} len={}", e.id, e.initial, e.terminal, e.length);
        if e.potential != 0.0 {
            let _ = write!(out, " q={}", e.potential);
        }
        out.push('\n');
    }
    out
}
