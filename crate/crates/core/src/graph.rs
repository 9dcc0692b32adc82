//! Compact metric graphs with vertex conditions and edgewise constant potentials.
//!
//! A [`MetricGraph`] is immutable once built. Surgery helpers such as
//! [`MetricGraph::with_condition`] or [`MetricGraph::subdivide`] return new graphs.
//!
//! The spectral routines assume the normal form produced by [`normalize`]:
//! no loops, every Dirichlet vertex of degree one, and connectedness after
//! the Dirichlet vertices have been split.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use log::info;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::unionfind::UnionFind;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum VertexCondition {
    /// Continuity plus vanishing sum of outward derivatives.
    Standard,
    Dirichlet,
    /// Continuity plus `Σ ∂_e ψ(v) = alpha ψ(v)`.
    Delta(f64),
}

impl VertexCondition {
    /// Coupling strength of a continuity-type condition; `None` for Dirichlet.
    pub fn coupling(&self) -> Option<f64> {
        match *self {
            VertexCondition::Standard => Some(0.0),
            VertexCondition::Delta(alpha) => Some(alpha),
            VertexCondition::Dirichlet => None,
        }
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self, VertexCondition::Dirichlet)
    }
}

impl fmt::Display for VertexCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexCondition::Standard => write!(f, "standard"),
            VertexCondition::Dirichlet => write!(f, "dirichlet"),
            VertexCondition::Delta(alpha) => write!(f, "delta={alpha}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Vertex {
    pub id: String,
    pub condition: VertexCondition,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Edge {
    pub id: String,
    pub initial: String,
    pub terminal: String,
    pub length: f64,
    /// Constant potential `q_e` on the edge.
    pub potential: f64,
}

impl Edge {
    pub fn new(id: impl Into<String>, initial: impl Into<String>, terminal: impl Into<String>, length: f64) -> Self {
        Edge {
            id: id.into(),
            initial: initial.into(),
            terminal: terminal.into(),
            length,
            potential: 0.0,
        }
    }

    pub fn with_potential(mut self, q: f64) -> Self {
        self.potential = q;
        self
    }

    pub fn is_loop(&self) -> bool {
        self.initial == self.terminal
    }

    /// The endpoint opposite to `v`.
    pub fn other(&self, v: &str) -> &str {
        if self.initial == v {
            &self.terminal
        } else {
            &self.initial
        }
    }
}

/// A violated standing assumption, naming the offending vertex or edge.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Violation {
    NoEdges,
    DuplicateVertex(String),
    DuplicateEdge(String),
    UnknownVertex { edge: String, vertex: String },
    NonPositiveLength { edge: String, length: f64 },
    NonFinitePotential { edge: String },
    NonFiniteCoupling { vertex: String },
    Loop { edge: String, vertex: String },
    DirichletDegree { vertex: String, degree: usize },
    Disconnected { components: Vec<Vec<String>> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoEdges => write!(f, "graph has no edges"),
            Violation::DuplicateVertex(v) => write!(f, "duplicate vertex id `{v}`"),
            Violation::DuplicateEdge(e) => write!(f, "duplicate edge id `{e}`"),
            Violation::UnknownVertex { edge, vertex } => {
                write!(f, "edge `{edge}` references unknown vertex `{vertex}`")
            }
            Violation::NonPositiveLength { edge, length } => {
                write!(f, "edge `{edge}` has invalid length {length}")
            }
            Violation::NonFinitePotential { edge } => write!(f, "edge `{edge}` has a non-finite potential"),
            Violation::NonFiniteCoupling { vertex } => {
                write!(f, "vertex `{vertex}` has a non-finite δ coupling")
            }
            Violation::Loop { edge, vertex } => write!(f, "edge `{edge}` is a loop at `{vertex}`"),
            Violation::DirichletDegree { vertex, degree } => {
                write!(f, "Dirichlet vertex `{vertex}` has degree {degree} (must be 1)")
            }
            Violation::Disconnected { components } => {
                write!(
                    f,
                    "disconnected after Dirichlet splitting into {} components",
                    components.len()
                )
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricGraph {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    vertex_pos: BTreeMap<String, usize>,
    edge_pos: BTreeMap<String, usize>,
}

impl MetricGraph {
    /// Builds a graph without checking it; see [`validate`] and [`normalize`].
    pub fn new(vertices: Vec<Vertex>, edges: Vec<Edge>) -> Self {
        let mut vertex_pos = BTreeMap::new();
        for (i, v) in vertices.iter().enumerate() {
            vertex_pos.entry(v.id.clone()).or_insert(i);
        }
        let mut edge_pos = BTreeMap::new();
        for (i, e) in edges.iter().enumerate() {
            edge_pos.entry(e.id.clone()).or_insert(i);
        }
        MetricGraph {
            vertices,
            edges,
            vertex_pos,
            edge_pos,
        }
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex(&self, id: &str) -> Option<&Vertex> {
        self.vertex_pos.get(id).map(|&i| &self.vertices[i])
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        self.edge_pos.get(id).map(|&i| &self.edges[i])
    }

    pub fn condition(&self, id: &str) -> Option<VertexCondition> {
        self.vertex(id).map(|v| v.condition)
    }

    /// Number of edge ends at `v`; a loop counts twice.
    pub fn degree(&self, v: &str) -> usize {
        self.edges
            .iter()
            .map(|e| (e.initial == v) as usize + (e.terminal == v) as usize)
            .sum()
    }

    pub fn incident_edges<'a>(&'a self, v: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.initial == v || e.terminal == v)
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn has_dirichlet(&self) -> bool {
        self.vertices.iter().any(|v| v.condition.is_dirichlet())
    }

    pub fn dirichlet_count(&self) -> usize {
        self.vertices.iter().filter(|v| v.condition.is_dirichlet()).count()
    }

    pub fn has_delta(&self) -> bool {
        self.vertices
            .iter()
            .any(|v| matches!(v.condition, VertexCondition::Delta(_)))
    }

    pub fn has_potential(&self) -> bool {
        self.edges.iter().any(|e| e.potential != 0.0)
    }

    pub fn max_potential(&self) -> f64 {
        self.edges.iter().map(|e| e.potential).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Zero-potential graph with only standard and Dirichlet conditions.
    pub fn is_free(&self) -> bool {
        !self.has_delta() && !self.has_potential()
    }

    pub fn is_tree(&self) -> bool {
        betti(self) == 0 && self.edges.len() + 1 == self.vertices.len()
    }

    pub fn with_condition(&self, v: &str, condition: VertexCondition) -> Result<MetricGraph> {
        let i = *self
            .vertex_pos
            .get(v)
            .ok_or_else(|| Error::UnknownVertex(v.to_string()))?;
        let mut vertices = self.vertices.clone();
        vertices[i].condition = condition;
        Ok(MetricGraph::new(vertices, self.edges.clone()))
    }

    /// Same graph with `q` on every edge.
    pub fn with_uniform_potential(&self, q: f64) -> MetricGraph {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                potential: q,
                ..e.clone()
            })
            .collect();
        MetricGraph::new(self.vertices.clone(), edges)
    }

    /// Same graph with every vertex condition mapped through `f`.
    pub fn map_conditions(&self, f: impl Fn(&Vertex) -> VertexCondition) -> MetricGraph {
        let vertices = self
            .vertices
            .iter()
            .map(|v| Vertex {
                id: v.id.clone(),
                condition: f(v),
            })
            .collect();
        MetricGraph::new(vertices, self.edges.clone())
    }

    /// Attaches a new vertex `w` with `condition` through a new edge `v → w`.
    pub fn attach_pendant(&self, v: &str, length: f64, condition: VertexCondition) -> Result<(MetricGraph, String)> {
        if self.vertex(v).is_none() {
            return Err(Error::UnknownVertex(v.to_string()));
        }
        let w = self.fresh_vertex_id(&format!("{v}+"));
        let e = self.fresh_edge_id(&format!("{v}+"));
        let mut vertices = self.vertices.clone();
        vertices.push(Vertex {
            id: w.clone(),
            condition,
        });
        let mut edges = self.edges.clone();
        edges.push(Edge::new(e, v, w.clone(), length));
        Ok((MetricGraph::new(vertices, edges), w))
    }

    /// Reverses the direction of edge `id`.
    pub fn flip_edge(&self, id: &str) -> Result<MetricGraph> {
        let i = *self
            .edge_pos
            .get(id)
            .ok_or_else(|| Error::UnknownEdge(id.to_string()))?;
        let mut edges = self.edges.clone();
        let e = &mut edges[i];
        std::mem::swap(&mut e.initial, &mut e.terminal);
        Ok(MetricGraph::new(self.vertices.clone(), edges))
    }

    /// Splits edge `id` by a standard degree-2 vertex at `fraction·ℓ_e` from its
    /// initial vertex. The halves are `id.1` and `id.2` and keep the potential.
    pub fn subdivide(&self, id: &str, fraction: f64) -> Result<MetricGraph> {
        let i = *self
            .edge_pos
            .get(id)
            .ok_or_else(|| Error::UnknownEdge(id.to_string()))?;
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::Precondition(format!(
                "subdivision fraction {fraction} not in (0, 1)"
            )));
        }
        let e = &self.edges[i];
        let mid = self.fresh_vertex_id(&format!("{id}.mid"));
        let mut vertices = self.vertices.clone();
        vertices.push(Vertex {
            id: mid.clone(),
            condition: VertexCondition::Standard,
        });
        let (first, second) = self.split_edge_ids(id);
        let mut edges = Vec::with_capacity(self.edges.len() + 1);
        edges.extend_from_slice(&self.edges[..i]);
        edges.push(Edge {
            id: first,
            initial: e.initial.clone(),
            terminal: mid.clone(),
            length: e.length * fraction,
            potential: e.potential,
        });
        edges.push(Edge {
            id: second,
            initial: mid,
            terminal: e.terminal.clone(),
            length: e.length * (1.0 - fraction),
            potential: e.potential,
        });
        edges.extend_from_slice(&self.edges[i + 1..]);
        Ok(MetricGraph::new(vertices, edges))
    }

    fn split_edge_ids(&self, id: &str) -> (String, String) {
        let mut k = 1;
        loop {
            let (a, b) = if k == 1 {
                (format!("{id}.1"), format!("{id}.2"))
            } else {
                (format!("{id}.{k}.1"), format!("{id}.{k}.2"))
            };
            if !self.edge_pos.contains_key(&a) && !self.edge_pos.contains_key(&b) {
                return (a, b);
            }
            k += 1;
        }
    }

    pub(crate) fn fresh_vertex_id(&self, base: &str) -> String {
        fresh_id(base, |s| self.vertex_pos.contains_key(s))
    }

    pub(crate) fn fresh_edge_id(&self, base: &str) -> String {
        fresh_id(base, |s| self.edge_pos.contains_key(s))
    }
}

fn fresh_id(base: &str, taken: impl Fn(&str) -> bool) -> String {
    if !taken(base) {
        return base.to_string();
    }
    (2..)
        .map(|k| format!("{base}#{k}"))
        .find(|s| !taken(s))
        .expect("unbounded id space")
}

/// Slot layout of the secular matrix.
///
/// Vertex slots come first, sorted by vertex id. Edge `k` (edges sorted by id)
/// owns slots `|V| + 2k` (derivative at its initial vertex) and `|V| + 2k + 1`
/// (derivative at its terminal vertex); the same indices carry its two
/// consistency rows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GraphIndexMap {
    vertex_ids: Vec<String>,
    edge_ids: Vec<String>,
    vertex_slot: BTreeMap<String, usize>,
    edge_rank: BTreeMap<String, usize>,
}

impl GraphIndexMap {
    pub fn new(graph: &MetricGraph) -> Self {
        let vertex_ids: Vec<String> = graph.vertex_pos.keys().cloned().collect();
        let edge_ids: Vec<String> = graph.edge_pos.keys().cloned().collect();
        let vertex_slot = vertex_ids.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        let edge_rank = edge_ids.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        GraphIndexMap {
            vertex_ids,
            edge_ids,
            vertex_slot,
            edge_rank,
        }
    }

    pub fn dim(&self) -> usize {
        self.vertex_ids.len() + 2 * self.edge_ids.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_ids.len()
    }

    pub fn vertex_ids(&self) -> &[String] {
        &self.vertex_ids
    }

    pub fn edge_ids(&self) -> &[String] {
        &self.edge_ids
    }

    pub fn vertex_slot(&self, v: &str) -> Option<usize> {
        self.vertex_slot.get(v).copied()
    }

    pub fn edge_rank(&self, e: &str) -> Option<usize> {
        self.edge_rank.get(e).copied()
    }

    /// Slot of `x(initial, e)`.
    pub fn initial_slot(&self, e: &str) -> Option<usize> {
        self.edge_rank(e).map(|k| self.vertex_ids.len() + 2 * k)
    }

    /// Slot of `x(terminal, e)`.
    pub fn terminal_slot(&self, e: &str) -> Option<usize> {
        self.initial_slot(e).map(|s| s + 1)
    }

    /// Human-readable label of slot `i`.
    pub fn label(&self, i: usize) -> String {
        let nv = self.vertex_ids.len();
        if i < nv {
            self.vertex_ids[i].clone()
        } else {
            let k = (i - nv) / 2;
            let role = if (i - nv).is_multiple_of(2) {
                "initial"
            } else {
                "terminal"
            };
            format!("{}@{}", self.edge_ids[k], role)
        }
    }
}

/// Lists every violated standing assumption; empty iff the graph is in normal form.
pub fn validate(graph: &MetricGraph) -> Vec<Violation> {
    let mut out = Vec::new();
    if graph.edges.is_empty() {
        out.push(Violation::NoEdges);
    }
    let mut seen = BTreeSet::new();
    for v in &graph.vertices {
        if !seen.insert(v.id.as_str()) {
            out.push(Violation::DuplicateVertex(v.id.clone()));
        }
        if let VertexCondition::Delta(alpha) = v.condition {
            if !alpha.is_finite() {
                out.push(Violation::NonFiniteCoupling { vertex: v.id.clone() });
            }
        }
    }
    let mut seen = BTreeSet::new();
    for e in &graph.edges {
        if !seen.insert(e.id.as_str()) {
            out.push(Violation::DuplicateEdge(e.id.clone()));
        }
        for end in [&e.initial, &e.terminal] {
            if graph.vertex(end).is_none() {
                out.push(Violation::UnknownVertex {
                    edge: e.id.clone(),
                    vertex: end.clone(),
                });
            }
        }
        if !(e.length > 0.0 && e.length.is_finite()) {
            out.push(Violation::NonPositiveLength {
                edge: e.id.clone(),
                length: e.length,
            });
        }
        if !e.potential.is_finite() {
            out.push(Violation::NonFinitePotential { edge: e.id.clone() });
        }
        if e.is_loop() {
            out.push(Violation::Loop {
                edge: e.id.clone(),
                vertex: e.initial.clone(),
            });
        }
    }
    for v in &graph.vertices {
        if v.condition.is_dirichlet() {
            let degree = graph.degree(&v.id);
            if degree != 1 {
                out.push(Violation::DirichletDegree {
                    vertex: v.id.clone(),
                    degree,
                });
            }
        }
    }
    let components = split_components(graph);
    if components.len() > 1 {
        out.push(Violation::Disconnected { components });
    }
    out
}

/// Connected components after every Dirichlet vertex has been split into
/// one copy per incident edge end. Each component lists its vertex ids;
/// a split Dirichlet vertex appears in every component it touches.
pub fn split_components(graph: &MetricGraph) -> Vec<Vec<String>> {
    // nodes: one per vertex, then one per edge
    let nv = graph.vertices.len();
    let mut uf = UnionFind::new(nv + graph.edges.len());
    for (k, e) in graph.edges.iter().enumerate() {
        for end in [&e.initial, &e.terminal] {
            if let Some(&i) = graph.vertex_pos.get(end.as_str()) {
                if !graph.vertices[i].condition.is_dirichlet() {
                    uf.union(i, nv + k);
                }
            }
        }
    }
    let alive =
        |i: usize| i >= nv || !graph.vertices[i].condition.is_dirichlet() || graph.degree(&graph.vertices[i].id) == 0;
    let groups = uf.groups(alive);
    groups
        .into_iter()
        .map(|g| {
            let mut ids = BTreeSet::new();
            for i in g {
                if i < nv {
                    ids.insert(graph.vertices[i].id.clone());
                } else {
                    let e = &graph.edges[i - nv];
                    ids.insert(e.initial.clone());
                    ids.insert(e.terminal.clone());
                }
            }
            ids.into_iter().collect()
        })
        .collect()
}

/// Brings a graph into normal form without changing its spectrum: loops are
/// subdivided at their midpoint and Dirichlet vertices of degree `k > 1` are
/// split into `k` Dirichlet leaves.
pub fn normalize(graph: &MetricGraph) -> Result<MetricGraph> {
    let structural: Vec<Violation> = validate(graph)
        .into_iter()
        .filter(|v| {
            !matches!(
                v,
                Violation::Loop { .. } | Violation::DirichletDegree { .. } | Violation::Disconnected { .. }
            )
        })
        .collect();
    if !structural.is_empty() {
        return Err(Error::InvalidGraph(structural));
    }

    let mut g = graph.clone();
    let loops: Vec<String> = g.edges.iter().filter(|e| e.is_loop()).map(|e| e.id.clone()).collect();
    for id in loops {
        info!("subdividing loop `{id}` at its midpoint");
        g = g.subdivide(&id, 0.5)?;
    }

    let to_split: Vec<String> = g
        .vertices
        .iter()
        .filter(|v| v.condition.is_dirichlet() && g.degree(&v.id) > 1)
        .map(|v| v.id.clone())
        .collect();
    for v in to_split {
        info!(
            "splitting Dirichlet vertex `{v}` of degree {} into leaves",
            g.degree(&v)
        );
        g = split_vertex(&g, &v);
    }

    let components = split_components(&g);
    if components.len() > 1 {
        return Err(Error::Disconnected(components));
    }
    let remaining = validate(&g);
    if !remaining.is_empty() {
        return Err(Error::InvalidGraph(remaining));
    }
    Ok(g)
}

/// Replaces `v` by one copy per incident edge end, copies named `v.1, v.2, …`.
fn split_vertex(graph: &MetricGraph, v: &str) -> MetricGraph {
    let condition = graph.condition(v).expect("vertex exists");
    let pos = graph.vertex_pos[v];
    let mut vertices: Vec<Vertex> = Vec::with_capacity(graph.vertices.len() + 2);
    let mut edges = graph.edges.clone();
    let mut copies = Vec::new();
    let mut k = 0;
    let mut taken: BTreeSet<String> = graph.vertex_pos.keys().cloned().collect();
    for e in edges.iter_mut() {
        for end in [&mut e.initial, &mut e.terminal] {
            if end == v {
                k += 1;
                let id = fresh_id(&format!("{v}.{k}"), |s| taken.contains(s));
                taken.insert(id.clone());
                *end = id.clone();
                copies.push(Vertex { id, condition });
            }
        }
    }
    vertices.extend_from_slice(&graph.vertices[..pos]);
    vertices.extend(copies);
    vertices.extend_from_slice(&graph.vertices[pos + 1..]);
    MetricGraph::new(vertices, edges)
}

/// First Betti number `|E| − |V| + 1` of a connected graph.
pub fn betti(graph: &MetricGraph) -> usize {
    (graph.edges.len() + 1).saturating_sub(graph.vertices.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(id: &str, c: VertexCondition) -> Vertex {
        Vertex {
            id: id.to_string(),
            condition: c,
        }
    }

    use VertexCondition::{Dirichlet, Standard};

    fn interval() -> MetricGraph {
        MetricGraph::new(
            vec![v("a", Standard), v("b", Standard)],
            vec![Edge::new("e", "a", "b", 1.0)],
        )
    }

    #[test]
    fn smallest_tree_is_valid() {
        assert!(validate(&interval()).is_empty());
        assert_eq!(betti(&interval()), 0);
        assert!(interval().is_tree());
    }

    #[test]
    fn loop_is_reported() {
        let g = MetricGraph::new(vec![v("a", Standard)], vec![Edge::new("e", "a", "a", 2.0)]);
        let viol = validate(&g);
        assert!(viol.contains(&Violation::Loop {
            edge: "e".into(),
            vertex: "a".into()
        }));
    }

    #[test]
    fn high_degree_dirichlet_is_reported() {
        let g = MetricGraph::new(
            vec![v("c", Dirichlet), v("x", Standard), v("y", Standard), v("z", Standard)],
            vec![
                Edge::new("e1", "c", "x", 1.0),
                Edge::new("e2", "c", "y", 1.0),
                Edge::new("e3", "c", "z", 1.0),
            ],
        );
        let viol = validate(&g);
        assert!(viol.contains(&Violation::DirichletDegree {
            vertex: "c".into(),
            degree: 3
        }));
        // splitting c separates the three arms
        assert!(viol
            .iter()
            .any(|x| matches!(x, Violation::Disconnected { components } if components.len() == 3)));
    }

    #[test]
    fn bad_lengths_and_refs() {
        let g = MetricGraph::new(
            vec![v("a", Standard), v("b", Standard)],
            vec![Edge::new("e", "a", "b", 0.0), Edge::new("f", "a", "zz", f64::INFINITY)],
        );
        let viol = validate(&g);
        assert!(viol.contains(&Violation::NonPositiveLength {
            edge: "e".into(),
            length: 0.0
        }));
        assert!(viol
            .iter()
            .any(|x| matches!(x, Violation::UnknownVertex { vertex, .. } if vertex == "zz")));
        assert!(matches!(normalize(&g), Err(Error::InvalidGraph(_))));
    }

    #[test]
    fn loop_normalizes_to_cycle() {
        let g = MetricGraph::new(vec![v("a", Standard)], vec![Edge::new("e", "a", "a", 2.0)]);
        let n = normalize(&g).unwrap();
        assert_eq!(n.vertices().len(), 2);
        assert_eq!(n.edges().len(), 2);
        assert_eq!(n.edge("e.1").unwrap().length, 1.0);
        assert_eq!(n.edge("e.2").unwrap().length, 1.0);
        assert_eq!(n.condition("e.mid"), Some(Standard));
        assert_eq!(betti(&n), 1);
        assert!(validate(&n).is_empty());
    }

    #[test]
    fn figure_eight_betti_two() {
        let g = MetricGraph::new(
            vec![v("a", Standard)],
            vec![Edge::new("l1", "a", "a", 1.0), Edge::new("l2", "a", "a", 1.5)],
        );
        let n = normalize(&g).unwrap();
        assert_eq!(n.vertices().len(), 3);
        assert_eq!(n.edges().len(), 4);
        assert_eq!(betti(&n), 2);
    }

    #[test]
    fn dirichlet_degree_two_splits_into_leaves() {
        let g = MetricGraph::new(
            vec![v("a", Standard), v("d", Dirichlet), v("b", Standard)],
            vec![
                Edge::new("e", "a", "d", 1.0),
                Edge::new("f", "d", "b", 1.0),
                Edge::new("g", "a", "b", 1.0),
            ],
        );
        let n = normalize(&g).unwrap();
        assert!(n.vertex("d").is_none());
        assert_eq!(n.edge("e").unwrap().terminal, "d.1");
        assert_eq!(n.edge("f").unwrap().initial, "d.2");
        assert_eq!(n.dirichlet_count(), 2);
        assert_eq!(n.degree("d.1"), 1);
        assert!(validate(&n).is_empty());
    }

    #[test]
    fn disconnected_after_split_is_error() {
        let g = MetricGraph::new(
            vec![v("a", Standard), v("d", Dirichlet), v("b", Standard)],
            vec![Edge::new("e", "a", "d", 1.0), Edge::new("f", "d", "b", 1.0)],
        );
        match normalize(&g) {
            Err(Error::Disconnected(c)) => {
                assert_eq!(c.len(), 2);
                assert!(c.iter().any(|comp| comp.contains(&"a".to_string())));
                assert!(c.iter().any(|comp| comp.contains(&"b".to_string())));
            }
            other => panic!("expected disconnection, got {other:?}"),
        }
    }

    #[test]
    fn normalized_tree_is_unchanged() {
        let g = interval();
        assert_eq!(normalize(&g).unwrap(), g);
    }

    #[test]
    fn index_map_layout() {
        let g = MetricGraph::new(
            vec![v("b", Standard), v("a", Standard), v("c", Standard)],
            vec![Edge::new("y", "a", "c", 1.0), Edge::new("x", "b", "a", 1.0)],
        );
        let m = GraphIndexMap::new(&g);
        assert_eq!(m.dim(), 7);
        assert_eq!(m.vertex_slot("a"), Some(0));
        assert_eq!(m.vertex_slot("c"), Some(2));
        assert_eq!(m.initial_slot("x"), Some(3));
        assert_eq!(m.terminal_slot("x"), Some(4));
        assert_eq!(m.initial_slot("y"), Some(5));
        assert_eq!(m.label(6), "y@terminal");
    }

    #[test]
    fn subdivide_and_flip() {
        let g = interval();
        let s = g.subdivide("e", 0.25).unwrap();
        assert_eq!(s.edges().len(), 2);
        assert_eq!(s.edge("e.1").unwrap().length, 0.25);
        assert_eq!(s.edge("e.2").unwrap().length, 0.75);
        assert!((s.total_length() - 1.0).abs() < 1e-15);
        let f = g.flip_edge("e").unwrap();
        assert_eq!(f.edge("e").unwrap().initial, "b");
        assert!(g.subdivide("e", 1.0).is_err());
    }
}
