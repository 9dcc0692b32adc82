//! Deterministic families of test graphs and seeded random corpora.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Edge, MetricGraph, Vertex, VertexCondition};

pub type CorpusRng = ChaCha8Rng;

pub fn rng(seed: u64) -> CorpusRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn vertex(id: impl Into<String>, condition: VertexCondition) -> Vertex {
    Vertex {
        id: id.into(),
        condition,
    }
}

/// Single edge `a → b` of length `length`.
pub fn interval(length: f64, a: VertexCondition, b: VertexCondition) -> MetricGraph {
    MetricGraph::new(
        vec![vertex("a", a), vertex("b", b)],
        vec![Edge::new("e", "a", "b", length)],
    )
}

/// Path `v0 − v1 − … − vn`, standard conditions throughout.
pub fn path(lengths: &[f64]) -> MetricGraph {
    let vertices = (0..=lengths.len())
        .map(|i| vertex(format!("v{i}"), VertexCondition::Standard))
        .collect();
    let edges = lengths
        .iter()
        .enumerate()
        .map(|(i, &l)| Edge::new(format!("e{i}"), format!("v{i}"), format!("v{}", i + 1), l))
        .collect();
    MetricGraph::new(vertices, edges)
}

/// Star with centre `c` and leaves `l0, l1, …`, standard conditions throughout.
pub fn star(lengths: &[f64]) -> MetricGraph {
    let mut vertices = vec![vertex("c", VertexCondition::Standard)];
    let mut edges = Vec::new();
    for (i, &l) in lengths.iter().enumerate() {
        vertices.push(vertex(format!("l{i}"), VertexCondition::Standard));
        edges.push(Edge::new(format!("e{i}"), "c", format!("l{i}"), l));
    }
    MetricGraph::new(vertices, edges)
}

/// The star with edge lengths `1, √2, √3`.
pub fn star_123() -> MetricGraph {
    star(&[1.0, 2f64.sqrt(), 3f64.sqrt()])
}

/// Cycle `v0 → v1 → … → v0` with at least two edges.
pub fn cycle(lengths: &[f64]) -> MetricGraph {
    assert!(lengths.len() >= 2, "a loop-free cycle needs two edges");
    let n = lengths.len();
    let vertices = (0..n)
        .map(|i| vertex(format!("v{i}"), VertexCondition::Standard))
        .collect();
    let edges = lengths
        .iter()
        .enumerate()
        .map(|(i, &l)| Edge::new(format!("e{i}"), format!("v{i}"), format!("v{}", (i + 1) % n), l))
        .collect();
    MetricGraph::new(vertices, edges)
}

/// Random recursive tree: vertex `k` attaches to a uniformly chosen earlier
/// vertex. Edge orientations are random.
pub fn random_tree(rng: &mut CorpusRng, edges: usize, lengths: (f64, f64)) -> MetricGraph {
    random_graph(rng, edges, 0, lengths)
}

/// Connected graph with `edges` edges and Betti number `betti`: a random tree
/// on `edges − betti` edges plus `betti` chords between distinct vertices.
pub fn random_graph(rng: &mut CorpusRng, edges: usize, betti: usize, lengths: (f64, f64)) -> MetricGraph {
    assert!(edges > betti, "need at least one tree edge");
    let tree_edges = edges - betti;
    let n = tree_edges + 1;
    assert!(betti == 0 || n >= 2);
    let vertices = (0..n)
        .map(|i| vertex(format!("v{i}"), VertexCondition::Standard))
        .collect();
    let mut list = Vec::with_capacity(edges);
    let orient = |rng: &mut CorpusRng, a: usize, b: usize| if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
    for k in 1..n {
        let parent = rng.gen_range(0..k);
        let (a, b) = orient(rng, parent, k);
        let l = rng.gen_range(lengths.0..=lengths.1);
        list.push(Edge::new(
            format!("e{}", list.len()),
            format!("v{a}"),
            format!("v{b}"),
            l,
        ));
    }
    for _ in 0..betti {
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let (a, b) = orient(rng, a, b);
        let l = rng.gen_range(lengths.0..=lengths.1);
        list.push(Edge::new(
            format!("e{}", list.len()),
            format!("v{a}"),
            format!("v{b}"),
            l,
        ));
    }
    MetricGraph::new(vertices, list)
}

/// Random cycle with `edges ≥ 2` edges.
pub fn random_cycle(rng: &mut CorpusRng, edges: usize, lengths: (f64, f64)) -> MetricGraph {
    let ls: Vec<f64> = (0..edges).map(|_| rng.gen_range(lengths.0..=lengths.1)).collect();
    cycle(&ls)
}

/// Puts a Dirichlet condition on a random leaf, or attaches a new Dirichlet
/// pendant edge to a random vertex when the graph has no leaf.
pub fn with_dirichlet_leaf(rng: &mut CorpusRng, graph: &MetricGraph, lengths: (f64, f64)) -> MetricGraph {
    let leaves: Vec<&Vertex> = graph
        .vertices()
        .iter()
        .filter(|v| graph.degree(&v.id) == 1 && !v.condition.is_dirichlet())
        .collect();
    if let Some(v) = leaves.choose(rng) {
        return graph
            .with_condition(&v.id, VertexCondition::Dirichlet)
            .expect("vertex exists");
    }
    let v = graph.vertices().choose(rng).expect("nonempty graph").id.clone();
    let l = rng.gen_range(lengths.0..=lengths.1);
    graph
        .attach_pendant(&v, l, VertexCondition::Dirichlet)
        .expect("vertex exists")
        .0
}

/// Pendant Dirichlet edge at a random vertex; always adds a new edge.
pub fn with_dirichlet_pendant(rng: &mut CorpusRng, graph: &MetricGraph, lengths: (f64, f64)) -> MetricGraph {
    let v = graph.vertices().choose(rng).expect("nonempty graph").id.clone();
    let l = rng.gen_range(lengths.0..=lengths.1);
    graph
        .attach_pendant(&v, l, VertexCondition::Dirichlet)
        .expect("vertex exists")
        .0
}

/// Mixed corpus of `count` graphs: trees, cycles and graphs with `β ≤ 3`,
/// lengths uniform in `[0.3, 3]`, a third of them with a Dirichlet leaf.
pub fn mixed_corpus(seed: u64, count: usize) -> Vec<MetricGraph> {
    let mut rng = rng(seed);
    let lengths = (0.3, 3.0);
    (0..count)
        .map(|i| {
            let g = match i % 4 {
                0 => {
                    let e = rng.gen_range(1..=6);
                    random_tree(&mut rng, e, lengths)
                }
                1 => {
                    let e = rng.gen_range(2..=5);
                    random_cycle(&mut rng, e, lengths)
                }
                2 => {
                    let b = rng.gen_range(1..=3);
                    let e = b + rng.gen_range(2..=4);
                    random_graph(&mut rng, e, b, lengths)
                }
                _ => {
                    let e = rng.gen_range(2..=7);
                    random_tree(&mut rng, e, lengths)
                }
            };
            if i % 3 == 2 {
                with_dirichlet_leaf(&mut rng, &g, lengths)
            } else {
                g
            }
        })
        .collect()
}
