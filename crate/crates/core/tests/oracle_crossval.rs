//! Secular roots against the finite-element oracle.

use qgraph_core::corpus::{self, star};
use qgraph_core::graph::normalize;
use qgraph_core::oracle::{discretize, lowest_eigenvalues, OracleSpectrum};
use qgraph_core::spectral::{spectrum, Spectrum, SpectrumOptions};
use qgraph_core::{Edge, MetricGraph, Vertex, VertexCondition};
use rand::Rng;

/// Pairs secular roots (with multiplicity) against oracle clusters, skipping
/// the λ = 0 cluster when the graph has one.
fn compare(s: &Spectrum, oracle: &OracleSpectrum, rel_tol: f64) -> Result<f64, String> {
    let clusters: Vec<_> = oracle
        .clusters
        .iter()
        .filter(|c| !(s.zero_mode && c.lambda.abs() < 1e-6))
        .collect();
    let mut worst: f64 = 0.0;
    for (p, c) in s.points.iter().zip(&clusters) {
        let rel = (c.lambda.sqrt() - p.omega).abs() / p.omega;
        worst = worst.max(rel);
        if rel > rel_tol || p.multiplicity != c.multiplicity {
            return Err(format!(
                "ω = {} (m = {}) vs oracle √λ = {} (m = {})",
                p.omega,
                p.multiplicity,
                c.lambda.sqrt(),
                c.multiplicity
            ));
        }
    }
    Ok(worst)
}

fn oracle_for(s: &Spectrum, g: &MetricGraph, points_per_unit: usize) -> OracleSpectrum {
    let k: usize = s.points.iter().map(|p| p.multiplicity).sum::<usize>() + s.zero_mode as usize;
    lowest_eigenvalues(&discretize(g, points_per_unit).unwrap(), k).unwrap()
}

#[test]
fn random_graphs_below_fifteen() {
    let mut rng = corpus::rng(2024);
    for i in 0..10 {
        let b = i % 3;
        let e = b + rng.gen_range(1..=6 - b);
        let g = corpus::random_graph(&mut rng, e, b, (0.5, 2.0));
        let s = spectrum(&g, &SpectrumOptions::up_to(15.0)).unwrap();
        let oracle = oracle_for(&s, &g, 500);
        let worst = compare(&s, &oracle, 2e-3).unwrap_or_else(|m| panic!("graph {i}: {m}"));
        assert!(worst < 1e-4, "graph {i}: {worst}");
    }
}

#[test]
fn equilateral_star_first_five() {
    let g = star(&[1.0, 1.0, 1.0]);
    let s = spectrum(&g, &SpectrumOptions::up_to(9.0)).unwrap();
    assert!(s.points.len() >= 5);
    let s = Spectrum {
        points: s.points[..5].to_vec(),
        ..s
    };
    let oracle = oracle_for(&s, &g, 2000);
    compare(&s, &oracle, 1e-3).unwrap();
    assert_eq!(s.points[0].multiplicity, 2);
}

#[test]
fn two_edge_cycle_is_degenerate() {
    let g = corpus::cycle(&[1.0, 1.0]);
    let s = spectrum(&g, &SpectrumOptions::up_to(10.0)).unwrap();
    assert_eq!(s.points.len(), 3);
    for (k, p) in s.points.iter().enumerate() {
        assert!((p.omega - (k + 1) as f64 * std::f64::consts::PI).abs() < 1e-9);
        assert_eq!(p.multiplicity, 2);
    }
    compare(&s, &oracle_for(&s, &g, 1000), 1e-4).unwrap();
}

#[test]
fn delta_couplings_match_oracle() {
    for alpha in [-2.0, -0.5, 0.8, 3.0] {
        let g = star(&[0.8, 1.3, 1.7])
            .with_condition("c", VertexCondition::Delta(alpha))
            .unwrap();
        let g = g.with_condition("l1", VertexCondition::Delta(-alpha / 2.0)).unwrap();
        let s = spectrum(&g, &SpectrumOptions::up_to(12.0)).unwrap();
        // attractive couplings may produce negative eigenvalues, which have no positive root
        let oracle = oracle_for(&s, &g, 1000);
        let positive: Vec<_> = oracle.clusters.iter().filter(|c| c.lambda > 0.0).cloned().collect();
        let oracle = OracleSpectrum {
            eigenvalues: oracle.eigenvalues.clone(),
            clusters: positive,
        };
        compare(&s, &oracle, 2e-4).unwrap_or_else(|m| panic!("α = {alpha}: {m}"));
    }
}

#[test]
fn edgewise_potentials_match_oracle() {
    let mut rng = corpus::rng(77);
    for i in 0..4 {
        let g = corpus::random_graph(&mut rng, 4, i % 2, (0.5, 2.0));
        let mut edges = g.edges().to_vec();
        for e in edges.iter_mut() {
            e.potential = rng.gen_range(-2.0..6.0);
        }
        let g = MetricGraph::new(g.vertices().to_vec(), edges);
        let s = spectrum(&g, &SpectrumOptions::up_to(14.0)).unwrap();
        let ceiling = g.max_potential();
        let oracle = oracle_for(&s, &g, 1000);
        // eigenvalues at or below max q_e are invisible to the secular scan
        let visible: Vec<_> = oracle.clusters.iter().filter(|c| c.lambda > ceiling).cloned().collect();
        let skipped = oracle.clusters.len() - visible.len();
        let oracle = OracleSpectrum {
            eigenvalues: oracle.eigenvalues.clone(),
            clusters: visible,
        };
        let s = Spectrum {
            points: s.points[..s.points.len().saturating_sub(skipped)].to_vec(),
            zero_mode: false,
            ..s
        };
        compare(&s, &oracle, 2e-4).unwrap_or_else(|m| panic!("graph {i}: {m}"));
    }
}

#[test]
fn normalization_preserves_spectrum() {
    let loop_graph = MetricGraph::new(
        vec![
            Vertex {
                id: "a".into(),
                condition: VertexCondition::Standard,
            },
            Vertex {
                id: "b".into(),
                condition: VertexCondition::Standard,
            },
        ],
        vec![Edge::new("loop", "a", "a", 2.0), Edge::new("stem", "a", "b", 0.9)],
    );
    let dirichlet_hub = MetricGraph::new(
        vec![
            Vertex {
                id: "d".into(),
                condition: VertexCondition::Dirichlet,
            },
            Vertex {
                id: "x".into(),
                condition: VertexCondition::Standard,
            },
            Vertex {
                id: "y".into(),
                condition: VertexCondition::Standard,
            },
        ],
        vec![
            Edge::new("e1", "d", "x", 1.0),
            Edge::new("e2", "x", "y", 0.6),
            Edge::new("e3", "y", "d", 1.4),
        ],
    );
    for g in [loop_graph, dirichlet_hub] {
        let n = normalize(&g).unwrap();
        let a = lowest_eigenvalues(&discretize(&g, 1000).unwrap(), 5).unwrap();
        let b = lowest_eigenvalues(&discretize(&n, 1000).unwrap(), 5).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).abs() <= 1e-4 * x.abs().max(1.0), "{x} vs {y}");
        }
        let s = spectrum(&n, &SpectrumOptions::up_to(8.0)).unwrap();
        compare(&s, &oracle_for(&s, &n, 1000), 2e-4).unwrap();
    }
}

#[test]
fn dirichlet_ground_state_positive_only_with_dirichlet() {
    let mut rng = corpus::rng(5);
    for _ in 0..4 {
        let g = corpus::random_graph(&mut rng, 4, 1, (0.5, 2.0));
        let free = lowest_eigenvalues(&discretize(&g, 500).unwrap(), 1).unwrap();
        assert!(free.eigenvalues[0].abs() < 1e-8);
        let d = corpus::with_dirichlet_leaf(&mut rng, &g, (0.5, 2.0));
        let pinned = lowest_eigenvalues(&discretize(&d, 500).unwrap(), 1).unwrap();
        assert!(pinned.eigenvalues[0] > 1e-3);
    }
}
