//! Numerical checks of the determinant identities under graph surgery and of
//! the kernel structure at `ω = 0`.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{betti, MetricGraph, Vertex, VertexCondition};
use crate::linalg;
use crate::secular::{assemble_at_zero, assemble_harmonic, SecularSystem};
use crate::unionfind::UnionFind;

/// Residuals pass when `≤ RESIDUAL_TOL × max(1, max |det|)` over the grid.
pub const RESIDUAL_TOL: f64 = 1e-9;
const KERNEL_THRESHOLD: f64 = 1e-10;

/// 200 uniform points on `(0.05, 20]`.
pub fn surgery_grid() -> Vec<f64> {
    uniform_grid(0.05, 20.0, 200)
}

/// `n` points `lo + k (hi − lo) / n`, `k = 1..=n`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| lo + k as f64 * (hi - lo) / n as f64).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct Residual {
    /// Largest absolute deviation over the grid.
    pub residual: f64,
    /// Largest `|det|` of any matrix entering the identity.
    pub scale: f64,
    pub points: usize,
}

impl Residual {
    pub fn scaled(&self) -> f64 {
        self.residual / self.scale.max(1.0)
    }

    pub fn passes(&self) -> bool {
        self.scaled() <= RESIDUAL_TOL
    }
}

fn residual_over(
    grid: &[f64],
    sys: &[&SecularSystem],
    mut identity: impl FnMut(f64, &[f64]) -> f64,
) -> Result<Residual> {
    let floor = sys.iter().map(|s| s.lower_bound()).fold(0.0, f64::max);
    let mut out = Residual {
        residual: 0.0,
        scale: 0.0,
        points: 0,
    };
    let mut dets = vec![0.0; sys.len()];
    for &w in grid.iter().filter(|&&w| w > floor) {
        for (d, s) in dets.iter_mut().zip(sys) {
            *d = s.det(w)?;
        }
        out.scale = dets.iter().fold(out.scale, |m, d| m.max(d.abs()));
        out.residual = out.residual.max(identity(w, &dets).abs());
        out.points += 1;
    }
    Ok(out)
}

fn require_standard(graph: &MetricGraph, v: &str) -> Result<()> {
    match graph.condition(v) {
        None => Err(Error::UnknownVertex(v.to_string())),
        Some(VertexCondition::Standard) => Ok(()),
        Some(_) => Err(Error::NotStandardVertex(v.to_string())),
    }
}

/// `det A_ω(G⁺) = −sin(ℓω) det A_ω(G, V_D ∪ {v}) + cos(ℓω) det A_ω(G, V_D)`, with
/// `G⁺` obtained by attaching an edge of length `ℓ` at `v` ending in a standard vertex.
pub fn check_pendant_standard(graph: &MetricGraph, v: &str, length: f64, grid: &[f64]) -> Result<Residual> {
    require_standard(graph, v)?;
    let (plus, _) = graph.attach_pendant(v, length, VertexCondition::Standard)?;
    let sp = SecularSystem::relaxed(&plus)?;
    let sd = SecularSystem::relaxed(&graph.with_condition(v, VertexCondition::Dirichlet)?)?;
    let s = SecularSystem::relaxed(graph)?;
    residual_over(grid, &[&sp, &sd, &s], |w, d| {
        let (sin, cos) = (length * w).sin_cos();
        d[0] - (-sin * d[1] + cos * d[2])
    })
}

/// `det A_ω(G⁺, V_D ∪ {w}) = sin(ℓω) det A_ω(G, V_D) + cos(ℓω) det A_ω(G, V_D ∪ {v})`,
/// the pendant vertex `w` carrying a Dirichlet condition.
pub fn check_pendant_dirichlet(graph: &MetricGraph, v: &str, length: f64, grid: &[f64]) -> Result<Residual> {
    require_standard(graph, v)?;
    let (plus, _) = graph.attach_pendant(v, length, VertexCondition::Dirichlet)?;
    let sp = SecularSystem::relaxed(&plus)?;
    let s = SecularSystem::relaxed(graph)?;
    let sd = SecularSystem::relaxed(&graph.with_condition(v, VertexCondition::Dirichlet)?)?;
    residual_over(grid, &[&sp, &s, &sd], |w, d| {
        let (sin, cos) = (length * w).sin_cos();
        d[0] - (sin * d[1] + cos * d[2])
    })
}

/// The pieces `G_1, …, G_k` of `G` cut at `v`: each keeps its own copy of `v`
/// together with the edges joining it to `v`.
pub fn components_at(graph: &MetricGraph, v: &str) -> Result<Vec<MetricGraph>> {
    if graph.vertex(v).is_none() {
        return Err(Error::UnknownVertex(v.to_string()));
    }
    let vertices = graph.vertices();
    let pos = |id: &str| vertices.iter().position(|x| x.id == id).expect("known vertex");
    let cut = pos(v);
    let mut uf = UnionFind::new(vertices.len());
    for e in graph.edges() {
        if e.initial != v && e.terminal != v {
            uf.union(pos(&e.initial), pos(&e.terminal));
        }
    }
    let touched: BTreeSet<usize> = graph
        .edges()
        .iter()
        .filter(|e| e.initial == v || e.terminal == v)
        .map(|e| pos(e.other(v)))
        .collect();
    let groups = uf.groups(|i| i != cut);
    let mut pieces = Vec::new();
    for group in groups {
        let members: BTreeSet<usize> = group.into_iter().collect();
        if !members.iter().any(|i| touched.contains(i)) && graph.degree(v) > 0 {
            // unreachable from the cut vertex; the graph was disconnected to begin with
            return Err(Error::Disconnected(vec![members
                .iter()
                .map(|&i| vertices[i].id.clone())
                .collect()]));
        }
        let mut vs: Vec<Vertex> = members.iter().map(|&i| vertices[i].clone()).collect();
        vs.push(vertices[cut].clone());
        let es = graph
            .edges()
            .iter()
            .filter(|e| {
                let (a, b) = (pos(&e.initial), pos(&e.terminal));
                (members.contains(&a) || a == cut) && (members.contains(&b) || b == cut) && !(a == cut && b == cut)
            })
            .cloned()
            .collect();
        pieces.push(MetricGraph::new(vs, es));
    }
    Ok(pieces)
}

#[derive(Clone, Debug, Serialize)]
pub struct SplitResidual {
    pub components: usize,
    #[serde(flatten)]
    pub residual: Residual,
}

/// `det A_ω(G, v) = Π_i det A_ω(G_i, v)` for a Dirichlet vertex `v` whose
/// removal leaves the components `G_1, …, G_k`. With `k = 1` the identity is
/// trivial and the residual is 0.
pub fn check_dirichlet_split(graph: &MetricGraph, v: &str, grid: &[f64]) -> Result<SplitResidual> {
    match graph.condition(v) {
        None => return Err(Error::UnknownVertex(v.to_string())),
        Some(VertexCondition::Dirichlet) => {}
        Some(c) => {
            return Err(Error::Precondition(format!(
                "vertex `{v}` has {c} condition, expected dirichlet"
            )))
        }
    }
    let pieces = components_at(graph, v)?;
    let whole = SecularSystem::relaxed(graph)?;
    if pieces.len() <= 1 {
        let scale = residual_over(grid, &[&whole], |_, _| 0.0)?;
        return Ok(SplitResidual {
            components: pieces.len(),
            residual: scale,
        });
    }
    let systems: Vec<SecularSystem> = pieces.iter().map(SecularSystem::relaxed).collect::<Result<_>>()?;
    let mut all = vec![&whole];
    all.extend(systems.iter());
    let residual = residual_over(grid, &all, |_, d| d[0] - d[1..].iter().product::<f64>())?;
    Ok(SplitResidual {
        components: pieces.len(),
        residual,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KernelDimension {
    pub computed: usize,
    pub predicted: usize,
}

impl KernelDimension {
    pub fn passes(&self) -> bool {
        self.computed == self.predicted
    }
}

/// `dim ker A₀` against `β + 1` (no Dirichlet vertex) or `#V_D + β − 1`.
pub fn check_kernel_dimension(graph: &MetricGraph) -> Result<KernelDimension> {
    let a0 = assemble_at_zero(graph)?;
    let computed = linalg::nullspace(&a0.matrix, KERNEL_THRESHOLD).dim();
    let b = betti(graph);
    let nd = graph.dirichlet_count();
    let predicted = if nd == 0 { b + 1 } else { nd + b - 1 };
    Ok(KernelDimension { computed, predicted })
}

/// Kernel dimension of the harmonic `ω → 0` matrix; 1 on every connected graph
/// without Dirichlet vertices (the constants).
pub fn check_harmonic_kernel(graph: &MetricGraph) -> Result<KernelDimension> {
    if graph.has_dirichlet() {
        return Err(Error::Precondition(
            "harmonic kernel check needs a graph without Dirichlet vertices".into(),
        ));
    }
    let m = assemble_harmonic(graph)?;
    Ok(KernelDimension {
        computed: linalg::nullspace(&m, KERNEL_THRESHOLD).dim(),
        predicted: 1,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ZeroDerivative {
    pub computed: f64,
    pub predicted: f64,
}

impl ZeroDerivative {
    pub fn passes(&self) -> bool {
        (self.computed - self.predicted).abs() <= 1e-7 * (1.0 - self.predicted)
    }
}

/// `d/dω det A_ω` at `ω = 0` against `−Σℓ_e` on a standard tree.
pub fn check_zero_derivative(tree: &MetricGraph) -> Result<ZeroDerivative> {
    if !tree.is_tree() {
        return Err(Error::HypothesesViolated(format!(
            "graph has Betti number {}; on graphs with cycles the zero at ω = 0 has higher order",
            betti(tree)
        )));
    }
    if tree.has_dirichlet() || !tree.is_free() {
        return Err(Error::Precondition(
            "zero-derivative check needs standard conditions and zero potential".into(),
        ));
    }
    let computed = SecularSystem::new(tree)?.det_derivative(0.0, 1)?;
    Ok(ZeroDerivative {
        computed,
        predicted: -tree.total_length(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub check: String,
    pub target: Option<String>,
    pub passed: bool,
    pub value: f64,
    pub limit: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

const PENDANT_LENGTHS: [f64; 3] = [1.0, 0.7, 1.3];

/// Every applicable identity on a normalized graph: both pendant identities at
/// each standard vertex, the Dirichlet product formula at each existing
/// Dirichlet vertex and at each cut vertex (made Dirichlet), and the `ω = 0`
/// kernel and derivative checks when their hypotheses hold.
pub fn check_all(graph: &MetricGraph, grid: &[f64]) -> Result<IdentityReport> {
    let mut checks = Vec::new();
    let push_residual = |checks: &mut Vec<CheckOutcome>, name: &str, v: &str, r: &Residual, extra: String| {
        checks.push(CheckOutcome {
            check: name.into(),
            target: Some(v.into()),
            passed: r.passes(),
            value: r.scaled(),
            limit: RESIDUAL_TOL,
            detail: format!(
                "residual {:e}, max|det| {:e}, {} points{extra}",
                r.residual, r.scale, r.points
            ),
        });
    };

    for (k, v) in graph.vertices().iter().enumerate() {
        let len = PENDANT_LENGTHS[k % PENDANT_LENGTHS.len()];
        match v.condition {
            VertexCondition::Standard => {
                let r = check_pendant_standard(graph, &v.id, len, grid)?;
                push_residual(&mut checks, "pendant-standard", &v.id, &r, format!(", ℓ = {len}"));
                let r = check_pendant_dirichlet(graph, &v.id, len, grid)?;
                push_residual(&mut checks, "pendant-dirichlet", &v.id, &r, format!(", ℓ = {len}"));
                if graph.degree(&v.id) > 1 {
                    let g = graph.with_condition(&v.id, VertexCondition::Dirichlet)?;
                    let r = check_dirichlet_split(&g, &v.id, grid)?;
                    if r.components > 1 {
                        let extra = format!(", {} components", r.components);
                        push_residual(&mut checks, "dirichlet-split", &v.id, &r.residual, extra);
                    }
                }
            }
            VertexCondition::Dirichlet => {
                let r = check_dirichlet_split(graph, &v.id, grid)?;
                let extra = format!(", {} components", r.components);
                push_residual(&mut checks, "dirichlet-split", &v.id, &r.residual, extra);
            }
            VertexCondition::Delta(_) => {}
        }
    }

    if graph.is_free() {
        let k = check_kernel_dimension(graph)?;
        checks.push(CheckOutcome {
            check: "kernel-dimension".into(),
            target: None,
            passed: k.passes(),
            value: k.computed as f64,
            limit: k.predicted as f64,
            detail: format!("dim ker A0 = {}, predicted {}", k.computed, k.predicted),
        });
        if !graph.has_dirichlet() {
            let h = check_harmonic_kernel(graph)?;
            checks.push(CheckOutcome {
                check: "harmonic-kernel".into(),
                target: None,
                passed: h.passes(),
                value: h.computed as f64,
                limit: 1.0,
                detail: format!("dim ker = {}", h.computed),
            });
            if graph.is_tree() {
                let d = check_zero_derivative(graph)?;
                checks.push(CheckOutcome {
                    check: "zero-derivative".into(),
                    target: None,
                    passed: d.passes(),
                    value: d.computed,
                    limit: d.predicted,
                    detail: format!("det'(0) = {:.12}, predicted {:.12}", d.computed, d.predicted),
                });
            }
        }
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(IdentityReport { checks, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::normalize;
    use crate::graph::Edge;
    use VertexCondition::{Dirichlet, Standard};

    fn path(lengths: &[f64], ends: (VertexCondition, VertexCondition)) -> MetricGraph {
        let n = lengths.len();
        let vertices = (0..=n)
            .map(|i| Vertex {
                id: format!("v{i}"),
                condition: if i == 0 {
                    ends.0
                } else if i == n {
                    ends.1
                } else {
                    Standard
                },
            })
            .collect();
        let edges = lengths
            .iter()
            .enumerate()
            .map(|(i, &l)| Edge::new(format!("e{i}"), format!("v{i}"), format!("v{}", i + 1), l))
            .collect();
        MetricGraph::new(vertices, edges)
    }

    fn star(lengths: &[f64], centre: VertexCondition) -> MetricGraph {
        let mut vertices = vec![Vertex {
            id: "c".into(),
            condition: centre,
        }];
        let mut edges = Vec::new();
        for (i, &l) in lengths.iter().enumerate() {
            vertices.push(Vertex {
                id: format!("l{i}"),
                condition: Standard,
            });
            edges.push(Edge::new(format!("e{i}"), "c", format!("l{i}"), l));
        }
        MetricGraph::new(vertices, edges)
    }

    #[test]
    fn grid_shape() {
        let g = surgery_grid();
        assert_eq!(g.len(), 200);
        assert!(g[0] > 0.05);
        assert_eq!(*g.last().unwrap(), 20.0);
    }

    #[test]
    fn pendant_on_single_edge() {
        let g = path(&[1.0], (Standard, Standard));
        let grid = uniform_grid(0.0, 20.0, 1000);
        let r = check_pendant_standard(&g, "v1", 1.0, &grid).unwrap();
        assert!(r.residual <= 1e-10, "{r:?}");
        let r = check_pendant_dirichlet(&g, "v1", 1.0, &grid).unwrap();
        assert!(r.residual <= 1e-10, "{r:?}");
    }

    #[test]
    fn pendant_where_sine_vanishes() {
        let g = path(&[0.8, 1.7], (Standard, Standard));
        let grid: Vec<f64> = (1..=6).map(|k| k as f64 * std::f64::consts::PI / 1.3).collect();
        let r = check_pendant_standard(&g, "v1", 1.3, &grid).unwrap();
        assert!(r.residual <= 1e-12, "{r:?}");
    }

    #[test]
    fn pendant_rejects_dirichlet_vertex() {
        let g = path(&[1.0], (Dirichlet, Standard));
        assert!(matches!(
            check_pendant_standard(&g, "v0", 1.0, &surgery_grid()),
            Err(Error::NotStandardVertex(_))
        ));
    }

    #[test]
    fn dirichlet_leaf_tree_has_unit_a0_det() {
        let g = path(&[1.0], (Standard, Standard));
        let (plus, w) = g.attach_pendant("v1", 0.6, Dirichlet).unwrap();
        assert_eq!(plus.condition(&w), Some(Dirichlet));
        let d = assemble_at_zero(&plus).unwrap().det();
        assert!((d - 1.0).abs() < 1e-14);
    }

    #[test]
    fn split_two_intervals() {
        let g = path(&[1.0, 1.0], (Standard, Standard))
            .with_condition("v1", Dirichlet)
            .unwrap();
        let r = check_dirichlet_split(&g, "v1", &surgery_grid()).unwrap();
        assert_eq!(r.components, 2);
        assert!(r.residual.residual <= 1e-11, "{r:?}");
        // each piece is a Dirichlet–Standard interval: det = cos(ω)
        let sys = SecularSystem::relaxed(&g).unwrap();
        let w: f64 = 0.9;
        assert!((sys.det(w).unwrap() - w.cos() * w.cos()).abs() < 1e-14);
    }

    #[test]
    fn split_star_centre() {
        let g = star(&[0.9, 1.4, 2.2], Dirichlet);
        let r = check_dirichlet_split(&g, "c", &surgery_grid()).unwrap();
        assert_eq!(r.components, 3);
        assert!(r.residual.residual <= 1e-10, "{r:?}");
    }

    #[test]
    fn split_trivial_for_leaf() {
        let g = path(&[1.0, 2.0], (Dirichlet, Standard));
        let r = check_dirichlet_split(&g, "v0", &surgery_grid()).unwrap();
        assert_eq!(r.components, 1);
        assert_eq!(r.residual.residual, 0.0);
    }

    #[test]
    fn kernel_dimensions() {
        let tree = path(&[1.0, 2.0, 0.5], (Standard, Standard));
        assert_eq!(
            check_kernel_dimension(&tree).unwrap(),
            KernelDimension {
                computed: 1,
                predicted: 1
            }
        );
        let cycle = normalize(&MetricGraph::new(
            vec![Vertex {
                id: "a".into(),
                condition: Standard,
            }],
            vec![Edge::new("e", "a", "a", 2.0)],
        ))
        .unwrap();
        assert_eq!(
            check_kernel_dimension(&cycle).unwrap(),
            KernelDimension {
                computed: 2,
                predicted: 2
            }
        );
        assert_eq!(check_harmonic_kernel(&cycle).unwrap().computed, 1);
        let two_leaves = path(&[1.0, 2.0], (Dirichlet, Dirichlet));
        assert_eq!(
            check_kernel_dimension(&two_leaves).unwrap(),
            KernelDimension {
                computed: 1,
                predicted: 1
            }
        );
    }

    #[test]
    fn zero_derivatives() {
        let d = check_zero_derivative(&path(&[1.0], (Standard, Standard))).unwrap();
        assert!((d.computed + 1.0).abs() < 1e-8 && d.passes());
        let d = check_zero_derivative(&path(&[1.0, 2.0, 0.5], (Standard, Standard))).unwrap();
        assert!((d.computed + 3.5).abs() < 1e-7 && d.passes());
        let d = check_zero_derivative(&star(&[1.0; 4], Standard)).unwrap();
        assert!((d.computed + 4.0).abs() < 1e-7 && d.passes());
        let cycle = normalize(&MetricGraph::new(
            vec![Vertex {
                id: "a".into(),
                condition: Standard,
            }],
            vec![Edge::new("e", "a", "a", 2.0)],
        ))
        .unwrap();
        assert!(matches!(
            check_zero_derivative(&cycle),
            Err(Error::HypothesesViolated(_))
        ));
    }

    #[test]
    fn full_suite_on_star() {
        let g = star(&[1.0, 2f64.sqrt(), 3f64.sqrt()], Standard);
        let report = check_all(&g, &surgery_grid()).unwrap();
        assert!(report.passed, "{report:#?}");
        let names: BTreeSet<&str> = report.checks.iter().map(|c| c.check.as_str()).collect();
        for n in [
            "pendant-standard",
            "pendant-dirichlet",
            "dirichlet-split",
            "kernel-dimension",
            "harmonic-kernel",
            "zero-derivative",
        ] {
            assert!(names.contains(n), "{n} missing");
        }
    }
}
