//! The real secular matrix `A_ω` and its δ / potential variant `B_ω`.
//!
//! Unknowns are the vertex values `x(v) = ψ(v)` and the rescaled outward
//! derivatives `x(v,e) = ∂_e ψ(v) / ω_e`, with `ω_e = √(ω² − q_e)` the local
//! frequency on edge `e`. Rows `0..|V|` encode the vertex conditions; edge `e = vw`
//! of length `ℓ` contributes the two consistency rows
//!
//! ```text
//! x(w) − cos(ℓω_e) x(v) + sin(ℓω_e) x(v,e)           = 0
//!        sin(ℓω_e) x(v) + cos(ℓω_e) x(v,e) + x(w,e)  = 0
//! ```
//!
//! Rows and columns share one ordering (see [`GraphIndexMap`]), which fixes the
//! sign of the determinant independently of how ids are sorted.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{validate, GraphIndexMap, MetricGraph, VertexCondition, Violation};
use crate::linalg;

#[derive(Clone, Debug)]
pub struct SecularMatrix {
    pub omega: f64,
    pub index: GraphIndexMap,
    pub matrix: DMatrix<f64>,
}

impl SecularMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn det(&self) -> f64 {
        linalg::determinant(&self.matrix)
    }
}

/// `ω_e = √(ω² − q)`; exactly `ω` when `q = 0`.
pub fn local_frequency(omega: f64, q: f64) -> Option<f64> {
    if q == 0.0 {
        Some(omega)
    } else {
        let s = omega * omega - q;
        (s > 0.0).then(|| s.sqrt())
    }
}

#[derive(Clone, Debug)]
struct VertexRow {
    slot: usize,
    condition: VertexCondition,
    /// `(derivative slot, edge rank)` for each incident edge end.
    ends: Vec<(usize, usize)>,
}

#[derive(Clone, Debug)]
struct EdgeRows {
    id: String,
    initial: usize,
    terminal: usize,
    initial_slot: usize,
    terminal_slot: usize,
    length: f64,
    potential: f64,
}

/// Precomputed row/column structure of a normalized graph; assembling at a
/// new frequency touches only the trigonometric entries.
#[derive(Clone, Debug)]
pub struct SecularSystem {
    index: GraphIndexMap,
    vertices: Vec<VertexRow>,
    edges: Vec<EdgeRows>,
    free: bool,
    has_delta: bool,
    max_potential: f64,
}

impl SecularSystem {
    pub fn new(graph: &MetricGraph) -> Result<Self> {
        let violations = validate(graph);
        if !violations.is_empty() {
            return Err(Error::InvalidGraph(violations));
        }
        Ok(Self::build(graph))
    }

    /// Like [`SecularSystem::new`] but accepts Dirichlet vertices of any degree
    /// and disconnected graphs; the matrix is then the block form whose
    /// determinant factors over components. Loops are still rejected.
    pub fn relaxed(graph: &MetricGraph) -> Result<Self> {
        let violations: Vec<_> = validate(graph)
            .into_iter()
            .filter(|v| !matches!(v, Violation::DirichletDegree { .. } | Violation::Disconnected { .. }))
            .collect();
        if !violations.is_empty() {
            return Err(Error::InvalidGraph(violations));
        }
        Ok(Self::build(graph))
    }

    fn build(graph: &MetricGraph) -> Self {
        let index = GraphIndexMap::new(graph);
        let edges: Vec<EdgeRows> = index
            .edge_ids()
            .iter()
            .map(|id| {
                let e = graph.edge(id).expect("indexed edge");
                EdgeRows {
                    id: id.clone(),
                    initial: index.vertex_slot(&e.initial).expect("validated"),
                    terminal: index.vertex_slot(&e.terminal).expect("validated"),
                    initial_slot: index.initial_slot(id).expect("indexed"),
                    terminal_slot: index.terminal_slot(id).expect("indexed"),
                    length: e.length,
                    potential: e.potential,
                }
            })
            .collect();
        let vertices = index
            .vertex_ids()
            .iter()
            .enumerate()
            .map(|(slot, id)| {
                let mut ends = Vec::new();
                for (k, e) in edges.iter().enumerate() {
                    if e.initial == slot {
                        ends.push((e.initial_slot, k));
                    }
                    if e.terminal == slot {
                        ends.push((e.terminal_slot, k));
                    }
                }
                VertexRow {
                    slot,
                    condition: graph.condition(id).expect("indexed vertex"),
                    ends,
                }
            })
            .collect();
        SecularSystem {
            index,
            vertices,
            edges,
            free: graph.is_free(),
            has_delta: graph.has_delta(),
            max_potential: graph.max_potential(),
        }
    }

    pub fn index(&self) -> &GraphIndexMap {
        &self.index
    }

    pub fn dim(&self) -> usize {
        self.index.dim()
    }

    /// Zero potential and only standard / Dirichlet conditions: `A_ω` is then
    /// entire in `ω` and may be evaluated anywhere, including `ω ≤ 0`.
    pub fn is_free(&self) -> bool {
        self.free
    }

    /// Smallest frequency at which the matrix is defined (exclusive).
    pub fn lower_bound(&self) -> f64 {
        if self.free {
            f64::NEG_INFINITY
        } else {
            self.max_potential.max(0.0).sqrt()
        }
    }

    fn check_frequency(&self, omega: f64) -> Result<()> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::NonPositiveFrequency(omega));
        }
        for e in &self.edges {
            if local_frequency(omega, e.potential).is_none() {
                return Err(Error::BelowPotentialCeiling {
                    omega,
                    edge: e.id.clone(),
                    potential: e.potential,
                });
            }
        }
        Ok(())
    }

    /// `A_ω` (or `B_ω` with δ-couplings / potentials) at `ω > 0`.
    pub fn assemble(&self, omega: f64) -> Result<SecularMatrix> {
        self.check_frequency(omega)?;
        Ok(self.wrap(omega, self.fill(omega)))
    }

    /// Assembly without the positivity check; only meaningful for free systems
    /// (used by finite differences across `ω = 0`).
    fn fill(&self, omega: f64) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let local: Vec<f64> = self
            .edges
            .iter()
            .map(|e| local_frequency(omega, e.potential).unwrap_or(f64::NAN))
            .collect();
        for v in &self.vertices {
            match v.condition {
                VertexCondition::Dirichlet => m[(v.slot, v.slot)] = 1.0,
                VertexCondition::Standard | VertexCondition::Delta(_) => {
                    let alpha = v.condition.coupling().unwrap_or(0.0);
                    if alpha != 0.0 {
                        m[(v.slot, v.slot)] = -alpha / omega;
                    }
                    for &(slot, k) in &v.ends {
                        // Σ ∂_e ψ(v) = Σ ω_e x(v,e); divide the row by ω
                        m[(v.slot, slot)] = if self.edges[k].potential == 0.0 {
                            1.0
                        } else {
                            local[k] / omega
                        };
                    }
                }
            }
        }
        for e in self.edges.iter().zip(&local) {
            let (e, &w) = e;
            let (s, c) = (e.length * w).sin_cos();
            let r1 = e.initial_slot;
            let r2 = e.terminal_slot;
            m[(r1, e.terminal)] += 1.0;
            m[(r1, e.initial)] += -c;
            m[(r1, e.initial_slot)] = s;
            m[(r2, e.initial)] += s;
            m[(r2, e.initial_slot)] = c;
            m[(r2, e.terminal_slot)] = 1.0;
        }
        m
    }

    fn wrap(&self, omega: f64, matrix: DMatrix<f64>) -> SecularMatrix {
        SecularMatrix {
            omega,
            index: self.index.clone(),
            matrix,
        }
    }

    pub fn det(&self, omega: f64) -> Result<f64> {
        self.check_frequency(omega)?;
        Ok(linalg::determinant(&self.fill(omega)))
    }

    fn det_anywhere(&self, omega: f64) -> f64 {
        if omega == 0.0 && self.free {
            linalg::determinant(&self.fill_zero())
        } else {
            linalg::determinant(&self.fill(omega))
        }
    }

    /// `A₀`: the `ω → 0` limit of `A_ω` (sin → 0, cos → 1).
    pub fn assemble_at_zero(&self) -> Result<SecularMatrix> {
        if self.has_delta {
            let v = self
                .vertices
                .iter()
                .find(|v| matches!(v.condition, VertexCondition::Delta(_)))
                .expect("has delta");
            return Err(Error::DeltaAtZero(self.index.vertex_ids()[v.slot].clone()));
        }
        if let Some(e) = self.edges.iter().find(|e| e.potential != 0.0) {
            return Err(Error::PotentialAtZero(e.id.clone()));
        }
        Ok(self.wrap(0.0, self.fill_zero()))
    }

    fn fill_zero(&self) -> DMatrix<f64> {
        let mut m = self.fill(1.0);
        for e in &self.edges {
            let (r1, r2) = (e.initial_slot, e.terminal_slot);
            m[(r1, e.initial)] = -1.0;
            m[(r1, e.initial_slot)] = 0.0;
            m[(r2, e.initial)] = 0.0;
            m[(r2, e.initial_slot)] = 1.0;
        }
        m
    }

    /// Derivative of `ω ↦ det A_ω` by Richardson-extrapolated finite differences.
    ///
    /// Central stencils are used wherever the matrix is defined on both sides;
    /// at `ω = 0` (free systems only) and next to the potential ceiling the
    /// stencil is one-sided.
    pub fn det_derivative(&self, omega: f64, order: usize) -> Result<f64> {
        if order > 4 {
            return Err(Error::DerivativeOrder(order));
        }
        if omega == 0.0 {
            if !self.free {
                return Err(Error::Precondition(
                    "derivatives at ω = 0 need zero potential and no δ-couplings".into(),
                ));
            }
        } else {
            self.check_frequency(omega)?;
        }
        if order == 0 {
            return Ok(self.det_anywhere(omega));
        }
        let h = derivative_step(omega, order);
        if h == 0.0 || omega + h == omega || !h.is_finite() {
            return Err(Error::StepUnderflow(omega));
        }
        let half_span = 0.5 * order as f64 * h;
        let central = omega != 0.0 && (self.free || omega - half_span > self.lower_bound());
        if central {
            let d1 = self.central(omega, order, h);
            let d2 = self.central(omega, order, h / 2.0);
            Ok((4.0 * d2 - d1) / 3.0)
        } else {
            let d1 = self.forward(omega, order, h);
            let d2 = self.forward(omega, order, h / 2.0);
            let d4 = self.forward(omega, order, h / 4.0);
            let r1 = 2.0 * d2 - d1;
            let r2 = 2.0 * d4 - d2;
            Ok((4.0 * r2 - r1) / 3.0)
        }
    }

    fn central(&self, omega: f64, order: usize, h: f64) -> f64 {
        let k = order as f64;
        let sum: f64 = (0..=order)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * binomial(order, j) * self.det_anywhere(omega + (0.5 * k - j as f64) * h)
            })
            .sum();
        sum / h.powi(order as i32)
    }

    fn forward(&self, omega: f64, order: usize, h: f64) -> f64 {
        let sum: f64 = (0..=order)
            .map(|j| {
                let sign = if (order - j).is_multiple_of(2) { 1.0 } else { -1.0 };
                sign * binomial(order, j) * self.det_anywhere(omega + j as f64 * h)
            })
            .sum();
        sum / h.powi(order as i32)
    }
}

/// Base step: `max(1e-5, 1e-5·ω)` for first derivatives; higher orders use
/// `ε^{1/(k+2)}` scaled the same way so rounding does not swamp the stencil.
fn derivative_step(omega: f64, order: usize) -> f64 {
    let base = if order == 1 {
        1e-5
    } else {
        f64::EPSILON.powf(1.0 / (order as f64 + 2.0))
    };
    base.max(base * omega.abs())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn assemble(graph: &MetricGraph, omega: f64) -> Result<SecularMatrix> {
    SecularSystem::new(graph)?.assemble(omega)
}

pub fn secular_det(graph: &MetricGraph, omega: f64) -> Result<f64> {
    SecularSystem::new(graph)?.det(omega)
}

pub fn secular_det_derivative(graph: &MetricGraph, omega: f64, order: usize) -> Result<f64> {
    SecularSystem::new(graph)?.det_derivative(omega, order)
}

pub fn assemble_at_zero(graph: &MetricGraph) -> Result<SecularMatrix> {
    SecularSystem::new(graph)?.assemble_at_zero()
}

/// The `ω → 0` matrix acting on `(ψ(v), ∂_e ψ(v))` without rescaling, whose
/// kernel is the space of edgewise linear functions satisfying the vertex conditions.
pub fn assemble_harmonic(graph: &MetricGraph) -> Result<DMatrix<f64>> {
    let sys = SecularSystem::new(graph)?;
    let mut m = sys.assemble_at_zero()?.matrix;
    for e in &sys.edges {
        m[(e.initial_slot, e.initial_slot)] = e.length;
    }
    Ok(m)
}

/// The graph with every δ-coupling replaced by standard conditions and every
/// potential removed; its secular matrix is the unperturbed `A_ω`.
pub fn free_counterpart(graph: &MetricGraph) -> MetricGraph {
    graph
        .map_conditions(|v| match v.condition {
            VertexCondition::Delta(_) => VertexCondition::Standard,
            c => c,
        })
        .with_uniform_potential(0.0)
}

/// `B_ω − A_ω` for the given graph and its free counterpart.
pub fn perturbation(graph: &MetricGraph, omega: f64) -> Result<DMatrix<f64>> {
    let b = assemble(graph, omega)?.matrix;
    let a = assemble(&free_counterpart(graph), omega)?.matrix;
    Ok(b - a)
}

/// Constant `C` with `max|B_ω − A_ω| ≤ C/ω` for all `ω ≥ 1 + max √|q_e|`:
/// `max(|α_v|, ℓ_e |q_e|, |q_e| / a)`.
pub fn perturbation_constant(graph: &MetricGraph) -> f64 {
    let a = perturbation_threshold(graph);
    let alpha = graph
        .vertices()
        .iter()
        .filter_map(|v| match v.condition {
            VertexCondition::Delta(alpha) => Some(alpha.abs()),
            _ => None,
        })
        .fold(0.0, f64::max);
    let q = graph
        .edges()
        .iter()
        .map(|e| (e.length * e.potential.abs()).max(e.potential.abs() / a))
        .fold(0.0, f64::max);
    alpha.max(q)
}

/// `a = 1 + max √|q_e|`.
pub fn perturbation_threshold(graph: &MetricGraph) -> f64 {
    1.0 + graph
        .edges()
        .iter()
        .map(|e| e.potential.abs().sqrt())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, Vertex};
    use std::f64::consts::PI;
    use VertexCondition::{Dirichlet, Standard};

    fn interval(a: VertexCondition, b: VertexCondition, len: f64) -> MetricGraph {
        MetricGraph::new(
            vec![
                Vertex {
                    id: "a".into(),
                    condition: a,
                },
                Vertex {
                    id: "b".into(),
                    condition: b,
                },
            ],
            vec![Edge::new("e", "a", "b", len)],
        )
    }

    #[test]
    fn standard_interval_entries() {
        let g = interval(Standard, Standard, 1.0);
        let m = assemble(&g, PI).unwrap().matrix;
        let (s, c) = PI.sin_cos();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, //
                -c, 1.0, s, 0.0, //
                s, 0.0, c, 1.0,
            ],
        );
        assert_eq!(m, expected);
        assert!(secular_det(&g, PI).unwrap().abs() < 1e-15);
    }

    #[test]
    fn closed_forms() {
        for &w in &[0.3, 1.0, 2.5, 7.1] {
            let ss = secular_det(&interval(Standard, Standard, 1.0), w).unwrap();
            assert!((ss + w.sin()).abs() < 1e-14);
            let ds = secular_det(&interval(Dirichlet, Standard, 1.0), w).unwrap();
            assert!((ds - w.cos()).abs() < 1e-14);
            let sd = secular_det(&interval(Standard, Dirichlet, 1.0), w).unwrap();
            assert!((sd - w.cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn dirichlet_dirichlet_at_half_pi() {
        // hand expansion: rows (a, b, r1, r2) = (1 0 0 0 | 0 1 0 0 | -c 1 s 0 | s 0 c 1) → det = s
        let d = secular_det(&interval(Dirichlet, Dirichlet, 1.0), PI / 2.0).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn delta_zero_equals_standard() {
        let g = interval(VertexCondition::Delta(0.0), Standard, 1.3);
        let h = interval(Standard, Standard, 1.3);
        assert_eq!(assemble(&g, 2.2).unwrap().matrix, assemble(&h, 2.2).unwrap().matrix);
    }

    #[test]
    fn delta_row() {
        let g = interval(VertexCondition::Delta(1.5), Standard, 1.0);
        let m = assemble(&g, 3.0).unwrap().matrix;
        assert_eq!(m[(0, 0)], -0.5);
        assert_eq!(m[(0, 2)], 1.0);
    }

    #[test]
    fn frequency_errors() {
        let g = interval(Standard, Standard, 1.0);
        assert!(matches!(assemble(&g, 0.0), Err(Error::NonPositiveFrequency(_))));
        assert!(matches!(assemble(&g, -1.0), Err(Error::NonPositiveFrequency(_))));
        let q = g.with_uniform_potential(4.0);
        assert!(matches!(assemble(&q, 2.0), Err(Error::BelowPotentialCeiling { .. })));
        assert!(assemble(&q, 2.01).is_ok());
    }

    #[test]
    fn zero_potential_assembly_is_identical() {
        let g = interval(Standard, Dirichlet, 0.8);
        let same = g.with_uniform_potential(0.0);
        assert_eq!(assemble(&g, 1.7).unwrap().matrix, assemble(&same, 1.7).unwrap().matrix);
    }

    #[test]
    fn a_zero_of_interval() {
        let a0 = assemble_at_zero(&interval(Standard, Standard, 1.0)).unwrap();
        let ns = linalg::nullspace(&a0.matrix, 1e-10);
        assert_eq!(ns.dim(), 1);
        let x = &ns.basis[0];
        let s = 1.0 / 2f64.sqrt();
        assert!((x[0].abs() - s).abs() < 1e-12 && (x[1] - x[0]).abs() < 1e-12);
        assert!(x[2].abs() < 1e-12 && x[3].abs() < 1e-12);

        let d = assemble_at_zero(&interval(Dirichlet, Standard, 2.0)).unwrap();
        assert!((d.det() - 1.0).abs() < 1e-15);

        let delta = interval(VertexCondition::Delta(1.0), Standard, 1.0);
        assert!(matches!(assemble_at_zero(&delta), Err(Error::DeltaAtZero(_))));
    }

    #[test]
    fn derivatives() {
        let g = interval(Standard, Standard, 1.0);
        let d0 = secular_det_derivative(&g, 0.0, 1).unwrap();
        assert!((d0 + 1.0).abs() < 1e-8, "{d0}");
        let v = secular_det_derivative(&g, PI / 2.0, 0).unwrap();
        assert!((v + 1.0).abs() < 1e-15);
        // −sin ω: derivatives cycle −cos, sin, cos, −sin
        let w: f64 = 0.7;
        let expect = [-w.sin(), -w.cos(), w.sin(), w.cos(), -w.sin()];
        let tol = [1e-15, 1e-9, 1e-7, 1e-5, 1e-3];
        for order in 0..=4 {
            let d = secular_det_derivative(&g, w, order).unwrap();
            assert!(
                (d - expect[order]).abs() < tol[order],
                "order {order}: {d} vs {}",
                expect[order]
            );
        }
        assert!(matches!(
            secular_det_derivative(&g, w, 5),
            Err(Error::DerivativeOrder(5))
        ));
        let delta = interval(VertexCondition::Delta(1.0), Standard, 1.0);
        assert!(secular_det_derivative(&delta, 0.0, 1).is_err());
    }

    #[test]
    fn derivative_beside_potential_ceiling() {
        let g = interval(Standard, Standard, 1.0).with_uniform_potential(1.0);
        let one_sided = secular_det_derivative(&g, 1.0 + 1e-6, 1).unwrap();
        assert!(one_sided.is_finite());
        let sys = SecularSystem::new(&g).unwrap();
        let h = 1e-6;
        let fd = (sys.det(3.0 + h).unwrap() - sys.det(3.0 - h).unwrap()) / (2.0 * h);
        assert!((secular_det_derivative(&g, 3.0, 1).unwrap() - fd).abs() < 1e-7);
    }

    #[test]
    fn potential_weights_vertex_rows() {
        let g = MetricGraph::new(
            vec![
                Vertex {
                    id: "a".into(),
                    condition: Standard,
                },
                Vertex {
                    id: "b".into(),
                    condition: Standard,
                },
                Vertex {
                    id: "c".into(),
                    condition: Standard,
                },
            ],
            vec![
                Edge::new("e", "a", "b", 1.0).with_potential(3.0),
                Edge::new("f", "b", "c", 1.0),
            ],
        );
        let m = assemble(&g, 2.0).unwrap().matrix;
        // vertex b (slot 1): terminal end of e (slot 4), initial end of f (slot 5)
        assert!((m[(1, 4)] - 0.5).abs() < 1e-15);
        assert_eq!(m[(1, 5)], 1.0);
    }
}
