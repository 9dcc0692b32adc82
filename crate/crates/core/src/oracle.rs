//! Independent finite-element check of the spectrum of `−d²/dx² + q`.
//!
//! Each edge carries a uniform mesh; piecewise linear elements with lumped
//! mass give the second-order stencil `[−1, 2, −1]/h² + q` in edge interiors
//! and the matching ghost-point treatment at vertices. Continuity is built in
//! by sharing one unknown per vertex, Dirichlet vertices are eliminated and a
//! δ-coupling `Σ ∂_e ψ(v) = α ψ(v)` enters the vertex diagonal of the
//! stiffness matrix as `−α`. The generalised problem `K x = λ M x` with
//! diagonal `M` is symmetrised as `M^{-1/2} K M^{-1/2}`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{validate, MetricGraph, VertexCondition, Violation};

pub const MIN_POINTS_PER_UNIT_LENGTH: usize = 100;
/// Relative gap below which neighbouring eigenvalues form one cluster.
pub const CLUSTER_GAP: f64 = 1e-6;
const DENSE_LIMIT: usize = 500;
const BLOCK: usize = 8;
const RESIDUAL_TOL: f64 = 1e-10;
const SEED: u64 = 0x6f72_6163_6c65;

#[derive(Clone, Debug)]
struct Chain {
    edge: String,
    h: f64,
    potential: f64,
    /// Unknown index of the first interior node; the chain is contiguous.
    start: usize,
    len: usize,
    initial: Option<usize>,
    terminal: Option<usize>,
}

/// Position of an unknown on the graph.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Location {
    Vertex(String),
    Edge { edge: String, t: f64 },
}

#[derive(Clone, Debug)]
pub struct DiscretizedGraph {
    vertex_ids: Vec<String>,
    chains: Vec<Chain>,
    /// Vertex part of the stiffness diagonal (coupling terms included).
    vertex_stiffness: Vec<f64>,
    mass: Vec<f64>,
}

impl DiscretizedGraph {
    pub fn dim(&self) -> usize {
        self.mass.len()
    }

    pub fn vertex_unknowns(&self) -> usize {
        self.vertex_ids.len()
    }

    pub fn location(&self, i: usize) -> Location {
        if i < self.vertex_ids.len() {
            return Location::Vertex(self.vertex_ids[i].clone());
        }
        let c = self
            .chains
            .iter()
            .find(|c| i >= c.start && i < c.start + c.len)
            .expect("index in range");
        Location::Edge {
            edge: c.edge.clone(),
            t: (i - c.start + 1) as f64 * c.h,
        }
    }

    /// Lumped mass `M`.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Nonzero entries `(i, j, K_ij)` of the stiffness matrix, both triangles.
    pub fn stiffness_entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (i, &d) in self.vertex_stiffness.iter().enumerate() {
            out.push((i, i, d));
        }
        for c in &self.chains {
            let off = -1.0 / c.h;
            for k in 0..c.len {
                let i = c.start + k;
                out.push((i, i, 2.0 / c.h + c.potential * c.h));
                if k + 1 < c.len {
                    out.push((i, i + 1, off));
                    out.push((i + 1, i, off));
                }
            }
            for (v, i) in [(c.initial, c.start), (c.terminal, c.start + c.len - 1)] {
                if let Some(v) = v {
                    out.push((v, i, off));
                    out.push((i, v, off));
                }
            }
        }
        out
    }

    /// The symmetric matrix `M^{-1/2} K M^{-1/2}` as a dense matrix.
    pub fn dense_operator(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut s = DMatrix::zeros(n, n);
        for (i, j, k) in self.stiffness_entries() {
            s[(i, j)] += k / (self.mass[i] * self.mass[j]).sqrt();
        }
        s
    }
}

/// Meshes every edge with `max(2, ⌈ℓ_e · points_per_unit_length⌉)` subintervals.
pub fn discretize(graph: &MetricGraph, points_per_unit_length: usize) -> Result<DiscretizedGraph> {
    if points_per_unit_length < MIN_POINTS_PER_UNIT_LENGTH {
        return Err(Error::MeshTooCoarse(points_per_unit_length));
    }
    // the mesh handles loops and Dirichlet vertices of any degree directly
    let violations: Vec<Violation> = validate(graph)
        .into_iter()
        .filter(|v| !matches!(v, Violation::Loop { .. } | Violation::DirichletDegree { .. }))
        .collect();
    if !violations.is_empty() {
        return Err(Error::InvalidGraph(violations));
    }
    let mut vertex_ids = Vec::new();
    let mut vertex_slot = std::collections::BTreeMap::new();
    for v in graph.vertices() {
        if !v.condition.is_dirichlet() {
            vertex_slot.insert(v.id.as_str(), vertex_ids.len());
            vertex_ids.push(v.id.clone());
        }
    }
    let nv = vertex_ids.len();
    let mut vertex_stiffness = vec![0.0; nv];
    let mut mass = vec![0.0; nv];
    for v in graph.vertices() {
        if let (VertexCondition::Delta(alpha), Some(&i)) = (v.condition, vertex_slot.get(v.id.as_str())) {
            vertex_stiffness[i] -= alpha;
        }
    }
    let mut chains = Vec::with_capacity(graph.edges().len());
    for e in graph.edges() {
        let cells = ((e.length * points_per_unit_length as f64).ceil() as usize).max(2);
        let h = e.length / cells as f64;
        let initial = vertex_slot.get(e.initial.as_str()).copied();
        let terminal = vertex_slot.get(e.terminal.as_str()).copied();
        for v in [initial, terminal].into_iter().flatten() {
            vertex_stiffness[v] += 1.0 / h + e.potential * h / 2.0;
            mass[v] += h / 2.0;
        }
        let start = mass.len();
        mass.extend(std::iter::repeat_n(h, cells - 1));
        chains.push(Chain {
            edge: e.id.clone(),
            h,
            potential: e.potential,
            start,
            len: cells - 1,
            initial,
            terminal,
        });
    }
    Ok(DiscretizedGraph {
        vertex_ids,
        chains,
        vertex_stiffness,
        mass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cluster {
    pub lambda: f64,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleSpectrum {
    /// The `k` smallest eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Clusters covering at least the first `k` eigenvalues; a cluster that
    /// straddles position `k` is counted in full.
    pub clusters: Vec<Cluster>,
}

/// Groups ascending values whose relative gap is below [`CLUSTER_GAP`].
pub fn cluster(values: &[f64]) -> Vec<Cluster> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    let mut prev = f64::NAN;
    for &x in values {
        match out.last_mut() {
            Some((sum, m)) if (x - prev).abs() <= CLUSTER_GAP * x.abs().max(prev.abs()).max(1.0) => {
                *sum += x;
                *m += 1;
            }
            _ => out.push((x, 1)),
        }
        prev = x;
    }
    out.into_iter()
        .map(|(sum, m)| Cluster {
            lambda: sum / m as f64,
            multiplicity: m,
        })
        .collect()
}

/// The `k` smallest eigenvalues of the discretized operator.
///
/// Small problems are solved densely. Otherwise a block Krylov method runs on
/// `(S − σ)^{-1}` with `σ` strictly below the spectrum; each application
/// eliminates the tridiagonal edge chains and solves the dense vertex Schur
/// complement.
pub fn lowest_eigenvalues(dg: &DiscretizedGraph, k: usize) -> Result<OracleSpectrum> {
    if k == 0 {
        return Err(Error::Precondition("k must be at least 1".into()));
    }
    let n = dg.dim();
    let want = (k + 4).min(n);
    let values = if n <= DENSE_LIMIT {
        let mut ev: Vec<f64> = SymmetricEigen::new(dg.dense_operator())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev.truncate(want);
        ev
    } else {
        krylov_lowest(dg, want)?
    };
    let clusters_all = cluster(&values);
    let mut clusters = Vec::new();
    let mut covered = 0;
    for c in clusters_all {
        if covered >= k {
            break;
        }
        covered += c.multiplicity;
        clusters.push(c);
    }
    Ok(OracleSpectrum {
        eigenvalues: values.into_iter().take(k).collect(),
        clusters,
    })
}

struct ChainFactor {
    /// LDLᵀ of the chain block: multipliers `l[i]` (for `i ≥ 1`) and pivots.
    l: Vec<f64>,
    p: Vec<f64>,
    /// `T⁻¹ e_first` and `T⁻¹ e_last`.
    first: Vec<f64>,
    last: Vec<f64>,
}

impl ChainFactor {
    fn new(c: &Chain, sigma: f64) -> Option<Self> {
        let d = 2.0 / c.h + c.potential * c.h - sigma * c.h;
        let e = -1.0 / c.h;
        let mut l = vec![0.0; c.len];
        let mut p = vec![0.0; c.len];
        p[0] = d;
        for i in 1..c.len {
            l[i] = e / p[i - 1];
            p[i] = d - e * l[i];
        }
        if p.iter().any(|&x| !(x > 0.0)) {
            return None;
        }
        let mut f = ChainFactor {
            l,
            p,
            first: vec![0.0; c.len],
            last: vec![0.0; c.len],
        };
        let mut first = vec![0.0; c.len];
        first[0] = 1.0;
        f.solve(&mut first);
        let mut last = vec![0.0; c.len];
        last[c.len - 1] = 1.0;
        f.solve(&mut last);
        f.first = first;
        f.last = last;
        Some(f)
    }

    /// Solves `T z = out` in place.
    fn solve(&self, out: &mut [f64]) {
        let n = out.len();
        for i in 1..n {
            out[i] -= self.l[i] * out[i - 1];
        }
        out[n - 1] /= self.p[n - 1];
        for i in (0..n - 1).rev() {
            out[i] = out[i] / self.p[i] - self.l[i + 1] * out[i + 1];
        }
    }
}

/// Factorisation of `K − σM`, positive definite by construction.
struct ShiftedSolver<'a> {
    dg: &'a DiscretizedGraph,
    sigma: f64,
    chains: Vec<ChainFactor>,
    schur: Option<Cholesky<f64, Dyn>>,
}

impl<'a> ShiftedSolver<'a> {
    fn new(dg: &'a DiscretizedGraph, sigma: f64) -> Option<Self> {
        let chains: Vec<ChainFactor> = dg
            .chains
            .iter()
            .map(|c| ChainFactor::new(c, sigma))
            .collect::<Option<_>>()?;
        let nv = dg.vertex_unknowns();
        let schur = if nv == 0 {
            None
        } else {
            let mut s = DMatrix::zeros(nv, nv);
            for i in 0..nv {
                s[(i, i)] = dg.vertex_stiffness[i] - sigma * dg.mass[i];
            }
            for (c, f) in dg.chains.iter().zip(&chains) {
                let w = 1.0 / (c.h * c.h);
                let m = c.len - 1;
                if let Some(a) = c.initial {
                    s[(a, a)] -= w * f.first[0];
                }
                if let Some(b) = c.terminal {
                    s[(b, b)] -= w * f.last[m];
                }
                if let (Some(a), Some(b)) = (c.initial, c.terminal) {
                    s[(a, b)] -= w * f.first[m];
                    s[(b, a)] -= w * f.last[0];
                }
            }
            Some(Cholesky::new(s)?)
        };
        Some(ShiftedSolver {
            dg,
            sigma,
            chains,
            schur,
        })
    }

    /// `(K − σM)⁻¹ f`.
    fn solve(&self, f: &[f64]) -> Vec<f64> {
        let nv = self.dg.vertex_unknowns();
        let mut z = f.to_vec();
        for (c, fac) in self.dg.chains.iter().zip(&self.chains) {
            fac.solve(&mut z[c.start..c.start + c.len]);
        }
        if let Some(schur) = &self.schur {
            let mut g = DVector::from_column_slice(&f[..nv]);
            for c in &self.dg.chains {
                let inv_h = 1.0 / c.h;
                if let Some(a) = c.initial {
                    g[a] += inv_h * z[c.start];
                }
                if let Some(b) = c.terminal {
                    g[b] += inv_h * z[c.start + c.len - 1];
                }
            }
            let zv = schur.solve(&g);
            z[..nv].copy_from_slice(zv.as_slice());
            for (c, fac) in self.dg.chains.iter().zip(&self.chains) {
                let inv_h = 1.0 / c.h;
                let za = c.initial.map_or(0.0, |a| zv[a]) * inv_h;
                let zb = c.terminal.map_or(0.0, |b| zv[b]) * inv_h;
                for i in 0..c.len {
                    z[c.start + i] += za * fac.first[i] + zb * fac.last[i];
                }
            }
        }
        z
    }

    /// `M^{1/2} (K − σM)⁻¹ M^{1/2} x`, the inverse of `S − σ`.
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let m = &self.dg.mass;
        let f: Vec<f64> = x.iter().zip(m).map(|(xi, mi)| xi * mi.sqrt()).collect();
        let z = self.solve(&f);
        DVector::from_iterator(z.len(), z.iter().zip(m).map(|(zi, mi)| zi * mi.sqrt()))
    }
}

fn shifted_solver(dg: &DiscretizedGraph) -> Result<ShiftedSolver<'_>> {
    let qmin = dg.chains.iter().map(|c| c.potential).fold(0.0, f64::min);
    let mut sigma = qmin - 1.0;
    for _ in 0..64 {
        if let Some(s) = ShiftedSolver::new(dg, sigma) {
            return Ok(s);
        }
        sigma = 2.0 * sigma - 1.0;
    }
    Err(Error::NoConvergence(64))
}

fn orthonormalize_against(v: &mut DVector<f64>, basis: &[DVector<f64>]) -> f64 {
    let before = v.norm();
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(v);
            v.axpy(-c, q, 1.0);
        }
    }
    let after = v.norm();
    if after > 1e-10 * before.max(f64::MIN_POSITIVE) {
        *v /= after;
    }
    after / before.max(f64::MIN_POSITIVE)
}

fn krylov_lowest(dg: &DiscretizedGraph, want: usize) -> Result<Vec<f64>> {
    let solver = shifted_solver(dg)?;
    let n = dg.dim();
    let max_basis = n.min((12 * want).max(160));
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut q: Vec<DVector<f64>> = Vec::new();
    let mut w: Vec<DVector<f64>> = Vec::new();

    let mut block: Vec<DVector<f64>> = (0..BLOCK)
        .map(|_| DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)))
        .collect();
    let mut iterations = 0;
    loop {
        iterations += 1;
        for mut v in block.drain(..) {
            let mut kept = orthonormalize_against(&mut v, &q);
            while kept <= 1e-10 {
                v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
                kept = orthonormalize_against(&mut v, &q);
            }
            w.push(solver.apply(&v));
            q.push(v);
        }
        let m = q.len();
        let mut h = DMatrix::zeros(m, m);
        for j in 0..m {
            for i in 0..=j {
                let x = 0.5 * (q[i].dot(&w[j]) + q[j].dot(&w[i]));
                h[(i, j)] = x;
                h[(j, i)] = x;
            }
        }
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let top = want.min(m);
        let converged = m >= want
            && order[..top].iter().all(|&j| {
                let theta = eig.eigenvalues[j];
                let y = eig.eigenvectors.column(j);
                let mut r = DVector::zeros(n);
                for i in 0..m {
                    r.axpy(y[i], &w[i], 1.0);
                    r.axpy(-theta * y[i], &q[i], 1.0);
                }
                r.norm() <= RESIDUAL_TOL * theta.abs()
            });
        if converged {
            let mut lambdas: Vec<f64> = order[..top]
                .iter()
                .map(|&j| solver.sigma + 1.0 / eig.eigenvalues[j])
                .collect();
            lambdas.sort_by(f64::total_cmp);
            return Ok(lambdas);
        }
        if m + BLOCK > max_basis {
            return Err(Error::NoConvergence(iterations));
        }
        block = w[m - BLOCK..].to_vec();
    }
}
