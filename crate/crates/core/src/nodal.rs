//! Zero sets and nodal domain counts of reconstructed eigenfunctions.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::spectral::{reconstruct, EdgeWave, Eigenfunction, Spectrum};
use crate::unionfind::UnionFind;

/// `|x(v)| ≤ VERTEX_ZERO × max|x|` marks a vertex as a zero of the function.
pub const VERTEX_ZERO: f64 = 1e-9;
const ENDPOINT_EXCLUSION: f64 = 1e-12;
/// Interior zeros this close (relative to `ℓ_e`) to a zero vertex are the
/// vertex zero itself, displaced by the root's rounding error.
const NEAR_VERTEX: f64 = 1e-6;

/// Solutions of `a cos(ω_e t) = b sin(ω_e t)` in `(0, ℓ_e)`, ascending.
///
/// With `a = R cos φ`, `b = R sin φ` the wave is `R cos(ω_e t + φ)`, so the zeros
/// are `t_k = (π/2 − φ + kπ) / ω_e`.
pub fn edge_zeros(wave: &EdgeWave) -> Result<Vec<f64>> {
    if wave.a == 0.0 && wave.b == 0.0 {
        return Err(Error::ZeroEdge);
    }
    if !(wave.omega_e > 0.0) {
        return Err(Error::Precondition(format!(
            "edge `{}` has nonpositive local frequency {}",
            wave.edge, wave.omega_e
        )));
    }
    let phi = wave.b.atan2(wave.a);
    let first = ((phi - PI / 2.0) / PI).ceil() as i64;
    let eps = ENDPOINT_EXCLUSION * wave.length.max(1.0);
    let mut zeros = Vec::new();
    let mut k = first;
    loop {
        let t = (PI / 2.0 - phi + k as f64 * PI) / wave.omega_e;
        if t >= wave.length - eps {
            break;
        }
        if t > eps {
            zeros.push(t);
        }
        k += 1;
    }
    Ok(zeros)
}

#[derive(Clone, Debug, Serialize)]
pub struct NodalReport {
    /// Interior zeros per edge, ascending; identically zero edges are absent.
    pub edge_zeros: BTreeMap<String, Vec<f64>>,
    pub zero_vertices: Vec<String>,
    pub zero_edges: Vec<String>,
    pub nu: usize,
}

impl NodalReport {
    pub fn interior_zero_count(&self) -> usize {
        self.edge_zeros.values().map(Vec::len).sum()
    }
}

/// Number of connected components of `{ψ ≠ 0}`.
pub fn count_nodal_domains(graph: &MetricGraph, f: &Eigenfunction) -> Result<NodalReport> {
    if f.max_norm == 0.0 {
        return Err(Error::ZeroFunction);
    }
    let floor = VERTEX_ZERO * f.max_norm;
    let vertices = graph.vertices();
    let slot: BTreeMap<&str, usize> = vertices.iter().enumerate().map(|(i, v)| (v.id.as_str(), i)).collect();
    let vertex_zero: Vec<bool> = vertices
        .iter()
        .map(|v| v.condition.is_dirichlet() || f.vertex_values.get(&v.id).is_none_or(|x| x.abs() <= floor))
        .collect();

    let mut zeros_by_edge = BTreeMap::new();
    let mut zero_edges = Vec::new();
    for wave in &f.waves {
        let e = graph
            .edge(&wave.edge)
            .ok_or_else(|| Error::UnknownEdge(wave.edge.clone()))?;
        if wave.amplitude() <= floor {
            zero_edges.push(wave.edge.clone());
            continue;
        }
        let near = NEAR_VERTEX * wave.length;
        let (zi, zt) = (
            vertex_zero[slot[e.initial.as_str()]],
            vertex_zero[slot[e.terminal.as_str()]],
        );
        let zeros: Vec<f64> = edge_zeros(wave)?
            .into_iter()
            .filter(|&t| !(zi && t < near) && !(zt && t > wave.length - near))
            .collect();
        zeros_by_edge.insert(wave.edge.clone(), zeros);
    }
    if zeros_by_edge.is_empty() {
        return Err(Error::ZeroFunction);
    }

    let nv = vertices.len();
    let mut offsets = BTreeMap::new();
    let mut total = nv;
    for (id, z) in &zeros_by_edge {
        offsets.insert(id.as_str(), total);
        total += z.len() + 1;
    }
    let mut uf = UnionFind::new(total);
    let mut alive = vec![true; total];
    for (i, &z) in vertex_zero.iter().enumerate() {
        alive[i] = !z;
    }
    for (id, z) in &zeros_by_edge {
        let e = graph.edge(id).expect("checked above");
        let first = offsets[id.as_str()];
        let last = first + z.len();
        let vi = slot[e.initial.as_str()];
        let vt = slot[e.terminal.as_str()];
        if !vertex_zero[vi] {
            uf.union(first, vi);
        }
        if !vertex_zero[vt] {
            uf.union(last, vt);
        }
    }

    Ok(NodalReport {
        nu: uf.count_sets(|i| alive[i]),
        zero_vertices: vertices
            .iter()
            .zip(&vertex_zero)
            .filter(|(_, &z)| z)
            .map(|(v, _)| v.id.clone())
            .collect(),
        zero_edges,
        edge_zeros: zeros_by_edge,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodalStatus {
    Ok,
    /// `λ = 0`, constant eigenfunction.
    ZeroMode,
    /// Degenerate eigenvalue; the count depends on the basis.
    Ambiguous,
}

#[derive(Clone, Debug, Serialize)]
pub struct NodalRow {
    /// Position in the spectrum counted with multiplicity, when known.
    pub n: Option<usize>,
    pub omega: f64,
    pub multiplicity: usize,
    pub nu: Option<usize>,
    pub ratio: Option<f64>,
    /// Running maximum of `ν_n / n` up to this row.
    pub running_max: Option<f64>,
    pub status: NodalStatus,
    pub zero_vertices: usize,
}

/// One row per eigenvalue of the spectrum, including `λ = 0` when present.
pub fn nodal_statistics(graph: &MetricGraph, spectrum: &Spectrum) -> Result<Vec<NodalRow>> {
    let mut rows = Vec::with_capacity(spectrum.points.len() + 1);
    let mut running: Option<f64> = None;
    let bump = |running: &mut Option<f64>, ratio: Option<f64>| {
        if let Some(r) = ratio {
            *running = Some(running.map_or(r, |m| m.max(r)));
        }
        *running
    };
    if spectrum.zero_mode {
        rows.push(NodalRow {
            n: Some(1),
            omega: 0.0,
            multiplicity: 1,
            nu: Some(1),
            ratio: Some(1.0),
            running_max: bump(&mut running, Some(1.0)),
            status: NodalStatus::ZeroMode,
            zero_vertices: 0,
        });
    }
    for p in &spectrum.points {
        if p.multiplicity > 1 {
            rows.push(NodalRow {
                n: p.eigen_index,
                omega: p.omega,
                multiplicity: p.multiplicity,
                nu: None,
                ratio: None,
                running_max: running,
                status: NodalStatus::Ambiguous,
                zero_vertices: 0,
            });
            continue;
        }
        let f = reconstruct(graph, p, &p.kernel_basis[0])?;
        let report = count_nodal_domains(graph, &f)?;
        let ratio = p.eigen_index.map(|n| report.nu as f64 / n as f64);
        rows.push(NodalRow {
            n: p.eigen_index,
            omega: p.omega,
            multiplicity: 1,
            nu: Some(report.nu),
            ratio,
            running_max: bump(&mut running, ratio),
            status: NodalStatus::Ok,
            zero_vertices: report.zero_vertices.len(),
        });
    }
    Ok(rows)
}
