//! Roots of the secular function, kernels, eigenfunctions and the search for
//! generic (fully supported) eigenfunctions.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use log::warn;
use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{MetricGraph, VertexCondition};
use crate::linalg;
use crate::rootfind::{brent_min, brent_root};
use crate::secular::{free_counterpart, local_frequency, SecularSystem};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_NULLSPACE_THRESHOLD: f64 = 1e-8;
pub const DEFAULT_VERTEX_FLOOR: f64 = 1e-6;

/// Roots closer than this (relative to `max(1, ω)`) are merged.
const MERGE_DISTANCE: f64 = 1e-9;
const MAX_HALVINGS: usize = 3;

/// `π / (4 Σℓ_e)`: a quarter of the mean root spacing.
pub fn default_grid_step(graph: &MetricGraph) -> f64 {
    PI / (4.0 * graph.total_length())
}

/// Lower scan bound below the first positive root of any zero-potential,
/// δ-free graph (`√λ₁ ≥ π / (2 Σℓ_e)`).
pub fn default_omega_min(graph: &MetricGraph) -> f64 {
    PI / (8.0 * graph.total_length())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Root {
    pub omega: f64,
    pub det: f64,
    /// Found as a local minimum of `|det|` without a sign change.
    pub even_order_candidate: bool,
}

#[derive(Clone, Debug)]
pub struct RootScan {
    pub roots: Vec<Root>,
    pub grid_step: f64,
    pub omega_min: f64,
    pub warnings: Vec<String>,
}

/// Roots of `ω ↦ det A_ω` in `[omega_min, omega_max]`, ascending.
///
/// The grid is scanned for sign changes (refined by Brent's method) and for
/// local minima of `|det|`. At a local minimum the signed determinant is
/// minimised: a negative minimum reveals two hidden sign changes, a minimum
/// below `tol` is reported as an even-order candidate. When two roots come
/// closer than two grid steps the grid is halved and the scan repeated, up to
/// three times, until the root count is stable.
pub fn find_roots(graph: &MetricGraph, omega_min: f64, omega_max: f64, grid_step: f64, tol: f64) -> Result<RootScan> {
    let sys = SecularSystem::new(graph)?;
    find_roots_in(&sys, omega_min, omega_max, grid_step, tol)
}

fn find_roots_in(sys: &SecularSystem, omega_min: f64, omega_max: f64, grid_step: f64, tol: f64) -> Result<RootScan> {
    if !(omega_min > 0.0 && omega_min < omega_max && omega_max.is_finite()) {
        return Err(Error::InvalidRange(format!(
            "need 0 < omega_min < omega_max, got [{omega_min}, {omega_max}]"
        )));
    }
    if !(grid_step > 0.0) {
        return Err(Error::InvalidRange(format!(
            "grid step must be positive, got {grid_step}"
        )));
    }
    let mut warnings = Vec::new();
    let mut lo = omega_min;
    let ceiling = sys.lower_bound();
    if lo <= ceiling {
        lo = ceiling * (1.0 + 1e-9) + 1e-12;
        let msg = format!("scan start raised from {omega_min} to {lo} (above the potential ceiling)");
        warn!("{msg}");
        warnings.push(msg);
        if lo >= omega_max {
            return Err(Error::InvalidRange(format!(
                "omega_max {omega_max} lies below the potential ceiling {ceiling}"
            )));
        }
    }

    let mut step = grid_step;
    let mut previous: Option<usize> = None;
    for pass in 0..=MAX_HALVINGS {
        let roots = scan(sys, lo, omega_max, step, tol)?;
        let suspicious = roots.windows(2).any(|w| w[1].omega - w[0].omega < 2.0 * step);
        let stable = previous == Some(roots.len());
        if !suspicious || stable {
            for r in roots.iter().filter(|r| r.det.abs() > tol) {
                let msg = format!("root at {} has |det| = {:e} above tolerance", r.omega, r.det.abs());
                warn!("{msg}");
                warnings.push(msg);
            }
            return Ok(RootScan {
                roots,
                grid_step: step,
                omega_min: lo,
                warnings,
            });
        }
        if pass == MAX_HALVINGS {
            break;
        }
        let msg = format!("roots closer than two grid steps at step {step:e}; halving the grid");
        warn!("{msg}");
        warnings.push(msg);
        previous = Some(roots.len());
        step /= 2.0;
    }
    Err(Error::GridTooCoarse { halvings: MAX_HALVINGS })
}

fn scan(sys: &SecularSystem, lo: f64, hi: f64, step: f64, tol: f64) -> Result<Vec<Root>> {
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..=n).map(|i| (lo + i as f64 * step).min(hi)).collect();
    let vals: Vec<f64> = grid.par_iter().map(|&w| sys.det(w)).collect::<Result<_>>()?;
    let det = |w: f64| sys.det(w).unwrap_or(f64::NAN);

    let mut brackets: Vec<(f64, f64, f64, f64)> = Vec::new();
    let mut exact: Vec<Root> = Vec::new();
    for i in 0..=n {
        if vals[i] == 0.0 {
            exact.push(Root {
                omega: grid[i],
                det: 0.0,
                even_order_candidate: false,
            });
        }
        if i < n && vals[i] * vals[i + 1] < 0.0 {
            brackets.push((grid[i], grid[i + 1], vals[i], vals[i + 1]));
        }
    }

    let mut candidates: Vec<Root> = Vec::new();
    for i in 1..n {
        let (l, m, r) = (vals[i - 1], vals[i], vals[i + 1]);
        if m == 0.0 || m.abs() > l.abs() || m.abs() > r.abs() || l * m <= 0.0 || m * r <= 0.0 {
            continue;
        }
        let s = m.signum();
        let xtol = 1e-14 * grid[i].max(1.0);
        let (xm, fm) = brent_min(|w| s * det(w), grid[i - 1], grid[i + 1], xtol);
        if fm < 0.0 {
            brackets.push((grid[i - 1], xm, l, s * fm));
            brackets.push((xm, grid[i + 1], s * fm, r));
        } else if fm <= tol {
            let half = (1e-4 * xm.max(1.0)).min(0.5 * step);
            let (polished, _) = brent_min(
                |w| match sys.assemble(w) {
                    Ok(a) => linalg::relative_smallest_singular_value(&a.matrix),
                    Err(_) => f64::INFINITY,
                },
                (xm - half).max(lo),
                (xm + half).min(hi),
                1e-15 * xm.max(1.0),
            );
            candidates.push(Root {
                omega: polished,
                det: det(polished),
                even_order_candidate: true,
            });
        }
    }

    let mut roots: Vec<Root> = brackets
        .par_iter()
        .map(|&(a, b, fa, fb)| {
            let w = brent_root(det, a, b, fa, fb);
            Root {
                omega: w,
                det: det(w),
                even_order_candidate: false,
            }
        })
        .collect();
    roots.extend(exact);
    roots.extend(candidates);
    roots.sort_by(|a, b| a.omega.total_cmp(&b.omega));

    let mut merged: Vec<Root> = Vec::with_capacity(roots.len());
    for r in roots {
        match merged.last_mut() {
            Some(last) if r.omega - last.omega <= MERGE_DISTANCE * r.omega.max(1.0) => {
                last.even_order_candidate |= r.even_order_candidate;
                if r.det.abs() < last.det.abs() {
                    last.omega = r.omega;
                    last.det = r.det;
                }
            }
            _ => merged.push(r),
        }
    }
    Ok(merged)
}

/// Nullspace of `A_ω`: `(multiplicity, orthonormal basis)`.
pub fn kernel_at(graph: &MetricGraph, omega: f64, nullspace_threshold: f64) -> Result<(usize, Vec<DVector<f64>>)> {
    kernel_in(&SecularSystem::new(graph)?, omega, nullspace_threshold)
}

fn kernel_in(sys: &SecularSystem, omega: f64, threshold: f64) -> Result<(usize, Vec<DVector<f64>>)> {
    let a = sys.assemble(omega)?;
    let ns = linalg::nullspace(&a.matrix, threshold);
    if ns.dim() == 0 {
        return Err(Error::RootKernelMismatch {
            omega,
            smallest: ns.smallest_relative(),
        });
    }
    Ok((ns.dim(), ns.basis))
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralPoint {
    /// 1-based position among the positive roots.
    pub index: usize,
    /// Position of the eigenvalue in the full nondecreasing spectrum counted
    /// with multiplicity (`λ₁` first), when every lower eigenvalue is known.
    pub eigen_index: Option<usize>,
    pub omega: f64,
    pub lambda: f64,
    pub multiplicity: usize,
    pub even_order_candidate: bool,
    pub det: f64,
    #[serde(skip)]
    pub kernel_basis: Vec<DVector<f64>>,
}

impl SpectralPoint {
    /// The kernel vector used for eigenfunction diagnostics: the single basis
    /// vector for simple roots, the normalised sum of the basis otherwise.
    pub fn representative(&self) -> DVector<f64> {
        if self.kernel_basis.len() == 1 {
            return self.kernel_basis[0].clone();
        }
        let mut sum = DVector::zeros(self.kernel_basis[0].len());
        for b in &self.kernel_basis {
            sum += b;
        }
        let n = sum.norm();
        if n > 0.0 {
            sum / n
        } else {
            self.kernel_basis[0].clone()
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpectrumOptions {
    pub omega_min: Option<f64>,
    pub omega_max: f64,
    pub grid_step: Option<f64>,
    pub tol: f64,
    pub nullspace_threshold: f64,
}

impl SpectrumOptions {
    pub fn up_to(omega_max: f64) -> Self {
        SpectrumOptions {
            omega_min: None,
            omega_max,
            grid_step: None,
            tol: DEFAULT_TOL,
            nullspace_threshold: DEFAULT_NULLSPACE_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    pub points: Vec<SpectralPoint>,
    /// `λ = 0` is an eigenvalue (constant eigenfunction); never part of `points`.
    pub zero_mode: bool,
    pub grid_step: f64,
    pub warnings: Vec<String>,
}

/// Roots in `(0, omega_max]` with their kernels.
pub fn spectrum(graph: &MetricGraph, opts: &SpectrumOptions) -> Result<Spectrum> {
    let sys = SecularSystem::new(graph)?;
    let lower = default_omega_min(graph);
    let omega_min = opts.omega_min.unwrap_or(lower);
    let step = opts.grid_step.unwrap_or_else(|| default_grid_step(graph));
    let scan = find_roots_in(&sys, omega_min, opts.omega_max, step, opts.tol)?;
    let mut warnings = scan.warnings;

    let zero_mode = graph.is_free() && !graph.has_dirichlet();
    // lower eigenvalues are accounted for only when nothing can hide below the scan
    let mut next_eigen = (graph.is_free() && scan.omega_min <= 4.0 * lower).then_some(1 + zero_mode as usize);

    let mut points = Vec::with_capacity(scan.roots.len());
    for root in scan.roots {
        let (multiplicity, kernel_basis) = match kernel_in(&sys, root.omega, opts.nullspace_threshold) {
            Ok(k) => k,
            Err(Error::RootKernelMismatch { smallest, .. }) if root.even_order_candidate => {
                let msg = format!(
                    "dropped even-order candidate at {} (no kernel, σ_min/σ_max = {smallest:e})",
                    root.omega
                );
                warn!("{msg}");
                warnings.push(msg);
                continue;
            }
            Err(e) => return Err(e),
        };
        let eigen_index = next_eigen;
        next_eigen = next_eigen.map(|n| n + multiplicity);
        points.push(SpectralPoint {
            index: points.len() + 1,
            eigen_index,
            omega: root.omega,
            lambda: root.omega * root.omega,
            multiplicity,
            even_order_candidate: root.even_order_candidate,
            det: root.det,
            kernel_basis,
        });
    }
    Ok(Spectrum {
        points,
        zero_mode,
        grid_step: scan.grid_step,
        warnings,
    })
}

/// `ψ_e(t) = a cos(ω_e t) − b sin(ω_e t)` for `t ∈ [0, ℓ_e]` measured from the
/// initial vertex; `a = x(v)` and `b = x(v,e)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeWave {
    pub edge: String,
    pub length: f64,
    pub omega_e: f64,
    pub a: f64,
    pub b: f64,
}

impl EdgeWave {
    pub fn value(&self, t: f64) -> f64 {
        let (s, c) = (self.omega_e * t).sin_cos();
        self.a * c - self.b * s
    }

    /// `dψ_e/dt`.
    pub fn slope(&self, t: f64) -> f64 {
        let (s, c) = (self.omega_e * t).sin_cos();
        -self.omega_e * (self.a * s + self.b * c)
    }

    /// `max_t |ψ_e(t)|` over a full period.
    pub fn amplitude(&self) -> f64 {
        self.a.hypot(self.b)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Eigenfunction {
    pub omega: f64,
    pub vertex_values: BTreeMap<String, f64>,
    pub waves: Vec<EdgeWave>,
    /// Max-norm of the kernel vector the function was built from.
    pub max_norm: f64,
}

/// Edge waves of the eigenfunction whose coordinates are `x`.
pub fn reconstruct(graph: &MetricGraph, point: &SpectralPoint, x: &DVector<f64>) -> Result<Eigenfunction> {
    reconstruct_at(graph, point.omega, x)
}

pub fn reconstruct_at(graph: &MetricGraph, omega: f64, x: &DVector<f64>) -> Result<Eigenfunction> {
    let sys = SecularSystem::new(graph)?;
    let index = sys.index();
    if x.len() != index.dim() {
        return Err(Error::Precondition(format!(
            "kernel vector has length {}, expected {}",
            x.len(),
            index.dim()
        )));
    }
    let max_norm = x.amax();
    if max_norm == 0.0 {
        return Err(Error::ZeroFunction);
    }
    let value_at = |v: &str| -> f64 {
        match graph.condition(v) {
            Some(VertexCondition::Dirichlet) => 0.0,
            _ => x[index.vertex_slot(v).expect("indexed")],
        }
    };
    let vertex_values: BTreeMap<String, f64> = index.vertex_ids().iter().map(|v| (v.clone(), value_at(v))).collect();

    let mut waves = Vec::with_capacity(graph.edges().len());
    for id in index.edge_ids() {
        let e = graph.edge(id).expect("indexed");
        let omega_e = local_frequency(omega, e.potential).ok_or_else(|| Error::BelowPotentialCeiling {
            omega,
            edge: id.clone(),
            potential: e.potential,
        })?;
        let wave = EdgeWave {
            edge: id.clone(),
            length: e.length,
            omega_e,
            a: vertex_values[&e.initial],
            b: x[index.initial_slot(id).expect("indexed")],
        };
        let end_value = (wave.value(e.length) - vertex_values[&e.terminal]).abs();
        let end_slope = (wave.slope(e.length) / omega_e - x[index.terminal_slot(id).expect("indexed")]).abs();
        let mismatch = end_value.max(end_slope) / max_norm;
        if mismatch > 1e-6 {
            return Err(Error::InconsistentKernelVector {
                edge: id.clone(),
                mismatch,
            });
        }
        waves.push(wave);
    }
    Ok(Eigenfunction {
        omega,
        vertex_values,
        waves,
        max_norm,
    })
}

#[derive(Clone, Debug)]
pub struct GenericOptions {
    pub count: usize,
    pub vertex_floor: f64,
    pub omega_cap: f64,
    pub tol: f64,
    pub nullspace_threshold: f64,
}

impl GenericOptions {
    pub fn new(count: usize, omega_cap: f64) -> Self {
        GenericOptions {
            count,
            vertex_floor: DEFAULT_VERTEX_FLOOR,
            omega_cap,
            tol: DEFAULT_TOL,
            nullspace_threshold: DEFAULT_NULLSPACE_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GenericCandidate {
    pub index: usize,
    pub eigen_index: Option<usize>,
    pub omega: f64,
    pub lambda: f64,
    pub multiplicity: usize,
    /// Simple root with every non-Dirichlet vertex value above the floor.
    pub generic: bool,
    /// Every edge amplitude above the floor.
    pub fully_supported: bool,
    /// `min |x(v)| / max |x|` over non-Dirichlet vertices.
    pub min_vertex_ratio: f64,
    /// `min amplitude / max amplitude` over edges.
    pub min_edge_ratio: f64,
    /// Trees only: distance of the unit kernel vector to `±x₀`.
    pub limit_distance: Option<f64>,
    /// Trees only: `‖A_ω − A₀‖_F`.
    pub distance_to_a0: Option<f64>,
}

/// Support diagnostics of the eigenfunction built from `x` at `ω`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Support {
    /// No non-Dirichlet vertex value below `vertex_floor · ‖ψ‖_∞`.
    pub generic: bool,
    /// No edge amplitude below `vertex_floor` times the largest one.
    pub fully_supported: bool,
    pub min_vertex_ratio: f64,
    pub min_edge_ratio: f64,
}

pub fn support_at(graph: &MetricGraph, omega: f64, x: &DVector<f64>, vertex_floor: f64) -> Result<Support> {
    let f = reconstruct_at(graph, omega, x)?;
    let min_vertex_ratio = graph
        .vertices()
        .iter()
        .filter(|v| !v.condition.is_dirichlet())
        .map(|v| f.vertex_values[&v.id].abs() / f.max_norm)
        .fold(f64::INFINITY, f64::min);
    let amps: Vec<f64> = f.waves.iter().map(EdgeWave::amplitude).collect();
    let max_amp = amps.iter().copied().fold(0.0, f64::max);
    let min_edge_ratio = amps.iter().copied().fold(f64::INFINITY, f64::min) / max_amp;
    Ok(Support {
        generic: min_vertex_ratio >= vertex_floor,
        fully_supported: min_edge_ratio >= vertex_floor,
        min_vertex_ratio,
        min_edge_ratio,
    })
}

#[derive(Clone, Debug)]
pub struct GenericSearch {
    /// Every root scanned, in order, with its flags.
    pub scanned: Vec<GenericCandidate>,
    /// The first `count` roots carrying the target flag: `generic` on trees
    /// without Dirichlet vertices, `fully_supported` otherwise.
    pub hits: Vec<GenericCandidate>,
    pub shortfall: usize,
    pub warnings: Vec<String>,
    pub spectrum: Spectrum,
}

/// Scans roots below `omega_cap` for generic / fully supported eigenfunctions.
///
/// Requires a tree without Dirichlet vertices (standard or δ conditions) or a
/// graph with at least one Dirichlet vertex.
pub fn generic_search(graph: &MetricGraph, opts: &GenericOptions) -> Result<GenericSearch> {
    let tree = graph.is_tree();
    let dirichlet = graph.has_dirichlet();
    if !tree && !dirichlet {
        return Err(Error::HypothesesViolated(format!(
            "graph has Betti number {} and no Dirichlet vertex; genericity is open for such graphs",
            crate::graph::betti(graph)
        )));
    }
    if opts.count == 0 {
        return Err(Error::Precondition("count must be at least 1".into()));
    }
    let spec = spectrum(
        graph,
        &SpectrumOptions {
            omega_min: None,
            omega_max: opts.omega_cap,
            grid_step: None,
            tol: opts.tol,
            nullspace_threshold: opts.nullspace_threshold,
        },
    )?;

    let sys = SecularSystem::new(graph)?;
    let index = sys.index().clone();
    let a0 = if tree && !dirichlet {
        Some(SecularSystem::new(&free_counterpart(graph))?.assemble_at_zero()?.matrix)
    } else {
        None
    };
    let x0 = a0.as_ref().map(|_| {
        let nv = index.vertex_count();
        let mut x = DVector::zeros(index.dim());
        for i in 0..nv {
            x[i] = 1.0 / (nv as f64).sqrt();
        }
        x
    });

    let mut scanned = Vec::with_capacity(spec.points.len());
    for p in &spec.points {
        let x = p.representative();
        let support = support_at(graph, p.omega, &x, opts.vertex_floor)?;
        let limit_distance = x0.as_ref().map(|x0| {
            let u = &x / x.norm();
            (&u - x0).norm().min((&u + x0).norm())
        });
        let distance_to_a0 = match &a0 {
            Some(a0) => Some((sys.assemble(p.omega)?.matrix - a0).norm()),
            None => None,
        };
        scanned.push(GenericCandidate {
            index: p.index,
            eigen_index: p.eigen_index,
            omega: p.omega,
            lambda: p.lambda,
            multiplicity: p.multiplicity,
            generic: p.multiplicity == 1 && support.generic,
            fully_supported: support.fully_supported,
            min_vertex_ratio: support.min_vertex_ratio,
            min_edge_ratio: support.min_edge_ratio,
            limit_distance,
            distance_to_a0,
        });
    }

    let want_generic = tree && !dirichlet;
    let hits: Vec<GenericCandidate> = scanned
        .iter()
        .filter(|c| if want_generic { c.generic } else { c.fully_supported })
        .take(opts.count)
        .cloned()
        .collect();
    let shortfall = opts.count - hits.len();
    let mut warnings = spec.warnings.clone();
    if shortfall > 0 {
        let msg = format!(
            "omega_cap {} reached with {} of {} requested eigenfunctions",
            opts.omega_cap,
            hits.len(),
            opts.count
        );
        warn!("{msg}");
        warnings.push(msg);
    }
    Ok(GenericSearch {
        scanned,
        hits,
        shortfall,
        warnings,
        spectrum: spec,
    })
}
