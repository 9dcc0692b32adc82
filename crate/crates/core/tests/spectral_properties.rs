use qgraph_core::corpus::{self, path, star, star_123};
use qgraph_core::nodal::{count_nodal_domains, nodal_statistics, NodalStatus};
use qgraph_core::oracle::{discretize, lowest_eigenvalues};
use qgraph_core::spectral::{generic_search, reconstruct, spectrum, GenericOptions, SpectrumOptions};
use qgraph_core::{Error, VertexCondition};

#[test]
fn small_delta_coupling_moves_roots_linearly() {
    let base = star_123();
    let s0 = spectrum(&base, &SpectrumOptions::up_to(8.0)).unwrap();
    assert!(s0.points.len() >= 3);
    let shifted = |alpha: f64| {
        let g = base.with_condition("c", VertexCondition::Delta(alpha)).unwrap();
        spectrum(&g, &SpectrumOptions::up_to(8.0)).unwrap()
    };
    for sign in [1.0, -1.0] {
        let a = shifted(sign * 1e-3);
        let b = shifted(sign * 5e-4);
        assert_eq!(a.points.len(), s0.points.len());
        for ((p0, pa), pb) in s0.points.iter().zip(&a.points).zip(&b.points) {
            let qa = (pa.omega - p0.omega) / (sign * 1e-3);
            let qb = (pb.omega - p0.omega) / (sign * 5e-4);
            assert!((pa.omega - p0.omega).abs() < 1e-2);
            assert!(
                (qa - qb).abs() <= 1e-2 * qa.abs().max(1e-3),
                "{qa} vs {qb} at ω = {}",
                p0.omega
            );
        }
    }
}

#[test]
fn constant_potential_shifts_squared_frequencies() {
    let mut rng = corpus::rng(31);
    let q = 2.5;
    for i in 0..3 {
        let g = corpus::random_graph(&mut rng, 3 + i, i % 2, (0.5, 2.0));
        let free = spectrum(&g, &SpectrumOptions::up_to(12.0)).unwrap();
        let shifted = spectrum(&g.with_uniform_potential(q), &SpectrumOptions::up_to(12.0)).unwrap();
        // the shifted λ = q mode is the old zero mode; roots near the window edge may drop out
        let tail: Vec<_> = shifted.points.iter().filter(|p| p.lambda > q + 1e-6).collect();
        for (a, b) in free.points.iter().zip(&tail) {
            if a.omega.powi(2) + q > 12.0f64.powi(2) {
                break;
            }
            assert!(
                (a.lambda + q - b.lambda).abs() <= 1e-8 * b.lambda,
                "{} vs {}",
                a.lambda + q,
                b.lambda
            );
            assert_eq!(a.multiplicity, b.multiplicity);
        }
    }
}

#[test]
fn dirichlet_ground_state_has_a_single_domain() {
    let mut rng = corpus::rng(17);
    for i in 0..4 {
        let g = corpus::random_graph(&mut rng, 4, i % 2, (0.5, 2.0));
        let free = spectrum(&g, &SpectrumOptions::up_to(6.0)).unwrap();
        let rows = nodal_statistics(&g, &free).unwrap();
        assert_eq!(rows[0].status, NodalStatus::ZeroMode);
        assert_eq!(rows[0].nu, Some(1));

        let d = corpus::with_dirichlet_leaf(&mut rng, &g, (0.5, 2.0));
        let s = spectrum(&d, &SpectrumOptions::up_to(6.0)).unwrap();
        assert!(!s.zero_mode);
        let ground = &s.points[0];
        assert_eq!(ground.multiplicity, 1);
        let f = reconstruct(&d, ground, &ground.kernel_basis[0]).unwrap();
        let r = count_nodal_domains(&d, &f).unwrap();
        assert_eq!(r.nu, 1);
        assert_eq!(r.interior_zero_count(), 0);
        let oracle = lowest_eigenvalues(&discretize(&d, 500).unwrap(), 1).unwrap();
        assert!((oracle.eigenvalues[0].sqrt() - ground.omega).abs() < 1e-3 * ground.omega);
    }
}

#[test]
fn two_edge_path_has_generic_eigenfunctions() {
    let g = path(&[1.0, 1.0]);
    let found = generic_search(&g, &GenericOptions::new(3, 50.0)).unwrap();
    assert_eq!(found.shortfall, 0);
    // ψ(v1) = cos(ω) on each half: generic exactly when ω ∉ π/2 + πℤ
    for h in &found.hits {
        assert!(h.generic && h.multiplicity == 1);
        assert!(h.min_vertex_ratio > 1e-6);
        assert!(
            (h.omega / std::f64::consts::PI).fract() < 1e-9 || (h.omega / std::f64::consts::PI).fract() > 1.0 - 1e-9
        );
    }
}

#[test]
fn tree_limit_diagnostic_tracks_distance_to_a0() {
    let g = star_123();
    let found = generic_search(&g, &GenericOptions::new(5, 120.0)).unwrap();
    let mut near: Vec<_> = found.scanned.iter().filter(|c| c.multiplicity == 1).collect();
    near.sort_by(|a, b| a.distance_to_a0.unwrap().total_cmp(&b.distance_to_a0.unwrap()));
    let first = near[0];
    let median = near[near.len() / 2];
    assert!(first.distance_to_a0.unwrap() < median.distance_to_a0.unwrap());
    assert!(
        first.limit_distance.unwrap() < median.limit_distance.unwrap(),
        "{:?} vs {:?}",
        first.limit_distance,
        median.limit_distance
    );
    assert!(found.scanned.iter().all(|c| c.limit_distance.unwrap() >= 0.0));
}

#[test]
fn short_window_reports_shortfall() {
    let g = star(&[1.0, 2f64.sqrt(), 3f64.sqrt()]);
    let found = generic_search(&g, &GenericOptions::new(50, 5.0)).unwrap();
    assert!(found.shortfall > 0);
    assert_eq!(found.hits.len() + found.shortfall, 50);
    assert!(!found.warnings.is_empty());
}

#[test]
fn generic_search_refuses_free_cycles() {
    let g = corpus::cycle(&[1.0, 1.3, 0.7]);
    assert!(matches!(
        generic_search(&g, &GenericOptions::new(2, 20.0)),
        Err(Error::HypothesesViolated(_))
    ));
}
