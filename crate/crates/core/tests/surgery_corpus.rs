use qgraph_core::corpus::{self, mixed_corpus};
use qgraph_core::surgery::{
    check_all, check_harmonic_kernel, check_kernel_dimension, check_pendant_dirichlet, check_pendant_standard,
    surgery_grid,
};
use rand::seq::SliceRandom;
use rand::Rng;

#[test]
fn every_identity_holds_on_the_mixed_corpus() {
    let grid = surgery_grid();
    let graphs = mixed_corpus(4242, 60);
    let mut kinds = std::collections::BTreeSet::new();
    for (i, g) in graphs.iter().enumerate() {
        let report = check_all(g, &grid).unwrap();
        for c in &report.checks {
            assert!(c.passed, "graph {i}: {} at {:?}: {}", c.check, c.target, c.detail);
            kinds.insert(c.check.clone());
        }
        assert!(report.passed);
    }
    for k in [
        "pendant-standard",
        "pendant-dirichlet",
        "dirichlet-split",
        "kernel-dimension",
        "harmonic-kernel",
        "zero-derivative",
    ] {
        assert!(kinds.contains(k), "{k} never ran");
    }
}

#[test]
fn pendant_identities_on_random_trees() {
    let grid = surgery_grid();
    let mut rng = corpus::rng(606);
    for _ in 0..20 {
        let e = rng.gen_range(1..=7);
        let g = corpus::random_tree(&mut rng, e, (0.3, 3.0));
        let v = g.vertices().choose(&mut rng).unwrap().id.clone();
        let len = rng.gen_range(0.2..2.5);
        assert!(check_pendant_standard(&g, &v, len, &grid).unwrap().passes());
        assert!(check_pendant_dirichlet(&g, &v, len, &grid).unwrap().passes());
    }
}

#[test]
fn kernel_dimensions_on_free_corpus_graphs() {
    for g in mixed_corpus(99, 40).iter().filter(|g| !g.has_dirichlet()) {
        let k = check_kernel_dimension(g).unwrap();
        assert!(k.passes(), "{} vs {}", k.computed, k.predicted);
        let h = check_harmonic_kernel(g).unwrap();
        assert!(h.passes(), "{} vs {}", h.computed, h.predicted);
    }
}
