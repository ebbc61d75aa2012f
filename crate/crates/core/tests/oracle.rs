mod common;

use std::f64::consts::PI;

use common::fd_oracle::{positive_roots, FdGraph, VertexKind};
use qgraph::{build_graph, secular, ConditionsAssignment, GraphSpec, VertexConditions};

fn expand(roots: &[secular::Root]) -> Vec<f64> {
    roots.iter().flat_map(|r| std::iter::repeat_n(r.k, r.multiplicity)).collect()
}

#[test]
fn oracle_reproduces_interval_spectra() {
    let dirichlet = FdGraph { vertices: vec![VertexKind::Dirichlet; 2], edges: vec![(0, 1, 1.0)] };
    for (n, k) in positive_roots(&dirichlet, 1000, 0, 5).iter().enumerate() {
        assert!((k - (n + 1) as f64 * PI).abs() < 1e-6, "{k}");
    }
    let neumann = FdGraph { vertices: vec![VertexKind::Kirchhoff; 2], edges: vec![(0, 1, 2.0)] };
    for (n, k) in positive_roots(&neumann, 1000, 1, 5).iter().enumerate() {
        assert!((k - (n + 1) as f64 * PI / 2.0).abs() < 1e-6, "{k}");
    }
}

#[test]
fn secular_roots_match_oracle_on_mixed_graph() {
    // lasso with a Dirichlet end: unequal lengths, a loop and both vertex kinds
    let fd = FdGraph {
        vertices: vec![VertexKind::Kirchhoff, VertexKind::Kirchhoff, VertexKind::Dirichlet],
        edges: vec![(0, 1, 1.3), (1, 0, 0.9), (1, 2, 0.7)],
    };
    let g = build_graph(
        &GraphSpec::new()
            .vertex("a")
            .vertex("b")
            .vertex("d")
            .edge("x", "a", "b", 1.3)
            .edge("y", "b", "a", 0.9)
            .edge("z", "b", "d", 0.7),
    )
    .unwrap();
    let a = ConditionsAssignment::from_fn(&g, |v, d| {
        Ok(if v == 2 { VertexConditions::dirichlet(d) } else { VertexConditions::kirchhoff(d) })
    })
    .unwrap();
    let data = secular::spectral_data(&g, &a, 12.0, 1e-11).unwrap();
    assert_eq!(data.n0, 0);
    let secular_roots = expand(&data.roots);
    let oracle = positive_roots(&fd, 1000, 0, 10);
    assert!(secular_roots.len() >= 10);
    for (s, o) in secular_roots.iter().zip(&oracle) {
        assert!((s - o).abs() < 1e-4, "{s} vs {o}");
    }
}
