//! Seeded random graphs and vertex conditions for property checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::conditions::{ConditionsAssignment, VertexConditions};
use crate::graph::{build_graph, GraphSpec, MetricGraph};
use crate::linalg::{self, c, CMatrix};
use num_complex::Complex64;

pub type TestRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases
/// of `diag(R)` pushed back into `Q`.
pub fn haar_unitary(d: usize, rng: &mut impl Rng) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        let z = r[(j, j)];
        let phase = if z.norm() > 0.0 { z / z.norm() } else { c(1.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

fn projector_onto(u: &CMatrix, cols: std::ops::Range<usize>) -> CMatrix {
    let basis = u.columns(cols.start, cols.len()).into_owned();
    let p = &basis * basis.adjoint();
    linalg::hermitian_part(&p)
}

/// Scale-invariant conditions: `P` projects onto the first `r` columns of a
/// Haar unitary, `r` uniform in `0..=d`, and `Q = I - P`.
pub fn random_scale_invariant(d: usize, rng: &mut impl Rng) -> VertexConditions {
    let u = haar_unitary(d, rng);
    let r = rng.random_range(0..=d);
    let p = projector_onto(&u, 0..r);
    let q = projector_onto(&u, r..d);
    VertexConditions::new(p, q, CMatrix::zeros(d, d)).expect("Haar projectors are valid")
}

/// Conditions with a generic Robin part: ranks of P, Q, C drawn at random with
/// `rank C >= 1`, and Lambda with eigenvalues of either sign and modulus in
/// `[0.5, 3]` on the range of C.
pub fn random_robin(d: usize, rng: &mut impl Rng) -> VertexConditions {
    let u = haar_unitary(d, rng);
    let rc = rng.random_range(1..=d);
    let rp = rng.random_range(0..=d - rc);
    let p = projector_onto(&u, 0..rp);
    let q = projector_onto(&u, rp..d - rc);
    let cb = u.columns(d - rc, rc).into_owned();
    let w = haar_unitary(rc, rng);
    let eig = CMatrix::from_fn(rc, rc, |i, j| {
        if i == j {
            let m: f64 = rng.random_range(0.5..3.0);
            c(if rng.random_bool(0.5) { m } else { -m })
        } else {
            c(0.0)
        }
    });
    let lambda = &cb * &w * eig * w.adjoint() * cb.adjoint();
    VertexConditions::new(p, q, linalg::hermitian_part(&lambda)).expect("constructed Robin conditions are valid")
}

pub fn random_scale_invariant_assignment(g: &MetricGraph, rng: &mut impl Rng) -> ConditionsAssignment {
    ConditionsAssignment::from_fn(g, |_, d| Ok(random_scale_invariant(d, rng))).expect("degrees match")
}

#[derive(Debug, Clone, Copy)]
pub struct GraphParams {
    pub min_vertices: usize,
    pub max_vertices: usize,
    pub max_edges: usize,
    pub min_length: f64,
    pub max_length: f64,
    /// Probability that an extra (non-tree) edge is a loop.
    pub loop_probability: f64,
}

impl Default for GraphParams {
    fn default() -> Self {
        GraphParams {
            min_vertices: 2,
            max_vertices: 6,
            max_edges: 9,
            min_length: 0.5,
            max_length: 2.0,
            loop_probability: 0.0,
        }
    }
}

fn push_component(spec: &mut GraphSpec, prefix: &str, params: &GraphParams, rng: &mut impl Rng) {
    let nv = rng.random_range(params.min_vertices..=params.max_vertices);
    let min_e = (nv - 1).max(1);
    let ne = rng.random_range(min_e..=params.max_edges.max(min_e));
    let name = |i: usize| format!("{prefix}v{i}");
    for i in 0..nv {
        spec.vertices.push(name(i));
    }
    let mut ends = Vec::with_capacity(ne);
    for i in 1..nv {
        ends.push((rng.random_range(0..i), i));
    }
    while ends.len() < ne {
        let a = rng.random_range(0..nv);
        let b = if rng.random_bool(params.loop_probability) {
            a
        } else {
            let mut b = rng.random_range(0..nv);
            if nv > 1 {
                while b == a {
                    b = rng.random_range(0..nv);
                }
            }
            b
        };
        ends.push((a, b));
    }
    for (i, (a, b)) in ends.into_iter().enumerate() {
        let (tail, head) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
        let length = rng.random_range(params.min_length..=params.max_length);
        spec.edges.push(crate::graph::EdgeSpec { id: format!("{prefix}e{i}"), tail: name(tail), head: name(head), length });
    }
}

/// Connected random multigraph: random spanning tree plus extra edges, each
/// edge randomly oriented.
pub fn random_connected_graph(params: &GraphParams, rng: &mut impl Rng) -> MetricGraph {
    let mut spec = GraphSpec::new();
    push_component(&mut spec, "", params, rng);
    build_graph(&spec).expect("generated graph is valid")
}

/// Disjoint union of `components` small connected random graphs.
pub fn random_graph_with_components(components: usize, rng: &mut impl Rng) -> MetricGraph {
    let params = GraphParams { min_vertices: 2, max_vertices: 3, max_edges: 4, ..GraphParams::default() };
    let mut spec = GraphSpec::new();
    for k in 0..components {
        push_component(&mut spec, &format!("c{k}"), &params, rng);
    }
    build_graph(&spec).expect("generated graph is valid")
}
