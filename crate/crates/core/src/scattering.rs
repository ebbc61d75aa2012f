//! Vertex scattering matrices and the global bond-to-bond scattering matrix.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;

use crate::conditions::{ConditionsAssignment, VertexConditions};
use crate::error::{Error, Result};
use crate::graph::{Bond, MetricGraph};
use crate::linalg::{self, CMatrix};

/// Frequency used when a k-independent matrix is requested at k = 0.
pub const DEFAULT_K: f64 = 1.0;

/// Tolerance for the scale-invariance verdicts.
const VERDICT_TOL: f64 = 1e-10;

/// `sigma(k) = -(A + ikB)^{-1} (A - ikB)`. Row and column `j` refer to the
/// `j`-th outgoing bond of the vertex. Without a Robin part this is `Q - P`
/// for every k.
pub fn vertex_sigma(cond: &VertexConditions, k: f64) -> Result<CMatrix> {
    let k = effective_k(cond.is_scale_invariant(), k)?;
    let (a, b) = cond.to_ab();
    let ik = Complex64::new(0.0, k);
    let lhs = &a + &b * ik;
    let rhs = &a - &b * ik;
    let solved = lhs.lu().solve(&rhs).ok_or(Error::SingularScattering(k))?;
    Ok(-solved)
}

fn effective_k(scale_invariant: bool, k: f64) -> Result<f64> {
    if k == 0.0 {
        if scale_invariant {
            Ok(DEFAULT_K)
        } else {
            Err(Error::ZeroFrequency)
        }
    } else {
        Ok(k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    /// `None` when the matrix does not depend on k.
    pub k: Option<f64>,
    pub matrix: CMatrix,
}

impl ScatteringMatrix {
    pub fn is_k_independent(&self) -> bool {
        self.k.is_none()
    }

    pub fn get(&self, to: Bond, from: Bond) -> Complex64 {
        self.matrix[(to.0, from.0)]
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

fn check_assignment(g: &MetricGraph, a: &ConditionsAssignment) -> Result<()> {
    if a.len() != g.vertex_count() {
        return Err(Error::InvalidConditions(format!(
            "{} condition sets for {} vertices",
            a.len(),
            g.vertex_count()
        )));
    }
    for v in 0..g.vertex_count() {
        if a.get(v).degree() != g.degree(v) {
            return Err(Error::DegreeMismatch {
                vertex: g.vertex_id(v).to_string(),
                degree: g.degree(v),
                size: a.get(v).degree(),
            });
        }
    }
    Ok(())
}

/// `S[beta, alpha] = sigma^(v)[beta, rev(alpha)]` whenever `alpha` ends and
/// `beta` starts at `v`; zero otherwise.
pub fn global_s(g: &MetricGraph, a: &ConditionsAssignment, k: f64) -> Result<ScatteringMatrix> {
    check_assignment(g, a)?;
    let scale_invariant = a.is_scale_invariant();
    let k = effective_k(scale_invariant, k)?;
    let n = g.bond_count();
    let mut s = CMatrix::zeros(n, n);
    for v in 0..g.vertex_count() {
        let sigma = vertex_sigma(a.get(v), k)?;
        let bonds = g.incident_bonds(v)?;
        for (i, &out) in bonds.iter().enumerate() {
            for (j, &other) in bonds.iter().enumerate() {
                s[(out.0, other.reversed().0)] = sigma[(i, j)];
            }
        }
    }
    Ok(ScatteringMatrix { k: if scale_invariant { None } else { Some(k) }, matrix: s })
}

/// `max |S S^* - I|`.
pub fn unitarity_residual(m: &CMatrix) -> f64 {
    linalg::max_abs(&(m * m.adjoint() - linalg::identity(m.nrows())))
}

/// `sum_alpha S[alpha, rev(alpha)]`, the sum of all vertex reflection
/// amplitudes.
pub fn reversal_trace(s: &CMatrix) -> Complex64 {
    (0..s.nrows()).map(|b| s[(b, b ^ 1)]).sum()
}

/// `max |(S R)^2 - I|` with `R` the bond reversal. `S R` is block diagonal
/// with the vertex matrices as blocks, so this measures `sigma^2 = I` at
/// every vertex at once.
pub fn vertex_involution_residual(s: &CMatrix) -> f64 {
    let n = s.nrows();
    let sr = CMatrix::from_fn(n, n, |r, col| s[(r, col ^ 1)]);
    linalg::max_abs(&(&sr * &sr - linalg::identity(n)))
}

/// Compares `S` with the scattering matrix of the vertex-wise dual
/// conditions; true iff `S' = -S` to 1e-12.
pub fn dual_sign_check(g: &MetricGraph, a: &ConditionsAssignment) -> Result<bool> {
    if !a.is_scale_invariant() {
        return Err(Error::NotScaleInvariant);
    }
    let s = global_s(g, a, DEFAULT_K)?;
    let s_dual = global_s(g, &a.dual()?, DEFAULT_K)?;
    Ok(linalg::max_abs(&(&s_dual.matrix + &s.matrix)) < 1e-12)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexVerdicts {
    /// sigma(1) = sigma(sqrt 2)
    pub k_independent: bool,
    /// sigma^2 = I at some tested k
    pub involutive_at_some_k: bool,
    /// sigma^2 = I at every tested k
    pub involutive_at_all_k: bool,
    /// sigma is Hermitian with eigenvalues +-1, i.e. of the form I - 2Q
    pub reflection_form: bool,
    /// C = 0
    pub no_robin_part: bool,
}

impl VertexVerdicts {
    pub fn consistent(&self) -> bool {
        let v = self.k_independent;
        [self.involutive_at_some_k, self.involutive_at_all_k, self.reflection_form, self.no_robin_part]
            .iter()
            .all(|&x| x == v)
    }

    pub fn scale_invariant(&self) -> bool {
        self.consistent() && self.k_independent
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleInvarianceReport {
    pub vertices: Vec<VertexVerdicts>,
}

impl ScaleInvarianceReport {
    pub fn consistent(&self) -> bool {
        self.vertices.iter().all(VertexVerdicts::consistent)
    }

    /// The common verdict, when every vertex is internally consistent. The
    /// factorisation `H = A^*A` and scale invariance of the conditions are
    /// implied exactly when this is true.
    pub fn scale_invariant(&self) -> Option<bool> {
        self.consistent().then(|| self.vertices.iter().all(|v| v.k_independent))
    }
}

pub fn classify_vertex(cond: &VertexConditions) -> Result<VertexVerdicts> {
    let d = cond.degree();
    let ident = linalg::identity(d);
    let s1 = vertex_sigma(cond, 1.0)?;
    let s2 = vertex_sigma(cond, SQRT_2)?;
    let inv1 = linalg::max_abs(&(&s1 * &s1 - &ident)) < VERDICT_TOL;
    let inv2 = linalg::max_abs(&(&s2 * &s2 - &ident)) < VERDICT_TOL;
    let hermitian = linalg::max_abs(&(&s1 - s1.adjoint())) < VERDICT_TOL;
    let reflection = hermitian
        && linalg::hermitian_eigen(&s1).0.iter().all(|&x| (x.abs() - 1.0).abs() < VERDICT_TOL);
    Ok(VertexVerdicts {
        k_independent: linalg::max_abs(&(&s1 - &s2)) < VERDICT_TOL,
        involutive_at_some_k: inv1 || inv2,
        involutive_at_all_k: inv1 && inv2,
        reflection_form: reflection,
        no_robin_part: linalg::max_abs(&cond.c()) < crate::conditions::PROJECTOR_TOL,
    })
}

pub fn classify_scale_invariance(a: &ConditionsAssignment) -> Result<ScaleInvarianceReport> {
    Ok(ScaleInvarianceReport { vertices: a.iter().map(classify_vertex).collect::<Result<_>>()? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::Preset;
    use crate::graph::{build_graph, GraphSpec};
    use crate::linalg::c;
    use crate::random;

    fn interval(l: f64) -> MetricGraph {
        build_graph(&GraphSpec::new().vertex("a").vertex("b").edge("e", "a", "b", l)).unwrap()
    }

    fn triangle() -> MetricGraph {
        build_graph(
            &GraphSpec::new()
                .vertex("a")
                .vertex("b")
                .vertex("c")
                .edge("x", "a", "b", 1.0)
                .edge("y", "b", "c", 1.5)
                .edge("z", "c", "a", 0.7),
        )
        .unwrap()
    }

    #[test]
    fn kirchhoff_sigma_closed_form() {
        for d in 1..=12 {
            let s = vertex_sigma(&VertexConditions::kirchhoff(d), 1.0).unwrap();
            for e in 0..d {
                for f in 0..d {
                    let expected = 2.0 / d as f64 - if e == f { 1.0 } else { 0.0 };
                    assert!((s[(e, f)] - c(expected)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn dirichlet_and_neumann_reflections() {
        let s = vertex_sigma(&VertexConditions::dirichlet(1), 2.0).unwrap();
        assert!((s[(0, 0)] - c(-1.0)).norm() < 1e-15);
        let s = vertex_sigma(&VertexConditions::neumann(1), 2.0).unwrap();
        assert!((s[(0, 0)] - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn delta_sigma_depends_on_k() {
        let cond = VertexConditions::preset(Preset::Delta(1.3), 2).unwrap();
        let s1 = vertex_sigma(&cond, 1.0).unwrap();
        let s2 = vertex_sigma(&cond, 2.0).unwrap();
        assert!(linalg::max_abs(&(s1 - s2)) > 1e-6);
        assert_eq!(vertex_sigma(&cond, 0.0), Err(Error::ZeroFrequency));
    }

    #[test]
    fn delta_sigma_matches_robin_closed_form() {
        // sigma = Q - P - (Lambda - ik)^{-1} (Lambda + ik) C with lambda = alpha/d on C = J/d
        let (alpha, d, k) = (2.2, 3usize, 1.7);
        let cond = VertexConditions::preset(Preset::Delta(alpha), d).unwrap();
        let lam = alpha / d as f64;
        let robin = -(Complex64::new(lam, k) / Complex64::new(lam, -k));
        let expected = cond.q() - cond.p() + cond.c() * robin;
        let got = vertex_sigma(&cond, k).unwrap();
        assert!(linalg::max_abs(&(got - expected)) < 1e-13);
    }

    #[test]
    fn interval_assembly() {
        let g = interval(1.0);
        let n = ConditionsAssignment::uniform(&g, Preset::Neumann).unwrap();
        let s = global_s(&g, &n, 1.0).unwrap();
        assert!(s.is_k_independent());
        assert_eq!(s.matrix[(0, 1)], c(1.0));
        assert_eq!(s.matrix[(1, 0)], c(1.0));
        assert_eq!(s.matrix[(0, 0)], c(0.0));
        let d = ConditionsAssignment::uniform(&g, Preset::Dirichlet).unwrap();
        let s = global_s(&g, &d, 1.0).unwrap();
        assert_eq!(s.matrix[(0, 1)], c(-1.0));
        assert_eq!(s.matrix[(1, 0)], c(-1.0));
    }

    #[test]
    fn sparsity_pattern() {
        let g = triangle();
        let mut rng = random::seeded(5);
        let a = random::random_scale_invariant_assignment(&g, &mut rng);
        let s = global_s(&g, &a, 1.0).unwrap();
        for beta in g.bonds() {
            for alpha in g.bonds() {
                if g.bond_end(alpha) != g.bond_start(beta) {
                    assert_eq!(s.get(beta, alpha), c(0.0));
                }
            }
        }
    }

    #[test]
    fn kirchhoff_reflection_trace_is_euler() {
        let g = triangle();
        let a = ConditionsAssignment::uniform(&g, Preset::Kirchhoff).unwrap();
        let s = global_s(&g, &a, 1.0).unwrap();
        let quarter = reversal_trace(&s.matrix) / 4.0;
        let chi = g.euler_characteristic() as f64;
        assert!((quarter.re - 0.5 * chi).abs() < 1e-12);
        assert!(quarter.im.abs() < 1e-12);
    }

    #[test]
    fn dual_sign_flip() {
        let tri = triangle();
        let k = ConditionsAssignment::uniform(&tri, Preset::Kirchhoff).unwrap();
        assert!(dual_sign_check(&tri, &k).unwrap());
        let g = interval(1.0);
        let n = ConditionsAssignment::uniform(&g, Preset::Neumann).unwrap();
        assert!(dual_sign_check(&g, &n).unwrap());
        let delta = ConditionsAssignment::uniform(&tri, Preset::Delta(1.0)).unwrap();
        assert_eq!(dual_sign_check(&tri, &delta), Err(Error::NotScaleInvariant));
    }

    #[test]
    fn classifier_verdicts() {
        let tri = triangle();
        let k = ConditionsAssignment::uniform(&tri, Preset::Kirchhoff).unwrap();
        let report = classify_scale_invariance(&k).unwrap();
        assert_eq!(report.scale_invariant(), Some(true));

        let g = interval(1.0);
        let mixed = ConditionsAssignment::new(&g, vec![VertexConditions::dirichlet(1), VertexConditions::neumann(1)]).unwrap();
        assert_eq!(classify_scale_invariance(&mixed).unwrap().scale_invariant(), Some(true));

        let one_delta = ConditionsAssignment::from_fn(&tri, |v, d| {
            VertexConditions::preset(if v == 1 { Preset::Delta(2.0) } else { Preset::Kirchhoff }, d)
        })
        .unwrap();
        let report = classify_scale_invariance(&one_delta).unwrap();
        assert!(report.consistent());
        assert_eq!(report.scale_invariant(), Some(false));
        let bad = &report.vertices[1];
        assert!(!bad.k_independent && !bad.involutive_at_some_k && !bad.reflection_form && !bad.no_robin_part);
        assert!(report.vertices[0].k_independent);
    }

    #[test]
    fn random_unitarity_and_involution() {
        let mut rng = random::seeded(11);
        let params = random::GraphParams { loop_probability: 0.2, ..Default::default() };
        for _ in 0..20 {
            let g = random::random_connected_graph(&params, &mut rng);
            let a = random::random_scale_invariant_assignment(&g, &mut rng);
            let s = global_s(&g, &a, 1.0).unwrap();
            assert!(unitarity_residual(&s.matrix) < 1e-11);
            assert!(vertex_involution_residual(&s.matrix) < 1e-11);
            let trace = reversal_trace(&s.matrix);
            let expected = 2.0 * (g.edge_count() as f64 - a.dirichlet_count() as f64);
            assert!((trace.re - expected).abs() < 1e-9);
            assert!(trace.im.abs() < 1e-12);

            let robin = ConditionsAssignment::from_fn(&g, |_, d| Ok(random::random_robin(d, &mut rng))).unwrap();
            for k in [0.5, 1.0, SQRT_2] {
                let s = global_s(&g, &robin, k).unwrap();
                assert!(unitarity_residual(&s.matrix) < 1e-11);
            }
        }
    }

    #[test]
    fn degree_mismatch_rejected() {
        let g = triangle();
        let other = interval(1.0);
        let a = ConditionsAssignment::uniform(&other, Preset::Neumann).unwrap();
        assert!(global_s(&g, &a, 1.0).is_err());
    }
}
