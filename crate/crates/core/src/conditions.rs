//! Self-adjoint vertex conditions in projector form.
//!
//! At a vertex of degree `d` the conditions are a triple `(P, Q, Lambda)` of
//! `d x d` complex matrices: `P F = 0` (Dirichlet part), `Q F' = 0` (Neumann
//! part) and `C F' = Lambda C F` (Robin part) with `C = I - P - Q`. `F` and `F'`
//! hold the values and outgoing derivatives along the bonds returned by
//! [`MetricGraph::incident_bonds`].

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{MetricGraph, Subdivision};
use crate::linalg::{self, c, CMatrix};

/// Residual tolerance for projector and Hermiticity identities.
pub const PROJECTOR_TOL: f64 = 1e-12;
/// Smallest admissible |eigenvalue| of Lambda on the range of C.
pub const INVERTIBILITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    Kirchhoff,
    AntiKirchhoff,
    Dirichlet,
    Neumann,
    /// `sum f' = alpha f(v)` with continuity.
    Delta(f64),
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Kirchhoff => f.write_str("kirchhoff"),
            Preset::AntiKirchhoff => f.write_str("anti_kirchhoff"),
            Preset::Dirichlet => f.write_str("dirichlet"),
            Preset::Neumann => f.write_str("neumann"),
            Preset::Delta(a) => write!(f, "delta({a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    fn residual(&mut self, name: &'static str, residual: f64) {
        self.checks.push(Check { name, residual, passed: residual < PROJECTOR_TOL });
    }
}

/// Checks every invariant of a `(P, Q, Lambda)` triple and reports residuals.
pub fn validate_parts(p: &CMatrix, q: &CMatrix, lambda: &CMatrix) -> ValidationReport {
    let d = p.nrows();
    let mut report = ValidationReport::default();
    let shapes_ok = [p, q, lambda].iter().all(|m| m.nrows() == d && m.ncols() == d) && d > 0;
    report.checks.push(Check { name: "square matrices of equal size", residual: 0.0, passed: shapes_ok });
    if !shapes_ok {
        return report;
    }
    let ident = linalg::identity(d);
    let cm = &ident - p - q;
    report.residual("P^2 = P", linalg::max_abs(&(p * p - p)));
    report.residual("P hermitian", linalg::max_abs(&(p - p.adjoint())));
    report.residual("Q^2 = Q", linalg::max_abs(&(q * q - q)));
    report.residual("Q hermitian", linalg::max_abs(&(q - q.adjoint())));
    report.residual("PQ = 0", linalg::max_abs(&(p * q)));
    report.residual("QP = 0", linalg::max_abs(&(q * p)));
    report.residual("C^2 = C", linalg::max_abs(&(&cm * &cm - &cm)));
    report.residual("C hermitian", linalg::max_abs(&(&cm - cm.adjoint())));
    report.residual("Lambda = C Lambda C", linalg::max_abs(&(&cm * lambda * &cm - lambda)));
    report.residual("Lambda hermitian", linalg::max_abs(&(lambda - lambda.adjoint())));

    let basis = linalg::projector_range(&cm);
    let smallest = if basis.ncols() == 0 {
        f64::INFINITY
    } else {
        let restricted = basis.adjoint() * lambda * &basis;
        linalg::singular_values(&restricted).last().copied().unwrap_or(0.0)
    };
    report.checks.push(Check {
        name: "Lambda invertible on range C",
        residual: smallest,
        passed: smallest > INVERTIBILITY_TOL,
    });
    report
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexConditions {
    p: CMatrix,
    q: CMatrix,
    lambda: CMatrix,
}

impl VertexConditions {
    /// Builds conditions from a triple, rejecting anything that fails
    /// [`validate_parts`].
    pub fn new(p: CMatrix, q: CMatrix, lambda: CMatrix) -> Result<Self> {
        let report = validate_parts(&p, &q, &lambda);
        if !report.passed() {
            let names: Vec<String> = report
                .failures()
                .iter()
                .map(|c| format!("{} (residual {:.3e})", c.name, c.residual))
                .collect();
            return Err(Error::InvalidConditions(names.join(", ")));
        }
        Ok(VertexConditions { p, q, lambda })
    }

    fn from_valid(p: CMatrix, q: CMatrix, lambda: CMatrix) -> Self {
        debug_assert!(validate_parts(&p, &q, &lambda).passed());
        VertexConditions { p, q, lambda }
    }

    pub fn preset(preset: Preset, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidConditions("degree must be at least 1".into()));
        }
        let ident = linalg::identity(d);
        let mean = linalg::ones(d) * c(1.0 / d as f64);
        let zero = CMatrix::zeros(d, d);
        Ok(match preset {
            Preset::Kirchhoff => Self::from_valid(&ident - &mean, mean, zero),
            Preset::AntiKirchhoff => Self::from_valid(mean.clone(), &ident - &mean, zero),
            Preset::Dirichlet => Self::from_valid(ident, zero.clone(), zero),
            Preset::Neumann => Self::from_valid(zero.clone(), ident, zero),
            Preset::Delta(alpha) => {
                if alpha == 0.0 {
                    return Err(Error::ZeroDeltaCoupling);
                }
                if !alpha.is_finite() {
                    return Err(Error::InvalidConditions(format!("delta coupling {alpha} is not finite")));
                }
                let lambda = &mean * c(alpha / d as f64);
                Self::from_valid(&ident - &mean, zero, lambda)
            }
        })
    }

    pub fn kirchhoff(d: usize) -> Self {
        Self::preset(Preset::Kirchhoff, d).expect("d >= 1")
    }

    pub fn anti_kirchhoff(d: usize) -> Self {
        Self::preset(Preset::AntiKirchhoff, d).expect("d >= 1")
    }

    pub fn dirichlet(d: usize) -> Self {
        Self::preset(Preset::Dirichlet, d).expect("d >= 1")
    }

    pub fn neumann(d: usize) -> Self {
        Self::preset(Preset::Neumann, d).expect("d >= 1")
    }

    pub fn degree(&self) -> usize {
        self.p.nrows()
    }

    pub fn p(&self) -> &CMatrix {
        &self.p
    }

    pub fn q(&self) -> &CMatrix {
        &self.q
    }

    pub fn lambda(&self) -> &CMatrix {
        &self.lambda
    }

    /// The Robin projector `C = I - P - Q`.
    pub fn c(&self) -> CMatrix {
        linalg::identity(self.degree()) - &self.p - &self.q
    }

    pub fn validate(&self) -> ValidationReport {
        validate_parts(&self.p, &self.q, &self.lambda)
    }

    /// `A = P - Lambda C`, `B = Q + C`, so that the conditions read `A F + B F' = 0`.
    pub fn to_ab(&self) -> (CMatrix, CMatrix) {
        let cm = self.c();
        let a = &self.p - &self.lambda * &cm;
        let b = &self.q + cm;
        (a, b)
    }

    /// Recovers the projector form from any self-adjoint pair `(A, B)`.
    ///
    /// `P` projects onto `ker B`. On `W = (ker B)^perp` the conditions become
    /// `(I - P) F' = M F` with `M = -B^+ A` Hermitian; `Q` is the kernel of `M`
    /// inside `W` and `Lambda` is `M` on the rest.
    pub fn from_ab(a: &CMatrix, b: &CMatrix) -> Result<Self> {
        let d = a.nrows();
        if d == 0 || a.ncols() != d || b.nrows() != d || b.ncols() != d {
            return Err(Error::NotSelfAdjoint("A and B must be square of equal size".into()));
        }
        let mut block = CMatrix::zeros(d, 2 * d);
        block.view_mut((0, 0), (d, d)).copy_from(a);
        block.view_mut((0, d), (d, d)).copy_from(b);
        let r = linalg::rank(&block);
        if r != d {
            return Err(Error::NotSelfAdjoint(format!("rank [A|B] = {r}, expected {d}")));
        }
        let ab = a * b.adjoint();
        let scale = linalg::max_abs(a).max(linalg::max_abs(b)).max(1.0);
        let skew = linalg::max_abs(&(&ab - ab.adjoint()));
        if skew > 1e-10 * scale * scale {
            return Err(Error::NotSelfAdjoint(format!("A B^* is not hermitian (residual {skew:.3e})")));
        }

        let kernel_b = linalg::null_space(b);
        let p = linalg::projector_from_basis(&kernel_b);
        let w = linalg::projector_range(&(linalg::identity(d) - &p));
        let m = -(linalg::pseudo_inverse(b) * a);
        let mw = w.adjoint() * m * &w;
        let (mu, vecs) = linalg::hermitian_eigen(&mw);
        let top = mu.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        let cut = linalg::RANK_THRESHOLD * top.max(1.0);
        let zero_cols: Vec<usize> = (0..mu.len()).filter(|&i| mu[i].abs() <= cut).collect();
        let robin_cols: Vec<usize> = (0..mu.len()).filter(|&i| mu[i].abs() > cut).collect();
        let q_basis = &w * linalg::select_columns(&vecs, &zero_cols);
        let c_basis = &w * linalg::select_columns(&vecs, &robin_cols);
        let q = linalg::projector_from_basis(&q_basis);
        let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            robin_cols.len(),
            robin_cols.iter().map(|&i| c(mu[i])),
        ));
        let lambda = &c_basis * diag * c_basis.adjoint();
        // Symmetrise away round-off before the strict validation.
        Self::new(linalg::hermitian_part(&p), linalg::hermitian_part(&q), linalg::hermitian_part(&lambda))
    }

    /// Orthonormal basis (2d x d) of `{(F, F') : A F + B F' = 0}`.
    pub fn solution_subspace(&self) -> CMatrix {
        let (a, b) = self.to_ab();
        solution_subspace_ab(&a, &b)
    }

    /// Exchanges the Dirichlet and Neumann parts. Defined only without a
    /// Robin part.
    pub fn dual(&self) -> Result<Self> {
        if !self.is_scale_invariant() {
            return Err(Error::NotScaleInvariant);
        }
        Ok(VertexConditions { p: self.q.clone(), q: self.p.clone(), lambda: self.lambda.clone() })
    }

    pub fn is_scale_invariant(&self) -> bool {
        linalg::max_abs(&self.c()) < PROJECTOR_TOL
    }

    /// `dim P`, counted as eigenvalues of `P` above 1/2.
    pub fn dirichlet_rank(&self) -> usize {
        linalg::projector_rank(&self.p)
    }

    /// Conjugates every matrix by `diag(signs)`, i.e. rewrites the conditions
    /// for the coordinates `F -> S F`, `F' -> S F'`.
    pub fn conjugated(&self, signs: &[f64]) -> Self {
        let s = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(signs.len(), signs.iter().map(|&x| c(x))));
        VertexConditions {
            p: &s * &self.p * &s,
            q: &s * &self.q * &s,
            lambda: &s * &self.lambda * &s,
        }
    }

    /// Same conditions after the local coordinates are permuted:
    /// old coordinate `j` becomes new coordinate `perm[j]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let d = self.degree();
        let mut inv = vec![0; d];
        for (j, &pj) in perm.iter().enumerate() {
            inv[pj] = j;
        }
        let f = |m: &CMatrix| DMatrix::from_fn(d, d, |r, col| m[(inv[r], inv[col])]);
        VertexConditions { p: f(&self.p), q: f(&self.q), lambda: f(&self.lambda) }
    }

    /// Entrywise distance to another triple of the same size.
    pub fn distance(&self, other: &Self) -> f64 {
        if self.degree() != other.degree() {
            return f64::INFINITY;
        }
        linalg::max_abs(&(&self.p - &other.p))
            .max(linalg::max_abs(&(&self.q - &other.q)))
            .max(linalg::max_abs(&(&self.lambda - &other.lambda)))
    }

    pub fn is_preset(&self, preset: Preset) -> bool {
        Self::preset(preset, self.degree()).is_ok_and(|p| self.distance(&p) < PROJECTOR_TOL)
    }
}

/// Orthonormal basis (2d x d) of the solution set of `A F + B F' = 0`.
pub fn solution_subspace_ab(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let d = a.nrows();
    let mut block = CMatrix::zeros(d, 2 * d);
    block.view_mut((0, 0), (d, d)).copy_from(a);
    block.view_mut((0, d), (d, d)).copy_from(b);
    linalg::null_space(&block)
}

/// Conditions for every vertex of a graph, indexed by vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionsAssignment {
    conditions: Vec<VertexConditions>,
}

impl ConditionsAssignment {
    pub fn new(g: &MetricGraph, conditions: Vec<VertexConditions>) -> Result<Self> {
        if conditions.len() != g.vertex_count() {
            return Err(Error::InvalidConditions(format!(
                "{} condition sets for {} vertices",
                conditions.len(),
                g.vertex_count()
            )));
        }
        for (v, cond) in conditions.iter().enumerate() {
            if cond.degree() != g.degree(v) {
                return Err(Error::DegreeMismatch {
                    vertex: g.vertex_id(v).to_string(),
                    degree: g.degree(v),
                    size: cond.degree(),
                });
            }
        }
        Ok(ConditionsAssignment { conditions })
    }

    pub fn from_fn(g: &MetricGraph, mut f: impl FnMut(usize, usize) -> Result<VertexConditions>) -> Result<Self> {
        let conditions = (0..g.vertex_count()).map(|v| f(v, g.degree(v))).collect::<Result<Vec<_>>>()?;
        Self::new(g, conditions)
    }

    pub fn uniform(g: &MetricGraph, preset: Preset) -> Result<Self> {
        Self::from_fn(g, |_, d| VertexConditions::preset(preset, d))
    }

    pub fn get(&self, v: usize) -> &VertexConditions {
        &self.conditions[v]
    }

    pub fn iter(&self) -> impl Iterator<Item = &VertexConditions> {
        self.conditions.iter()
    }

    pub fn len(&self) -> usize {
        self.conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    pub fn is_scale_invariant(&self) -> bool {
        self.conditions.iter().all(VertexConditions::is_scale_invariant)
    }

    pub fn is_all(&self, preset: Preset) -> bool {
        self.conditions.iter().all(|c| c.is_preset(preset))
    }

    /// `p = sum_v dim P_v`, the number of conditions on values alone.
    pub fn dirichlet_count(&self) -> usize {
        self.conditions.iter().map(VertexConditions::dirichlet_rank).sum()
    }

    /// Vertex-wise exchange of `P` and `Q`.
    pub fn dual(&self) -> Result<Self> {
        Ok(ConditionsAssignment {
            conditions: self.conditions.iter().map(VertexConditions::dual).collect::<Result<_>>()?,
        })
    }

    /// The dual operator `A A^*` acting on 1-forms, written as a scalar
    /// problem. A 1-form's outgoing component flips sign at the head of its
    /// edge, so the swapped conditions are conjugated by the orientation
    /// signs (+1 for bonds leaving a tail, -1 for bonds leaving a head).
    pub fn one_form_dual(&self, g: &MetricGraph) -> Result<Self> {
        let dual = self.dual()?;
        let conditions = dual
            .conditions
            .iter()
            .enumerate()
            .map(|(v, cond)| {
                let signs: Vec<f64> = g
                    .incident_bonds(v)
                    .expect("assignment matches graph")
                    .iter()
                    .map(|b| if b.is_forward() { 1.0 } else { -1.0 })
                    .collect();
                cond.conjugated(&signs)
            })
            .collect();
        Ok(ConditionsAssignment { conditions })
    }

    /// Carries the assignment over to a subdivided graph; new vertices get
    /// Kirchhoff conditions.
    pub fn subdivided(&self, old: &MetricGraph, new: &MetricGraph, sub: &Subdivision) -> Result<Self> {
        let mut conditions = Vec::with_capacity(new.vertex_count());
        for v in 0..new.vertex_count() {
            if sub.new_vertices.contains(&v) {
                conditions.push(VertexConditions::kirchhoff(new.degree(v)));
                continue;
            }
            let old_bonds = old.incident_bonds(v)?;
            let new_bonds = new.incident_bonds(v)?;
            let perm: Vec<usize> = old_bonds
                .iter()
                .map(|b| {
                    let mapped = sub.bond_map[b.0];
                    new_bonds.binary_search(&mapped).expect("bond map preserves start vertices")
                })
                .collect();
            conditions.push(self.conditions[v].permuted(&perm));
        }
        Self::new(new, conditions)
    }
}
