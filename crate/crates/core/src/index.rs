//! The index `dim ker A - dim ker A^*` computed by every available route and
//! cross-checked.

use crate::conditions::{ConditionsAssignment, Preset};
use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::heat::{self, Cutoff};
use crate::linalg::{self, c, CMatrix};
use crate::scattering::{self, DEFAULT_K};
use crate::secular;

pub const DEFAULT_T_REF: f64 = 0.02;

/// `E - p`, with `p` the total rank of the Dirichlet projectors.
pub fn index_formula(g: &MetricGraph, a: &ConditionsAssignment) -> i64 {
    g.edge_count() as i64 - a.dirichlet_count() as i64
}

/// `mE - p` for an order-`m` operator with `p` independent conditions.
pub fn index_general_order(m: u32, e: usize, p: usize) -> i64 {
    m as i64 * e as i64 - p as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleCounts {
    /// `V - E`
    pub euler: i64,
    pub components: usize,
    /// Kernel of the Kirchhoff Laplacian: one constant per component.
    pub kirchhoff_kernel: usize,
    /// Kernel of the anti-Kirchhoff (1-form) Laplacian, `E - V + C`.
    pub anti_kirchhoff_kernel: usize,
    /// `E - V + 1`, for connected graphs only.
    pub fundamental_group_rank: Option<usize>,
}

pub fn euler_and_cycles(g: &MetricGraph) -> CycleCounts {
    let (components, _) = g.connected_components();
    let cycles = g.edge_count() + components - g.vertex_count();
    CycleCounts {
        euler: g.euler_characteristic(),
        components,
        kirchhoff_kernel: components,
        anti_kirchhoff_kernel: cycles,
        fundamental_group_rank: (components == 1).then_some(cycles),
    }
}

/// Index of the incidence matrix as a map `C^E -> C^V`, from its rank.
pub fn incidence_index(g: &MetricGraph) -> Result<i64> {
    let rows = g.incidence_matrix();
    let (v, e) = (g.vertex_count(), g.edge_count());
    let m = CMatrix::from_fn(v, e, |i, j| c(rows[i][j] as f64));
    let rank = linalg::rank(&m) as i64;
    let index = (e as i64 - rank) - (v as i64 - rank);
    if index != e as i64 - v as i64 {
        return Err(Error::Inconsistent(format!("incidence index {index} differs from E - V")));
    }
    Ok(index)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Every route to the index. Fields are `None` when their route failed; the
/// failure then shows up as a failed verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexReport {
    pub e: usize,
    pub p: usize,
    pub index_formula: i64,
    pub index_kernels: Option<i64>,
    pub index_strace: Option<f64>,
    pub index_heat: Option<f64>,
    pub euler: i64,
    pub n0: Option<usize>,
    pub n0_dual: Option<usize>,
    pub ntilde: Option<usize>,
    pub t_ref: f64,
    pub verdicts: Vec<Verdict>,
}

impl IndexReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

fn verdict(name: &'static str, passed: bool, detail: String) -> Verdict {
    Verdict { name, passed, detail }
}

fn failed<T>(name: &'static str, r: &Result<T>) -> Option<Verdict> {
    r.as_ref().err().map(|e| verdict(name, false, e.to_string()))
}

fn heat_difference(g: &MetricGraph, a: &ConditionsAssignment, t: f64) -> Result<f64> {
    let s = scattering::global_s(g, a, DEFAULT_K)?;
    let s_dual = scattering::global_s(g, &a.one_form_dual(g)?, DEFAULT_K)?;
    let h = heat::path_sum_heat_trace(g, &s, t, Cutoff::Auto)?;
    let d = heat::path_sum_heat_trace(g, &s_dual, t, Cutoff::Auto)?;
    Ok(h.total - d.total)
}

/// Computes the index from the counting formula, the kernel dimensions, the
/// reflection trace of `S`, and the difference of the two heat traces at
/// `t_ref`, together with N0, N0* and Ntilde, and checks them against each
/// other.
pub fn full_index_report(g: &MetricGraph, a: &ConditionsAssignment, t_ref: f64) -> Result<IndexReport> {
    if !a.is_scale_invariant() {
        return Err(Error::NotScaleInvariant);
    }
    if !(t_ref > 0.0 && t_ref.is_finite()) {
        return Err(Error::InvalidTime(t_ref));
    }
    let formula = index_formula(g, a);
    let mut verdicts = Vec::new();

    let n0 = secular::kernel_dim(g, a);
    let n0_dual = secular::kernel_dim_dual(g, a);
    let ntilde = secular::algebraic_multiplicity_zero(g, a);
    let s = scattering::global_s(g, a, DEFAULT_K);
    let strace = s.as_ref().map_err(Clone::clone).and_then(|s| Ok(2.0 * heat::constant_term_from_s(s)?));
    let heat = heat_difference(g, a, t_ref);
    let kernels = match (&n0, &n0_dual) {
        (Ok(n), Ok(d)) => Ok(*n as i64 - *d as i64),
        (Err(e), _) | (_, Err(e)) => Err(e.clone()),
    };

    verdicts.extend(failed("kernels", &kernels));
    if let Ok(k) = kernels {
        verdicts.push(verdict("formula=kernels", k == formula, format!("{formula} vs {k}")));
    }
    verdicts.extend(failed("strace", &strace));
    if let Ok(x) = strace {
        verdicts.push(verdict("strace=formula", (x - formula as f64).abs() < 1e-9, format!("{x:.12}")));
    }
    verdicts.extend(failed("heat", &heat));
    if let Ok(x) = heat {
        verdicts.push(verdict("heat=formula", (x - formula as f64).abs() < 1e-6, format!("{x:.12}")));
    }
    verdicts.extend(failed("ntilde", &ntilde));
    if let (Ok(nt), Ok(n), Ok(d)) = (&ntilde, &n0, &n0_dual) {
        let (nt, n, d) = (*nt as i64, *n as i64, *d as i64);
        verdicts.push(verdict("ntilde=2N0-index", nt == 2 * n - formula, format!("{nt} vs {}", 2 * n - formula)));
        verdicts.push(verdict("ntilde=N0+N0*", nt == n + d, format!("{nt} vs {}", n + d)));
    }
    if let (Ok(s), Ok(nt)) = (&s, &ntilde) {
        let dim = secular::unit_eigenspace_dim(&s.matrix);
        verdicts.push(verdict("ntilde=dim ker(S-I)", dim == *nt, format!("{nt} vs {dim}")));
    }
    if a.is_all(Preset::Kirchhoff) {
        if let Ok(x) = strace {
            let half_chi = 0.5 * g.euler_characteristic() as f64;
            verdicts.push(verdict("kirchhoff_constant=chi/2", (0.5 * x - half_chi).abs() < 1e-9, format!("{}", 0.5 * x)));
        }
    }

    Ok(IndexReport {
        e: g.edge_count(),
        p: a.dirichlet_count(),
        index_formula: formula,
        index_kernels: kernels.ok(),
        index_strace: strace.ok(),
        index_heat: heat.ok(),
        euler: g.euler_characteristic(),
        n0: n0.ok(),
        n0_dual: n0_dual.ok(),
        ntilde: ntilde.ok(),
        t_ref,
        verdicts,
    })
}
