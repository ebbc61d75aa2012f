//! Spectrum from the secular determinant `f(k) = det(U(k) - I)` with
//! `U(k) = D(k) S(k)`, `D = diag(exp(i k L_alpha))`, plus the zero-mode counts
//! N0, N0* and the order of the zero of `f` at the origin.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::conditions::ConditionsAssignment;
use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::linalg::{self, c, CMatrix};
use crate::scattering::{self, DEFAULT_K};

/// Roots at or below this value are zero modes and never come from the scan.
pub const ROOT_TOLERANCE: f64 = 1e-6;

/// Eigenvalues of `U` closer than this to 1 count towards a root's multiplicity.
pub const MULTIPLICITY_WINDOW: f64 = 1e-6;

const WINDING_MAX_NODES: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub k: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    /// Positive roots in `(ROOT_TOLERANCE, k_max]`, ascending.
    pub roots: Vec<Root>,
    pub n0: usize,
    /// Only defined for scale-invariant conditions.
    pub n0_dual: Option<usize>,
    pub ntilde: Option<usize>,
    pub k_max: f64,
    pub warnings: Vec<String>,
}

impl SpectralData {
    /// Positive eigenvalues `k_n^2`, repeated by multiplicity.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.roots.iter().flat_map(|r| std::iter::repeat_n(r.k * r.k, r.multiplicity)).collect()
    }

    /// Number of positive roots in `(0, k]` counted with multiplicity.
    pub fn count_up_to(&self, k: f64) -> usize {
        self.roots.iter().filter(|r| r.k <= k).map(|r| r.multiplicity).sum()
    }
}

fn bond_lengths(g: &MetricGraph) -> Vec<f64> {
    g.bonds().map(|b| g.bond_length(b)).collect()
}

/// `D(k) S` for a fixed matrix `S` and complex `k`.
pub fn propagate(lengths: &[f64], s: &CMatrix, k: Complex64) -> CMatrix {
    let mut u = s.clone();
    for (alpha, &l) in lengths.iter().enumerate() {
        let phase = (Complex64::i() * k * l).exp();
        let mut row = u.row_mut(alpha);
        row *= phase;
    }
    u
}

pub fn secular_matrix(g: &MetricGraph, a: &ConditionsAssignment, k: f64) -> Result<CMatrix> {
    let s = scattering::global_s(g, a, k)?;
    Ok(propagate(&bond_lengths(g), &s.matrix, c(k)))
}

pub fn secular_function(g: &MetricGraph, a: &ConditionsAssignment, k: f64) -> Result<Complex64> {
    let u = secular_matrix(g, a, k)?;
    let n = u.nrows();
    Ok(linalg::determinant(&(u - linalg::identity(n))))
}

/// Number of eigenvalues of a unitary matrix within `MULTIPLICITY_WINDOW` of 1.
pub fn unit_eigenvalue_count(u: &CMatrix) -> usize {
    linalg::eigenvalues(u).iter().filter(|z| (*z - c(1.0)).norm() < MULTIPLICITY_WINDOW).count()
}

/// Counts roots of `det(D(k)S - I)` for k-independent `S`.
///
/// Each eigenphase of `U(k)` increases strictly with k and their sum grows
/// exactly like `2 L_total k`, so the number of eigenphase crossings of
/// `0 mod 2pi` in `(k_ref, k]` is
/// `(2 L_total (k - k_ref) + sum mod(theta(k_ref)) - sum mod(theta(k))) / 2pi`.
struct CrossingCounter<'a> {
    s: &'a CMatrix,
    lengths: Vec<f64>,
    total_bond_length: f64,
    k_ref: f64,
    base: f64,
}

impl<'a> CrossingCounter<'a> {
    fn new(g: &MetricGraph, s: &'a CMatrix, k_ref: f64) -> Self {
        let lengths = bond_lengths(g);
        let total_bond_length = lengths.iter().sum();
        let mut counter = CrossingCounter { s, lengths, total_bond_length, k_ref, base: 0.0 };
        counter.base = counter.phase_sum(k_ref);
        counter
    }

    fn phase_sum(&self, k: f64) -> f64 {
        let u = propagate(&self.lengths, self.s, c(k));
        linalg::eigenvalues(&u).into_iter().map(linalg::phase_0_2pi).sum()
    }

    /// `f(k) e^{-i Phi(k)/2} (2i)^{-n}` with `Phi` the continuous phase of
    /// `det U`; equals `prod_j sin(theta_j / 2)`, a real function whose sign
    /// flips at every simple root.
    fn real_secular(&self, k: f64) -> f64 {
        let u = propagate(&self.lengths, self.s, c(k));
        let n = u.nrows();
        let f = linalg::determinant(&(u - linalg::identity(n)));
        let phi = self.base + self.total_bond_length * (k - self.k_ref);
        let norm = Complex64::from_polar(1.0, -0.5 * phi) * Complex64::new(0.0, 2.0).powi(-(n as i32));
        (f * norm).re
    }

    fn count(&self, k: f64) -> Result<i64> {
        let w = (self.total_bond_length * (k - self.k_ref) + self.base - self.phase_sum(k)) / TAU;
        let rounded = w.round();
        if (w - rounded).abs() > 0.25 {
            return Err(Error::RootCounting { k, reason: format!("crossing count {w} is not close to an integer") });
        }
        Ok(rounded as i64)
    }
}

fn check_search(k_max: f64, tol: f64) -> Result<()> {
    if !(k_max > 0.0 && k_max.is_finite()) {
        return Err(Error::InvalidKmax(k_max));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidTolerance(tol));
    }
    Ok(())
}

/// Positive roots of the secular determinant in `(ROOT_TOLERANCE, k_max]`.
///
/// For scale-invariant conditions roots are bracketed on a grid of step
/// `pi / (4 L_total)` and bisected with exact crossing counts, so
/// multiplicities come out as counts. Otherwise local minima of
/// `min_j |mu_j(k) - 1|` over the eigenvalues `mu_j` of `U(k)` are refined by
/// golden-section search.
pub fn find_spectrum(g: &MetricGraph, a: &ConditionsAssignment, k_max: f64, tol: f64) -> Result<Vec<Root>> {
    check_search(k_max, tol)?;
    if k_max <= ROOT_TOLERANCE {
        return Ok(Vec::new());
    }
    if a.is_scale_invariant() {
        let s = scattering::global_s(g, a, DEFAULT_K)?;
        scale_invariant_roots(g, &s.matrix, k_max, tol)
    } else {
        robin_roots(g, a, k_max, tol)
    }
}

fn grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step).ceil().max(1.0) as usize;
    (0..=n).map(|i| if i == n { end } else { start + (end - start) * i as f64 / n as f64 }).collect()
}

fn merge_roots(mut leaves: Vec<Root>, window: f64) -> Vec<Root> {
    leaves.sort_by(|a, b| a.k.total_cmp(&b.k));
    let mut merged: Vec<(Root, f64)> = Vec::new();
    for leaf in leaves {
        match merged.last_mut() {
            Some((root, weighted)) if leaf.k - root.k <= window => {
                *weighted += leaf.k * leaf.multiplicity as f64;
                root.multiplicity += leaf.multiplicity;
                root.k = *weighted / root.multiplicity as f64;
            }
            _ => merged.push((leaf, leaf.k * leaf.multiplicity as f64)),
        }
    }
    merged.into_iter().map(|(r, _)| r).collect()
}

fn scale_invariant_roots(g: &MetricGraph, s: &CMatrix, k_max: f64, tol: f64) -> Result<Vec<Root>> {
    let counter = CrossingCounter::new(g, s, ROOT_TOLERANCE);
    let points = grid(ROOT_TOLERANCE, k_max, PI / (4.0 * g.total_length()));
    let width = (tol * 1e-2).max(8.0 * f64::EPSILON * k_max);
    let mut leaves = Vec::new();
    let mut w_prev = 0;
    for pair in points.windows(2) {
        let w_next = counter.count(pair[1])?;
        if w_next < w_prev {
            return Err(Error::RootCounting { k: pair[1], reason: "crossing count decreased".into() });
        }
        bisect(&counter, pair[0], pair[1], w_prev, w_next, width, &mut leaves)?;
        w_prev = w_next;
    }
    Ok(merge_roots(leaves, 10.0 * tol))
}

fn bisect(
    counter: &CrossingCounter,
    lo: f64,
    hi: f64,
    w_lo: i64,
    w_hi: i64,
    width: f64,
    out: &mut Vec<Root>,
) -> Result<()> {
    if w_hi == w_lo {
        return Ok(());
    }
    let mid = 0.5 * (lo + hi);
    if hi - lo <= width || mid <= lo || mid >= hi {
        out.push(Root { k: mid, multiplicity: (w_hi - w_lo) as usize });
        return Ok(());
    }
    if w_hi - w_lo == 1 {
        out.push(Root { k: sign_bisect(counter, lo, hi, width), multiplicity: 1 });
        return Ok(());
    }
    // Clamping keeps the bracket total exact when rounding noise at a
    // nearly degenerate crossing disagrees with the endpoints.
    let w_mid = counter.count(mid)?.clamp(w_lo, w_hi);
    bisect(counter, lo, mid, w_lo, w_mid, width, out)?;
    bisect(counter, mid, hi, w_mid, w_hi, width, out)
}

/// Bracket holding exactly one simple crossing: bisect on the sign of the
/// real secular function, which needs a determinant rather than a Schur form.
fn sign_bisect(counter: &CrossingCounter, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    let mut z_lo = counter.real_secular(lo);
    let z_hi = counter.real_secular(hi);
    if z_lo == 0.0 {
        return lo;
    }
    if z_hi == 0.0 {
        return hi;
    }
    if z_lo.signum() == z_hi.signum() {
        // Endpoint values lost to rounding; fall back to the midpoint.
        return 0.5 * (lo + hi);
    }
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let z = counter.real_secular(mid);
        if z == 0.0 {
            return mid;
        }
        if z.signum() == z_lo.signum() {
            lo = mid;
            z_lo = z;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn distance_to_one(g: &MetricGraph, a: &ConditionsAssignment, k: f64) -> Result<f64> {
    let u = secular_matrix(g, a, k)?;
    Ok(linalg::eigenvalues(&u).iter().map(|z| (*z - c(1.0)).norm()).fold(f64::INFINITY, f64::min))
}

fn golden_section(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2)?;
        }
        if x1 <= lo || x2 >= hi {
            break;
        }
    }
    let k = 0.5 * (lo + hi);
    Ok((k, f(k)?))
}

fn robin_roots(g: &MetricGraph, a: &ConditionsAssignment, k_max: f64, tol: f64) -> Result<Vec<Root>> {
    let points = grid(ROOT_TOLERANCE, k_max, PI / (16.0 * g.total_length()));
    let dist: Vec<f64> = points.iter().map(|&k| distance_to_one(g, a, k)).collect::<Result<_>>()?;
    let mut leaves = Vec::new();
    for i in 0..points.len() {
        let left = if i > 0 { dist[i - 1] } else { f64::INFINITY };
        let right = dist.get(i + 1).copied().unwrap_or(f64::INFINITY);
        if dist[i] > left || dist[i] > right {
            continue;
        }
        let lo = points[i.saturating_sub(1)];
        let hi = points[(i + 1).min(points.len() - 1)];
        let (k, d) = golden_section(|k| distance_to_one(g, a, k), lo, hi, tol)?;
        if d < MULTIPLICITY_WINDOW && k > ROOT_TOLERANCE && k <= k_max {
            let multiplicity = unit_eigenvalue_count(&secular_matrix(g, a, k)?).max(1);
            leaves.push(Root { k, multiplicity });
        }
    }
    // Neighbouring minima refine to the same root; keep one copy.
    leaves.sort_by(|x, y| x.k.total_cmp(&y.k));
    leaves.dedup_by(|x, y| (x.k - y.k).abs() <= 10.0 * tol);
    Ok(leaves)
}

fn require_scale_invariant(a: &ConditionsAssignment) -> Result<()> {
    if a.is_scale_invariant() {
        Ok(())
    } else {
        Err(Error::NotScaleInvariant)
    }
}

/// Rows `M_v` of the map from per-edge constants to the boundary vector
/// `F(v)`; `signed` flips the head end of every edge.
fn edge_constant_map(g: &MetricGraph, v: usize, signed: bool) -> Result<CMatrix> {
    let bonds = g.incident_bonds(v)?;
    let mut m = CMatrix::zeros(bonds.len(), g.edge_count());
    for (j, b) in bonds.iter().enumerate() {
        let sign = if signed && !b.is_forward() { -1.0 } else { 1.0 };
        m[(j, b.edge())] = c(sign);
    }
    Ok(m)
}

fn constant_kernel(g: &MetricGraph, a: &ConditionsAssignment, dual: bool) -> Result<usize> {
    require_scale_invariant(a)?;
    let blocks: Vec<CMatrix> = (0..g.vertex_count())
        .map(|v| {
            let cond = a.get(v);
            let proj = if dual { cond.q() } else { cond.p() };
            Ok(proj * edge_constant_map(g, v, dual)?)
        })
        .collect::<Result<_>>()?;
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut stacked = CMatrix::zeros(rows, g.edge_count());
    let mut r = 0;
    for b in &blocks {
        stacked.view_mut((r, 0), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
    }
    Ok(g.edge_count() - linalg::rank(&stacked))
}

/// N0: edgewise-constant functions with `P_v F(v) = 0` at every vertex.
pub fn kernel_dim(g: &MetricGraph, a: &ConditionsAssignment) -> Result<usize> {
    constant_kernel(g, a, false)
}

/// N0*: edgewise-constant 1-forms with `Q_v F(v) = 0`, where the value seen
/// from the head of an edge carries a minus sign.
pub fn kernel_dim_dual(g: &MetricGraph, a: &ConditionsAssignment) -> Result<usize> {
    constant_kernel(g, a, true)
}

/// Dimension of the space of edgewise-linear functions satisfying
/// `A_v F(v) + B_v F'(v) = 0`; the multiplicity of the eigenvalue 0 for any
/// conditions, Robin included.
pub fn zero_mode_count(g: &MetricGraph, a: &ConditionsAssignment) -> Result<usize> {
    let e = g.edge_count();
    let mut rows = Vec::new();
    for v in 0..g.vertex_count() {
        let bonds = g.incident_bonds(v)?;
        let d = bonds.len();
        let mut values = CMatrix::zeros(d, 2 * e);
        let mut derivs = CMatrix::zeros(d, 2 * e);
        for (j, b) in bonds.iter().enumerate() {
            let i = b.edge();
            if b.is_forward() {
                values[(j, i)] = c(1.0);
                derivs[(j, e + i)] = c(1.0);
            } else {
                values[(j, i)] = c(1.0);
                values[(j, e + i)] = c(g.edge(i).length);
                derivs[(j, e + i)] = c(-1.0);
            }
        }
        let (av, bv) = a.get(v).to_ab();
        rows.push(av * values + bv * derivs);
    }
    let total: usize = rows.iter().map(|m| m.nrows()).sum();
    let mut stacked = CMatrix::zeros(total, 2 * e);
    let mut r = 0;
    for m in &rows {
        stacked.view_mut((r, 0), (m.nrows(), m.ncols())).copy_from(m);
        r += m.nrows();
    }
    Ok(2 * e - linalg::rank(&stacked))
}

/// `dim ker(S - I)`. Every eigenphase at 0 leaves with positive speed, so
/// this equals the order of the zero of `f` at `k = 0`.
pub fn unit_eigenspace_dim(s: &CMatrix) -> usize {
    let n = s.nrows();
    linalg::null_space(&(s - linalg::identity(n))).ncols()
}

/// Smallest root in `(ROOT_TOLERANCE, inf)`, to within a relative 1e-6.
fn first_positive_root(g: &MetricGraph, s: &CMatrix) -> Result<f64> {
    let counter = CrossingCounter::new(g, s, ROOT_TOLERANCE);
    let step = PI / (4.0 * g.total_length());
    // Every eigenphase moves at speed >= shortest edge, so one of them reaches
    // 2pi before this.
    let limit = TAU / g.min_edge_length() + 2.0 * step;
    let mut lo = ROOT_TOLERANCE;
    while lo < limit {
        let hi = lo + step;
        if counter.count(hi)? > 0 {
            let (mut a, mut b) = (lo, hi);
            while b - a > 1e-6 * b {
                let m = 0.5 * (a + b);
                if counter.count(m)? > 0 {
                    b = m;
                } else {
                    a = m;
                }
            }
            return Ok(a);
        }
        lo = hi;
    }
    Err(Error::RootCounting { k: limit, reason: "no positive root found".into() })
}

/// Ntilde: order of the zero of `f` at `k = 0`, as the winding number of `f`
/// around a circle of radius `min(k1/2, 1/2)`. The logarithmic derivative is
/// analytic, `f'/f = tr((U - I)^{-1} i L U)` with `L = diag(L_alpha)`, and
/// the contour integral uses the trapezoid rule with doubling.
pub fn algebraic_multiplicity_zero(g: &MetricGraph, a: &ConditionsAssignment) -> Result<usize> {
    require_scale_invariant(a)?;
    let s = scattering::global_s(g, a, DEFAULT_K)?.matrix;
    let lengths = bond_lengths(g);
    let radius = (0.5 * first_positive_root(g, &s)?).min(0.5);
    let n = s.nrows();
    let log_derivative = |k: Complex64| -> Result<Complex64> {
        let u = propagate(&lengths, &s, k);
        let mut du = u.clone();
        for (alpha, &l) in lengths.iter().enumerate() {
            let mut row = du.row_mut(alpha);
            row *= Complex64::new(0.0, l);
        }
        let inv = (&u - linalg::identity(n))
            .try_inverse()
            .ok_or_else(|| Error::Conditioning(format!("U(k) - I singular at k = {k}")))?;
        Ok((inv * du).trace())
    };
    let mut nodes = 32;
    let mut previous: Option<f64> = None;
    let mut last = f64::NAN;
    while nodes <= WINDING_MAX_NODES {
        let mut sum = c(0.0);
        for j in 0..nodes {
            let k = Complex64::from_polar(radius, TAU * j as f64 / nodes as f64);
            sum += log_derivative(k)? * k;
        }
        let estimate = sum / nodes as f64;
        if !estimate.re.is_finite() {
            return Err(Error::Conditioning(format!("non-finite winding estimate on radius {radius}")));
        }
        last = estimate.re;
        let near_integer = (last - last.round()).abs() < 1e-3 && estimate.im.abs() < 1e-3;
        if near_integer && previous.is_some_and(|p| (p - last).abs() < 1e-8) && last.round() >= 0.0 {
            return Ok(last.round() as usize);
        }
        previous = Some(last);
        nodes *= 2;
    }
    Err(Error::WindingNotInteger(last))
}

/// Roots up to `k_max` and zero-mode data. For conditions with a Robin part
/// only N0 is available and a warning is attached: the real-k scan assumes
/// there are no negative eigenvalues.
pub fn spectral_data(g: &MetricGraph, a: &ConditionsAssignment, k_max: f64, tol: f64) -> Result<SpectralData> {
    let roots = find_spectrum(g, a, k_max, tol)?;
    if a.is_scale_invariant() {
        Ok(SpectralData {
            roots,
            n0: kernel_dim(g, a)?,
            n0_dual: Some(kernel_dim_dual(g, a)?),
            ntilde: Some(algebraic_multiplicity_zero(g, a)?),
            k_max,
            warnings: Vec::new(),
        })
    } else {
        Ok(SpectralData {
            roots,
            n0: zero_mode_count(g, a)?,
            n0_dual: None,
            ntilde: None,
            k_max,
            warnings: vec![
                "conditions have a Robin part: only real k > 0 is scanned, negative eigenvalues are assumed absent".into(),
            ],
        })
    }
}
