//! Heat trace `Tr exp(-tH)` from the spectrum and from a sum over closed
//! walks weighted by scattering amplitudes (method of images).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::conditions::ConditionsAssignment;
use crate::error::{Error, Result};
use crate::graph::{Bond, MetricGraph};
use crate::scattering::{self, ScatteringMatrix, DEFAULT_K};
use crate::secular::SpectralData;

/// Relative size of the largest neglected spectral term.
pub const SPECTRAL_EPSILON: f64 = 1e-14;
/// Target of the automatic path-length cutoff.
pub const AUTO_CUTOFF_TARGET: f64 = 1e-10;
pub const DEFAULT_CLASS_LIMIT: usize = 10_000_000;
/// Walks whose amplitude falls below this are dropped.
const AMPLITUDE_FLOOR: f64 = 1e-14;

/// Free heat kernel on the line, `exp(-x^2 / 4t) / sqrt(4 pi t)`.
pub fn k0(t: f64, x: f64) -> f64 {
    (-x * x / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
}

pub fn weyl_term(g: &MetricGraph, t: f64) -> f64 {
    g.total_length() / (4.0 * PI * t).sqrt()
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidTime(t))
    }
}

/// Smallest `k_max` for which the spectral sum at time `t` is complete to
/// `SPECTRAL_EPSILON`.
pub fn required_kmax(t: f64) -> f64 {
    (-SPECTRAL_EPSILON.ln() / t).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralTrace {
    pub t: f64,
    pub value: f64,
    /// `(L / sqrt(4 pi t)) erfc(k_max sqrt t)`, the Weyl estimate of the
    /// omitted tail.
    pub tail_bound: f64,
}

/// `N0 + sum_n mult_n exp(-k_n^2 t)`.
pub fn spectral_heat_trace(spec: &SpectralData, total_length: f64, t: f64) -> Result<SpectralTrace> {
    check_time(t)?;
    let need = required_kmax(t);
    if spec.k_max < need {
        return Err(Error::InsufficientKmax { have: spec.k_max, need, t });
    }
    let sum: f64 = spec.roots.iter().map(|r| r.multiplicity as f64 * (-r.k * r.k * t).exp()).sum();
    Ok(SpectralTrace {
        t,
        value: spec.n0 as f64 + sum,
        tail_bound: total_length / (4.0 * PI * t).sqrt() * libm::erfc(spec.k_max * t.sqrt()),
    })
}

fn require_k_independent(s: &ScatteringMatrix) -> Result<()> {
    if s.is_k_independent() {
        Ok(())
    } else {
        Err(Error::NotScaleInvariant)
    }
}

/// `(1/4) sum_alpha S[alpha, rev(alpha)]`, the t-independent term of the
/// heat trace.
pub fn constant_term_from_s(s: &ScatteringMatrix) -> Result<f64> {
    require_k_independent(s)?;
    let sum = scattering::reversal_trace(&s.matrix) / 4.0;
    if sum.im.abs() >= 1e-12 {
        return Err(Error::Inconsistent(format!("constant term has imaginary part {}", sum.im)));
    }
    Ok(sum.re)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkKind {
    /// Re-enters the base edge in the direction it left.
    Periodic,
    /// Comes back against the direction it left, after reflecting somewhere.
    Bounce,
}

/// A closed walk from a point of `base_edge` back to itself: leave along
/// `exit` (one of the two bonds of the base edge), traverse `intermediate`,
/// and come back along `entry`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkClass {
    pub base_edge: usize,
    pub exit: Bond,
    pub entry: Bond,
    pub intermediate: Vec<Bond>,
    pub amplitude: Complex64,
    /// Total length of the intermediate bonds.
    pub c: f64,
    pub kind: WalkKind,
}

impl WalkClass {
    /// Length of the shortest closed path in the class.
    pub fn min_length(&self, base_length: f64) -> f64 {
        match self.kind {
            WalkKind::Periodic => base_length + self.c,
            WalkKind::Bounce => self.c,
        }
    }

    /// Integral over the base edge of the class's diagonal heat kernel.
    pub fn contribution(&self, base_length: f64, t: f64) -> Complex64 {
        self.amplitude * class_weight(self.kind, base_length, self.c, t)
    }
}

fn class_weight(kind: WalkKind, l: f64, c: f64, t: f64) -> f64 {
    match kind {
        WalkKind::Periodic => l * k0(t, l + c),
        WalkKind::Bounce => {
            // (1/2) int_c^{c+2L} K0(t, u) du
            let s = (4.0 * t).sqrt();
            0.25 * (libm::erfc(c / s) - libm::erfc((c + 2.0 * l) / s))
        }
    }
}

struct Walker<'a, F: FnMut(&WalkClass)> {
    g: &'a MetricGraph,
    s: &'a ScatteringMatrix,
    cutoff: f64,
    limit: usize,
    classes: usize,
    /// Extensions rejected only because of the cutoff.
    frontier: usize,
    visit: F,
}

impl<F: FnMut(&WalkClass)> Walker<'_, F> {
    fn run(&mut self) -> Result<()> {
        for e in 0..self.g.edge_count() {
            for exit in [Bond::forward(e), Bond::backward(e)] {
                let mut path = Vec::new();
                self.extend(e, exit, exit, &mut path, Complex64::new(1.0, 0.0), 0.0)?;
            }
        }
        Ok(())
    }

    /// `current` has just arrived at its end vertex.
    fn extend(
        &mut self,
        base: usize,
        exit: Bond,
        current: Bond,
        path: &mut Vec<Bond>,
        amplitude: Complex64,
        c: f64,
    ) -> Result<()> {
        let g = self.g;
        let l = g.edge(base).length;
        let v = g.bond_end(current);
        for &next in g.incident_bonds(v)? {
            let a = amplitude * self.s.get(next, current);
            if a.norm() < AMPLITUDE_FLOOR {
                continue;
            }
            if next.edge() == base {
                let kind = if next == exit { WalkKind::Periodic } else { WalkKind::Bounce };
                let min_length = if kind == WalkKind::Periodic { l + c } else { c };
                if min_length <= self.cutoff {
                    self.classes += 1;
                    if self.classes > self.limit {
                        return Err(Error::TooManyWalks { limit: self.limit });
                    }
                    let class = WalkClass {
                        base_edge: base,
                        exit,
                        entry: next,
                        intermediate: path.clone(),
                        amplitude: a,
                        c,
                        kind,
                    };
                    (self.visit)(&class);
                } else {
                    self.frontier += 1;
                }
            }
            let c_next = c + g.bond_length(next);
            if c_next <= self.cutoff {
                path.push(next);
                self.extend(base, exit, next, path, a, c_next)?;
                path.pop();
            } else {
                self.frontier += 1;
            }
        }
        Ok(())
    }
}

fn positive_cutoff(cutoff: f64) -> Result<()> {
    if cutoff > 0.0 && cutoff.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConditions(format!("length cutoff must be positive, got {cutoff}")))
    }
}

/// Every walk class with minimal closed length at most `cutoff` on the given
/// base edge, in depth-first order.
pub fn enumerate_walks(g: &MetricGraph, s: &ScatteringMatrix, base_edge: usize, cutoff: f64) -> Result<Vec<WalkClass>> {
    positive_cutoff(cutoff)?;
    if base_edge >= g.edge_count() {
        return Err(Error::UnknownEdge(base_edge));
    }
    let mut out = Vec::new();
    let mut walker = Walker {
        g,
        s,
        cutoff,
        limit: DEFAULT_CLASS_LIMIT,
        classes: 0,
        frontier: 0,
        visit: |w: &WalkClass| out.push(w.clone()),
    };
    for exit in [Bond::forward(base_edge), Bond::backward(base_edge)] {
        walker.extend(base_edge, exit, exit, &mut Vec::new(), Complex64::new(1.0, 0.0), 0.0)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cutoff {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSumOptions {
    pub cutoff: Cutoff,
    /// Largest acceptable truncation bound.
    pub tolerance: f64,
    pub class_limit: usize,
}

impl Default for PathSumOptions {
    fn default() -> Self {
        PathSumOptions { cutoff: Cutoff::Auto, tolerance: 1e-8, class_limit: DEFAULT_CLASS_LIMIT }
    }
}

impl PathSumOptions {
    pub fn with_cutoff(cutoff: Cutoff) -> Self {
        PathSumOptions { cutoff, ..Default::default() }
    }
}

/// Smallest `Lambda` with `K0(t, Lambda) L_total d_max^(Lambda / l_min)`
/// below `AUTO_CUTOFF_TARGET`; the log of the left side is a downward
/// parabola in `Lambda`, so this is its larger root.
pub fn auto_cutoff(g: &MetricGraph, t: f64) -> f64 {
    let growth = (g.max_degree() as f64).ln() / g.min_edge_length();
    let offset = (g.total_length() / (4.0 * PI * t).sqrt()).ln() - AUTO_CUTOFF_TARGET.ln();
    let disc = growth * growth + offset.max(0.0) / t;
    (2.0 * t * (growth + disc.sqrt())).max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatTraceResult {
    pub t: f64,
    pub total: f64,
    pub weyl: f64,
    pub constant: f64,
    /// `total - weyl - constant`.
    pub orbit_sum: f64,
    pub truncation_bound: f64,
}

impl HeatTraceResult {
    fn assemble(t: f64, total: f64, weyl: f64, constant: f64, truncation_bound: f64) -> Self {
        HeatTraceResult { t, total, weyl, constant, orbit_sum: total - weyl - constant, truncation_bound }
    }

    /// Splits a spectral trace with the given constant term.
    pub fn from_spectral(g: &MetricGraph, trace: &SpectralTrace, constant: f64) -> Self {
        Self::assemble(trace.t, trace.value, weyl_term(g, trace.t), constant, trace.tail_bound)
    }
}

/// Path-sum result with the periodic and bounce parts kept apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSum {
    pub result: HeatTraceResult,
    pub cutoff: f64,
    pub periodic: f64,
    pub bounce: f64,
    pub classes: usize,
}

/// Heat trace as `L_total K0(t, 0)` plus the contributions of all walk
/// classes up to the cutoff.
pub fn path_sum(g: &MetricGraph, s: &ScatteringMatrix, t: f64, options: &PathSumOptions) -> Result<PathSum> {
    check_time(t)?;
    require_k_independent(s)?;
    let cutoff = match options.cutoff {
        Cutoff::Auto => auto_cutoff(g, t),
        Cutoff::Fixed(c) => c,
    };
    positive_cutoff(cutoff)?;
    let mut periodic = Complex64::new(0.0, 0.0);
    let mut bounce = Complex64::new(0.0, 0.0);
    let mut walker = Walker {
        g,
        s,
        cutoff,
        limit: options.class_limit,
        classes: 0,
        frontier: 0,
        visit: |w: &WalkClass| {
            let value = w.contribution(g.edge(w.base_edge).length, t);
            match w.kind {
                WalkKind::Periodic => periodic += value,
                WalkKind::Bounce => bounce += value,
            }
        },
    };
    walker.run()?;
    let (classes, frontier) = (walker.classes, walker.frontier);
    let bound = frontier as f64 * k0(t, cutoff) * g.total_length();
    if bound > options.tolerance {
        return Err(Error::CutoffTooSmall { cutoff, bound, tolerance: options.tolerance });
    }
    let weyl = weyl_term(g, t);
    let total = weyl + periodic.re + bounce.re;
    let constant = constant_term_from_s(s)?;
    Ok(PathSum {
        result: HeatTraceResult::assemble(t, total, weyl, constant, bound),
        cutoff,
        periodic: periodic.re,
        bounce: bounce.re,
        classes,
    })
}

pub fn path_sum_heat_trace(g: &MetricGraph, s: &ScatteringMatrix, t: f64, cutoff: Cutoff) -> Result<HeatTraceResult> {
    Ok(path_sum(g, s, t, &PathSumOptions::with_cutoff(cutoff))?.result)
}

/// Times at which the difference of the two traces is compared.
pub const TWO_TRACE_TIMES: [f64; 3] = [0.01, 0.02, 0.05];

/// `Tr exp(-t A^*A) - Tr exp(-t A A^*)` by path sums. The second operator is
/// the dual acting on 1-forms (swapped projectors, conjugated by the edge
/// orientation signs); its periodic walks carry the same amplitudes as those
/// of `H`, so only the constant terms survive in the difference.
///
/// Also checks that the difference does not move over `TWO_TRACE_TIMES`
/// (1e-6) and equals twice the constant term (1e-8).
pub fn index_via_two_traces(g: &MetricGraph, a: &ConditionsAssignment, t: f64) -> Result<f64> {
    let s = scattering::global_s(g, a, DEFAULT_K)?;
    let s_dual = scattering::global_s(g, &a.one_form_dual(g)?, DEFAULT_K)?;
    let difference = |t: f64| -> Result<f64> {
        let h = path_sum_heat_trace(g, &s, t, Cutoff::Auto)?;
        let d = path_sum_heat_trace(g, &s_dual, t, Cutoff::Auto)?;
        Ok(h.total - d.total)
    };
    let value = difference(t)?;
    for &reference in &TWO_TRACE_TIMES {
        let other = difference(reference)?;
        if (other - value).abs() > 1e-6 {
            return Err(Error::Inconsistent(format!(
                "trace difference {value} at t = {t} but {other} at t = {reference}"
            )));
        }
    }
    let constant = constant_term_from_s(&s)?;
    if (value - 2.0 * constant).abs() > 1e-8 {
        return Err(Error::Inconsistent(format!("trace difference {value} is not twice the constant term {constant}")));
    }
    Ok(value)
}
