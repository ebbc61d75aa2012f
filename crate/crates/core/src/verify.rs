//! Invariant suite run by `qgraph verify` on a single graph.

use std::f64::consts::{PI, SQRT_2};

use crate::conditions::ConditionsAssignment;
use crate::error::Result;
use crate::graph::MetricGraph;
use crate::heat::{self, Cutoff, HeatTraceResult};
use crate::index;
use crate::scattering::{self, DEFAULT_K};
use crate::secular;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    /// Records `Err` as a failed check so one broken route does not hide the
    /// others.
    fn run(&mut self, name: &str, f: impl FnOnce() -> Result<(bool, String)>) {
        match f() {
            Ok((passed, detail)) => self.push(name, passed, detail),
            Err(e) => self.push(name, false, e.to_string()),
        }
    }
}

const HEAT_TIMES: [f64; 2] = [0.02, 0.05];

fn spectral_trace(
    g: &MetricGraph,
    spec: &secular::SpectralData,
    constant: f64,
    t: f64,
) -> Result<HeatTraceResult> {
    let trace = heat::spectral_heat_trace(spec, g.total_length(), t)?;
    Ok(HeatTraceResult::from_spectral(g, &trace, constant))
}

pub fn verify(g: &MetricGraph, a: &ConditionsAssignment) -> VerifyReport {
    let mut report = VerifyReport::default();
    let invalid: Vec<String> = a
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.validate().passed())
        .map(|(v, _)| g.vertex_id(v).to_string())
        .collect();
    report.push("conditions_valid", invalid.is_empty(), invalid.join(" "));

    for k in [0.5, 1.0, SQRT_2] {
        report.run(&format!("unitarity(k={k})"), || {
            let s = scattering::global_s(g, a, k)?;
            let r = scattering::unitarity_residual(&s.matrix);
            Ok((r < 1e-11, format!("{r:e}")))
        });
    }
    report.run("classifier_consistent", || {
        let r = scattering::classify_scale_invariance(a)?;
        Ok((r.consistent(), format!("scale invariant: {:?}", r.scale_invariant())))
    });
    report.run("incidence_index", || {
        let i = index::incidence_index(g)?;
        Ok((i == g.edge_count() as i64 - g.vertex_count() as i64, i.to_string()))
    });

    if a.is_scale_invariant() {
        scale_invariant_checks(g, a, &mut report);
    } else {
        robin_checks(g, a, &mut report);
    }
    report
}

fn scale_invariant_checks(g: &MetricGraph, a: &ConditionsAssignment, report: &mut VerifyReport) {
    let s = match scattering::global_s(g, a, DEFAULT_K) {
        Ok(s) => s,
        Err(e) => return report.push("scattering", false, e.to_string()),
    };
    let r = scattering::vertex_involution_residual(&s.matrix);
    report.push("vertex_involution", r < 1e-11, format!("{r:e}"));
    let trace = scattering::reversal_trace(&s.matrix);
    let expected = 2.0 * (g.edge_count() as f64 - a.dirichlet_count() as f64);
    report.push(
        "reflection_trace=2(E-p)",
        (trace.re - expected).abs() < 1e-9 && trace.im.abs() < 1e-12,
        format!("{trace} vs {expected}"),
    );
    report.run("dual_sign_flip", || Ok((scattering::dual_sign_check(g, a)?, String::new())));

    let k_max = heat::required_kmax(HEAT_TIMES[0]);
    let spec = match secular::spectral_data(g, a, k_max, 1e-10) {
        Ok(spec) => spec,
        Err(e) => return report.push("spectrum", false, e.to_string()),
    };
    report.run("roots_are_zeros", || {
        let mut worst: f64 = 0.0;
        let mut multiplicity_ok = true;
        for r in &spec.roots {
            worst = worst.max(secular::secular_function(g, a, r.k)?.norm());
            multiplicity_ok &= secular::unit_eigenvalue_count(&secular::secular_matrix(g, a, r.k)?) == r.multiplicity;
        }
        Ok((worst < 1e-8 && multiplicity_ok, format!("max |f(k_n)| = {worst:e}")))
    });
    let count = spec.count_up_to(k_max) as f64;
    let weyl = g.total_length() * k_max / PI;
    report.push(
        "weyl_count",
        (count - weyl).abs() <= 2.0 * g.edge_count() as f64 + 2.0,
        format!("{count} roots vs {weyl:.3}"),
    );
    let (n0, nd, nt) = (spec.n0, spec.n0_dual.unwrap_or(0), spec.ntilde.unwrap_or(usize::MAX));
    report.push("ntilde=N0+N0*", nt == n0 + nd, format!("{nt} vs {n0}+{nd}"));

    let constant = heat::constant_term_from_s(&s);
    for t in HEAT_TIMES {
        report.run(&format!("heat_routes_agree(t={t})"), || {
            let paths = heat::path_sum_heat_trace(g, &s, t, Cutoff::Auto)?;
            let spectral = spectral_trace(g, &spec, constant.clone()?, t)?;
            let diff = (paths.total - spectral.total).abs();
            Ok((diff < 1e-6, format!("{diff:e}")))
        });
    }
    report.run("constant_isolated", || {
        // Every closed walk that is not a bare bounce is at least this long.
        let shortest = g.min_edge_length();
        let t = shortest * shortest / (4.0 * 30.0);
        let r = heat::path_sum_heat_trace(g, &s, t, Cutoff::Auto)?;
        Ok((r.orbit_sum.abs() < 1e-9, format!("orbit sum {:e} at t = {t:e}", r.orbit_sum)))
    });

    match index::full_index_report(g, a, index::DEFAULT_T_REF) {
        Ok(r) => {
            for v in r.verdicts {
                report.push(format!("index:{}", v.name), v.passed, v.detail);
            }
        }
        Err(e) => report.push("index", false, e.to_string()),
    }

    report.run("subdivision_invariance", || {
        let (g2, sub) = g.insert_degree2_vertex(0, 0.5 * g.edge(0).length)?;
        let a2 = a.subdivided(g, &g2, &sub)?;
        let first: Vec<_> = spec.roots.iter().take(20).collect();
        let k_cut = first.last().map_or(1.0, |r| r.k + 0.5);
        let roots2 = secular::find_spectrum(&g2, &a2, k_cut.min(k_max), 1e-10)?;
        let same_roots = roots2.len() >= first.len()
            && first.iter().zip(&roots2).all(|(x, y)| (x.k - y.k).abs() < 1e-8 && x.multiplicity == y.multiplicity);
        let s2 = scattering::global_s(&g2, &a2, DEFAULT_K)?;
        let h1 = heat::path_sum_heat_trace(g, &s, HEAT_TIMES[0], Cutoff::Auto)?.total;
        let h2 = heat::path_sum_heat_trace(&g2, &s2, HEAT_TIMES[0], Cutoff::Auto)?.total;
        let same_chi = g.euler_characteristic() == g2.euler_characteristic();
        Ok((same_roots && (h1 - h2).abs() < 1e-8 && same_chi, format!("heat difference {:e}", (h1 - h2).abs())))
    });
}

fn robin_checks(g: &MetricGraph, a: &ConditionsAssignment, report: &mut VerifyReport) {
    report.push("robin_warning", true, "negative eigenvalues are assumed absent");
    report.run("roots_are_zeros", || {
        let spec = secular::spectral_data(g, a, 20.0, 1e-10)?;
        let mut worst: f64 = 0.0;
        for r in &spec.roots {
            let u = secular::secular_matrix(g, a, r.k)?;
            let d = crate::linalg::eigenvalues(&u)
                .iter()
                .map(|z| (z - num_complex::Complex64::new(1.0, 0.0)).norm())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
        Ok((worst < secular::MULTIPLICITY_WINDOW, format!("{} roots, max distance {worst:e}", spec.roots.len())))
    });
}
