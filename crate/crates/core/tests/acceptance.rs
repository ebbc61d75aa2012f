//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

mod common;

use std::f64::consts::{PI, SQRT_2};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::fd_oracle::{positive_roots, FdGraph, VertexKind};
use qgraph::heat::{self, PathSumOptions};
use qgraph::index::{self, IndexReport};
use qgraph::random::{self, GraphParams};
use qgraph::scattering;
use qgraph::secular::{self, Root};
use qgraph::{build_graph, linalg, ConditionsAssignment, GraphSpec, MetricGraph, Preset, VertexConditions};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: qgraph::Error) -> String {
    e.to_string()
}

fn interval(l: f64) -> MetricGraph {
    build_graph(&GraphSpec::new().vertex("a").vertex("b").edge("e", "a", "b", l)).unwrap()
}

fn uniform(g: &MetricGraph, p: Preset) -> ConditionsAssignment {
    ConditionsAssignment::uniform(g, p).unwrap()
}

fn expand(roots: &[Root]) -> Vec<f64> {
    roots.iter().flat_map(|r| std::iter::repeat_n(r.k, r.multiplicity)).collect()
}

/// Spectral heat trace at `t`, with the spectrum computed far enough.
fn spectral_trace(g: &MetricGraph, a: &ConditionsAssignment, t: f64) -> Result<f64, String> {
    let spec = secular::spectral_data(g, a, heat::required_kmax(t), 1e-11).map_err(err)?;
    Ok(heat::spectral_heat_trace(&spec, g.total_length(), t).map_err(err)?.value)
}

fn interval_prototype() -> Outcome {
    let g = interval(1.0);
    let t = 0.01;
    let mut detail = Vec::new();
    for (preset, expected) in [(Preset::Neumann, 0.5), (Preset::Dirichlet, -0.5)] {
        let a = uniform(&g, preset);
        let s = scattering::global_s(&g, &a, 1.0).map_err(err)?;
        let paths = heat::path_sum(&g, &s, t, &PathSumOptions::default()).map_err(err)?;
        let from_paths = paths.result.total - paths.result.weyl - paths.periodic;
        let from_spectrum = spectral_trace(&g, &a, t)? - heat::weyl_term(&g, t) - paths.periodic;
        ensure((from_paths - expected).abs() < 1e-8, || format!("{preset} path-sum constant {from_paths}"))?;
        ensure((from_spectrum - expected).abs() < 1e-8, || format!("{preset} spectral constant {from_spectrum}"))?;
        detail.push(format!("{preset}: {from_paths:+.10} / {from_spectrum:+.10}"));
    }
    let n = uniform(&g, Preset::Neumann);
    let d = uniform(&g, Preset::Dirichlet);
    let formula = index::index_formula(&g, &n);
    let kernels = secular::kernel_dim(&g, &n).map_err(err)? as i64 - secular::kernel_dim_dual(&g, &n).map_err(err)? as i64;
    let spectral_difference = spectral_trace(&g, &n, t)? - spectral_trace(&g, &d, t)?;
    let path_difference = heat::index_via_two_traces(&g, &n, t).map_err(err)?;
    ensure(formula == 1 && kernels == 1, || format!("formula {formula}, kernels {kernels}"))?;
    ensure((spectral_difference - 1.0).abs() < 1e-6, || format!("spectral Tr K_N - Tr K_D = {spectral_difference}"))?;
    ensure((path_difference - 1.0).abs() < 1e-6, || format!("path Tr K_N - Tr K_D = {path_difference}"))?;
    detail.push(format!("index 1 (trace difference {spectral_difference:.12})"));
    Ok(detail.join("; "))
}

fn euler_term() -> Outcome {
    let mut rng = random::seeded(2002);
    let t = 0.02;
    let (mut worst_constant, mut worst_routes) = (0.0f64, 0.0f64);
    let graphs = 20;
    for _ in 0..graphs {
        let g = random::random_connected_graph(&GraphParams::default(), &mut rng);
        let a = uniform(&g, Preset::Kirchhoff);
        let s = scattering::global_s(&g, &a, 1.0).map_err(err)?;
        let paths = heat::path_sum(&g, &s, t, &PathSumOptions::default()).map_err(err)?;
        let spectral = spectral_trace(&g, &a, t)?;
        let extracted = spectral - heat::weyl_term(&g, t) - paths.periodic;
        let half_chi = 0.5 * g.euler_characteristic() as f64;
        worst_constant = worst_constant.max((extracted - half_chi).abs());
        worst_routes = worst_routes.max((paths.result.total - spectral).abs());
    }
    ensure(worst_constant < 1e-6, || format!("constant off by {worst_constant:e}"))?;
    ensure(worst_routes < 1e-6, || format!("routes differ by {worst_routes:e}"))?;
    Ok(format!("{graphs} graphs, max |K3 - (V-E)/2| = {worst_constant:.1e}, max route gap = {worst_routes:.1e}"))
}

fn random_family() -> Vec<(MetricGraph, ConditionsAssignment)> {
    let mut rng = random::seeded(3003);
    (0..50)
        .map(|_| {
            let g = random::random_connected_graph(&GraphParams::default(), &mut rng);
            let a = random::random_scale_invariant_assignment(&g, &mut rng);
            (g, a)
        })
        .collect()
}

fn index_identities(reports: &[IndexReport]) -> Outcome {
    let (mut strace, mut heat_gap) = (0.0f64, 0.0f64);
    for r in reports {
        let formula = r.index_formula;
        ensure(r.index_kernels == Some(formula), || format!("kernels {:?} vs formula {formula}", r.index_kernels))?;
        let s = r.index_strace.ok_or("missing reflection trace")?;
        let h = r.index_heat.ok_or("missing heat difference")?;
        strace = strace.max((s - formula as f64).abs());
        heat_gap = heat_gap.max((h - formula as f64).abs());
    }
    ensure(strace < 1e-9, || format!("reflection trace off by {strace:e}"))?;
    ensure(heat_gap < 1e-6, || format!("trace difference off by {heat_gap:e}"))?;
    Ok(format!("{} assignments, max strace gap {strace:.1e}, max heat gap {heat_gap:.1e}", reports.len()))
}

fn disjoint_neumann(e: usize) -> MetricGraph {
    let mut spec = GraphSpec::new();
    for i in 0..e {
        spec = spec
            .vertex(&format!("a{i}"))
            .vertex(&format!("b{i}"))
            .edge(&format!("e{i}"), &format!("a{i}"), &format!("b{i}"), 0.6 + 0.3 * i as f64);
    }
    build_graph(&spec).unwrap()
}

fn multiplicity_identities(family: &[(MetricGraph, ConditionsAssignment)], reports: &[IndexReport]) -> Outcome {
    for ((g, a), r) in family.iter().zip(reports) {
        let (n0, nd, nt) = (
            r.n0.ok_or("missing N0")? as i64,
            r.n0_dual.ok_or("missing N0*")? as i64,
            r.ntilde.ok_or("missing Ntilde")? as i64,
        );
        let (e, p) = (g.edge_count() as i64, a.dirichlet_count() as i64);
        ensure(nt == n0 + nd, || format!("Ntilde {nt} vs N0 + N0* = {}", n0 + nd))?;
        ensure(nt == 2 * n0 - e + p, || format!("Ntilde {nt} vs 2N0 - E + p = {}", 2 * n0 - e + p))?;
    }
    let mut rng = random::seeded(4004);
    for _ in 0..10 {
        let g = random::random_connected_graph(&GraphParams::default(), &mut rng);
        let nt = secular::algebraic_multiplicity_zero(&g, &uniform(&g, Preset::Kirchhoff)).map_err(err)? as i64;
        let expected = 2 - g.vertex_count() as i64 + g.edge_count() as i64;
        ensure(nt == expected, || format!("Kirchhoff Ntilde {nt} vs 2 - V + E = {expected}"))?;
    }
    for e in 1..=5 {
        let g = disjoint_neumann(e);
        let nt = secular::algebraic_multiplicity_zero(&g, &uniform(&g, Preset::Neumann)).map_err(err)?;
        ensure(nt == e, || format!("{e} Neumann edges: Ntilde {nt}"))?;
    }
    Ok(format!("{} assignments + 10 Kirchhoff graphs + 5 Neumann unions", family.len()))
}

fn kernel_dimensions() -> Outcome {
    let mut rng = random::seeded(5005);
    let mut graphs: Vec<MetricGraph> =
        (0..10).map(|_| random::random_connected_graph(&GraphParams::default(), &mut rng)).collect();
    for k in [2, 3, 2, 3, 2, 3, 2, 3, 2, 3] {
        graphs.push(random::random_graph_with_components(k, &mut rng));
    }
    for g in &graphs {
        let a = uniform(g, Preset::Kirchhoff);
        let counts = index::euler_and_cycles(g);
        let (n0, nd) = (secular::kernel_dim(g, &a).map_err(err)?, secular::kernel_dim_dual(g, &a).map_err(err)?);
        ensure(n0 == counts.components, || format!("N0 {n0} vs C {}", counts.components))?;
        ensure(nd == counts.anti_kirchhoff_kernel, || format!("N0* {nd} vs E - V + C {}", counts.anti_kirchhoff_kernel))?;
    }
    Ok(format!("{} graphs (10 with 2-3 components)", graphs.len()))
}

fn scattering_properties() -> Outcome {
    for d in 1..=12 {
        let s = scattering::vertex_sigma(&VertexConditions::kirchhoff(d), 1.0).map_err(err)?;
        let expected = linalg::ones(d) * linalg::c(2.0 / d as f64) - linalg::identity(d);
        let gap = linalg::max_abs(&(s - expected));
        ensure(gap < 1e-12, || format!("Kirchhoff d = {d} off by {gap:e}"))?;
    }
    let mut rng = random::seeded(6006);
    let params = GraphParams { loop_probability: 0.15, ..GraphParams::default() };
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let g = random::random_connected_graph(&params, &mut rng);
        let si = random::random_scale_invariant_assignment(&g, &mut rng);
        let robin = ConditionsAssignment::from_fn(&g, |_, d| Ok(random::random_robin(d, &mut rng))).unwrap();
        for k in [0.5, 1.0, SQRT_2] {
            for a in [&si, &robin] {
                worst = worst.max(scattering::unitarity_residual(&scattering::global_s(&g, a, k).map_err(err)?.matrix));
            }
        }
        ensure(scattering::dual_sign_check(&g, &si).map_err(err)?, || "S' != -S".into())?;
    }
    ensure(worst < 1e-11, || format!("unitarity residual {worst:e}"))?;

    let tri = build_graph(
        &GraphSpec::new().vertex("a").vertex("b").vertex("c").edge("x", "a", "b", 1.0).edge("y", "b", "c", 1.0).edge("z", "c", "a", 1.0),
    )
    .unwrap();
    let k = uniform(&tri, Preset::Kirchhoff);
    ensure(scattering::dual_sign_check(&tri, &k).map_err(err)?, || "Kirchhoff triangle dual".into())?;
    let report = scattering::classify_scale_invariance(&k).map_err(err)?;
    ensure(report.scale_invariant() == Some(true), || "Kirchhoff verdicts".into())?;
    let g = interval(1.0);
    let mixed = ConditionsAssignment::new(&g, vec![VertexConditions::dirichlet(1), VertexConditions::neumann(1)]).unwrap();
    ensure(
        scattering::classify_scale_invariance(&mixed).map_err(err)?.scale_invariant() == Some(true),
        || "Dirichlet/Neumann verdicts".into(),
    )?;
    let delta = ConditionsAssignment::from_fn(&tri, |v, d| {
        VertexConditions::preset(if v == 0 { Preset::Delta(2.0) } else { Preset::Kirchhoff }, d)
    })
    .unwrap();
    let report = scattering::classify_scale_invariance(&delta).map_err(err)?;
    ensure(report.consistent() && !report.vertices[0].k_independent && report.vertices[1].k_independent, || {
        "delta verdicts".into()
    })?;
    Ok(format!("unitarity residual {worst:.1e}"))
}

fn subdivision_invariance() -> Outcome {
    let mut rng = random::seeded(7007);
    let t = 0.02;
    let mut worst: f64 = 0.0;
    for i in 0..8 {
        let g = random::random_connected_graph(&GraphParams::default(), &mut rng);
        let a = if i % 2 == 0 { uniform(&g, Preset::Kirchhoff) } else { random::random_scale_invariant_assignment(&g, &mut rng) };
        let edge = i % g.edge_count();
        let position = g.edge(edge).length * (0.2 + 0.6 * ((i * 37) % 10) as f64 / 10.0);
        let (g2, sub) = g.insert_degree2_vertex(edge, position).map_err(err)?;
        let a2 = a.subdivided(&g, &g2, &sub).map_err(err)?;
        let k_max = (20.0 + 2.0 * g.edge_count() as f64 + 3.0) * PI / g.total_length();
        let r1 = expand(&secular::find_spectrum(&g, &a, k_max, 1e-11).map_err(err)?);
        let r2 = expand(&secular::find_spectrum(&g2, &a2, k_max, 1e-11).map_err(err)?);
        ensure(r1.len() >= 20 && r2.len() >= 20, || "fewer than 20 roots".into())?;
        for (x, y) in r1.iter().zip(&r2).take(20) {
            worst = worst.max((x - y).abs());
        }
        let s1 = scattering::global_s(&g, &a, 1.0).map_err(err)?;
        let s2 = scattering::global_s(&g2, &a2, 1.0).map_err(err)?;
        let h1 = heat::path_sum_heat_trace(&g, &s1, t, heat::Cutoff::Auto).map_err(err)?.total;
        let h2 = heat::path_sum_heat_trace(&g2, &s2, t, heat::Cutoff::Auto).map_err(err)?.total;
        worst = worst.max((h1 - h2).abs());
        ensure(g.euler_characteristic() == g2.euler_characteristic(), || "Euler characteristic changed".into())?;
    }
    ensure(worst < 1e-8, || format!("max change {worst:e}"))?;
    Ok(format!("8 graphs, max change {worst:.1e}"))
}

fn oracle_cross_check() -> Outcome {
    let star = build_graph(
        &GraphSpec::new()
            .vertex("c")
            .vertex("x")
            .vertex("y")
            .vertex("z")
            .edge("ex", "c", "x", 1.0)
            .edge("ey", "c", "y", 1.0)
            .edge("ez", "c", "z", 1.0),
    )
    .unwrap();
    let star_conditions = ConditionsAssignment::from_fn(&star, |v, d| {
        Ok(if v == 0 { VertexConditions::kirchhoff(d) } else { VertexConditions::neumann(d) })
    })
    .unwrap();
    let star_fd = FdGraph { vertices: vec![VertexKind::Kirchhoff; 4], edges: vec![(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)] };

    let loop_graph = build_graph(&GraphSpec::new().vertex("o").edge("ring", "o", "o", 2.0 * PI)).unwrap();
    let (circle, _) = loop_graph.normalize_loops();
    let circle_conditions = uniform(&circle, Preset::Kirchhoff);
    let circle_fd = FdGraph {
        vertices: vec![VertexKind::Kirchhoff; circle.vertex_count()],
        edges: circle.edges().iter().map(|e| (e.tail, e.head, e.length)).collect(),
    };

    let mut worst: f64 = 0.0;
    for (g, a, fd, k_max) in [(&star, &star_conditions, &star_fd, 4.0 * PI), (&circle, &circle_conditions, &circle_fd, 6.0)] {
        let data = secular::spectral_data(g, a, k_max, 1e-11).map_err(err)?;
        let roots = expand(&data.roots);
        ensure(roots.len() >= 10, || format!("only {} roots", roots.len()))?;
        let oracle = positive_roots(fd, 2000, data.n0, 10);
        for (s, o) in roots.iter().zip(&oracle) {
            worst = worst.max((s - o).abs());
        }
    }
    ensure(worst < 1e-4, || format!("max deviation {worst:e}"))?;
    Ok(format!("3-star and circle, first 10 roots, max deviation {worst:.1e}"))
}

struct Runner {
    failures: usize,
}

impl Runner {
    fn run(&mut self, number: usize, title: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS criterion {number} ({title}): {detail} [{elapsed:.2?}]"),
            Err(detail) => {
                self.failures += 1;
                println!("FAIL criterion {number} ({title}): {detail} [{elapsed:.2?}]");
            }
        }
    }
}

fn main() -> ExitCode {
    let mut runner = Runner { failures: 0 };
    runner.run(1, "interval prototype", Some(Duration::from_secs(1)), interval_prototype);
    runner.run(2, "Euler term", Some(Duration::from_secs(60)), euler_term);

    let family = random_family();
    let mut reports: Result<Vec<IndexReport>, String> = Err("index reports not computed".into());
    runner.run(3, "index identities", Some(Duration::from_secs(120)), || {
        reports = family.iter().map(|(g, a)| index::full_index_report(g, a, index::DEFAULT_T_REF).map_err(err)).collect();
        index_identities(reports.as_ref().map_err(Clone::clone)?)
    });
    runner.run(4, "multiplicity identities", None, || multiplicity_identities(&family, reports.as_ref().map_err(Clone::clone)?));
    runner.run(5, "kernel dimensions", None, kernel_dimensions);
    runner.run(6, "scattering properties", None, scattering_properties);
    runner.run(7, "subdivision invariance", None, subdivision_invariance);
    runner.run(8, "finite-difference oracle", None, oracle_cross_check);
    if runner.failures == 0 {
        println!("acceptance: all 8 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria failed", runner.failures);
        ExitCode::FAILURE
    }
}
