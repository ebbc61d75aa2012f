//! Command-line front end. All results go to stdout as CSV, diagnostics to
//! stderr. Exit codes: 0 success, 1 invalid input or failed checks, 2 usage.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::conditions::ConditionsAssignment;
use crate::error::{Error, Result};
use crate::format::parse_graph_file;
use crate::graph::MetricGraph;
use crate::heat::{self, Cutoff, HeatTraceResult};
use crate::index;
use crate::scattering;
use crate::secular;
use crate::verify;

#[derive(Debug, Parser)]
#[command(name = "qgraph", version, about = "Spectra, heat traces and index checks for quantum graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse the file and validate the graph and vertex conditions.
    Validate { file: PathBuf },
    /// Positive roots of the secular determinant up to --kmax.
    Spectrum {
        file: PathBuf,
        #[arg(long)]
        kmax: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Nonzero entries of the bond scattering matrix.
    Scattering {
        file: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
    },
    /// Heat trace at one or more times.
    HeatTrace {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Method::Paths)]
        method: Method,
        /// `auto` or a path-length cutoff.
        #[arg(long, default_value = "auto", value_parser = parse_cutoff)]
        cutoff: Cutoff,
    },
    /// Index by every route, with consistency verdict.
    Index {
        file: PathBuf,
        #[arg(long, default_value_t = index::DEFAULT_T_REF)]
        tref: f64,
    },
    /// Run the invariant suite on the file's graph.
    Verify { file: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Spectral,
    Paths,
    Both,
}

fn parse_cutoff(s: &str) -> std::result::Result<Cutoff, String> {
    if s == "auto" {
        return Ok(Cutoff::Auto);
    }
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(Cutoff::Fixed(x)),
        _ => Err(format!("expected `auto` or a positive number, found `{s}`")),
    }
}

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

enum Failure {
    /// Computation or input error, reported on stderr.
    Error(String),
    /// Output written, but checks failed.
    Checks,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Error(e.to_string())
    }
}

type CliResult = std::result::Result<(), Failure>;

fn load(path: &PathBuf) -> std::result::Result<(MetricGraph, ConditionsAssignment), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Error(format!("{}: {e}", path.display())))?;
    let file = parse_graph_file(&text).map_err(|e| Failure::Error(format!("{}: {e}", path.display())))?;
    Ok(file.build()?)
}

fn robin_banner(a: &ConditionsAssignment, err: &mut dyn Write) -> std::io::Result<()> {
    if !a.is_scale_invariant() {
        writeln!(err, "warning: conditions have a Robin part; negative eigenvalues are assumed absent")?;
    }
    Ok(())
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { write!(out, "{rendered}") } else { write!(err, "{rendered}") };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => 0,
        Err(Failure::Checks) => 1,
        Err(Failure::Error(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    match command {
        Command::Validate { file } => validate(&file, out),
        Command::Spectrum { file, kmax, tol } => spectrum(&file, kmax, tol, out, err),
        Command::Scattering { file, k } => scattering_csv(&file, k, out),
        Command::HeatTrace { file, t, method, cutoff } => heat_trace(&file, &t, method, cutoff, out, err),
        Command::Index { file, tref } => index_csv(&file, tref, out),
        Command::Verify { file } => verify_file(&file, out, err),
    }
}

fn validate(path: &PathBuf, out: &mut dyn Write) -> CliResult {
    let (g, a) = load(path)?;
    let failures: Vec<String> = a
        .iter()
        .enumerate()
        .flat_map(|(v, c)| {
            let report = c.validate();
            let id = g.vertex_id(v).to_string();
            report.failures().into_iter().map(move |f| format!("vertex `{id}`: {} residual {:e}", f.name, f.residual)).collect::<Vec<_>>()
        })
        .collect();
    if !failures.is_empty() {
        return Err(Failure::Error(failures.join("; ")));
    }
    let kind = if a.is_scale_invariant() { "scale-invariant" } else { "Robin" };
    writeln!(out, "valid: {} vertices, {} edges, {kind} conditions", g.vertex_count(), g.edge_count())?;
    Ok(())
}

fn spectrum(path: &PathBuf, kmax: f64, tol: f64, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let (g, a) = load(path)?;
    robin_banner(&a, err)?;
    let data = secular::spectral_data(&g, &a, kmax, tol)?;
    writeln!(out, "k,multiplicity")?;
    for r in &data.roots {
        writeln!(out, "{},{}", num(r.k), r.multiplicity)?;
    }
    writeln!(out, "# N0={},N0_dual={},Ntilde={}", data.n0, opt(data.n0_dual), opt(data.ntilde))?;
    Ok(())
}

fn scattering_csv(path: &PathBuf, k: f64, out: &mut dyn Write) -> CliResult {
    let (g, a) = load(path)?;
    let s = scattering::global_s(&g, &a, k)?;
    writeln!(out, "row,col,re,im")?;
    for i in 0..s.dim() {
        for j in 0..s.dim() {
            let z = s.matrix[(i, j)];
            if z.norm() > 1e-15 {
                writeln!(out, "{i},{j},{},{}", num(z.re), num(z.im))?;
            }
        }
    }
    Ok(())
}

fn heat_trace(
    path: &PathBuf,
    times: &[f64],
    method: Method,
    cutoff: Cutoff,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult {
    let (g, a) = load(path)?;
    robin_banner(&a, err)?;
    if let Some(&bad) = times.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidTime(bad).into());
    }
    let s = scattering::global_s(&g, &a, scattering::DEFAULT_K)?;
    let constant = if s.is_k_independent() { heat::constant_term_from_s(&s)? } else { f64::NAN };
    let spec = if method == Method::Paths {
        None
    } else {
        let t_min = times.iter().copied().fold(f64::INFINITY, f64::min);
        Some(secular::spectral_data(&g, &a, heat::required_kmax(t_min), 1e-10)?)
    };
    let spectral = |t: f64| -> Result<HeatTraceResult> {
        let spec = spec.as_ref().expect("spectrum computed for spectral methods");
        let trace = heat::spectral_heat_trace(spec, g.total_length(), t)?;
        Ok(HeatTraceResult::from_spectral(&g, &trace, constant))
    };
    let header = "t,total,weyl,constant,orbit_sum,bound";
    if method == Method::Both {
        writeln!(out, "{header},discrepancy")?;
    } else {
        writeln!(out, "{header}")?;
    }
    for &t in times {
        let (row, discrepancy) = match method {
            Method::Spectral => (spectral(t)?, None),
            Method::Paths => (heat::path_sum_heat_trace(&g, &s, t, cutoff)?, None),
            Method::Both => {
                let p = heat::path_sum_heat_trace(&g, &s, t, cutoff)?;
                let sp = spectral(t)?;
                (p, Some((p.total - sp.total).abs()))
            }
        };
        write!(
            out,
            "{},{},{},{},{},{}",
            num(row.t),
            num(row.total),
            num(row.weyl),
            num(row.constant),
            num(row.orbit_sum),
            num(row.truncation_bound)
        )?;
        match discrepancy {
            Some(d) => writeln!(out, ",{}", num(d))?,
            None => writeln!(out)?,
        }
    }
    Ok(())
}

fn index_csv(path: &PathBuf, tref: f64, out: &mut dyn Write) -> CliResult {
    let (g, a) = load(path)?;
    let r = index::full_index_report(&g, &a, tref)?;
    writeln!(out, "E,p,index_formula,index_kernels,index_strace,index_heat,euler,N0,N0_dual,Ntilde,verdict")?;
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.e,
        r.p,
        r.index_formula,
        opt(r.index_kernels),
        opt(r.index_strace.map(num)),
        opt(r.index_heat.map(num)),
        r.euler,
        opt(r.n0),
        opt(r.n0_dual),
        opt(r.ntilde),
        if r.passed() { "PASS" } else { "FAIL" }
    )?;
    if r.passed() {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn verify_file(path: &PathBuf, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let (g, a) = load(path)?;
    robin_banner(&a, err)?;
    let report = verify::verify(&g, &a);
    for c in &report.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        if c.detail.is_empty() {
            writeln!(out, "{status} {}", c.name)?;
        } else {
            writeln!(out, "{status} {} ({})", c.name, c.detail)?;
        }
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}
