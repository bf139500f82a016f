//! Command-line front end. Flags override a JSON config file, which
//! overrides built-in defaults. Exit codes: 0 ok, 1 config or runtime
//! error, 2 failed verification.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::baseline::{
    default_fit_start, distribution_error, euler_run, fit_damped_cosine, fit_query_scaling, DampedCosineFit,
    ScalingModel, ScalingSample, Trajectory,
};
use crate::error::{Error, Result};
use crate::hs::{query_count, Method, QueryCount};
use crate::verify::run_suite;
use crate::vlasov::{build_grid, build_hamiltonian, evolve_hs, initial_state, HsPropagator};

/// Reference ω and γ for k = 0.4.
pub const THEORY_OMEGA: f64 = 1.28506;
pub const THEORY_GAMMA: f64 = 0.06613;

#[derive(Debug, Parser)]
#[command(name = "qsvt-vlasov", version, about = "QSVT Hamiltonian simulation and linear Landau damping")]
pub struct Cli {
    /// JSON file with default values for the subcommand's flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Query counts Q, R, D for OAA and/or FPAA as CSV.
    Queries(QueriesArgs),
    /// Fitted scaling coefficients over a sweep as JSON.
    FitQueries(SweepArgs),
    /// QSVT time stepping of the 1D plasma; CSV series and JSON fit.
    Landau(LandauArgs),
    /// Forward Euler reference run; same outputs as `landau`.
    Euler(EulerArgs),
    /// Distribution-function error and frequency/damping errors as JSON.
    Compare(CompareArgs),
    /// Runs the invariant suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodSel {
    Oaa,
    Fpaa,
    Both,
}

macro_rules! merge {
    ($a:ident, $b:ident; $($f:ident),*) => {
        Self { $($f: $a.$f.or($b.$f)),* }
    };
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepArgs {
    /// Preset grid: 1 (0.1≤t≤10, 1e-5≤eps≤0.9) or 2 (1≤t≤100, 1e-10≤eps≤0.9).
    #[arg(long)]
    pub range: Option<u8>,
    /// Single evolution time (overrides the t range).
    #[arg(long)]
    pub t: Option<f64>,
    /// Single tolerance (overrides the eps range).
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Number of linearly spaced times.
    #[arg(long)]
    pub nt: Option<usize>,
    #[arg(long)]
    pub eps_min: Option<f64>,
    #[arg(long)]
    pub eps_max: Option<f64>,
    /// Number of log-spaced tolerances.
    #[arg(long)]
    pub neps: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SweepArgs {
    fn merged(self, c: Self) -> Self {
        merge!(self, c; range, t, eps, t_min, t_max, nt, eps_min, eps_max, neps, out)
    }

    /// (times, tolerances) of the sweep.
    pub fn grid(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let preset = self.range.unwrap_or(1);
        let (t_lo, t_hi, e_lo) = match preset {
            1 => (0.1, 10.0, 1e-5),
            2 => (1.0, 100.0, 1e-10),
            r => return Err(Error::InvalidInput(format!("unknown range {r}, expected 1 or 2"))),
        };
        let ts = match self.t {
            Some(t) => vec![t],
            None => linspace(self.t_min.unwrap_or(t_lo), self.t_max.unwrap_or(t_hi), self.nt.unwrap_or(SWEEP_NT))?,
        };
        let es = match self.eps {
            Some(e) => vec![e],
            None => logspace(self.eps_min.unwrap_or(e_lo), self.eps_max.unwrap_or(0.9), self.neps.unwrap_or(SWEEP_NEPS))?,
        };
        Ok((ts, es))
    }
}

/// Default sweep resolution.
pub const SWEEP_NT: usize = 100;
pub const SWEEP_NEPS: usize = 50;

pub fn linspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 || !(lo <= hi) || !lo.is_finite() || !hi.is_finite() || (n == 1 && lo != hi) {
        return Err(Error::InvalidInput(format!("empty or invalid range [{lo}, {hi}] with {n} points")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let mut v: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    v[n - 1] = hi;
    Ok(v)
}

pub fn logspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0) {
        return Err(Error::InvalidInput("log range needs positive bounds".into()));
    }
    let mut v: Vec<f64> = linspace(lo.ln(), hi.ln(), n)?.into_iter().map(f64::exp).collect();
    v[0] = lo;
    if n > 1 {
        v[n - 1] = hi;
    }
    Ok(v)
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QueriesArgs {
    #[arg(long, value_enum)]
    pub method: Option<MethodSel>,
    #[command(flatten)]
    #[serde(flatten)]
    pub sweep: SweepArgs,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlasmaArgs {
    #[arg(long)]
    pub k: Option<f64>,
    /// Velocity grid points (power of two).
    #[arg(long)]
    pub nv: Option<usize>,
    #[arg(long)]
    pub vmax: Option<f64>,
    /// Start of the fit window (default 5.23 for k = 0.4).
    #[arg(long)]
    pub t0: Option<f64>,
}

impl PlasmaArgs {
    fn merged(self, c: Self) -> Self {
        merge!(self, c; k, nv, vmax, t0)
    }
    fn k(&self) -> f64 {
        self.k.unwrap_or(0.4)
    }
    fn nv(&self) -> usize {
        self.nv.unwrap_or(32)
    }
    fn vmax(&self) -> f64 {
        self.vmax.unwrap_or(4.5)
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandauArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub plasma: PlasmaArgs,
    /// Per-step error tolerance.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// CSV time series path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON summary path (stdout if absent).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EulerArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub plasma: PlasmaArgs,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Number of output samples spaced by 1/alpha (default 105).
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub plasma: PlasmaArgs,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Euler step of the classical reference.
    #[arg(long)]
    pub euler_dt: Option<f64>,
    /// Times at which δ is reported (nearest QSVT step).
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyArgs {
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Numeric CSV field: scientific notation below 1e-3 in magnitude.
pub fn fmt_num(x: f64) -> String {
    if x != 0.0 && x.is_finite() && x.abs() < 1e-3 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn load_config<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| Error::InvalidInput(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Error::InvalidInput(format!("stdout: {e}"))),
    }
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::InvalidInput(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))
}

/// Query counts over the grid, in row-major (t, eps) order.
pub fn sweep(method: Method, ts: &[f64], es: &[f64]) -> Result<Vec<QueryCount>> {
    let points: Vec<(f64, f64)> = ts.iter().flat_map(|&t| es.iter().map(move |&e| (t, e))).collect();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(points.len().max(1));
    let chunk = points.len().div_ceil(workers).max(1);
    let parts: Vec<Result<Vec<QueryCount>>> = std::thread::scope(|s| {
        let handles: Vec<_> = points
            .chunks(chunk)
            .map(|c| s.spawn(move || c.iter().map(|&(t, e)| query_count(method, t, e)).collect()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(points.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

pub const QUERY_HEADER: [&str; 8] = ["method", "t", "eps", "Q", "R", "D", "eps_tri", "eps_sign"];

pub fn query_row(q: &QueryCount) -> Vec<String> {
    let name = match q.method {
        Method::Oaa => "oaa",
        Method::Fpaa => "fpaa",
    };
    vec![
        name.into(),
        fmt_num(q.t),
        fmt_num(q.eps),
        q.q.to_string(),
        q.r.to_string(),
        q.d.map_or(String::new(), |d| d.to_string()),
        fmt_num(q.eps_tri),
        q.eps_sign.map_or(String::new(), fmt_num),
    ]
}

fn run_queries(a: QueriesArgs) -> Result<()> {
    let (ts, es) = a.sweep.grid()?;
    let methods = match a.method.unwrap_or(MethodSel::Both) {
        MethodSel::Oaa => vec![Method::Oaa],
        MethodSel::Fpaa => vec![Method::Fpaa],
        MethodSel::Both => vec![Method::Oaa, Method::Fpaa],
    };
    let mut rows = Vec::new();
    for m in methods {
        rows.extend(sweep(m, &ts, &es)?.iter().map(query_row));
    }
    write_out(a.sweep.out.as_deref(), &csv_bytes(&QUERY_HEADER, &rows)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct QueryFits {
    pub t_range: [f64; 2],
    pub eps_range: [f64; 2],
    pub samples: usize,
    pub oaa: crate::baseline::ScalingFit,
    pub fpaa: crate::baseline::ScalingFit,
    pub r: crate::baseline::ScalingFit,
    pub d: crate::baseline::ScalingFit,
    /// Every FPAA coefficient α₀..α₂ exceeds its OAA counterpart.
    pub fpaa_exceeds_oaa: bool,
}

pub fn fit_queries(ts: &[f64], es: &[f64]) -> Result<QueryFits> {
    let oaa = sweep(Method::Oaa, ts, es)?;
    let fpaa = sweep(Method::Fpaa, ts, es)?;
    let samples = |f: &dyn Fn(&QueryCount) -> f64, v: &[QueryCount]| -> Vec<ScalingSample> {
        v.iter()
            .map(|q| ScalingSample {
                t: q.t,
                eps: q.eps,
                value: f(q),
            })
            .collect()
    };
    let oaa_fit = fit_query_scaling(&samples(&|q| q.q as f64, &oaa), ScalingModel::Oaa)?;
    let fpaa_fit = fit_query_scaling(&samples(&|q| q.q as f64, &fpaa), ScalingModel::Fpaa)?;
    let r_fit = fit_query_scaling(&samples(&|q| q.r as f64, &fpaa), ScalingModel::R)?;
    let d_fit = fit_query_scaling(&samples(&|q| q.d.unwrap_or(0) as f64, &fpaa), ScalingModel::D)?;
    let exceeds = oaa_fit.coeffs.iter().zip(&fpaa_fit.coeffs).all(|(o, f)| f > o);
    Ok(QueryFits {
        t_range: [ts[0], ts[ts.len() - 1]],
        eps_range: [es[0], es[es.len() - 1]],
        samples: oaa.len(),
        oaa: oaa_fit,
        fpaa: fpaa_fit,
        r: r_fit,
        d: d_fit,
        fpaa_exceeds_oaa: exceeds,
    })
}

fn run_fit_queries(a: SweepArgs) -> Result<()> {
    let (ts, es) = a.grid()?;
    let fits = fit_queries(&ts, &es)?;
    write_out(a.out.as_deref(), &to_json(&fits))
}

pub const SERIES_HEADER: [&str; 6] = ["source", "t", "re_e", "im_e", "eta", "d_m"];

pub fn series_rows(tr: &Trajectory) -> Vec<Vec<String>> {
    let src = match tr.source {
        crate::baseline::Source::Hs => "hs",
        crate::baseline::Source::Euler => "euler",
        crate::baseline::Source::Exact => "exact",
    };
    (0..tr.len())
        .map(|i| {
            vec![
                src.into(),
                fmt_num(tr.times[i]),
                fmt_num(tr.e[i][0].re),
                fmt_num(tr.e[i][0].im),
                fmt_num(tr.eta[i]),
                fmt_num(tr.d_m[i]),
            ]
        })
        .collect()
}

fn fit_of(tr: &Trajectory, k: f64, t0: Option<f64>) -> Result<DampedCosineFit> {
    let im = tr.im_e(0);
    let start = match t0 {
        Some(t) => t,
        None => default_fit_start(k, &tr.times, &im)?,
    };
    fit_damped_cosine(&tr.times, &im, start)
}

fn fit_summary(fit: &DampedCosineFit) -> serde_json::Value {
    json!({
        "omega": fit.omega,
        "gamma": fit.gamma,
        "a": fit.a,
        "rho": fit.rho,
        "e0": fit.e0,
        "t0": fit.t0,
        "residual": fit.residual,
        "omega_rel_err": (fit.omega - THEORY_OMEGA).abs() / THEORY_OMEGA,
        "gamma_rel_err": (fit.gamma - THEORY_GAMMA).abs() / THEORY_GAMMA,
    })
}

/// HS trajectory for the 1D plasma with its propagator metadata.
pub fn landau_run(p: &PlasmaArgs, eps: f64, steps: usize) -> Result<(Trajectory, serde_json::Value)> {
    let grid = build_grid(&[p.nv()], &[p.vmax()])?;
    let ham = build_hamiltonian(&grid, &[p.k()])?;
    let s0 = initial_state(&grid, &[p.k()])?;
    let tr = evolve_hs(&ham, &grid, &s0, steps, eps)?;
    let prop = HsPropagator::new(ham.matrix(), ham.alpha(), eps)?;
    let meta = json!({
        "k": p.k(),
        "nv": p.nv(),
        "vmax": p.vmax(),
        "eps": eps,
        "steps": steps,
        "alpha": ham.alpha(),
        "dt": 1.0 / ham.alpha(),
        "n_qubits": prop.op().n_qubits(),
        "queries_per_step": prop.op().queries(),
    });
    Ok((tr, meta))
}

fn run_landau(a: LandauArgs) -> Result<()> {
    let (tr, mut meta) = landau_run(&a.plasma, a.eps.unwrap_or(1e-3), a.steps.unwrap_or(105))?;
    if let Some(out) = &a.out {
        write_out(Some(out), &csv_bytes(&SERIES_HEADER, &series_rows(&tr))?)?;
    }
    let fit = fit_of(&tr, a.plasma.k(), a.plasma.t0)?;
    meta["fit"] = fit_summary(&fit);
    write_out(a.summary.as_deref(), &to_json(&meta))
}

fn run_euler(a: EulerArgs) -> Result<()> {
    let p = &a.plasma;
    let grid = build_grid(&[p.nv()], &[p.vmax()])?;
    let ham = build_hamiltonian(&grid, &[p.k()])?;
    let dt = a.dt.unwrap_or(1e-4);
    let steps = a.steps.unwrap_or(105);
    let times: Vec<f64> = (0..=steps).map(|l| l as f64 / ham.alpha()).collect();
    let tr = euler_run(&grid, &[p.k()], dt, &times)?;
    if let Some(out) = &a.out {
        write_out(Some(out), &csv_bytes(&SERIES_HEADER, &series_rows(&tr))?)?;
    }
    let im = tr.im_e(0);
    let peak = im.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut meta = json!({
        "k": p.k(),
        "nv": p.nv(),
        "vmax": p.vmax(),
        "dt": dt,
        "max_abs_im_e": peak,
        "diverged": !(peak <= 10.0 * im[0].abs()),
    });
    meta["fit"] = match fit_of(&tr, p.k(), p.t0) {
        Ok(f) => fit_summary(&f),
        Err(e) => json!({ "error": e.to_string() }),
    };
    write_out(a.summary.as_deref(), &to_json(&meta))
}

/// Default report times for `compare`.
pub const COMPARE_TIMES: [f64; 3] = [8.32, 16.65, 24.97];

pub fn compare(p: &PlasmaArgs, eps: f64, steps: usize, euler_dt: f64, times: &[f64]) -> Result<serde_json::Value> {
    let (hs, meta) = landau_run(p, eps, steps)?;
    let grid = build_grid(&[p.nv()], &[p.vmax()])?;
    let ca = euler_run(&grid, &[p.k()], euler_dt, &hs.times)?;
    let dt = hs.times.get(1).copied().unwrap_or(1.0);
    let mut deltas = Vec::new();
    for &t in times {
        let i = hs
            .index_near(t, 0.5 * dt)
            .ok_or_else(|| Error::InvalidInput(format!("time {t} is outside the simulated range")))?;
        deltas.push(json!({
            "t": hs.times[i],
            "delta": distribution_error(&hs.f1[i], &ca.f1[i], grid.dv())?,
        }));
    }
    let f_hs = fit_of(&hs, p.k(), p.t0)?;
    let f_ca = fit_of(&ca, p.k(), p.t0)?;
    Ok(json!({
        "run": meta,
        "euler_dt": euler_dt,
        "delta": deltas,
        "hs": fit_summary(&f_hs),
        "euler": fit_summary(&f_ca),
    }))
}

fn run_compare(a: CompareArgs) -> Result<()> {
    let times = a.times.clone().unwrap_or(COMPARE_TIMES.to_vec());
    let v = compare(
        &a.plasma,
        a.eps.unwrap_or(1e-3),
        a.steps.unwrap_or(105),
        a.euler_dt.unwrap_or(1e-4),
        &times,
    )?;
    write_out(a.out.as_deref(), &to_json(&v))
}

enum Outcome {
    Ok,
    VerifyFailed,
}

fn run_verify(a: VerifyArgs) -> Result<Outcome> {
    let res = run_suite(a.seed.unwrap_or(2024));
    let mut out = String::new();
    for r in &res {
        out.push_str(&format!("{} {}: {}\n", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail));
    }
    write_out(None, out.as_bytes())?;
    Ok(if res.iter().all(|r| r.passed) {
        Outcome::Ok
    } else {
        Outcome::VerifyFailed
    })
}

fn dispatch(cli: Cli) -> Result<Outcome> {
    let cfg = cli.config.as_deref();
    match cli.command {
        Command::Queries(a) => {
            let c: QueriesArgs = load_config(cfg)?;
            run_queries(QueriesArgs {
                method: a.method.or(c.method),
                sweep: a.sweep.merged(c.sweep),
            })?
        }
        Command::FitQueries(a) => run_fit_queries(a.merged(load_config(cfg)?))?,
        Command::Landau(a) => {
            let c: LandauArgs = load_config(cfg)?;
            run_landau(LandauArgs {
                plasma: a.plasma.merged(c.plasma),
                eps: a.eps.or(c.eps),
                steps: a.steps.or(c.steps),
                out: a.out.or(c.out),
                summary: a.summary.or(c.summary),
            })?
        }
        Command::Euler(a) => {
            let c: EulerArgs = load_config(cfg)?;
            run_euler(EulerArgs {
                plasma: a.plasma.merged(c.plasma),
                dt: a.dt.or(c.dt),
                steps: a.steps.or(c.steps),
                out: a.out.or(c.out),
                summary: a.summary.or(c.summary),
            })?
        }
        Command::Compare(a) => {
            let c: CompareArgs = load_config(cfg)?;
            run_compare(CompareArgs {
                plasma: a.plasma.merged(c.plasma),
                eps: a.eps.or(c.eps),
                steps: a.steps.or(c.steps),
                euler_dt: a.euler_dt.or(c.euler_dt),
                times: a.times.or(c.times),
                out: a.out.or(c.out),
            })?
        }
        Command::Verify(a) => {
            let c: VerifyArgs = load_config(cfg)?;
            return run_verify(VerifyArgs { seed: a.seed.or(c.seed) });
        }
    }
    Ok(Outcome::Ok)
}

/// Parses arguments, runs, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(Outcome::Ok) => 0,
        Ok(Outcome::VerifyFailed) => 2,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn help_text() -> String {
    Cli::command().render_help().to_string()
}
