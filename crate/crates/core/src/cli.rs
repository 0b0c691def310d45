//! Command-line pipelines. Each run writes CSV/JSON artifacts into one
//! output directory and finishes with `manifest.json`.
//!
//! Exit codes: 0 success, 2 bad arguments or config, 3 numerical failure,
//! 4 file I/O or unreadable input.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::channels::{loss, subtract, LossParam};
use crate::characterize::{
    antidiag_im, default_axis, fidelity, fit_displacement, grid, moments, photon_probs, r_metric, wigner,
};
use crate::error::{Error, Result};
use crate::focklab::{DensityMatrix, StateVector, Truncation, C64};
use crate::herald::{herald, optimize_betas, target_fidelity, HeraldConfig, OptimizeOptions};
use crate::imprint::{quad_fit, sweep};
use crate::io::{
    read_density, write_curve, write_density, write_indexed, write_json, write_moment_curve, write_wigner, RunManifest,
};
use crate::states::{coherent, cubic_state, fock, one_and_three, CubicMethod};
use crate::tomo::{phases, reconstruct, sample, QuadratureRecord, TomoConfig};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "CUBICLAB_OUT";

#[derive(Debug, Parser, Serialize)]
#[command(name = "cubiclab", version, about = "Cubic-phase resource state laboratory")]
pub struct Cli {
    /// Output directory for this run [default: $CUBICLAB_OUT/<command> or ./cubiclab-out/<command>]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Build a named state and write its amplitudes, populations and moments.
    State(StateArgs),
    /// Produce the data behind one of the figures.
    Figure(FigureArgs),
    /// Homodyne sampling and reconstruction.
    #[command(subcommand)]
    Tomo(TomoCommand),
    /// Heralded preparation from a JSON config.
    Herald(HeraldArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateKind {
    Fock,
    Coherent,
    Cubic,
    OneAndThree,
    OneAndThreePerp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Analytic,
    Operator,
}

impl From<Method> for CubicMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Analytic => CubicMethod::Analytic,
            Method::Operator => CubicMethod::Operator,
        }
    }
}

/// Parameters shared by every state-producing command.
#[derive(Debug, Clone, Args, Serialize)]
pub struct StateSpec {
    #[arg(value_enum)]
    pub kind: StateKind,
    /// Photon number for `fock`.
    #[arg(long, default_value_t = 0)]
    pub n: usize,
    /// Real part of the coherent amplitude.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub alpha: f64,
    /// Imaginary part of the coherent amplitude.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub alpha_im: f64,
    /// Cubic strength.
    #[arg(long, default_value_t = 0.09, allow_hyphen_values = true)]
    pub chi: f64,
    #[arg(long, value_enum, default_value_t = Method::Analytic)]
    pub method: Method,
    /// Transmissivity of an optional loss channel.
    #[arg(long)]
    pub eta: Option<f64>,
}

impl StateSpec {
    fn pure(&self, t: Truncation) -> Result<StateVector> {
        Ok(match self.kind {
            StateKind::Fock => fock(self.n, t)?,
            StateKind::Coherent => coherent(C64::new(self.alpha, self.alpha_im), t),
            StateKind::Cubic => cubic_state(self.chi, t, self.method.into()),
            StateKind::OneAndThree => one_and_three(t, false),
            StateKind::OneAndThreePerp => one_and_three(t, true),
        })
    }

    fn density(&self, t: Truncation) -> Result<DensityMatrix> {
        let rho = self.pure(t)?.to_density();
        match self.eta {
            Some(eta) => loss(&rho, LossParam::new(eta)?),
            None => Ok(rho),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StateArgs {
    #[command(flatten)]
    pub spec: StateSpec,
    #[arg(long, default_value_t = 15)]
    pub nmax: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    /// Wigner function and density matrix of the state.
    Fig2a,
    /// The same after one virtual photon subtraction.
    Fig2b,
    /// First moment of p against coherent probes after imprinting.
    Fig3,
    /// Imaginary anti-diagonal of the coordinate density matrix.
    Fig4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Ancilla {
    Cubic,
    Vacuum,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FigureArgs {
    #[arg(value_enum)]
    pub which: Figure,
    #[arg(long, default_value_t = 0.09, allow_hyphen_values = true)]
    pub chi: f64,
    #[arg(long, default_value_t = 15)]
    pub nmax: usize,
    /// Also process a copy degraded by loss with this transmissivity.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Ancilla for fig3.
    #[arg(long, value_enum, default_value_t = Ancilla::Cubic)]
    pub ancilla: Ancilla,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum TomoCommand {
    /// Draw homodyne samples from a named state.
    Simulate(SimulateArgs),
    /// Maximum-likelihood reconstruction from a sample file.
    Reconstruct(ReconstructArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub spec: StateSpec,
    #[arg(long, default_value_t = 10)]
    pub nmax: usize,
    /// Total number of samples, split evenly over the phases.
    #[arg(long, default_value_t = 200_000)]
    pub samples: usize,
    /// Number of equally spaced phases in [0, pi).
    #[arg(long, default_value_t = 12)]
    pub phases: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReconstructArgs {
    /// Sample file with header `theta,x`.
    #[arg(long)]
    pub input: PathBuf,
    /// Density-matrix JSON of the true state, for a fidelity report.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub nmax: usize,
    #[arg(long, default_value_t = 0.05)]
    pub bin_width: f64,
    #[arg(long, default_value_t = 20_000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// Ideal cubic state at `--chi`.
    Cubic,
    /// Three-photon Fock state.
    Fock3,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HeraldArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Optimize the displacements toward a target.
    #[arg(long, value_enum)]
    pub optimize: Option<Target>,
    #[arg(long, default_value_t = 0.09, allow_hyphen_values = true)]
    pub chi: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Random optimizer starts besides the undisplaced one.
    #[arg(long, default_value_t = 11)]
    pub starts: usize,
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::State(a) => format!("state-{}", kind_name(a.spec.kind)),
            Command::Figure(a) => format!("figure-{}", value_name(&a.which)),
            Command::Tomo(TomoCommand::Simulate(_)) => "tomo-simulate".into(),
            Command::Tomo(TomoCommand::Reconstruct(_)) => "tomo-reconstruct".into(),
            Command::Herald(_) => "herald".into(),
        }
    }

    fn seed(&self) -> Option<u64> {
        match self {
            Command::Tomo(TomoCommand::Simulate(a)) => Some(a.seed),
            Command::Herald(a) if a.optimize.is_some() => Some(a.seed),
            _ => None,
        }
    }
}

fn value_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

fn kind_name(k: StateKind) -> String {
    value_name(&k)
}

/// Collects outputs of one run.
struct Run {
    dir: PathBuf,
    outputs: Vec<String>,
}

impl Run {
    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.dir.join(name)
    }
}

fn trunc(nmax: usize) -> Result<Truncation> {
    Truncation::new(nmax)
}

fn populations(run: &mut Run, name: &str, rho: &DensityMatrix) -> Result<Vec<f64>> {
    let p = photon_probs(rho)?;
    write_indexed(&run.path(name), &["n", "p"], &[p.clone()])?;
    Ok(p)
}

fn cmd_state(a: &StateArgs, run: &mut Run) -> Result<serde_json::Value> {
    let t = trunc(a.nmax)?;
    let rho = a.spec.density(t)?;
    if a.spec.eta.is_none() {
        let psi = a.spec.pure(t)?;
        let amps = psi.amplitudes();
        write_indexed(
            &run.path("amplitudes.csv"),
            &["n", "re", "im"],
            &[amps.iter().map(|z| z.re).collect(), amps.iter().map(|z| z.im).collect()],
        )?;
    }
    write_density(&run.path("rho.json"), &rho)?;
    let probs = populations(run, "probs.csv", &rho)?;
    let purity = (rho.matrix() * rho.matrix()).trace().re;
    let summary = json!({
        "moments": moments(&rho)?,
        "purity": purity,
        "mean_n": probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum::<f64>(),
    });
    write_json(&run.path("summary.json"), &summary)?;
    Ok(summary)
}

fn variants(a: &FigureArgs, rho: DensityMatrix) -> Result<Vec<(&'static str, DensityMatrix)>> {
    let mut out = Vec::new();
    if let Some(eta) = a.eta {
        let lossy = loss(&rho, LossParam::new(eta)?)?;
        out.push(("ideal", rho));
        out.push(("lossy", lossy));
    } else {
        out.push(("ideal", rho));
    }
    Ok(out)
}

fn cmd_figure(a: &FigureArgs, run: &mut Run) -> Result<serde_json::Value> {
    let t = trunc(a.nmax)?;
    let ideal = cubic_state(a.chi, t, CubicMethod::Analytic).to_density();
    let axis = default_axis();
    let mut summary = serde_json::Map::new();
    match a.which {
        Figure::Fig2a | Figure::Fig2b => {
            for (label, rho) in variants(a, ideal)? {
                let rho = if a.which == Figure::Fig2b { subtract(&rho, 1)?.0 } else { rho };
                let w = wigner(&rho, &axis, &axis)?;
                write_wigner(&run.path(&format!("wigner_{label}.csv")), &w)?;
                write_density(&run.path(&format!("rho_{label}.json")), &rho)?;
                let probs = populations(run, &format!("probs_{label}.csv"), &rho)?;
                let mut entry = json!({
                    "min_wigner": w.min(),
                    "negative_regions": w.negative_regions(1e-3),
                    "probs": probs,
                });
                if a.which == Figure::Fig2a {
                    let r = r_metric(&rho, &one_and_three(t, false)).ok();
                    let r_perp = r_metric(&rho, &one_and_three(t, true)).ok();
                    entry["r_one_and_three"] = json!(r);
                    entry["r_one_and_three_perp"] = json!(r_perp);
                }
                summary.insert(label.into(), entry);
            }
        }
        Figure::Fig3 => {
            let alphas = grid(0.0, 1.0, 0.05);
            let anc = match a.ancilla {
                Ancilla::Cubic => ideal,
                Ancilla::Vacuum => fock(0, t)?.to_density(),
            };
            let mut list = variants(a, anc)?;
            if a.eta.is_some() {
                let fit = fit_displacement(&list[1].1)?;
                summary.insert("delta_p".into(), json!(fit.delta_p));
                list.push(("lossy_shifted", fit.rho_shifted));
            }
            for (label, rho) in list {
                let curve = sweep(&alphas, &rho)?;
                write_moment_curve(&run.path(&format!("moments_{label}.csv")), &curve)?;
                let fit = quad_fit(&curve)?;
                summary.insert(label.into(), serde_json::to_value(fit)?);
            }
        }
        Figure::Fig4 => {
            let xs = grid(-3.0, 3.0, 0.02);
            let law: Vec<f64> = xs.iter().map(|x| 2.0 * a.chi * x.powi(3) * (-x * x).exp()).collect();
            write_curve(&run.path("antidiag_law.csv"), &xs, &law)?;
            let mut list = variants(a, ideal)?;
            let fit = fit_displacement(&list.last().expect("non-empty").1)?;
            summary.insert("delta_p".into(), json!(fit.delta_p));
            summary.insert("fit_amplitude".into(), json!(fit.amplitude));
            if a.eta.is_some() {
                list.push(("lossy_shifted", fit.rho_shifted));
            }
            for (label, rho) in list {
                let curve = antidiag_im(&rho, &xs)?;
                write_curve(&run.path(&format!("antidiag_{label}.csv")), &xs, &curve)?;
                let dev = curve.iter().zip(&law).map(|(c, l)| (c - l).abs()).fold(0.0, f64::max);
                summary.insert(format!("max_dev_from_law_{label}"), json!(dev));
            }
        }
    }
    let summary = serde_json::Value::Object(summary);
    write_json(&run.path("summary.json"), &summary)?;
    Ok(summary)
}

fn cmd_simulate(a: &SimulateArgs, run: &mut Run) -> Result<serde_json::Value> {
    if a.phases == 0 || a.samples < a.phases {
        return Err(Error::InvalidParameter(format!(
            "{} samples over {} phases",
            a.samples, a.phases
        )));
    }
    let rho = a.spec.density(trunc(a.nmax)?)?;
    let per_phase = a.samples / a.phases;
    let rec = sample(&rho, &phases(a.phases), per_phase, a.seed)?;
    rec.write_csv(&run.path("samples.csv"))?;
    write_density(&run.path("truth.json"), &rho)?;
    Ok(json!({ "samples": rec.len(), "per_phase": per_phase }))
}

fn cmd_reconstruct(a: &ReconstructArgs, run: &mut Run) -> Result<serde_json::Value> {
    let rec = QuadratureRecord::read_csv(&a.input)?;
    let cfg = TomoConfig {
        nmax: a.nmax,
        bin_width: a.bin_width,
        max_iters: a.max_iters,
        tol: a.tol,
    };
    let res = reconstruct(&rec, &cfg)?;
    write_density(&run.path("rho.json"), &res.rho)?;
    let probs = populations(run, "probs.csv", &res.rho)?;
    write_indexed(&run.path("likelihood.csv"), &["iteration", "log_likelihood"], &[res.log_likelihood.clone()])?;
    let fid = match &a.truth {
        Some(path) => {
            let truth = read_density(path)?;
            let d = res.rho.dim();
            Some(fidelity(&res.rho, &truth.resized(d)?.normalized())?)
        }
        None => None,
    };
    let report = json!({
        "samples": rec.len(),
        "phases": rec.phases().len(),
        "iterations": res.iterations,
        "converged": res.converged,
        "log_likelihood": res.log_likelihood.last(),
        "fidelity": fid,
        "probs": probs,
    });
    write_json(&run.path("report.json"), &report)?;
    Ok(report)
}

fn cmd_herald(a: &HeraldArgs, run: &mut Run) -> Result<serde_json::Value> {
    let text = crate::io::read_text(&a.config)?;
    let mut cfg = HeraldConfig::from_json(&text).map_err(|e| match e {
        Error::Json(j) => Error::InvalidParameter(format!("config schema: {j}")),
        other => other,
    })?;
    let mut report = serde_json::Map::new();
    if let Some(target) = a.optimize {
        let t = trunc(cfg.signal_nmax)?;
        let state = match target {
            Target::Cubic => cubic_state(a.chi, t, CubicMethod::Analytic),
            Target::Fock3 => fock(3, t)?,
        };
        let opts = OptimizeOptions {
            seed: a.seed,
            random_starts: a.starts,
            ..Default::default()
        };
        let best = optimize_betas(&state, &cfg, &opts)?;
        cfg = best.config;
        write_json(&run.path("best_config.json"), &cfg)?;
        report.insert("target".into(), json!(value_name(&target)));
        report.insert("fidelity".into(), json!(best.fidelity));
        report.insert("evaluations".into(), json!(best.evaluations));
    }
    match herald(&cfg) {
        Ok((rho, p)) => {
            write_density(&run.path("signal_rho.json"), &rho)?;
            let probs = populations(run, "probs.csv", &rho)?;
            report.insert("p_success".into(), json!(p));
            report.insert("probs".into(), json!(probs));
            if a.optimize.is_none() {
                report.insert(
                    "fidelity_fock3".into(),
                    json!(target_fidelity(&rho, &fock(3, trunc(cfg.signal_nmax)?)?)?),
                );
            }
        }
        Err(Error::NoCoincidence(p)) => {
            log::warn!("heralding never fires for this configuration");
            report.insert("p_success".into(), json!(p));
        }
        Err(e) => return Err(e),
    }
    let report = serde_json::Value::Object(report);
    write_json(&run.path("report.json"), &report)?;
    Ok(report)
}

/// Exit code for an error class.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Csv(_) | Error::Parse { .. } => 4,
        Error::TruncationTooSmall(_)
        | Error::FockIndexOutOfRange { .. }
        | Error::DimensionMismatch(_)
        | Error::MixedKinds(..)
        | Error::InvalidMode { .. }
        | Error::InvalidParameter(_)
        | Error::NotOrthogonalToVacuum(_)
        | Error::DegenerateTarget(_)
        | Error::Json(_) => 2,
        Error::NoPhotonsToSubtract { .. }
        | Error::VanishingDenominator(_)
        | Error::ProjectionAnnihilates(_)
        | Error::RankDeficient(_)
        | Error::NoConvergence(_)
        | Error::NoCoincidence(_)
        | Error::OptimizationFailed { .. }
        | Error::LikelihoodDecrease { .. } => 3,
    }
}

fn default_root() -> PathBuf {
    std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("cubiclab-out"))
}

/// Runs a parsed command and returns the manifest it wrote.
pub fn run(cli: &Cli) -> Result<RunManifest> {
    let started = Instant::now();
    let dir = cli.out.clone().unwrap_or_else(|| default_root().join(cli.command.name()));
    std::fs::create_dir_all(&dir)?;
    let mut r = Run {
        dir: dir.clone(),
        outputs: Vec::new(),
    };
    let summary = match &cli.command {
        Command::State(a) => cmd_state(a, &mut r)?,
        Command::Figure(a) => cmd_figure(a, &mut r)?,
        Command::Tomo(TomoCommand::Simulate(a)) => cmd_simulate(a, &mut r)?,
        Command::Tomo(TomoCommand::Reconstruct(a)) => cmd_reconstruct(a, &mut r)?,
        Command::Herald(a) => cmd_herald(a, &mut r)?,
    };
    log::info!("{}: {}", cli.command.name(), summary);
    let mut params = serde_json::to_value(&cli.command)?;
    strip_out(&mut params);
    let mut manifest = RunManifest::new(cli.command.name(), params, cli.command.seed());
    manifest.outputs = r.outputs;
    manifest.wall_clock_secs = started.elapsed().as_secs_f64();
    manifest.write(&dir)?;
    Ok(manifest)
}

fn strip_out(v: &mut serde_json::Value) {
    if let serde_json::Value::Object(map) = v {
        map.remove("out");
    }
}

/// Parses arguments, runs, and maps the outcome to a process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(m) => {
            println!("{}", m.outputs.iter().map(|o| Path::new(o).display().to_string()).collect::<Vec<_>>().join("\n"));
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
