//! Homodyne sampling and maximum-likelihood reconstruction.
//!
//! A homodyne detector with local-oscillator phase `theta` measures
//! `x_theta = x cos(theta) + p sin(theta)`, whose eigenfunctions in the Fock
//! basis are `<x_theta|n> = exp(-i n theta) psi_n(x)`.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::characterize::{grid, hermite_fns, hermite_table};
use crate::error::{Error, Result};
use crate::focklab::{DensityMatrix, C64};

/// Sampling grid half-width and step.
pub const SAMPLE_RANGE: f64 = 6.0;
pub const SAMPLE_STEP: f64 = 0.005;

/// `n` equally spaced phases in `[0, pi)`.
pub fn phases(n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 * PI / n as f64).collect()
}

/// The twelve phases used unless told otherwise.
pub fn default_phases() -> Vec<f64> {
    phases(12)
}

/// Homodyne samples as `(theta, x)` pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuadratureRecord {
    samples: Vec<(f64, f64)>,
}

impl QuadratureRecord {
    /// Phases must lie in `[0, pi)` and all values must be finite.
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        for (i, &(theta, x)) in samples.iter().enumerate() {
            if !(0.0..PI).contains(&theta) || !x.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "sample {i}: theta = {theta}, x = {x}"
                )));
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Distinct phases in order of first appearance.
    pub fn phases(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for &(theta, _) in &self.samples {
            if !out.contains(&theta) {
                out.push(theta);
            }
        }
        out
    }

    /// Samples of one phase.
    pub fn values_at(&self, theta: f64) -> Vec<f64> {
        self.samples.iter().filter(|s| s.0 == theta).map(|s| s.1).collect()
    }

    /// Shifts every phase by `delta`, folding back into `[0, pi)` with
    /// `x_{theta + pi} = -x_theta`.
    pub fn rotated(&self, delta: f64) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .map(|&(theta, x)| {
                let t = theta + delta;
                let k = (t / PI).floor();
                let sign = if (k as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                let mut folded = t - k * PI;
                if folded >= PI {
                    folded -= PI;
                }
                (folded, sign * x)
            })
            .collect();
        Self::new(samples)
    }

    /// CSV with header `theta,x` and nine significant digits.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["theta", "x"])?;
        for &(theta, x) in &self.samples {
            w.write_record([format!("{theta:.8e}"), format!("{x:.8e}")])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| crate::io::with_path(e, path))?;
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
        let headers = r.headers()?.clone();
        if headers.iter().map(str::trim).collect::<Vec<_>>() != ["theta", "x"] {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header `theta,x`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
            });
        }
        let mut samples = Vec::new();
        for (i, row) in r.records().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
            if row.len() != 2 {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected 2 fields, found {}", row.len()),
                });
            }
            let field = |k: usize| -> Result<f64> {
                row[k].trim().parse::<f64>().map_err(|e| Error::Parse {
                    line,
                    msg: format!("`{}`: {e}", &row[k]),
                })
            };
            let (theta, x) = (field(0)?, field(1)?);
            if !(0.0..PI).contains(&theta) || !x.is_finite() {
                return Err(Error::Parse {
                    line,
                    msg: format!("theta = {theta} outside [0, pi) or non-finite x"),
                });
            }
            samples.push((theta, x));
        }
        if samples.is_empty() {
            return Err(Error::Parse {
                line: 1,
                msg: "no samples".into(),
            });
        }
        Ok(Self { samples })
    }
}

fn single_mode(rho: &DensityMatrix) -> Result<usize> {
    match rho.dims() {
        [d] => Ok(*d),
        dims => Err(Error::DimensionMismatch(format!("expected a single mode, got {dims:?}"))),
    }
}

/// Marginal density `Pr(x|theta) = <x_theta|rho|x_theta>`.
pub fn marginal(rho: &DensityMatrix, theta: f64, x: f64) -> Result<f64> {
    let d = single_mode(rho)?;
    let psi = hermite_fns(d - 1, x);
    Ok(marginal_with(rho.matrix(), theta, &psi))
}

fn marginal_with(rho: &DMatrix<C64>, theta: f64, psi: &[f64]) -> f64 {
    let d = rho.nrows();
    let phase: Vec<C64> = (0..d).map(|n| C64::from_polar(psi[n], -(n as f64) * theta)).collect();
    let mut acc = 0.0;
    for m in 0..d {
        for n in 0..d {
            acc += (phase[m] * rho[(m, n)] * phase[n].conj()).re;
        }
    }
    acc.max(0.0)
}

/// Draws `n_per_phase` homodyne samples at each phase by inverse-CDF
/// sampling on `[-6, 6]`. Phase `k` uses its own ChaCha stream, so results
/// are independent of thread scheduling.
pub fn sample(rho: &DensityMatrix, thetas: &[f64], n_per_phase: usize, seed: u64) -> Result<QuadratureRecord> {
    let d = single_mode(rho)?;
    for &t in thetas {
        if !(0.0..PI).contains(&t) {
            return Err(Error::InvalidParameter(format!("phase {t} outside [0, pi)")));
        }
    }
    let xs = grid(-SAMPLE_RANGE, SAMPLE_RANGE, SAMPLE_STEP);
    let table = hermite_table(&xs, d);
    let rho_m = rho.normalized().matrix().clone();
    let per_phase: Vec<Vec<(f64, f64)>> = thetas
        .par_iter()
        .enumerate()
        .map(|(k, &theta)| {
            let pdf: Vec<f64> = (0..xs.len())
                .map(|i| {
                    let psi: Vec<f64> = table.row(i).iter().cloned().collect();
                    marginal_with(&rho_m, theta, &psi)
                })
                .collect();
            let mut cdf = vec![0.0; xs.len()];
            for i in 1..xs.len() {
                cdf[i] = cdf[i - 1] + 0.5 * (pdf[i] + pdf[i - 1]) * SAMPLE_STEP;
            }
            let total = cdf[xs.len() - 1];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            (0..n_per_phase)
                .map(|_| {
                    let u = rng.random::<f64>() * total;
                    let j = cdf.partition_point(|&c| c < u).clamp(1, xs.len() - 1);
                    let (c0, c1) = (cdf[j - 1], cdf[j]);
                    let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
                    (theta, xs[j - 1] + frac * SAMPLE_STEP)
                })
                .collect()
        })
        .collect();
    QuadratureRecord::new(per_phase.into_iter().flatten().collect())
}

/// Reconstruction settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TomoConfig {
    pub nmax: usize,
    /// Histogram bin width in `x`.
    pub bin_width: f64,
    pub max_iters: usize,
    /// Stop once the log-likelihood gain per iteration drops below this.
    pub tol: f64,
}

impl Default for TomoConfig {
    fn default() -> Self {
        Self {
            nmax: 10,
            bin_width: 0.05,
            max_iters: 20_000,
            tol: 1e-9,
        }
    }
}

impl TomoConfig {
    fn validate(&self) -> Result<()> {
        if self.nmax < 1 {
            return Err(Error::InvalidParameter("reconstruction nmax must be at least 1".into()));
        }
        if !(self.bin_width > 0.0) || !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bin width {} and tol {} must be positive",
                self.bin_width, self.tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub rho: DensityMatrix,
    /// Log-likelihood after each iteration, starting with the initial guess.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// One histogram bin at one phase.
struct Bin {
    phase: usize,
    block: usize,
    count: f64,
}

/// Phase-free bin overlaps `B_mn = int_bin psi_m psi_n dx` (Simpson rule).
fn bin_block(lo: f64, width: f64, d: usize) -> DMatrix<f64> {
    const SUB: usize = 8;
    let h = width / SUB as f64;
    let mut b = DMatrix::zeros(d, d);
    for s in 0..=SUB {
        let w = match s {
            0 | SUB => 1.0,
            s if s % 2 == 1 => 4.0,
            _ => 2.0,
        } * h
            / 3.0;
        let psi = hermite_fns(d - 1, lo + s as f64 * h);
        for m in 0..d {
            for n in 0..d {
                b[(m, n)] += w * psi[m] * psi[n];
            }
        }
    }
    b
}

/// `e^{-i theta n} rho e^{i theta n}` as seen from a rotated frame, i.e.
/// the matrix whose overlap with the bin block gives the bin probability.
fn rotate(rho: &DMatrix<C64>, theta: f64) -> DMatrix<C64> {
    DMatrix::from_fn(rho.nrows(), rho.ncols(), |m, n| {
        rho[(m, n)] * C64::from_polar(1.0, -(m as f64 - n as f64) * theta)
    })
}

fn overlap(rot: &DMatrix<C64>, b: &DMatrix<f64>) -> f64 {
    rot.iter().zip(b.iter()).map(|(r, b)| r.re * b).sum::<f64>()
}

struct Model {
    d: usize,
    phases: Vec<f64>,
    blocks: Vec<DMatrix<f64>>,
    bins: Vec<Bin>,
    total: f64,
}

impl Model {
    fn build(rec: &QuadratureRecord, cfg: &TomoConfig) -> Self {
        let d = cfg.nmax + 1;
        let phases = rec.phases();
        let nbins = ((2.0 * SAMPLE_RANGE) / cfg.bin_width).ceil() as usize;
        let lo = -(nbins as f64) * cfg.bin_width / 2.0;
        let mut counts = vec![vec![0usize; nbins]; phases.len()];
        for &(theta, x) in rec.samples() {
            let p = phases.iter().position(|&t| t == theta).expect("phase listed");
            let j = (((x - lo) / cfg.bin_width).floor().max(0.0) as usize).min(nbins - 1);
            counts[p][j] += 1;
        }
        let used: Vec<usize> = (0..nbins).filter(|&j| counts.iter().any(|c| c[j] > 0)).collect();
        let blocks: Vec<DMatrix<f64>> = used
            .par_iter()
            .map(|&j| bin_block(lo + j as f64 * cfg.bin_width, cfg.bin_width, d))
            .collect();
        let mut bins = Vec::new();
        for (p, c) in counts.iter().enumerate() {
            for (k, &j) in used.iter().enumerate() {
                if c[j] > 0 {
                    bins.push(Bin {
                        phase: p,
                        block: k,
                        count: c[j] as f64,
                    });
                }
            }
        }
        Self {
            d,
            phases,
            blocks,
            bins,
            total: rec.len() as f64,
        }
    }

    /// Log-likelihood per sample and the bin probabilities.
    fn likelihood(&self, rho: &DMatrix<C64>) -> (f64, Vec<f64>) {
        let rotated: Vec<DMatrix<C64>> = self.phases.iter().map(|&t| rotate(rho, t)).collect();
        let probs: Vec<f64> = self
            .bins
            .par_iter()
            .map(|b| overlap(&rotated[b.phase], &self.blocks[b.block]).max(1e-300))
            .collect();
        let ll = self.bins.iter().zip(&probs).map(|(b, p)| b.count * p.ln()).sum::<f64>() / self.total;
        (ll, probs)
    }

    /// `R = sum_j (f_j / p_j) Pi_j` with `f_j` the fraction of all samples in
    /// bin `j`; `R = 1` at the fixed point of a complete measurement.
    fn r_operator(&self, probs: &[f64]) -> DMatrix<C64> {
        let np = self.phases.len();
        let per_phase: Vec<DMatrix<f64>> = (0..np)
            .into_par_iter()
            .map(|p| {
                let mut acc = DMatrix::zeros(self.d, self.d);
                for (b, &pr) in self.bins.iter().zip(probs) {
                    if b.phase == p {
                        acc += &self.blocks[b.block] * (b.count / self.total / pr);
                    }
                }
                acc
            })
            .collect();
        let mut r = DMatrix::<C64>::zeros(self.d, self.d);
        for (p, acc) in per_phase.iter().enumerate() {
            let acc_c = acc.map(|v| C64::new(v, 0.0));
            // Pi_j = U B U^dag with U = diag(e^{i n theta})
            r += rotate(&acc_c, -self.phases[p]);
        }
        r
    }
}

fn hermitize(m: DMatrix<C64>) -> DMatrix<C64> {
    let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let tr = h.trace().re;
    h / C64::new(tr, 0.0)
}

/// Iterative `R rho R` maximum-likelihood reconstruction.
///
/// If a plain step fails to raise the likelihood, the step is diluted to
/// `(1 + e R) rho (1 + e R)` with halving `e`, which is guaranteed to
/// increase it for small enough `e` away from the fixed point.
pub fn reconstruct(rec: &QuadratureRecord, cfg: &TomoConfig) -> Result<Reconstruction> {
    cfg.validate()?;
    if rec.len() < 1000 {
        return Err(Error::InvalidParameter(format!("{} samples, need at least 1000", rec.len())));
    }
    let nphases = rec.phases().len();
    if nphases < 6 {
        return Err(Error::InvalidParameter(format!("{nphases} distinct phases, need at least 6")));
    }
    let model = Model::build(rec, cfg);
    let d = model.d;
    let eye = DMatrix::<C64>::identity(d, d);
    let mut rho = eye.clone() / C64::new(d as f64, 0.0);
    let (mut ll, mut probs) = model.likelihood(&rho);
    let mut history = vec![ll];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        iterations += 1;
        let r = model.r_operator(&probs);
        let mut step = hermitize(&r * &rho * &r);
        let (mut next_ll, mut next_probs) = model.likelihood(&step);
        let mut eps = 1.0;
        while next_ll < ll && eps > 1e-12 {
            eps /= 2.0;
            let k = &eye + &r * C64::new(eps, 0.0);
            step = hermitize(&k * &rho * &k);
            (next_ll, next_probs) = model.likelihood(&step);
        }
        if next_ll < ll {
            if ll - next_ll <= 1e-14 * ll.abs().max(1.0) {
                // rounding-level stall at the optimum
                converged = true;
                break;
            }
            return Err(Error::LikelihoodDecrease {
                iteration: iterations,
                before: ll,
                after: next_ll,
            });
        }
        let gain = next_ll - ll;
        rho = step;
        ll = next_ll;
        probs = next_probs;
        history.push(ll);
        if gain < cfg.tol {
            converged = true;
            break;
        }
    }
    let rho = DensityMatrix::new(vec![d], rho)?;
    Ok(Reconstruction {
        rho,
        log_likelihood: history,
        iterations,
        converged,
    })
}
