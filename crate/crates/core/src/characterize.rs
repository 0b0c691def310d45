//! Diagnostics: Hermite functions, Wigner functions, coordinate kernels, the
//! normalized off-diagonal element, photon statistics, quadrature moments,
//! displacement fitting and fidelity.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::channels::{displace, p_shift};
use crate::error::{Error, Result};
use crate::focklab::{expectation, psd_sqrt, quadrature_matrix, DensityMatrix, Quadrature, StateVector, C64};
use crate::optim::golden_section;

/// Evenly spaced grid `start, start + step, ..., stop` (inclusive).
pub fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize + 1;
    (0..n).map(|i| start + i as f64 * step).collect()
}

/// Default phase-space axis: `[-5, 5]` in steps of 0.05.
pub fn default_axis() -> Vec<f64> {
    grid(-5.0, 5.0, 0.05)
}

/// Normalized Hermite function `psi_n(x) = <x|n>`.
pub fn hermite_fn(n: usize, x: f64) -> f64 {
    hermite_fns(n, x)[n]
}

/// `psi_0(x) .. psi_nmax(x)` by the normalized three-term recurrence.
pub fn hermite_fns(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    let psi0 = std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp();
    out.push(psi0);
    if nmax == 0 {
        return out;
    }
    out.push(2f64.sqrt() * x * psi0);
    for n in 1..nmax {
        let nf = n as f64;
        let next = x * (2.0 / (nf + 1.0)).sqrt() * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// Table `psi_n(x_i)` with rows over the grid and columns over `n`.
pub fn hermite_table(xs: &[f64], dim: usize) -> DMatrix<f64> {
    let mut table = DMatrix::zeros(xs.len(), dim);
    for (i, &x) in xs.iter().enumerate() {
        for (n, v) in hermite_fns(dim - 1, x).into_iter().enumerate() {
            table[(i, n)] = v;
        }
    }
    table
}

fn single_mode(rho: &DensityMatrix) -> Result<usize> {
    match rho.dims() {
        [d] => Ok(*d),
        dims => Err(Error::DimensionMismatch(format!("expected a single mode, got {dims:?}"))),
    }
}

/// Wigner function sampled on a rectangular grid; `values[(i, j)]` is
/// `W(xs[i], ps[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    pub values: DMatrix<f64>,
}

impl WignerGrid {
    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    fn steps(&self) -> (f64, f64) {
        let dx = if self.xs.len() > 1 { self.xs[1] - self.xs[0] } else { 1.0 };
        let dp = if self.ps.len() > 1 { self.ps[1] - self.ps[0] } else { 1.0 };
        (dx, dp)
    }

    /// Riemann sum of `W dx dp`.
    pub fn integral(&self) -> f64 {
        let (dx, dp) = self.steps();
        self.values.sum() * dx * dp
    }

    /// Position marginal `int W dp` at each `xs[i]`.
    pub fn x_marginal(&self) -> Vec<f64> {
        let (_, dp) = self.steps();
        (0..self.xs.len()).map(|i| self.values.row(i).sum() * dp).collect()
    }

    /// Number of 4-connected regions where `W < -threshold`.
    pub fn negative_regions(&self, threshold: f64) -> usize {
        let (nx, np) = self.values.shape();
        let mut seen = vec![false; nx * np];
        let mut regions = 0;
        for start in 0..nx * np {
            if seen[start] || self.values[(start / np, start % np)] >= -threshold {
                continue;
            }
            regions += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(cell) = stack.pop() {
                let (i, j) = (cell / np, cell % np);
                let mut visit = |ii: usize, jj: usize| {
                    let c = ii * np + jj;
                    if !seen[c] && self.values[(ii, jj)] < -threshold {
                        seen[c] = true;
                        stack.push(c);
                    }
                };
                if i > 0 {
                    visit(i - 1, j);
                }
                if i + 1 < nx {
                    visit(i + 1, j);
                }
                if j > 0 {
                    visit(i, j - 1);
                }
                if j + 1 < np {
                    visit(i, j + 1);
                }
            }
        }
        regions
    }
}

/// `sqrt(m!/(m+k)!)` for all `k, m` with `m + k < dim`.
fn factorial_ratios(dim: usize) -> Vec<Vec<f64>> {
    (0..dim)
        .map(|k| {
            (0..dim - k)
                .map(|m| (m + 1..=m + k).fold(1.0, |acc, j| acc / (j as f64).sqrt()))
                .collect()
        })
        .collect()
}

fn wigner_point(rho: &DMatrix<C64>, ratios: &[Vec<f64>], x: f64, p: f64) -> f64 {
    let dim = rho.nrows();
    // W = (1/pi) Tr[rho D(2a) Parity], a = (x + ip)/sqrt2
    let beta = C64::new(x, p) * 2f64.sqrt();
    let r2 = beta.norm_sqr();
    let gauss = (-r2 / 2.0).exp();
    let mut acc = 0.0;
    let mut beta_k = C64::new(1.0, 0.0);
    for (k, ratio_k) in ratios.iter().enumerate().take(dim) {
        if k > 0 {
            beta_k *= beta;
        }
        let kf = k as f64;
        // Laguerre recurrence in m for fixed upper index k
        let mut l_prev = 0.0;
        let mut l_cur = 1.0;
        for m in 0..dim - k {
            if m == 1 {
                l_prev = 1.0;
                l_cur = 1.0 + kf - r2;
            } else if m > 1 {
                let j = (m - 1) as f64;
                let next = ((2.0 * j + 1.0 + kf - r2) * l_cur - (j + kf) * l_prev) / (j + 1.0);
                l_prev = l_cur;
                l_cur = next;
            }
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let d_nm = beta_k * (ratio_k[m] * gauss * l_cur);
            let term = (rho[(m, m + k)] * d_nm).re;
            acc += if k == 0 { sign * term } else { 2.0 * sign * term };
        }
    }
    acc / std::f64::consts::PI
}

/// Wigner function with `int W dx dp = 1` and `W_vac(0, 0) = 1/pi`, evaluated
/// from exact displaced-parity matrix elements (Laguerre form).
pub fn wigner(rho: &DensityMatrix, xs: &[f64], ps: &[f64]) -> Result<WignerGrid> {
    let dim = single_mode(rho)?;
    let ratios = factorial_ratios(dim);
    let m = rho.matrix();
    let rows: Vec<Vec<f64>> = xs
        .par_iter()
        .map(|&x| ps.iter().map(|&p| wigner_point(m, &ratios, x, p)).collect())
        .collect();
    let values = DMatrix::from_fn(xs.len(), ps.len(), |i, j| rows[i][j]);
    Ok(WignerGrid {
        xs: xs.to_vec(),
        ps: ps.to_vec(),
        values,
    })
}

/// Position-representation density matrix `K[i][j] = rho(xs[i], xs[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordKernel {
    pub xs: Vec<f64>,
    pub values: DMatrix<C64>,
}

impl CoordKernel {
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.xs.len()).map(|i| self.values[(i, i)].re).collect()
    }
}

pub fn coord_kernel(rho: &DensityMatrix, xs: &[f64]) -> Result<CoordKernel> {
    let dim = single_mode(rho)?;
    let psi = hermite_table(xs, dim).map(|v| C64::new(v, 0.0));
    let values = &psi * rho.matrix() * psi.transpose();
    Ok(CoordKernel {
        xs: xs.to_vec(),
        values,
    })
}

/// `Im rho(x, -x)` sampled on `xs`.
pub fn antidiag_im(rho: &DensityMatrix, xs: &[f64]) -> Result<Vec<f64>> {
    let dim = single_mode(rho)?;
    let m = rho.matrix();
    Ok(xs
        .iter()
        .map(|&x| {
            let psi = hermite_fns(dim - 1, x);
            let mut acc = C64::new(0.0, 0.0);
            for a in 0..dim {
                for b in 0..dim {
                    // psi_b(-x) = (-1)^b psi_b(x)
                    let s = if b % 2 == 0 { 1.0 } else { -1.0 };
                    acc += m[(a, b)] * (psi[a] * psi[b] * s);
                }
            }
            acc.im
        })
        .collect())
}

/// Normalized off-diagonal element
/// `|<0|rho|phi>|^2 / (<0|rho|0> <phi|rho|phi>)`. `phi` must be orthogonal to
/// the vacuum.
pub fn r_metric(rho: &DensityMatrix, phi: &StateVector) -> Result<f64> {
    let dim = single_mode(rho)?;
    if phi.dims() != [dim] {
        return Err(Error::DimensionMismatch(format!(
            "reference on {:?}, state on [{dim}]",
            phi.dims()
        )));
    }
    let phi = phi.normalized();
    let overlap = phi.amplitude(0).norm();
    if overlap > 1e-12 {
        return Err(Error::NotOrthogonalToVacuum(overlap));
    }
    let m = rho.matrix();
    let v = phi.amplitudes();
    let rho_phi: DVector<C64> = m * v;
    let off = rho_phi[0];
    let vac = m[(0, 0)].re;
    let pp = v.dotc(&rho_phi).re;
    let denom = vac * pp;
    if vac <= 1e-12 || pp <= 1e-12 {
        return Err(Error::VanishingDenominator(denom));
    }
    Ok(off.norm_sqr() / denom)
}

/// Photon-number distribution `<n|rho|n>`.
pub fn photon_probs(rho: &DensityMatrix) -> Result<Vec<f64>> {
    let dim = single_mode(rho)?;
    Ok((0..dim).map(|n| rho.element(n, n).re).collect())
}

/// First and central second quadrature moments.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Moments {
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
}

pub fn moments(rho: &DensityMatrix) -> Result<Moments> {
    let dim = single_mode(rho)?;
    let x = quadrature_matrix(dim, Quadrature::X);
    let p = quadrature_matrix(dim, Quadrature::P);
    let mean_x = expectation(rho, &x)?.re;
    let mean_p = expectation(rho, &p)?.re;
    let x2 = expectation(rho, &x.pow(2))?.re;
    let p2 = expectation(rho, &p.pow(2))?.re;
    Ok(Moments {
        mean_x,
        mean_p,
        var_x: x2 - mean_x * mean_x,
        var_p: p2 - mean_p * mean_p,
    })
}

fn purity(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    m.iter().map(|z| z.norm_sqr()).sum::<f64>() / rho.trace().re.powi(2)
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`; equals
/// `|<psi|phi>|^2` for pure inputs.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dims() != sigma.dims() {
        return Err(Error::DimensionMismatch(format!(
            "fidelity between {:?} and {:?}",
            rho.dims(),
            sigma.dims()
        )));
    }
    let rho = rho.normalized();
    let sigma = sigma.normalized();
    if purity(&rho) > 1.0 - 1e-12 || purity(&sigma) > 1.0 - 1e-12 {
        let f = (rho.matrix() * sigma.matrix()).trace().re;
        return Ok(f.clamp(0.0, 1.0));
    }
    // trace norm of sqrt(rho) sqrt(sigma); singular values stay accurate
    // near zero where eigenvalues of the sandwiched product would not
    let prod = psd_sqrt(rho.matrix()) * psd_sqrt(sigma.matrix());
    let tr: f64 = prod.singular_values().iter().sum();
    Ok((tr * tr).clamp(0.0, 1.0))
}

/// Result of fitting a momentum displacement that best reveals a cubic
/// anti-diagonal profile.
#[derive(Debug, Clone)]
pub struct DisplacementFit {
    pub delta_p: f64,
    /// Fitted amplitude of `x^3 exp(-x^2)`.
    pub amplitude: f64,
    pub residual: f64,
    pub residual_at_zero: f64,
    pub rho_shifted: DensityMatrix,
}

/// Default position samples for displacement fitting.
pub fn default_fit_axis() -> Vec<f64> {
    grid(-4.0, 4.0, 0.05)
}

fn cubic_profile(x: f64) -> f64 {
    x.powi(3) * (-x * x).exp()
}

/// Least-squares residual of `curve ~ b * x^3 exp(-x^2)` with `b` free;
/// returns `(residual, b)`.
fn profile_residual(curve: &[f64], xs: &[f64]) -> (f64, f64) {
    let (mut cc, mut cf, mut ff) = (0.0, 0.0, 0.0);
    for (&c, &x) in curve.iter().zip(xs) {
        let f = cubic_profile(x);
        cc += c * c;
        cf += c * f;
        ff += f * f;
    }
    let b = if ff > 0.0 { cf / ff } else { 0.0 };
    ((cc - b * cf).max(0.0), b)
}

/// Finds the momentum shift `dp` in `[-1, 1]` for which the anti-diagonal of
/// `D(i dp/sqrt2) rho D^dag` best matches `b x^3 exp(-x^2)`.
pub fn fit_displacement(rho: &DensityMatrix) -> Result<DisplacementFit> {
    fit_displacement_on(rho, &default_fit_axis())
}

pub fn fit_displacement_on(rho: &DensityMatrix, xs: &[f64]) -> Result<DisplacementFit> {
    single_mode(rho)?;
    let eval = |dp: f64| -> Result<(f64, f64)> {
        let shifted = displace(rho, p_shift(dp))?;
        Ok(profile_residual(&antidiag_im(&shifted, xs)?, xs))
    };
    let scan = grid(-1.0, 1.0, 0.01);
    let residuals: Vec<f64> = scan
        .par_iter()
        .map(|&dp| eval(dp).map(|r| r.0))
        .collect::<Result<_>>()?;
    let (residual_at_zero, _) = eval(0.0)?;
    let best = residuals.iter().cloned().fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(Error::NoConvergence("non-finite residual in scan".into()));
    }
    // ties resolved toward the smallest shift
    let tie = best + 1e-14 * best.abs().max(1e-300);
    let idx = (0..scan.len())
        .filter(|&i| residuals[i] <= tie)
        .min_by(|&a, &b| scan[a].abs().total_cmp(&scan[b].abs()))
        .expect("scan is non-empty");
    let mut delta_p = scan[idx];
    if best > 0.0 {
        let lo = (delta_p - 0.01).max(-1.0);
        let hi = (delta_p + 0.01).min(1.0);
        let polished = golden_section(|dp| eval(dp).map(|r| r.0).unwrap_or(f64::INFINITY), lo, hi, 1e-9, 200)
            .ok_or_else(|| Error::NoConvergence("golden-section search failed".into()))?;
        if polished.1 <= best {
            delta_p = polished.0;
        }
    }
    let (residual, amplitude) = eval(delta_p)?;
    Ok(DisplacementFit {
        delta_p,
        amplitude,
        residual,
        residual_at_zero,
        rho_shifted: displace(rho, p_shift(delta_p))?,
    })
}
