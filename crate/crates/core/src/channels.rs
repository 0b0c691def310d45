//! State transformations: photon subtraction, loss, displacement and beam
//! splitters.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::focklab::{destroy_matrix, exp_i_hermitian, DensityMatrix, ModeOperator, C64};

/// Subtraction weights below this are treated as "nothing to subtract".
pub const SUBTRACT_MIN_WEIGHT: f64 = 1e-12;

/// Transmittance of a pure-loss channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParam(f64);

impl LossParam {
    pub fn new(eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidParameter(format!("eta = {eta} outside [0, 1]")));
        }
        Ok(Self(eta))
    }

    pub fn eta(&self) -> f64 {
        self.0
    }
}

fn single_mode(rho: &DensityMatrix, what: &str) -> Result<usize> {
    match rho.dims() {
        [d] => Ok(*d),
        dims => Err(Error::DimensionMismatch(format!("{what} needs a single mode, got {dims:?}"))),
    }
}

fn debug_check(input: &DensityMatrix, output: &DensityMatrix) {
    if cfg!(debug_assertions) && input.is_physical() {
        debug_assert!(output.is_physical(), "channel produced an unphysical state");
    }
}

/// Virtual `k`-photon subtraction `a^k rho a^dag^k / Tr[...]`.
///
/// Returns the normalized state and the pre-normalization trace.
pub fn subtract(rho: &DensityMatrix, k: u32) -> Result<(DensityMatrix, f64)> {
    if !(1..=2).contains(&k) {
        return Err(Error::InvalidParameter(format!("subtraction order {k} not in {{1, 2}}")));
    }
    let d = single_mode(rho, "subtract")?;
    let a = ModeOperator::single(destroy_matrix(d), "a").pow(k);
    let raw = rho.conjugate_by(&a)?;
    let weight = raw.trace().re;
    if !(weight > SUBTRACT_MIN_WEIGHT) {
        return Err(Error::NoPhotonsToSubtract { weight });
    }
    let out = raw.normalized();
    debug_check(rho, &out);
    Ok((out, weight))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Amplitude-damping Kraus operators `A_k`, `k = 0..dim`.
pub fn loss_kraus(eta: LossParam, dim: usize) -> Vec<DMatrix<C64>> {
    let e = eta.eta();
    (0..dim)
        .map(|k| {
            DMatrix::from_fn(dim, dim, |row, col| {
                if col >= k && row == col - k {
                    let n = col;
                    let amp = binomial(n, k).sqrt()
                        * e.powf((n - k) as f64 / 2.0)
                        * (1.0 - e).powf(k as f64 / 2.0);
                    C64::new(amp, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
        })
        .collect()
}

/// Pure-loss channel with transmittance `eta`.
pub fn loss(rho: &DensityMatrix, eta: LossParam) -> Result<DensityMatrix> {
    let d = single_mode(rho, "loss")?;
    let mut acc = DMatrix::zeros(d, d);
    for k in loss_kraus(eta, d) {
        acc += &k * rho.matrix() * k.adjoint();
    }
    let out = DensityMatrix::new(vec![d], acc)?;
    debug_check(rho, &out);
    Ok(out)
}

/// Displacement operator `D(beta) = exp(beta a^dag - beta^* a)` on a
/// truncated single mode.
pub fn displacement_operator(beta: C64, dim: usize) -> ModeOperator {
    let a = destroy_matrix(dim);
    let gen = (a.adjoint() * beta - &a * beta.conj()) * C64::new(0.0, -1.0);
    ModeOperator::single(exp_i_hermitian(&gen, 1.0), format!("D({beta})"))
}

/// `D(beta) rho D(beta)^dag`. A pure momentum shift by `dp` uses
/// `beta = i dp / sqrt(2)`.
pub fn displace(rho: &DensityMatrix, beta: C64) -> Result<DensityMatrix> {
    let d = single_mode(rho, "displace")?;
    if beta == C64::new(0.0, 0.0) {
        return Ok(rho.clone());
    }
    let out = rho.conjugate_by(&displacement_operator(beta, d))?;
    debug_check(rho, &out);
    Ok(out)
}

/// Momentum displacement amplitude: `beta = i dp / sqrt(2)`.
pub fn p_shift(dp: f64) -> C64 {
    C64::new(0.0, dp / 2f64.sqrt())
}

/// Beam splitter `exp[theta (a_i^dag a_j - a_i a_j^dag)]` on modes `(i, j)`
/// of a space with per-mode `dims`. `theta = pi/4` is balanced.
///
/// With this sign choice `U a_i^dag U^dag = cos(theta) a_i^dag - sin(theta) a_j^dag`,
/// so `|1,0> -> (|1,0> - |0,1>)/sqrt2` at balance. Every observable used in
/// this crate is either invariant under the opposite sign or fixes it
/// explicitly where it matters.
pub fn beamsplitter(theta: f64, modes: (usize, usize), dims: &[usize]) -> Result<ModeOperator> {
    let (i, j) = modes;
    let n = dims.len();
    for m in [i, j] {
        if m >= n {
            return Err(Error::InvalidMode { index: m, modes: n });
        }
    }
    if i == j {
        return Err(Error::InvalidParameter("beam splitter needs two distinct modes".into()));
    }
    let ai = ModeOperator::single(destroy_matrix(dims[i]), "a").on_mode(i, dims)?;
    let aj = ModeOperator::single(destroy_matrix(dims[j]), "a").on_mode(j, dims)?;
    let ai = ai.matrix();
    let aj = aj.matrix();
    // anti-Hermitian generator G; U = exp(theta G) = exp(i theta (-i G))
    let g = ai.adjoint() * aj - ai * aj.adjoint();
    let h = g * C64::new(0.0, -1.0);
    ModeOperator::new(
        dims.to_vec(),
        exp_i_hermitian(&h, theta),
        format!("BS({theta})[{i},{j}]"),
    )
}
