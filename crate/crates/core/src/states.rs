//! State constructors.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::focklab::{
    destroy_matrix, exp_i_hermitian, quadrature, ModeOperator, Quadrature, StateVector,
    Truncation, C64,
};

/// Truncated norm loss above which coherent states log a warning.
pub const COHERENT_LOSS_WARN: f64 = 1e-6;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Strengths of the squeezed cubic resource: `chi = chi0 * exp(3 r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicParams {
    chi: f64,
    chi0: f64,
    r: f64,
}

impl CubicParams {
    pub fn new(chi: f64, chi0: f64, r: f64) -> Result<Self> {
        let implied = chi0 * (3.0 * r).exp();
        if (chi - implied).abs() > 1e-12 * chi.abs().max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "chi = {chi} inconsistent with chi0 * exp(3r) = {implied}"
            )));
        }
        Ok(Self { chi, chi0, r })
    }

    pub fn from_chi0(chi0: f64, r: f64) -> Self {
        Self {
            chi: chi0 * (3.0 * r).exp(),
            chi0,
            r,
        }
    }

    /// Unsqueezed approximant with the given effective strength.
    pub fn unsqueezed(chi: f64) -> Self {
        Self { chi, chi0: chi, r: 0.0 }
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn chi0(&self) -> f64 {
        self.chi0
    }

    pub fn r(&self) -> f64 {
        self.r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CubicMethod {
    /// Closed-form superposition of `|0>` and `|1&3>`.
    Analytic,
    /// `(1 + i chi x^3)|0>` from the quadrature matrix.
    Operator,
}

/// Fock state `|n>`.
pub fn fock(n: usize, t: Truncation) -> Result<StateVector> {
    if n > t.nmax() {
        return Err(Error::FockIndexOutOfRange { n, nmax: t.nmax() });
    }
    let mut amps = DVector::zeros(t.dim());
    amps[n] = real(1.0);
    StateVector::new(vec![t.dim()], amps)
}

/// Norm lost by truncating `|alpha>` at `t`.
pub fn coherent_truncation_loss(alpha: C64, t: Truncation) -> f64 {
    let x = alpha.norm_sqr();
    let mut term = (-x).exp();
    let mut kept = 0.0;
    for n in 0..t.dim() {
        if n > 0 {
            term *= x / n as f64;
        }
        kept += term;
    }
    (1.0 - kept).max(0.0)
}

/// Coherent state by normalized truncation of `alpha^n / sqrt(n!)`.
pub fn coherent(alpha: C64, t: Truncation) -> StateVector {
    let loss = coherent_truncation_loss(alpha, t);
    if loss > COHERENT_LOSS_WARN {
        log::warn!("coherent state alpha = {alpha} loses {loss:e} of its norm at nmax = {}", t.nmax());
    }
    let mut amps = DVector::zeros(t.dim());
    let mut c = real(1.0);
    for n in 0..t.dim() {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        amps[n] = c;
    }
    StateVector::new(vec![t.dim()], amps)
        .expect("dims match")
        .normalized()
}

/// `|1&3> = (sqrt3|1> + sqrt2|3>)/sqrt5`, or its orthogonal partner
/// `(sqrt2|1> - sqrt3|3>)/sqrt5` when `perp` is set.
pub fn one_and_three(t: Truncation, perp: bool) -> StateVector {
    let mut amps = DVector::zeros(t.dim());
    let s5 = 5f64.sqrt();
    if perp {
        amps[1] = real(2f64.sqrt() / s5);
        amps[3] = real(-3f64.sqrt() / s5);
    } else {
        amps[1] = real(3f64.sqrt() / s5);
        amps[3] = real(2f64.sqrt() / s5);
    }
    StateVector::new(vec![t.dim()], amps).expect("dims match")
}

/// Weak cubic state, normalized `(1 + i chi x^3)|0>`.
pub fn cubic_state(chi: f64, t: Truncation, method: CubicMethod) -> StateVector {
    match method {
        CubicMethod::Analytic => {
            let coeff = C64::new(0.0, chi * 15f64.sqrt() / (2.0 * 2f64.sqrt()));
            let amps = one_and_three(t, false).amplitudes() * coeff;
            let mut amps = amps;
            amps[0] += real(1.0);
            StateVector::new(vec![t.dim()], amps)
                .expect("dims match")
                .normalized()
        }
        CubicMethod::Operator => {
            let x3 = quadrature(t, Quadrature::X).pow(3);
            let gen = DMatrix::identity(t.dim(), t.dim()) + x3.matrix() * C64::new(0.0, chi);
            let op = ModeOperator::new(vec![t.dim()], gen, "1 + i chi x^3").expect("square");
            fock(0, t)
                .expect("vacuum fits")
                .apply(&op)
                .expect("dims match")
                .normalized()
        }
    }
}

/// Resource state `S(-r)(1 + i chi x^3)|0>`. The squeezing prefactor is only
/// applied when `squeezed` is set.
pub fn resource_state(params: CubicParams, t: Truncation, squeezed: bool) -> Result<StateVector> {
    let base = cubic_state(params.chi(), t, CubicMethod::Analytic);
    if !squeezed || params.r() == 0.0 {
        return Ok(base);
    }
    let s = squeeze(-params.r(), t)?;
    Ok(base.apply(&s)?.normalized())
}

/// `S(r) = exp[(i r/2)(x p + p x)]`. Positive `r` narrows the position
/// distribution: `S(r)|0>` has `<x^2> = exp(-2r)/2`. The resource prefactor
/// is `squeeze(-r)`, which stretches `x` and maps `chi0` to `chi0 e^{3r}`.
pub fn squeeze(r: f64, t: Truncation) -> Result<ModeOperator> {
    if r.abs() > 1.5 {
        return Err(Error::InvalidParameter(format!("|r| = {} exceeds 1.5", r.abs())));
    }
    let a = destroy_matrix(t.dim());
    let a2 = &a * &a;
    // (xp + px)/2 = i(a^dag^2 - a^2)/2
    let gen = (a2.adjoint() - a2) * C64::new(0.0, 0.5);
    ModeOperator::new(vec![t.dim()], exp_i_hermitian(&gen, r), format!("S({r})"))
}

/// Two-mode squeezed vacuum `sqrt(1-l^2) sum l^n |n,n>`, renormalized after
/// truncation.
pub fn tmsv(lambda: f64, t: Truncation) -> Result<StateVector> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} outside [0, 1)")));
    }
    if lambda.powi(t.nmax() as i32) >= 1e-3 {
        log::warn!("tmsv lambda = {lambda} is poorly truncated at nmax = {}", t.nmax());
    }
    let d = t.dim();
    let mut amps = DVector::from_element(d * d, zero());
    for n in 0..d {
        amps[n * d + n] = real(lambda.powi(n as i32));
    }
    Ok(StateVector::new(vec![d, d], amps)?.normalized())
}
