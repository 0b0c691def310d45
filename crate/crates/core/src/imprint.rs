//! Measurement-induced imprinting of an ancilla's nonlinearity.
//!
//! The probe and ancilla meet on a balanced beam splitter, the ancilla output
//! is projected onto the position eigenstate `|x = 0>`, and the ancilla is
//! traced out. In the position representation this fuses the wavefunctions:
//! the output is `psi_S(x/sqrt2) psi_A(x/sqrt2)`.
//!
//! The `|x = 0>` bra is unnormalizable, so imprint weights are relative
//! densities rather than probabilities.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::characterize::{hermite_fns, moments};
use crate::error::{Error, Result};
use crate::focklab::{exp_i_hermitian, quadrature, DensityMatrix, ModeOperator, Quadrature, Tensor, Truncation, C64};
use crate::states::coherent;

/// Projection weights below this mean the ancilla measurement never fires.
pub const IMPRINT_MIN_WEIGHT: f64 = 1e-12;

/// `<k, N-k| U_BS |n0, N-n0>` for the balanced splitter, `k, n0 = 0..=N`.
fn balanced_block(total: usize) -> DMatrix<C64> {
    let d = total + 1;
    let mut g = DMatrix::<C64>::zeros(d, d);
    for k in 0..total {
        // a0^dag a1 |k, N-k> and its adjoint
        let amp = (((k + 1) * (total - k)) as f64).sqrt();
        g[(k + 1, k)] = C64::new(amp, 0.0);
        g[(k, k + 1)] = C64::new(-amp, 0.0);
    }
    let h = g * C64::new(0.0, -1.0);
    exp_i_hermitian(&h, std::f64::consts::FRAC_PI_4)
}

/// Linear map from the two-mode input `|n0, n1>` to the unnormalized probe
/// output after projecting the ancilla onto `|x = 0>`.
fn projection_map(dim: usize) -> DMatrix<C64> {
    let max_total = 2 * (dim - 1);
    let psi0 = hermite_fns(max_total, 0.0);
    let blocks: Vec<DMatrix<C64>> = (0..=max_total).map(balanced_block).collect();
    let mut map = DMatrix::zeros(dim, dim * dim);
    for n0 in 0..dim {
        for n1 in 0..dim {
            let total = n0 + n1;
            let block = &blocks[total];
            for m in 0..=total.min(dim - 1) {
                let amp = block[(m, n0)] * psi0[total - m];
                map[(m, n0 * dim + n1)] = amp;
            }
        }
    }
    map
}

fn single_mode(rho: &DensityMatrix) -> Result<usize> {
    match rho.dims() {
        [d] => Ok(*d),
        dims => Err(Error::DimensionMismatch(format!("expected a single mode, got {dims:?}"))),
    }
}

/// Imprints `rho_a` onto `rho_in`; returns the normalized output and the
/// relative projection weight.
pub fn imprint(rho_in: &DensityMatrix, rho_a: &DensityMatrix) -> Result<(DensityMatrix, f64)> {
    let d = single_mode(rho_in)?;
    let da = single_mode(rho_a)?;
    if d != da {
        return Err(Error::DimensionMismatch(format!(
            "probe dimension {d} differs from ancilla dimension {da}"
        )));
    }
    let map = projection_map(d);
    let joint = rho_in.kron(rho_a);
    let out = &map * joint.matrix() * map.adjoint();
    let weight = out.trace().re;
    if !(weight > IMPRINT_MIN_WEIGHT) {
        return Err(Error::ProjectionAnnihilates(weight));
    }
    Ok((DensityMatrix::new(vec![d], out)?.normalized(), weight))
}

/// One probe of an imprint sweep. `mean_x`/`mean_p` are raw output moments;
/// the `scaled_*` accessors undo the `sqrt2` stretch so that moments refer
/// to the product wavefunction `psi_S(u) psi_A(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentPoint {
    pub alpha: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    pub weight: f64,
}

impl MomentPoint {
    pub fn scaled_mean_x(&self) -> f64 {
        self.mean_x / 2f64.sqrt()
    }

    pub fn scaled_mean_p(&self) -> f64 {
        self.mean_p * 2f64.sqrt()
    }
}

/// Output moments against probe amplitude. Alphas are strictly increasing
/// and weights positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentCurve {
    points: Vec<MomentPoint>,
}

impl MomentCurve {
    pub fn new(points: Vec<MomentPoint>) -> Result<Self> {
        if points.windows(2).any(|w| !(w[1].alpha > w[0].alpha)) {
            return Err(Error::InvalidParameter("alphas must be strictly increasing".into()));
        }
        if let Some(p) = points.iter().find(|p| !(p.weight > 0.0) || !p.weight.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-positive weight {}", p.weight)));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[MomentPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mean_x(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mean_x).collect()
    }

    pub fn mean_p(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mean_p).collect()
    }
}

/// Imprints `rho_a` onto real coherent probes `|alpha>`.
pub fn sweep(alphas: &[f64], rho_a: &DensityMatrix) -> Result<MomentCurve> {
    let d = single_mode(rho_a)?;
    if let Some(a) = alphas.iter().find(|a| !(0.0..=1.2).contains(*a)) {
        return Err(Error::InvalidParameter(format!("alpha = {a} outside [0, 1.2]")));
    }
    let t = Truncation::new(d - 1)?;
    let points = alphas
        .par_iter()
        .map(|&alpha| {
            let probe = coherent(C64::new(alpha, 0.0), t).to_density();
            let (out, weight) = imprint(&probe, rho_a)?;
            let m = moments(&out)?;
            Ok(MomentPoint {
                alpha,
                mean_x: m.mean_x,
                mean_p: m.mean_p,
                weight,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    MomentCurve::new(points)
}

/// Least-squares quadratic `y = c0 + c1 x + c2 x^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadFit {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub rms: f64,
}

impl QuadFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.c0 + self.c1 * x + self.c2 * x * x
    }
}

/// Fits `mean_p` against `mean_x`.
pub fn quad_fit(curve: &MomentCurve) -> Result<QuadFit> {
    quad_fit_xy(&curve.mean_x(), &curve.mean_p())
}

pub fn quad_fit_xy(xs: &[f64], ys: &[f64]) -> Result<QuadFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch("x and y lengths differ".into()));
    }
    if xs.len() < 4 {
        return Err(Error::InvalidParameter(format!("{} points, need at least 4", xs.len())));
    }
    // centre and scale x for conditioning
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let span = xs.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
    if span == 0.0 {
        return Err(Error::RankDeficient("all x values coincide".into()));
    }
    let a = DMatrix::from_fn(n, 3, |i, j| ((xs[i] - mean) / span).powi(j as i32));
    let b = DVector::from_column_slice(ys);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 1e-10 * smax {
        return Err(Error::RankDeficient(format!("singular values {smin:e} / {smax:e}")));
    }
    let coef = svd
        .solve(&b, 1e-14 * smax)
        .map_err(|e| Error::RankDeficient(e.to_string()))?;
    let resid = &a * &coef - &b;
    let rms = (resid.norm_squared() / n as f64).sqrt();
    // undo the affine change of variable
    let (k0, k1, k2) = (coef[0], coef[1] / span, coef[2] / (span * span));
    Ok(QuadFit {
        c0: k0 - k1 * mean + k2 * mean * mean,
        c1: k1 - 2.0 * k2 * mean,
        c2: k2,
        rms,
    })
}

/// Cubic phase gate `exp(i chi x^3)` on a truncated mode.
pub fn cubic_gate(chi: f64, t: Truncation) -> ModeOperator {
    let x3 = quadrature(t, Quadrature::X).pow(3);
    ModeOperator::new(vec![t.dim()], exp_i_hermitian(x3.matrix(), chi), format!("exp(i {chi} x^3)"))
        .expect("square")
}
