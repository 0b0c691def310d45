//! Truncated Fock-space linear algebra.
//!
//! Every object carries the list of per-mode dimensions it lives on. Mode 0 is
//! the leftmost tensor factor and flattened indices are row-major over the
//! dimension list, so for two modes `|i, j>` sits at `i * dims[1] + j`.
//!
//! Quadratures follow `x = (a + a^dag)/sqrt(2)` and `p = i(a^dag - a)/sqrt(2)`,
//! giving `[x, p] = i` and a vacuum variance of 1/2.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default single-mode cutoff for single-mode analyses.
pub const DEFAULT_NMAX: usize = 15;
/// Default per-mode cutoff for the four-mode heralding setup.
pub const HERALD_NMAX: usize = 5;
/// Number of top Fock levels excluded from unitarity checks.
pub const GUARD: usize = 2;

/// Photon-number cutoff. The basis is `|0>..|nmax>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Truncation {
    nmax: usize,
}

impl Truncation {
    pub fn new(nmax: usize) -> Result<Self> {
        if nmax < 3 {
            return Err(Error::TruncationTooSmall(nmax));
        }
        Ok(Self { nmax })
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    pub fn dim(&self) -> usize {
        self.nmax + 1
    }
}

impl Default for Truncation {
    fn default() -> Self {
        Self { nmax: DEFAULT_NMAX }
    }
}

fn check_dims(dims: &[usize], len: usize) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::DimensionMismatch(format!("invalid dims {dims:?}")));
    }
    let prod: usize = dims.iter().product();
    if prod != len {
        return Err(Error::DimensionMismatch(format!(
            "dims {dims:?} imply {prod} entries, got {len}"
        )));
    }
    Ok(())
}

/// Pure state over one or more truncated modes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    dims: Vec<usize>,
    amps: DVector<C64>,
}

impl StateVector {
    pub fn new(dims: Vec<usize>, amps: DVector<C64>) -> Result<Self> {
        check_dims(&dims, amps.len())?;
        Ok(Self { dims, amps })
    }

    /// Single-mode state from a list of amplitudes.
    pub fn from_amplitudes(amps: &[C64]) -> Result<Self> {
        Self::new(vec![amps.len()], DVector::from_column_slice(amps))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amps[index]
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// Returns the unit-norm copy. A zero vector is returned unchanged.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        Self {
            dims: self.dims.clone(),
            amps: self.amps.unscale(n),
        }
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!(
                "inner product of {:?} with {:?}",
                self.dims, other.dims
            )));
        }
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn apply(&self, op: &ModeOperator) -> Result<StateVector> {
        if op.dims != self.dims {
            return Err(Error::DimensionMismatch(format!(
                "operator on {:?} applied to state on {:?}",
                op.dims, self.dims
            )));
        }
        Ok(Self {
            dims: self.dims.clone(),
            amps: &op.matrix * &self.amps,
        })
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            dims: self.dims.clone(),
            matrix: &self.amps * self.amps.adjoint(),
        }
    }

    /// Zero-pads or crops a single-mode state to a new dimension.
    pub fn resized(&self, dim: usize) -> Result<Self> {
        if self.dims.len() != 1 {
            return Err(Error::DimensionMismatch("resize needs a single mode".into()));
        }
        let amps = DVector::from_fn(dim, |i, _| {
            if i < self.amps.len() {
                self.amps[i]
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Ok(Self { dims: vec![dim], amps })
    }
}

/// Density operator over one or more truncated modes.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(dims: Vec<usize>, matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch("density matrix must be square".into()));
        }
        check_dims(&dims, matrix.nrows())?;
        Ok(Self { dims, matrix })
    }

    /// Equal-weight or weighted mixture of single-mode pure states.
    pub fn mixture(parts: &[(f64, StateVector)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        let mut acc = DMatrix::zeros(first.1.dim(), first.1.dim());
        for (w, psi) in parts {
            if psi.dims() != first.1.dims() {
                return Err(Error::DimensionMismatch("mixture components differ".into()));
            }
            acc += psi.to_density().matrix * C64::from(*w);
        }
        Ok(Self {
            dims: first.1.dims.clone(),
            matrix: acc,
        }
        .normalized())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn element(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn normalized(&self) -> Self {
        let tr = self.trace().re;
        if tr == 0.0 {
            return self.clone();
        }
        Self {
            dims: self.dims.clone(),
            matrix: self.matrix.unscale(tr),
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let m = &self.matrix;
        (m - m.adjoint()).iter().all(|z| z.norm() <= tol)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_part(&self.matrix)
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_part(&self.matrix)
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .collect()
    }

    /// `op * rho * op^dag` without renormalization.
    pub fn conjugate_by(&self, op: &ModeOperator) -> Result<Self> {
        if op.dims != self.dims {
            return Err(Error::DimensionMismatch(format!(
                "operator on {:?} conjugating state on {:?}",
                op.dims, self.dims
            )));
        }
        Ok(Self {
            dims: self.dims.clone(),
            matrix: &op.matrix * &self.matrix * op.matrix.adjoint(),
        })
    }

    /// Zero-pads or crops a single-mode density matrix.
    pub fn resized(&self, dim: usize) -> Result<Self> {
        if self.dims.len() != 1 {
            return Err(Error::DimensionMismatch("resize needs a single mode".into()));
        }
        let old = self.dim();
        let matrix = DMatrix::from_fn(dim, dim, |i, j| {
            if i < old && j < old {
                self.matrix[(i, j)]
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Ok(Self { dims: vec![dim], matrix })
    }

    /// Checks the density-matrix invariants: Hermitian, unit trace, PSD.
    pub fn is_physical(&self) -> bool {
        self.is_hermitian(1e-10)
            && (self.trace() - C64::new(1.0, 0.0)).norm() <= 1e-10
            && self.min_eigenvalue() >= -1e-8
    }
}

/// Matrix acting on a (multi-mode) truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeOperator {
    dims: Vec<usize>,
    matrix: DMatrix<C64>,
    label: String,
}

impl ModeOperator {
    pub fn new(dims: Vec<usize>, matrix: DMatrix<C64>, label: impl Into<String>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch("operator must be square".into()));
        }
        check_dims(&dims, matrix.nrows())?;
        Ok(Self {
            dims,
            matrix,
            label: label.into(),
        })
    }

    pub(crate) fn single(matrix: DMatrix<C64>, label: impl Into<String>) -> Self {
        Self {
            dims: vec![matrix.nrows()],
            matrix,
            label: label.into(),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn adjoint(&self) -> Self {
        Self {
            dims: self.dims.clone(),
            matrix: self.matrix.adjoint(),
            label: format!("({})^dag", self.label),
        }
    }

    pub fn compose(&self, rhs: &ModeOperator) -> Result<Self> {
        if self.dims != rhs.dims {
            return Err(Error::DimensionMismatch(format!(
                "compose {:?} with {:?}",
                self.dims, rhs.dims
            )));
        }
        Ok(Self {
            dims: self.dims.clone(),
            matrix: &self.matrix * &rhs.matrix,
            label: format!("{} {}", self.label, rhs.label),
        })
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut m = DMatrix::identity(self.dim(), self.dim());
        for _ in 0..k {
            m = &m * &self.matrix;
        }
        Self {
            dims: self.dims.clone(),
            matrix: m,
            label: format!("({})^{k}", self.label),
        }
    }

    /// `||U^dag U - 1||` (max-abs entry) restricted to single-mode levels
    /// `n <= nmax - guard` in every mode.
    pub fn unitarity_defect(&self, guard: usize) -> f64 {
        let prod = self.matrix.adjoint() * &self.matrix;
        let keep: Vec<usize> = (0..self.dim())
            .filter(|&idx| {
                unflatten(idx, &self.dims)
                    .iter()
                    .zip(&self.dims)
                    .all(|(&n, &d)| n + guard < d)
            })
            .collect();
        let mut worst: f64 = 0.0;
        for &i in &keep {
            for &j in &keep {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[(i, j)] - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Lifts a single-mode operator onto `mode` of a multi-mode space.
    pub fn on_mode(&self, mode: usize, dims: &[usize]) -> Result<Self> {
        if self.dims.len() != 1 {
            return Err(Error::DimensionMismatch("on_mode needs a single-mode operator".into()));
        }
        if mode >= dims.len() {
            return Err(Error::InvalidMode {
                index: mode,
                modes: dims.len(),
            });
        }
        if dims[mode] != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "mode {mode} has dimension {}, operator has {}",
                dims[mode],
                self.dim()
            )));
        }
        let mut acc: Option<ModeOperator> = None;
        for (k, &d) in dims.iter().enumerate() {
            let factor = if k == mode { self.clone() } else { identity(d) };
            acc = Some(match acc {
                None => factor,
                Some(a) => a.kron(&factor),
            });
        }
        let mut out = acc.expect("dims is non-empty");
        out.label = format!("{}[{mode}]", self.label);
        Ok(out)
    }
}

fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).unscale(2.0)
}

/// Row-major multi-index of a flattened index.
pub fn unflatten(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = idx % dims[k];
        idx /= dims[k];
    }
    out
}

/// Row-major flattened index of a multi-index.
pub fn flatten(index: &[usize], dims: &[usize]) -> usize {
    index.iter().zip(dims).fold(0, |acc, (&i, &d)| acc * d + i)
}

/// Kronecker composition, mode 0 leftmost.
pub trait Tensor: Sized {
    fn kron(&self, rhs: &Self) -> Self;
}

impl Tensor for StateVector {
    fn kron(&self, rhs: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&rhs.dims);
        Self {
            dims,
            amps: self.amps.kronecker(&rhs.amps),
        }
    }
}

impl Tensor for DensityMatrix {
    fn kron(&self, rhs: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&rhs.dims);
        Self {
            dims,
            matrix: self.matrix.kronecker(&rhs.matrix),
        }
    }
}

impl Tensor for ModeOperator {
    fn kron(&self, rhs: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&rhs.dims);
        Self {
            dims,
            matrix: self.matrix.kronecker(&rhs.matrix),
            label: format!("{} (x) {}", self.label, rhs.label),
        }
    }
}

/// Any object that can take part in a tensor product.
#[derive(Debug, Clone, PartialEq)]
pub enum FockObject {
    State(StateVector),
    Operator(ModeOperator),
    Density(DensityMatrix),
}

impl FockObject {
    fn kind(&self) -> &'static str {
        match self {
            FockObject::State(_) => "state vector",
            FockObject::Operator(_) => "operator",
            FockObject::Density(_) => "density matrix",
        }
    }
}

/// Tensor product of a list of same-kind objects.
pub fn tensor(parts: &[FockObject]) -> Result<FockObject> {
    let (first, rest) = parts
        .split_first()
        .ok_or_else(|| Error::InvalidParameter("tensor of an empty list".into()))?;
    rest.iter().try_fold(first.clone(), |acc, part| {
        Ok(match (&acc, part) {
            (FockObject::State(a), FockObject::State(b)) => FockObject::State(a.kron(b)),
            (FockObject::Operator(a), FockObject::Operator(b)) => FockObject::Operator(a.kron(b)),
            (FockObject::Density(a), FockObject::Density(b)) => FockObject::Density(a.kron(b)),
            _ => return Err(Error::MixedKinds(acc.kind(), part.kind())),
        })
    })
}

/// Annihilation operator with `<n-1|a|n> = sqrt(n)`.
pub fn destroy(t: Truncation) -> ModeOperator {
    ModeOperator::single(destroy_matrix(t.dim()), "a")
}

pub fn create(t: Truncation) -> ModeOperator {
    ModeOperator::single(destroy_matrix(t.dim()).adjoint(), "a^dag")
}

pub fn number(t: Truncation) -> ModeOperator {
    let d = t.dim();
    ModeOperator::single(
        DMatrix::from_fn(d, d, |i, j| if i == j { C64::new(i as f64, 0.0) } else { C64::new(0.0, 0.0) }),
        "n",
    )
}

pub fn identity(dim: usize) -> ModeOperator {
    ModeOperator::single(DMatrix::identity(dim, dim), "1")
}

pub(crate) fn destroy_matrix(dim: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |i, j| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    X,
    P,
}

/// Position or momentum quadrature matrix.
pub fn quadrature(t: Truncation, which: Quadrature) -> ModeOperator {
    quadrature_matrix(t.dim(), which)
}

pub(crate) fn quadrature_matrix(dim: usize, which: Quadrature) -> ModeOperator {
    let a = destroy_matrix(dim);
    let ad = a.adjoint();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match which {
        Quadrature::X => ModeOperator::single((&a + &ad) * C64::new(s, 0.0), "x"),
        Quadrature::P => ModeOperator::single((&ad - &a) * C64::new(0.0, s), "p"),
    }
}

/// Partial trace keeping the listed modes (in ascending mode order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let modes = rho.dims.len();
    if keep.is_empty() {
        return Err(Error::InvalidParameter("keep list is empty".into()));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() {
        return Err(Error::InvalidParameter(format!("duplicate modes in {keep:?}")));
    }
    if let Some(&bad) = kept.iter().find(|&&k| k >= modes) {
        return Err(Error::InvalidMode { index: bad, modes });
    }
    let traced: Vec<usize> = (0..modes).filter(|m| !kept.contains(m)).collect();
    let kdims: Vec<usize> = kept.iter().map(|&m| rho.dims[m]).collect();
    let tdims: Vec<usize> = traced.iter().map(|&m| rho.dims[m]).collect();
    let kd: usize = kdims.iter().product();
    let td: usize = tdims.iter().product();

    // full flat index for each (kept, traced) pair
    let mut full = vec![0usize; kd * td];
    let mut multi = vec![0usize; modes];
    for a in 0..kd {
        let ka = unflatten(a, &kdims);
        for t in 0..td {
            let ta = unflatten(t, &tdims);
            for (pos, &m) in kept.iter().enumerate() {
                multi[m] = ka[pos];
            }
            for (pos, &m) in traced.iter().enumerate() {
                multi[m] = ta[pos];
            }
            full[a * td + t] = flatten(&multi, &rho.dims);
        }
    }
    let out = DMatrix::from_fn(kd, kd, |a, b| {
        (0..td).fold(C64::new(0.0, 0.0), |acc, t| {
            acc + rho.matrix[(full[a * td + t], full[b * td + t])]
        })
    });
    DensityMatrix::new(kdims, out)
}

/// `Tr[rho O]`.
pub fn expectation(rho: &DensityMatrix, op: &ModeOperator) -> Result<C64> {
    if rho.dims != op.dims {
        return Err(Error::DimensionMismatch(format!(
            "expectation of operator on {:?} in state on {:?}",
            op.dims, rho.dims
        )));
    }
    let m = &rho.matrix;
    let o = &op.matrix;
    let n = m.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += m[(i, k)] * o[(k, i)];
        }
    }
    Ok(acc)
}

/// `exp(i * t * H)` for Hermitian `H`, by eigendecomposition.
pub fn exp_i_hermitian(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let eig = hermitian_part(h).symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(&DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, t * l)),
    ));
    v * phases * v.adjoint()
}

/// Principal square root of a positive semidefinite Hermitian matrix.
/// Eigenvalues at rounding level are treated as exact zeros, since their
/// square roots would otherwise be of order 1e-8.
pub(crate) fn psd_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = hermitian_part(m).symmetric_eigen();
    let v = &eig.eigenvectors;
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let floor = top * f64::EPSILON * eig.eigenvalues.len() as f64;
    let roots = DMatrix::from_diagonal(&DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| C64::new(if l > floor { l.sqrt() } else { 0.0 }, 0.0)),
    ));
    v * roots * v.adjoint()
}

/// Generalized Laguerre polynomial `L_n^(k)(x)` by forward recurrence.
pub fn laguerre(n: usize, k: usize, x: f64) -> f64 {
    let k = k as f64;
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + k - x;
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + k - x) * cur - (jf + k) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Exact matrix element `<row|D(beta)|col>` of the untruncated displacement
/// operator `D(beta) = exp(beta a^dag - beta^* a)`.
pub fn displacement_element(row: usize, col: usize, beta: C64) -> C64 {
    let x = beta.norm_sqr();
    let gauss = (-x / 2.0).exp();
    if row >= col {
        let k = row - col;
        // sqrt(col!/row!)
        let ratio = (col + 1..=row).fold(1.0, |acc, j| acc / (j as f64).sqrt());
        beta.powu(k as u32) * (ratio * gauss * laguerre(col, k, x))
    } else {
        let k = col - row;
        let ratio = (row + 1..=col).fold(1.0, |acc, j| acc / (j as f64).sqrt());
        (-beta.conj()).powu(k as u32) * (ratio * gauss * laguerre(row, k, x))
    }
}
