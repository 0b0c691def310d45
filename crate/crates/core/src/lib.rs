//! Numerical laboratory for the weak cubic-phase resource state
//! `(1 + i chi x^3)|0>` and the tools used to certify it.
//!
//! Modules, bottom-up:
//!
//! - [`focklab`]: truncated Fock-space operators, states, tensor products,
//!   partial traces and expectation values.
//! - [`states`]: Fock, coherent, `|1&3>`, cubic, squeezed and two-mode
//!   squeezed vacuum constructors.
//! - [`channels`]: photon subtraction, loss, displacement and beam splitters.
//! - [`characterize`]: Wigner functions, coordinate kernels, the normalized
//!   off-diagonal element, moments, fidelity and displacement fitting.
//! - [`imprint`]: beam-splitter imprinting of an ancilla's nonlinearity onto
//!   coherent probes, with quadratic moment fits.
//! - [`herald`]: idealized three-fold coincidence preparation from a
//!   two-mode squeezed vacuum and displaced idlers.
//! - [`tomo`]: homodyne sampling and maximum-likelihood reconstruction.
//! - [`io`]: CSV/JSON artifact formats and run manifests.
//! - [`cli`]: the pipelines behind the `cubiclab` binary.

pub mod channels;
pub mod characterize;
pub mod cli;
pub mod error;
pub mod focklab;
pub mod herald;
pub mod imprint;
pub mod io;
pub mod optim;
pub mod states;
pub mod tomo;

pub use error::{Error, Result};
pub use focklab::{DensityMatrix, ModeOperator, StateVector, Truncation, C64};
