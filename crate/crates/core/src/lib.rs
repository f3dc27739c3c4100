//! Numerical workbench for Toeplitz operators on weighted Fock spaces
//! F²_{α,w}: reproducing kernels of truncated models, Berezin transforms,
//! averaging functions, truncated spectra and the bounded-ratio checks that
//! tie them together.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eigen;
pub mod error;
pub mod expr;
pub mod fock_model;
pub mod harness;
pub mod measures;
pub mod profile;
pub mod quadrature;
pub mod toeplitz_spectra;
pub mod weights;

pub use error::{Result, WfockError};
pub use expr::Expr;
pub use fock_model::{FockModel, KernelEvaluation};
pub use measures::{Atom, MeasureContext, MeasureKind, MeasureSpec, Psi};
pub use quadrature::QuadraturePlan;
pub use toeplitz_spectra::{SchattenGauge, Spectrum, ToeplitzMatrix};
pub use weights::{Disk, Square, Weight, WeightMassCache};
