//! Characterization of anisotropic XY spin chains with Dzyaloshinskii–Moriya
//! interaction from measurements on two neighbouring spins.
//!
//! - [`chain`]: thermodynamic-limit correlators and the two-spin X state.
//! - [`fisher`]: magnetization Fisher information, QFI and saturation.
//! - [`multiparam`]: QFI matrix, Uhlmann matrix and sloppiness diagnostics.
//! - [`protocol`]: Monte Carlo simulation of adaptive field-retuning
//!   estimation of the coupling.
//! - [`report`]: parameter sweeps, curve features and figure data bundles.

// `!(x >= y)` is used on purpose so that NaN falls on the failing side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod error;
pub mod fisher;
pub mod multiparam;
pub mod protocol;
pub mod quadrature;
pub mod report;

pub use chain::{ChainParams, ChainPoint, Correlators, Param, TwoSpinXState};
pub use error::{Error, Result};
pub use fisher::{FisherPoint, Saturation};
pub use quadrature::QuadratureConfig;
