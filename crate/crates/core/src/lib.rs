//! Restricted eigenvalue analysis for unit-root data and lasso estimation of
//! high-dimensional cointegrating regressions.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs plus an explicit seed, so callers are free to fan
//! work out across threads.
//!
//! * [`spectral`]: closed-form spectrum of the cumulative-sum Gram operator
//!   `U'U` and its shifted variant.
//! * [`theory`]: the deterministic constants and probability bounds of the
//!   REC probability and the lasso error bound.
//! * [`dgp`]: Gaussian innovations, random-walk panels and cointegrated
//!   samples.
//! * [`rec`]: sparse eigenvalues, the Bickel-type certified lower bound and
//!   a multi-start upper estimate of the restricted eigenvalue.
//! * [`lasso`]: a cyclic coordinate-descent lasso on the unnormalized
//!   objective plus the error-bound machinery.
#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dgp;
mod error;
pub mod lasso;
pub mod linalg;
pub mod rec;
pub mod rng;
pub mod spectral;
pub mod theory;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
