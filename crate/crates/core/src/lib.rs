// Copyright 2026 The qouhc Authors
// SPDX-License-Identifier: Apache-2.0

//! Numerical verification toolkit for quantum Ornstein-Uhlenbeck semigroups
//! on a truncated Fock space.
//!
//! The crate is organised bottom-up:
//!
//! - [`fock`]: ladder operators, the Gibbs density, Weyl operators, states.
//! - [`meixner`]: the geometric-weight Meixner family and the analytic
//!   bounds used to control weighted sums.
//! - [`sequences`]: the off-diagonal coefficient families `f_{k,n,m}`,
//!   their structure maps, weighted norms and the explicit constant chain.
//! - [`schatten`]: Schatten and symmetric-embedding `L_p(rho)` norms.
//! - [`semigroup`]: parameters, Hilbert-Schmidt superoperators, eigenbasis
//!   and spectral action of the semigroup.
//! - [`hypercontractivity`]: contraction ratios, optimal-time bisection,
//!   the explicit witness and the theoretical brackets.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fock;
pub mod hypercontractivity;
pub mod linalg;
pub mod meixner;
pub mod schatten;
pub mod semigroup;
pub mod sequences;

pub use error::{Error, Result};
pub use num_complex::Complex64;
