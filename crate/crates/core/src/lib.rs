// SPDX-License-Identifier: Apache-2.0

//! Single-excitation dynamics of quasiperiodic rings (mosaic, AAH, GAAH)
//! coupled to a Lorentzian bosonic bath.
//!
//! The pipeline runs [`lattice`] → [`localization`] → [`laplace`] (poles and
//! residues of the Laplace-domain solution) → [`analysis`] (IPR relaxation,
//! crossings, sweeps), with [`direct`] as an independent time-domain check.
//! [`config`] and [`output`] back the `mosaic-qme` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod direct;
pub mod error;
pub mod laplace;
pub mod lattice;
pub mod localization;
pub mod output;
pub mod parallel;
pub mod poly;
pub mod run;

pub use error::{Error, Result};
