//! Simulation and multifractal analysis of multistable Lévy motions.
//!
//! Layers:
//!
//! * [`alpha`]: the stability-index function `α: [0,1] → (1,2)`.
//! * [`stable_norm`]: the stable normalisation constant `C_u` and the bump
//!   function machinery behind the positivity functional `F(β)`.
//! * [`shotnoise`]: seeded shot-noise (LePage) series for the processes
//!   `Y`, `B`, `D`, `Z`, `W` and `A = D − B` on dyadic grids.
//! * [`spectra`]: closed-form Hausdorff / large-deviation spectra, concave
//!   hulls, Chernoff helpers, and empirical estimators working on sampled
//!   paths.
//! * [`validation`]: Monte-Carlo checks of characteristic functions,
//!   increment-probability scalings and localisability.
//!
//! The [`cli`] module backs the `mslevy` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alpha;
pub mod cli;
pub mod error;
pub mod quadrature;
pub mod rng;
pub mod shotnoise;
pub mod spectra;
pub mod stable_norm;
pub mod stats;
pub mod validation;

pub use alpha::{AlphaFunction, AlphaKind};
pub use error::{Error, Result};
pub use shotnoise::{PointSystem, ProcessKind, SamplePath};
pub use spectra::{ExtReal, SpectrumCurve, SpectrumKind};
