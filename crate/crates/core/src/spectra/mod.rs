//! Multifractal spectra: closed forms, hulls, Chernoff helpers and
//! estimators working on sampled paths.

mod estimation;
mod theory;

pub use estimation::*;
pub use theory::*;
