//! Markov and Lagrange spectra for symbolic horseshoes and their circle
//! rotation skew products.
//!
//! Points of a horseshoe are modelled by bi-infinite sequences of a subshift
//! of finite type ([`symbolic`]), embedded in the unit square by a Cantor
//! construction. [`circle`] provides the fiber dynamics, [`engine`] the skew
//! product spectra and interval constructions, [`classical`] the continued
//! fraction case and [`dimension`] Hausdorff dimension estimates.

pub mod circle;
pub mod classical;
pub mod dimension;
pub mod engine;
pub mod error;
pub mod model;
pub mod sample;
pub mod symbolic;

pub use error::{Result, SpectraError};
pub use sample::{SampleKind, SpectrumSample};
