//! Compressive phase-only matched filtering.
//!
//! This crate simulates single-pixel compressive measurements of images and
//! recovers the phase-only-filter correlation plane directly from the
//! compressed data by lasso optimization. Because a phase-only filter is a
//! unitary circulant transform and its correlation plane is sparse, the
//! combined sensing operator is semi-unitary and the recovery is fast even
//! at compression ratios far beyond what image reconstruction tolerates.
//!
//! Module map:
//! - [`xforms`] — fast unitary Walsh-Hadamard, noiselet and Fourier transforms
//! - [`filtering`] — circulant operators, phase-only filters, whitening
//! - [`sensing`] — random row selection, the sensing operator, noise models
//! - [`solver`] — spectral projected gradient lasso with Pareto root-finding
//! - [`detection`] — peak extraction, classification, localization scoring
//! - [`harness`] — synthetic scenes and the Monte-Carlo experiment engine
//! - [`io`] — binary plane/measurement formats, PGM images, curve CSV

pub mod detection;
pub mod error;
pub mod filtering;
pub mod harness;
pub mod io;
pub mod seeds;
pub mod selftest;
pub mod sensing;
pub mod signal;
pub mod solver;
pub mod xforms;

pub use error::{Error, Result};
pub use signal::{Complex64, Signal2D};
