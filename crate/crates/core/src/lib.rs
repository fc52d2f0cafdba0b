//! Pilot-wave (de Broglie-Bohm) trajectory dynamics for free Schrödinger and
//! Klein-Gordon wave fields.
//!
//! Natural units are used throughout (ħ = c = 1) with metric signature
//! (+,−,−,−). The crate is organised bottom-up:
//!
//! * [`field`] evaluates analytic wave functions, currents, polar data and
//!   quantum potentials.
//! * [`guidance`] integrates Bohmian trajectories as integral curves of the
//!   guidance velocity field, with hyperplane and turning-point events.
//! * [`nonrel_lab`] covers the nonrelativistic ensemble experiments
//!   (equivariance and von Neumann channel measurements).
//! * [`rel_lab`] classifies a measurement hyperplane into Σ′/Σ⁺/Σ⁻ and
//!   predicts the measurable detection density, with a Monte Carlo
//!   first-crossing cross-check.
//!
//! Ensemble work is data-parallel through [`exec::Exec`]; with the default
//! `parallel` feature it runs on rayon, otherwise sequentially. Results are
//! identical either way.

// NaN must fail validity checks, hence `!(x > y)` in several places.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod exec;
pub mod field;
pub mod guidance;
pub mod nonrel_lab;
pub mod numerics;
pub mod rel_lab;

pub use error::{Error, NodeProximity, Result};
pub use exec::Exec;
pub use field::{FourVector, Mode, ModeSpec, Normalization, PolarData, RelField};
