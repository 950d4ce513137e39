//! Toolkit for cavity-enhanced squeezed-vacuum sources.
//!
//! The crate is organised by subsystem:
//!
//! - [`noise`]: closed-form quadrature-noise spectra of a lossy below-threshold
//!   parametric down-conversion cavity, dB helpers and dark-noise correction.
//! - [`cavity`]: pump build-up, impedance matching, efficiency budgets and
//!   external pump power design.
//! - [`trace`]: spectrum-analyzer traces and their CSV representation.
//! - [`fit`]: joint damped least-squares fitting of measured spectra.
//! - [`sim`]: synthetic spectrum-analyzer measurements.
//! - [`coresonance`]: double-resonance and quasi-phase-matching solver for a
//!   half-monolithic standing-wave cavity.
//!
//! Interchangeable algorithms (refractive-index laws, Jacobian strategies,
//! analyzer statistics) live behind traits and are looked up by name through
//! a [`registry::Registry`].

pub mod cavity;
pub mod coresonance;
pub mod error;
pub mod fit;
pub mod noise;
pub mod registry;
pub mod sim;
pub mod trace;

pub use error::{Error, Result};
