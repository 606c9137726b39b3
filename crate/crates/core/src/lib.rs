//! Numerical toolbox for the measurement theory of filtered single-photon
//! detection.
//!
//! A frequency filter followed by a time-resolving photodetector implements a
//! generalized quantum measurement on the single-photon subspace. This crate
//! builds the corresponding POVM elements explicitly and analyzes them:
//!
//! - [`spectral`]: uniform frequency grids with trapezoid quadrature,
//!   spectral amplitudes, time-domain transforms, and a time-lens transform;
//! - [`filters`]: two-port filter responses (Lorentzian model or tabulated)
//!   and filter cascades, with the unitarity constraints enforced;
//! - [`povm`]: POVM elements for ideal spectral measurements and for
//!   time-windowed detection behind a filter, plus trace, purity, and
//!   detection-probability functionals;
//! - [`cascade`]: joint two-photon projectors for sequential detection at two
//!   cascaded filters;
//! - [`herald`]: conditional (heralded) single-photon states produced by
//!   filtered detection of one photon of a pair;
//! - [`hom`]: two-photon interference at a filter used as an asymmetric beam
//!   splitter;
//! - [`config`] and [`cli`]: the scenario file format and the `povm`
//!   command-line front end.
//!
//! All spectral objects live on a shared uniform [`spectral::FrequencyGrid`];
//! integrals are composite-trapezoid sums over that grid, and time integrals
//! use the midpoint rule. Frequencies are expressed in a single user-chosen
//! unit throughout; nothing in the crate fixes the unit.

pub mod cascade;
pub mod cli;
pub mod config;
pub mod error;
pub mod filters;
pub mod herald;
pub mod hom;
pub mod povm;
pub mod spectral;

pub use error::{Error, Result};
