//! Spiral-wave meander under square-lattice symmetry breaking.
//!
//! The crate pairs a finite-difference FitzHugh–Nagumo simulator and tip-path
//! analytics with the finite-dimensional center-bundle model: coordinate
//! transforms to standard form, averaging, small-divisor solves and
//! bifurcation scans.

pub mod averaging;
pub mod center_bundle;
pub mod geometry;
pub mod lattice_fhn;
pub mod meander_analysis;
pub mod ode;
pub mod tip_track;
pub mod torus_fourier;
pub mod trig;

pub use geometry::Vec2;
pub use trig::{RotationSeries, TorusPolynomial, VectorPolynomial};
