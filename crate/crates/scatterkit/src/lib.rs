//! Dense-operator toolkit for few-body collision theory.
//!
//! The crate models an N-particle scattering problem on a finite-dimensional
//! Hilbert space and provides the exact transition operator, its Faddeev
//! channel decomposition, the Heitler K-matrix split, and the hierarchy of
//! impulse-type approximations, together with a diagnostics engine that
//! measures kernel smallness, unitarity defects and approximation errors
//! over energy and coupling scans.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod linop;
pub mod modelspace;
pub mod momentum;
pub mod multibody;
pub mod twobody;

pub use error::{Result, ScatterError};
pub use linop::{ComplexMatrix, FreeSpectrum, SpectralParameter};
pub use multibody::{ChannelOperatorSet, OperatorKind, ScatteringSystem};
pub use twobody::{PairChannel, PairPotential};
