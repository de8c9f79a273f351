//! Simulation and analysis of polarization-entangled photon pairs sent through
//! fiber channels with polarization dependent loss (PDL) and first-order PMD.
//!
//! The matrix kernel, state metrics, channel elements and closed-form theory
//! are generic over [`Real`] (`f32` or `f64`); the instrument emulator and
//! compensator search work in `f64`. Concrete `f64` aliases are re-exported
//! at the crate root.

pub mod channels;
pub mod compensation;
pub mod error;
pub mod instrument;
pub mod linalg;
pub mod qmath;
pub mod scalar;
pub mod theory;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Mat2f = linalg::Mat2<f64>;
pub type Mat4f = linalg::Mat4<f64>;
pub type DensityMatrix = qmath::DensityMatrix4<f64>;
pub type QubitState = qmath::QubitState<f64>;
pub type Correlation = qmath::CorrelationT<f64>;
pub type Stokes = channels::StokesVec<f64>;
pub type Pdl = channels::PdlElement<f64>;
pub type Pmd = channels::PmdElement<f64>;
pub type Outcome = channels::ChannelOutcome<f64>;
pub type Kappa = theory::KappaValue<f64>;
pub type Plan = theory::CompensatorPlan<f64>;
