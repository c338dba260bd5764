//! Optical levitation traps built from tightly focused Gaussian, radially
//! polarised and azimuthally polarised vortex beams.
//!
//! The crate evaluates Mie scattering coefficients, focuses beams with the
//! Richards-Wolf angular spectrum, expands them in vector spherical
//! wavefunctions about the particle and integrates the far-field momentum
//! flux to get optical forces. On top of that sit trap analysis (equilibria,
//! depths, stiffness), photon-recoil heating and the steady-state bulk
//! temperature.

pub mod beam;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod mie;
pub mod recoil;
pub mod special_fn;
pub mod sweep;
pub mod thermal;
pub mod vector;
pub mod vswf;

pub use beam::{AngularSpectrum, BeamFamily, BeamSpec, FocalField};
pub use dynamics::{BeamConfig, ForceVector, ScanConfig, TrapModel, TrapReport};
pub use error::{Error, Result};
pub use mie::{Material, MieTable, ResonanceFamily, ResonanceList, SizeParameter};
pub use recoil::RecoilReport;
pub use thermal::{NkTable, ThermalReport};
pub use vswf::{FarScatteringAmplitude, VswfCoefficients};
