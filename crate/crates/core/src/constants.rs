//! CODATA 2018 constants in SI units.

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
pub const VACUUM_PERMEABILITY: f64 = 1.256_637_062_12e-6;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Impedance of free space, Z0 = mu0 c.
pub const VACUUM_IMPEDANCE: f64 = VACUUM_PERMEABILITY * SPEED_OF_LIGHT;

/// Temperature of the surrounding blackbody environment, K.
pub const AMBIENT_TEMPERATURE: f64 = 293.0;

/// Melting point of crystalline silicon, K.
pub const SILICON_MELTING_POINT: f64 = 1680.0;
