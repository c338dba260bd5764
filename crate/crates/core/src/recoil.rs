//! Photon-recoil heating in the dipole limit and for arbitrary sphere sizes.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beam::AngularSpectrum;
use crate::constants::{HBAR, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY};
use crate::dynamics::scattering_state;
use crate::error::{domain, Error, Result};
use crate::mie::MieTable;
use crate::special_fn::{sphere_quadrature, SphereQuadrature};
use crate::vector::{dot, norm, Vec3};
use crate::vswf::far_field;

/// Size parameter above which the dipole formula is flagged as unreliable.
pub const RAYLEIGH_LIMIT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Rayleigh,
    Mie,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoilReport {
    pub kr: f64,
    pub wavelength_vacuum: f64,
    pub mass: f64,
    /// Single-photon recoil energy `hbar^2 k^2 / 2m`, J.
    pub epsilon: f64,
    /// Mean recoil energy per scattering event along each axis, in units of
    /// `epsilon`. Only set in the dipole limit.
    pub energy_per_event: Option<[f64; 3]>,
    /// W
    pub edot: [f64; 3],
    /// quanta/s; NaN where the frequency is not positive.
    pub gamma: [f64; 3],
    /// rad/s
    pub frequencies: [f64; 3],
    pub regime: Regime,
    /// Dipole formula used beyond [`RAYLEIGH_LIMIT`].
    pub outside_regime: bool,
}

fn recoil_energy(wavenumber: f64, mass: f64) -> f64 {
    HBAR * HBAR * wavenumber * wavenumber / (2.0 * mass)
}

fn quanta_rates(edot: [f64; 3], frequencies: [f64; 3]) -> [f64; 3] {
    let mut g = [f64::NAN; 3];
    for j in 0..3 {
        if frequencies[j] > 0.0 {
            g[j] = edot[j] / (HBAR * frequencies[j]);
        }
    }
    g
}

/// Mean of `(k_in - k_s)_j^2` over the radiation pattern of a dipole along
/// `polarization` illuminated along `incident`, by quadrature.
pub fn dipole_partition(polarization: Vec3, incident: Vec3) -> Result<[f64; 3]> {
    let (pn, kn) = (norm(polarization), norm(incident));
    if !(pn > 0.0 && kn > 0.0) {
        return domain("polarization and incident direction must be nonzero");
    }
    let p = polarization.map(|c| c / pn);
    let ki = incident.map(|c| c / kn);
    let grid = sphere_quadrature(16, 16)?;
    let pattern = 3.0 / (8.0 * std::f64::consts::PI);
    let mut out = [0.0; 3];
    for node in &grid.nodes {
        let s = node.direction();
        let w = node.weight * pattern * (1.0 - dot(p, s).powi(2));
        for j in 0..3 {
            out[j] += w * (ki[j] - s[j]).powi(2);
        }
    }
    Ok(out)
}

/// Dipole-limit recoil heating for a sphere in light of intensity
/// `intensity` (W/m^2) polarised along `polarization` and travelling along
/// `incident`.
pub fn rayleigh_recoil(
    intensity: f64,
    mie: &MieTable,
    mass: f64,
    polarization: Vec3,
    incident: Vec3,
    frequencies: [f64; 3],
) -> Result<RecoilReport> {
    if !(mass > 0.0) {
        return domain(format!("mass must be positive, got {mass}"));
    }
    if !(intensity >= 0.0) {
        return domain(format!("intensity must be non-negative, got {intensity}"));
    }
    let k = mie.x.wavenumber();
    let omega = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / mie.x.wavelength_vacuum;
    let epsilon = recoil_energy(k, mass);
    let share = dipole_partition(polarization, incident)?;
    let rate = intensity * mie.sigma_sca / (HBAR * omega);
    let edot = share.map(|s| rate * s * epsilon);
    Ok(RecoilReport {
        kr: mie.x.value,
        wavelength_vacuum: mie.x.wavelength_vacuum,
        mass,
        epsilon,
        energy_per_event: Some(share),
        edot,
        gamma: quanta_rates(edot, frequencies),
        frequencies,
        regime: Regime::Rayleigh,
        outside_regime: mie.x.value > RAYLEIGH_LIMIT,
    })
}

/// Default displacement step for the amplitude derivative, in wavelengths.
pub const DISPLACEMENT_STEP: f64 = 1.0 / 2000.0;
/// Largest accepted relative change of the heating rates on halving the step.
pub const STEP_TOLERANCE: f64 = 0.01;

/// Lab-frame far-field scattering amplitude of the sphere at `position`.
fn lab_amplitude(spectrum: &AngularSpectrum, mie: &MieTable, position: Vec3, grid: &SphereQuadrature) -> Result<Vec<[Complex64; 3]>> {
    let state = scattering_state(spectrum, mie, position)?;
    let far = far_field(&state, grid)?;
    let k = spectrum.wavenumber();
    Ok((0..grid.nodes.len())
        .map(|i| {
            let shift = Complex64::from_polar(1.0, -k * dot(grid.nodes[i].direction(), position));
            far.cartesian(i).map(|c| c * shift)
        })
        .collect())
}

fn edot_with_step(
    spectrum: &AngularSpectrum,
    mie: &MieTable,
    position: Vec3,
    mass: f64,
    step: f64,
    grid: &SphereQuadrature,
) -> Result<[f64; 3]> {
    let n_m = spectrum.beam.medium_index;
    let omega = spectrum.beam.angular_frequency();
    let pre = VACUUM_PERMITTIVITY * SPEED_OF_LIGHT * n_m * HBAR / (4.0 * mass * omega);
    let out: Vec<f64> = (0..3)
        .into_par_iter()
        .map(|j| {
            let mut a = position;
            let mut b = position;
            a[j] += step;
            b[j] -= step;
            let fa = lab_amplitude(spectrum, mie, a, grid)?;
            let fb = lab_amplitude(spectrum, mie, b, grid)?;
            let mut s = 0.0;
            for (i, node) in grid.nodes.iter().enumerate() {
                let d: f64 = (0..3).map(|c| ((fa[i][c] - fb[i][c]) / (2.0 * step)).norm_sqr()).sum();
                s += node.weight * d;
            }
            Ok(pre * s)
        })
        .collect::<Result<_>>()?;
    Ok([out[0], out[1], out[2]])
}

/// Recoil heating from the displacement derivative of the scattered far
/// field, for a sphere at `equilibrium` with trap frequencies `frequencies`.
pub fn mie_recoil(
    spectrum: &AngularSpectrum,
    mie: &MieTable,
    equilibrium: Vec3,
    mass: f64,
    frequencies: [f64; 3],
) -> Result<RecoilReport> {
    mie_recoil_with_step(spectrum, mie, equilibrium, mass, frequencies, DISPLACEMENT_STEP)
}

/// As [`mie_recoil`] with an explicit displacement step in wavelengths.
pub fn mie_recoil_with_step(
    spectrum: &AngularSpectrum,
    mie: &MieTable,
    equilibrium: Vec3,
    mass: f64,
    frequencies: [f64; 3],
    step_wavelengths: f64,
) -> Result<RecoilReport> {
    if !(mass > 0.0) {
        return domain(format!("mass must be positive, got {mass}"));
    }
    if !(step_wavelengths > 0.0) {
        return domain("displacement step must be positive");
    }
    let k = spectrum.wavenumber();
    let step = step_wavelengths * spectrum.beam.wavelength_medium();
    let band = mie.n_max + (k * (norm(equilibrium) + 2.0 * step)).ceil() as usize + 16;
    let grid = sphere_quadrature(band, 2 * band + 2)?;
    let coarse = edot_with_step(spectrum, mie, equilibrium, mass, step, &grid)?;
    let fine = edot_with_step(spectrum, mie, equilibrium, mass, 0.5 * step, &grid)?;
    let scale = fine.iter().cloned().fold(0.0, f64::max);
    for j in 0..3 {
        let diff = (coarse[j] - fine[j]).abs();
        if diff > STEP_TOLERANCE * fine[j].abs() && diff > 1e-9 * scale {
            return Err(Error::StepSize(format!(
                "recoil rate along axis {j} changes by {:.3e} relative on halving the step",
                diff / fine[j].abs()
            )));
        }
    }
    Ok(RecoilReport {
        kr: mie.x.value,
        wavelength_vacuum: spectrum.beam.wavelength_vacuum,
        mass,
        epsilon: recoil_energy(k, mass),
        energy_per_event: None,
        edot: fine,
        gamma: quanta_rates(fine, frequencies),
        frequencies,
        regime: Regime::Mie,
        outside_regime: false,
    })
}

/// Per-axis `gamma_a / gamma_b`; `None` where the ratio is undefined.
pub fn recoil_ratio(a: &RecoilReport, b: &RecoilReport) -> Result<[Option<f64>; 3]> {
    let (la, lb) = (a.wavelength_vacuum, b.wavelength_vacuum);
    if (la - lb).abs() > 1e-12 * la.max(lb) {
        return domain(format!("recoil reports at different wavelengths: {la} vs {lb}"));
    }
    let mut r = [None; 3];
    for j in 0..3 {
        let (x, y) = (a.gamma[j], b.gamma[j]);
        if x.is_finite() && y.is_finite() && y != 0.0 {
            r[j] = Some(x / y);
        }
    }
    Ok(r)
}
