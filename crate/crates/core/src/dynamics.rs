//! Optical forces, potentials along principal axes, equilibria, trap depths
//! and oscillation frequencies.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beam::{focus, AngularSpectrum, BeamFamily, BeamSpec, DEFAULT_FILL_FACTOR};
use crate::error::{domain, Error, Result};
use crate::mie::{mass_of, mie_coefficients, Material, MieTable, SizeParameter};
use crate::vector::{mirror_z, Vec3};
use crate::vswf::{beam_shape_coefficients, minimum_order, scatter, VswfCoefficients};

fn default_fill() -> f64 {
    DEFAULT_FILL_FACTOR
}

/// A single focused beam, or two identical beams counterpropagating along z
/// that are detuned far enough not to interfere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamConfig {
    pub beam: BeamSpec,
    #[serde(default)]
    pub counterpropagating: bool,
    #[serde(default = "default_fill")]
    pub fill_factor: f64,
}

impl BeamConfig {
    pub fn single(beam: BeamSpec) -> Self {
        Self {
            beam,
            counterpropagating: false,
            fill_factor: DEFAULT_FILL_FACTOR,
        }
    }

    pub fn counterpropagating(beam: BeamSpec) -> Self {
        Self {
            beam,
            counterpropagating: true,
            fill_factor: DEFAULT_FILL_FACTOR,
        }
    }

    pub fn id(&self) -> String {
        let base = self.beam.family.short_name();
        if self.counterpropagating {
            format!("cp-{base}")
        } else {
            base.to_string()
        }
    }
}

/// Scan windows and tolerances, in units of the wavelength in the medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub axial_half_width: f64,
    pub transverse_half_width: f64,
    pub samples: usize,
    pub root_tolerance: f64,
    pub stiffness_step: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            axial_half_width: 6.0,
            transverse_half_width: 2.0,
            samples: 401,
            root_tolerance: 1e-4,
            stiffness_step: 1.0 / 200.0,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 201 {
            return domain(format!("profiles need at least 201 samples, got {}", self.samples));
        }
        if !(self.axial_half_width > 0.0 && self.transverse_half_width > 0.0) {
            return domain("scan windows must be positive");
        }
        if !(self.root_tolerance > 0.0 && self.stiffness_step > 0.0) {
            return domain("root tolerance and stiffness step must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForceVector {
    /// N
    pub force: Vec3,
    pub position: Vec3,
    pub beam_id: String,
}

fn check_force(f: Vec3, position: Vec3) -> Result<Vec3> {
    if f.iter().all(|c| c.is_finite()) {
        Ok(f)
    } else {
        Err(Error::NonFinite(format!("force at {position:?} is not finite")))
    }
}

/// Scattered expansion for a sphere of radius `radius` at `position`.
pub fn scattering_state(
    spectrum: &AngularSpectrum,
    mie: &MieTable,
    position: Vec3,
) -> Result<VswfCoefficients> {
    let n = minimum_order(spectrum.wavenumber(), mie.x.radius, position);
    let inc = beam_shape_coefficients(spectrum, position, n)?;
    scatter(&inc, mie)
}

/// Force of a single focused beam on the sphere at `position` (relative to focus).
pub fn optical_force(spectrum: &AngularSpectrum, mie: &MieTable, position: Vec3) -> Result<ForceVector> {
    let f = scattering_state(spectrum, mie, position)?.force();
    Ok(ForceVector {
        force: check_force(f, position)?,
        position,
        beam_id: spectrum.beam.family.short_name().to_string(),
    })
}

/// Force of the beam plus its mirror image through `z = 0`, added incoherently.
pub fn counterprop_force(spectrum: &AngularSpectrum, mie: &MieTable, position: Vec3) -> Result<ForceVector> {
    let a = optical_force(spectrum, mie, position)?.force;
    let b = mirror_z(optical_force(spectrum, mie, mirror_z(position))?.force);
    Ok(ForceVector {
        force: [a[0] + b[0], a[1] + b[1], a[2] + b[2]],
        position,
        beam_id: format!("cp-{}", spectrum.beam.family.short_name()),
    })
}

/// Everything needed to evaluate forces on one sphere in one beam configuration.
#[derive(Debug, Clone)]
pub struct TrapModel {
    pub config: BeamConfig,
    pub spectrum: AngularSpectrum,
    pub mie: MieTable,
    pub material: Material,
    pub radius: f64,
    pub mass: f64,
}

impl TrapModel {
    pub fn new(config: BeamConfig, material: Material, radius: f64) -> Result<Self> {
        material.validate()?;
        let spectrum = focus(config.beam, config.fill_factor)?;
        let x = SizeParameter::from_radius(radius, config.beam.wavelength_vacuum, config.beam.medium_index)?;
        let m = material.refractive_index / config.beam.medium_index;
        let mie = mie_coefficients(&x, m, None)?;
        let mass = mass_of(radius, material.density)?;
        Ok(Self {
            config,
            spectrum,
            mie,
            material,
            radius,
            mass,
        })
    }

    pub fn from_size_parameter(config: BeamConfig, material: Material, kr: f64) -> Result<Self> {
        let radius = SizeParameter::from_value(kr, config.beam.wavelength_vacuum, config.beam.medium_index)?.radius;
        Self::new(config, material, radius)
    }

    pub fn size_parameter(&self) -> f64 {
        self.mie.x.value
    }

    pub fn wavelength(&self) -> f64 {
        self.config.beam.wavelength_medium()
    }

    pub fn force(&self, position: Vec3) -> Result<Vec3> {
        if self.config.counterpropagating {
            Ok(counterprop_force(&self.spectrum, &self.mie, position)?.force)
        } else {
            Ok(optical_force(&self.spectrum, &self.mie, position)?.force)
        }
    }

    pub fn force_vector(&self, position: Vec3) -> Result<ForceVector> {
        Ok(ForceVector {
            force: self.force(position)?,
            position,
            beam_id: self.config.id(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Self::X => 0,
            Self::Y => 1,
            Self::Z => 2,
        }
    }
}

/// Potential sampled along a line parallel to one axis.
#[derive(Debug, Clone, Serialize)]
pub struct PotentialProfile {
    pub axis: Axis,
    pub through: Vec3,
    /// Coordinate along the axis, m.
    pub coords: Vec<f64>,
    /// Force component along the axis, N.
    pub force: Vec<f64>,
    /// J, zero at the minimum of the line.
    pub potential: Vec<f64>,
}

impl PotentialProfile {
    fn from_samples(axis: Axis, through: Vec3, coords: Vec<f64>, force: Vec<f64>) -> Self {
        let mut potential = vec![0.0; coords.len()];
        for i in 1..coords.len() {
            potential[i] = potential[i - 1] - 0.5 * (force[i] + force[i - 1]) * (coords[i] - coords[i - 1]);
        }
        let min = potential.iter().cloned().fold(f64::INFINITY, f64::min);
        for u in &mut potential {
            *u -= min;
        }
        Self {
            axis,
            through,
            coords,
            force,
            potential,
        }
    }

    fn bracket(&self, s: f64) -> usize {
        let n = self.coords.len();
        match self.coords.partition_point(|&c| c <= s) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        }
    }

    /// Potential at an arbitrary coordinate, integrating the linearly
    /// interpolated force from the nearest sample.
    pub fn potential_at(&self, s: f64) -> f64 {
        let i = self.bracket(s);
        let (c0, c1) = (self.coords[i], self.coords[i + 1]);
        let (f0, f1) = (self.force[i], self.force[i + 1]);
        let t = s - c0;
        let slope = (f1 - f0) / (c1 - c0);
        self.potential[i] - (f0 * t + 0.5 * slope * t * t)
    }

    fn crossing(&self, i: usize) -> f64 {
        let (f0, f1) = (self.force[i], self.force[i + 1]);
        if f0 == f1 {
            return self.coords[i];
        }
        self.coords[i] + f0 / (f0 - f1) * (self.coords[i + 1] - self.coords[i])
    }
}

/// Sample `force` along `axis` through `through` over `window` and integrate.
pub fn potential_profile<F>(force: F, axis: Axis, through: Vec3, window: (f64, f64), samples: usize) -> Result<PotentialProfile>
where
    F: Fn(Vec3) -> Result<Vec3> + Sync,
{
    if samples < 201 {
        return domain(format!("profiles need at least 201 samples, got {samples}"));
    }
    if !(window.0 < window.1) {
        return domain("profile window must be increasing");
    }
    let a = axis.index();
    let coords: Vec<f64> = (0..samples)
        .map(|i| window.0 + (window.1 - window.0) * i as f64 / (samples - 1) as f64)
        .collect();
    let force: Vec<f64> = coords
        .par_iter()
        .map(|&s| {
            let mut p = through;
            p[a] = s;
            let f = force(p)?;
            if !f[a].is_finite() {
                return Err(Error::NonFinite(format!("force sample at {p:?}")));
            }
            Ok(f[a])
        })
        .collect::<Result<_>>()?;
    Ok(PotentialProfile::from_samples(axis, through, coords, force))
}

/// Profile of a transverse axis through an on-axis point, sampling one half
/// and using the mirror symmetry of every supported beam about the x = 0 and
/// y = 0 planes.
fn symmetric_transverse_profile(model: &TrapModel, axis: Axis, z: f64, half_width: f64, samples: usize) -> Result<PotentialProfile> {
    let a = axis.index();
    let half = samples / 2;
    let step = half_width / half as f64;
    let positive: Vec<f64> = (0..=half)
        .into_par_iter()
        .map(|i| {
            if i == 0 {
                return Ok(0.0);
            }
            let mut p = [0.0, 0.0, z];
            p[a] = i as f64 * step;
            Ok(model.force(p)?[a])
        })
        .collect::<Result<_>>()?;
    let mut coords = Vec::with_capacity(2 * half + 1);
    let mut force = Vec::with_capacity(2 * half + 1);
    for i in (1..=half).rev() {
        coords.push(-(i as f64) * step);
        force.push(-positive[i]);
    }
    for (i, f) in positive.iter().enumerate() {
        coords.push(i as f64 * step);
        force.push(*f);
    }
    Ok(PotentialProfile::from_samples(axis, [0.0, 0.0, z], coords, force))
}

#[derive(Debug, Clone, Serialize)]
pub struct TrapReport {
    pub material: String,
    pub beam_id: String,
    pub family: BeamFamily,
    pub kr: f64,
    pub radius: f64,
    pub mass: f64,
    pub wavelength_vacuum: f64,
    /// Stable axial equilibrium, m.
    pub z_eq: Option<f64>,
    /// Point at which depths and stiffness were evaluated.
    pub evaluation_point: Vec3,
    /// Signed barrier heights along x, y, z, J; negative means no trap.
    pub depth: [f64; 3],
    /// N/m
    pub stiffness: [f64; 3],
    /// rad/s; NaN where the stiffness is not positive.
    pub frequencies: [f64; 3],
    pub trapped: bool,
    pub scan: ScanConfig,
    #[serde(skip)]
    pub axial_profile: PotentialProfile,
    #[serde(skip)]
    pub transverse_profiles: [PotentialProfile; 2],
}

/// Barrier from `centre` (a local minimum) to the lower of the two escape
/// points along a profile; the force is restoring near `centre`.
fn two_sided_barrier(p: &PotentialProfile, bracket: usize, centre: f64) -> f64 {
    let n = p.coords.len();
    let u0 = p.potential_at(centre);
    let mut j = bracket;
    while j > 0 && p.force[j - 1] > 0.0 {
        j -= 1;
    }
    let left = if j == 0 { p.potential[0] } else { p.potential_at(p.crossing(j - 1)) };
    let mut j = bracket + 1;
    while j + 1 < n && p.force[j + 1] < 0.0 {
        j += 1;
    }
    let right = if j + 1 >= n { p.potential[n - 1] } else { p.potential_at(p.crossing(j)) };
    left.min(right) - u0
}

/// Transverse barrier about the centre sample of a symmetric profile.
fn transverse_barrier(p: &PotentialProfile) -> f64 {
    let n = p.coords.len();
    let c = n / 2;
    let u0 = p.potential[c];
    let side = |dir: i64| -> f64 {
        let at = |i: i64| (c as i64 + dir * i) as usize;
        let outward = |i: i64| p.force[at(i)] * dir as f64;
        let last = c as i64;
        if outward(1) > 0.0 {
            let min = (1..=last).map(|i| p.potential[at(i)]).fold(f64::INFINITY, f64::min);
            return -(u0 - min);
        }
        let mut i = 1;
        while i < last && outward(i + 1) <= 0.0 {
            i += 1;
        }
        let peak = if i >= last {
            p.potential[at(last)]
        } else {
            let (a, b) = if dir > 0 { (at(i), at(i + 1)) } else { (at(i + 1), at(i)) };
            p.potential_at(p.crossing(a.min(b)))
        };
        peak - u0
    };
    side(1).min(side(-1))
}

fn bisect_equilibrium(model: &TrapModel, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut f_lo = model.force([0.0, 0.0, lo])?[2];
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f = model.force([0.0, 0.0, mid])?[2];
        if (f > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Stiffness `-dF_j/dx_j` by central differences.
pub fn stiffness(model: &TrapModel, point: Vec3, step: f64) -> Result<[f64; 3]> {
    let k: Vec<f64> = (0..3)
        .into_par_iter()
        .map(|j| {
            let mut a = point;
            let mut b = point;
            a[j] += step;
            b[j] -= step;
            Ok(-(model.force(a)?[j] - model.force(b)?[j]) / (2.0 * step))
        })
        .collect::<Result<_>>()?;
    Ok([k[0], k[1], k[2]])
}

pub fn frequencies_from(stiffness: [f64; 3], mass: f64) -> [f64; 3] {
    stiffness.map(|k| if k > 0.0 { (k / mass).sqrt() } else { f64::NAN })
}

/// Full trap analysis along the principal axes.
pub fn trap_report(model: &TrapModel, scan: &ScanConfig) -> Result<TrapReport> {
    scan.validate()?;
    let lambda = model.wavelength();
    let zw = scan.axial_half_width * lambda;
    let axial = potential_profile(|p| model.force(p), Axis::Z, [0.0; 3], (-zw, zw), scan.samples)?;

    let mut best: Option<(f64, f64)> = None;
    for i in 0..axial.coords.len() - 1 {
        if axial.force[i] > 0.0 && axial.force[i + 1] <= 0.0 {
            let z = bisect_equilibrium(model, axial.coords[i], axial.coords[i + 1], scan.root_tolerance * lambda)?;
            let depth = two_sided_barrier(&axial, i, z);
            if best.is_none_or(|(_, d)| depth > d) {
                best = Some((z, depth));
            }
        }
    }

    let (z_eval, axial_depth) = match best {
        Some((z, d)) => (z, d),
        None => {
            let u0 = axial.potential_at(0.0);
            let downstream = axial
                .coords
                .iter()
                .zip(&axial.potential)
                .filter(|(c, _)| **c >= 0.0)
                .map(|(_, u)| *u)
                .fold(u0, f64::min);
            (0.0, -(u0 - downstream))
        }
    };

    let tw = scan.transverse_half_width * lambda;
    let px = symmetric_transverse_profile(model, Axis::X, z_eval, tw, scan.samples)?;
    let symmetric = matches!(model.config.beam.family, BeamFamily::Radial | BeamFamily::Azimuthal);
    let py = if symmetric {
        PotentialProfile { axis: Axis::Y, ..px.clone() }
    } else {
        symmetric_transverse_profile(model, Axis::Y, z_eval, tw, scan.samples)?
    };
    let depth = [transverse_barrier(&px), transverse_barrier(&py), axial_depth];
    let point = [0.0, 0.0, z_eval];
    let k = stiffness(model, point, scan.stiffness_step * lambda)?;
    let trapped = best.is_some() && depth.iter().all(|d| *d > 0.0);

    Ok(TrapReport {
        material: model.material.name.clone(),
        beam_id: model.config.id(),
        family: model.config.beam.family,
        kr: model.size_parameter(),
        radius: model.radius,
        mass: model.mass,
        wavelength_vacuum: model.config.beam.wavelength_vacuum,
        z_eq: best.map(|(z, _)| z),
        evaluation_point: point,
        depth,
        stiffness: k,
        frequencies: frequencies_from(k, model.mass),
        trapped,
        scan: *scan,
        axial_profile: axial,
        transverse_profiles: [px, py],
    })
}

/// Time-averaged force on a point dipole of polarizability `alpha` (SI,
/// `p = alpha E`): `F_i = Re(sum_j p_j dE_j*/dx_i) / 2`.
pub fn dipole_force(spectrum: &AngularSpectrum, alpha: Complex64, position: Vec3) -> Result<Vec3> {
    let (e, _) = spectrum.field(position)?;
    let g = spectrum.field_gradient(position)?;
    let mut f = [0.0; 3];
    for i in 0..3 {
        let mut s = Complex64::new(0.0, 0.0);
        for j in 0..3 {
            s += alpha * e[j] * g[i][j].conj();
        }
        f[i] = 0.5 * s.re;
    }
    Ok(f)
}

/// Clausius-Mossotti polarizability with the radiative-reaction correction.
pub fn radiative_polarizability(radius: f64, relative_index: Complex64, wavenumber: f64) -> Complex64 {
    use crate::constants::VACUUM_PERMITTIVITY;
    use std::f64::consts::PI;
    let m2 = relative_index * relative_index;
    let a0 = 4.0 * PI * VACUUM_PERMITTIVITY * radius.powi(3) * (m2 - 1.0) / (m2 + 2.0);
    a0 / (1.0 - Complex64::i() * wavenumber.powi(3) * a0 / (6.0 * PI * VACUUM_PERMITTIVITY))
}
