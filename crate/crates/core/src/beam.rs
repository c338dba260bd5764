//! Beam definitions: paraxial Hermite-Gauss superpositions and high-NA focal
//! fields from the Richards-Wolf angular spectrum.
//!
//! Time dependence is `exp(-i omega t)`. A focused field is the plane-wave
//! superposition `E(r) = \int_cone e(k) exp(i k k.r) dOmega` over the aperture
//! cone of the lens.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{SPEED_OF_LIGHT, VACUUM_IMPEDANCE, VACUUM_PERMITTIVITY};
use crate::error::{domain, Error, Result};
use crate::special_fn::{gauss_legendre_on, SphereQuadrature};
use crate::vector::{cnorm_sqr, cross_rc, norm, spherical_basis, CVec3, Vec3, CZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamFamily {
    /// Fundamental Gaussian, linearly polarised along x.
    GaussianLinearX,
    /// Radially polarised first-order vortex beam.
    Radial,
    /// Azimuthally polarised first-order vortex beam.
    Azimuthal,
}

impl BeamFamily {
    pub fn short_name(self) -> &'static str {
        match self {
            Self::GaussianLinearX => "gb",
            Self::Radial => "rvb",
            Self::Azimuthal => "avb",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gb" | "gaussian" | "gaussian_linear_x" => Some(Self::GaussianLinearX),
            "rvb" | "radial" => Some(Self::Radial),
            "avb" | "azimuthal" => Some(Self::Azimuthal),
            _ => None,
        }
    }
}

fn default_medium() -> f64 {
    1.0
}

fn default_sign() -> i8 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamSpec {
    pub family: BeamFamily,
    /// W
    pub power: f64,
    /// m
    pub wavelength_vacuum: f64,
    pub numerical_aperture: f64,
    /// +1 propagates along +z, -1 along -z.
    #[serde(default = "default_sign")]
    pub propagation_sign: i8,
    /// Hz, only meaningful for counterpropagating pairs.
    #[serde(default)]
    pub frequency_offset: f64,
    #[serde(default = "default_medium")]
    pub medium_index: f64,
}

impl BeamSpec {
    pub fn new(family: BeamFamily, power: f64, wavelength_vacuum: f64, numerical_aperture: f64) -> Result<Self> {
        let b = Self {
            family,
            power,
            wavelength_vacuum,
            numerical_aperture,
            propagation_sign: 1,
            frequency_offset: 0.0,
            medium_index: 1.0,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.numerical_aperture > 0.0 && self.numerical_aperture < self.medium_index.min(1.0)) {
            return domain(format!("numerical aperture must lie in (0, 1), got {}", self.numerical_aperture));
        }
        if !(self.power > 0.0) || !self.power.is_finite() {
            return domain(format!("beam power must be positive, got {}", self.power));
        }
        if !(self.wavelength_vacuum > 0.0) || !self.wavelength_vacuum.is_finite() {
            return domain(format!("wavelength must be positive, got {}", self.wavelength_vacuum));
        }
        if self.propagation_sign != 1 && self.propagation_sign != -1 {
            return domain("propagation sign must be +1 or -1");
        }
        if !(self.medium_index > 0.0) {
            return domain("medium index must be positive");
        }
        Ok(())
    }

    /// Wavenumber in the medium, rad/m.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI * self.medium_index / self.wavelength_vacuum
    }

    pub fn wavelength_medium(&self) -> f64 {
        self.wavelength_vacuum / self.medium_index
    }

    /// Optical angular frequency, rad/s.
    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.wavelength_vacuum
    }

    /// `lambda / (pi NA)`
    pub fn waist(&self) -> f64 {
        self.wavelength_vacuum / (PI * self.numerical_aperture)
    }

    /// `n_m lambda / (pi NA^2)`
    pub fn rayleigh_range(&self) -> f64 {
        self.medium_index * self.wavelength_vacuum / (PI * self.numerical_aperture.powi(2))
    }

    pub fn reversed(&self) -> Self {
        Self {
            propagation_sign: -self.propagation_sign,
            ..*self
        }
    }

    fn impedance(&self) -> f64 {
        VACUUM_IMPEDANCE / self.medium_index
    }
}

/// Paraxial beam built from normalised first-order Hermite-Gauss modes.
#[derive(Debug, Clone, Copy)]
pub struct ParaxialField {
    pub beam: BeamSpec,
    pub waist_w0: f64,
    pub rayleigh_range_zr: f64,
}

pub fn paraxial_field(beam: BeamSpec) -> Result<ParaxialField> {
    beam.validate()?;
    Ok(ParaxialField {
        beam,
        waist_w0: beam.waist(),
        rayleigh_range_zr: beam.rayleigh_range(),
    })
}

impl ParaxialField {
    pub fn waist_at(&self, z: f64) -> f64 {
        self.waist_w0 * (1.0 + (z / self.rayleigh_range_zr).powi(2)).sqrt()
    }

    /// Wavefront radius `z (1 + z_R^2 / z^2)`; infinite at the waist.
    pub fn wavefront_radius(&self, z: f64) -> f64 {
        if z == 0.0 {
            f64::INFINITY
        } else {
            z * (1.0 + (self.rayleigh_range_zr / z).powi(2))
        }
    }

    /// Gouy phase of a mode of total order `order` (0 for the fundamental).
    pub fn gouy_phase(&self, order: usize, z: f64) -> f64 {
        (order as f64 + 1.0) * (z / self.rayleigh_range_zr).atan()
    }

    /// Transverse field `(E_x, E_y)` in V/m.
    pub fn evaluate(&self, x: f64, y: f64, z: f64) -> [Complex64; 2] {
        let z = z * self.beam.propagation_sign as f64;
        let k = self.beam.wavenumber();
        let w = self.waist_at(z);
        let rho2 = x * x + y * y;
        let curvature = if z == 0.0 { 0.0 } else { k * rho2 / (2.0 * self.wavefront_radius(z)) };
        let envelope = (2.0 / PI).sqrt() / w * (-rho2 / (w * w)).exp();
        let e0 = (2.0 * self.beam.power / (VACUUM_PERMITTIVITY * SPEED_OF_LIGHT * self.beam.medium_index)).sqrt();
        let order = match self.beam.family {
            BeamFamily::GaussianLinearX => 0,
            _ => 1,
        };
        let phase = Complex64::from_polar(1.0, k * z + curvature - self.gouy_phase(order, z));
        let base = phase * (e0 * envelope);
        match self.beam.family {
            BeamFamily::GaussianLinearX => [base, Complex64::new(0.0, 0.0)],
            BeamFamily::Radial => {
                let u10 = base * (2.0 * x / w);
                let u01 = base * (2.0 * y / w);
                [u10 / 2f64.sqrt(), u01 / 2f64.sqrt()]
            }
            BeamFamily::Azimuthal => {
                let u10 = base * (2.0 * x / w);
                let u01 = base * (2.0 * y / w);
                [-u01 / 2f64.sqrt(), u10 / 2f64.sqrt()]
            }
        }
    }
}

/// Default input-waist to aperture-radius ratio.
pub const DEFAULT_FILL_FACTOR: f64 = 2.0;

const GRID_THETA: usize = 64;
const GRID_PHI: usize = 64;

/// Far-field (aperture) representation of a focused beam.
#[derive(Debug, Clone)]
pub struct AngularSpectrum {
    pub beam: BeamSpec,
    pub fill_factor: f64,
    /// Cone half-angle, `asin(NA / n_m)`.
    pub theta_max: f64,
    /// Scale of the plane-wave amplitudes, V/m per steradian.
    pub amplitude: f64,
    /// Product grid over the cone.
    pub grid: SphereQuadrature,
    /// Cartesian plane-wave amplitude at each grid node.
    pub e_far: Vec<CVec3>,
}

/// Focus `beam` through an aplanatic lens.
pub fn focus(beam: BeamSpec, fill_factor: f64) -> Result<AngularSpectrum> {
    beam.validate()?;
    if !(0.1..=10.0).contains(&fill_factor) {
        return domain(format!("fill factor must be in [0.1, 10], got {fill_factor}"));
    }
    let sin_max = beam.numerical_aperture / beam.medium_index;
    let theta_max = sin_max.asin();
    let mut pupil = AngularSpectrum {
        beam,
        fill_factor,
        theta_max,
        amplitude: 1.0,
        grid: SphereQuadrature::band(GRID_THETA, GRID_PHI, 0.0, 1.0),
        e_far: Vec::new(),
    };

    // phi-integrated |e|^2 of the unit-amplitude profile
    let (u, w) = gauss_legendre_on(200, theta_max.cos(), 1.0);
    let mut integral = 0.0;
    for (ui, wi) in u.iter().zip(&w) {
        let (a, b) = pupil.forward_profile(ui.acos());
        let ring = match beam.family {
            BeamFamily::GaussianLinearX => PI * (a * a + b * b),
            BeamFamily::Radial => 2.0 * PI * a * a,
            BeamFamily::Azimuthal => 2.0 * PI * b * b,
        };
        integral += wi * ring;
    }
    let k = beam.wavenumber();
    let flux = 0.5 / beam.impedance() * (2.0 * PI / k).powi(2) * integral;
    pupil.amplitude = (beam.power / flux).sqrt();

    let (lo, hi) = if beam.propagation_sign > 0 {
        (theta_max.cos(), 1.0)
    } else {
        (-1.0, -theta_max.cos())
    };
    pupil.grid = SphereQuadrature::band(GRID_THETA, GRID_PHI, lo, hi);
    pupil.e_far = pupil.grid.nodes.iter().map(|n| pupil.vector(n.theta, n.phi)).collect();
    Ok(pupil)
}

impl AngularSpectrum {
    pub fn wavenumber(&self) -> f64 {
        self.beam.wavenumber()
    }

    /// Unit-amplitude `(theta, phi)` radial envelopes of the forward beam; the
    /// phi dependence is applied in [`Self::components`].
    fn forward_profile(&self, theta: f64) -> (f64, f64) {
        if theta > self.theta_max {
            return (0.0, 0.0);
        }
        let (s, c) = theta.sin_cos();
        let na = self.beam.numerical_aperture / self.beam.medium_index;
        let rho = s / (self.fill_factor * na);
        let env = c.sqrt() * (-rho * rho).exp();
        match self.beam.family {
            BeamFamily::GaussianLinearX => (env, env),
            BeamFamily::Radial | BeamFamily::Azimuthal => (env * rho, env * rho),
        }
    }

    /// Spherical components `(e_theta, e_phi)` of the plane-wave amplitude travelling along `(theta, phi)`.
    pub fn components(&self, theta: f64, phi: f64) -> (f64, f64) {
        let back = self.beam.propagation_sign < 0;
        let t = if back { PI - theta } else { theta };
        if !(0.0..=self.theta_max).contains(&t) {
            return (0.0, 0.0);
        }
        let (a, b) = self.forward_profile(t);
        let (e_t, e_p) = match self.beam.family {
            BeamFamily::GaussianLinearX => {
                let (sp, cp) = phi.sin_cos();
                (a * cp, -b * sp)
            }
            BeamFamily::Radial => (a, 0.0),
            BeamFamily::Azimuthal => (0.0, b),
        };
        let s = self.amplitude;
        if back {
            // mirror image of the forward beam through z = 0
            (-s * e_t, s * e_p)
        } else {
            (s * e_t, s * e_p)
        }
    }

    /// Cartesian plane-wave amplitude along `(theta, phi)`.
    pub fn vector(&self, theta: f64, phi: f64) -> CVec3 {
        let (et, ep) = self.components(theta, phi);
        let (_, th, ph) = spherical_basis(theta, phi);
        [
            Complex64::new(et * th[0] + ep * ph[0], 0.0),
            Complex64::new(et * th[1] + ep * ph[1], 0.0),
            Complex64::new(et * th[2] + ep * ph[2], 0.0),
        ]
    }

    /// `cos(theta)` interval occupied by the cone.
    pub fn cos_range(&self) -> (f64, f64) {
        if self.beam.propagation_sign > 0 {
            (self.theta_max.cos(), 1.0)
        } else {
            (-1.0, -self.theta_max.cos())
        }
    }

    /// Power through the cone from the stored grid, W.
    pub fn grid_power(&self) -> f64 {
        let k = self.wavenumber();
        let s: f64 = self
            .grid
            .nodes
            .iter()
            .zip(&self.e_far)
            .map(|(n, e)| n.weight * cnorm_sqr(e))
            .sum();
        0.5 / self.beam.impedance() * (2.0 * PI / k).powi(2) * s
    }

    /// Power carried by far-field amplitudes `A` with `E ~ A exp(ikr)/(kr)`
    /// for a given `sum |A|^2 dOmega`.
    pub fn flux_scale(&self) -> f64 {
        let k = self.wavenumber();
        0.5 / self.beam.impedance() / (k * k)
    }

    /// Largest radius from focus at which focal fields are evaluated, m.
    pub fn validated_radius(&self) -> f64 {
        50.0 * self.beam.wavelength_medium()
    }

    fn field_grid(&self, point: Vec3) -> SphereQuadrature {
        let k = self.wavenumber();
        let r = norm(point);
        let rho = point[0].hypot(point[1]);
        let nt = (k * r).ceil() as usize + 48;
        let np = 2 * (k * rho * self.theta_max.sin()).ceil() as usize + 48;
        let (lo, hi) = self.cos_range();
        SphereQuadrature::band(nt, np, lo, hi)
    }

    fn check_point(&self, point: Vec3) -> Result<()> {
        if !point.iter().all(|c| c.is_finite()) {
            return domain("evaluation point must be finite");
        }
        if norm(point) >= self.validated_radius() {
            return Err(Error::OutOfRange(format!(
                "point {:?} lies outside the validated focal region (|r| < 50 wavelengths)",
                point
            )));
        }
        Ok(())
    }

    /// Focal `(E, H)` at `point` using an explicit quadrature grid.
    pub fn field_with_grid(&self, point: Vec3, grid: &SphereQuadrature) -> (CVec3, CVec3) {
        let k = self.wavenumber();
        let z_inv = 1.0 / self.beam.impedance();
        let mut e = CZERO;
        let mut h = CZERO;
        for node in &grid.nodes {
            let (et, ep) = self.components(node.theta, node.phi);
            if et == 0.0 && ep == 0.0 {
                continue;
            }
            let (rh, th, ph) = spherical_basis(node.theta, node.phi);
            let phase = Complex64::from_polar(node.weight, k * (rh[0] * point[0] + rh[1] * point[1] + rh[2] * point[2]));
            for i in 0..3 {
                // k x (e_t theta + e_p phi) = e_t phi - e_p theta
                e[i] += phase * (et * th[i] + ep * ph[i]);
                h[i] += phase * (z_inv * (et * ph[i] - ep * th[i]));
            }
        }
        (e, h)
    }

    /// Focal `(E, H)` in V/m and A/m.
    pub fn field(&self, point: Vec3) -> Result<(CVec3, CVec3)> {
        self.check_point(point)?;
        Ok(self.field_with_grid(point, &self.field_grid(point)))
    }

    /// Spatial derivatives `d E_j / d x_i`, indexed `[i][j]`.
    pub fn field_gradient(&self, point: Vec3) -> Result<[CVec3; 3]> {
        self.check_point(point)?;
        let grid = self.field_grid(point);
        let k = self.wavenumber();
        let mut g = [CZERO; 3];
        for node in &grid.nodes {
            let (et, ep) = self.components(node.theta, node.phi);
            if et == 0.0 && ep == 0.0 {
                continue;
            }
            let (rh, th, ph) = spherical_basis(node.theta, node.phi);
            let phase = Complex64::from_polar(node.weight, k * (rh[0] * point[0] + rh[1] * point[1] + rh[2] * point[2]))
                * Complex64::new(0.0, k);
            for i in 0..3 {
                for j in 0..3 {
                    g[i][j] += phase * (rh[i] * (et * th[j] + ep * ph[j]));
                }
            }
        }
        Ok(g)
    }

    /// Time-averaged intensity `|S|` proxy `(n_m eps0 c / 2) |E|^2`, W/m^2.
    pub fn intensity(&self, point: Vec3) -> Result<f64> {
        let (e, _) = self.field(point)?;
        Ok(0.5 / self.beam.impedance() * cnorm_sqr(&e))
    }

    /// Time-averaged Poynting vector `Re(E x H*) / 2`.
    pub fn poynting(&self, point: Vec3) -> Result<Vec3> {
        let (e, h) = self.field(point)?;
        let hc = [h[0].conj(), h[1].conj(), h[2].conj()];
        Ok([
            0.5 * (e[1] * hc[2] - e[2] * hc[1]).re,
            0.5 * (e[2] * hc[0] - e[0] * hc[2]).re,
            0.5 * (e[0] * hc[1] - e[1] * hc[0]).re,
        ])
    }
}

/// Focal field evaluator bound to one angular spectrum.
#[derive(Debug, Clone)]
pub struct FocalField {
    pub spectrum: AngularSpectrum,
}

impl FocalField {
    pub fn new(spectrum: AngularSpectrum) -> Self {
        Self { spectrum }
    }

    pub fn evaluate(&self, point: Vec3) -> Result<(CVec3, CVec3)> {
        self.spectrum.field(point)
    }
}

pub fn focal_field(spectrum: &AngularSpectrum, point: Vec3) -> Result<(CVec3, CVec3)> {
    spectrum.field(point)
}

/// `k_hat x e` for a real direction, used by plane-wave magnetic fields.
pub fn plane_wave_h(direction: Vec3, e: CVec3, impedance: f64) -> CVec3 {
    let c = cross_rc(direction, e);
    [c[0] / impedance, c[1] / impedance, c[2] / impedance]
}
