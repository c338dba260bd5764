//! Vector spherical wavefunction expansions of focused beams about a moving
//! particle, the sphere response, far-field amplitudes and momentum flux.
//!
//! Regular waves are `M = j_n(kr) C_nm`,
//! `N = sqrt(n(n+1)) j_n/(kr) Y_nm r_hat + [(kr j_n)'/(kr)] B_nm`, and outgoing
//! waves replace `j_n` by `h_n^(1)`. Far fields are written `E ~ A exp(ikr)/(kr)`
//! for outgoing and `A exp(-ikr)/(kr)` for incoming parts.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::beam::AngularSpectrum;
use crate::constants::SPEED_OF_LIGHT;
use crate::error::{domain, Error, Result};
use crate::mie::MieTable;
use crate::special_fn::{gauss_legendre, gauss_legendre_on, spherical_bessel_j, SphereQuadrature, VshRow};
use crate::vector::{angles, norm, spherical_basis, CVec3, Vec3, CZERO};

#[inline]
pub(crate) fn ipow(n: i64) -> Complex64 {
    match n.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Flat index of `(n, m)` with `n >= 1`, `|m| <= n`.
#[inline]
pub fn mode_index(n: usize, m: i64) -> usize {
    idx(n, m)
}

#[inline]
fn idx(n: usize, m: i64) -> usize {
    ((n * n + n) as i64 + m - 1) as usize
}

/// Smallest multipole order accepted for an expansion displaced by `|origin|`.
pub fn minimum_order(wavenumber: f64, radius: f64, origin: Vec3) -> usize {
    (wavenumber * (radius + norm(origin))).ceil() as usize + 8
}

/// Incident (regular) and scattered (outgoing) multipole amplitudes about a particle.
#[derive(Debug, Clone)]
pub struct VswfCoefficients {
    /// Particle position relative to the focus, m.
    pub origin: Vec3,
    pub wavenumber: f64,
    pub n_max: usize,
    /// Largest `|m|` carrying non-negligible amplitude.
    pub m_max: usize,
    /// Regular `N` wave amplitudes, coupling to `a_n`.
    pub electric: Vec<Complex64>,
    /// Regular `M` wave amplitudes, coupling to `b_n`.
    pub magnetic: Vec<Complex64>,
    /// Outgoing `N` wave amplitudes.
    pub scattered_electric: Vec<Complex64>,
    /// Outgoing `M` wave amplitudes.
    pub scattered_magnetic: Vec<Complex64>,
    /// Power per unit `\oint |A|^2 dOmega`, W.
    pub flux_scale: f64,
    /// Momentum flux per unit `\oint |A|^2 dOmega`, N.
    pub momentum_scale: f64,
    /// Beam power not captured by the truncated expansion, as a fraction.
    pub tail_fraction: f64,
}

impl VswfCoefficients {
    fn empty(origin: Vec3, wavenumber: f64, n_max: usize, flux_scale: f64, medium_index: f64) -> Self {
        let len = n_max * (n_max + 2);
        let zero = vec![Complex64::new(0.0, 0.0); len];
        Self {
            origin,
            wavenumber,
            n_max,
            m_max: n_max,
            electric: zero.clone(),
            magnetic: zero.clone(),
            scattered_electric: zero.clone(),
            scattered_magnetic: zero,
            flux_scale,
            momentum_scale: flux_scale * medium_index / SPEED_OF_LIGHT,
            tail_fraction: 0.0,
        }
    }

    #[inline]
    pub fn electric_at(&self, n: usize, m: i64) -> Complex64 {
        self.electric[idx(n, m)]
    }

    #[inline]
    pub fn magnetic_at(&self, n: usize, m: i64) -> Complex64 {
        self.magnetic[idx(n, m)]
    }

    /// Power carried by the incident expansion, W.
    pub fn incident_power(&self) -> f64 {
        let s: f64 = self
            .electric
            .iter()
            .chain(&self.magnetic)
            .map(|c| c.norm_sqr())
            .sum();
        0.25 * self.flux_scale * s
    }

    /// Scattered power, W.
    pub fn scattered_power(&self) -> f64 {
        let s: f64 = self
            .scattered_electric
            .iter()
            .chain(&self.scattered_magnetic)
            .map(|c| c.norm_sqr())
            .sum();
        self.flux_scale * s
    }

    /// Extinguished power `-Re sum(g* p)`, W.
    pub fn extinction_power(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.electric.len() {
            s -= (self.electric[i].conj() * self.scattered_electric[i]).re;
            s -= (self.magnetic[i].conj() * self.scattered_magnetic[i]).re;
        }
        self.flux_scale * s
    }

    /// Absorbed power from coefficient sums (extinction minus scattering), W.
    pub fn absorbed_power(&self) -> f64 {
        self.extinction_power() - self.scattered_power()
    }

    /// Regular incident field at `point` (relative to the focus) from the expansion.
    pub fn incident_field(&self, point: Vec3) -> CVec3 {
        let rel = [
            point[0] - self.origin[0],
            point[1] - self.origin[1],
            point[2] - self.origin[2],
        ];
        let (r, theta, phi) = angles(rel);
        let kr = self.wavenumber * r;
        let (j, dj) = spherical_bessel_j(self.n_max, kr);
        let row = VshRow::with_m_max(self.n_max, self.m_max, theta);
        let (rh, th, ph) = spherical_basis(theta, phi);
        let mut e = CZERO;
        for n in 1..=self.n_max {
            let nf = n as f64;
            let norm_n = (nf * (nf + 1.0)).sqrt();
            // j_n(kr)/(kr), finite at the origin
            let j_over = if kr < 1e-8 {
                if n == 1 {
                    1.0 / 3.0
                } else {
                    0.0
                }
            } else {
                j[n] / kr
            };
            let mm = n.min(self.m_max) as i64;
            for m in -mm..=mm {
                let gm = self.magnetic[idx(n, m)];
                let ge = self.electric[idx(n, m)];
                if gm == Complex64::new(0.0, 0.0) && ge == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let eim = Complex64::from_polar(1.0, m as f64 * phi);
                let p = row.pi(n, m);
                let t = row.tau(n, m);
                let y = row.legendre(n, m);
                // C = (i pi, -tau), B = (tau, i pi) in (theta, phi)
                let c_t = Complex64::new(0.0, p) * eim;
                let c_p = -t * eim;
                let b_t = t * eim;
                let b_p = Complex64::new(0.0, p) * eim;
                let er = ge * (norm_n * j_over * y) * eim;
                let et = gm * j[n] * c_t + ge * dj[n] * b_t;
                let ep = gm * j[n] * c_p + ge * dj[n] * b_p;
                for i in 0..3 {
                    e[i] += er * rh[i] + et * th[i] + ep * ph[i];
                }
            }
        }
        e
    }

    /// Per-`m` far-field amplitudes at one polar angle.
    ///
    /// Returns `(incident_out, incident_in, scattered)` as `(theta, phi)`
    /// component pairs for `m = -m_max..=m_max`.
    fn amplitude_rows(&self, row: &VshRow, n_top: usize, m_top: usize) -> [Vec<[Complex64; 2]>; 3] {
        let width = 2 * m_top + 1;
        let zero = [Complex64::new(0.0, 0.0); 2];
        let mut out = vec![zero; width];
        let mut inc = vec![zero; width];
        let mut sca = vec![zero; width];
        let i = Complex64::i();
        for n in 1..=n_top {
            let out_m = ipow(-(n as i64 + 1));
            let out_n = ipow(-(n as i64));
            let in_m = ipow(n as i64 + 1);
            let in_n = ipow(n as i64);
            let mm = n.min(m_top) as i64;
            for m in -mm..=mm {
                let k = idx(n, m);
                let gm = self.magnetic[k];
                let ge = self.electric[k];
                let pm = self.scattered_magnetic[k];
                let pe = self.scattered_electric[k];
                let p = row.pi(n, m);
                let t = row.tau(n, m);
                let c = [i * p, Complex64::new(-t, 0.0)];
                let b = [Complex64::new(t, 0.0), i * p];
                let slot = (m + m_top as i64) as usize;
                for comp in 0..2 {
                    out[slot][comp] += 0.5 * (gm * out_m * c[comp] + ge * out_n * b[comp]);
                    inc[slot][comp] += 0.5 * (gm * in_m * c[comp] + ge * in_n * b[comp]);
                    sca[slot][comp] += pm * out_m * c[comp] + pe * out_n * b[comp];
                }
            }
        }
        [out, inc, sca]
    }

    fn active_orders(&self) -> (usize, usize) {
        let mut n_top = 0;
        for n in 1..=self.n_max {
            let mm = n as i64;
            if (-mm..=mm).any(|m| {
                let k = idx(n, m);
                self.scattered_electric[k] != Complex64::new(0.0, 0.0)
                    || self.scattered_magnetic[k] != Complex64::new(0.0, 0.0)
            }) {
                n_top = n;
            }
        }
        // incident terms couple to scattered ones at n +- 1
        let n_top = (n_top + 1).min(self.n_max);
        (n_top, self.m_max.min(n_top))
    }

    /// Time-averaged force from the far-field momentum flux of the total field.
    ///
    /// Only the scattered-scattered and incident-scattered terms are kept; the
    /// free incident field carries no net momentum into a closed surface.
    pub fn force(&self) -> Vec3 {
        let (n_top, m_top) = self.active_orders();
        if n_top == 0 {
            return [0.0; 3];
        }
        let (u, w) = gauss_legendre(n_top + 3);
        let mut fz = 0.0;
        let mut fxy = Complex64::new(0.0, 0.0);
        for (ui, wi) in u.iter().zip(&w) {
            let theta = ui.clamp(-1.0, 1.0).acos();
            let row = VshRow::with_m_max(n_top, m_top, theta);
            let [out, _, sca] = self.amplitude_rows(&row, n_top, m_top);
            let width = out.len();
            let mut zsum = 0.0;
            let mut xysum = Complex64::new(0.0, 0.0);
            for s in 0..width {
                for c in 0..2 {
                    zsum += 2.0 * (out[s][c] * sca[s][c].conj()).re + sca[s][c].norm_sqr();
                    if s + 1 < width {
                        xysum += out[s][c] * sca[s + 1][c].conj()
                            + sca[s][c] * out[s + 1][c].conj()
                            + sca[s][c] * sca[s + 1][c].conj();
                    }
                }
            }
            let st = (1.0 - ui * ui).max(0.0).sqrt();
            fz += wi * ui * zsum;
            fxy += wi * st * xysum;
        }
        let pre = -self.momentum_scale * 2.0 * PI;
        [pre * fxy.re, pre * fxy.im, pre * fz]
    }

    /// Total-field far-field amplitudes `(A_in, A_out)` at explicit directions.
    pub fn total_amplitudes(&self, theta: f64, phi: f64) -> (CVec3, CVec3) {
        let row = VshRow::with_m_max(self.n_max, self.m_max, theta);
        let [out, inc, sca] = self.amplitude_rows(&row, self.n_max, self.m_max);
        let (_, th, ph) = spherical_basis(theta, phi);
        let mut a_in = CZERO;
        let mut a_out = CZERO;
        for (s, m) in (-(self.m_max as i64)..=self.m_max as i64).enumerate() {
            let eim = Complex64::from_polar(1.0, m as f64 * phi);
            for i in 0..3 {
                a_in[i] += eim * (inc[s][0] * th[i] + inc[s][1] * ph[i]);
                a_out[i] += eim * ((out[s][0] + sca[s][0]) * th[i] + (out[s][1] + sca[s][1]) * ph[i]);
            }
        }
        (a_in, a_out)
    }

    /// Absorbed power from the net inward Poynting flux of the total field,
    /// integrated node by node on a full-sphere grid.
    pub fn absorbed_power_flux(&self) -> f64 {
        let grid = SphereQuadrature::band(self.n_max + 3, 2 * self.m_max + 4, -1.0, 1.0);
        let mut s = 0.0;
        for node in &grid.nodes {
            let (a_in, a_out) = self.total_amplitudes(node.theta, node.phi);
            let d: f64 = (0..3).map(|i| a_in[i].norm_sqr() - a_out[i].norm_sqr()).sum();
            s += node.weight * d;
        }
        self.flux_scale * s
    }

    /// Momentum-flux force by explicit node quadrature of the total field.
    pub fn force_by_nodes(&self) -> Vec3 {
        let grid = SphereQuadrature::band(self.n_max + 3, 2 * self.m_max + 4, -1.0, 1.0);
        let mut f = [0.0; 3];
        for node in &grid.nodes {
            let (a_in, a_out) = self.total_amplitudes(node.theta, node.phi);
            let d: f64 = (0..3).map(|i| a_in[i].norm_sqr() + a_out[i].norm_sqr()).sum();
            let r = node.direction();
            for i in 0..3 {
                f[i] -= self.momentum_scale * node.weight * d * r[i];
            }
        }
        f
    }
}

/// Beam-shape coefficients of a focused beam about `origin` (particle position
/// relative to the focus), by overlap of the displaced angular spectrum with
/// the outgoing VSWF patterns over the aperture cone.
pub fn beam_shape_coefficients(spectrum: &AngularSpectrum, origin: Vec3, n_max: usize) -> Result<VswfCoefficients> {
    if !origin.iter().all(|c| c.is_finite()) {
        return domain("expansion origin must be finite");
    }
    let k = spectrum.wavenumber();
    let required = minimum_order(k, 0.0, origin);
    if n_max < required {
        return Err(Error::Convergence(format!(
            "n_max = {n_max} cannot represent a beam displaced by {:.3e} m; need at least {required}",
            norm(origin)
        )));
    }
    let kd = k * norm(origin);
    let rho = origin[0].hypot(origin[1]);
    let n_theta = n_max + kd.ceil() as usize + 32;
    let n_phi = (2 * n_max + 2 * (k * rho).ceil() as usize + 32).next_power_of_two();
    let (lo, hi) = spectrum.cos_range();
    let (u, w) = gauss_legendre_on(n_theta, lo, hi);

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n_phi);
    let dphi = 2.0 * PI / n_phi as f64;

    // phi-Fourier components of the displaced amplitude at each polar node
    let mut e_theta_m: Vec<Vec<Complex64>> = Vec::with_capacity(n_theta);
    let mut e_phi_m: Vec<Vec<Complex64>> = Vec::with_capacity(n_theta);
    let mut thetas = Vec::with_capacity(n_theta);
    for &ui in &u {
        let theta = ui.clamp(-1.0, 1.0).acos();
        thetas.push(theta);
        let st = (1.0 - ui * ui).max(0.0).sqrt();
        let mut bt = vec![Complex64::new(0.0, 0.0); n_phi];
        let mut bp = bt.clone();
        for j in 0..n_phi {
            let phi = j as f64 * dphi;
            let (et, ep) = spectrum.components(theta, phi);
            let (sp, cp) = phi.sin_cos();
            let phase = Complex64::from_polar(
                dphi,
                k * (st * cp * origin[0] + st * sp * origin[1] + ui * origin[2]),
            );
            bt[j] = phase * et;
            bp[j] = phase * ep;
        }
        fft.process(&mut bt);
        fft.process(&mut bp);
        e_theta_m.push(bt);
        e_phi_m.push(bp);
    }

    let slot = |m: i64| -> usize { m.rem_euclid(n_phi as i64) as usize };
    let m_limit = n_max.min(n_phi / 2 - 1);
    let mut peak = 0.0f64;
    let mut content = vec![0.0f64; m_limit + 1];
    for i in 0..n_theta {
        for m in 0..=m_limit as i64 {
            let v = e_theta_m[i][slot(m)]
                .norm()
                .max(e_phi_m[i][slot(m)].norm())
                .max(e_theta_m[i][slot(-m)].norm())
                .max(e_phi_m[i][slot(-m)].norm());
            content[m as usize] = content[m as usize].max(v);
            peak = peak.max(v);
        }
    }
    let m_eff = (0..=m_limit).rev().find(|&m| content[m] > 1e-14 * peak).unwrap_or(0);

    let mut coeffs = VswfCoefficients::empty(origin, k, n_max, spectrum.flux_scale(), spectrum.beam.medium_index);
    coeffs.m_max = m_eff;
    let i = Complex64::i();
    for (t, (&theta, &wt)) in thetas.iter().zip(&w).enumerate() {
        let row = VshRow::with_m_max(n_max, m_eff, theta);
        for n in 1..=n_max {
            let mm = n.min(m_eff) as i64;
            for m in -mm..=mm {
                let et = e_theta_m[t][slot(m)];
                let ep = e_phi_m[t][slot(m)];
                let p = row.pi(n, m);
                let tau = row.tau(n, m);
                let over_c = -i * p * et - tau * ep;
                let over_b = tau * et - i * p * ep;
                let kx = idx(n, m);
                coeffs.magnetic[kx] += wt * over_c;
                coeffs.electric[kx] += wt * over_b;
            }
        }
    }
    for n in 1..=n_max {
        let cm = 4.0 * PI * ipow(n as i64);
        let ce = -4.0 * PI * ipow(n as i64 + 1);
        let mm = n as i64;
        for m in -mm..=mm {
            let kx = idx(n, m);
            coeffs.magnetic[kx] *= cm;
            coeffs.electric[kx] *= ce;
        }
    }
    coeffs.tail_fraction = 1.0 - coeffs.incident_power() / spectrum.beam.power;
    Ok(coeffs)
}

/// Expansion of a unit-amplitude plane wave `e exp(i k k_hat.r)` with `k_hat`
/// along `(theta, phi)`; `e` must be transverse.
pub fn plane_wave_coefficients(
    wavenumber: f64,
    theta: f64,
    phi: f64,
    polarization: CVec3,
    n_max: usize,
) -> Result<VswfCoefficients> {
    if n_max < 1 {
        return domain("n_max must be at least 1");
    }
    let (rh, th, ph) = spherical_basis(theta, phi);
    let along: Complex64 = (0..3).map(|i| polarization[i] * rh[i]).sum();
    if along.norm() > 1e-12 {
        return domain("plane-wave polarization must be transverse");
    }
    let e_t: Complex64 = (0..3).map(|i| polarization[i] * th[i]).sum();
    let e_p: Complex64 = (0..3).map(|i| polarization[i] * ph[i]).sum();
    let row = VshRow::new(n_max, theta);
    let mut c = VswfCoefficients::empty([0.0; 3], wavenumber, n_max, 0.0, 1.0);
    let flux = 0.5 / crate::constants::VACUUM_IMPEDANCE / (wavenumber * wavenumber);
    c.flux_scale = flux;
    c.momentum_scale = flux / SPEED_OF_LIGHT;
    let i = Complex64::i();
    for n in 1..=n_max {
        let mm = n as i64;
        for m in -mm..=mm {
            let eim = Complex64::from_polar(1.0, -(m as f64) * phi);
            let p = row.pi(n, m);
            let t = row.tau(n, m);
            let over_c = (-i * p * e_t - t * e_p) * eim;
            let over_b = (t * e_t - i * p * e_p) * eim;
            c.magnetic[idx(n, m)] = 4.0 * PI * ipow(n as i64) * over_c;
            c.electric[idx(n, m)] = -4.0 * PI * ipow(n as i64 + 1) * over_b;
        }
    }
    Ok(c)
}

/// Fill the scattered amplitudes from the sphere's multipole response.
pub fn scatter(incident: &VswfCoefficients, mie: &MieTable) -> Result<VswfCoefficients> {
    let mut out = incident.clone();
    for n in 1..=incident.n_max {
        let te = mie.t_electric(n);
        let tm = mie.t_magnetic(n);
        let mm = n as i64;
        for m in -mm..=mm {
            let k = idx(n, m);
            out.scattered_electric[k] = te * incident.electric[k];
            out.scattered_magnetic[k] = tm * incident.magnetic[k];
        }
    }
    Ok(out)
}

/// Scattered far field on a full-sphere grid, `E_sca ~ F exp(ikr)/r`.
#[derive(Debug, Clone)]
pub struct FarScatteringAmplitude {
    pub grid: SphereQuadrature,
    /// `F_theta` per node, V.
    pub e_theta: Vec<Complex64>,
    pub e_phi: Vec<Complex64>,
}

impl FarScatteringAmplitude {
    /// Cartesian amplitude per node; the radial component is zero.
    pub fn cartesian(&self, node: usize) -> CVec3 {
        let n = &self.grid.nodes[node];
        let (_, th, ph) = spherical_basis(n.theta, n.phi);
        let mut v = CZERO;
        for i in 0..3 {
            v[i] = self.e_theta[node] * th[i] + self.e_phi[node] * ph[i];
        }
        v
    }

    /// `\oint |F|^2 dOmega`, V^2.
    pub fn integrated_power_density(&self) -> f64 {
        self.grid
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| n.weight * (self.e_theta[i].norm_sqr() + self.e_phi[i].norm_sqr()))
            .sum()
    }
}

pub fn far_field(scattered: &VswfCoefficients, grid: &SphereQuadrature) -> Result<FarScatteringAmplitude> {
    let (n_top, m_top) = scattered.active_orders();
    if grid.order_theta < n_top + 1 || grid.order_phi < 2 * n_top + 2 {
        return domain(format!(
            "far-field grid ({}, {}) under-resolves multipole order {n_top}",
            grid.order_theta, grid.order_phi
        ));
    }
    let k = scattered.wavenumber;
    let mut e_theta = vec![Complex64::new(0.0, 0.0); grid.nodes.len()];
    let mut e_phi = e_theta.clone();
    if n_top == 0 {
        return Ok(FarScatteringAmplitude {
            grid: grid.clone(),
            e_theta,
            e_phi,
        });
    }
    let width = 2 * m_top + 1;
    let mut cache: Option<(f64, Vec<[Complex64; 2]>)> = None;
    for (i, node) in grid.nodes.iter().enumerate() {
        let fresh = !matches!(&cache, Some((t, _)) if *t == node.theta);
        if fresh {
            let row = VshRow::with_m_max(n_top, m_top, node.theta);
            let [_, _, sca] = scattered.amplitude_rows(&row, n_top, m_top);
            cache = Some((node.theta, sca));
        }
        let sca = &cache.as_ref().unwrap().1;
        let mut at = Complex64::new(0.0, 0.0);
        let mut ap = Complex64::new(0.0, 0.0);
        for s in 0..width {
            let m = s as f64 - m_top as f64;
            let eim = Complex64::from_polar(1.0 / k, m * node.phi);
            at += sca[s][0] * eim;
            ap += sca[s][1] * eim;
        }
        e_theta[i] = at;
        e_phi[i] = ap;
    }
    Ok(FarScatteringAmplitude {
        grid: grid.clone(),
        e_theta,
        e_phi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::{focus, BeamFamily, BeamSpec};
    use crate::mie::{mie_coefficients, SizeParameter};
    use crate::special_fn::sphere_quadrature;
    use crate::vector::cnorm_sqr;
    use proptest::prelude::*;

    const LAMBDA: f64 = 1550e-9;

    fn k() -> f64 {
        2.0 * PI / LAMBDA
    }

    fn pupil(family: BeamFamily) -> AngularSpectrum {
        focus(BeamSpec::new(family, 0.5, LAMBDA, 0.8).unwrap(), 1.0).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn max_abs(v: &[Complex64]) -> f64 {
        v.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn plane_wave_expansion_reproduces_the_wave() {
        let pol = [c(1.0), c(0.0), c(0.0)];
        let coeffs = plane_wave_coefficients(k(), 0.0, 0.0, pol, 40).unwrap();
        for p in [[0.1e-6, 0.2e-6, -0.3e-6], [0.5e-6, -0.4e-6, 0.6e-6]] {
            let e = coeffs.incident_field(p);
            let exact = Complex64::from_polar(1.0, k() * p[2]);
            assert!((e[0] - exact).norm() < 1e-10, "{:?}", e);
            assert!(e[1].norm() < 1e-10 && e[2].norm() < 1e-10);
        }
        let oblique = plane_wave_coefficients(k(), 0.7, 1.1, {
            let (_, th, _) = spherical_basis(0.7, 1.1);
            [c(th[0]), c(th[1]), c(th[2])]
        }, 40)
        .unwrap();
        let p = [0.3e-6, 0.1e-6, 0.2e-6];
        let (rh, th, _) = spherical_basis(0.7, 1.1);
        let ph = Complex64::from_polar(1.0, k() * (rh[0] * p[0] + rh[1] * p[1] + rh[2] * p[2]));
        let e = oblique.incident_field(p);
        for i in 0..3 {
            assert!((e[i] - ph * th[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn scattered_far_field_matches_amplitude_functions() {
        let x = 2.3;
        let m = Complex64::new(1.6, 0.02);
        let table = mie_coefficients(&SizeParameter::from_value(x, LAMBDA, 1.0).unwrap(), m, None).unwrap();
        let inc = plane_wave_coefficients(k(), 0.0, 0.0, [c(1.0), c(0.0), c(0.0)], table.n_max).unwrap();
        let s = scatter(&inc, &table).unwrap();
        let grid = sphere_quadrature(table.n_max + 4, 2 * table.n_max + 6).unwrap();
        let far = far_field(&s, &grid).unwrap();
        for (i, node) in grid.nodes.iter().enumerate().step_by(7) {
            let (s1, s2) = table.amplitudes(node.theta.cos()).unwrap();
            let (sp, cp) = node.phi.sin_cos();
            // E_sca = exp(ikr)/(-ikr) (cos(phi) S2 theta - sin(phi) S1 phi)
            let et = Complex64::i() * cp * s2 / k();
            let ep = -Complex64::i() * sp * s1 / k();
            assert!((far.e_theta[i] - et).norm() < 1e-10 * s1.norm().max(1.0) / k());
            assert!((far.e_phi[i] - ep).norm() < 1e-10 * s1.norm().max(1.0) / k());
        }
    }

    #[test]
    fn lossless_sphere_extinction_equals_scattering() {
        let table = mie_coefficients(&SizeParameter::from_value(1.4, LAMBDA, 1.0).unwrap(), c(3.48), None).unwrap();
        let inc = beam_shape_coefficients(&pupil(BeamFamily::Radial), [0.1e-6, 0.05e-6, -0.2e-6], 24).unwrap();
        let s = scatter(&inc, &table).unwrap();
        let ext = s.extinction_power();
        let sca = s.scattered_power();
        assert!((ext - sca).abs() < 1e-8 * sca);
        let none = scatter(&inc, &mie_coefficients(&table.x, c(1.0), None).unwrap()).unwrap();
        assert!(max_abs(&none.scattered_electric) < 1e-13 * max_abs(&inc.electric));
        assert!(max_abs(&none.scattered_magnetic) < 1e-13 * max_abs(&inc.magnetic));
    }

    #[test]
    fn far_field_power_matches_coefficients() {
        let table = mie_coefficients(&SizeParameter::from_value(1.4, LAMBDA, 1.0).unwrap(), c(3.48), None).unwrap();
        let inc = beam_shape_coefficients(&pupil(BeamFamily::GaussianLinearX), [0.2e-6, 0.0, 0.3e-6], 24).unwrap();
        let s = scatter(&inc, &table).unwrap();
        let n = table.n_max + 1;
        let far = far_field(&s, &sphere_quadrature(n + 2, 2 * n + 4).unwrap()).unwrap();
        let from_grid = 0.5 / crate::constants::VACUUM_IMPEDANCE * far.integrated_power_density();
        assert!((from_grid / s.scattered_power() - 1.0).abs() < 1e-8);
        assert!(far_field(&s, &sphere_quadrature(4, 8).unwrap()).is_err());
        let zero = scatter(&inc, &mie_coefficients(&table.x, c(1.0), None).unwrap()).unwrap();
        let mut z = zero.clone();
        for v in z.scattered_electric.iter_mut().chain(z.scattered_magnetic.iter_mut()) {
            *v = c(0.0);
        }
        let f = far_field(&z, &sphere_quadrature(8, 16).unwrap()).unwrap();
        assert!(f.e_theta.iter().chain(&f.e_phi).all(|v| *v == c(0.0)));
    }

    #[test]
    fn magnetic_dipole_pattern() {
        let mut s = VswfCoefficients::empty([0.0; 3], k(), 3, 1.0, 1.0);
        s.scattered_magnetic[idx(1, 0)] = c(1.0);
        let grid = sphere_quadrature(12, 16).unwrap();
        let far = far_field(&s, &grid).unwrap();
        // |tau_10| = sqrt(3 / 8 pi) sin(theta)
        let peak = (3.0 / (8.0 * PI)).sqrt() / k();
        for (i, node) in grid.nodes.iter().enumerate() {
            assert!(far.e_theta[i].norm() < 1e-14 * peak);
            assert!((far.e_phi[i].norm() - peak * node.theta.sin()).abs() < 1e-12 * peak);
        }
    }

    #[test]
    fn on_axis_symmetry_selects_m_orders() {
        let gb = beam_shape_coefficients(&pupil(BeamFamily::GaussianLinearX), [0.0; 3], 20).unwrap();
        let scale = max_abs(&gb.electric).max(max_abs(&gb.magnetic));
        for n in 1..=20usize {
            for m in -(n as i64)..=n as i64 {
                if m.abs() != 1 {
                    assert!(gb.electric_at(n, m).norm() < 1e-10 * scale);
                    assert!(gb.magnetic_at(n, m).norm() < 1e-10 * scale);
                }
            }
        }
        let avb = beam_shape_coefficients(&pupil(BeamFamily::Azimuthal), [0.0, 0.0, 0.4e-6], 20).unwrap();
        let scale = max_abs(&avb.magnetic);
        assert!(max_abs(&avb.electric) < 1e-10 * scale);
        let rvb = beam_shape_coefficients(&pupil(BeamFamily::Radial), [0.0, 0.0, -0.3e-6], 20).unwrap();
        let scale = max_abs(&rvb.electric);
        assert!(max_abs(&rvb.magnetic) < 1e-10 * scale);
        for (coeffs, scale) in [(&avb.magnetic, max_abs(&avb.magnetic)), (&rvb.electric, scale)] {
            for n in 1..=20usize {
                for m in -(n as i64)..=n as i64 {
                    if m != 0 {
                        assert!(coeffs[idx(n, m)].norm() < 1e-10 * scale);
                    }
                }
            }
        }
    }

    #[test]
    fn insufficient_order_is_rejected() {
        assert!(matches!(
            beam_shape_coefficients(&pupil(BeamFamily::GaussianLinearX), [0.0, 0.0, 5e-6], 10),
            Err(Error::Convergence(_))
        ));
    }

    #[test]
    fn reconstructed_field_matches_focal_field() {
        for family in [BeamFamily::GaussianLinearX, BeamFamily::Radial, BeamFamily::Azimuthal] {
            let s = pupil(family);
            let d = [0.3e-6, -0.2e-6, 0.5e-6];
            let coeffs = beam_shape_coefficients(&s, d, 30).unwrap();
            let about_focus = beam_shape_coefficients(&s, [0.0; 3], 30).unwrap();
            for p in [[0.4e-6, -0.1e-6, 0.3e-6], [0.0, 0.2e-6, 0.9e-6]] {
                let direct = s.field(p).unwrap().0;
                let scale = cnorm_sqr(&s.field([0.0, 0.0, 0.0]).unwrap().0).sqrt()
                    .max(cnorm_sqr(&s.field([0.5e-6, 0.0, 0.0]).unwrap().0).sqrt());
                let a = coeffs.incident_field(p);
                let b = about_focus.incident_field(p);
                for i in 0..3 {
                    assert!((a[i] - direct[i]).norm() < 1e-6 * scale, "{family:?} {i}");
                    assert!((a[i] - b[i]).norm() < 1e-6 * scale);
                }
            }
        }
    }

    #[test]
    fn force_routes_agree() {
        let table = mie_coefficients(&SizeParameter::from_value(1.2, LAMBDA, 1.0).unwrap(), Complex64::new(3.48, 0.01), None).unwrap();
        for family in [BeamFamily::GaussianLinearX, BeamFamily::Radial] {
            let inc = beam_shape_coefficients(&pupil(family), [0.15e-6, -0.1e-6, 0.2e-6], 22).unwrap();
            let s = scatter(&inc, &table).unwrap();
            let a = s.force();
            let b = s.force_by_nodes();
            let scale = norm(a);
            for i in 0..3 {
                assert!((a[i] - b[i]).abs() < 1e-6 * scale, "{family:?} {a:?} {b:?}");
            }
            let pa = s.absorbed_power();
            let pb = s.absorbed_power_flux();
            assert!(pa > 0.0);
            assert!((pa - pb).abs() < 1e-6 * pa, "{pa} {pb}");
        }
    }

    #[test]
    fn plane_wave_force_is_radiation_pressure() {
        // F = sigma_pr I / c with sigma_pr = sigma_ext - g sigma_sca
        let x = 1.7;
        let m = Complex64::new(1.5, 0.05);
        let sp = SizeParameter::from_value(x, LAMBDA, 1.0).unwrap();
        let table = mie_coefficients(&sp, m, None).unwrap();
        let inc = plane_wave_coefficients(k(), 0.0, 0.0, [c(1.0), c(0.0), c(0.0)], table.n_max + 2).unwrap();
        let s = scatter(&inc, &table).unwrap();
        let f = s.force();
        let mut g_sum = 0.0;
        for n in 1..table.n_max {
            let nf = n as f64;
            let (a, b) = (table.a[n], table.b[n]);
            let (a1, b1) = (table.a[n + 1], table.b[n + 1]);
            g_sum += nf * (nf + 2.0) / (nf + 1.0) * (a * a1.conj() + b * b1.conj()).re
                + (2.0 * nf + 1.0) / (nf * (nf + 1.0)) * (a * b.conj()).re;
        }
        let n = table.n_max;
        let nf = n as f64;
        g_sum += (2.0 * nf + 1.0) / (nf * (nf + 1.0)) * (table.a[n] * table.b[n].conj()).re;
        let q_pr = table.q_ext - 4.0 / (x * x) * g_sum;
        let intensity = 0.5 / crate::constants::VACUUM_IMPEDANCE;
        let expect = q_pr * table.geometric_cross_section() * intensity / SPEED_OF_LIGHT;
        assert!((f[2] / expect - 1.0).abs() < 1e-9, "{} {}", f[2], expect);
        assert!(f[0].abs() < 1e-12 * expect && f[1].abs() < 1e-12 * expect);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn translation_consistency(dx in -0.4f64..0.4, dy in -0.4f64..0.4, dz in -0.6f64..0.6,
                                   rx in -0.4f64..0.4, ry in -0.4f64..0.4, rz in -0.6f64..0.6) {
            let s = pupil(BeamFamily::GaussianLinearX);
            let d = [dx * 1e-6, dy * 1e-6, dz * 1e-6];
            let r = [rx * 1e-6, ry * 1e-6, rz * 1e-6];
            let shifted = beam_shape_coefficients(&s, d, 32).unwrap();
            let centred = beam_shape_coefficients(&s, [0.0; 3], 32).unwrap();
            let a = shifted.incident_field(r);
            let b = centred.incident_field(r);
            let scale = cnorm_sqr(&s.field([0.0; 3]).unwrap().0).sqrt();
            for i in 0..3 {
                prop_assert!((a[i] - b[i]).norm() < 1e-6 * scale);
            }
        }
    }
}
