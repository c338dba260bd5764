//! Spherical special functions and quadrature grids.
//!
//! Riccati-Bessel functions follow the convention psi_n(z) = z j_n(z) and
//! xi_n(z) = z h_n^(1)(z), so that xi_1(1) = psi_1(1) - i(cos 1 + sin 1).
//! Vector spherical harmonics use fully normalised associated Legendre
//! functions with the Condon-Shortley phase.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Riccati-Bessel and Riccati-Hankel functions with derivatives for orders `0..=order_max`.
#[derive(Debug, Clone)]
pub struct RiccatiBesselRow {
    pub order_max: usize,
    pub argument: Complex64,
    pub psi: Vec<Complex64>,
    pub psi_prime: Vec<Complex64>,
    pub xi: Vec<Complex64>,
    pub xi_prime: Vec<Complex64>,
}

impl RiccatiBesselRow {
    /// `psi'_n xi_n - psi_n xi'_n`, equal to `-i` for every order.
    pub fn wronskian(&self, n: usize) -> Complex64 {
        self.psi_prime[n] * self.xi[n] - self.psi[n] * self.xi_prime[n]
    }
}

/// Start order for the downward ratio recurrence.
pub(crate) fn downward_start(order_max: usize, z: Complex64) -> usize {
    let a = z.norm();
    order_max.max(a.ceil() as usize) + 15usize.max((4.0 * a.sqrt()).ceil() as usize)
}

/// Ratio `psi_{n-1}(z) / psi_n(z)` at order `n` by modified Lentz continued fraction.
fn psi_ratio_continued_fraction(n: usize, z: Complex64) -> Complex64 {
    let tiny = Complex64::new(1e-300, 0.0);
    let b = |k: usize| Complex64::new((2 * (n + k) + 1) as f64, 0.0) / z;
    let mut f = b(0);
    if f == Complex64::new(0.0, 0.0) {
        f = tiny;
    }
    let mut c = f;
    let mut d = Complex64::new(0.0, 0.0);
    for k in 1..200_000 {
        let bk = b(k);
        d = bk - d;
        if d.norm() < 1e-300 {
            d = tiny;
        }
        c = bk - 1.0 / c;
        if c.norm() < 1e-300 {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            break;
        }
    }
    f
}

/// Ratios `rho_n = psi_{n-1}/psi_n` for `n = 1..=order_max` (index 0 unused).
pub(crate) fn psi_ratios(order_max: usize, z: Complex64) -> Vec<Complex64> {
    let start = downward_start(order_max, z);
    let mut rho = vec![Complex64::new(0.0, 0.0); start + 1];
    rho[start] = psi_ratio_continued_fraction(start, z);
    for n in (1..start).rev() {
        rho[n] = Complex64::new((2 * n + 1) as f64, 0.0) / z - 1.0 / rho[n + 1];
    }
    rho.truncate(order_max + 1);
    rho
}

/// Logarithmic derivatives `D_n(z) = psi'_n/psi_n` for `n = 0..=order_max`.
pub fn log_derivative(order_max: usize, z: Complex64) -> Vec<Complex64> {
    let rho = psi_ratios(order_max.max(1), z);
    let mut d = Vec::with_capacity(order_max + 1);
    d.push(z.cos() / z.sin());
    for n in 1..=order_max {
        d.push(rho[n] - n as f64 / z);
    }
    d
}

fn check_argument(argument: Complex64) -> Result<()> {
    if !argument.re.is_finite() || !argument.im.is_finite() {
        return domain(format!("non-finite Riccati-Bessel argument {argument}"));
    }
    if argument.norm() == 0.0 {
        return domain("Riccati-Bessel argument must be nonzero");
    }
    Ok(())
}

/// Riccati-Bessel row: psi by downward ratio recurrence seeded with a
/// continued fraction, xi by upward recurrence.
pub fn riccati_bessel(order_max: usize, argument: Complex64) -> Result<RiccatiBesselRow> {
    if order_max < 1 {
        return domain("order_max must be at least 1");
    }
    check_argument(argument)?;
    let z = argument;
    let rho = psi_ratios(order_max, z);

    let mut psi = vec![Complex64::new(0.0, 0.0); order_max + 1];
    let mut psi_prime = psi.clone();
    psi[0] = z.sin();
    psi_prime[0] = z.cos();
    for n in 1..=order_max {
        psi[n] = psi[n - 1] / rho[n];
        psi_prime[n] = psi[n - 1] - n as f64 / z * psi[n];
    }

    let mut xi = vec![Complex64::new(0.0, 0.0); order_max + 1];
    let mut xi_prime = xi.clone();
    let eiz = (I * z).exp();
    xi[0] = -I * eiz;
    xi_prime[0] = eiz;
    xi[1] = -eiz * (1.0 + I / z);
    for n in 1..order_max {
        xi[n + 1] = (2 * n + 1) as f64 / z * xi[n] - xi[n - 1];
    }
    for n in 1..=order_max {
        xi_prime[n] = xi[n - 1] - n as f64 / z * xi[n];
    }

    Ok(RiccatiBesselRow {
        order_max,
        argument,
        psi,
        psi_prime,
        xi,
        xi_prime,
    })
}

/// Real-argument spherical Bessel values `j_n(x)` and `(x j_n(x))' / x`
/// for `n = 0..=order_max`, with the small-argument limits at `x = 0`.
pub fn spherical_bessel_j(order_max: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let mut j = vec![0.0; order_max + 1];
    let mut dj = vec![0.0; order_max + 1];
    if x.abs() < 1e-8 {
        j[0] = 1.0;
        if order_max >= 1 {
            dj[1] = 2.0 / 3.0;
        }
        return (j, dj);
    }
    let z = Complex64::new(x, 0.0);
    let rho = psi_ratios(order_max.max(1), z);
    let mut psi = x.sin();
    j[0] = psi / x;
    for n in 1..=order_max {
        let next = psi / rho[n].re;
        dj[n] = (psi - n as f64 / x * next) / x;
        psi = next;
        j[n] = psi / x;
    }
    (j, dj)
}

/// Mie angular functions pi_n and tau_n at one scattering angle.
#[derive(Debug, Clone)]
pub struct AngularFunctionRow {
    pub order_max: usize,
    pub cos_theta: f64,
    /// `pi[n]` for `n = 1..=order_max`; index 0 is zero.
    pub pi: Vec<f64>,
    pub tau: Vec<f64>,
}

pub fn angular_functions(order_max: usize, cos_theta: f64) -> Result<AngularFunctionRow> {
    if !(cos_theta.abs() <= 1.0) {
        return domain(format!("|cos theta| must not exceed 1, got {cos_theta}"));
    }
    let mu = cos_theta;
    let mut pi = vec![0.0; order_max + 1];
    let mut tau = vec![0.0; order_max + 1];
    if order_max >= 1 {
        pi[1] = 1.0;
        tau[1] = mu;
    }
    for n in 2..=order_max {
        let nf = n as f64;
        pi[n] = (2.0 * nf - 1.0) / (nf - 1.0) * mu * pi[n - 1] - nf / (nf - 1.0) * pi[n - 2];
        tau[n] = nf * mu * pi[n] - (nf + 1.0) * pi[n - 1];
    }
    Ok(AngularFunctionRow {
        order_max,
        cos_theta,
        pi,
        tau,
    })
}

/// Gauss-Legendre nodes and weights on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            z = 0.0;
            dp = 1.0;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss-Legendre rule mapped onto `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|v| v * half).collect(),
    )
}

/// One quadrature node on the unit sphere.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SphereNode {
    pub theta: f64,
    pub phi: f64,
    /// Solid-angle weight, sr.
    pub weight: f64,
}

impl SphereNode {
    pub fn direction(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }
}

/// Product rule: Gauss-Legendre in cos(theta) times uniform nodes in phi.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub nodes: Vec<SphereNode>,
    pub order_theta: usize,
    pub order_phi: usize,
    /// Distinct polar nodes and their cos(theta) weights, ascending in cos(theta).
    pub thetas: Vec<f64>,
    pub theta_weights: Vec<f64>,
}

impl SphereQuadrature {
    /// Product rule restricted to `cos(theta)` in `[u_min, u_max]`.
    pub fn band(order_theta: usize, order_phi: usize, u_min: f64, u_max: f64) -> Self {
        let (u, wu) = gauss_legendre_on(order_theta, u_min, u_max);
        let dphi = 2.0 * PI / order_phi as f64;
        let thetas: Vec<f64> = u.iter().map(|c| c.clamp(-1.0, 1.0).acos()).collect();
        let mut nodes = Vec::with_capacity(order_theta * order_phi);
        for (t, w) in thetas.iter().zip(&wu) {
            for j in 0..order_phi {
                nodes.push(SphereNode {
                    theta: *t,
                    phi: j as f64 * dphi,
                    weight: w * dphi,
                });
            }
        }
        Self {
            nodes,
            order_theta,
            order_phi,
            thetas,
            theta_weights: wu,
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }

    pub fn integrate<F: Fn(&SphereNode) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().map(|n| n.weight * f(n)).sum()
    }
}

/// Full-sphere product quadrature.
pub fn sphere_quadrature(order_theta: usize, order_phi: usize) -> Result<SphereQuadrature> {
    if order_theta < 2 || order_phi < 4 {
        return domain(format!(
            "sphere quadrature needs order_theta >= 2 and order_phi >= 4, got ({order_theta}, {order_phi})"
        ));
    }
    Ok(SphereQuadrature::band(order_theta, order_phi, -1.0, 1.0))
}

/// Normalised angular functions of the vector spherical harmonics at one polar angle.
///
/// With `Y_nm = P_n^m(cos theta) e^{i m phi}` orthonormal on the sphere,
/// `C_nm = (i pi_nm theta_hat - tau_nm phi_hat) e^{i m phi}` and
/// `B_nm = (tau_nm theta_hat + i pi_nm phi_hat) e^{i m phi}`, where
/// `pi_nm = m P_n^m / (sin theta sqrt(n(n+1)))` and
/// `tau_nm = dP_n^m/dtheta / sqrt(n(n+1))`. Both families are orthonormal.
#[derive(Debug, Clone)]
pub struct VshRow {
    pub n_max: usize,
    pub theta: f64,
    legendre: Vec<f64>,
    pi: Vec<f64>,
    tau: Vec<f64>,
}

#[inline]
fn tri(n: usize, m: usize) -> usize {
    n * (n + 1) / 2 + m
}

impl VshRow {
    pub fn new(n_max: usize, theta: f64) -> Self {
        Self::with_m_max(n_max, n_max, theta)
    }

    /// Only orders `|m| <= m_max` are filled; others read as zero.
    pub fn with_m_max(n_max: usize, m_max: usize, theta: f64) -> Self {
        let size = tri(n_max, n_max) + 1;
        let mut legendre = vec![0.0; size];
        let mut pi = vec![0.0; size];
        let mut tau = vec![0.0; size];
        let (s, u) = theta.sin_cos();
        let s = s.abs();

        // m = 0
        let mut p_prev2 = 0.0;
        let mut p_prev = 1.0 / (4.0 * PI).sqrt();
        legendre[tri(0, 0)] = p_prev;
        for n in 1..=n_max {
            let nf = n as f64;
            let a = ((4.0 * nf * nf - 1.0) / (nf * nf)).sqrt();
            let b = if n >= 2 {
                (((nf - 1.0) * (nf - 1.0)) / (4.0 * (nf - 1.0) * (nf - 1.0) - 1.0)).sqrt()
            } else {
                0.0
            };
            let p = a * (u * p_prev - b * p_prev2);
            legendre[tri(n, 0)] = p;
            p_prev2 = p_prev;
            p_prev = p;
        }

        // m >= 1 through Q = P / sin(theta); m = 1 is always needed for the m = 0 derivative
        let mut e = 1.0 / (4.0 * PI).sqrt();
        let mut q_m1: Vec<f64> = Vec::new();
        for m in 1..=n_max.min(m_max.max(1)) {
            let mf = m as f64;
            e *= ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt();
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let mut q = vec![0.0; n_max + 1];
            q[m] = sign * e * s.powi(m as i32 - 1);
            if m < n_max {
                q[m + 1] = (2.0 * mf + 3.0).sqrt() * u * q[m];
            }
            for n in (m + 2)..=n_max {
                let nf = n as f64;
                let a = ((4.0 * nf * nf - 1.0) / (nf * nf - mf * mf)).sqrt();
                let b = (((nf - 1.0) * (nf - 1.0) - mf * mf)
                    / (4.0 * (nf - 1.0) * (nf - 1.0) - 1.0))
                    .sqrt();
                q[n] = a * (u * q[n - 1] - b * q[n - 2]);
            }
            for n in m..=n_max {
                let nf = n as f64;
                let norm = (nf * (nf + 1.0)).sqrt();
                let q_lower = if n > m { q[n - 1] } else { 0.0 };
                let dp = nf * u * q[n]
                    - ((2.0 * nf + 1.0) / (2.0 * nf - 1.0) * (nf * nf - mf * mf)).sqrt() * q_lower;
                let k = tri(n, m);
                legendre[k] = s * q[n];
                pi[k] = mf * q[n] / norm;
                tau[k] = dp / norm;
            }
            if m == 1 {
                q_m1 = q;
            }
        }
        // dP_n^0/dtheta = sqrt(n(n+1)) P_n^1
        for n in 1..=n_max {
            tau[tri(n, 0)] = s * q_m1[n];
        }

        Self {
            n_max,
            theta,
            legendre,
            pi,
            tau,
        }
    }

    #[inline]
    fn parity(m: i64) -> f64 {
        if m.rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Normalised associated Legendre function (scalar harmonic without the phase).
    #[inline]
    pub fn legendre(&self, n: usize, m: i64) -> f64 {
        let ma = m.unsigned_abs() as usize;
        if ma > n || n > self.n_max {
            return 0.0;
        }
        let v = self.legendre[tri(n, ma)];
        if m < 0 {
            Self::parity(m) * v
        } else {
            v
        }
    }

    #[inline]
    pub fn pi(&self, n: usize, m: i64) -> f64 {
        let ma = m.unsigned_abs() as usize;
        if ma > n || n > self.n_max || n == 0 {
            return 0.0;
        }
        let v = self.pi[tri(n, ma)];
        if m < 0 {
            -Self::parity(m) * v
        } else {
            v
        }
    }

    #[inline]
    pub fn tau(&self, n: usize, m: i64) -> f64 {
        let ma = m.unsigned_abs() as usize;
        if ma > n || n > self.n_max || n == 0 {
            return 0.0;
        }
        let v = self.tau[tri(n, ma)];
        if m < 0 {
            Self::parity(m) * v
        } else {
            v
        }
    }
}
