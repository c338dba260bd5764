//! Minimal 3-vector helpers for real positions and complex field vectors.

use num_complex::Complex64;

pub type Vec3 = [f64; 3];
pub type CVec3 = [Complex64; 3];

pub const ZERO: Vec3 = [0.0; 3];
pub const CZERO: CVec3 = [Complex64 { re: 0.0, im: 0.0 }; 3];

#[inline]
pub fn norm(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `a x b` for a real `a` and complex `b`.
#[inline]
pub fn cross_rc(a: Vec3, b: CVec3) -> CVec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn cnorm_sqr(v: &CVec3) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

#[inline]
pub fn cadd_scaled(acc: &mut CVec3, v: &CVec3, s: Complex64) {
    for i in 0..3 {
        acc[i] += v[i] * s;
    }
}

/// Spherical unit vectors (r_hat, theta_hat, phi_hat) in Cartesian components.
#[inline]
pub fn spherical_basis(theta: f64, phi: f64) -> (Vec3, Vec3, Vec3) {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    (
        [st * cp, st * sp, ct],
        [ct * cp, ct * sp, -st],
        [-sp, cp, 0.0],
    )
}

/// Polar and azimuthal angles of a nonzero vector; the origin maps to (0, 0).
pub fn angles(v: Vec3) -> (f64, f64, f64) {
    let r = norm(v);
    if r == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let theta = (v[2] / r).clamp(-1.0, 1.0).acos();
    let phi = v[1].atan2(v[0]);
    (r, theta, phi)
}

/// Reflection through the z = 0 plane.
#[inline]
pub fn mirror_z(v: Vec3) -> Vec3 {
    [v[0], v[1], -v[2]]
}
