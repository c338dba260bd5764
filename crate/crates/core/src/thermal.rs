//! Bulk temperature from the balance of absorbed laser power against
//! blackbody exchange with the surroundings.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::beam::AngularSpectrum;
use crate::constants::{AMBIENT_TEMPERATURE, BOLTZMANN, HBAR, SILICON_MELTING_POINT, SPEED_OF_LIGHT};
use crate::dynamics::scattering_state;
use crate::error::{domain, Error, Result};
use crate::mie::{mie_coefficients, Material, MieTable, SizeParameter};
use crate::vector::Vec3;

const SILICON_TABLE: &str = include_str!("../data/si_nk.csv");
const SILICA_TABLE: &str = include_str!("../data/sio2_nk.csv");

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NkRow {
    /// m
    pub wavelength: f64,
    pub n: f64,
    pub k: f64,
}

/// Tabulated optical constants versus wavelength.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NkTable {
    pub rows: Vec<NkRow>,
    pub source: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NkSample {
    pub index: Complex64,
    /// Query outside the tabulated range; the endpoint value was held.
    pub extrapolated: bool,
}

impl NkTable {
    /// Parse the `wavelength_um,n,k` text format. `label` names the input in
    /// error messages.
    pub fn parse(text: &str, label: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: label.to_string(),
            line,
            message,
        };
        let mut rows: Vec<NkRow> = Vec::new();
        let mut source = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if source.is_none() {
                    if let Some(s) = comment.strip_prefix("source:") {
                        source = Some(s.trim().to_string());
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(err(line_no, format!("expected 3 comma-separated fields, found {}", fields.len())));
            }
            let mut v = [0.0; 3];
            for (slot, f) in v.iter_mut().zip(&fields) {
                *slot = f
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| err(line_no, format!("not a finite number: {f:?}")))?;
            }
            let [wl, n, k] = v;
            if !(wl > 0.0) {
                return Err(err(line_no, format!("wavelength must be positive, got {wl}")));
            }
            if !(n > 0.0) {
                return Err(err(line_no, format!("n must be positive, got {n}")));
            }
            if k < 0.0 {
                return Err(err(line_no, format!("k must be non-negative, got {k}")));
            }
            let wavelength = wl / 1e6;
            if let Some(prev) = rows.last() {
                if wavelength <= prev.wavelength {
                    return Err(err(line_no, "wavelengths must be strictly increasing".into()));
                }
            }
            rows.push(NkRow { wavelength, n, k });
        }
        if rows.is_empty() {
            return Err(err(0, "no data rows".into()));
        }
        Ok(Self {
            rows,
            source: source.unwrap_or_else(|| label.to_string()),
        })
    }

    pub fn silicon() -> Self {
        Self::parse(SILICON_TABLE, "si_nk.csv").expect("bundled table parses")
    }

    pub fn silica() -> Self {
        Self::parse(SILICA_TABLE, "sio2_nk.csv").expect("bundled table parses")
    }

    /// Bundled table for a material name, if one ships with the crate.
    pub fn bundled(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "si" | "silicon" => Some(Self::silicon()),
            "sio2" | "silica" => Some(Self::silica()),
            _ => None,
        }
    }

    /// Table referenced by the material, else the bundled one.
    pub fn for_material(material: &Material) -> Result<Self> {
        match &material.nk_table_path {
            Some(p) => load_nk(p),
            None => Self::bundled(&material.name).ok_or_else(|| Error::Io {
                path: material.name.clone(),
                message: "no optical-constant table configured or bundled".into(),
            }),
        }
    }

    /// Tabulated wavelength range, m.
    pub fn range(&self) -> (f64, f64) {
        (self.rows[0].wavelength, self.rows[self.rows.len() - 1].wavelength)
    }

    /// Complex index at `wavelength` (m), linear in log-wavelength.
    pub fn sample(&self, wavelength: f64) -> NkSample {
        let (lo, hi) = self.range();
        let at = |r: &NkRow| Complex64::new(r.n, r.k);
        if wavelength <= lo || self.rows.len() == 1 {
            return NkSample {
                index: at(&self.rows[0]),
                extrapolated: wavelength < lo,
            };
        }
        if wavelength >= hi {
            return NkSample {
                index: at(&self.rows[self.rows.len() - 1]),
                extrapolated: wavelength > hi,
            };
        }
        let j = self.rows.partition_point(|r| r.wavelength <= wavelength);
        let (a, b) = (&self.rows[j - 1], &self.rows[j]);
        let t = (wavelength / a.wavelength).ln() / (b.wavelength / a.wavelength).ln();
        NkSample {
            index: at(a) * (1.0 - t) + at(b) * t,
            extrapolated: false,
        }
    }
}

pub fn load_nk(path: impl AsRef<Path>) -> Result<NkTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    NkTable::parse(&text, &path.display().to_string())
}

/// Laser power absorbed by the sphere, by two independent routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbsorbedPower {
    /// Extinction minus scattering from the multipole coefficients, W.
    pub coefficients: f64,
    /// Net inward Poynting flux of the total field through a far sphere, W.
    pub flux: f64,
}

/// Relative tolerance between the two absorbed-power routes.
pub const ABSORPTION_TOLERANCE: f64 = 0.01;

pub fn absorbed_power(spectrum: &AngularSpectrum, mie: &MieTable, position: Vec3) -> Result<AbsorbedPower> {
    let state = scattering_state(spectrum, mie, position)?;
    let coefficients = state.absorbed_power();
    let flux = state.absorbed_power_flux();
    let scale = coefficients.abs().max(flux.abs());
    // roundoff floor of the flux difference relative to the beam power
    let floor = 1e-12 * spectrum.beam.power;
    if (coefficients - flux).abs() > ABSORPTION_TOLERANCE * scale && scale > floor {
        return Err(Error::Consistency(format!(
            "absorbed power routes disagree: coefficients {coefficients:.6e} W, flux {flux:.6e} W"
        )));
    }
    Ok(AbsorbedPower { coefficients, flux })
}

/// Number of wavelength nodes of the thermal grid.
pub const THERMAL_NODES: usize = 2000;
/// Thermal grid bounds, m.
pub const THERMAL_BAND: (f64, f64) = (0.5e-6, 200e-6);

/// Log-spaced wavelengths over [`THERMAL_BAND`] with exact endpoints.
fn thermal_grid(nodes: usize) -> Vec<f64> {
    let (a, b) = THERMAL_BAND;
    let mut w: Vec<f64> = (0..nodes)
        .map(|i| a * (b / a).powf(i as f64 / (nodes - 1) as f64))
        .collect();
    w[nodes - 1] = b;
    w
}

/// Relative resolution demanded of the cross section between grid nodes.
const REFINE_TOLERANCE: f64 = 1e-4;
/// Cross sections below this fraction of the geometric one are treated as zero
/// when deciding whether to refine.
const REFINE_FLOOR: f64 = 1e-12;
/// Maximum number of interval bisections below the base spacing.
const REFINE_DEPTH: u32 = 16;

/// Absorption cross section of one sphere on the thermal wavelength grid.
///
/// The grid starts from log-spaced base nodes and bisects any interval on
/// which the cross section departs from linear interpolation, so that narrow
/// absorbing resonances are resolved independently of the base spacing.
#[derive(Debug, Clone)]
pub struct ThermalEmitter {
    pub radius: f64,
    /// Ascending, m.
    pub wavelengths: Vec<f64>,
    /// m^2
    pub sigma_abs: Vec<f64>,
    /// Nodes outside the table range.
    pub extrapolated: Vec<bool>,
}

#[derive(Clone, Copy)]
struct Node {
    log_wavelength: f64,
    sigma: f64,
    extrapolated: bool,
}

fn sample_node(nk: &NkTable, radius: f64, log_wavelength: f64) -> Result<Node> {
    let wl = log_wavelength.exp();
    let s = nk.sample(wl);
    let x = SizeParameter::from_radius(radius, wl, 1.0)?;
    let t = mie_coefficients(&x, s.index, None)?;
    Ok(Node {
        log_wavelength,
        sigma: t.sigma_abs.max(0.0),
        extrapolated: s.extrapolated,
    })
}

/// Interior nodes of `[a, b]` after adaptive bisection, in ascending order.
fn refine(nk: &NkTable, radius: f64, a: Node, b: Node, depth: u32, out: &mut Vec<Node>) -> Result<()> {
    let mid = sample_node(nk, radius, 0.5 * (a.log_wavelength + b.log_wavelength))?;
    if depth < REFINE_DEPTH {
        let linear = 0.5 * (a.sigma + b.sigma);
        let floor = REFINE_FLOOR * PI * radius * radius;
        if (mid.sigma - linear).abs() > REFINE_TOLERANCE * mid.sigma.max(linear) + floor {
            refine(nk, radius, a, mid, depth + 1, out)?;
            out.push(mid);
            return refine(nk, radius, mid, b, depth + 1, out);
        }
    }
    out.push(mid);
    Ok(())
}

impl ThermalEmitter {
    pub fn new(nk: &NkTable, radius: f64) -> Result<Self> {
        Self::with_nodes(nk, radius, THERMAL_NODES)
    }

    /// Emitter on `nodes` base nodes plus adaptive refinement.
    pub fn with_nodes(nk: &NkTable, radius: f64, nodes: usize) -> Result<Self> {
        if !(radius > 0.0) {
            return domain(format!("radius must be positive, got {radius}"));
        }
        if nodes < 2 {
            return domain("thermal grid needs at least two nodes");
        }
        let base: Vec<Node> = thermal_grid(nodes)
            .par_iter()
            .map(|wl| sample_node(nk, radius, wl.ln()))
            .collect::<Result<_>>()?;
        let interiors: Vec<Vec<Node>> = base
            .par_windows(2)
            .map(|pair| {
                let mut out = Vec::new();
                refine(nk, radius, pair[0], pair[1], 0, &mut out)?;
                Ok(out)
            })
            .collect::<Result<_>>()?;
        let mut all = Vec::with_capacity(base.len() + interiors.iter().map(Vec::len).sum::<usize>());
        for (node, interior) in base.iter().zip(&interiors) {
            all.push(*node);
            all.extend_from_slice(interior);
        }
        all.push(base[base.len() - 1]);
        Ok(Self {
            radius,
            wavelengths: all.iter().map(|n| n.log_wavelength.exp()).collect(),
            sigma_abs: all.iter().map(|n| n.sigma).collect(),
            extrapolated: all.iter().map(|n| n.extrapolated).collect(),
        })
    }

    /// Emitter with a wavelength-independent cross section.
    pub fn constant(sigma: f64, nodes: usize) -> Self {
        let wavelengths = thermal_grid(nodes);
        Self {
            radius: 0.0,
            sigma_abs: vec![sigma; nodes],
            extrapolated: vec![false; nodes],
            wavelengths,
        }
    }

    /// Planck weight per unit log-wavelength at `temperature`.
    fn weight(wavelength: f64, temperature: f64) -> f64 {
        let omega = 2.0 * PI * SPEED_OF_LIGHT / wavelength;
        let x = HBAR * omega / (BOLTZMANN * temperature);
        if x > 700.0 {
            return 0.0;
        }
        HBAR * omega.powi(4) / (PI * PI * SPEED_OF_LIGHT * SPEED_OF_LIGHT * x.exp_m1())
    }

    /// Trapezoid weights in log-wavelength.
    fn log_weights(&self) -> Vec<f64> {
        let u: Vec<f64> = self.wavelengths.iter().map(|w| w.ln()).collect();
        let n = u.len();
        (0..n)
            .map(|i| {
                let left = if i > 0 { u[i] - u[i - 1] } else { 0.0 };
                let right = if i + 1 < n { u[i + 1] - u[i] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect()
    }

    /// Power exchanged with a blackbody field at `temperature`, W.
    pub fn power(&self, temperature: f64) -> f64 {
        if !(temperature > 0.0) {
            return 0.0;
        }
        self.log_weights()
            .iter()
            .zip(&self.wavelengths)
            .zip(&self.sigma_abs)
            .map(|((du, &wl), &sigma)| du * sigma * Self::weight(wl, temperature))
            .sum()
    }

    /// Fraction of the Planck-weighted band at `temperature` that falls on
    /// extrapolated nodes.
    pub fn uncovered_fraction(&self, temperature: f64) -> f64 {
        let mut total = 0.0;
        let mut outside = 0.0;
        for (i, du) in self.log_weights().into_iter().enumerate() {
            let w = du * Self::weight(self.wavelengths[i], temperature);
            total += w;
            if self.extrapolated[i] {
                outside += w;
            }
        }
        if total > 0.0 {
            outside / total
        } else {
            0.0
        }
    }
}

/// Blackbody power exchanged by a sphere of `radius` at `temperature`, W.
pub fn blackbody_power(nk: &NkTable, radius: f64, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) {
        return domain(format!("temperature must be positive, got {temperature}"));
    }
    Ok(ThermalEmitter::new(nk, radius)?.power(temperature))
}

/// Upper end of the temperature search, K.
pub const MAX_TEMPERATURE: f64 = 5000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Balance {
    /// K; NaN on runaway.
    pub temperature: f64,
    /// Absorbed plus ambient minus emitted power at the solution, W.
    pub residual: f64,
    pub emitted: f64,
    pub ambient: f64,
    pub runaway: bool,
}

/// Solve `absorbed + P_bb(T0) = P_bb(T)` for `T` in `[T0, MAX_TEMPERATURE]`.
pub fn solve_balance(absorbed: f64, emitter: &ThermalEmitter) -> Result<Balance> {
    if !(absorbed >= 0.0) {
        return domain(format!("absorbed power must be non-negative, got {absorbed}"));
    }
    let ambient = emitter.power(AMBIENT_TEMPERATURE);
    let target = absorbed + ambient;
    let residual = |t: f64| target - emitter.power(t);
    if absorbed == 0.0 {
        return Ok(Balance {
            temperature: AMBIENT_TEMPERATURE,
            residual: 0.0,
            emitted: ambient,
            ambient,
            runaway: false,
        });
    }
    if residual(MAX_TEMPERATURE) > 0.0 {
        return Ok(Balance {
            temperature: f64::NAN,
            residual: residual(MAX_TEMPERATURE),
            emitted: emitter.power(MAX_TEMPERATURE),
            ambient,
            runaway: true,
        });
    }
    let (mut lo, mut hi) = (AMBIENT_TEMPERATURE, MAX_TEMPERATURE);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 * hi {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    Ok(Balance {
        temperature: t,
        residual: residual(t),
        emitted: emitter.power(t),
        ambient,
        runaway: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermalReport {
    pub material: String,
    pub kr: f64,
    pub radius: f64,
    pub position: Vec3,
    pub absorbed: AbsorbedPower,
    pub balance: Balance,
    /// Size parameter within a resonance linewidth of the excited family.
    pub resonance_flag: bool,
    pub melting_exceeded: bool,
    /// More than half of the thermally weighted band lies outside the table.
    pub coverage_warning: bool,
}

impl ThermalReport {
    pub fn temperature(&self) -> f64 {
        self.balance.temperature
    }
}

/// Melting point used for the melting flag, K.
pub fn melting_point(material: &Material) -> Option<f64> {
    match material.name.to_ascii_lowercase().as_str() {
        "si" | "silicon" => Some(SILICON_MELTING_POINT),
        _ => None,
    }
}

/// Steady-state temperature of the sphere at `position` in the beam.
pub fn solve_temperature(
    spectrum: &AngularSpectrum,
    mie: &MieTable,
    material: &Material,
    emitter: &ThermalEmitter,
    position: Vec3,
    resonance_flag: bool,
) -> Result<ThermalReport> {
    let absorbed = absorbed_power(spectrum, mie, position)?;
    let balance = solve_balance(absorbed.coefficients.max(0.0), emitter)?;
    let t = balance.temperature;
    let melting_exceeded = balance.runaway || melting_point(material).is_some_and(|m| t >= m);
    let probe = if t.is_finite() { t } else { MAX_TEMPERATURE };
    Ok(ThermalReport {
        material: material.name.clone(),
        kr: mie.x.value,
        radius: mie.x.radius,
        position,
        absorbed,
        balance,
        resonance_flag,
        melting_exceeded,
        coverage_warning: emitter.uncovered_fraction(probe) > 0.5,
    })
}
