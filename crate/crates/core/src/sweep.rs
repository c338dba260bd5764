//! Size-parameter and wavelength sweeps and their CSV tables.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beam::{focus, BeamFamily};
use crate::constants::{AMBIENT_TEMPERATURE, BOLTZMANN, HBAR};
use crate::dynamics::{trap_report, BeamConfig, ScanConfig, TrapModel, TrapReport};
use crate::error::{domain, Error, Result};
use crate::mie::{locate_resonances, Material, ResonanceFamily, ResonanceList, MAX_SIZE_PARAMETER};
use crate::recoil::mie_recoil;
use crate::thermal::{solve_balance, AbsorbedPower, NkTable, ThermalEmitter, ThermalReport};
use crate::vector::mirror_z;

/// Header of the per-size-parameter result table.
pub const RESULT_HEADER: [&str; 14] = [
    "kR", "R_nm", "z_eq_um", "dUx_kT", "dUy_kT", "dUz_kT", "fx_kHz", "fy_kHz", "fz_kHz", "Gx_per_s", "Gy_per_s",
    "Gz_per_s", "T_K", "flags",
];

/// Header of the resonance annotation table.
pub const RESONANCE_HEADER: [&str; 4] = ["family", "order", "kR", "width"];

/// Header of the potential-profile table.
pub const PROFILE_HEADER: [&str; 5] = ["kR", "axis", "coord_um", "force_N", "U_kT"];

/// Header of the wavelength-scan table.
pub const WAVELENGTH_HEADER: [&str; 11] = [
    "wavelength_nm", "kR", "R_nm", "z_center_um", "kx_N_per_m", "ky_N_per_m", "kz_N_per_m", "dUx_kT", "dUy_kT",
    "dUz_kT", "flags",
];

/// Thermal energy used to normalize trap depths, J.
pub fn thermal_energy() -> f64 {
    BOLTZMANN * AMBIENT_TEMPERATURE
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Trap,
    Recoil,
    Thermal,
    Resonances,
    PotentialProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl KrGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) {
            return domain(format!("kR step must be positive, got {}", self.step));
        }
        if !(self.min > 0.0 && self.min < self.max && self.max <= MAX_SIZE_PARAMETER) {
            return domain(format!("kR range must satisfy 0 < min < max <= {MAX_SIZE_PARAMETER}"));
        }
        Ok(())
    }

    /// Grid values, rounded to 1e-9 so that printed values are clean.
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| ((self.min + i as f64 * self.step) * 1e9).round() / 1e9)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub beam: BeamConfig,
    pub material: Material,
    pub kr_grid: KrGrid,
    pub outputs: BTreeSet<Output>,
    /// Vacuum wavelengths for the wavelength-tuning mode, m.
    #[serde(default)]
    pub wavelengths: Option<Vec<f64>>,
    /// Fixed particle radius for the wavelength-tuning mode, m.
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub scan: ScanConfig,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.beam.beam.validate()?;
        self.material.validate()?;
        self.kr_grid.validate()?;
        self.scan.validate()?;
        if let Some(w) = &self.wavelengths {
            if w.is_empty() || w.iter().any(|x| !(*x > 0.0)) {
                return domain("wavelength list must be non-empty and positive");
            }
            if !self.radius.is_some_and(|r| r > 0.0) {
                return domain("wavelength mode needs a positive particle radius");
            }
        }
        Ok(())
    }
}

/// One line of the result table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub kr: f64,
    pub radius_nm: f64,
    pub z_eq_um: f64,
    pub depth_kt: [f64; 3],
    pub frequency_khz: [f64; 3],
    pub gamma: [f64; 3],
    pub temperature: f64,
    pub flags: Vec<String>,
}

/// Shortest round-tripping decimal, `nan` for missing values.
pub fn format_value(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x}")
    }
}

fn parse_value(s: &str) -> Option<f64> {
    match s {
        "nan" => Some(f64::NAN),
        _ => s.parse().ok(),
    }
}

impl ResultRow {
    pub fn record(&self) -> Vec<String> {
        let mut r = vec![format_value(self.kr), format_value(self.radius_nm), format_value(self.z_eq_um)];
        r.extend(self.depth_kt.iter().map(|x| format_value(*x)));
        r.extend(self.frequency_khz.iter().map(|x| format_value(*x)));
        r.extend(self.gamma.iter().map(|x| format_value(*x)));
        r.push(format_value(self.temperature));
        r.push(self.flags.join(";"));
        r
    }

    pub fn from_record(record: &csv::StringRecord, line: usize) -> Result<Self> {
        let bad = |message: String| Error::Parse {
            path: "result table".into(),
            line,
            message,
        };
        if record.len() != RESULT_HEADER.len() {
            return Err(bad(format!("expected {} fields, found {}", RESULT_HEADER.len(), record.len())));
        }
        let mut v = [0.0; 13];
        for (i, slot) in v.iter_mut().enumerate() {
            *slot = parse_value(&record[i]).ok_or_else(|| bad(format!("bad number in column {}", RESULT_HEADER[i])))?;
        }
        let flags = &record[13];
        Ok(Self {
            kr: v[0],
            radius_nm: v[1],
            z_eq_um: v[2],
            depth_kt: [v[3], v[4], v[5]],
            frequency_khz: [v[6], v[7], v[8]],
            gamma: [v[9], v[10], v[11]],
            temperature: v[12],
            flags: if flags.is_empty() {
                Vec::new()
            } else {
                flags.split(';').map(str::to_string).collect()
            },
        })
    }

    /// Fields equal, treating NaN as equal to NaN.
    pub fn same_as(&self, other: &Self) -> bool {
        self.record() == other.record()
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Parse {
        path: "csv".into(),
        line,
        message: e.to_string(),
    }
}

fn io_error(e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: "csv".into(),
        message: e.to_string(),
    }
}

pub fn write_rows<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(RESULT_HEADER).map_err(csv_error)?;
    for row in rows {
        w.write_record(row.record()).map_err(csv_error)?;
    }
    w.flush().map_err(io_error)
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_error)?.clone();
    if header.iter().ne(RESULT_HEADER.iter().copied()) {
        return Err(Error::Parse {
            path: "result table".into(),
            line: 1,
            message: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| ResultRow::from_record(&rec.map_err(csv_error)?, i + 2))
        .collect()
}

/// Resonance families a beam excites when the sphere sits on the beam axis.
pub fn excited_families(family: BeamFamily) -> Vec<ResonanceFamily> {
    match family {
        BeamFamily::Azimuthal => vec![ResonanceFamily::Magnetic],
        BeamFamily::Radial => vec![ResonanceFamily::Electric],
        BeamFamily::GaussianLinearX => vec![ResonanceFamily::Electric, ResonanceFamily::Magnetic],
    }
}

/// Resonances of `material` over `kr_range` for dashed-line overlays.
pub fn resonance_annotations(material: &Material, kr_range: (f64, f64)) -> Result<ResonanceList> {
    locate_resonances(
        material.refractive_index,
        kr_range,
        &[ResonanceFamily::Electric, ResonanceFamily::Magnetic],
        0.002,
    )
}

pub fn write_resonances<W: Write>(out: W, list: &ResonanceList) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(RESONANCE_HEADER).map_err(csv_error)?;
    for r in &list.entries {
        w.write_record([
            r.family.label().to_string(),
            r.multipole_order.to_string(),
            format_value(r.kr_peak),
            format_value(r.width),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(io_error)
}

pub fn read_resonances<R: Read>(input: R) -> Result<ResonanceList> {
    let mut r = csv::Reader::from_reader(input);
    let mut entries = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let bad = |m: &str| Error::Parse {
            path: "resonance table".into(),
            line: i + 2,
            message: m.to_string(),
        };
        if rec.len() != RESONANCE_HEADER.len() {
            return Err(bad("expected 4 fields"));
        }
        entries.push(crate::mie::Resonance {
            family: ResonanceFamily::from_label(&rec[0]).ok_or_else(|| bad("unknown family"))?,
            multipole_order: rec[1].parse().map_err(|_| bad("bad order"))?,
            kr_peak: parse_value(&rec[2]).ok_or_else(|| bad("bad kR"))?,
            width: parse_value(&rec[3]).ok_or_else(|| bad("bad width"))?,
        });
    }
    Ok(ResonanceList { entries })
}

/// Whether `kr` lies within half a linewidth (at least 0.01) of a resonance
/// the beam excites.
pub fn near_resonance(material: &Material, family: BeamFamily, kr: f64) -> Result<bool> {
    let lo = (kr - 0.15).max(1e-3);
    let list = locate_resonances(material.refractive_index, (lo, kr + 0.15), &excited_families(family), 0.002)?;
    Ok(list.entries.iter().any(|r| {
        let half = if r.width.is_finite() { 0.5 * r.width } else { 0.0 };
        (r.kr_peak - kr).abs() <= half.max(0.01)
    }))
}

/// Everything computed for one size parameter.
#[derive(Debug, Clone)]
pub struct RowResult {
    pub row: ResultRow,
    pub trap: Option<TrapReport>,
    pub thermal: Option<ThermalReport>,
}

/// Recoil heating rates (per axis, quanta/s) at the report's evaluation
/// point, summed over both beams of a counterpropagating pair.
pub fn recoil_rates(model: &TrapModel, report: &TrapReport) -> Result<[f64; 3]> {
    let p = report.evaluation_point;
    let mut edot = mie_recoil(&model.spectrum, &model.mie, p, model.mass, report.frequencies)?.edot;
    if model.config.counterpropagating {
        // the reverse beam seen from the mirrored position, mirrored back
        let b = mie_recoil(&model.spectrum, &model.mie, mirror_z(p), model.mass, report.frequencies)?.edot;
        for j in 0..3 {
            edot[j] += b[j];
        }
    }
    let mut g = [f64::NAN; 3];
    for j in 0..3 {
        if report.frequencies[j] > 0.0 {
            g[j] = edot[j] / (HBAR * report.frequencies[j]);
        }
    }
    Ok(g)
}

/// Steady-state temperature at the report's evaluation point.
pub fn thermal_at(model: &TrapModel, report: &TrapReport, nk: &NkTable) -> Result<ThermalReport> {
    let p = report.evaluation_point;
    let mut absorbed = crate::thermal::absorbed_power(&model.spectrum, &model.mie, p)?;
    if model.config.counterpropagating {
        let b = crate::thermal::absorbed_power(&model.spectrum, &model.mie, mirror_z(p))?;
        absorbed = AbsorbedPower {
            coefficients: absorbed.coefficients + b.coefficients,
            flux: absorbed.flux + b.flux,
        };
    }
    let emitter = ThermalEmitter::new(nk, model.radius)?;
    let balance = solve_balance(absorbed.coefficients.max(0.0), &emitter)?;
    let t = balance.temperature;
    let melting_exceeded = balance.runaway || crate::thermal::melting_point(&model.material).is_some_and(|m| t >= m);
    let probe = if t.is_finite() { t } else { crate::thermal::MAX_TEMPERATURE };
    Ok(ThermalReport {
        material: model.material.name.clone(),
        kr: model.size_parameter(),
        radius: model.radius,
        position: p,
        absorbed,
        balance,
        resonance_flag: near_resonance(&model.material, model.config.beam.family, model.size_parameter())?,
        melting_exceeded,
        coverage_warning: emitter.uncovered_fraction(probe) > 0.5,
    })
}

fn error_flag(stage: &str, e: &Error) -> String {
    let kind = match e {
        Error::Domain(_) => "domain",
        Error::UnsupportedRange(_) => "range",
        Error::OutOfRange(_) => "region",
        Error::Convergence(_) => "convergence",
        Error::StepSize(_) => "step",
        Error::Consistency(_) => "consistency",
        Error::NonFinite(_) => "nonfinite",
        Error::Parse { .. } => "parse",
        Error::Io { .. } => "io",
    };
    format!("{stage}_error:{kind}")
}

/// Evaluate one size parameter; failures become flags on the row.
pub fn evaluate_row(config: &SweepConfig, nk: Option<&NkTable>, kr: f64) -> RowResult {
    let mut row = ResultRow {
        kr,
        radius_nm: f64::NAN,
        z_eq_um: f64::NAN,
        depth_kt: [f64::NAN; 3],
        frequency_khz: [f64::NAN; 3],
        gamma: [f64::NAN; 3],
        temperature: f64::NAN,
        flags: Vec::new(),
    };
    let model = match TrapModel::from_size_parameter(config.beam, config.material.clone(), kr) {
        Ok(m) => m,
        Err(e) => {
            log::warn!("kR = {kr}: {e}");
            row.flags.push(error_flag("model", &e));
            return RowResult {
                row,
                trap: None,
                thermal: None,
            };
        }
    };
    row.radius_nm = model.radius * 1e9;
    let report = match trap_report(&model, &config.scan) {
        Ok(r) => r,
        Err(e) => {
            log::warn!("kR = {kr}: trap analysis failed: {e}");
            row.flags.push(error_flag("trap", &e));
            return RowResult {
                row,
                trap: None,
                thermal: None,
            };
        }
    };
    let kt = thermal_energy();
    row.z_eq_um = report.z_eq.map_or(f64::NAN, |z| z * 1e6);
    row.depth_kt = report.depth.map(|d| d / kt);
    row.frequency_khz = report.frequencies.map(|w| w / (2.0 * std::f64::consts::PI) / 1e3);
    if report.z_eq.is_none() {
        row.flags.push("no_equilibrium".into());
    }
    if !report.trapped {
        row.flags.push("untrapped".into());
    }

    if config.outputs.contains(&Output::Recoil) {
        match recoil_rates(&model, &report) {
            Ok(g) => row.gamma = g,
            Err(e) => row.flags.push(error_flag("recoil", &e)),
        }
    }
    let mut thermal = None;
    if config.outputs.contains(&Output::Thermal) {
        match nk.map(|t| thermal_at(&model, &report, t)) {
            Some(Ok(t)) => {
                row.temperature = t.temperature();
                if t.balance.runaway {
                    row.flags.push("runaway".into());
                }
                if t.melting_exceeded {
                    row.flags.push("melting".into());
                }
                if t.coverage_warning {
                    row.flags.push("nk_coverage".into());
                }
                if t.resonance_flag {
                    row.flags.push("resonant".into());
                }
                thermal = Some(t);
            }
            Some(Err(e)) => row.flags.push(error_flag("thermal", &e)),
            None => row.flags.push("thermal_error:no_table".into()),
        }
    }
    RowResult {
        row,
        trap: Some(report),
        thermal,
    }
}

/// Evaluate every grid point; rows come back in grid order.
pub fn run_rows(config: &SweepConfig) -> Result<Vec<RowResult>> {
    config.validate()?;
    let nk = if config.outputs.contains(&Output::Thermal) {
        Some(NkTable::for_material(&config.material)?)
    } else {
        None
    };
    Ok(config
        .kr_grid
        .values()
        .par_iter()
        .map(|&kr| evaluate_row(config, nk.as_ref(), kr))
        .collect())
}

pub fn write_profiles<W: Write>(out: W, results: &[RowResult]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(PROFILE_HEADER).map_err(csv_error)?;
    let kt = thermal_energy();
    for res in results {
        let Some(rep) = &res.trap else { continue };
        let profiles = [&rep.transverse_profiles[0], &rep.transverse_profiles[1], &rep.axial_profile];
        for (name, p) in ["x", "y", "z"].iter().zip(profiles) {
            for i in 0..p.coords.len() {
                w.write_record([
                    format_value(res.row.kr),
                    name.to_string(),
                    format_value(p.coords[i] * 1e6),
                    format_value(p.force[i]),
                    format_value(p.potential[i] / kt),
                ])
                .map_err(csv_error)?;
            }
        }
    }
    w.flush().map_err(io_error)
}

/// One wavelength of the tuning scan.
#[derive(Debug, Clone)]
pub struct WavelengthPoint {
    pub wavelength: f64,
    pub report: Option<TrapReport>,
    /// Stiffness at the trap centre (the equilibrium, else the focus), N/m.
    pub stiffness: [f64; 3],
    pub flags: Vec<String>,
}

/// Fixed-radius trap analysis at each configured wavelength.
pub fn wavelength_scan(config: &SweepConfig) -> Result<Vec<WavelengthPoint>> {
    config.validate()?;
    let (Some(list), Some(radius)) = (&config.wavelengths, config.radius) else {
        return domain("wavelength scan needs a wavelength list and a radius");
    };
    Ok(list
        .par_iter()
        .map(|&wl| {
            let mut cfg = config.beam;
            cfg.beam.wavelength_vacuum = wl;
            let mut flags = Vec::new();
            let result = TrapModel::new(cfg, config.material.clone(), radius).and_then(|m| trap_report(&m, &config.scan));
            match result {
                Ok(r) => {
                    if !r.trapped {
                        flags.push("untrapped".into());
                    }
                    WavelengthPoint {
                        wavelength: wl,
                        stiffness: r.stiffness,
                        report: Some(r),
                        flags,
                    }
                }
                Err(e) => {
                    flags.push(error_flag("trap", &e));
                    WavelengthPoint {
                        wavelength: wl,
                        report: None,
                        stiffness: [f64::NAN; 3],
                        flags,
                    }
                }
            }
        })
        .collect())
}

pub fn write_wavelength_scan<W: Write>(out: W, points: &[WavelengthPoint]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(WAVELENGTH_HEADER).map_err(csv_error)?;
    let kt = thermal_energy();
    for p in points {
        let (kr, r_nm, z, depth) = match &p.report {
            Some(r) => (r.kr, r.radius * 1e9, r.evaluation_point[2] * 1e6, r.depth.map(|d| d / kt)),
            None => (f64::NAN, f64::NAN, f64::NAN, [f64::NAN; 3]),
        };
        let mut rec = vec![format_value(p.wavelength * 1e9), format_value(kr), format_value(r_nm), format_value(z)];
        rec.extend(p.stiffness.iter().map(|x| format_value(*x)));
        rec.extend(depth.iter().map(|x| format_value(*x)));
        rec.push(p.flags.join(";"));
        w.write_record(rec).map_err(csv_error)?;
    }
    w.flush().map_err(io_error)
}

/// Focal spot check used by the CLI `focus` command: intensity along x and
/// along z through the focus.
pub fn focal_line(config: &BeamConfig, half_width: f64, samples: usize) -> Result<Vec<(f64, f64, f64)>> {
    let spectrum = focus(config.beam, config.fill_factor)?;
    if samples < 2 {
        return domain("need at least two samples");
    }
    (0..samples)
        .map(|i| {
            let s = -half_width + 2.0 * half_width * i as f64 / (samples - 1) as f64;
            Ok((s, spectrum.intensity([s, 0.0, 0.0])?, spectrum.intensity([0.0, 0.0, s])?))
        })
        .collect()
}
