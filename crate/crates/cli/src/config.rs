//! TOML run configuration and its conversion into library types.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use vortrap::beam::DEFAULT_FILL_FACTOR;
use vortrap::sweep::{KrGrid, Output, SweepConfig};
use vortrap::{BeamConfig, BeamFamily, BeamSpec, Material, ScanConfig};

use crate::fail::{CliError, Kind};

/// A length given either as a number in metres or as a string with a unit
/// suffix (`"385 nm"`, `"1.55 um"`, `"0.002 mm"`, `"1e-6 m"`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Length {
    Metres(f64),
    Text(#[serde(with = "length_text")] f64),
}

impl Length {
    pub fn metres(self) -> f64 {
        match self {
            Length::Metres(v) | Length::Text(v) => v,
        }
    }
}

mod length_text {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(*v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_length(&s).map_err(D::Error::custom)
    }
}

pub fn parse_length(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let split = t
        .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
        .unwrap_or(t.len());
    let (num, unit) = t.split_at(split);
    let value: f64 = num.trim().parse().map_err(|_| format!("bad length {s:?}"))?;
    let per_metre = match unit.trim() {
        "" | "m" => 1.0,
        "mm" => 1e3,
        "um" | "µm" => 1e6,
        "nm" => 1e9,
        u => return Err(format!("unknown length unit {u:?} in {s:?}")),
    };
    Ok(value / per_metre)
}

fn default_power() -> f64 {
    0.5
}
fn default_wavelength() -> Length {
    Length::Metres(1550e-9)
}
fn default_na() -> f64 {
    0.8
}
fn default_medium() -> f64 {
    1.0
}
fn default_fill() -> f64 {
    DEFAULT_FILL_FACTOR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSection {
    #[serde(default = "default_family")]
    pub family: String,
    /// W
    #[serde(default = "default_power")]
    pub power: f64,
    #[serde(default = "default_wavelength")]
    pub wavelength: Length,
    #[serde(default = "default_na")]
    pub numerical_aperture: f64,
    #[serde(default = "default_medium")]
    pub medium_index: f64,
    #[serde(default)]
    pub counterpropagating: bool,
    #[serde(default = "default_fill")]
    pub fill_factor: f64,
}

fn default_family() -> String {
    "gb".into()
}

impl Default for BeamSection {
    fn default() -> Self {
        Self {
            family: default_family(),
            power: default_power(),
            wavelength: default_wavelength(),
            numerical_aperture: default_na(),
            medium_index: default_medium(),
            counterpropagating: false,
            fill_factor: default_fill(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSection {
    /// `Si`, `SiO2`, or any name when `refractive_index` and `density` are set.
    #[serde(default = "default_material")]
    pub name: String,
    /// `[re, im]`
    pub refractive_index: Option<[f64; 2]>,
    /// kg/m^3
    pub density: Option<f64>,
    pub nk_table: Option<PathBuf>,
}

fn default_material() -> String {
    "SiO2".into()
}

impl Default for MaterialSection {
    fn default() -> Self {
        Self {
            name: default_material(),
            refractive_index: None,
            density: None,
            nk_table: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_kr_min")]
    pub kr_min: f64,
    #[serde(default = "default_kr_max")]
    pub kr_max: f64,
    #[serde(default = "default_kr_step")]
    pub kr_step: f64,
    #[serde(default = "default_outputs")]
    pub outputs: BTreeSet<Output>,
    pub wavelengths: Option<Vec<Length>>,
    pub radius: Option<Length>,
}

fn default_kr_min() -> f64 {
    0.1
}
fn default_kr_max() -> f64 {
    2.2
}
fn default_kr_step() -> f64 {
    0.01
}
fn default_outputs() -> BTreeSet<Output> {
    [Output::Trap].into_iter().collect()
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            kr_min: default_kr_min(),
            kr_max: default_kr_max(),
            kr_step: default_kr_step(),
            outputs: default_outputs(),
            wavelengths: None,
            radius: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_cache")]
    pub cache: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_cache() -> bool {
    true
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            cache: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub beam: BeamSection,
    #[serde(default)]
    pub material: MaterialSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::new(Kind::Config, format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::new(Kind::Config, format!("{}: {e}", path.display())))
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self, CliError> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn beam_config(&self) -> Result<BeamConfig, CliError> {
        let b = &self.beam;
        let family = BeamFamily::parse(&b.family)
            .ok_or_else(|| CliError::new(Kind::Config, format!("unknown beam family {:?} (gb, rvb, avb)", b.family)))?;
        let beam = BeamSpec {
            family,
            power: b.power,
            wavelength_vacuum: b.wavelength.metres(),
            numerical_aperture: b.numerical_aperture,
            propagation_sign: 1,
            frequency_offset: 0.0,
            medium_index: b.medium_index,
        };
        beam.validate().map_err(CliError::config)?;
        if !(0.1..=10.0).contains(&b.fill_factor) {
            return Err(CliError::new(Kind::Config, format!("fill factor must be in [0.1, 10], got {}", b.fill_factor)));
        }
        let mut cfg = if b.counterpropagating {
            BeamConfig::counterpropagating(beam)
        } else {
            BeamConfig::single(beam)
        };
        cfg.fill_factor = b.fill_factor;
        Ok(cfg)
    }

    pub fn material(&self) -> Result<Material, CliError> {
        let m = &self.material;
        let mut material = match (m.refractive_index, m.density) {
            (Some([re, im]), Some(rho)) => Material::new(&m.name, Complex64::new(re, im), rho).map_err(CliError::config)?,
            (None, None) => match m.name.to_ascii_lowercase().as_str() {
                "si" | "silicon" => Material::silicon(),
                "sio2" | "silica" => Material::silica(),
                _ => {
                    return Err(CliError::new(
                        Kind::Config,
                        format!("material {:?} needs refractive_index and density", m.name),
                    ))
                }
            },
            _ => return Err(CliError::new(Kind::Config, "set both refractive_index and density, or neither")),
        };
        material.nk_table_path = m.nk_table.clone();
        Ok(material)
    }

    pub fn sweep_config(&self) -> Result<SweepConfig, CliError> {
        let s = &self.sweep;
        let cfg = SweepConfig {
            beam: self.beam_config()?,
            material: self.material()?,
            kr_grid: KrGrid {
                min: s.kr_min,
                max: s.kr_max,
                step: s.kr_step,
            },
            outputs: s.outputs.clone(),
            wavelengths: s.wavelengths.as_ref().map(|w| w.iter().map(|l| l.metres()).collect()),
            radius: s.radius.map(Length::metres),
            scan: self.scan,
        };
        cfg.validate().map_err(CliError::config)?;
        Ok(cfg)
    }
}
