mod cache;
mod config;
mod fail;
mod run;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use vortrap::dynamics::trap_report;
use vortrap::mie::{mie_coefficients, Material};
use vortrap::recoil::mie_recoil;
use vortrap::sweep::{focal_line, format_value, recoil_rates, resonance_annotations, thermal_at, write_resonances};
use vortrap::{NkTable, SizeParameter, TrapModel};

use config::{parse_length, RunConfig};
use fail::{CliError, Kind};
use run::{compare, run_sweep, SweepOptions, COMPARE_HEADER};

#[derive(Parser)]
#[command(name = "vortrap", version, about = "Optical levitation traps with Gaussian and vector vortex beams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every physics command. Flags override the config file.
#[derive(Args, Clone, Default)]
struct Setup {
    /// TOML configuration file
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Beam family: gb, rvb or avb
    #[arg(long)]
    beam: Option<String>,
    /// Si, SiO2, or a name defined in the config file
    #[arg(long)]
    material: Option<String>,
    /// Beam power, W
    #[arg(long)]
    power: Option<f64>,
    /// Vacuum wavelength, e.g. "1550 nm"
    #[arg(long, value_parser = parse_length)]
    wavelength: Option<f64>,
    /// Numerical aperture
    #[arg(long)]
    na: Option<f64>,
    /// Input waist over aperture radius
    #[arg(long)]
    fill: Option<f64>,
    /// Add a second, backward-propagating copy of the beam
    #[arg(long)]
    counterpropagating: bool,
}

impl Setup {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load_or_default(self.config.as_deref())?;
        if let Some(b) = &self.beam {
            cfg.beam.family = b.clone();
        }
        if let Some(m) = &self.material {
            if !m.eq_ignore_ascii_case(&cfg.material.name) {
                cfg.material.name = m.clone();
                cfg.material.refractive_index = None;
                cfg.material.density = None;
                cfg.material.nk_table = None;
            }
        }
        if let Some(p) = self.power {
            cfg.beam.power = p;
        }
        if let Some(w) = self.wavelength {
            cfg.beam.wavelength = config::Length::Metres(w);
        }
        if let Some(na) = self.na {
            cfg.beam.numerical_aperture = na;
        }
        if let Some(f) = self.fill {
            cfg.beam.fill_factor = f;
        }
        if self.counterpropagating {
            cfg.beam.counterpropagating = true;
        }
        Ok(cfg)
    }

    fn model(&self, kr: f64) -> Result<(RunConfig, TrapModel), CliError> {
        let cfg = self.resolve()?;
        let model = TrapModel::from_size_parameter(cfg.beam_config()?, cfg.material()?, kr).map_err(CliError::config)?;
        Ok((cfg, model))
    }
}

fn parse_position(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected x,y,z, got {s:?}"));
    }
    Ok([parse_length(parts[0])?, parse_length(parts[1])?, parse_length(parts[2])?])
}

#[derive(Subcommand)]
enum Command {
    /// Mie coefficients and efficiencies at one size parameter
    Mie {
        #[command(flatten)]
        setup: Setup,
        #[arg(long)]
        kr: f64,
    },
    /// Resonance annotation table (family, order, kR, width)
    Resonances {
        #[command(flatten)]
        setup: Setup,
        #[arg(long, default_value_t = 0.1)]
        kr_min: f64,
        #[arg(long, default_value_t = 2.2)]
        kr_max: f64,
        /// Output CSV; stdout when omitted
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Focal intensity along x and along z
    Focus {
        #[command(flatten)]
        setup: Setup,
        /// Half width of the line, e.g. "2 um"
        #[arg(long, value_parser = parse_length, default_value = "2 um")]
        half_width: f64,
        #[arg(long, default_value_t = 201)]
        samples: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Optical force on a sphere at one position
    Force {
        #[command(flatten)]
        setup: Setup,
        #[arg(long)]
        kr: f64,
        /// x,y,z, e.g. "0,0,200nm"
        #[arg(long, value_parser = parse_position, default_value = "0,0,0")]
        position: [f64; 3],
    },
    /// Equilibrium, depths, stiffness and frequencies at one size parameter
    Trap {
        #[command(flatten)]
        setup: Setup,
        #[arg(long)]
        kr: f64,
        /// Also write the potential profiles to this CSV
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Photon-recoil heating at the trap's evaluation point
    Recoil {
        #[command(flatten)]
        setup: Setup,
        #[arg(long)]
        kr: f64,
    },
    /// Steady-state bulk temperature at the trap's evaluation point
    Thermal {
        #[command(flatten)]
        setup: Setup,
        #[arg(long)]
        kr: f64,
    },
    /// Size-parameter sweep writing CSV tables and a manifest
    Sweep {
        #[command(flatten)]
        setup: Setup,
        /// Output directory (overrides the config file)
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long)]
        kr_min: Option<f64>,
        #[arg(long)]
        kr_max: Option<f64>,
        #[arg(long)]
        kr_step: Option<f64>,
        /// Worker threads; defaults to the available cores
        #[arg(long)]
        jobs: Option<usize>,
        /// Recompute every row and leave the cache untouched
        #[arg(long)]
        no_cache: bool,
    },
    /// Ratio table (first over second) between two sweep result tables
    Compare {
        first: PathBuf,
        second: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::new(Kind::Numerical, e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match out {
        Some(p) => {
            let f = std::fs::File::create(p).map_err(|e| CliError::io(p.display(), e))?;
            Ok(Box::new(std::io::BufWriter::new(f)))
        }
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

fn nk_for(material: &Material) -> Result<NkTable, CliError> {
    Ok(NkTable::for_material(material)?)
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Mie { setup, kr } => {
            let cfg = setup.resolve()?;
            let beam = cfg.beam_config()?.beam;
            let material = cfg.material()?;
            let x = SizeParameter::from_value(kr, beam.wavelength_vacuum, beam.medium_index).map_err(CliError::config)?;
            let table = mie_coefficients(&x, material.refractive_index, None)?;
            print_json(&table)
        }
        Command::Resonances { setup, kr_min, kr_max, out } => {
            let material = setup.resolve()?.material()?;
            let list = resonance_annotations(&material, (kr_min, kr_max)).map_err(CliError::config)?;
            write_resonances(sink(out.as_deref())?, &list)?;
            Ok(())
        }
        Command::Focus { setup, half_width, samples, out } => {
            let beam = setup.resolve()?.beam_config()?;
            let line = focal_line(&beam, half_width, samples).map_err(CliError::config)?;
            let mut w = csv::Writer::from_writer(sink(out.as_deref())?);
            let io = |e: csv::Error| CliError::io("focus table", e);
            w.write_record(["s_um", "I_x_W_per_m2", "I_z_W_per_m2"]).map_err(io)?;
            for (s, ix, iz) in line {
                w.write_record([format_value(s * 1e6), format_value(ix), format_value(iz)]).map_err(io)?;
            }
            w.flush().map_err(|e| CliError::io("focus table", e))
        }
        Command::Force { setup, kr, position } => {
            let (_, model) = setup.model(kr)?;
            print_json(&model.force_vector(position)?)
        }
        Command::Trap { setup, kr, profile } => {
            let (cfg, model) = setup.model(kr)?;
            let report = trap_report(&model, &cfg.scan)?;
            if let Some(path) = profile {
                let result = vortrap::sweep::RowResult {
                    row: empty_row(kr),
                    trap: Some(report.clone()),
                    thermal: None,
                };
                vortrap::sweep::write_profiles(sink(Some(&path))?, &[result])?;
            }
            print_json(&report)
        }
        Command::Recoil { setup, kr } => {
            let (cfg, model) = setup.model(kr)?;
            let report = trap_report(&model, &cfg.scan)?;
            let forward = mie_recoil(&model.spectrum, &model.mie, report.evaluation_point, model.mass, report.frequencies)?;
            #[derive(Serialize)]
            struct Out {
                evaluation_point: [f64; 3],
                frequencies: [f64; 3],
                /// quanta per second, both beams for a counterpropagating pair
                gamma: [f64; 3],
                forward_beam: vortrap::RecoilReport,
            }
            print_json(&Out {
                evaluation_point: report.evaluation_point,
                frequencies: report.frequencies,
                gamma: recoil_rates(&model, &report)?,
                forward_beam: forward,
            })
        }
        Command::Thermal { setup, kr } => {
            let (cfg, model) = setup.model(kr)?;
            let report = trap_report(&model, &cfg.scan)?;
            let nk = nk_for(&model.material)?;
            print_json(&thermal_at(&model, &report, &nk)?)
        }
        Command::Sweep {
            setup,
            out,
            kr_min,
            kr_max,
            kr_step,
            jobs,
            no_cache,
        } => {
            let mut cfg = setup.resolve()?;
            if let Some(v) = kr_min {
                cfg.sweep.kr_min = v;
            }
            if let Some(v) = kr_max {
                cfg.sweep.kr_max = v;
            }
            if let Some(v) = kr_step {
                cfg.sweep.kr_step = v;
            }
            if jobs == Some(0) {
                return Err(CliError::new(Kind::Config, "--jobs must be at least 1"));
            }
            let sweep = cfg.sweep_config()?;
            let options = SweepOptions {
                out_dir: out.unwrap_or(cfg.output.dir.clone()),
                use_cache: cfg.output.cache && !no_cache,
                jobs,
            };
            let manifest = run_sweep(&sweep, &options)?;
            eprintln!(
                "{} rows ({} cached) in {:.1} s -> {}",
                manifest.rows,
                manifest.cached_rows,
                manifest.seconds,
                options.out_dir.display()
            );
            Ok(())
        }
        Command::Compare { first, second, out } => {
            let rows = compare(&first, &second)?;
            let mut w = csv::Writer::from_writer(sink(out.as_deref())?);
            let io = |e: csv::Error| CliError::io("ratio table", e);
            w.write_record(COMPARE_HEADER).map_err(io)?;
            for (kr, r) in rows {
                let mut rec = vec![format_value(kr)];
                rec.extend(r.iter().map(|v| format_value(*v)));
                w.write_record(rec).map_err(io)?;
            }
            w.flush().map_err(|e| CliError::io("ratio table", e))
        }
    }
}

fn empty_row(kr: f64) -> vortrap::sweep::ResultRow {
    vortrap::sweep::ResultRow {
        kr,
        radius_nm: f64::NAN,
        z_eq_um: f64::NAN,
        depth_kt: [f64::NAN; 3],
        frequency_khz: [f64::NAN; 3],
        gamma: [f64::NAN; 3],
        temperature: f64::NAN,
        flags: Vec::new(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
