//! Sweep orchestration: rows in parallel, cached by config hash, files
//! written by one writer, manifest last.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use vortrap::sweep::{
    evaluate_row, read_rows, resonance_annotations, wavelength_scan, write_profiles, write_resonances, write_rows,
    write_wavelength_scan, Output, ResultRow, SweepConfig, RESULT_HEADER,
};
use vortrap::NkTable;

use crate::cache::{cache_root, config_hash, RowCache};
use crate::fail::{CliError, Kind};

pub const RESULTS_FILE: &str = "results.csv";
pub const RESONANCES_FILE: &str = "resonances.csv";
pub const PROFILES_FILE: &str = "profiles.csv";
pub const WAVELENGTHS_FILE: &str = "wavelengths.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub config_hash: String,
    pub version: String,
    pub config: SweepConfig,
    pub files: Vec<String>,
    pub rows: usize,
    pub cached_rows: usize,
    pub flagged_rows: usize,
    pub jobs: usize,
    pub seconds: f64,
}

pub struct SweepOptions {
    pub out_dir: PathBuf,
    pub use_cache: bool,
    pub jobs: Option<usize>,
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path.display(), e))
}

/// CSV body of `text` without its header line.
fn body(text: &[u8]) -> String {
    let s = String::from_utf8_lossy(text);
    s.split_once('\n').map_or(String::new(), |(_, rest)| rest.to_string())
}

fn parse_row(text: &str) -> Option<ResultRow> {
    let mut with_header = RESULT_HEADER.join(",");
    with_header.push('\n');
    with_header.push_str(text);
    read_rows(with_header.as_bytes()).ok()?.pop()
}

struct Computed {
    row: ResultRow,
    profile: Option<String>,
    cached: bool,
}

fn compute(config: &SweepConfig, nk: Option<&NkTable>, cache: Option<&RowCache>, index: usize, kr: f64) -> Result<Computed, CliError> {
    let profiles = config.outputs.contains(&Output::PotentialProfile);
    if let Some(c) = cache {
        let row = c.get("row", index).and_then(|t| parse_row(&t));
        let profile = if profiles { c.get("profile", index) } else { None };
        if let Some(row) = row {
            if !profiles || profile.is_some() {
                return Ok(Computed { row, profile, cached: true });
            }
        }
    }
    let result = evaluate_row(config, nk, kr);
    let mut row_text = Vec::new();
    write_rows(&mut row_text, std::slice::from_ref(&result.row))?;
    let profile = if profiles {
        let mut buf = Vec::new();
        write_profiles(&mut buf, std::slice::from_ref(&result))?;
        Some(body(&buf))
    } else {
        None
    };
    if let Some(c) = cache {
        c.put("row", index, &body(&row_text))?;
        if let Some(p) = &profile {
            c.put("profile", index, p)?;
        }
    }
    Ok(Computed {
        row: result.row,
        profile,
        cached: false,
    })
}

pub fn run_sweep(config: &SweepConfig, options: &SweepOptions) -> Result<Manifest, CliError> {
    let start = Instant::now();
    config.validate().map_err(CliError::config)?;
    let out = &options.out_dir;
    fs::create_dir_all(out).map_err(|e| CliError::io(out.display(), e))?;
    let key = config_hash(config);
    let cache = if options.use_cache {
        Some(RowCache::open(&cache_root(out), &key)?)
    } else {
        None
    };
    let nk = if config.outputs.contains(&Output::Thermal) {
        Some(NkTable::for_material(&config.material)?)
    } else {
        None
    };
    let jobs = options.jobs.unwrap_or_else(rayon::current_num_threads).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::new(Kind::Config, format!("cannot start {jobs} workers: {e}")))?;
    let grid = config.kr_grid.values();
    log::info!("sweep {key}: {} rows on {jobs} workers", grid.len());
    let computed: Vec<Computed> = pool.install(|| {
        grid.par_iter()
            .enumerate()
            .map(|(i, &kr)| compute(config, nk.as_ref(), cache.as_ref(), i, kr))
            .collect::<Result<_, _>>()
    })?;

    let mut files = Vec::new();
    let rows: Vec<ResultRow> = computed.iter().map(|c| c.row.clone()).collect();
    write_rows(create(&out.join(RESULTS_FILE))?, &rows)?;
    files.push(RESULTS_FILE.to_string());

    if config.outputs.contains(&Output::PotentialProfile) {
        let mut text = Vec::new();
        write_profiles(&mut text, &[])?;
        for c in &computed {
            text.extend_from_slice(c.profile.as_deref().unwrap_or("").as_bytes());
        }
        let path = out.join(PROFILES_FILE);
        fs::write(&path, text).map_err(|e| CliError::io(path.display(), e))?;
        files.push(PROFILES_FILE.to_string());
    }
    if config.outputs.contains(&Output::Resonances) {
        let list = resonance_annotations(&config.material, (config.kr_grid.min, config.kr_grid.max))?;
        write_resonances(create(&out.join(RESONANCES_FILE))?, &list)?;
        files.push(RESONANCES_FILE.to_string());
    }
    if config.wavelengths.is_some() {
        let points = pool.install(|| wavelength_scan(config))?;
        write_wavelength_scan(create(&out.join(WAVELENGTHS_FILE))?, &points)?;
        files.push(WAVELENGTHS_FILE.to_string());
    }

    let manifest = Manifest {
        config_hash: key,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        files,
        rows: rows.len(),
        cached_rows: computed.iter().filter(|c| c.cached).count(),
        flagged_rows: rows.iter().filter(|r| r.flags.iter().any(|f| f.contains("_error"))).count(),
        jobs,
        seconds: start.elapsed().as_secs_f64(),
    };
    let path = out.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(|e| CliError::io(path.display(), e))?;
    Ok(manifest)
}

/// Ratio table between two result tables, matched on kR.
pub fn compare(a: &Path, b: &Path) -> Result<Vec<(f64, [f64; 7])>, CliError> {
    let load = |p: &Path| -> Result<Vec<ResultRow>, CliError> {
        let f = File::open(p).map_err(|e| CliError::io(p.display(), e))?;
        read_rows(f).map_err(|e| CliError::new(Kind::Data, format!("{}: {e}", p.display())))
    };
    let (ra, rb) = (load(a)?, load(b)?);
    Ok(ra
        .iter()
        .filter_map(|x| {
            let y = rb.iter().find(|y| (y.kr - x.kr).abs() < 1e-9)?;
            let f = |i: usize| x.frequency_khz[i] / y.frequency_khz[i];
            let g = |i: usize| x.gamma[i] / y.gamma[i];
            Some((x.kr, [f(0), f(1), f(2), g(0), g(1), g(2), x.temperature / y.temperature]))
        })
        .collect())
}

pub const COMPARE_HEADER: [&str; 8] = ["kR", "fx_ratio", "fy_ratio", "fz_ratio", "Gx_ratio", "Gy_ratio", "Gz_ratio", "T_ratio"];
