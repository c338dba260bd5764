//! End-to-end acceptance checks. Each test prints one PASS/FAIL line to
//! stderr (uncaptured) and then asserts.

use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use num_complex::Complex64;
use vortrap::dynamics::{dipole_force, radiative_polarizability};
use vortrap::mie::{locate_resonances, mie_coefficients};
use vortrap::recoil::{dipole_partition, mie_recoil, rayleigh_recoil};
use vortrap::sweep::{evaluate_row, excited_families, run_rows, wavelength_scan, write_rows, KrGrid, Output, RowResult, SweepConfig};
use vortrap::vector::norm;
use vortrap::{BeamConfig, BeamFamily, BeamSpec, Material, ScanConfig, SizeParameter, TrapModel};

const LAMBDA: f64 = 1550e-9;
const POWER: f64 = 0.5;
const STEP: f64 = 0.01;

fn report(name: &str, pass: bool, detail: String) {
    let line = format!("[acceptance] {} {name}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "{name}: {detail}");
}

/// splitmix64, enough for reproducible sampling
struct Rng(u64);

impl Rng {
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next()
    }
}

fn beam(family: BeamFamily, na: f64, cp: bool) -> BeamConfig {
    let b = BeamSpec::new(family, POWER, LAMBDA, na).unwrap();
    if cp {
        BeamConfig::counterpropagating(b)
    } else {
        BeamConfig::single(b)
    }
}

fn sweep(config: BeamConfig, material: Material, lo: f64, hi: f64, outputs: &[Output]) -> SweepConfig {
    SweepConfig {
        beam: config,
        material,
        kr_grid: KrGrid { min: lo, max: hi, step: STEP },
        outputs: outputs.iter().copied().collect(),
        wavelengths: None,
        radius: None,
        scan: ScanConfig::default(),
    }
}

fn trapped(r: &RowResult) -> bool {
    r.trap.as_ref().is_some_and(|t| t.trapped)
}

/// Contiguous runs of trapped grid points as (first, last) kR.
fn windows(rows: &[RowResult]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut open: Option<(f64, f64)> = None;
    for r in rows {
        if trapped(r) {
            open = Some(open.map_or((r.row.kr, r.row.kr), |(a, _)| (a, r.row.kr)));
        } else if let Some(w) = open.take() {
            out.push(w);
        }
    }
    out.extend(open);
    out
}

fn windows_match(found: &[(f64, f64)], expected: &[(f64, f64)], tol: f64) -> bool {
    found.len() == expected.len()
        && found
            .iter()
            .zip(expected)
            .all(|(f, e)| (f.0 - e.0).abs() <= tol + 1e-9 && (f.1 - e.1).abs() <= tol + 1e-9)
}

// Silicon scans with trap and thermal outputs, shared between criteria.
const SCAN_LO: f64 = 0.4;
const SCAN_HI: f64 = 2.0;

fn si_scan(family: BeamFamily) -> &'static [RowResult] {
    static GB: OnceLock<Vec<RowResult>> = OnceLock::new();
    static RVB: OnceLock<Vec<RowResult>> = OnceLock::new();
    static AVB: OnceLock<Vec<RowResult>> = OnceLock::new();
    let cell = match family {
        BeamFamily::GaussianLinearX => &GB,
        BeamFamily::Radial => &RVB,
        BeamFamily::Azimuthal => &AVB,
    };
    cell.get_or_init(|| {
        let cfg = sweep(beam(family, 0.8, false), Material::silicon(), SCAN_LO, SCAN_HI, &[Output::Trap, Output::Thermal]);
        run_rows(&cfg).unwrap()
    })
}

#[test]
fn optical_theorem_and_unitarity() {
    let start = Instant::now();
    let mut rng = Rng(7);
    let mut worst_balance = 0.0f64;
    let mut worst_circle = 0.0f64;
    for _ in 0..1000 {
        let x = rng.range(0.01, 20.0);
        let m = Complex64::new(rng.range(1.05, 4.0), rng.range(0.0, 0.5));
        let sp = SizeParameter::from_value(x, LAMBDA, 1.0).unwrap();
        let t = mie_coefficients(&sp, m, None).unwrap();
        let forward = t.q_ext_optical_theorem();
        worst_balance = worst_balance.max((forward - t.q_sca - t.q_abs).abs() / forward);
        let lossless = mie_coefficients(&sp, Complex64::new(m.re, 0.0), None).unwrap();
        for n in 1..=lossless.n_max {
            for c in [lossless.a[n], lossless.b[n]] {
                worst_circle = worst_circle.max(((c - 0.5).norm() - 0.5).abs());
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "optical theorem",
        worst_balance < 1e-10 && worst_circle < 1e-10 && elapsed < 10.0,
        format!("max |Qext-Qsca-Qabs|/Qext = {worst_balance:.2e}, max unitarity error = {worst_circle:.2e}, {elapsed:.2}s"),
    );
}

#[test]
fn rayleigh_force_oracle() {
    let start = Instant::now();
    let model = TrapModel::from_size_parameter(beam(BeamFamily::GaussianLinearX, 0.8, false), Material::silica(), 0.1).unwrap();
    let alpha = radiative_polarizability(model.radius, model.mie.m, model.spectrum.wavenumber());
    let w0 = model.config.beam.waist();
    let mut rng = Rng(11);
    let mut worst = 0.0f64;
    let mut count = 0;
    while count < 50 {
        let p = [rng.range(-0.5, 0.5) * w0, rng.range(-0.5, 0.5) * w0, rng.range(-0.5, 0.5) * w0];
        if norm(p) > 0.5 * w0 {
            continue;
        }
        count += 1;
        let full = model.force(p).unwrap();
        let dip = dipole_force(&model.spectrum, alpha, p).unwrap();
        let scale = norm(dip);
        for i in 0..3 {
            worst = worst.max((full[i] - dip[i]).abs() / dip[i].abs().max(1e-3 * scale));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "Rayleigh force oracle",
        worst < 0.02 && elapsed < 60.0,
        format!("max componentwise deviation {:.3}% over 50 points, {elapsed:.1}s", 100.0 * worst),
    );
}

#[test]
fn rayleigh_recoil_partition() {
    let p = dipole_partition([1.0, 0.0, 0.0], [0.0, 0.0, 1.0]).unwrap();
    let expected = [0.2, 0.4, 1.4];
    let err = (0..3).map(|j| (p[j] - expected[j]).abs()).fold(0.0, f64::max);
    let sum = p.iter().sum::<f64>();
    report(
        "Rayleigh recoil partition",
        err < 1e-6 && (sum - 2.0).abs() < 1e-6,
        format!("<dE>/eps = ({:.8}, {:.8}, {:.8}), sum {sum:.8}", p[0], p[1], p[2]),
    );
}

#[test]
fn recoil_crossover() {
    let model = TrapModel::from_size_parameter(beam(BeamFamily::GaussianLinearX, 0.8, false), Material::silica(), 0.1).unwrap();
    let rep = vortrap::dynamics::trap_report(&model, &ScanConfig::default()).unwrap();
    let p = rep.evaluation_point;
    let mie = mie_recoil(&model.spectrum, &model.mie, p, model.mass, rep.frequencies).unwrap();
    let intensity = model.spectrum.intensity(p).unwrap();
    let ray = rayleigh_recoil(intensity, &model.mie, model.mass, [1.0, 0.0, 0.0], [0.0, 0.0, 1.0], rep.frequencies).unwrap();
    let ratio = [0, 1, 2].map(|j| mie.edot[j] / ray.edot[j]);
    report(
        "Mie/Rayleigh recoil crossover",
        ratio.iter().all(|r| (r - 1.0).abs() <= 0.05),
        format!("Mie/Rayleigh Edot per axis = ({:.4}, {:.4}, {:.4}), tolerance 5%", ratio[0], ratio[1], ratio[2]),
    );
}

#[test]
fn trapping_windows() {
    let start = Instant::now();
    let avb = windows(si_scan(BeamFamily::Azimuthal));
    let rvb = windows(si_scan(BeamFamily::Radial));
    let avb_ok = windows_match(&avb, &[(1.30, 1.36), (1.54, 1.59)], 0.05);
    let rvb_ok = windows_match(&rvb, &[(0.4, 0.74), (1.35, 1.46)], 0.05);
    report(
        "trapping windows",
        avb_ok && rvb_ok,
        format!(
            "AVB {avb:?} (expected [1.30,1.36],[1.54,1.59]); RVB {rvb:?} (expected [0.4,0.74],[1.35,1.46]); edges within 0.05, {:.0}s",
            start.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn gaussian_breakdown() {
    let rows = si_scan(BeamFamily::GaussianLinearX);
    let w = windows(rows);
    // the window that starts at the low end of the scan
    let edge = w.first().filter(|w| (w.0 - SCAN_LO).abs() < 1e-9).map(|w| w.1);
    let later = w.iter().skip(1).copied().collect::<Vec<_>>();
    let pass = edge.is_some_and(|e| (e - 0.8).abs() <= 0.05);
    report(
        "GB breakdown",
        pass,
        format!("last trapped kR {edge:?} (expected 0.8 +- 0.05); later trapped intervals {later:?}"),
    );
}

fn row(family: BeamFamily, material: Material, na: f64, cp: bool, kr: f64) -> RowResult {
    let cfg = sweep(beam(family, na, cp), material, kr, kr + STEP, &[Output::Trap, Output::Recoil]);
    evaluate_row(&cfg, None, kr)
}

#[test]
fn headline_recoil_ratios() {
    use BeamFamily::*;
    let cases = [
        ("Si RVB vs SiO2 GB, kR 1.39", row(Radial, Material::silicon(), 0.8, false, 1.39), row(GaussianLinearX, Material::silica(), 0.8, false, 1.39), 9.2, 0.20),
        ("Si AVB vs SiO2 GB, kR 1.36", row(Azimuthal, Material::silicon(), 0.8, false, 1.36), row(GaussianLinearX, Material::silica(), 0.8, false, 1.36), 6.25, 0.20),
        ("counterpropagating Si AVB vs SiO2 GB, kR 1.97", row(Azimuthal, Material::silicon(), 0.4, true, 1.97), row(GaussianLinearX, Material::silica(), 0.4, true, 1.97), 10.6, 0.20),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, test, reference, expected, tol) in cases {
        // reduction factor: reference heating over test heating
        let r = reference.row.gamma[2] / test.row.gamma[2];
        let ok = trapped(&test) && (r / expected - 1.0).abs() <= tol;
        pass &= ok;
        detail.push(format!("{name}: {r:.3} (expected {expected}, trapped {})", trapped(&test)));
    }
    let rvb = row(BeamFamily::Radial, Material::silica(), 0.8, false, 0.4);
    let gb = row(BeamFamily::GaussianLinearX, Material::silica(), 0.8, false, 0.4);
    let r = rvb.row.gamma[2] / gb.row.gamma[2];
    let ok = (r / 0.34 - 1.0).abs() <= 0.15;
    pass &= ok;
    detail.push(format!("SiO2 RVB/GB axial gamma, kR 0.4: {r:.3} (expected 0.34)"));
    report("headline recoil ratios", pass, detail.join("; "));
}

#[test]
fn axial_frequency_ratio() {
    let lo = 1.0;
    let hi = 1.8;
    let run = |family| run_rows(&sweep(beam(family, 0.8, false), Material::silica(), lo, hi, &[Output::Trap])).unwrap();
    let rvb = run(BeamFamily::Radial);
    let gb = run(BeamFamily::GaussianLinearX);
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for (a, b) in rvb.iter().zip(&gb) {
        if !(trapped(a) && trapped(b)) {
            continue;
        }
        let r = a.row.frequency_khz[2] / b.row.frequency_khz[2];
        if r > best.1 {
            best = (a.row.kr, r);
        }
    }
    report(
        "axial frequency ratio",
        (best.0 - 1.38).abs() <= 0.05 + 1e-9 && (best.1 / 2.56 - 1.0).abs() <= 0.15,
        format!("SiO2 RVB/GB axial Omega ratio peaks at {:.3} at kR {:.2} over [{lo}, {hi}] (expected 2.56 at 1.38)", best.1, best.0),
    );
}

#[test]
fn azimuthal_equilibrium_position() {
    let r = row(BeamFamily::Azimuthal, Material::silicon(), 0.8, false, 1.56);
    let z = r.trap.as_ref().and_then(|t| t.z_eq).map(|z| z * 1e6);
    report(
        "AVB equilibrium position",
        z.is_some_and(|z| (z + 1.3).abs() <= 0.2),
        format!("z_eq = {z:?} um at kR 1.56 (expected -1.3 +- 0.2 um)"),
    );
}

#[test]
fn wavelength_tuning() {
    let mut cfg = sweep(beam(BeamFamily::Azimuthal, 0.8, false), Material::silicon(), 1.0, 2.0, &[Output::Trap]);
    cfg.radius = Some(385e-9);
    cfg.wavelengths = Some((0..=20).map(|i| (1550.0 + i as f64) * 1e-9).collect());
    let points = wavelength_scan(&cfg).unwrap();
    let k: Vec<f64> = points.iter().map(|p| p.stiffness[0]).collect();
    let monotone = k.windows(2).all(|w| w[1] < w[0]);
    let sign_change = k.windows(2).any(|w| w[0] > 0.0 && w[1] <= 0.0);
    let shown: Vec<String> = k.iter().step_by(5).map(|v| format!("{v:.3e}")).collect();
    report(
        "wavelength tuning",
        monotone && sign_change,
        format!("transverse stiffness N/m at 1550,1555,..,1570 nm: [{}]; monotone decreasing {monotone}, sign change {sign_change}", shown.join(", ")),
    );
}

fn temperature_maxima(rows: &[RowResult]) -> Vec<f64> {
    rows.windows(3)
        .filter(|w| {
            let t = [w[0].row.temperature, w[1].row.temperature, w[2].row.temperature];
            t.iter().all(|x| x.is_finite()) && t[1] > t[0] && t[1] >= t[2]
        })
        .map(|w| w[1].row.kr)
        .collect()
}

#[test]
fn thermal_alignment() {
    let mut pass = true;
    let mut detail = Vec::new();
    let si = Material::silicon();
    for family in [BeamFamily::Azimuthal, BeamFamily::Radial] {
        let rows = si_scan(family);
        let res = locate_resonances(si.refractive_index, (SCAN_LO - 0.1, SCAN_HI + 0.1), &excited_families(family), 0.002).unwrap();
        let peaks = temperature_maxima(rows);
        let stray: Vec<f64> = peaks
            .iter()
            .copied()
            .filter(|kr| res.entries.iter().all(|r| (r.kr_peak - kr).abs() > 0.03 + 1e-9))
            .collect();
        pass &= !peaks.is_empty() && stray.is_empty();
        detail.push(format!("{}: T maxima {peaks:?}, unaligned {stray:?}", family.short_name()));
    }
    for family in [BeamFamily::GaussianLinearX, BeamFamily::Azimuthal, BeamFamily::Radial] {
        let hottest = si_scan(family)
            .iter()
            .filter(|r| trapped(r))
            .map(|r| (r.row.kr, r.row.temperature))
            .fold((f64::NAN, f64::NEG_INFINITY), |a, b| if b.1 > a.1 || b.1.is_nan() { b } else { a });
        let ok = hottest.1 == f64::NEG_INFINITY || hottest.1 < 1680.0;
        pass &= ok;
        detail.push(format!("{} hottest trapped point {:.0} K at kR {:.2}", family.short_name(), hottest.1, hottest.0));
    }
    report("thermal alignment", pass, detail.join("; "));
}

#[test]
fn sweep_determinism() {
    let cfg = sweep(
        beam(BeamFamily::Radial, 0.8, false),
        Material::silicon(),
        0.3,
        0.6,
        &[Output::Trap, Output::Recoil, Output::Thermal],
    );
    let render = || {
        let rows: Vec<_> = run_rows(&cfg).unwrap().into_iter().map(|r| r.row).collect();
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        buf
    };
    let first = render();
    let second = render();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(render);
    report(
        "determinism",
        first == second && first == single,
        format!("{} bytes, repeat identical {}, single-thread identical {}", first.len(), first == second, first == single),
    );
}
