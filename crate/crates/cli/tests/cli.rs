use std::path::Path;
use std::process::{Command, Output};

fn vortrap(args: &[&str], cache: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vortrap"))
        .args(args)
        .env("VORTRAP_CACHE_DIR", cache)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn resonance_table_for_index_one_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "vac.toml",
        "[material]\nname = \"void\"\nrefractive_index = [1.0, 0.0]\ndensity = 1.0\n",
    );
    let o = vortrap(&["resonances", "--config", &cfg, "--kr-min", "0.2", "--kr-max", "2.2"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o), "family,order,kR,width\n");

    let o = vortrap(&["resonances", "--material", "Si", "--kr-min", "0.2", "--kr-max", "2.2"], dir.path());
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("TE,")));
    assert!(text.lines().any(|l| l.starts_with("TM,")));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "[beam]\nfamily = \"laguerre\"\n");
    assert_eq!(vortrap(&["mie", "--config", &bad, "--kr", "1"], dir.path()).status.code(), Some(2));
    let broken = write(dir.path(), "broken.toml", "[beam\n");
    assert_eq!(vortrap(&["mie", "--config", &broken, "--kr", "1"], dir.path()).status.code(), Some(2));
    let missing = dir.path().join("nope.toml").display().to_string();
    assert_eq!(vortrap(&["mie", "--config", &missing, "--kr", "1"], dir.path()).status.code(), Some(2));
    assert_eq!(vortrap(&["force", "--kr", "-1"], dir.path()).status.code(), Some(2));
    assert_eq!(vortrap(&["mie"], dir.path()).status.code(), Some(2));
}

#[test]
fn data_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv").display().to_string();
    assert_eq!(vortrap(&["compare", &a, &a], dir.path()).status.code(), Some(3));
    let junk = write(dir.path(), "junk.csv", "x,y\n1,2\n");
    assert_eq!(vortrap(&["compare", &junk, &junk], dir.path()).status.code(), Some(3));
    let cfg = write(
        dir.path(),
        "nk.toml",
        &format!("[material]\nname = \"SiO2\"\nnk_table = \"{}\"\n", dir.path().join("missing.csv").display()),
    );
    let o = vortrap(&["thermal", "--config", &cfg, "--kr", "0.2"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn point_commands_emit_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = vortrap(&["mie", "--material", "Si", "--kr", "0.9"], dir.path());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["q_sca"].as_f64().unwrap() > 0.0);

    let o = vortrap(&["force", "--kr", "0.2", "--position", "100nm,0,0"], dir.path());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    // restoring force towards the axis
    assert!(v["force"][0].as_f64().unwrap() < 0.0);

    let profile = dir.path().join("profile.csv");
    let o = vortrap(&["trap", "--kr", "0.3", "--profile", profile.to_str().unwrap()], dir.path());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["trapped"], serde_json::Value::Bool(true));
    let text = std::fs::read_to_string(profile).unwrap();
    assert!(text.starts_with("kR,axis,coord_um,force_N,U_kT\n"));

    let o = vortrap(&["recoil", "--kr", "0.3"], dir.path());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["gamma"][2].as_f64().unwrap() > 0.0);

    let o = vortrap(&["thermal", "--kr", "0.3", "--material", "Si"], dir.path());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["balance"]["temperature"].as_f64().unwrap() > 293.0);

    let o = vortrap(&["focus", "--beam", "avb", "--samples", "5", "--half-width", "1 um"], dir.path());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("s_um,I_x_W_per_m2,I_z_W_per_m2\n"));
}

#[test]
fn sweep_writes_tables_manifest_and_reuses_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let cfg = write(
        dir.path(),
        "sweep.toml",
        r#"
[beam]
family = "rvb"
wavelength = "1550 nm"

[material]
name = "Si"

[sweep]
kr_min = 0.3
kr_max = 0.5
kr_step = 0.1
outputs = ["trap", "recoil", "thermal", "resonances", "potential_profile"]
"#,
    );
    let out = dir.path().join("run");
    let out_s = out.to_str().unwrap();
    let o = vortrap(&["sweep", "--config", &cfg, "--out", out_s, "--jobs", "1"], &cache);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let results = std::fs::read_to_string(out.join("results.csv")).unwrap();
    let mut lines = results.lines();
    assert_eq!(
        lines.next(),
        Some("kR,R_nm,z_eq_um,dUx_kT,dUy_kT,dUz_kT,fx_kHz,fy_kHz,fz_kHz,Gx_per_s,Gy_per_s,Gz_per_s,T_K,flags")
    );
    assert_eq!(lines.count(), 3);
    for f in ["resonances.csv", "profiles.csv", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["rows"], 3);
    assert_eq!(manifest["cached_rows"], 0);
    let profiles = std::fs::read(out.join("profiles.csv")).unwrap();

    // second run served from the cache, byte-identical
    let o = vortrap(&["sweep", "--config", &cfg, "--out", out_s], &cache);
    assert!(o.status.success());
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["cached_rows"], 3);
    assert_eq!(std::fs::read_to_string(out.join("results.csv")).unwrap(), results);
    assert_eq!(std::fs::read(out.join("profiles.csv")).unwrap(), profiles);

    // fresh computation matches the cached rows
    let fresh = dir.path().join("fresh");
    let o = vortrap(&["sweep", "--config", &cfg, "--out", fresh.to_str().unwrap(), "--no-cache"], &cache);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(fresh.join("results.csv")).unwrap(), results);

    // a changed config misses the cache
    let o = vortrap(&["sweep", "--config", &cfg, "--out", out_s, "--power", "0.4"], &cache);
    assert!(o.status.success());
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["cached_rows"], 0);

    let a = out.join("results.csv");
    let b = fresh.join("results.csv");
    let o = vortrap(&["compare", a.to_str().unwrap(), b.to_str().unwrap()], &cache);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("kR,fx_ratio,"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn wavelength_mode_writes_stiffness_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "wl.toml",
        r#"
[beam]
family = "gb"

[material]
name = "SiO2"

[sweep]
kr_min = 0.2
kr_max = 0.3
kr_step = 0.1
wavelengths = ["1550 nm", "1560 nm"]
radius = "60 nm"
"#,
    );
    let out = dir.path().join("wl");
    let o = vortrap(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--no-cache"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("wavelengths.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("wavelength_nm,kR,R_nm"));
    assert!(rows[1].starts_with("1550,"));
}
