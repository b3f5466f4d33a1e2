use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const MATERIAL: &str = "material.lambda1 = 1.0\nmaterial.mu1 = 1.0\nmaterial.rho1 = 1.0\nmaterial.rho2 = 1.0\n";
const SPHERE: &str = "geometry.shape = \"sphere\"\ngeometry.radius = 0.2\n";

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("phononic-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_phononic"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Data rows as string cells, skipping the comment and header lines.
fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn missing_geometry_key_exits_2_naming_the_key() {
    let dir = scratch("missing");
    let o = run(&dir, MATERIAL, &["bands"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`geometry.shape`"), "{}", stderr(&o));
    let o = run(&dir, &format!("{MATERIAL}geometry.shape = \"sphere\"\n"), &["bands"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`geometry.radius`"), "{}", stderr(&o));
}

#[test]
fn invalid_crystal_exits_2_before_compute() {
    let dir = scratch("invalid");
    let o = run(&dir, &format!("{MATERIAL}geometry.shape = \"sphere\"\ngeometry.radius = 0.3\n"), &["bands"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(!dir.join("out").exists());
    let o = run(&dir, &format!("{MATERIAL}{SPHERE}sweep.contrasts = [0.5]\n"), &["bands"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn homogeneous_acoustic_branches_vanish_at_gamma() {
    let dir = scratch("homogeneous");
    let cfg = format!("{MATERIAL}geometry.shape = \"empty\"\nsweep.samples = 4\nsweep.branches = 6\n");
    let o = run(&dir, &cfg, &["--cutoff", "1", "bands"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(&dir.join("out/bands.csv"));
    let at = |p: usize, j: usize| {
        num(&r.iter().find(|c| c[1] == p.to_string() && c[6] == j.to_string()).unwrap()[7])
    };
    for j in 1..=3 {
        assert_eq!(at(0, j), 0.0);
        // Acoustic branches grow away from Gamma, as mu |alpha|^2 or (lambda + 2 mu) |alpha|^2.
        assert!(at(1, j) > 0.0 && at(1, j) < at(2, j));
        let a2 = (std::f64::consts::PI / 3.0).powi(2);
        assert!(at(1, j) <= 3.0 * a2 * (1.0 + 1e-8));
    }
    let first = fs::read_to_string(dir.join("out/bands.csv")).unwrap();
    assert!(first.starts_with("# geometry_hash=empty cutoff=1\nk,point,s,"));
    let plot = fs::read_to_string(dir.join("out/bands_k1_j1.dat")).unwrap();
    assert_eq!(plot.lines().next(), Some("0 0"));
}

#[test]
fn warm_cache_rerun_gives_identical_bytes() {
    let dir = scratch("cache");
    let cache = dir.join("cache");
    let cfg = format!("{MATERIAL}{SPHERE}sweep.samples = 3\nsweep.branches = 4\nsweep.contrasts = [1.0, 50.0]\n");
    let args = ["--cutoff", "1", "--cache", cache.to_str().unwrap(), "bands"];
    let read = || fs::read(dir.join("out/bands.csv")).unwrap();
    assert!(run(&dir, &cfg, &args).status.success());
    let cold = read();
    assert_eq!(fs::read_dir(&cache).unwrap().count(), 1);
    assert!(run(&dir, &cfg, &args).status.success());
    assert_eq!(read(), cold);
    let o = run(&dir, &cfg, &["--cutoff", "1", "--workers", "1", "bands"]);
    assert!(o.status.success());
    assert_eq!(read(), cold);
}

#[test]
fn empty_inclusion_structural_warns() {
    let dir = scratch("empty");
    let o = run(&dir, &format!("{MATERIAL}geometry.shape = \"empty\"\nsweep.grid = 2\n"), &["--cutoff", "1", "structural"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning: no interior structural values"));
    assert!(rows(&dir.join("out/structural.csv")).is_empty());
}

#[test]
fn sphere_structural_respects_bound_and_echoes_z_star() {
    let dir = scratch("structural");
    let o = run(&dir, &format!("{MATERIAL}{SPHERE}sweep.grid = 2\n"), &["--cutoff", "1", "structural"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(&dir.join("out/structural.csv"));
    assert!(!r.is_empty());
    let mut by_alpha: std::collections::BTreeMap<String, (f64, f64)> = Default::default();
    for c in &r {
        let key = c[..3].join(",");
        let tau = num(&c[4]);
        assert!(tau >= -0.275, "tau {tau}");
        assert_eq!(num(&c[5]), (tau + 0.5) / (tau - 0.5));
        let e = by_alpha.entry(key).or_insert((tau, num(&c[7])));
        e.0 = e.0.min(tau);
    }
    for (tau_min, z_star) in by_alpha.values() {
        assert_eq!(*z_star, (tau_min + 0.5) / (tau_min - 0.5));
    }
}

#[test]
fn radius_reports_a_third() {
    let dir = scratch("radius");
    let o = run(&dir, &format!("{MATERIAL}{SPHERE}"), &["--cutoff", "1", "radius"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("|z*| = 0.3333333333333333"), "{}", stdout(&o));
    for c in rows(&dir.join("out/radius.csv")) {
        assert_eq!(num(&c[7]), -1.0 / 3.0);
        assert!(num(&c[8]) > 0.0 && num(&c[9]) == 1.0 / num(&c[8]));
    }
}

#[test]
fn series_flags_rows_outside_the_disk() {
    let dir = scratch("series");
    let cfg = format!("{MATERIAL}{SPHERE}series.contrasts = [10.0, 1e6]\n");
    let o = run(&dir, &cfg, &["--cutoff", "1", "series"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("outside the convergence disk"));
    let r = rows(&dir.join("out/series.csv"));
    assert_eq!((r[0][5].as_str(), r[0][6].as_str()), ("", "false"));
    assert_eq!(r[1][6], "true");
    assert!(num(&r[1][4]) <= num(&r[1][5]) * 1.1);
}

#[test]
fn gap_on_synthetic_spectra() {
    let dir = scratch("gap");
    let spectra = dir.join("spectra.toml");
    fs::write(&spectra, "delta = [1.0, 2.0, 3.0, 10.0]\nomega = [5.0, 6.0]\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_phononic"))
        .args(["gap", "--spectra", spectra.to_str().unwrap(), "--out", dir.join("out").to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("gap (3,5): criterion delta_{3} < omega_1 holds"), "{text}");
    assert!(text.contains("no gap at j = 2: criterion delta_{4} < omega_2 fails"), "{text}");
    assert_eq!(rows(&dir.join("out/gap.csv")), vec![vec!["1", "3", "5", "true"], vec!["2", "10", "6", "false"]]);
}

#[test]
fn gap_without_spectra_is_a_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_phononic")).arg("gap").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
