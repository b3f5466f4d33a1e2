//! Fourier coefficients of the inclusion indicator, `chi(n) = int_D exp(-i 2 pi n.x) dx`.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use faer::c64;
use sha2::{Digest, Sha256};

use crate::crystal::{InclusionGeometry, Shape, VoxelGrid};
use crate::error::{Error, Result};

const CACHE_HEADER: &str = "phononic-chi-table v1";

/// Dense table of indicator coefficients over `[-range, range]^3`, `range = 2 * cutoff_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorCoefficients {
    pub cutoff_n: usize,
    pub range: i64,
    pub volume: f64,
    table: Vec<c64>,
}

impl IndicatorCoefficients {
    fn side(&self) -> usize {
        (2 * self.range + 1) as usize
    }

    fn offset(&self, n: [i64; 3]) -> Option<usize> {
        if n.iter().any(|&c| c.abs() > self.range) {
            return None;
        }
        let s = self.side() as i64;
        let r = self.range;
        Some((((n[0] + r) * s + (n[1] + r)) * s + (n[2] + r)) as usize)
    }

    /// Coefficient at lattice index `n`; panics outside the tabulated range.
    pub fn get(&self, n: [i64; 3]) -> c64 {
        let off = self.offset(n).unwrap_or_else(|| panic!("index {n:?} outside table range {}", self.range));
        self.table[off]
    }

    pub fn try_get(&self, n: [i64; 3]) -> Option<c64> {
        self.offset(n).map(|o| self.table[o])
    }

    /// Identically zero table (empty inclusion); used for degenerate checks.
    pub fn zero(cutoff_n: usize) -> Self {
        let range = 2 * cutoff_n as i64;
        let side = (2 * range + 1) as usize;
        Self { cutoff_n, range, volume: 0.0, table: vec![c64::new(0.0, 0.0); side * side * side] }
    }

    /// Sum of |chi(n)|^2 over `|n|_inf <= r`.
    pub fn parseval_partial(&self, r: i64) -> f64 {
        let r = r.min(self.range);
        let mut s = 0.0;
        for i in -r..=r {
            for j in -r..=r {
                for k in -r..=r {
                    s += self.get([i, j, k]).norm_sqr();
                }
            }
        }
        s
    }

    fn from_fn(cutoff_n: usize, volume: f64, f: impl Fn([i64; 3]) -> c64) -> Self {
        let range = 2 * cutoff_n as i64;
        let side = (2 * range + 1) as usize;
        let mut table = Vec::with_capacity(side * side * side);
        for i in -range..=range {
            for j in -range..=range {
                for k in -range..=range {
                    table.push(f([i, j, k]));
                }
            }
        }
        Self { cutoff_n, range, volume, table }
    }
}

/// Radial part of the ball transform, `4 pi (sin(a s) - a s cos(a s)) / s^3`, with the
/// small-argument series near `s = 0`.
pub fn ball_radial(a: f64, s: f64) -> f64 {
    let x = a * s;
    if x < 1e-3 {
        let x2 = x * x;
        4.0 * PI * a.powi(3) * (1.0 / 3.0 - x2 / 30.0 + x2 * x2 / 840.0)
    } else {
        4.0 * PI * (x.sin() - x * x.cos()) / s.powi(3)
    }
}

/// Transform of the ball indicator at an arbitrary frequency `xi`.
pub fn ball_transform(center: [f64; 3], a: f64, xi: [f64; 3]) -> c64 {
    let s = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
    let phase = -(xi[0] * center[0] + xi[1] * center[1] + xi[2] * center[2]);
    c64::from_polar(ball_radial(a, s), phase)
}

pub fn sphere_coefficients(center: [f64; 3], radius: f64, cutoff_n: usize) -> IndicatorCoefficients {
    let volume = 4.0 * PI * radius.powi(3) / 3.0;
    IndicatorCoefficients::from_fn(cutoff_n, volume, |n| {
        if n == [0, 0, 0] {
            c64::new(volume, 0.0)
        } else {
            let xi = [2.0 * PI * n[0] as f64, 2.0 * PI * n[1] as f64, 2.0 * PI * n[2] as f64];
            ball_transform(center, radius, xi)
        }
    })
}

/// `int_{x0}^{x0+h} exp(-i w x) dx`.
pub fn interval_transform(x0: f64, h: f64, w: f64) -> c64 {
    let t = 0.5 * w * h;
    let sinc = if t.abs() < 1e-8 { 1.0 - t * t / 6.0 } else { t.sin() / t };
    c64::from_polar(h * sinc, -w * (x0 + 0.5 * h))
}

pub fn voxel_coefficients(grid: &VoxelGrid, cutoff_n: usize) -> Result<IndicatorCoefficients> {
    let cells: Vec<[usize; 3]> = grid.occupied_cells().collect();
    if cells.is_empty() {
        return Err(Error::InvalidInput("voxel set is empty (volume must be positive)".into()));
    }
    let range = 2 * cutoff_n as i64;
    let h = grid.cell_size();
    // factors[d][(n + range) * res_d + i]
    let factors: Vec<Vec<c64>> = (0..3)
        .map(|d| {
            let res = grid.resolution[d];
            let mut v = Vec::with_capacity((2 * range as usize + 1) * res);
            for n in -range..=range {
                for i in 0..res {
                    v.push(interval_transform(i as f64 * h[d], h[d], 2.0 * PI * n as f64));
                }
            }
            v
        })
        .collect();
    let volume = grid.volume();
    Ok(IndicatorCoefficients::from_fn(cutoff_n, volume, |n| {
        let mut s = c64::new(0.0, 0.0);
        let rows: Vec<usize> =
            (0..3).map(|d| (n[d] + range) as usize * grid.resolution[d]).collect();
        for c in &cells {
            s += factors[0][rows[0] + c[0]] * factors[1][rows[1] + c[1]] * factors[2][rows[2] + c[2]];
        }
        s
    }))
}

pub fn coefficients(geometry: &InclusionGeometry, cutoff_n: usize) -> Result<IndicatorCoefficients> {
    match &geometry.shape {
        Shape::Sphere { center, radius } => Ok(sphere_coefficients(*center, *radius, cutoff_n)),
        Shape::VoxelSet(grid) => voxel_coefficients(grid, cutoff_n),
    }
}

/// On-disk store of coefficient tables keyed by a hash of (geometry, cutoff, format version).
#[derive(Debug, Clone)]
pub struct CoefficientCache {
    dir: PathBuf,
}

impl CoefficientCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn key(geometry: &InclusionGeometry, cutoff_n: usize) -> String {
        let mut h = Sha256::new();
        h.update(CACHE_HEADER.as_bytes());
        h.update(geometry.content_hash().as_bytes());
        h.update((cutoff_n as u64).to_le_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn path_for(&self, geometry: &InclusionGeometry, cutoff_n: usize) -> PathBuf {
        self.dir.join(format!("{}.chi", Self::key(geometry, cutoff_n)))
    }

    /// Loads the table if present and well-formed, otherwise computes and stores it.
    pub fn load_or_compute(
        &self,
        geometry: &InclusionGeometry,
        cutoff_n: usize,
    ) -> Result<IndicatorCoefficients> {
        let path = self.path_for(geometry, cutoff_n);
        if path.exists() {
            if let Ok(t) = read_table(&path) {
                if t.cutoff_n == cutoff_n {
                    return Ok(t);
                }
            }
        }
        let t = coefficients(geometry, cutoff_n)?;
        fs::create_dir_all(&self.dir)?;
        write_table(&path, &t)?;
        Ok(t)
    }
}

pub fn write_table(path: &Path, t: &IndicatorCoefficients) -> Result<()> {
    let mut s = String::with_capacity(t.table.len() * 48);
    s.push_str(CACHE_HEADER);
    s.push('\n');
    s.push_str(&format!("cutoff {}\nvolume {:?}\n", t.cutoff_n, t.volume));
    for v in &t.table {
        s.push_str(&format!("{:?} {:?}\n", v.re, v.im));
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, s)?;
    fs::rename(tmp, path)?;
    Ok(())
}

pub fn read_table(path: &Path) -> Result<IndicatorCoefficients> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(CACHE_HEADER) {
        return Err(Error::Cache(format!("{}: unknown header", path.display())));
    }
    let bad = || Error::Cache(format!("{}: malformed table", path.display()));
    let field = |line: Option<&str>, name: &str| -> Result<String> {
        let line = line.ok_or_else(bad)?;
        line.strip_prefix(name).map(|v| v.trim().to_string()).ok_or_else(bad)
    };
    let cutoff_n: usize = field(lines.next(), "cutoff")?.parse().map_err(|_| bad())?;
    let volume: f64 = field(lines.next(), "volume")?.parse().map_err(|_| bad())?;
    let mut t = IndicatorCoefficients::zero(cutoff_n);
    t.volume = volume;
    let mut count = 0;
    for (slot, line) in t.table.iter_mut().zip(lines.by_ref()) {
        let mut it = line.split_whitespace();
        let re: f64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let im: f64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        *slot = c64::new(re, im);
        count += 1;
    }
    if count != t.table.len() || lines.next().is_some() {
        return Err(bad());
    }
    Ok(t)
}
