//! Run configuration from a TOML file with dotted section keys (`material.mu1 = 1.0`).
//! Quasi-momenta are written in units of pi.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use phononic::crystal::{
    validate, validate_material, BZPath, CrystalSpec, InclusionGeometry, Material, QuasiMomentum,
    VoxelGrid, DEFAULT_BUFFER_RATIO, DEFAULT_THETA,
};
use toml::{Table, Value};

/// Configuration or validation failure (exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn fail<T>(msg: impl Into<String>) -> Result<T> {
    Err(ConfigError(msg.into()).into())
}

/// Raw key-value access with typed getters; a missing required key names the key.
pub struct Keys {
    table: Table,
}

impl Keys {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table: Table = text.parse().map_err(|e| ConfigError(format!("config is not valid TOML: {e}")))?;
        Ok(Self { table })
    }

    fn get(&self, key: &str) -> Option<&Value> {
        let mut parts = key.split('.');
        let mut cur = self.table.get(parts.next()?)?;
        for p in parts {
            cur = cur.as_table()?.get(p)?;
        }
        Some(cur)
    }

    fn require(&self, key: &str) -> Result<&Value> {
        match self.get(key) {
            Some(v) => Ok(v),
            None => fail(format!("missing required key `{key}`")),
        }
    }

    fn as_f64(key: &str, v: &Value) -> Result<f64> {
        match v {
            Value::Float(x) => Ok(*x),
            Value::Integer(i) => Ok(*i as f64),
            _ => fail(format!("key `{key}` must be a number")),
        }
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        Self::as_f64(key, self.require(key)?)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        self.get(key).map_or(Ok(default), |v| Self::as_f64(key, v))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Integer(i)) if *i >= 0 => Ok(*i as usize),
            Some(_) => fail(format!("key `{key}` must be a non-negative integer")),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(_) => fail(format!("key `{key}` must be true or false")),
        }
    }

    pub fn str(&self, key: &str) -> Result<&str> {
        match self.require(key)? {
            Value::String(s) => Ok(s),
            _ => fail(format!("key `{key}` must be a string")),
        }
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> Result<&'a str> {
        if self.get(key).is_none() {
            return Ok(default);
        }
        self.str(key)
    }

    fn list(key: &str, v: &Value) -> Result<Vec<f64>> {
        match v {
            Value::Array(a) => a.iter().map(|x| Self::as_f64(key, x)).collect(),
            _ => fail(format!("key `{key}` must be an array of numbers")),
        }
    }

    pub fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        self.get(key).map_or(Ok(default.to_vec()), |v| Self::list(key, v))
    }

    fn vec3(key: &str, v: &Value) -> Result<[f64; 3]> {
        let l = Self::list(key, v)?;
        match l.as_slice() {
            [a, b, c] => Ok([*a, *b, *c]),
            _ => fail(format!("key `{key}` must have three components")),
        }
    }

    pub fn vec3_or(&self, key: &str, default: [f64; 3]) -> Result<[f64; 3]> {
        self.get(key).map_or(Ok(default), |v| Self::vec3(key, v))
    }

    pub fn vec3_list(&self, key: &str) -> Result<Option<Vec<[f64; 3]>>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Array(a)) => a.iter().map(|v| Self::vec3(key, v)).collect::<Result<_>>().map(Some),
            Some(_) => fail(format!("key `{key}` must be an array of 3-vectors")),
        }
    }
}

/// The inclusion, or none at all (homogeneous matrix material throughout).
#[derive(Debug, Clone)]
pub enum Inclusion {
    Empty,
    Present(InclusionGeometry),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub material: Material,
    pub inclusion: Inclusion,
    pub cutoff: usize,
    pub enrichment: bool,
    pub degree: usize,
    pub path: BZPath,
    pub grid: usize,
    pub contrasts: Vec<f64>,
    pub branches: usize,
    pub out: PathBuf,
    pub cache: Option<PathBuf>,
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub cutoff: Option<usize>,
    pub branches: Option<usize>,
}

fn pi_units(a: [f64; 3]) -> QuasiMomentum {
    QuasiMomentum::new([a[0] * PI, a[1] * PI, a[2] * PI])
}

pub fn alpha_from(keys: &Keys, key: &str, default: [f64; 3]) -> Result<QuasiMomentum> {
    let a = pi_units(keys.vec3_or(key, default)?);
    if !a.in_zone() {
        return fail(format!("key `{key}`: quasi-momentum {:?} is outside (-pi, pi]^3", a.alpha));
    }
    Ok(a)
}

fn geometry(keys: &Keys) -> Result<Inclusion> {
    let shape = keys.str("geometry.shape")?;
    let theta = keys.f64_or("geometry.theta", DEFAULT_THETA)?;
    let g = match shape {
        "empty" => return Ok(Inclusion::Empty),
        "sphere" => {
            let mut g = InclusionGeometry::sphere(keys.vec3_or("geometry.center", [0.5; 3])?, keys.f64("geometry.radius")?);
            g.buffer_ratio_q = keys.f64_or("geometry.buffer_ratio", DEFAULT_BUFFER_RATIO)?;
            g.theta = theta;
            g
        }
        "voxels" => {
            let res = keys.vec3_or("geometry.resolution", [0.0; 3])?;
            if res.iter().any(|&r| r < 1.0 || r.fract() != 0.0) {
                return fail("key `geometry.resolution` must hold three positive integers");
            }
            let res = [res[0] as usize, res[1] as usize, res[2] as usize];
            let mut grid = VoxelGrid::empty(res);
            let boxes = match keys.get("geometry.boxes") {
                Some(Value::Array(a)) => a.clone(),
                Some(_) => return fail("key `geometry.boxes` must be an array of [lo, lo, lo, hi, hi, hi]"),
                None => return fail("missing required key `geometry.boxes`"),
            };
            for b in &boxes {
                let l = Keys::list("geometry.boxes", b)?;
                if l.len() != 6 || l.iter().any(|&x| x < 0.0 || x.fract() != 0.0) {
                    return fail("each entry of `geometry.boxes` must be six non-negative integers");
                }
                let u: Vec<usize> = l.iter().map(|&x| x as usize).collect();
                if (0..3).any(|d| u[d] >= u[d + 3] || u[d + 3] > res[d]) {
                    return fail(format!("box {u:?} is empty or exceeds the resolution {res:?}"));
                }
                grid.fill_box([u[0], u[1], u[2]], [u[3], u[4], u[5]]);
            }
            // Voxel shapes carry no automatic theta.
            InclusionGeometry::voxels(grid, keys.f64("geometry.theta")?)
        }
        other => return fail(format!("key `geometry.shape`: unknown shape `{other}` (sphere, voxels, empty)")),
    };
    Ok(Inclusion::Present(g))
}

impl RunConfig {
    /// Reads and validates everything the crystal subcommands need.
    pub fn from_keys(keys: &Keys, o: &Overrides) -> Result<Self> {
        let contrast = keys.f64_or("material.contrast", 1.0)?;
        let material = Material::new(
            keys.f64("material.lambda1")?,
            keys.f64("material.mu1")?,
            contrast,
            keys.f64("material.rho1")?,
            keys.f64("material.rho2")?,
        );
        let inclusion = geometry(keys)?;
        let violations = match &inclusion {
            Inclusion::Empty => validate_material(&material),
            Inclusion::Present(g) => validate(&CrystalSpec::new(material, g.clone())),
        };
        let contrasts = keys.list_or("sweep.contrasts", &[contrast])?;
        let mut problems: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        for &k in &contrasts {
            if !(k >= 1.0) {
                problems.push(format!("sweep.contrasts: contrast {k} must be >= 1"));
            }
        }
        let samples = keys.usize_or("sweep.samples", 8)?;
        let path = match keys.vec3_list("sweep.path")? {
            None => BZPath::standard(samples),
            Some(v) => BZPath { vertices: v.into_iter().map(pi_units).collect(), samples_per_segment: samples },
        };
        problems.extend(phononic::crystal::validate_path(&path).iter().map(|v| format!("sweep.path: {v}")));
        if !problems.is_empty() {
            return fail(format!("validation failed:\n  {}", problems.join("\n  ")));
        }
        let cutoff = o.cutoff.unwrap_or(keys.usize_or("basis.cutoff", 3)?);
        if cutoff == 0 {
            return fail("basis cutoff must be at least 1");
        }
        Ok(Self {
            material,
            inclusion,
            cutoff,
            enrichment: keys.bool_or("basis.enrichment", true)?,
            degree: keys.usize_or("basis.degree", phononic::enrichment::DEFAULT_BUBBLE_DEGREE)?,
            path,
            grid: keys.usize_or("sweep.grid", 3)?.max(2),
            contrasts,
            branches: o.branches.unwrap_or(keys.usize_or("sweep.branches", 10)?).max(1),
            out: o.out.clone().unwrap_or_else(|| PathBuf::from(keys.str_or("output.dir", "out").unwrap_or("out"))),
            cache: o.cache.clone(),
        })
    }

    pub fn geometry(&self) -> Result<&InclusionGeometry> {
        match &self.inclusion {
            Inclusion::Present(g) => Ok(g),
            Inclusion::Empty => fail("this subcommand needs an inclusion; geometry.shape is `empty`"),
        }
    }

    pub fn geometry_hash(&self) -> String {
        match &self.inclusion {
            Inclusion::Present(g) => g.short_hash(),
            Inclusion::Empty => "empty".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "material.lambda1 = 1.0\nmaterial.mu1 = 1\nmaterial.rho1 = 1.0\nmaterial.rho2 = 1.0\n";

    #[test]
    fn dotted_keys_and_defaults() {
        let k = Keys::parse(&format!("{BASE}geometry.shape = \"sphere\"\ngeometry.radius = 0.2\n")).unwrap();
        let c = RunConfig::from_keys(&k, &Overrides::default()).unwrap();
        assert_eq!(c.material.mu1, 1.0);
        assert_eq!(c.cutoff, 3);
        assert_eq!(c.contrasts, vec![1.0]);
    }

    #[test]
    fn missing_key_is_named() {
        let k = Keys::parse(BASE).unwrap();
        let e = RunConfig::from_keys(&k, &Overrides::default()).unwrap_err();
        assert!(e.downcast_ref::<ConfigError>().unwrap().0.contains("`geometry.shape`"));
    }

    #[test]
    fn violations_are_reported() {
        let k = Keys::parse(&format!("{BASE}geometry.shape = \"sphere\"\ngeometry.radius = 0.3\n")).unwrap();
        let e = RunConfig::from_keys(&k, &Overrides::default()).unwrap_err();
        assert!(e.to_string().contains("buffered containment"));
    }
}
