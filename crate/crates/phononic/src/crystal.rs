//! Problem-instance types: material constants, inclusion geometry, quasi-momenta and
//! Brillouin-zone paths.

use std::f64::consts::PI;
use std::fmt;

use sha2::{Digest, Sha256};

/// Isotropic inclusion material with the matrix stiffness given as `contrast_k` times
/// the inclusion stiffness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub lambda1: f64,
    pub mu1: f64,
    pub contrast_k: f64,
    pub rho1: f64,
    pub rho2: f64,
}

impl Material {
    pub fn new(lambda1: f64, mu1: f64, contrast_k: f64, rho1: f64, rho2: f64) -> Self {
        Self { lambda1, mu1, contrast_k, rho1, rho2 }
    }

    /// Unit Lamé constants, unit densities, contrast 1.
    pub fn unit() -> Self {
        Self::new(1.0, 1.0, 1.0, 1.0, 1.0)
    }

    pub fn with_contrast(mut self, k: f64) -> Self {
        self.contrast_k = k;
        self
    }

    /// k0 = -mu1 / (2 (2 mu1 + lambda1)).
    pub fn k0(&self) -> f64 {
        -self.mu1 / (2.0 * (2.0 * self.mu1 + self.lambda1))
    }

    /// c = (lambda1 + mu1) / (lambda1 + 2 mu1), the longitudinal factor of the inverse symbol.
    pub fn lame_c(&self) -> f64 {
        (self.lambda1 + self.mu1) / (self.lambda1 + 2.0 * self.mu1)
    }

    /// Largest density, the sup norm of rho over the cell.
    pub fn rho_sup(&self) -> f64 {
        self.rho1.max(self.rho2)
    }
}

/// Boolean occupancy on a `resolution[0] x resolution[1] x resolution[2]` grid over the unit
/// cell. Index order is x-major: `(i * ny + j) * nz + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub resolution: [usize; 3],
    pub occupied: Vec<bool>,
}

impl VoxelGrid {
    pub fn empty(resolution: [usize; 3]) -> Self {
        let n = resolution.iter().product();
        Self { resolution, occupied: vec![false; n] }
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.resolution[1] + j) * self.resolution[2] + k
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, value: bool) {
        let idx = self.index(i, j, k);
        self.occupied[idx] = value;
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> bool {
        self.occupied[self.index(i, j, k)]
    }

    /// Fills the index box `lo..hi` (exclusive upper bound) on every axis.
    pub fn fill_box(&mut self, lo: [usize; 3], hi: [usize; 3]) {
        for i in lo[0]..hi[0] {
            for j in lo[1]..hi[1] {
                for k in lo[2]..hi[2] {
                    self.set(i, j, k, true);
                }
            }
        }
    }

    pub fn cell_size(&self) -> [f64; 3] {
        [
            1.0 / self.resolution[0] as f64,
            1.0 / self.resolution[1] as f64,
            1.0 / self.resolution[2] as f64,
        ]
    }

    pub fn occupied_cells(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let [nx, ny, nz] = self.resolution;
        (0..nx).flat_map(move |i| {
            (0..ny).flat_map(move |j| {
                (0..nz).filter_map(move |k| self.get(i, j, k).then_some([i, j, k]))
            })
        })
    }

    pub fn volume(&self) -> f64 {
        let h = self.cell_size();
        self.occupied_cells().count() as f64 * h[0] * h[1] * h[2]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Sphere { center: [f64; 3], radius: f64 },
    VoxelSet(VoxelGrid),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InclusionGeometry {
    pub shape: Shape,
    /// Inner over outer radius of the buffer shell (sphere only).
    pub buffer_ratio_q: f64,
    pub theta: f64,
}

pub const DEFAULT_THETA: f64 = 0.5;
pub const DEFAULT_BUFFER_RATIO: f64 = 0.5;

impl InclusionGeometry {
    pub fn sphere(center: [f64; 3], radius: f64) -> Self {
        Self {
            shape: Shape::Sphere { center, radius },
            buffer_ratio_q: DEFAULT_BUFFER_RATIO,
            theta: DEFAULT_THETA,
        }
    }

    pub fn centered_sphere(radius: f64) -> Self {
        Self::sphere([0.5; 3], radius)
    }

    pub fn voxels(grid: VoxelGrid, theta: f64) -> Self {
        Self { shape: Shape::VoxelSet(grid), buffer_ratio_q: DEFAULT_BUFFER_RATIO, theta }
    }

    pub fn volume(&self) -> f64 {
        match &self.shape {
            Shape::Sphere { radius, .. } => 4.0 * PI * radius.powi(3) / 3.0,
            Shape::VoxelSet(grid) => grid.volume(),
        }
    }

    /// Hex SHA-256 of a canonical encoding of the geometry (shape parameters only).
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        match &self.shape {
            Shape::Sphere { center, radius } => {
                h.update(b"sphere");
                for c in center {
                    h.update(c.to_le_bytes());
                }
                h.update(radius.to_le_bytes());
            }
            Shape::VoxelSet(grid) => {
                h.update(b"voxel");
                for r in grid.resolution {
                    h.update((r as u64).to_le_bytes());
                }
                let bits: Vec<u8> = grid.occupied.iter().map(|&b| b as u8).collect();
                h.update(&bits);
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// First 16 hex digits of [`content_hash`](Self::content_hash).
    pub fn short_hash(&self) -> String {
        self.content_hash()[..16].to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrystalSpec {
    pub material: Material,
    pub geometry: InclusionGeometry,
}

impl CrystalSpec {
    pub fn new(material: Material, geometry: InclusionGeometry) -> Self {
        Self { material, geometry }
    }

    /// Integral of rho over the unit cell.
    pub fn mean_density(&self) -> f64 {
        let v = self.geometry.volume();
        self.material.rho1 * v + self.material.rho2 * (1.0 - v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiMomentum {
    pub alpha: [f64; 3],
}

impl QuasiMomentum {
    pub fn new(alpha: [f64; 3]) -> Self {
        Self { alpha }
    }

    pub fn gamma() -> Self {
        Self { alpha: [0.0; 3] }
    }

    pub fn is_gamma(&self) -> bool {
        self.alpha == [0.0; 3]
    }

    pub fn norm_sq(&self) -> f64 {
        self.alpha.iter().map(|a| a * a).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// True when every component lies in (-pi, pi].
    pub fn in_zone(&self) -> bool {
        self.alpha.iter().all(|&a| a > -PI && a <= PI)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BZPath {
    pub vertices: Vec<QuasiMomentum>,
    pub samples_per_segment: usize,
}

impl BZPath {
    /// Gamma -> X -> M -> R -> Gamma.
    pub fn standard(samples_per_segment: usize) -> Self {
        let v = |a: [f64; 3]| QuasiMomentum::new(a);
        Self {
            vertices: vec![
                v([0.0, 0.0, 0.0]),
                v([PI, 0.0, 0.0]),
                v([PI, PI, 0.0]),
                v([PI, PI, PI]),
                v([0.0, 0.0, 0.0]),
            ],
            samples_per_segment,
        }
    }
}

/// A failed invariant. The display string names the invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    ShearModulus(f64),
    Ellipticity(f64),
    Contrast(f64),
    DensityOrder { rho1: f64, rho2: f64 },
    MatrixDensity(f64),
    K0Bound(f64),
    Radius(f64),
    Center([f64; 3]),
    BufferRatio(f64),
    BufferedContainment { outer_radius: f64, clearance: f64 },
    Theta(f64),
    EmptyVoxels,
    VoxelTouchesBoundary([usize; 3]),
    VoxelResolution([usize; 3]),
    OutsideZone([f64; 3]),
    PathTooShort(usize),
    PathSamples(usize),
    RepeatedVertex(usize),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            ShearModulus(m) => write!(f, "mu1 > 0 violated: mu1 = {m}"),
            Ellipticity(v) => write!(f, "lambda1 + 2 mu1 > 0 violated: value {v}"),
            Contrast(k) => write!(f, "contrast_k >= 1 violated: contrast_k = {k}"),
            DensityOrder { rho1, rho2 } => {
                write!(f, "rho1 >= rho2 violated: rho1 = {rho1}, rho2 = {rho2}")
            }
            MatrixDensity(r) => write!(f, "rho2 > 0 violated: rho2 = {r}"),
            K0Bound(k0) => write!(f, "|k0| <= 3/8 violated: k0 = {k0}"),
            Radius(a) => write!(f, "sphere radius > 0 violated: a = {a}"),
            Center(c) => write!(f, "sphere center in (0,1)^3 violated: {c:?}"),
            BufferRatio(q) => write!(f, "buffer ratio q in (0,1) violated: q = {q}"),
            BufferedContainment { outer_radius, clearance } => write!(
                f,
                "buffered containment violated: outer radius {outer_radius} exceeds the \
                 distance {clearance} from the center to the cell boundary"
            ),
            Theta(t) => write!(f, "theta > 0 violated: theta = {t}"),
            EmptyVoxels => write!(f, "voxel set must occupy at least one voxel"),
            VoxelTouchesBoundary(v) => {
                write!(f, "voxel {v:?} touches the cell boundary; occupied voxels must be interior")
            }
            VoxelResolution(r) => write!(f, "voxel resolution {r:?} must be at least 3 per axis"),
            OutsideZone(a) => write!(f, "quasi-momentum {a:?} is outside (-pi, pi]^3"),
            PathTooShort(n) => write!(f, "path needs at least 2 vertices, got {n}"),
            PathSamples(s) => write!(f, "samples_per_segment must be >= 2, got {s}"),
            RepeatedVertex(i) => write!(f, "path vertices {i} and {} coincide", i + 1),
        }
    }
}

pub fn validate_material(m: &Material) -> Vec<Violation> {
    let mut out = Vec::new();
    if !(m.mu1 > 0.0) {
        out.push(Violation::ShearModulus(m.mu1));
    }
    let e = m.lambda1 + 2.0 * m.mu1;
    if !(e > 0.0) {
        out.push(Violation::Ellipticity(e));
    }
    if !(m.contrast_k >= 1.0) {
        out.push(Violation::Contrast(m.contrast_k));
    }
    if !(m.rho2 > 0.0) {
        out.push(Violation::MatrixDensity(m.rho2));
    }
    if !(m.rho1 >= m.rho2) {
        out.push(Violation::DensityOrder { rho1: m.rho1, rho2: m.rho2 });
    }
    if m.mu1 > 0.0 && e > 0.0 && !(m.k0().abs() <= 0.375) {
        out.push(Violation::K0Bound(m.k0()));
    }
    out
}

pub fn validate_geometry(g: &InclusionGeometry) -> Vec<Violation> {
    let mut out = Vec::new();
    if !(g.theta > 0.0) {
        out.push(Violation::Theta(g.theta));
    }
    match &g.shape {
        Shape::Sphere { center, radius } => {
            if !(*radius > 0.0) {
                out.push(Violation::Radius(*radius));
            }
            if !center.iter().all(|&c| c > 0.0 && c < 1.0) {
                out.push(Violation::Center(*center));
            }
            let q = g.buffer_ratio_q;
            if !(q > 0.0 && q < 1.0) {
                out.push(Violation::BufferRatio(q));
            } else if *radius > 0.0 {
                let outer = radius / q;
                let clearance = center
                    .iter()
                    .map(|&c| c.min(1.0 - c))
                    .fold(f64::INFINITY, f64::min);
                if !(outer < clearance) {
                    out.push(Violation::BufferedContainment { outer_radius: outer, clearance });
                }
            }
        }
        Shape::VoxelSet(grid) => {
            if grid.resolution.iter().any(|&r| r < 3)
                || grid.occupied.len() != grid.resolution.iter().product::<usize>()
            {
                out.push(Violation::VoxelResolution(grid.resolution));
                return out;
            }
            let mut any = false;
            for c in grid.occupied_cells() {
                any = true;
                let boundary = (0..3).any(|d| c[d] == 0 || c[d] + 1 == grid.resolution[d]);
                if boundary {
                    out.push(Violation::VoxelTouchesBoundary(c));
                }
            }
            if !any {
                out.push(Violation::EmptyVoxels);
            }
        }
    }
    out
}

/// Returns every violated invariant of the crystal; empty means valid.
pub fn validate(spec: &CrystalSpec) -> Vec<Violation> {
    let mut out = validate_material(&spec.material);
    out.extend(validate_geometry(&spec.geometry));
    out
}

pub fn validate_path(path: &BZPath) -> Vec<Violation> {
    let mut out = Vec::new();
    if path.vertices.len() < 2 {
        out.push(Violation::PathTooShort(path.vertices.len()));
    }
    if path.samples_per_segment < 2 {
        out.push(Violation::PathSamples(path.samples_per_segment));
    }
    for v in &path.vertices {
        if !v.in_zone() {
            out.push(Violation::OutsideZone(v.alpha));
        }
    }
    for (i, w) in path.vertices.windows(2).enumerate() {
        if w[0] == w[1] {
            out.push(Violation::RepeatedVertex(i));
        }
    }
    out
}

/// Linear interpolation of the path vertices; shared segment endpoints appear once.
pub fn sample_path(path: &BZPath) -> Vec<QuasiMomentum> {
    let s = path.samples_per_segment.max(2);
    let mut out = Vec::new();
    for (seg, w) in path.vertices.windows(2).enumerate() {
        let start = if seg == 0 { 0 } else { 1 };
        for i in start..s {
            let t = i as f64 / (s - 1) as f64;
            let mut a = [0.0; 3];
            for d in 0..3 {
                a[d] = if i == s - 1 {
                    w[1].alpha[d]
                } else {
                    w[0].alpha[d] + t * (w[1].alpha[d] - w[0].alpha[d])
                };
            }
            out.push(QuasiMomentum::new(a));
        }
    }
    out
}

/// Cumulative Euclidean arclength along a sampled path, starting at 0.
pub fn arclengths(points: &[QuasiMomentum]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        if i > 0 {
            let q = &points[i - 1];
            acc += (0..3).map(|d| (p.alpha[d] - q.alpha[d]).powi(2)).sum::<f64>().sqrt();
        }
        out.push(acc);
    }
    out
}

/// `n x n x n` grid over the octant [0, pi]^3 with `n >= 2` points per axis. It contains
/// Gamma, X, M and R; inversion symmetry makes the octant sufficient for band extents.
pub fn alpha_grid(n: usize) -> Vec<QuasiMomentum> {
    let n = n.max(2);
    let vals: Vec<f64> = (0..n).map(|i| PI * i as f64 / (n - 1) as f64).collect();
    let mut out = Vec::with_capacity(n * n * n);
    for &x in &vals {
        for &y in &vals {
            for &z in &vals {
                out.push(QuasiMomentum::new([x, y, z]));
            }
        }
    }
    out
}
