//! Interior enrichment: scalar functions in H^1_0(D), L^2-orthonormalized, appended to the
//! plane-wave basis (three polarizations each). Plane waves alone cannot represent fields that
//! vanish outside the inclusion, which is the space the high-contrast limit lives in.
//!
//! * Sphere: `(1 - |y|^2) y^e` with `y = (x - c)/a`, total degree `|e| <= degree`, integrated
//!   with a tensor Gauss rule on the ball.
//! * Voxel set: trilinear hat functions on grid nodes whose eight neighbouring voxels are all
//!   occupied, with exact element integrals and transforms.

use faer::{c64, Mat, Side};

use crate::crystal::{InclusionGeometry, Shape, VoxelGrid};
use crate::error::{Error, Result};
use crate::quad::ball_rule;

/// Which enrichment to attach. `None` reproduces the pure plane-wave pencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnrichmentKind {
    None,
    SphereBubbles { degree: usize },
    VoxelHats,
}

pub const DEFAULT_BUBBLE_DEGREE: usize = 6;
const BALL_RULE: (usize, usize, usize) = (16, 24, 48);
const GRAM_RANK_TOL: f64 = 1e-12;

impl EnrichmentKind {
    pub fn default_for(geometry: &InclusionGeometry) -> Self {
        match geometry.shape {
            Shape::Sphere { .. } => Self::SphereBubbles { degree: DEFAULT_BUBBLE_DEGREE },
            Shape::VoxelSet(_) => Self::VoxelHats,
        }
    }

    /// Sphere bubbles of the given polynomial degree, or voxel hats; `None` when disabled.
    pub fn for_geometry(geometry: &InclusionGeometry, enabled: bool, degree: usize) -> Self {
        match (&geometry.shape, enabled) {
            (_, false) => Self::None,
            (Shape::Sphere { .. }, true) => Self::SphereBubbles { degree },
            (Shape::VoxelSet(_), true) => Self::VoxelHats,
        }
    }
}

#[derive(Debug, Clone)]
enum Source {
    None,
    /// Quadrature points and `w_x f_a(x)` (points x functions).
    Quadrature { points: Vec<[f64; 3]>, weighted: Mat<f64> },
    /// Raw hat nodes and the orthonormalizing map (raw x functions).
    Hats { grid_h: [f64; 3], nodes: Vec<[usize; 3]>, map: Mat<f64> },
}

/// Orthonormal scalar enrichment functions on the inclusion.
#[derive(Debug, Clone)]
pub struct Enrichment {
    pub kind: EnrichmentKind,
    pub count: usize,
    /// `grad[d][e][(a, b)] = int d_d f_a d_e f_b`.
    grad: Vec<Vec<Mat<f64>>>,
    /// `int f_a`.
    pub means: Vec<f64>,
    source: Source,
}

impl Enrichment {
    pub fn none() -> Self {
        Self {
            kind: EnrichmentKind::None,
            count: 0,
            grad: (0..3).map(|_| (0..3).map(|_| Mat::zeros(0, 0)).collect()).collect(),
            means: Vec::new(),
            source: Source::None,
        }
    }

    pub fn build(geometry: &InclusionGeometry, kind: EnrichmentKind) -> Result<Self> {
        match (kind, &geometry.shape) {
            (EnrichmentKind::None, _) => Ok(Self::none()),
            (EnrichmentKind::SphereBubbles { degree }, Shape::Sphere { center, radius }) => {
                Ok(sphere_bubbles(*center, *radius, degree))
            }
            (EnrichmentKind::VoxelHats, Shape::VoxelSet(grid)) => voxel_hats(grid),
            (k, _) => Err(Error::InvalidInput(format!("enrichment {k:?} does not match the inclusion shape"))),
        }
    }

    pub fn grad(&self, d: usize, e: usize) -> &Mat<f64> {
        &self.grad[d][e]
    }

    /// `int f_a exp(-i eta . x) dx` for every function `a` (rows) and frequency (columns).
    pub fn transforms(&self, etas: &[[f64; 3]]) -> Mat<c64> {
        let mut out = Mat::<c64>::zeros(self.count, etas.len());
        match &self.source {
            Source::None => {}
            Source::Quadrature { points, weighted } => {
                const CHUNK: usize = 64;
                for start in (0..etas.len()).step_by(CHUNK) {
                    let end = (start + CHUNK).min(etas.len());
                    let phases = Mat::<c64>::from_fn(points.len(), end - start, |x, m| {
                        let eta = etas[start + m];
                        let p = &points[x];
                        c64::from_polar(1.0, -(eta[0] * p[0] + eta[1] * p[1] + eta[2] * p[2]))
                    });
                    let wc = Mat::<c64>::from_fn(weighted.ncols(), weighted.nrows(), |a, x| {
                        c64::new(weighted[(x, a)], 0.0)
                    });
                    let block = &wc * &phases;
                    for a in 0..self.count {
                        for m in 0..end - start {
                            out[(a, start + m)] = block[(a, m)];
                        }
                    }
                }
            }
            Source::Hats { grid_h, nodes, map } => {
                let raw = Mat::<c64>::from_fn(nodes.len(), etas.len(), |i, m| {
                    let mut v = c64::new(1.0, 0.0);
                    for d in 0..3 {
                        v *= hat_transform(nodes[i][d] as f64 * grid_h[d], grid_h[d], etas[m][d]);
                    }
                    v
                });
                let mt = Mat::<c64>::from_fn(map.ncols(), map.nrows(), |a, i| c64::new(map[(i, a)], 0.0));
                out = &mt * &raw;
            }
        }
        out
    }
}

/// Transform of the 1D hat of half-width `h` centred at `x0`.
fn hat_transform(x0: f64, h: f64, w: f64) -> c64 {
    let t = 0.5 * w * h;
    let s = if t.abs() < 1e-8 { 1.0 } else { t.sin() / t };
    c64::from_polar(h * s * s, -w * x0)
}

/// Orthonormalizing map `T` with `T^T G T = I`, dropping near-null directions.
fn orthonormalizer(gram: &Mat<f64>) -> Mat<f64> {
    let eig = gram.self_adjoint_eigen(Side::Lower).expect("Gram eigendecomposition");
    let s = eig.S().column_vector();
    let u = eig.U();
    let n = gram.nrows();
    let max = (0..n).map(|i| s[i]).fold(0.0f64, f64::max);
    let keep: Vec<usize> = (0..n).rev().filter(|&i| s[i] > GRAM_RANK_TOL * max).collect();
    Mat::from_fn(n, keep.len(), |r, c| u[(r, keep[c])] / s[keep[c]].sqrt())
}

fn monomial_exponents(degree: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for total in 0..=degree {
        for i in (0..=total).rev() {
            for j in (0..=total - i).rev() {
                out.push([i, j, total - i - j]);
            }
        }
    }
    out
}

fn powi(x: f64, e: usize) -> f64 {
    x.powi(e as i32)
}

fn sphere_bubbles(center: [f64; 3], a: f64, degree: usize) -> Enrichment {
    let (points, weights) = ball_rule(center, a, BALL_RULE.0, BALL_RULE.1, BALL_RULE.2);
    let exps = monomial_exponents(degree);
    let np = points.len();
    let nraw = exps.len();
    let mut vals = Mat::<f64>::zeros(np, nraw);
    let mut grads: Vec<Mat<f64>> = (0..3).map(|_| Mat::<f64>::zeros(np, nraw)).collect();
    for (x, p) in points.iter().enumerate() {
        let y = [(p[0] - center[0]) / a, (p[1] - center[1]) / a, (p[2] - center[2]) / a];
        let g = 1.0 - (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]);
        for (b, e) in exps.iter().enumerate() {
            let m = powi(y[0], e[0]) * powi(y[1], e[1]) * powi(y[2], e[2]);
            vals[(x, b)] = g * m;
            for d in 0..3 {
                let dm = if e[d] == 0 {
                    0.0
                } else {
                    let mut ee = *e;
                    ee[d] -= 1;
                    e[d] as f64 * powi(y[0], ee[0]) * powi(y[1], ee[1]) * powi(y[2], ee[2]) / a
                };
                grads[d][(x, b)] = -2.0 * y[d] / a * m + g * dm;
            }
        }
    }
    let weighted_raw = Mat::<f64>::from_fn(np, nraw, |x, b| weights[x] * vals[(x, b)]);
    let gram = weighted_raw.transpose() * &vals;
    let t = orthonormalizer(&gram);
    let weighted = &weighted_raw * &t;
    let grads_t: Vec<Mat<f64>> = grads.iter().map(|g| g * &t).collect();
    let wgrads: Vec<Mat<f64>> = grads_t
        .iter()
        .map(|g| Mat::<f64>::from_fn(np, t.ncols(), |x, b| weights[x] * g[(x, b)]))
        .collect();
    let grad = (0..3)
        .map(|d| (0..3).map(|e| wgrads[d].transpose() * &grads_t[e]).collect())
        .collect();
    let count = t.ncols();
    let means = (0..count).map(|b| (0..np).map(|x| weighted[(x, b)]).sum()).collect();
    Enrichment {
        kind: EnrichmentKind::SphereBubbles { degree },
        count,
        grad,
        means,
        source: Source::Quadrature { points, weighted },
    }
}

fn voxel_hats(grid: &VoxelGrid) -> Result<Enrichment> {
    let [nx, ny, nz] = grid.resolution;
    let h = grid.cell_size();
    let occupied = |i: isize, j: isize, k: isize| {
        i >= 0
            && j >= 0
            && k >= 0
            && (i as usize) < nx
            && (j as usize) < ny
            && (k as usize) < nz
            && grid.get(i as usize, j as usize, k as usize)
    };
    let mut nodes = Vec::new();
    for i in 1..nx {
        for j in 1..ny {
            for k in 1..nz {
                let (i, j, k) = (i as isize, j as isize, k as isize);
                let all = (0..8).all(|c| occupied(i - 1 + (c & 1), j - 1 + ((c >> 1) & 1), k - 1 + ((c >> 2) & 1)));
                if all {
                    nodes.push([i as usize, j as usize, k as usize]);
                }
            }
        }
    }
    if nodes.is_empty() {
        return Err(Error::InvalidInput(
            "voxel set has no interior grid node; refine the voxel resolution or disable enrichment".into(),
        ));
    }
    let n = nodes.len();
    let m1 = |d: usize, i: usize, j: usize| match i.abs_diff(j) {
        0 => 2.0 * h[d] / 3.0,
        1 => h[d] / 6.0,
        _ => 0.0,
    };
    let k1 = |d: usize, i: usize, j: usize| match i.abs_diff(j) {
        0 => 2.0 / h[d],
        1 => -1.0 / h[d],
        _ => 0.0,
    };
    // int phi_i' phi_j
    let c1 = |i: usize, j: usize| {
        if i.abs_diff(j) == 1 {
            (i as f64 - j as f64) / 2.0
        } else {
            0.0
        }
    };
    let near = |a: &[usize; 3], b: &[usize; 3]| (0..3).all(|t| a[t].abs_diff(b[t]) <= 1);
    let gram = Mat::<f64>::from_fn(n, n, |a, b| {
        let (p, q) = (&nodes[a], &nodes[b]);
        if !near(p, q) {
            return 0.0;
        }
        (0..3).map(|t| m1(t, p[t], q[t])).product()
    });
    let raw_grad = |d: usize, e: usize| {
        Mat::<f64>::from_fn(n, n, |a, b| {
            let (p, q) = (&nodes[a], &nodes[b]);
            if !near(p, q) {
                return 0.0;
            }
            (0..3)
                .map(|t| {
                    if t == d && t == e {
                        k1(t, p[t], q[t])
                    } else if t == d {
                        c1(p[t], q[t])
                    } else if t == e {
                        c1(q[t], p[t])
                    } else {
                        m1(t, p[t], q[t])
                    }
                })
                .product()
        })
    };
    let t = orthonormalizer(&gram);
    let grad = (0..3)
        .map(|d| (0..3).map(|e| t.transpose() * raw_grad(d, e) * &t).collect())
        .collect();
    let raw_mean = h[0] * h[1] * h[2];
    let count = t.ncols();
    let means = (0..count).map(|b| (0..n).map(|i| raw_mean * t[(i, b)]).sum()).collect();
    Ok(Enrichment {
        kind: EnrichmentKind::VoxelHats,
        count,
        grad,
        means,
        source: Source::Hats { grid_h: h, nodes, map: t },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn exponent_count() {
        assert_eq!(monomial_exponents(0).len(), 1);
        assert_eq!(monomial_exponents(2).len(), 10);
        assert_eq!(monomial_exponents(6).len(), 84);
    }

    #[test]
    fn lowest_bubble_mean_and_energy() {
        // degree 0: the single function c (1 - |y|^2), normalized; int f^2 = 1.
        let a: f64 = 0.2;
        let e = sphere_bubbles([0.5; 3], a, 0);
        assert_eq!(e.count, 1);
        // int_B (1-r^2/a^2)^2 = 4 pi a^3 * 8/105; int_B (1-r^2/a^2) = 4 pi a^3 * 2/15
        let norm2 = 4.0 * PI * a.powi(3) * 8.0 / 105.0;
        let mean = 4.0 * PI * a.powi(3) * 2.0 / 15.0 / norm2.sqrt();
        assert!((e.means[0].abs() - mean).abs() < 1e-12 * mean);
        // int |grad f|^2 = 4 pi a^3 * 4/(5 a^2) / norm2 (from |grad|^2 = 4 r^2 / a^4)
        let lap: f64 = (0..3).map(|d| e.grad(d, d)[(0, 0)]).sum();
        let expect = 4.0 * PI * a * 4.0 / 5.0 / norm2;
        assert!((lap - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn bubble_transform_at_zero_is_mean() {
        let e = sphere_bubbles([0.4, 0.5, 0.6], 0.2, 3);
        let t = e.transforms(&[[0.0; 3]]);
        for b in 0..e.count {
            assert!((t[(b, 0)].re - e.means[b]).abs() < 1e-13);
            assert!(t[(b, 0)].im.abs() < 1e-13);
        }
    }

    #[test]
    fn hats_reproduce_exact_single_node_integrals() {
        let mut g = VoxelGrid::empty([4, 4, 4]);
        g.fill_box([1, 1, 1], [3, 3, 3]);
        let e = voxel_hats(&g).unwrap();
        assert_eq!(e.count, 1);
        let h: f64 = 0.25;
        // raw hat: int phi^2 = (2h/3)^3, int |d_x phi|^2 = (2/h)(2h/3)^2
        let norm2 = (2.0 * h / 3.0).powi(3);
        assert!((e.means[0].abs() - h.powi(3) / norm2.sqrt()).abs() < 1e-13);
        let gx = (2.0 / h) * (2.0 * h / 3.0).powi(2) / norm2;
        assert!((e.grad(0, 0)[(0, 0)] - gx).abs() < 1e-12 * gx);
        assert!(e.grad(0, 1)[(0, 0)].abs() < 1e-14);
        let t = e.transforms(&[[2.0 * PI, 0.0, 0.0]]);
        let w = 2.0 * PI;
        let s = (w * h / 2.0).sin() / (w * h / 2.0);
        let raw = c64::from_polar(h * s * s, -w * 0.5) * (h * h);
        assert!((t[(0, 0)].norm() - raw.norm() / norm2.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn hat_gradient_matrices_are_symmetric_in_pairs() {
        let mut g = VoxelGrid::empty([6, 6, 6]);
        g.fill_box([1, 1, 1], [5, 5, 4]);
        let e = voxel_hats(&g).unwrap();
        for d in 0..3 {
            for f in 0..3 {
                let a = e.grad(d, f);
                let b = e.grad(f, d);
                for i in 0..e.count {
                    for j in 0..e.count {
                        assert!((a[(i, j)] - b[(j, i)]).abs() < 1e-10);
                    }
                }
            }
        }
    }
}
