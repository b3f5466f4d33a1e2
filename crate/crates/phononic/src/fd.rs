//! Staggered finite-difference discretization of the Dirichlet Lamé problem on the inclusion,
//! solved with a block LOBPCG iteration. Serves as an independent check of the interior
//! Dirichlet spectrum.
//!
//! Component `d` of the displacement lives on faces normal to axis `d` of a uniform grid over
//! the bounding box; only points strictly inside the inclusion are unknowns. For fields
//! vanishing on the boundary the energy is `mu |grad u|^2 + (lambda + mu) (div u)^2`, which
//! the scheme discretizes as `K = (mu G^T G + (lambda + mu) Div^T Div) / h^2`; the mass is
//! `rho1` times the identity (the common `h^3` cancels).

use faer::{Mat, MatRef, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::crystal::{InclusionGeometry, Material, Shape};
use crate::error::{Error, Result};
use crate::sweep;

#[derive(Debug, Clone)]
pub struct FdGrid {
    /// Cells per axis.
    pub n: usize,
    pub h: f64,
    pub origin: [f64; 3],
    /// Full array shape of each component.
    dims: [[usize; 3]; 3],
    /// Flat full-array indices of the unknowns of each component.
    unknowns: [Vec<usize>; 3],
    offsets: [usize; 3],
}

impl FdGrid {
    /// Grid of `n^3` cells of side `len / n` starting at `origin`; `inside` selects unknowns.
    pub fn new(origin: [f64; 3], len: f64, n: usize, inside: impl Fn([f64; 3]) -> bool) -> Self {
        let h = len / n as f64;
        let mut dims = [[n; 3]; 3];
        for (d, dim) in dims.iter_mut().enumerate() {
            dim[d] = n + 1;
        }
        let mut unknowns: [Vec<usize>; 3] = Default::default();
        for d in 0..3 {
            let s = dims[d];
            for i in 0..s[0] {
                for j in 0..s[1] {
                    for k in 0..s[2] {
                        let c = [i, j, k];
                        let mut p = [0.0; 3];
                        for e in 0..3 {
                            let off = if e == d { 0.0 } else { 0.5 };
                            p[e] = origin[e] + (c[e] as f64 + off) * h;
                        }
                        if inside(p) {
                            unknowns[d].push((i * s[1] + j) * s[2] + k);
                        }
                    }
                }
            }
        }
        let offsets = [0, unknowns[0].len(), unknowns[0].len() + unknowns[1].len()];
        Self { n, h, origin, dims, unknowns, offsets }
    }

    /// Grid over the bounding box of a ball.
    pub fn ball(center: [f64; 3], radius: f64, n: usize) -> Self {
        let origin = [center[0] - radius, center[1] - radius, center[2] - radius];
        Self::new(origin, 2.0 * radius, n, |p| {
            let r2: f64 = (0..3).map(|d| (p[d] - center[d]).powi(2)).sum();
            r2 < radius * radius
        })
    }

    /// Grid for an inclusion geometry: sphere bounding box with `n` cells, or the voxel grid
    /// itself refined `n / resolution` times per axis (cubic voxel grids only).
    pub fn for_geometry(geometry: &InclusionGeometry, n: usize) -> Result<Self> {
        match &geometry.shape {
            Shape::Sphere { center, radius } => Ok(Self::ball(*center, *radius, n)),
            Shape::VoxelSet(grid) => {
                let r = grid.resolution;
                if r[0] != r[1] || r[1] != r[2] || n % r[0] != 0 {
                    return Err(Error::InvalidInput(format!(
                        "finite-difference grid {n} must refine the cubic voxel resolution {r:?}"
                    )));
                }
                let g = grid.clone();
                // A point is interior when every voxel touching it is occupied.
                Ok(Self::new([0.0; 3], 1.0, n, move |p| {
                    (0..8).all(|corner| {
                        let idx = [0, 1, 2].map(|d| {
                            let eps = if corner >> d & 1 == 0 { -1e-9 } else { 1e-9 };
                            let x = (p[d] + eps) * r[d] as f64;
                            if x < 0.0 { usize::MAX } else { x.floor() as usize }
                        });
                        idx.iter().zip(r).all(|(&i, n)| i < n) && g.get(idx[0], idx[1], idx[2])
                    })
                }))
            }
        }
    }

    pub fn dofs(&self) -> usize {
        self.offsets[2] + self.unknowns[2].len()
    }

    fn coords(&self, d: usize, flat: usize) -> [usize; 3] {
        let s = self.dims[d];
        [flat / (s[1] * s[2]), (flat / s[2]) % s[1], flat % s[2]]
    }

    fn flat(&self, d: usize, c: [usize; 3]) -> usize {
        let s = self.dims[d];
        (c[0] * s[1] + c[1]) * s[2] + c[2]
    }

    /// `y = K x`.
    pub fn apply(&self, material: &Material, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        let mut full: [Vec<f64>; 3] = Default::default();
        for d in 0..3 {
            let s = self.dims[d];
            full[d] = vec![0.0; s[0] * s[1] * s[2]];
            for (t, &f) in self.unknowns[d].iter().enumerate() {
                full[d][f] = x[self.offsets[d] + t];
            }
        }
        // Unit-difference divergence on cells.
        let mut div = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let c = [i, j, k];
                    let mut s = 0.0;
                    for d in 0..3 {
                        let mut up = c;
                        up[d] += 1;
                        s += full[d][self.flat(d, up)] - full[d][self.flat(d, c)];
                    }
                    div[(i * n + j) * n + k] = s;
                }
            }
        }
        let cell = |c: [usize; 3]| div[(c[0] * n + c[1]) * n + c[2]];
        let inv_h2 = 1.0 / (self.h * self.h);
        let lm = material.lambda1 + material.mu1;
        for d in 0..3 {
            let s = self.dims[d];
            for (t, &f) in self.unknowns[d].iter().enumerate() {
                let c = self.coords(d, f);
                let mut lap = 6.0 * full[d][f];
                for e in 0..3 {
                    if c[e] > 0 {
                        let mut m = c;
                        m[e] -= 1;
                        lap -= full[d][self.flat(d, m)];
                    }
                    if c[e] + 1 < s[e] {
                        let mut p = c;
                        p[e] += 1;
                        lap -= full[d][self.flat(d, p)];
                    }
                }
                let mut gd = 0.0;
                if c[d] > 0 {
                    let mut m = c;
                    m[d] -= 1;
                    gd += cell(m);
                }
                if c[d] < n {
                    gd -= cell(c);
                }
                y[self.offsets[d] + t] = (material.mu1 * lap + lm * gd) * inv_h2;
            }
        }
    }

    /// Dense `K`, for small grids.
    pub fn dense(&self, material: &Material) -> Mat<f64> {
        let m = self.dofs();
        let mut k = Mat::<f64>::zeros(m, m);
        let mut e = vec![0.0; m];
        let mut y = vec![0.0; m];
        for j in 0..m {
            e[j] = 1.0;
            self.apply(material, &e, &mut y);
            for i in 0..m {
                k[(i, j)] = y[i];
            }
            e[j] = 0.0;
        }
        k
    }

    /// `sum` of each component times `h^3`.
    pub fn integral(&self, x: &[f64]) -> [f64; 3] {
        let v = self.h.powi(3);
        let mut out = [0.0; 3];
        for (d, o) in out.iter_mut().enumerate() {
            let start = self.offsets[d];
            *o = x[start..start + self.unknowns[d].len()].iter().sum::<f64>() * v;
        }
        out
    }

    fn apply_block(&self, material: &Material, x: MatRef<'_, f64>) -> Mat<f64> {
        let cols = sweep::map_range(x.ncols(), |j| {
            let xv: Vec<f64> = (0..x.nrows()).map(|i| x[(i, j)]).collect();
            let mut yv = vec![0.0; x.nrows()];
            self.apply(material, &xv, &mut yv);
            yv
        });
        Mat::from_fn(x.nrows(), x.ncols(), |i, j| cols[j][i])
    }
}

#[derive(Debug, Clone)]
pub struct FdSpectrum {
    pub n: usize,
    pub h: f64,
    pub dofs: usize,
    pub values: Vec<f64>,
    /// `int_D rho1 psi` with `int_D rho1 |psi|^2 = 1`.
    pub means: Vec<[f64; 3]>,
    /// `||K x - lambda x|| / (lambda ||x||)`.
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

impl FdSpectrum {
    pub fn mean_norm(&self, j: usize) -> f64 {
        self.means[j].iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LobpcgOptions {
    /// Extra block columns beyond the requested count.
    pub guard: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Conjugate-gradient steps on `K w = r` used as preconditioner (0 disables).
    pub cg_steps: usize,
}

impl Default for LobpcgOptions {
    fn default() -> Self {
        Self { guard: 4, tol: 1e-8, max_iter: 5000, seed: 7, cg_steps: 16 }
    }
}

/// Lowest `count` Dirichlet values `K x = rho1 delta x` on the grid.
pub fn fd_dirichlet(grid: &FdGrid, material: &Material, count: usize, opts: LobpcgOptions) -> Result<FdSpectrum> {
    let (vals, vecs, residuals, iterations) =
        lobpcg(grid.dofs(), count, opts, |x: MatRef<'_, f64>| grid.apply_block(material, x))?;
    // Columns are Euclidean-orthonormal; rescale to rho1 h^3 |x|^2 = 1.
    let scale = 1.0 / (material.rho1 * grid.h.powi(3)).sqrt();
    let means = (0..count)
        .map(|j| {
            let col: Vec<f64> = (0..vecs.nrows()).map(|i| vecs[(i, j)] * scale).collect();
            grid.integral(&col).map(|v| v * material.rho1)
        })
        .collect();
    Ok(FdSpectrum {
        n: grid.n,
        h: grid.h,
        dofs: grid.dofs(),
        values: vals.iter().map(|v| v / material.rho1).collect(),
        means,
        residuals,
        iterations,
    })
}

/// Orthonormal basis of the column span of `s` as `s * c` (SVQB with rank drop).
fn svqb(s: &Mat<f64>) -> Result<Mat<f64>> {
    let g = s.transpose() * s;
    let m = g.nrows();
    let dsc: Vec<f64> = (0..m).map(|i| 1.0 / g[(i, i)].max(1e-300).sqrt()).collect();
    let gs = Mat::<f64>::from_fn(m, m, |i, j| g[(i, j)] * dsc[i] * dsc[j]);
    let eig = gs.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Solver(format!("{e:?}")))?;
    let th = eig.S().column_vector();
    let v = eig.U();
    let top = (0..m).map(|i| th[i]).fold(0.0, f64::max);
    let keep: Vec<usize> = (0..m).filter(|&i| th[i] > 1e-12 * top).collect();
    Ok(Mat::from_fn(m, keep.len(), |i, c| dsc[i] * v[(i, keep[c])] / th[keep[c]].sqrt()))
}

/// `b - q (q^T b)`, applied twice for stability.
fn orthogonalize_against(b: &Mat<f64>, q: &Mat<f64>) -> Mat<f64> {
    let mut out = b.clone();
    for _ in 0..2 {
        let c = q.transpose() * &out;
        out = &out - q * &c;
    }
    out
}

/// Orthonormal basis of the span of `b` orthogonal to the given blocks; `None` when empty.
fn orthonormal_complement(b: &Mat<f64>, against: &[&Mat<f64>]) -> Result<Option<Mat<f64>>> {
    let mut v = b.clone();
    for q in against {
        v = orthogonalize_against(&v, q);
    }
    for _ in 0..2 {
        let c = svqb(&v)?;
        if c.ncols() == 0 {
            return Ok(None);
        }
        v = &v * &c;
    }
    Ok(Some(v))
}

/// Block LOBPCG for the lowest `count` eigenpairs of a symmetric positive operator. Returns
/// values, Euclidean-orthonormal vectors, relative residuals and the iteration count.
pub fn lobpcg<F>(dim: usize, count: usize, opts: LobpcgOptions, apply: F) -> Result<(Vec<f64>, Mat<f64>, Vec<f64>, usize)>
where
    F: Fn(MatRef<'_, f64>) -> Mat<f64>,
{
    if count == 0 || count > dim {
        return Err(Error::InvalidInput(format!("cannot compute {count} eigenpairs of a {dim}-dimensional operator")));
    }
    let m = (count + opts.guard).min(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let x0 = Mat::<f64>::from_fn(dim, m, |_, _| rng.gen_range(-0.5..0.5));
    let mut x = orthonormal_complement(&x0, &[])?.ok_or_else(|| Error::Solver("empty start block".into()))?;
    let ax0 = apply(x.as_ref());
    let (vals, c) = ritz(&x, &ax0, m)?;
    let mut ax = &ax0 * &c;
    x = &x * &c;
    let mut lambda = vals;
    let mut p: Option<Mat<f64>> = None;
    let mut res = vec![f64::INFINITY; m];
    for it in 0..opts.max_iter {
        let r = Mat::<f64>::from_fn(dim, m, |i, j| ax[(i, j)] - lambda[j] * x[(i, j)]);
        for (j, rj) in res.iter_mut().enumerate() {
            let nr: f64 = (0..dim).map(|i| r[(i, j)] * r[(i, j)]).sum::<f64>().sqrt();
            *rj = nr / lambda[j].abs().max(f64::MIN_POSITIVE);
        }
        if res[..count].iter().all(|&v| v <= opts.tol) {
            return Ok((lambda[..count].to_vec(), x.subcols(0, count).to_owned(), res[..count].to_vec(), it));
        }
        // Soft locking: converged columns do not contribute search directions.
        let active: Vec<usize> = (0..m).filter(|&j| res[j] > 0.1 * opts.tol).collect();
        let mut r_act = Mat::<f64>::from_fn(dim, active.len(), |i, c| r[(i, active[c])]);
        if opts.cg_steps > 0 {
            r_act = cg_block(&apply, &r_act, opts.cg_steps);
        }
        let Some(w) = orthonormal_complement(&r_act, &[&x])? else {
            return Err(Error::Solver("LOBPCG residual block collapsed".into()));
        };
        let pw = match &p {
            Some(pp) => orthonormal_complement(pp, &[&x, &w])?,
            None => None,
        };
        let mut blocks: Vec<&Mat<f64>> = vec![&x, &w];
        if let Some(pp) = &pw {
            blocks.push(pp);
        }
        let q = concat(&blocks);
        let aw = apply(w.as_ref());
        let mut ablocks: Vec<&Mat<f64>> = vec![&ax, &aw];
        let ap = pw.as_ref().map(|pp| apply(pp.as_ref()));
        if let Some(a) = &ap {
            ablocks.push(a);
        }
        let aq = concat(&ablocks);
        let (vals, cm) = ritz(&q, &aq, m)?;
        lambda = vals;
        let xn = &q * &cm;
        let axn = &aq * &cm;
        // Search direction: the W and P components of the update.
        let tail = cm.nrows() - m;
        let qt = q.subcols(m, tail).to_owned();
        p = Some(&qt * cm.subrows(m, tail));
        x = xn;
        ax = axn;
    }
    Err(Error::Solver(format!(
        "LOBPCG did not converge in {} iterations (worst residual {:e})",
        opts.max_iter,
        res[..count].iter().copied().fold(0.0, f64::max)
    )))
}

/// A fixed number of conjugate-gradient steps on `A w = r` per column, from `w = 0`.
fn cg_block<F>(apply: &F, r: &Mat<f64>, steps: usize) -> Mat<f64>
where
    F: Fn(MatRef<'_, f64>) -> Mat<f64>,
{
    let (n, k) = (r.nrows(), r.ncols());
    let mut w = Mat::<f64>::zeros(n, k);
    let mut res = r.clone();
    let mut dir = r.clone();
    let dot = |a: &Mat<f64>, b: &Mat<f64>, j: usize| (0..n).map(|i| a[(i, j)] * b[(i, j)]).sum::<f64>();
    let mut rr: Vec<f64> = (0..k).map(|j| dot(&res, &res, j)).collect();
    for _ in 0..steps {
        let ad = apply(dir.as_ref());
        for j in 0..k {
            let dad = dot(&dir, &ad, j);
            if rr[j] == 0.0 || dad <= 0.0 {
                continue;
            }
            let a = rr[j] / dad;
            for i in 0..n {
                w[(i, j)] += a * dir[(i, j)];
                res[(i, j)] -= a * ad[(i, j)];
            }
            let rn = dot(&res, &res, j);
            let beta = rn / rr[j];
            rr[j] = rn;
            for i in 0..n {
                dir[(i, j)] = res[(i, j)] + beta * dir[(i, j)];
            }
        }
    }
    w
}

/// Lowest `m` Ritz values and coefficient vectors of an orthonormal block `q`.
fn ritz(q: &Mat<f64>, aq: &Mat<f64>, m: usize) -> Result<(Vec<f64>, Mat<f64>)> {
    let g = q.transpose() * aq;
    let k = g.nrows();
    let gs = Mat::<f64>::from_fn(k, k, |i, j| 0.5 * (g[(i, j)] + g[(j, i)]));
    let e = gs.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Solver(format!("{e:?}")))?;
    let s = e.S().column_vector();
    Ok(((0..m).map(|i| s[i]).collect(), e.U().subcols(0, m).to_owned()))
}

fn concat(blocks: &[&Mat<f64>]) -> Mat<f64> {
    let rows = blocks[0].nrows();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::<f64>::zeros(rows, cols);
    let mut c0 = 0;
    for b in blocks {
        out.subcols_mut(c0, b.ncols()).copy_from(b.as_ref());
        c0 += b.ncols();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operator_is_symmetric_positive() {
        let g = FdGrid::ball([0.5; 3], 0.2, 6);
        let k = g.dense(&Material::unit());
        let n = k.nrows();
        assert!(n > 0);
        for i in 0..n {
            for j in 0..n {
                assert!((k[(i, j)] - k[(j, i)]).abs() < 1e-9 * k[(i, i)].abs());
            }
        }
        let ev = k.self_adjoint_eigenvalues(Side::Lower).unwrap();
        assert!(ev.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn lobpcg_matches_dense() {
        let g = FdGrid::ball([0.5; 3], 0.2, 8);
        let m = Material::new(1.0, 1.0, 1.0, 2.0, 1.0);
        let mut dense = g.dense(&m).self_adjoint_eigenvalues(Side::Lower).unwrap();
        dense.sort_by(f64::total_cmp);
        let s = fd_dirichlet(&g, &m, 6, LobpcgOptions::default()).unwrap();
        for j in 0..6 {
            let want = dense[j] / 2.0;
            assert!((s.values[j] - want).abs() < 1e-8 * want, "{j}: {} vs {}", s.values[j], want);
        }
    }

    #[test]
    fn cube_laplacian_closed_form() {
        // lambda = -mu leaves K = mu G^T G / h^2, a separable Dirichlet Laplacian: n - 1 nodes
        // along the component axis, n cell centres with ghost zeros along the other two.
        let n = 8;
        let g = FdGrid::new([0.0; 3], 1.0, n, |p| p.iter().all(|&v| v > 1e-12 && v < 1.0 - 1e-12));
        let m = Material::new(-1.0, 1.0, 1.0, 1.0, 1.0);
        let s = fd_dirichlet(&g, &m, 3, LobpcgOptions::default()).unwrap();
        let h = 1.0 / n as f64;
        let pi = std::f64::consts::PI;
        let want = 4.0 / (h * h)
            * ((pi / (2.0 * n as f64)).sin().powi(2) + 2.0 * (pi / (2.0 * (n as f64 + 1.0))).sin().powi(2));
        for v in &s.values {
            assert!((v - want).abs() < 1e-8 * want, "{v} vs {want}");
        }
    }
}
