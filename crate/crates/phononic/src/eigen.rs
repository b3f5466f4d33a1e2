//! Dense generalized Hermitian eigensolver `A x = lambda B x` and the Gamma-point deflation of
//! the density-weighted constant translations.

use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::linalg::solvers::DenseSolveCore;
use faer::{c64, Mat, Par, Side};

use crate::assembly::PlaneWaveBasis;
use crate::error::{Error, Result};

pub const SOLVER_TOL: f64 = 1e-10;
pub const DEFAULT_COUNT: usize = 20;

#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub eigenvalues: Vec<f64>,
    /// Columns are B-orthonormal eigenvectors in the full (undeflated) coordinates.
    pub eigenvectors: Mat<c64>,
    /// `||A x - lambda B x|| / ((||A||_F + |lambda| ||B||_F) ||x||)`.
    pub residual_norms: Vec<f64>,
    pub deflated_dim: usize,
}

impl EigenSolution {
    pub fn vector(&self, j: usize) -> Vec<c64> {
        (0..self.eigenvectors.nrows()).map(|i| self.eigenvectors[(i, j)]).collect()
    }
}

fn par() -> Par {
    faer::get_global_parallelism()
}

fn smallest_eigenvalue(b: &Mat<c64>) -> f64 {
    b.self_adjoint_eigenvalues(Side::Lower)
        .ok()
        .and_then(|v| v.into_iter().reduce(f64::min))
        .unwrap_or(f64::NAN)
}

fn hermitian_part(c: &Mat<c64>) -> Mat<c64> {
    Mat::from_fn(c.nrows(), c.ncols(), |i, j| (c[(i, j)] + c[(j, i)].conj()) * 0.5)
}

/// Lowest `count` eigenpairs of `A x = lambda B x` with `B` positive definite.
pub fn solve_ghep(a: &Mat<c64>, b: &Mat<c64>, count: usize) -> Result<EigenSolution> {
    solve_inner(a, b, count, true)
}

/// Eigenvalues only (no vectors or residuals); faster for sweeps.
pub fn eigenvalues_ghep(a: &Mat<c64>, b: &Mat<c64>, count: usize) -> Result<Vec<f64>> {
    Ok(solve_inner(a, b, count, false)?.eigenvalues)
}

fn solve_inner(a: &Mat<c64>, b: &Mat<c64>, count: usize, vectors: bool) -> Result<EigenSolution> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(Error::InvalidInput("pencil matrices must be square and of equal size".into()));
    }
    let count = count.min(n);
    let llt = b
        .llt(Side::Lower)
        .map_err(|_| Error::IndefiniteMass { smallest: smallest_eigenvalue(b) })?;
    let l = llt.L();
    // C = L^{-1} A L^{-*}
    let mut x = a.clone();
    solve_lower_triangular_in_place(l, x.as_mut(), par());
    let mut y = x.adjoint().to_owned();
    solve_lower_triangular_in_place(l, y.as_mut(), par());
    let c = hermitian_part(&y);
    if !vectors {
        let mut vals = c
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Solver(format!("{e:?}")))?;
        vals.sort_by(f64::total_cmp);
        vals.truncate(count);
        return Ok(EigenSolution {
            eigenvalues: vals,
            eigenvectors: Mat::zeros(n, 0),
            residual_norms: Vec::new(),
            deflated_dim: 0,
        });
    }
    let eig = c.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Solver(format!("{e:?}")))?;
    let s = eig.S().column_vector();
    let u = eig.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[i].re.total_cmp(&s[j].re));
    order.truncate(count);
    let eigenvalues: Vec<f64> = order.iter().map(|&i| s[i].re).collect();
    let mut vecs = Mat::<c64>::from_fn(n, count, |r, c| u[(r, order[c])]);
    solve_upper_triangular_in_place(l.adjoint(), vecs.as_mut(), par());
    let residual_norms = relative_residuals(a, b, &eigenvalues, &vecs);
    Ok(EigenSolution { eigenvalues, eigenvectors: vecs, residual_norms, deflated_dim: 0 })
}

/// Backward-error style residuals of the columns of `x`.
pub fn relative_residuals(a: &Mat<c64>, b: &Mat<c64>, lambdas: &[f64], x: &Mat<c64>) -> Vec<f64> {
    let an = a.norm_l2();
    let bn = b.norm_l2();
    let av = a * x;
    let bv = b * x;
    (0..x.ncols())
        .map(|j| {
            let lam = lambdas[j];
            let (mut r2, mut x2) = (0.0, 0.0);
            for i in 0..x.nrows() {
                r2 += (av[(i, j)] - bv[(i, j)] * lam).norm_sqr();
                x2 += x[(i, j)].norm_sqr();
            }
            (r2 / x2).sqrt() / (an + lam.abs() * bn)
        })
        .collect()
}

/// Removal of the three constant translations at `alpha = 0`.
#[derive(Debug, Clone)]
pub struct GammaDeflation {
    /// Indices of the constant (`n = 0`) plane-wave dofs.
    pub constant_dofs: [usize; 3],
    /// `W = G^{-1} C* B` restricted to the retained coordinates, `G = C* B C` (3 x r).
    w: Mat<c64>,
    retained: Vec<usize>,
    dim: usize,
}

/// Builds the deflation for the mass matrix `b_rho` at `alpha = 0`. The retained space is the
/// `b_rho`-orthogonal complement of the constants, i.e. `int rho u = 0`.
pub fn deflate_gamma(b_rho: &Mat<c64>, basis: &PlaneWaveBasis) -> Result<GammaDeflation> {
    if !basis.alpha.is_gamma() {
        return Err(Error::InvalidInput(
            "deflation applies only at alpha = 0; rigid motions are not quasi-periodic otherwise".into(),
        ));
    }
    let dim = b_rho.nrows();
    let z = 3 * basis.zero_mode();
    let cdofs = [z, z + 1, z + 2];
    let retained: Vec<usize> = (0..dim).filter(|i| !cdofs.contains(i)).collect();
    let g = Mat::<c64>::from_fn(3, 3, |p, q| b_rho[(cdofs[p], cdofs[q])]);
    let ginv = invert3(&g)?;
    let cb = Mat::<c64>::from_fn(3, retained.len(), |p, j| b_rho[(cdofs[p], retained[j])]);
    let w = &ginv * &cb;
    Ok(GammaDeflation { constant_dofs: cdofs, w, retained, dim })
}

fn invert3(g: &Mat<c64>) -> Result<Mat<c64>> {
    let llt = g
        .llt(Side::Lower)
        .map_err(|_| Error::IndefiniteMass { smallest: smallest_eigenvalue(g) })?;
    Ok(llt.inverse())
}

impl GammaDeflation {
    pub fn retained_dim(&self) -> usize {
        self.retained.len()
    }

    /// `Z = P Q` with columns spanning the retained space (dim x (dim - 3)).
    pub fn basis_matrix(&self) -> Mat<c64> {
        let mut z = Mat::<c64>::zeros(self.dim, self.retained.len());
        for (j, &r) in self.retained.iter().enumerate() {
            z[(r, j)] = c64::new(1.0, 0.0);
            for p in 0..3 {
                z[(self.constant_dofs[p], j)] = -self.w[(p, j)];
            }
        }
        z
    }

    /// The projector `P = I - C G^{-1} C* B` (dim x dim).
    pub fn projector(&self, b_rho: &Mat<c64>) -> Mat<c64> {
        let g = Mat::<c64>::from_fn(3, 3, |p, q| b_rho[(self.constant_dofs[p], self.constant_dofs[q])]);
        let ginv = invert3(&g).expect("constant block was already factorized");
        let cb = Mat::<c64>::from_fn(3, self.dim, |p, j| b_rho[(self.constant_dofs[p], j)]);
        let w = &ginv * &cb;
        let mut p = Mat::<c64>::identity(self.dim, self.dim);
        for r in 0..3 {
            for j in 0..self.dim {
                p[(self.constant_dofs[r], j)] -= w[(r, j)];
            }
        }
        p
    }

    /// `Z* A Z` via the rank-3 structure of `Z`.
    pub fn restrict(&self, a: &Mat<c64>) -> Mat<c64> {
        let r = self.retained.len();
        let c = &self.constant_dofs;
        // A Q restricted rows/cols, A C blocks.
        let qaq = Mat::<c64>::from_fn(r, r, |i, j| a[(self.retained[i], self.retained[j])]);
        let qac = Mat::<c64>::from_fn(r, 3, |i, p| a[(self.retained[i], c[p])]);
        let cac = Mat::<c64>::from_fn(3, 3, |p, q| a[(c[p], c[q])]);
        let t1 = &qac * &self.w; // r x r
        let t3 = self.w.adjoint() * (&cac * &self.w);
        Mat::from_fn(r, r, |i, j| qaq[(i, j)] - t1[(i, j)] - t1[(j, i)].conj() + t3[(i, j)])
    }

    /// Maps retained coordinates back to full coordinates (`x = Z y`).
    pub fn expand(&self, y: &Mat<c64>) -> Mat<c64> {
        let mut x = Mat::<c64>::zeros(self.dim, y.ncols());
        for j in 0..y.ncols() {
            for (i, &r) in self.retained.iter().enumerate() {
                x[(r, j)] = y[(i, j)];
            }
            for p in 0..3 {
                let mut s = c64::new(0.0, 0.0);
                for i in 0..self.retained.len() {
                    s += self.w[(p, i)] * y[(i, j)];
                }
                x[(self.constant_dofs[p], j)] = -s;
            }
        }
        x
    }
}

/// Solves on the deflated space and returns full-coordinate eigenvectors.
pub fn solve_deflated(
    a: &Mat<c64>,
    b: &Mat<c64>,
    deflation: &GammaDeflation,
    count: usize,
    vectors: bool,
) -> Result<EigenSolution> {
    let ar = deflation.restrict(a);
    let br = deflation.restrict(b);
    let mut sol = solve_inner(&ar, &br, count, vectors)?;
    if vectors {
        let x = deflation.expand(&sol.eigenvectors);
        sol.residual_norms = relative_residuals(a, b, &sol.eigenvalues, &x);
        sol.eigenvectors = x;
    }
    sol.deflated_dim = 3;
    Ok(sol)
}

/// `max_{i,j} |(X* B X)_{ij} - delta_ij|`.
pub fn b_orthonormality_error(b: &Mat<c64>, x: &Mat<c64>) -> f64 {
    let g = x.adjoint() * (b * x);
    let mut e = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let t = if i == j { 1.0 } else { 0.0 };
            e = e.max((g[(i, j)] - c64::new(t, 0.0)).norm());
        }
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crystal::QuasiMomentum;

    fn diag(v: &[f64]) -> Mat<c64> {
        Mat::from_fn(v.len(), v.len(), |i, j| if i == j { c64::new(v[i], 0.0) } else { c64::new(0.0, 0.0) })
    }

    #[test]
    fn diagonal_pencil() {
        let s = solve_ghep(&diag(&[3.0, 1.0, 2.0]), &diag(&[1.0, 1.0, 1.0]), 3).unwrap();
        assert_eq!(s.eigenvalues.len(), 3);
        for (v, e) in s.eigenvalues.iter().zip([1.0, 2.0, 3.0]) {
            assert!((v - e).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_pencil() {
        let b = Mat::<c64>::from_fn(4, 4, |i, j| {
            if i == j { c64::new(3.0 + i as f64, 0.0) } else { c64::new(0.1, 0.05 * (i as f64 - j as f64)) }
        });
        let s = solve_ghep(&b, &b, 4).unwrap();
        assert!(s.eigenvalues.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn indefinite_mass_reports_smallest_eigenvalue() {
        match solve_ghep(&diag(&[1.0, 1.0]), &diag(&[1.0, -2.0]), 2) {
            Err(Error::IndefiniteMass { smallest }) => assert!((smallest + 2.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn deflation_rejects_nonzero_alpha() {
        let basis = PlaneWaveBasis::new(1, QuasiMomentum::new([0.1, 0.0, 0.0]));
        let b = diag(&vec![1.0; basis.dimension()]);
        assert!(deflate_gamma(&b, &basis).is_err());
    }
}
