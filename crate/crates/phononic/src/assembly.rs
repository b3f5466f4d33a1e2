//! Galerkin matrices of the contrast-split elastic form and the mass form in the
//! quasi-periodic plane-wave basis, optionally enriched with interior functions.
//!
//! Row index = test function, column index = trial function, so `u* A u` is the form value.
//! Plane-wave dofs come first in lexicographic `(n, p)` order, enrichment dofs follow as
//! `(a, q)` with `q` the polarization.

use std::f64::consts::PI;

use faer::{c64, Mat};

use crate::crystal::{Material, QuasiMomentum};
use crate::enrichment::Enrichment;
use crate::error::{Error, Result};
use crate::fourier::IndicatorCoefficients;
use crate::sweep;

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWaveBasis {
    pub cutoff_n: usize,
    pub alpha: QuasiMomentum,
    pub indices: Vec<[i64; 3]>,
}

impl PlaneWaveBasis {
    pub fn new(cutoff_n: usize, alpha: QuasiMomentum) -> Self {
        let r = cutoff_n as i64;
        let mut indices = Vec::with_capacity((2 * cutoff_n + 1).pow(3));
        for i in -r..=r {
            for j in -r..=r {
                for k in -r..=r {
                    indices.push([i, j, k]);
                }
            }
        }
        Self { cutoff_n, alpha, indices }
    }

    pub fn n_modes(&self) -> usize {
        self.indices.len()
    }

    /// Number of plane-wave dofs, `3 (2N + 1)^3`.
    pub fn dimension(&self) -> usize {
        3 * self.indices.len()
    }

    /// `2 pi n + alpha` for mode `i`.
    pub fn eta(&self, i: usize) -> [f64; 3] {
        let n = self.indices[i];
        let a = self.alpha.alpha;
        [2.0 * PI * n[0] as f64 + a[0], 2.0 * PI * n[1] as f64 + a[1], 2.0 * PI * n[2] as f64 + a[2]]
    }

    pub fn etas(&self) -> Vec<[f64; 3]> {
        (0..self.n_modes()).map(|i| self.eta(i)).collect()
    }

    /// Position of the `n = 0` mode.
    pub fn zero_mode(&self) -> usize {
        self.indices.len() / 2
    }
}

/// The four Hermitian matrices of the split problem at one quasi-momentum. Stiffness uses the
/// inclusion tensor for both parts (contrast factored out); masses use unit density.
#[derive(Debug, Clone)]
pub struct PlaneWavePencil {
    pub basis: PlaneWaveBasis,
    pub n_enrich: usize,
    pub k_in: Mat<c64>,
    pub k_out: Mat<c64>,
    pub m_in: Mat<c64>,
    pub m_out: Mat<c64>,
}

impl PlaneWavePencil {
    pub fn dim(&self) -> usize {
        self.k_in.nrows()
    }

    pub fn pw_dim(&self) -> usize {
        self.basis.dimension()
    }

    /// `k K_out + K_in`.
    pub fn stiffness(&self, k: f64) -> Mat<c64> {
        combine(&self.k_out, k, &self.k_in, 1.0)
    }

    /// `rho1 M_in + rho2 M_out`.
    pub fn mass(&self, rho1: f64, rho2: f64) -> Mat<c64> {
        combine(&self.m_in, rho1, &self.m_out, rho2)
    }
}

/// `a A + b B`.
pub fn combine(a_mat: &Mat<c64>, a: f64, b_mat: &Mat<c64>, b: f64) -> Mat<c64> {
    Mat::from_fn(a_mat.nrows(), a_mat.ncols(), |i, j| a_mat[(i, j)] * a + b_mat[(i, j)] * b)
}

/// Kernel `s(xi, e_q; eta, e_p)` as a 3x3 array indexed `[p][q]`.
pub fn stiffness_kernel(xi: [f64; 3], eta: [f64; 3], m: &Material) -> [[f64; 3]; 3] {
    let dot = xi[0] * eta[0] + xi[1] * eta[1] + xi[2] * eta[2];
    let mut s = [[0.0; 3]; 3];
    for p in 0..3 {
        for q in 0..3 {
            s[p][q] = m.lambda1 * xi[q] * eta[p]
                + m.mu1 * (if p == q { dot } else { 0.0 } + xi[p] * eta[q]);
        }
    }
    s
}

/// Pure plane-wave pencil.
pub fn assemble(
    basis: &PlaneWaveBasis,
    coeffs: &IndicatorCoefficients,
    material: &Material,
) -> Result<PlaneWavePencil> {
    assemble_enriched(basis, coeffs, material, &Enrichment::none())
}

pub fn assemble_enriched(
    basis: &PlaneWaveBasis,
    coeffs: &IndicatorCoefficients,
    material: &Material,
    enrichment: &Enrichment,
) -> Result<PlaneWavePencil> {
    if coeffs.cutoff_n < basis.cutoff_n {
        return Err(Error::CutoffMismatch { need: 2 * basis.cutoff_n, have: 2 * coeffs.cutoff_n });
    }
    let nm = basis.n_modes();
    let npw = 3 * nm;
    let nb = enrichment.count;
    let dim = npw + 3 * nb;
    let etas = basis.etas();

    // Plane-wave rows, computed row-block by row-block.
    let rows = sweep::map_range(nm, |i| {
        let eta = etas[i];
        let ni = basis.indices[i];
        let mut kin = vec![c64::new(0.0, 0.0); 3 * npw];
        let mut kout = vec![c64::new(0.0, 0.0); 3 * npw];
        let mut min = vec![c64::new(0.0, 0.0); 3 * npw];
        let mut mout = vec![c64::new(0.0, 0.0); 3 * npw];
        for j in 0..nm {
            let nj = basis.indices[j];
            let chi = coeffs.get([ni[0] - nj[0], ni[1] - nj[1], ni[2] - nj[2]]);
            let delta = if i == j { 1.0 } else { 0.0 };
            let out_w = c64::new(delta, 0.0) - chi;
            let s = stiffness_kernel(etas[j], eta, material);
            for p in 0..3 {
                for q in 0..3 {
                    let idx = p * npw + 3 * j + q;
                    kin[idx] = chi * s[p][q];
                    kout[idx] = out_w * s[p][q];
                    if p == q {
                        min[idx] = chi;
                        mout[idx] = out_w;
                    }
                }
            }
        }
        (kin, kout, min, mout)
    });

    let mut k_in = Mat::<c64>::zeros(dim, dim);
    let mut k_out = Mat::<c64>::zeros(dim, dim);
    let mut m_in = Mat::<c64>::zeros(dim, dim);
    let mut m_out = Mat::<c64>::zeros(dim, dim);
    for (i, (kin, kout, min, mout)) in rows.into_iter().enumerate() {
        for p in 0..3 {
            let r = 3 * i + p;
            for c in 0..npw {
                let idx = p * npw + c;
                k_in[(r, c)] = kin[idx];
                k_out[(r, c)] = kout[idx];
                m_in[(r, c)] = min[idx];
                m_out[(r, c)] = mout[idx];
            }
        }
    }

    if nb > 0 {
        let hat = enrichment.transforms(&etas);
        // Cross blocks: test plane wave (n, p), trial enrichment (a, q).
        for i in 0..nm {
            let eta = etas[i];
            let s = stiffness_kernel(eta, eta, material);
            for a in 0..nb {
                let f = hat[(a, i)];
                for p in 0..3 {
                    let r = 3 * i + p;
                    for q in 0..3 {
                        let c = npw + 3 * a + q;
                        let v = f * s[p][q];
                        k_in[(r, c)] = v;
                        k_in[(c, r)] = v.conj();
                    }
                    let c = npw + 3 * a + p;
                    m_in[(r, c)] = f;
                    m_in[(c, r)] = f.conj();
                }
            }
        }
        // Enrichment block.
        let lap: Vec<f64> = (0..nb * nb)
            .map(|x| (0..3).map(|d| enrichment.grad(d, d)[(x / nb, x % nb)]).sum())
            .collect();
        for b in 0..nb {
            for b2 in 0..nb {
                for p in 0..3 {
                    let r = npw + 3 * b + p;
                    for q in 0..3 {
                        let c = npw + 3 * b2 + q;
                        let mut v = material.lambda1 * enrichment.grad(p, q)[(b, b2)]
                            + material.mu1 * enrichment.grad(q, p)[(b, b2)];
                        if p == q {
                            v += material.mu1 * lap[b * nb + b2];
                        }
                        k_in[(r, c)] = c64::new(v, 0.0);
                    }
                }
            }
            for p in 0..3 {
                let r = npw + 3 * b + p;
                m_in[(r, r)] = c64::new(1.0, 0.0);
            }
        }
    }

    Ok(PlaneWavePencil { basis: basis.clone(), n_enrich: nb, k_in, k_out, m_in, m_out })
}

/// Symbol of the inverse Lamé operator at frequency `xi`:
/// `(I - c xi xi^T / |xi|^2) / (mu1 |xi|^2)`, `c = (lambda1 + mu1) / (lambda1 + 2 mu1)`.
pub fn inverse_lame_symbol(xi: [f64; 3], m: &Material) -> Result<[[f64; 3]; 3]> {
    let n2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    if n2 == 0.0 {
        return Err(Error::InvalidInput("inverse Lamé symbol is undefined at xi = 0".into()));
    }
    let c = m.lame_c();
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let id = if i == j { 1.0 } else { 0.0 };
            out[i][j] = (id - c * xi[i] * xi[j] / n2) / (m.mu1 * n2);
        }
    }
    Ok(out)
}

/// `max |A - A*| / max |A|`.
pub fn hermitian_residual(a: &Mat<c64>) -> f64 {
    let mut diff = 0.0f64;
    let mut norm = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            diff = diff.max((a[(i, j)] - a[(j, i)].conj()).norm());
            norm = norm.max(a[(i, j)].norm());
        }
    }
    if norm == 0.0 { 0.0 } else { diff / norm }
}

/// `u* A v`.
pub fn form(a: &Mat<c64>, u: &[c64], v: &[c64]) -> c64 {
    let mut s = c64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        let mut row = c64::new(0.0, 0.0);
        for j in 0..a.ncols() {
            row += a[(i, j)] * v[j];
        }
        s += u[i].conj() * row;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::sphere_coefficients;

    fn unit() -> Material {
        Material::unit()
    }

    #[test]
    fn homogeneous_blocks_decouple() {
        let alpha = QuasiMomentum::new([PI, 0.3, -0.2]);
        let basis = PlaneWaveBasis::new(1, alpha);
        let coeffs = sphere_coefficients([0.5; 3], 0.2, 1);
        let m = Material::new(2.0, 0.7, 1.0, 1.0, 1.0);
        let pen = assemble(&basis, &coeffs, &m).unwrap();
        let k = pen.stiffness(1.0);
        let n = basis.n_modes();
        for i in 0..n {
            for j in 0..n {
                for p in 0..3 {
                    for q in 0..3 {
                        let v = k[(3 * i + p, 3 * j + q)];
                        if i != j {
                            assert!(v.norm() < 1e-12, "{i} {j} {v}");
                        }
                    }
                }
            }
            let eta = basis.eta(i);
            let s = stiffness_kernel(eta, eta, &m);
            for p in 0..3 {
                for q in 0..3 {
                    assert!((k[(3 * i + p, 3 * i + q)].re - s[p][q]).abs() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn homogeneous_block_eigenvalues() {
        let m = Material::new(2.0, 0.7, 1.0, 1.0, 1.0);
        let eta = [1.0, -2.0, 0.5];
        let s = stiffness_kernel(eta, eta, &m);
        let n2: f64 = eta.iter().map(|x| x * x).sum();
        // eta is an eigenvector with (lambda + 2 mu)|eta|^2; orthogonal directions get mu |eta|^2.
        for p in 0..3 {
            let v: f64 = (0..3).map(|q| s[p][q] * eta[q]).sum();
            assert!((v - (m.lambda1 + 2.0 * m.mu1) * n2 * eta[p]).abs() < 1e-12);
        }
        let t = [2.0, 1.0, 0.0];
        for p in 0..3 {
            let v: f64 = (0..3).map(|q| s[p][q] * t[q]).sum();
            assert!((v - m.mu1 * n2 * t[p]).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_inclusion_has_zero_inside_parts() {
        let basis = PlaneWaveBasis::new(1, QuasiMomentum::new([1.0, 0.0, 0.0]));
        let pen = assemble(&basis, &IndicatorCoefficients::zero(1), &unit()).unwrap();
        assert!(pen.k_in.norm_max() == 0.0 && pen.m_in.norm_max() == 0.0);
    }

    #[test]
    fn cutoff_mismatch_is_an_error() {
        let basis = PlaneWaveBasis::new(2, QuasiMomentum::gamma());
        let coeffs = sphere_coefficients([0.5; 3], 0.2, 1);
        assert!(matches!(assemble(&basis, &coeffs, &unit()), Err(Error::CutoffMismatch { .. })));
    }

    #[test]
    fn inverse_symbol_values() {
        let s = inverse_lame_symbol([2.0 * PI, 0.0, 0.0], &unit()).unwrap();
        assert!((s[0][0] - 0.0084434).abs() < 1e-7);
        assert!((s[1][1] - 0.0253303).abs() < 1e-7);
        assert!((s[2][2] - 0.0253303).abs() < 1e-7);
        assert!(inverse_lame_symbol([0.0; 3], &unit()).is_err());
    }

    #[test]
    fn inverse_symbol_inverts_the_lame_symbol() {
        let m = Material::new(1.3, 0.8, 1.0, 1.0, 1.0);
        let xi = [0.4, -1.1, 2.5];
        let s = stiffness_kernel(xi, xi, &m);
        let inv = inverse_lame_symbol(xi, &m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| s[i][k] * inv[k][j]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }
}
