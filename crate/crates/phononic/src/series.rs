//! Power series of the Bloch eigenvalues in `z = 1/k` about the high-contrast limit:
//! isolation distances, convergence radii, truncation bounds, the first-order coefficient from
//! an exterior energy solve, and comparison with direct solves.
//!
//! The series variable is `beta = 1/xi`; `beta_0 = 1/delta` and, with `xi = delta - s z + ...`,
//! `beta_1 = s / delta^2`.

use std::f64::consts::PI;

use faer::{c64, Mat, Side};

use crate::assembly::PlaneWavePencil;
use crate::crystal::{Material, QuasiMomentum};
use crate::dispersion::{global_branch, solve_pencil};
use crate::error::{Error, Result};
use crate::limit::{clusters, CLUSTER_TOL};
use crate::model::Model;
use crate::structural::z_pole;

/// Values closer than this (absolute, scaled by `max(1, |v|)`) count as one eigenvalue.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Relative eigenvalue cut of the exterior stiffness pseudo-inverse.
pub const PINV_TOL: f64 = 1e-8;

/// Half the distance from `values[j - 1]` to its nearest distinct neighbour. A second value
/// within `DEGENERACY_TOL` is an error: the series then describes a group, not one eigenvalue.
pub fn isolation_distance(values: &[f64], j: usize) -> Result<f64> {
    let v = *values
        .get(j.wrapping_sub(1))
        .ok_or_else(|| Error::InvalidInput(format!("index {j} outside 1..={}", values.len())))?;
    let mut best = f64::INFINITY;
    for (i, &w) in values.iter().enumerate() {
        if i + 1 == j {
            continue;
        }
        let gap = (w - v).abs();
        if gap <= DEGENERACY_TOL * v.abs().max(1.0) {
            return Err(Error::Degenerate { index: j, gap });
        }
        best = best.min(gap);
    }
    if !best.is_finite() {
        return Err(Error::InvalidInput("isolation distance needs at least two distinct values".into()));
    }
    Ok(0.5 * best)
}

/// Half the distance from the degenerate cluster containing `values[j - 1]` (relative gaps
/// below `CLUSTER_TOL`, input sorted) to the nearest value outside it.
pub fn cluster_isolation_distance(values: &[f64], j: usize) -> Result<f64> {
    let idx = j.wrapping_sub(1);
    if idx >= values.len() {
        return Err(Error::InvalidInput(format!("index {j} outside 1..={}", values.len())));
    }
    let range = clusters(values, CLUSTER_TOL)
        .into_iter()
        .find(|r| r.contains(&idx))
        .expect("clusters cover every index");
    let v = values[idx];
    let best = values
        .iter()
        .enumerate()
        .filter(|(i, _)| !range.contains(i))
        .map(|(_, &w)| (w - v).abs())
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(Error::InvalidInput("isolation distance needs at least two distinct values".into()));
    }
    Ok(0.5 * best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Radius {
    pub r_star: f64,
    pub z_star: f64,
    /// Contrast above which the series converges: `1 / r_star`.
    pub k_threshold: f64,
}

fn radius(energy: f64, tau_minus: f64, rho_sup: f64) -> Result<Radius> {
    if !(tau_minus > -0.5 && tau_minus < 0.5) {
        return Err(Error::SingularPole(tau_minus));
    }
    let z_star = z_pole(tau_minus);
    let r_star = energy * z_star.abs() / (rho_sup / (0.5 - tau_minus) + energy);
    Ok(Radius { r_star, z_star, k_threshold: 1.0 / r_star })
}

/// `r* = mu1 |alpha|^2 d |z*| / (rho_sup / (1/2 - tau-) + mu1 |alpha|^2 d)` for `alpha != 0`.
pub fn radius_quasi(alpha: &QuasiMomentum, d: f64, tau_minus: f64, material: &Material, rho_sup: f64) -> Result<Radius> {
    if alpha.is_gamma() {
        return Err(Error::InvalidInput("radius_quasi needs alpha != 0; use radius_periodic".into()));
    }
    if !(d > 0.0) {
        return Err(Error::InvalidInput(format!("isolation distance must be positive, got {d}")));
    }
    radius(material.mu1 * alpha.norm_sq() * d, tau_minus, rho_sup)
}

/// `r* = 4 pi^2 mu1 d |z*| / (rho_sup / (1/2 - tau-) + 4 pi^2 mu1 d)` for `alpha = 0`.
pub fn radius_periodic(d: f64, tau_minus: f64, material: &Material, rho_sup: f64) -> Result<Radius> {
    if !(d > 0.0) {
        return Err(Error::InvalidInput(format!("isolation distance must be positive, got {d}")));
    }
    radius(4.0 * PI * PI * material.mu1 * d, tau_minus, rho_sup)
}

/// Closed form for the sphere shell with `tau- = -1/4` and `d = gap/2`, quasi-periodic case:
/// `mu1 |alpha|^2 gap / (8 rho + 3 mu1 |alpha|^2 gap)`.
pub fn sphere_radius_quasi(mu1: f64, alpha_sq: f64, gap: f64, rho: f64) -> f64 {
    mu1 * alpha_sq * gap / (8.0 * rho + 3.0 * mu1 * alpha_sq * gap)
}

/// Periodic counterpart: `pi^2 mu1 gap / (2 rho + 3 pi^2 mu1 gap)`.
pub fn sphere_radius_periodic(mu1: f64, gap: f64, rho: f64) -> f64 {
    PI * PI * mu1 * gap / (2.0 * rho + 3.0 * PI * PI * mu1 * gap)
}

/// `d |z|^(p+1) / (r*^p (r* - |z|))`, valid for `|z| < r*`.
pub fn truncation_bound(d: f64, r_star: f64, z: f64, p: u32) -> Result<f64> {
    let a = z.abs();
    if a >= r_star {
        return Err(Error::OutsideDisk { z, r_star });
    }
    Ok(d * a.powi(p as i32 + 1) / (r_star.powi(p as i32) * (r_star - a)))
}

/// Where `tau-` came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauSource {
    /// `min(1/2, theta/2) - 1/2`.
    Theta(f64),
    /// Smallest computed structural value at this quasi-momentum.
    Computed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceEstimate {
    pub alpha: QuasiMomentum,
    pub d: f64,
    pub tau_minus: f64,
    pub tau_source: TauSource,
    pub radius: Radius,
}

impl ConvergenceEstimate {
    pub fn error_bound(&self, z: f64, p: u32) -> Result<f64> {
        truncation_bound(self.d, self.radius.r_star, z, p)
    }
}

/// Radius from the `beta = 1/limit` values: `d` is the cluster isolation of branch `j`.
pub fn convergence_estimate(
    alpha: QuasiMomentum,
    limit_values: &[f64],
    j: usize,
    tau_minus: f64,
    tau_source: TauSource,
    material: &Material,
) -> Result<ConvergenceEstimate> {
    let mut betas: Vec<f64> = limit_values.iter().map(|v| 1.0 / v).collect();
    betas.sort_by(|a, b| b.total_cmp(a));
    // Ascending limits map to descending betas with the same index.
    let d = cluster_isolation_distance_desc(&betas, j)?;
    let rho = material.rho_sup();
    let radius = if alpha.is_gamma() {
        radius_periodic(d, tau_minus, material, rho)?
    } else {
        radius_quasi(&alpha, d, tau_minus, material, rho)?
    };
    Ok(ConvergenceEstimate { alpha, d, tau_minus, tau_source, radius })
}

fn cluster_isolation_distance_desc(desc: &[f64], j: usize) -> Result<f64> {
    let asc: Vec<f64> = desc.iter().rev().copied().collect();
    cluster_isolation_distance(&asc, desc.len() + 1 - j)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCoefficients {
    pub alpha: QuasiMomentum,
    /// Limit branch index (1-based, Gamma offset removed).
    pub j: usize,
    pub xi0: f64,
    pub beta0: f64,
    pub beta1: f64,
    /// `xi = xi0 - xi_slope / k + O(1/k^2)`.
    pub xi_slope: f64,
    /// Exterior energy of the correction for the unit-L2 limit eigenfunction.
    pub exterior_energy: f64,
    /// Size of the degenerate limit cluster containing `j`.
    pub cluster: usize,
    /// Slopes of the whole cluster, descending.
    pub cluster_slopes: Vec<f64>,
}

/// Limit eigenpairs and first-order data for every cluster member.
#[derive(Debug, Clone)]
pub struct FirstOrder {
    /// Nonzero limit values, ascending.
    pub limits: Vec<f64>,
    pub coefficients: Vec<SeriesCoefficients>,
}

fn sub(a: &Mat<c64>, rows: &[usize], cols: &[usize]) -> Mat<c64> {
    Mat::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])])
}

/// Degrees of freedom on which the exterior stiffness vanishes identically (interior
/// enrichment, and the constants at Gamma): the discrete kernel the limit lives on.
pub fn exterior_kernel(pencil: &PlaneWavePencil) -> (Vec<usize>, Vec<usize>) {
    let n = pencil.dim();
    let zero: Vec<bool> = (0..n).map(|i| (0..n).all(|j| pencil.k_out[(i, j)] == c64::new(0.0, 0.0))).collect();
    let kernel = (0..n).filter(|&i| zero[i]).collect();
    let rest = (0..n).filter(|&i| !zero[i]).collect();
    (kernel, rest)
}

/// First-order coefficients for the limit clusters meeting branches `1..=max_j` at `alpha`.
///
/// The limit problem is the pencil restricted to the exterior kernel. For a limit eigenpair
/// `(delta, phi)` the correction solves `K_out v = -(K_in - delta M) phi` and
/// `xi_1 = -(r* K_out^+ r) / (phi* M phi)`; a degenerate cluster uses the Gram matrix of
/// `r_a* K_out^+ r_b`, whose eigenvalues split the cluster at first order.
pub fn first_order(model: &Model, alpha: QuasiMomentum, max_j: usize) -> Result<FirstOrder> {
    let pencil = model.pencil(alpha)?;
    let mat = &model.spec.material;
    let mass = pencil.mass(mat.rho1, mat.rho2);
    let unit = pencil.mass(1.0, 1.0);
    let (kernel, rest) = exterior_kernel(&pencil);
    if kernel.is_empty() {
        return Err(Error::InvalidInput("no interior enrichment: the discrete limit space is empty".into()));
    }
    let kin_v = sub(&pencil.k_in, &kernel, &kernel);
    let m_v = sub(&mass, &kernel, &kernel);
    let limit = crate::eigen::solve_ghep(&kin_v, &m_v, kernel.len())?;
    // Drop the rigid translations at Gamma.
    let skip = if alpha.is_gamma() { 3 } else { 0 };
    let limits: Vec<f64> = limit.eigenvalues[skip..].to_vec();
    if limits.is_empty() {
        return Err(Error::InvalidInput("limit space has no nonzero eigenvalues".into()));
    }

    let kout_r = sub(&pencil.k_out, &rest, &rest);
    let herm = Mat::<c64>::from_fn(rest.len(), rest.len(), |i, j| (kout_r[(i, j)] + kout_r[(j, i)].conj()) * 0.5);
    let eig = herm.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Solver(format!("{e:?}")))?;
    let s = eig.S().column_vector();
    let u = eig.U();
    let top = (0..rest.len()).map(|i| s[i].re.abs()).fold(0.0, f64::max);
    let kept: Vec<usize> = (0..rest.len()).filter(|&i| s[i].re > PINV_TOL * top).collect();

    let mut coefficients = Vec::new();
    let groups = clusters(&limits, CLUSTER_TOL);
    for range in groups {
        if range.start >= max_j {
            break;
        }
        let g = range.len();
        let delta = limits[range.start..range.end].iter().sum::<f64>() / g as f64;
        // Full-coordinate limit vectors, M-orthonormal from the solver.
        let phis: Vec<Vec<c64>> = range
            .clone()
            .map(|c| {
                let mut v = vec![c64::new(0.0, 0.0); pencil.dim()];
                for (i, &k) in kernel.iter().enumerate() {
                    v[k] = limit.eigenvectors[(i, c + skip)];
                }
                v
            })
            .collect();
        // Residuals on the complement, in the eigenbasis of K_out, scaled by 1/sqrt(sigma).
        let scaled: Vec<Vec<c64>> = phis
            .iter()
            .map(|phi| {
                let r: Vec<c64> = rest
                    .iter()
                    .map(|&row| {
                        let mut acc = c64::new(0.0, 0.0);
                        for &col in &kernel {
                            acc += (pencil.k_in[(row, col)] - mass[(row, col)] * delta) * phi[col];
                        }
                        acc
                    })
                    .collect();
                kept.iter()
                    .map(|&e| {
                        let mut acc = c64::new(0.0, 0.0);
                        for (i, ri) in r.iter().enumerate() {
                            acc += u[(i, e)].conj() * ri;
                        }
                        acc / s[e].re.sqrt()
                    })
                    .collect()
            })
            .collect();
        let gram = Mat::<c64>::from_fn(g, g, |a, b| scaled[a].iter().zip(&scaled[b]).map(|(x, y)| x.conj() * y).sum());
        let ge = gram.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Solver(format!("{e:?}")))?;
        let gs = ge.S().column_vector();
        let gu = ge.U();
        let mut order: Vec<usize> = (0..g).collect();
        order.sort_by(|&a, &b| gs[b].re.total_cmp(&gs[a].re));
        let slopes: Vec<f64> = order.iter().map(|&i| gs[i].re.max(0.0)).collect();
        for (pos, &oi) in order.iter().enumerate() {
            // L2 norm^2 of the cluster combination with unit mass norm.
            let comb: Vec<c64> = (0..pencil.dim())
                .map(|k| (0..g).map(|a| phis[a][k] * gu[(a, oi)]).sum())
                .collect();
            let l2 = crate::assembly::form(&unit, &comb, &comb).re;
            let slope = slopes[pos];
            let j = range.start + pos + 1;
            coefficients.push(SeriesCoefficients {
                alpha,
                j,
                xi0: delta,
                beta0: 1.0 / delta,
                beta1: slope / (delta * delta),
                xi_slope: slope,
                exterior_energy: slope / l2,
                cluster: g,
                cluster_slopes: slopes.clone(),
            });
        }
    }
    Ok(FirstOrder { limits, coefficients })
}

/// First-order data for limit branch `j` (1-based, Gamma offset removed).
pub fn first_order_coefficient(model: &Model, alpha: QuasiMomentum, j: usize) -> Result<SeriesCoefficients> {
    let fo = first_order(model, alpha, j)?;
    fo.coefficients
        .into_iter()
        .find(|c| c.j == j)
        .ok_or_else(|| Error::InvalidInput(format!("limit branch {j} not available")))
}

/// Derivative at `z = 0` of the interpolating polynomial through `(z_i, f_i)`.
pub fn slope_at_zero(z: &[f64], f: &[f64]) -> f64 {
    let n = z.len();
    let mut total = 0.0;
    for i in 0..n {
        // L_i'(0) = L_i(0) * sum_{m != i} 1 / (0 - z_m)
        let mut li0 = 1.0;
        let mut sum = 0.0;
        for m in 0..n {
            if m != i {
                li0 *= (0.0 - z[m]) / (z[i] - z[m]);
                sum += 1.0 / (0.0 - z[m]);
            }
        }
        total += f[i] * li0 * sum;
    }
    total
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub k: f64,
    pub z: f64,
    pub direct_xi: f64,
    pub series_xi: f64,
    /// `|1/xi_direct - (beta0 + beta1 z)|`.
    pub error: f64,
    /// `None` when `z` is outside the disk.
    pub bound: Option<f64>,
    pub in_disk: bool,
}

/// Direct solves against the first-order series for limit branch `coeffs.j`.
pub fn series_vs_direct(
    model: &Model,
    coeffs: &SeriesCoefficients,
    estimate: &ConvergenceEstimate,
    ks: &[f64],
) -> Result<Vec<SeriesRow>> {
    let alpha = coeffs.alpha;
    let global = if alpha.is_gamma() { coeffs.j + 3 } else { coeffs.j };
    let pencil = model.pencil(alpha)?;
    let rows = crate::sweep::try_map(ks, |&k| -> Result<SeriesRow> {
        let count = coeffs.j;
        let ev = solve_pencil(&pencil, &model.spec.material, k, count, false)?.eigenvalues;
        let direct_xi =
            global_branch(&alpha, &ev, global).ok_or_else(|| Error::Solver(format!("branch {global} missing")))?;
        let z = 1.0 / k;
        let beta = coeffs.beta0 + coeffs.beta1 * z;
        let bound = estimate.error_bound(z, 1).ok();
        Ok(SeriesRow {
            k,
            z,
            direct_xi,
            series_xi: 1.0 / beta,
            error: (1.0 / direct_xi - beta).abs(),
            in_disk: bound.is_some(),
            bound,
        })
    })?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isolation_examples() {
        assert_eq!(isolation_distance(&[1.0, 2.0, 4.0], 2).unwrap(), 0.5);
        assert!(matches!(isolation_distance(&[1.0, 1.0 + 1e-12, 4.0], 1), Err(Error::Degenerate { .. })));
        assert_eq!(cluster_isolation_distance(&[1.0, 1.0 + 1e-12, 4.0], 1).unwrap(), 1.5);
        assert!(isolation_distance(&[1.0], 1).is_err());
    }

    #[test]
    fn worked_radii() {
        let m = Material::unit();
        let a = QuasiMomentum::new([PI, 0.0, 0.0]);
        let r = radius_quasi(&a, 0.5, -0.25, &m, 1.0).unwrap();
        assert!((r.r_star - 0.26243).abs() < 1e-5, "{}", r.r_star);
        assert!((r.z_star + 1.0 / 3.0).abs() < 1e-15);
        let r = radius_periodic(0.5, -0.25, &m, 1.0).unwrap();
        assert!((r.r_star - 0.31224).abs() < 1e-5, "{}", r.r_star);
        assert!((sphere_radius_quasi(1.0, 1.0, 1.0, 1.0) - 1.0 / 11.0).abs() < 1e-15);
        assert!(radius_quasi(&QuasiMomentum::gamma(), 0.5, -0.25, &m, 1.0).is_err());
        assert!(radius_periodic(0.5, -0.5, &m, 1.0).is_err());
    }

    #[test]
    fn bound_examples() {
        let b = truncation_bound(0.5, 0.26243, 0.1, 1).unwrap();
        assert!((b - 0.11730).abs() < 1e-5, "{b}");
        assert_eq!(truncation_bound(0.5, 0.26243, 0.0, 3).unwrap(), 0.0);
        assert!(matches!(truncation_bound(0.5, 0.2, 0.2, 1), Err(Error::OutsideDisk { .. })));
    }

    #[test]
    fn slope_of_quadratic() {
        let z = [0.1, 0.05, 0.025];
        let f: Vec<f64> = z.iter().map(|x| 3.0 - 2.0 * x + 7.0 * x * x).collect();
        assert!((slope_at_zero(&z, &f) + 2.0).abs() < 1e-12);
    }
}
