//! Direct Bloch band computation `xi_j(k, alpha)`, band extents and diagnostics.
//!
//! Branch numbering is 1-based and by sorted order. At `alpha = 0` the three constant
//! translations are deflated, so the deflated branch `i` is the global branch `i + 3`; global
//! branches 1..=3 at Gamma are the zero acoustic values.

use faer::{c64, Mat};

use crate::assembly::PlaneWavePencil;
use crate::crystal::{Material, QuasiMomentum};
use crate::eigen::{deflate_gamma, solve_deflated, solve_ghep, EigenSolution};
use crate::error::Result;
use crate::model::Model;
use crate::sweep;

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionRecord {
    pub alpha: QuasiMomentum,
    pub k: f64,
    /// Global branch index (Gamma offset applied).
    pub j: usize,
    /// Position in the sorted solver output, 1-based.
    pub raw_index: usize,
    pub xi: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionTable {
    pub records: Vec<DispersionRecord>,
    pub cutoff_n: usize,
    pub geometry_hash: String,
}

/// Eigenpairs of `(k K_out + K_in) x = xi (rho1 M_in + rho2 M_out) x`, deflated at Gamma.
pub fn solve_pencil(
    pencil: &PlaneWavePencil,
    material: &Material,
    k: f64,
    count: usize,
    vectors: bool,
) -> Result<EigenSolution> {
    let a = pencil.stiffness(k);
    let b = pencil.mass(material.rho1, material.rho2);
    if pencil.basis.alpha.is_gamma() {
        let d = deflate_gamma(&b, &pencil.basis)?;
        solve_deflated(&a, &b, &d, count, vectors)
    } else if vectors {
        solve_ghep(&a, &b, count)
    } else {
        let ev = crate::eigen::eigenvalues_ghep(&a, &b, count)?;
        Ok(EigenSolution {
            eigenvalues: ev,
            eigenvectors: Mat::<c64>::zeros(a.nrows(), 0),
            residual_norms: Vec::new(),
            deflated_dim: 0,
        })
    }
}

fn records(alpha: QuasiMomentum, k: f64, sol: &EigenSolution) -> Vec<DispersionRecord> {
    let offset = if alpha.is_gamma() { 3 } else { 0 };
    sol.eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &xi)| DispersionRecord {
            alpha,
            k,
            j: i + 1 + offset,
            raw_index: i + 1,
            xi,
            residual: sol.residual_norms.get(i).copied().unwrap_or(f64::NAN),
        })
        .collect()
}

/// Lowest `count` branches at `(alpha, k)`.
pub fn solve_bands(model: &Model, alpha: QuasiMomentum, k: f64, count: usize) -> Result<Vec<DispersionRecord>> {
    let pencil = model.pencil(alpha)?;
    let sol = solve_pencil(&pencil, &model.spec.material, k, count, true)?;
    Ok(records(alpha, k, &sol))
}

/// Sorted eigenvalues only, for every contrast in `ks`, reusing one assembly.
pub fn eigenvalues_over_k(model: &Model, alpha: QuasiMomentum, ks: &[f64], count: usize) -> Result<Vec<Vec<f64>>> {
    let pencil = model.pencil(alpha)?;
    ks.iter()
        .map(|&k| Ok(solve_pencil(&pencil, &model.spec.material, k, count, false)?.eigenvalues))
        .collect()
}

/// Global branch value `xi_j` from the sorted (deflated at Gamma) eigenvalues.
pub fn global_branch(alpha: &QuasiMomentum, values: &[f64], j: usize) -> Option<f64> {
    if alpha.is_gamma() {
        if j <= 3 { Some(0.0) } else { values.get(j - 4).copied() }
    } else {
        values.get(j - 1).copied()
    }
}

/// Full (alpha x k) sweep. Work is split across quasi-momenta; the table is ordered by
/// (alpha position, k position, branch).
pub fn sweep(model: &Model, alphas: &[QuasiMomentum], ks: &[f64], count: usize) -> Result<DispersionTable> {
    let per_alpha = sweep::try_map(alphas, |&alpha| -> Result<Vec<DispersionRecord>> {
        let pencil = model.pencil(alpha)?;
        let mut out = Vec::new();
        for &k in ks {
            let sol = solve_pencil(&pencil, &model.spec.material, k, count, true)?;
            out.extend(records(alpha, k, &sol));
        }
        Ok(out)
    })?;
    Ok(DispersionTable {
        records: per_alpha.into_iter().flatten().collect(),
        cutoff_n: model.disc.cutoff_n,
        geometry_hash: model.geometry_hash(),
    })
}

/// `(min, max)` of the global branch `j` over `grid`.
pub fn band_extents(model: &Model, k: f64, j: usize, grid: &[QuasiMomentum]) -> Result<(f64, f64)> {
    let vals = sweep::try_map(grid, |&alpha| -> Result<f64> {
        let pencil = model.pencil(alpha)?;
        let count = if alpha.is_gamma() { j.saturating_sub(3).max(1) } else { j };
        let ev = solve_pencil(&pencil, &model.spec.material, k, count, false)?.eigenvalues;
        Ok(global_branch(&alpha, &ev, j).unwrap_or(f64::NAN))
    })?;
    Ok(extents_of(&vals))
}

/// Extents of every global branch `1..=branches` over the grid, from one solve per point.
pub fn all_band_extents(model: &Model, k: f64, branches: usize, grid: &[QuasiMomentum]) -> Result<Vec<(f64, f64)>> {
    let per_point = sweep::try_map(grid, |&alpha| -> Result<Vec<f64>> {
        let pencil = model.pencil(alpha)?;
        let ev = solve_pencil(&pencil, &model.spec.material, k, branches, false)?.eigenvalues;
        Ok((1..=branches).map(|j| global_branch(&alpha, &ev, j).unwrap_or(f64::NAN)).collect())
    })?;
    Ok((0..branches)
        .map(|b| extents_of(&per_point.iter().map(|v| v[b]).collect::<Vec<_>>()))
        .collect())
}

pub fn extents_of(vals: &[f64]) -> (f64, f64) {
    vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// `max |xi_{j+3}(k, 0) - xi_{j+3}(k, alpha)| / (k |alpha|)` over the probe points.
pub fn lipschitz_probe(model: &Model, k: f64, j: usize, alphas: &[QuasiMomentum]) -> Result<f64> {
    let g = model.pencil(QuasiMomentum::gamma())?;
    let at_gamma = solve_pencil(&g, &model.spec.material, k, j, false)?.eigenvalues[j - 1];
    let ratios = sweep::try_map(alphas, |&alpha| -> Result<f64> {
        let p = model.pencil(alpha)?;
        let ev = solve_pencil(&p, &model.spec.material, k, j + 3, false)?.eigenvalues;
        Ok((at_gamma - ev[j + 2]).abs() / (k * alpha.norm()))
    })?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}
