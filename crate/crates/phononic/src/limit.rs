//! High-contrast limit: Dirichlet spectrum of the inclusion with mean vectors, effective mass
//! tensor and its roots, limit band structure, gaps and interlacing audits.
//!
//! Sign convention: `-L_D u = rho1 delta u`, so all `delta` are positive.

use faer::{c64, Mat, Side};

use crate::dispersion::{global_branch, solve_pencil};
use crate::crystal::QuasiMomentum;
use crate::error::{Error, Result};
use crate::model::Model;

/// Relative gap below which two Dirichlet values are treated as one degenerate cluster.
pub const CLUSTER_TOL: f64 = 1e-8;
/// Pole guard of the effective mass evaluation.
pub const POLE_TOL: f64 = 1e-9;
/// Relative bisection tolerance of the mass roots.
pub const ROOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DirichletEntry {
    pub delta: f64,
    /// `int_D rho1 psi`.
    pub mean: [c64; 3],
    pub mean_norm: f64,
    pub zero_mean: bool,
    /// Classified zero-mean but within a factor 1e3 of the threshold, or nonzero-mean but
    /// within a factor 1e3 above it.
    pub borderline: bool,
}

#[derive(Debug, Clone)]
pub struct DirichletSpectrum {
    pub entries: Vec<DirichletEntry>,
    pub rho1: f64,
    /// `|D|`.
    pub volume: f64,
    /// `1e-6 sqrt(|D|) ||psi||_{L2}`.
    pub eps_mean: f64,
    /// Enrichment coefficients of `psi_j` (column `j`), normalized `int rho1 |psi|^2 = 1`.
    pub vectors: Mat<c64>,
}

impl DirichletSpectrum {
    pub fn deltas(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.delta).collect()
    }

    pub fn zero_mean_values(&self) -> Vec<f64> {
        self.entries.iter().filter(|e| e.zero_mean).map(|e| e.delta).collect()
    }

    pub fn nonzero_mean_values(&self) -> Vec<f64> {
        self.entries.iter().filter(|e| !e.zero_mean).map(|e| e.delta).collect()
    }

    /// Leading `count` entries, keeping whole degenerate clusters together is the caller's job.
    pub fn truncated(&self, count: usize) -> Self {
        let count = count.min(self.entries.len());
        Self {
            entries: self.entries[..count].to_vec(),
            rho1: self.rho1,
            volume: self.volume,
            eps_mean: self.eps_mean,
            vectors: self.vectors.subcols(0, count).to_owned(),
        }
    }

    /// Spectrum built directly from values and mean vectors (no eigenvectors).
    pub fn synthetic(values: &[f64], means: &[[c64; 3]], rho1: f64, volume: f64) -> Self {
        let eps_mean = 1e-6 * volume.sqrt() / rho1.sqrt();
        let entries = values
            .iter()
            .zip(means)
            .map(|(&delta, &mean)| entry(delta, mean, eps_mean))
            .collect();
        Self { entries, rho1, volume, eps_mean, vectors: Mat::zeros(0, values.len()) }
    }
}

fn norm3(m: &[c64; 3]) -> f64 {
    (m[0].norm_sqr() + m[1].norm_sqr() + m[2].norm_sqr()).sqrt()
}

fn entry(delta: f64, mean: [c64; 3], eps_mean: f64) -> DirichletEntry {
    let n = norm3(&mean);
    let zero_mean = n < eps_mean;
    let borderline = if zero_mean { n > 1e-3 * eps_mean } else { n < 1e3 * eps_mean };
    DirichletEntry { delta, mean, mean_norm: n, zero_mean, borderline }
}

/// Index ranges of clusters of values whose consecutive relative gaps are below `tol`.
pub fn clusters(values: &[f64], tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        let split = i == values.len()
            || (values[i] - values[i - 1]).abs() > tol * values[i].abs().max(values[i - 1].abs());
        if split {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// Dirichlet eigenpairs of the inclusion from the enrichment block of the stiffness, lowest
/// `count` (all when `count` exceeds the block size). Within each degenerate cluster the basis is
/// rotated so that at most three members carry the whole mean.
pub fn dirichlet_spectrum(model: &Model, count: usize) -> Result<DirichletSpectrum> {
    let en = &model.enrichment;
    if en.count == 0 {
        return Err(Error::InvalidInput(
            "the Dirichlet spectrum needs an interior enrichment (bubbles or voxel hats)".into(),
        ));
    }
    let m = &model.spec.material;
    let nb = en.count;
    let dim = 3 * nb;
    let mut k = Mat::<f64>::zeros(dim, dim);
    let lap: Vec<f64> = (0..nb * nb).map(|x| (0..3).map(|d| en.grad(d, d)[(x / nb, x % nb)]).sum()).collect();
    for a in 0..nb {
        for b in 0..nb {
            for p in 0..3 {
                for q in 0..3 {
                    let mut v = m.lambda1 * en.grad(p, q)[(a, b)] + m.mu1 * en.grad(q, p)[(a, b)];
                    if p == q {
                        v += m.mu1 * lap[a * nb + b];
                    }
                    k[(3 * a + p, 3 * b + q)] = v;
                }
            }
        }
    }
    let ksym = Mat::<f64>::from_fn(dim, dim, |i, j| 0.5 * (k[(i, j)] + k[(j, i)]));
    let eig = ksym.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Solver(format!("{e:?}")))?;
    let s = eig.S().column_vector();
    let u = eig.U();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| s[i].total_cmp(&s[j]));
    let count = count.min(dim);
    // Extend to the end of a cluster cut by `count`.
    let all: Vec<f64> = order.iter().map(|&i| s[i] / m.rho1).collect();
    let mut take = count;
    while take < dim && take > 0 && (all[take] - all[take - 1]).abs() <= CLUSTER_TOL * all[take].abs() {
        take += 1;
    }
    let values = &all[..take];
    if values.first().is_some_and(|&v| v <= 0.0) {
        return Err(Error::Solver(format!("non-positive Dirichlet value {}", values[0])));
    }
    let scale = 1.0 / m.rho1.sqrt();
    let mut vecs = Mat::<c64>::from_fn(dim, take, |r, c| c64::new(u[(r, order[c])] * scale, 0.0));
    let volume = model.spec.geometry.volume();
    let eps_mean = 1e-6 * volume.sqrt() * scale;
    let mean_of = |v: &Mat<c64>, c: usize| -> [c64; 3] {
        let mut out = [c64::new(0.0, 0.0); 3];
        for a in 0..nb {
            for q in 0..3 {
                out[q] += v[(3 * a + q, c)] * en.means[a] * m.rho1;
            }
        }
        out
    };
    for range in clusters(values, CLUSTER_TOL) {
        let g = range.len();
        if g == 1 {
            continue;
        }
        let mc: Vec<[c64; 3]> = range.clone().map(|c| mean_of(&vecs, c)).collect();
        let gram = Mat::<c64>::from_fn(g, g, |i, j| (0..3).map(|q| mc[i][q].conj() * mc[j][q]).sum());
        let ge = gram.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Solver(format!("{e:?}")))?;
        let gs = ge.S().column_vector();
        let mut gorder: Vec<usize> = (0..g).collect();
        // Largest mean first.
        gorder.sort_by(|&i, &j| gs[j].re.total_cmp(&gs[i].re));
        let v = ge.U();
        let block = vecs.subcols(range.start, g).to_owned();
        for (new_c, &src) in gorder.iter().enumerate() {
            for r in 0..dim {
                let mut acc = c64::new(0.0, 0.0);
                for i in 0..g {
                    acc += block[(r, i)] * v[(i, src)];
                }
                vecs[(r, range.start + new_c)] = acc;
            }
        }
    }
    let entries = (0..take).map(|c| entry(values[c], mean_of(&vecs, c), eps_mean)).collect();
    Ok(DirichletSpectrum { entries, rho1: m.rho1, volume, eps_mean, vectors: vecs })
}

/// Three-point Richardson extrapolation in `1/k` from `k_big/4, k_big/2, k_big` of the lowest
/// `count` Bloch values at a nonzero quasi-momentum. Eigenvalues only.
pub fn richardson_limit(model: &Model, alpha: QuasiMomentum, k_big: f64, count: usize) -> Result<Vec<f64>> {
    if alpha.is_gamma() {
        return Err(Error::InvalidInput("Richardson Dirichlet estimate requires alpha != 0".into()));
    }
    let pencil = model.pencil(alpha)?;
    let m = &model.spec.material;
    let ev = |k: f64| solve_pencil(&pencil, m, k, count, false).map(|s| s.eigenvalues);
    let (a, b, c) = (ev(k_big)?, ev(k_big / 2.0)?, ev(k_big / 4.0)?);
    Ok((0..count.min(a.len())).map(|j| (8.0 * a[j] - 6.0 * b[j] + c[j]) / 3.0).collect())
}

/// Fails with `PathDisagreement` at the first index where `|p - o| > tol * |o|`.
pub fn compare_paths(production: &[f64], oracle: &[f64], tol: f64) -> Result<()> {
    for (i, (&p, &o)) in production.iter().zip(oracle).enumerate() {
        if (p - o).abs() > tol * o.abs() {
            return Err(Error::PathDisagreement { index: i + 1, production: p, oracle: o });
        }
    }
    Ok(())
}

/// `M(nu) = <rho> I - nu sum_j conj(m_j) (x) m_j / (nu - delta*_j)` over nonzero-mean entries.
pub fn effective_mass(nu: f64, dirichlet: &DirichletSpectrum, mean_density: f64) -> Result<Mat<c64>> {
    for e in dirichlet.entries.iter().filter(|e| !e.zero_mean) {
        if (nu - e.delta).abs() <= POLE_TOL * e.delta.abs().max(1.0) {
            return Err(Error::MassPole { nu, pole: e.delta });
        }
    }
    Ok(mass_unchecked(nu, dirichlet, mean_density))
}

fn mass_unchecked(nu: f64, dirichlet: &DirichletSpectrum, mean_density: f64) -> Mat<c64> {
    let mut m = Mat::<c64>::from_fn(3, 3, |i, j| c64::new(if i == j { mean_density } else { 0.0 }, 0.0));
    for e in dirichlet.entries.iter().filter(|e| !e.zero_mean) {
        let w = nu / (nu - e.delta);
        for p in 0..3 {
            for q in 0..3 {
                m[(p, q)] -= e.mean[p].conj() * e.mean[q] * w;
            }
        }
    }
    m
}

fn mass_eigenvalues(nu: f64, dirichlet: &DirichletSpectrum, mean_density: f64) -> [f64; 3] {
    let m = mass_unchecked(nu, dirichlet, mean_density);
    let h = Mat::<c64>::from_fn(3, 3, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    let mut v = h.self_adjoint_eigenvalues(Side::Lower).unwrap_or_else(|_| vec![f64::NAN; 3]);
    v.sort_by(f64::total_cmp);
    [v[0], v[1], v[2]]
}

/// `max |M - M*|` relative to `max |M|`.
pub fn hermitian_defect(m: &Mat<c64>) -> f64 {
    let mut d = 0.0f64;
    let mut s = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            d = d.max((m[(i, j)] - m[(j, i)].conj()).norm());
            s = s.max(m[(i, j)].norm());
        }
    }
    d / s
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassRoot {
    pub nu: f64,
    pub multiplicity: usize,
    /// Index of the bracket: 0 is `(0, delta*_1)`, `i` is `(delta*_i, delta*_{i+1})`.
    pub bracket: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassRoots {
    pub roots: Vec<MassRoot>,
    /// Brackets without a sign change.
    pub rootless: Vec<usize>,
    /// Distinct nonzero-mean Dirichlet values bounding the brackets.
    pub poles: Vec<f64>,
    pub truncation_count: usize,
    pub warnings: Vec<String>,
}

impl MassRoots {
    /// Roots repeated by multiplicity, ascending.
    pub fn expanded(&self) -> Vec<f64> {
        self.roots.iter().flat_map(|r| std::iter::repeat_n(r.nu, r.multiplicity)).collect()
    }
}

/// Positive roots of `det M(nu) = 0` on `(0, delta*_1)` and between consecutive distinct
/// `delta*`. `M` is nondecreasing between poles, so each sorted eigenvalue of `M` is monotone
/// there and is bisected separately; coincident roots give the multiplicity.
pub fn mass_roots(dirichlet: &DirichletSpectrum, mean_density: f64) -> MassRoots {
    let star = dirichlet.nonzero_mean_values();
    let mut poles: Vec<f64> = Vec::new();
    for r in clusters(&star, CLUSTER_TOL) {
        poles.push(star[r.start]);
    }
    let mut out = MassRoots {
        roots: Vec::new(),
        rootless: Vec::new(),
        poles: poles.clone(),
        truncation_count: dirichlet.entries.len(),
        warnings: Vec::new(),
    };
    if poles.is_empty() {
        out.warnings.push("all Dirichlet mean vectors vanish: det M has no roots".into());
        return out;
    }
    let mut edges = vec![0.0];
    edges.extend(&poles);
    let brackets: Vec<(usize, f64, f64)> = edges.windows(2).enumerate().map(|(i, w)| (i, w[0], w[1])).collect();
    let found = crate::sweep::map(&brackets, |&(i, lo, hi)| {
        let off = 1e-9 * (hi - lo);
        let (a, b) = (lo + off, hi - off);
        let ea = mass_eigenvalues(a, dirichlet, mean_density);
        let eb = mass_eigenvalues(b, dirichlet, mean_density);
        let mut roots = Vec::new();
        for c in 0..3 {
            if ea[c] < 0.0 && eb[c] > 0.0 {
                let (mut x0, mut x1) = (a, b);
                while x1 - x0 > ROOT_TOL * x1 {
                    let mid = 0.5 * (x0 + x1);
                    if mass_eigenvalues(mid, dirichlet, mean_density)[c] < 0.0 {
                        x0 = mid;
                    } else {
                        x1 = mid;
                    }
                }
                roots.push(0.5 * (x0 + x1));
            }
        }
        (i, roots)
    });
    for (i, roots) in found {
        if roots.is_empty() {
            out.rootless.push(i);
            continue;
        }
        let mut sorted = roots;
        sorted.sort_by(f64::total_cmp);
        for r in clusters(&sorted, 1e3 * ROOT_TOL) {
            let nu = sorted[r.clone()].iter().sum::<f64>() / r.len() as f64;
            out.roots.push(MassRoot { nu, multiplicity: r.len(), bracket: i });
        }
    }
    out
}

/// Roots recomputed with the last 20% of entries dropped, paired with the full roots by order.
/// Returns `(full, reduced, max relative shift)` over the common prefix.
pub fn tail_sensitivity(dirichlet: &DirichletSpectrum, mean_density: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let full = mass_roots(dirichlet, mean_density).expanded();
    let keep = (dirichlet.entries.len() * 4) / 5;
    let reduced_spec = dirichlet.truncated(keep);
    let reduced = mass_roots(&reduced_spec, mean_density).expanded();
    // Only roots below the last retained pole are comparable.
    let last = reduced_spec.nonzero_mean_values().last().copied().unwrap_or(0.0);
    let shift = full
        .iter()
        .zip(&reduced)
        .filter(|(a, _)| **a < last)
        .map(|(a, b)| (a - b).abs() / a)
        .fold(0.0, f64::max);
    (full, reduced, shift)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapVerdict {
    /// `j` of the criterion `delta_{j+2} < omega_j` (1-based).
    pub j: usize,
    pub delta_j2: f64,
    pub omega_j: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitSpectrum {
    pub deltas: Vec<f64>,
    pub delta_prime: Vec<f64>,
    pub nu: Vec<f64>,
    pub omega: Vec<f64>,
    /// `[0, delta_1], [0, delta_2], [0, delta_3], [omega_j, delta_{j+3}]...`
    pub limit_bands: Vec<(f64, f64)>,
    pub gaps: Vec<(f64, f64)>,
    pub verdicts: Vec<GapVerdict>,
}

/// Merges the zero-mean values and the mass roots into `omega` and forms the limit bands.
pub fn limit_band_structure(deltas: &[f64], delta_prime: &[f64], nu: &[f64]) -> Result<LimitSpectrum> {
    if deltas.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "limit bands need at least 4 Dirichlet values, got {}",
            deltas.len()
        )));
    }
    let mut omega: Vec<f64> = delta_prime.iter().chain(nu).copied().collect();
    omega.sort_by(f64::total_cmp);
    let mut bands: Vec<(f64, f64)> = deltas[..3].iter().map(|&d| (0.0, d)).collect();
    for (j, &w) in omega.iter().enumerate() {
        match deltas.get(j + 3) {
            Some(&d) => bands.push((w, d)),
            None => break,
        }
    }
    let verdicts = omega
        .iter()
        .enumerate()
        .filter_map(|(j, &w)| {
            deltas.get(j + 2).map(|&d| GapVerdict { j: j + 1, delta_j2: d, omega_j: w, holds: d < w })
        })
        .collect();
    let gaps = gaps_of(&bands);
    Ok(LimitSpectrum {
        deltas: deltas.to_vec(),
        delta_prime: delta_prime.to_vec(),
        nu: nu.to_vec(),
        omega,
        limit_bands: bands,
        gaps,
        verdicts,
    })
}

/// Maximal open intervals below the highest band edge that meet no band.
pub fn gaps_of(bands: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut sorted: Vec<(f64, f64)> = bands.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut gaps = Vec::new();
    let mut reach = f64::NEG_INFINITY;
    for (lo, hi) in sorted {
        if reach > f64::NEG_INFINITY && lo > reach {
            gaps.push((reach, lo));
        }
        reach = reach.max(hi);
    }
    gaps
}

/// `delta_j <= omega_j <= delta_{j+3}` for every index where both sides exist, with relative
/// slack `tol`. Returns the violating `j` (1-based).
pub fn first_interlacing_violations(deltas: &[f64], omega: &[f64], tol: f64) -> Vec<usize> {
    omega
        .iter()
        .enumerate()
        .filter_map(|(j, &w)| {
            let lo = deltas.get(j)?;
            let hi = deltas.get(j + 3)?;
            (w < lo * (1.0 - tol) || w > hi * (1.0 + tol)).then_some(j + 1)
        })
        .collect()
}

/// Checks that every bracket `(delta*_i, delta*_{i+1})`, `i >= 1`, holds exactly one distinct
/// root and `(0, delta*_1)` holds none. Returns the offending bracket indices.
pub fn cubic_interlacing_violations(roots: &MassRoots) -> Vec<usize> {
    let n = roots.poles.len();
    (0..n)
        .filter(|&i| {
            let c = roots.roots.iter().filter(|r| r.bracket == i).count();
            if i == 0 { c != 0 } else { c != 1 }
        })
        .collect()
}

/// `max(|a - c|, |b - d|)`.
pub fn hausdorff(x: (f64, f64), y: (f64, f64)) -> f64 {
    (x.0 - y.0).abs().max((x.1 - y.1).abs())
}

/// Complete discrete limit: Dirichlet spectrum, mass roots, bands.
pub fn limit_spectrum(model: &Model, count: usize) -> Result<(DirichletSpectrum, MassRoots, LimitSpectrum)> {
    let all = dirichlet_spectrum(model, usize::MAX)?;
    let rho = model.spec.mean_density();
    let roots = mass_roots(&all, rho);
    let head = all.truncated(count);
    // Only roots below the highest reported Dirichlet value are meaningful for the bands.
    let top = head.entries.last().map(|e| e.delta).unwrap_or(0.0);
    let nu: Vec<f64> = roots.expanded().into_iter().filter(|&v| v <= top).collect();
    let bands = limit_band_structure(&head.deltas(), &head.zero_mean_values(), &nu)?;
    Ok((head, roots, bands))
}

/// Finite-contrast value of the global branch `j` at `alpha`, used when comparing to limits.
pub fn branch_value(model: &Model, alpha: QuasiMomentum, k: f64, j: usize) -> Result<f64> {
    let pencil = model.pencil(alpha)?;
    let count = if alpha.is_gamma() { j.saturating_sub(3).max(1) } else { j };
    let ev = solve_pencil(&pencil, &model.spec.material, k, count, false)?.eigenvalues;
    global_branch(&alpha, &ev, j).ok_or_else(|| Error::Solver(format!("branch {j} not computed")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iso(a: f64) -> [c64; 3] {
        [c64::new(a, 0.0), c64::new(0.0, 0.0), c64::new(0.0, 0.0)]
    }

    #[test]
    fn mass_at_zero_is_mean_density() {
        let d = DirichletSpectrum::synthetic(&[2.0], &[iso(1.0)], 1.0, 0.1);
        let m = effective_mass(0.0, &d, 0.7).unwrap();
        assert_eq!(m[(0, 0)].re, 0.7);
        assert_eq!(m[(1, 1)].re, 0.7);
        assert!(matches!(effective_mass(2.0, &d, 1.0), Err(Error::MassPole { .. })));
    }

    #[test]
    fn single_synthetic_mode_root() {
        // Three orthogonal unit-direction modes with |m|^2 = 0.5 give M = (1 - 0.5 nu/(nu - 2)) I.
        let a = 0.5f64.sqrt();
        let z = c64::new(0.0, 0.0);
        let means = [[c64::new(a, 0.0), z, z], [z, c64::new(a, 0.0), z], [z, z, c64::new(a, 0.0)]];
        let d = DirichletSpectrum::synthetic(&[2.0, 2.0, 2.0], &means, 1.0, 0.1);
        let r = mass_roots(&d, 1.0);
        assert_eq!(r.rootless, vec![0]);
        assert_eq!(r.roots.len(), 0);
        // The root lies beyond the last pole, which is not bracketed; add a far pole.
        let mut means4 = means.to_vec();
        means4.push(iso(1e-4));
        let d = DirichletSpectrum::synthetic(&[2.0, 2.0, 2.0, 100.0], &means4, 1.0, 0.1);
        let r = mass_roots(&d, 1.0);
        assert_eq!(r.roots.len(), 1);
        assert_eq!(r.roots[0].multiplicity, 3);
        assert!((r.roots[0].nu - 4.0).abs() < 1e-3, "{:?}", r.roots);
    }

    #[test]
    fn zero_means_give_no_roots() {
        let d = DirichletSpectrum::synthetic(&[1.0, 2.0], &[iso(0.0), iso(0.0)], 1.0, 0.1);
        let r = mass_roots(&d, 1.0);
        assert!(r.roots.is_empty());
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn synthetic_gap() {
        let s = limit_band_structure(&[1.0, 2.0, 3.0, 10.0], &[], &[5.0]).unwrap();
        assert_eq!(s.limit_bands, vec![(0.0, 1.0), (0.0, 2.0), (0.0, 3.0), (5.0, 10.0)]);
        assert_eq!(s.gaps, vec![(3.0, 5.0)]);
        assert!(s.verdicts[0].holds);
        assert!(limit_band_structure(&[1.0, 2.0, 3.0], &[], &[5.0]).is_err());
    }

    #[test]
    fn degenerate_band_gives_no_gap_claim_from_it() {
        let s = limit_band_structure(&[1.0, 2.0, 3.0, 4.0], &[], &[4.0]).unwrap();
        assert_eq!(s.limit_bands[3], (4.0, 4.0));
        assert_eq!(s.gaps, vec![(3.0, 4.0)]);
    }

    #[test]
    fn interlacing_audit() {
        assert!(first_interlacing_violations(&[1.0, 2.0, 3.0, 10.0], &[5.0], 0.0).is_empty());
        assert_eq!(first_interlacing_violations(&[1.0, 2.0, 3.0, 4.0], &[5.0], 0.0), vec![1]);
    }

    #[test]
    fn cluster_ranges() {
        let c = clusters(&[1.0, 1.0 + 1e-12, 2.0, 3.0, 3.0], 1e-8);
        assert_eq!(c, vec![0..2, 2..3, 3..5]);
    }
}
