//! Structural spectrum: eigenvalues `tau` of `1/2 (K_out - K_in) w = tau (K_out + K_in) w`,
//! their pole images and the uniform lower bound from the buffer constant theta.

use faer::c64;

use crate::assembly::{combine, PlaneWavePencil};
use crate::crystal::{Material, QuasiMomentum};
use crate::eigen::{deflate_gamma, eigenvalues_ghep};
use crate::error::{Error, Result};

/// Half-width of the band around +-1/2 classified as discrete rigid-in-D / rigid-outside modes.
pub const EPS_W: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct StructuralSpectrum {
    pub alpha: QuasiMomentum,
    /// Sorted interior values in (-1/2 + EPS_W, 1/2 - EPS_W).
    pub taus: Vec<f64>,
    /// Count of values within EPS_W of +1/2.
    pub w1_count: usize,
    /// Count of values within EPS_W of -1/2.
    pub w2_count: usize,
    /// `(tau + 1/2) / (tau - 1/2)`.
    pub z_poles: Vec<f64>,
    /// `(tau - 1/2) / (tau + 1/2)`.
    pub k_poles: Vec<f64>,
    /// Largest z-pole (closest to the origin); `None` when there are no interior values.
    pub z_star: Option<f64>,
    /// `{0, k0, -k0}`.
    pub accumulation_targets: [f64; 3],
    /// Interior values within `10 EPS_W` of an endpoint, for audit.
    pub borderline: Vec<f64>,
}

impl StructuralSpectrum {
    pub fn tau_min(&self) -> Option<f64> {
        self.taus.first().copied()
    }
}

/// Splits a raw spectrum into endpoint classes and interior values.
pub fn classify(alpha: QuasiMomentum, mut values: Vec<f64>, material: &Material) -> Result<StructuralSpectrum> {
    values.sort_by(f64::total_cmp);
    let mut taus = Vec::new();
    let (mut w1, mut w2) = (0, 0);
    let mut borderline = Vec::new();
    for v in values {
        if v >= 0.5 - EPS_W {
            w1 += 1;
        } else if v <= -0.5 + EPS_W {
            w2 += 1;
        } else {
            if v >= 0.5 - 10.0 * EPS_W || v <= -0.5 + 10.0 * EPS_W {
                borderline.push(v);
            }
            taus.push(v);
        }
    }
    let (k_poles, z_poles, z_star) = pole_sets(&taus)?;
    let k0 = material.k0();
    Ok(StructuralSpectrum {
        alpha,
        taus,
        w1_count: w1,
        w2_count: w2,
        z_poles,
        k_poles,
        z_star,
        accumulation_targets: [0.0, k0, -k0],
        borderline,
    })
}

/// Full structural spectrum of an assembled pencil. At Gamma the constants are removed first.
pub fn compute_structural_spectrum(pencil: &PlaneWavePencil, material: &Material) -> Result<StructuralSpectrum> {
    let a = combine(&pencil.k_out, 0.5, &pencil.k_in, -0.5);
    let b = combine(&pencil.k_out, 1.0, &pencil.k_in, 1.0);
    let (a, b) = if pencil.basis.alpha.is_gamma() {
        let m = pencil.mass(1.0, 1.0);
        let d = deflate_gamma(&m, &pencil.basis)?;
        (d.restrict(&a), d.restrict(&b))
    } else {
        (a, b)
    };
    let n = a.nrows();
    let values = eigenvalues_ghep(&a, &b, n).map_err(|e| match e {
        Error::IndefiniteMass { smallest } => Error::IndefiniteStiffness(format!(
            "K_out + K_in has smallest eigenvalue {smallest:e}"
        )),
        other => other,
    })?;
    classify(pencil.basis.alpha, values, material)
}

/// `(Z, S, z_star)` with `Z = {(tau - 1/2)/(tau + 1/2)}`, `S = {(tau + 1/2)/(tau - 1/2)}`,
/// `z_star = max S`.
pub fn pole_sets(taus: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Option<f64>)> {
    let mut k_poles = Vec::with_capacity(taus.len());
    let mut z_poles = Vec::with_capacity(taus.len());
    for &t in taus {
        if t == -0.5 || t == 0.5 {
            return Err(Error::SingularPole(t));
        }
        k_poles.push((t - 0.5) / (t + 0.5));
        z_poles.push(z_pole(t));
    }
    let z_star = z_poles.iter().copied().reduce(f64::max);
    Ok((k_poles, z_poles, z_star))
}

/// `(tau + 1/2) / (tau - 1/2)`.
pub fn z_pole(tau: f64) -> f64 {
    (tau + 0.5) / (tau - 0.5)
}

/// z-images of the accumulation targets `k0, 0, -k0`:
/// `-(mu + lambda)/(3 mu + lambda)`, `-1`, `-(3 mu + lambda)/(mu + lambda)`.
pub fn accumulation_z_values(material: &Material) -> [f64; 3] {
    let k0 = material.k0();
    [z_pole(k0), z_pole(0.0), z_pole(-k0)]
}

/// `(tau_minus, z_plus_theta)` with `tau_minus = min(1/2, theta/2) - 1/2`.
pub fn tau_lower_bound(theta: f64) -> Result<(f64, f64)> {
    if !(theta > 0.0) {
        return Err(Error::InvalidInput(format!("theta must be positive, got {theta}")));
    }
    let tau_minus = (0.5f64).min(theta / 2.0) - 0.5;
    Ok((tau_minus, z_pole(tau_minus)))
}

/// The three roots of `zeta^3 - k0^2 zeta = r` by Cardano radicals, each polished by Newton.
///
/// `gamma^+- = [ (-27 r +- sqrt(729 r^2 - 108 k0^6)) / 2 ]^(1/3)` with `gamma^+ gamma^- = 3 k0^2`;
/// `zeta_1 = -(gamma^+ + gamma^-)/3`, `zeta_2 = (1 - i sqrt3)/6 gamma^+ + (1 + i sqrt3)/6 gamma^-`,
/// `zeta_3 = (1 + i sqrt3)/6 gamma^+ + (1 - i sqrt3)/6 gamma^-`.
pub fn np_cubic_roots(r: f64, k0: f64) -> [c64; 3] {
    let k2 = k0 * k0;
    let disc = c64::new(729.0 * r * r - 108.0 * k2 * k2 * k2, 0.0).sqrt();
    let tp = (c64::new(-27.0 * r, 0.0) + disc) * 0.5;
    let tm = (c64::new(-27.0 * r, 0.0) - disc) * 0.5;
    // Use the larger radicand to avoid cancellation; the other follows from the product.
    let t = if tp.norm() >= tm.norm() { tp } else { tm };
    let (gp, gm) = if t.norm() == 0.0 {
        (c64::new(0.0, 0.0), c64::new(0.0, 0.0))
    } else {
        let g = t.cbrt();
        (g, c64::new(3.0 * k2, 0.0) / g)
    };
    let s3 = 3f64.sqrt();
    let a = c64::new(1.0, -s3) / 6.0;
    let b = c64::new(1.0, s3) / 6.0;
    let mut roots = [-(gp + gm) / 3.0, a * gp + b * gm, b * gp + a * gm];
    for z in roots.iter_mut() {
        for _ in 0..3 {
            let f = *z * *z * *z - *z * k2 - r;
            let df = *z * *z * 3.0 - k2;
            if df.norm() < 1e-300 || f.norm() == 0.0 {
                break;
            }
            let next = *z - f / df;
            let fn_ = next * next * next - next * k2 - r;
            if fn_.norm() < f.norm() {
                *z = next;
            } else {
                break;
            }
        }
    }
    roots
}

/// `|zeta^3 - k0^2 zeta - r|`.
pub fn cubic_residual(z: c64, r: f64, k0: f64) -> f64 {
    (z * z * z - z * (k0 * k0) - r).norm()
}
