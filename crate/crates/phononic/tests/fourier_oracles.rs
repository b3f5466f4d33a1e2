use std::f64::consts::PI;

use faer::c64;
use phononic::crystal::VoxelGrid;
use phononic::fourier::{sphere_coefficients, voxel_coefficients};

/// Midpoint rule on an `n^3` grid over the unit cell: `sum_x chi(x) e^{-i 2 pi m.x} h^3`.
fn cartesian_oracle(center: [f64; 3], a: f64, n: usize, m: [i64; 3]) -> c64 {
    let h = 1.0 / n as f64;
    let mut acc = c64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let x = [(i as f64 + 0.5) * h, (j as f64 + 0.5) * h, (k as f64 + 0.5) * h];
                let r2: f64 = (0..3).map(|d| (x[d] - center[d]).powi(2)).sum();
                if r2 <= a * a {
                    let ph = -2.0 * PI * (0..3).map(|d| m[d] as f64 * x[d]).sum::<f64>();
                    acc += c64::new(ph.cos(), ph.sin());
                }
            }
        }
    }
    acc * h.powi(3)
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Tensor quadrature in spherical coordinates: Gauss-Legendre in `r` and `cos t`,
/// trapezoid in the periodic `phi`; `n` nodes per direction.
fn spherical_oracle(center: [f64; 3], a: f64, n: usize, m: [i64; 3]) -> c64 {
    let gl = gauss_legendre(n);
    let hp = 2.0 * PI / n as f64;
    let mut acc = c64::new(0.0, 0.0);
    for &(xr, wr) in &gl {
        let r = 0.5 * a * (xr + 1.0);
        for &(c, wc) in &gl {
            let s = (1.0 - c * c).sqrt();
            for l in 0..n {
                let p = l as f64 * hp;
                let x = [center[0] + r * s * p.cos(), center[1] + r * s * p.sin(), center[2] + r * c];
                let ph = -2.0 * PI * (0..3).map(|d| m[d] as f64 * x[d]).sum::<f64>();
                acc += c64::new(ph.cos(), ph.sin()) * (r * r * wr * wc);
            }
        }
    }
    acc * (0.5 * a * hp)
}

#[test]
fn sphere_first_harmonic_against_cartesian_quadrature() {
    let center = [0.5; 3];
    let t = sphere_coefficients(center, 0.2, 4);
    let v = t.get([1, 0, 0]);
    assert!((v.re + 0.0285).abs() < 5e-4 && v.im.abs() < 1e-12, "{v:?}");
    let q = cartesian_oracle(center, 0.2, 64, [1, 0, 0]);
    assert!((q.re + 0.0285).abs() < 5e-4, "{q:?}");
}

#[test]
fn sphere_table_against_spherical_quadrature() {
    let center = [0.43, 0.52, 0.61];
    let t = sphere_coefficients(center, 0.2, 4);
    let scale = t.get([0, 0, 0]).norm();
    let mut worst: f64 = 0.0;
    for a in -4i64..=4 {
        for b in -4i64..=4 {
            for c in -4i64..=4 {
                let m = [a, b, c];
                let q = spherical_oracle(center, 0.2, 64, m);
                let v = t.get(m);
                let rel = (v - q).norm() / q.norm().max(1e-3 * scale);
                worst = worst.max(rel);
            }
        }
    }
    assert!(worst < 1e-3, "worst relative error {worst:e}");
}

#[test]
fn box_voxel_first_harmonic() {
    let mut g = VoxelGrid::empty([4, 4, 4]);
    g.fill_box([1, 1, 1], [3, 3, 3]);
    let t = voxel_coefficients(&g, 2).unwrap();
    assert!((t.get([0, 0, 0]).re - 0.125).abs() < 1e-15);
    let v = t.get([1, 0, 0]);
    assert!((v.re + 0.25 / PI).abs() < 1e-12 && v.im.abs() < 1e-12, "{v:?}");
    assert!((v.re + 0.0795775).abs() < 1e-7);
    // Quadrature cross-check of the per-axis integral.
    let n = 4000;
    let h = 0.5 / n as f64;
    let axis: c64 = (0..n)
        .map(|i| {
            let x = 0.25 + (i as f64 + 0.5) * h;
            c64::new((2.0 * PI * x).cos(), -(2.0 * PI * x).sin()) * h
        })
        .sum();
    assert!((axis.re + 1.0 / PI).abs() < 1e-6 && axis.im.abs() < 1e-9);
}
