//! Gauss-Legendre rules and a tensor-product rule on a ball.

use std::f64::consts::PI;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Points and weights integrating over the ball of radius `a` about `center`: Gauss in r and
/// cos(theta), uniform in phi.
pub fn ball_rule(center: [f64; 3], a: f64, nr: usize, nt: usize, nphi: usize) -> (Vec<[f64; 3]>, Vec<f64>) {
    let (r, wr) = gauss_legendre(nr);
    let (t, wt) = gauss_legendre(nt);
    let mut pts = Vec::with_capacity(nr * nt * nphi);
    let mut wts = Vec::with_capacity(nr * nt * nphi);
    for (ri, wri) in r.iter().zip(&wr) {
        let rr = 0.5 * a * (ri + 1.0);
        let wrr = 0.5 * a * wri * rr * rr;
        for (ti, wti) in t.iter().zip(&wt) {
            let st = (1.0 - ti * ti).sqrt();
            for k in 0..nphi {
                let ph = 2.0 * PI * k as f64 / nphi as f64;
                pts.push([
                    center[0] + rr * st * ph.cos(),
                    center[1] + rr * st * ph.sin(),
                    center[2] + rr * ti,
                ]);
                wts.push(wrr * wti * 2.0 * PI / nphi as f64);
            }
        }
    }
    (pts, wts)
}
