use std::f64::consts::PI;

use faer::{c64, Mat};
use phononic::assembly::assemble;
use phononic::crystal::{sample_path, BZPath, CrystalSpec, InclusionGeometry, Material, QuasiMomentum};
use phononic::dispersion::{eigenvalues_over_k, lipschitz_probe, solve_pencil, sweep};
use phononic::eigen::{b_orthonormality_error, deflate_gamma, eigenvalues_ghep, solve_deflated, solve_ghep};
use phononic::enrichment::EnrichmentKind;
use phononic::fourier::IndicatorCoefficients;
use phononic::model::{Discretization, Model};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> Mat<c64> {
    let g = Mat::<c64>::from_fn(n, n, |_, _| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    Mat::from_fn(n, n, |i, j| (g[(i, j)] + g[(j, i)].conj()) * 0.5)
}

#[test]
fn random_pair_residuals_and_orthonormality() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 50;
    let a = random_hermitian(&mut rng, n);
    let g = Mat::<c64>::from_fn(n, n, |_, _| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let mut b = g.adjoint() * &g;
    for i in 0..n {
        b[(i, i)] += c64::new(1.0, 0.0);
    }
    let sol = solve_ghep(&a, &b, n).unwrap();
    assert!(sol.residual_norms.iter().all(|&r| r < 1e-9), "{:?}", sol.residual_norms);
    assert!(sol.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    assert!(b_orthonormality_error(&b, &sol.eigenvectors) < 1e-10);
}

fn homogeneous_pencil(alpha: QuasiMomentum) -> phononic::assembly::PlaneWavePencil {
    let basis = phononic::assembly::PlaneWaveBasis::new(2, alpha);
    assemble(&basis, &IndicatorCoefficients::zero(2), &Material::unit()).unwrap()
}

#[test]
fn gamma_projector_properties() {
    let p = homogeneous_pencil(QuasiMomentum::gamma());
    let b = p.mass(1.0, 1.0);
    let d = deflate_gamma(&b, &p.basis).unwrap();
    let proj = d.projector(&b);
    let n = p.dim();
    let mut e1 = Mat::<c64>::zeros(n, 1);
    e1[(3 * p.basis.zero_mode(), 0)] = c64::new(1.0, 0.0);
    let pe = &proj * &e1;
    assert!((0..n).all(|i| pe[(i, 0)].norm() < 1e-14));
    let p2 = &proj * &proj;
    let mut err: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            err = err.max((p2[(i, j)] - proj[(i, j)]).norm());
        }
    }
    assert!(err < 1e-12);
    let sol = solve_deflated(&p.stiffness(1.0), &b, &d, 3, false).unwrap();
    // Lowest nonzero homogeneous value at Gamma is mu |2 pi|^2.
    assert!(sol.eigenvalues[0] > 0.0);
    assert!((sol.eigenvalues[0] - 4.0 * PI * PI).abs() < 1e-9 * 4.0 * PI * PI);
}

#[test]
fn eigenvalues_invariant_under_mode_reordering() {
    let spec = CrystalSpec::new(Material::unit(), InclusionGeometry::centered_sphere(0.2));
    let model = Model::new(spec, Discretization::plane_waves(1)).unwrap();
    let p = model.pencil(QuasiMomentum::new([0.9, 0.3, 0.0])).unwrap();
    let a = p.stiffness(20.0);
    let b = p.mass(1.0, 1.0);
    let n = p.dim();
    let modes = n / 3;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut perm: Vec<usize> = (0..modes).collect();
    for i in (1..modes).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let idx = |r: usize| 3 * perm[r / 3] + r % 3;
    let ap = Mat::from_fn(n, n, |i, j| a[(idx(i), idx(j))]);
    let bp = Mat::from_fn(n, n, |i, j| b[(idx(i), idx(j))]);
    let e0 = eigenvalues_ghep(&a, &b, 20).unwrap();
    let e1 = eigenvalues_ghep(&ap, &bp, 20).unwrap();
    for (x, y) in e0.iter().zip(&e1) {
        assert!((x - y).abs() < 1e-9 * x.abs().max(1.0));
    }
}

fn sphere_model(n: usize) -> Model {
    let spec = CrystalSpec::new(Material::unit(), InclusionGeometry::centered_sphere(0.2));
    let kind = EnrichmentKind::default_for(&spec.geometry);
    Model::new(spec, Discretization::new(n, kind)).unwrap()
}

#[test]
fn first_branch_increases_with_contrast() {
    let model = sphere_model(2);
    let v = eigenvalues_over_k(&model, QuasiMomentum::new([PI, 0.0, 0.0]), &[500.0, 1000.0], 1).unwrap();
    assert!(v[0][0] <= v[1][0]);
}

#[test]
fn lipschitz_ratios_stay_bounded() {
    let model = sphere_model(1);
    let dir = [1.0, 0.5, 0.2];
    let probe = |s: f64| {
        let a = QuasiMomentum::new([dir[0] * s, dir[1] * s, dir[2] * s]);
        lipschitz_probe(&model, 50.0, 1, &[a]).unwrap()
    };
    let r: Vec<f64> = [1.0, 0.5, 0.25].iter().map(|&s| probe(s)).collect();
    assert!(r.iter().all(|x| x.is_finite()));
    assert!(r[2] <= 2.0 * r[0] + 1.0, "{r:?}");
    // Sorted branches cross as k grows, so the ratio is not monotone; it never outgrows the
    // linear envelope anchored at k = 1.
    let point = [QuasiMomentum::new(dir)];
    let c1 = lipschitz_probe(&model, 1.0, 1, &point).unwrap();
    let mut k = 2.0;
    while k <= 1024.0 {
        let c = lipschitz_probe(&model, k, 1, &point).unwrap();
        assert!(c <= c1 * k, "k={k}: {c} vs {c1}");
        k *= 2.0;
    }
}

#[test]
fn branches_are_continuous_along_a_path() {
    let model = sphere_model(1);
    let path = BZPath {
        vertices: vec![QuasiMomentum::new([0.3, 0.0, 0.0]), QuasiMomentum::new([PI, 0.0, 0.0])],
        samples_per_segment: 12,
    };
    let pts = sample_path(&path);
    let table = sweep(&model, &pts, &[10.0], 6).unwrap();
    let step = (PI - 0.3) / 11.0;
    for j in 1..=6 {
        let vals: Vec<f64> = table.records.iter().filter(|r| r.j == j).map(|r| r.xi).collect();
        for w in vals.windows(2) {
            // Sorted branches are Lipschitz in alpha with a constant set by the largest |eta|.
            assert!((w[1] - w[0]).abs() <= 10.0 * 3.0 * (4.0 * PI) * step, "branch {j}: {w:?}");
        }
    }
    let at_gamma = solve_pencil(&model.pencil(QuasiMomentum::gamma()).unwrap(), &model.spec.material, 10.0, 1, false)
        .unwrap();
    assert!(at_gamma.eigenvalues[0] > 0.0);
}
