//! Batch driver: reads a TOML run configuration and writes CSV tables.

mod config;
mod output;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use phononic::crystal::{alpha_grid, arclengths, sample_path, CrystalSpec, InclusionGeometry, QuasiMomentum};
use phononic::dispersion::solve_pencil;
use phononic::enrichment::EnrichmentKind;
use phononic::fourier::{CoefficientCache, IndicatorCoefficients};
use phononic::limit::{dirichlet_spectrum, limit_band_structure, limit_spectrum, tail_sensitivity};
use phononic::model::{Discretization, Model};
use phononic::series::{convergence_estimate, first_order, series_vs_direct, TauSource};
use phononic::structural::{compute_structural_spectrum, tau_lower_bound};

use config::{alpha_from, ConfigError, Inclusion, Keys, Overrides, RunConfig};
use output::{plot_data, write_text, Csv, Opt};

#[derive(Parser, Debug)]
#[command(name = "phononic", version, about = "Spectra of 3D periodic high-contrast elastic crystals")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: `output.dir` or `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Directory for cached Fourier coefficient tables.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Worker threads for the sweep.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Plane-wave cutoff N (overrides `basis.cutoff`).
    #[arg(long, global = true)]
    cutoff: Option<usize>,
    /// Number of branches (overrides `sweep.branches`).
    #[arg(long, global = true)]
    branches: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dispersion along the path for every contrast in `sweep.contrasts`.
    Bands,
    /// Structural spectrum on the quasi-momentum grid.
    Structural,
    /// Dirichlet spectrum of the inclusion.
    Dirichlet,
    /// High-contrast limit bands, mass roots and gap verdicts.
    Limit,
    /// Convergence radius of the contrast series.
    Radius,
    /// First-order series against direct solves.
    Series,
    /// Band-gap criterion on a spectra file (`delta`, `omega` arrays).
    Gap {
        /// Spectra file; defaults to `gap.spectra` in the config.
        #[arg(long)]
        spectra: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for configuration and validation errors, 3 for numeric failures, 1 otherwise.
fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return 2;
        }
        if let Some(err) = cause.downcast_ref::<phononic::Error>() {
            return match err {
                phononic::Error::InvalidInput(_) => 2,
                phononic::Error::Io(_) | phononic::Error::Cache(_) => 1,
                _ => 3,
            };
        }
    }
    1
}

fn overrides(cli: &Cli) -> Overrides {
    Overrides {
        out: cli.out.clone(),
        cache: cli.cache.clone(),
        cutoff: cli.cutoff,
        branches: cli.branches,
    }
}

fn load_keys(cli: &Cli) -> Result<Keys> {
    match &cli.config {
        Some(p) => Keys::load(p),
        None => Err(ConfigError("--config PATH is required for this subcommand".into()).into()),
    }
}

fn run(cli: Cli) -> Result<()> {
    phononic::sweep::configure(cli.workers).map_err(|e| anyhow!("cannot start worker pool: {e}"))?;
    if let Command::Gap { spectra } = &cli.command {
        let keys = cli.config.as_ref().map(|p| Keys::load(p)).transpose()?;
        let path = match (spectra, &keys) {
            (Some(p), _) => p.clone(),
            (None, Some(k)) => PathBuf::from(k.str("gap.spectra")?),
            (None, None) => return Err(ConfigError("gap needs --spectra PATH or gap.spectra in --config".into()).into()),
        };
        let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        return gap(&path, &out);
    }
    let keys = load_keys(&cli)?;
    let cfg = RunConfig::from_keys(&keys, &overrides(&cli))?;
    let model = build_model(&cfg)?;
    match cli.command {
        Command::Bands => bands(&cfg, &model),
        Command::Structural => structural(&cfg, &model),
        Command::Dirichlet => dirichlet(&cfg, &model, &keys),
        Command::Limit => limit(&cfg, &model, &keys),
        Command::Radius => radius(&cfg, &model, &keys),
        Command::Series => series(&cfg, &model, &keys),
        Command::Gap { .. } => unreachable!(),
    }
}

fn build_model(cfg: &RunConfig) -> Result<Model> {
    let model = match &cfg.inclusion {
        Inclusion::Empty => {
            // Placeholder geometry of zero volume; the indicator vanishes identically.
            let spec = CrystalSpec::new(cfg.material, InclusionGeometry::centered_sphere(0.0));
            Model::with_coefficients(spec, Discretization::plane_waves(cfg.cutoff), IndicatorCoefficients::zero(cfg.cutoff))
        }
        Inclusion::Present(g) => {
            let spec = CrystalSpec::new(cfg.material, g.clone());
            let disc = Discretization::new(cfg.cutoff, EnrichmentKind::for_geometry(g, cfg.enrichment, cfg.degree));
            match &cfg.cache {
                Some(dir) => Model::cached(spec, disc, &CoefficientCache::new(dir)),
                None => Model::new(spec, disc),
            }
        }
    };
    model.context("cannot build the discretized crystal")
}

fn csv(cfg: &RunConfig, header: &[&str]) -> Csv {
    Csv::new(&cfg.geometry_hash(), Some(cfg.cutoff), header)
}

fn done(path: PathBuf) {
    println!("wrote {}", path.display());
}

fn bands(cfg: &RunConfig, model: &Model) -> Result<()> {
    let alphas = sample_path(&cfg.path);
    let s = arclengths(&alphas);
    let m = model.spec.material;
    // Per point, per contrast: (global branch, xi, residual).
    let solved = phononic::sweep::try_map(&alphas, |&alpha| -> phononic::Result<Vec<Vec<(usize, f64, f64)>>> {
        let pencil = model.pencil(alpha)?;
        cfg.contrasts
            .iter()
            .map(|&k| {
                let sol = solve_pencil(&pencil, &m, k, cfg.branches, true)?;
                let offset = if alpha.is_gamma() { 3 } else { 0 };
                let mut rows: Vec<(usize, f64, f64)> = (1..=offset).map(|j| (j, 0.0, 0.0)).collect();
                for (i, &xi) in sol.eigenvalues.iter().enumerate() {
                    rows.push((i + 1 + offset, xi, sol.residual_norms.get(i).copied().unwrap_or(f64::NAN)));
                }
                rows.retain(|r| r.0 <= cfg.branches);
                Ok(rows)
            })
            .collect()
    })
    .context("dispersion sweep failed")?;
    let mut out = csv(cfg, &["k", "point", "s", "alpha_x", "alpha_y", "alpha_z", "j", "xi", "residual"]);
    let mut curves: Vec<Vec<Vec<(f64, f64)>>> = vec![vec![Vec::new(); cfg.branches]; cfg.contrasts.len()];
    for (ki, &k) in cfg.contrasts.iter().enumerate() {
        for (p, alpha) in alphas.iter().enumerate() {
            let a = alpha.alpha;
            for &(j, xi, res) in &solved[p][ki] {
                out.row(&[&k, &p, &s[p], &a[0], &a[1], &a[2], &j, &xi, &res]);
                curves[ki][j - 1].push((s[p], xi));
            }
        }
    }
    done(out.write(&cfg.out, "bands.csv")?);
    for (ki, &k) in cfg.contrasts.iter().enumerate() {
        for (j, pts) in curves[ki].iter().enumerate() {
            write_text(&cfg.out, &format!("bands_k{k}_j{}.dat", j + 1), &plot_data(pts))?;
        }
    }
    println!("wrote {} plot-data files", cfg.contrasts.len() * cfg.branches);
    Ok(())
}

fn structural(cfg: &RunConfig, model: &Model) -> Result<()> {
    let grid = alpha_grid(cfg.grid);
    let m = model.spec.material;
    let spectra = phononic::sweep::try_map(&grid, |&alpha| {
        model.pencil(alpha).and_then(|p| compute_structural_spectrum(&p, &m))
    })
    .context("structural spectrum failed")?;
    let mut out = csv(cfg, &["alpha_x", "alpha_y", "alpha_z", "i", "tau", "z_pole", "k_pole", "z_star"]);
    let mut summary = csv(cfg, &["alpha_x", "alpha_y", "alpha_z", "interior", "w1", "w2", "tau_min", "z_star", "borderline"]);
    for s in &spectra {
        let a = s.alpha.alpha;
        for (i, &t) in s.taus.iter().enumerate() {
            out.row(&[&a[0], &a[1], &a[2], &(i + 1), &t, &s.z_poles[i], &s.k_poles[i], &Opt(s.z_star)]);
        }
        summary.row(&[&a[0], &a[1], &a[2], &s.taus.len(), &s.w1_count, &s.w2_count, &Opt(s.tau_min()), &Opt(s.z_star), &s.borderline.len()]);
    }
    done(out.write(&cfg.out, "structural.csv")?);
    done(summary.write(&cfg.out, "structural_summary.csv")?);
    if spectra.iter().all(|s| s.taus.is_empty()) {
        eprintln!("warning: no interior structural values; the inclusion is empty or unresolved at this cutoff");
    } else {
        let tmin = spectra.iter().filter_map(|s| s.tau_min()).fold(f64::INFINITY, f64::min);
        println!("min tau over the grid: {tmin}");
        if let Inclusion::Present(g) = &cfg.inclusion {
            let (tau_minus, z_plus) = tau_lower_bound(g.theta)?;
            println!("buffer bound: tau- = {tau_minus}, z+ = {z_plus}");
        }
    }
    Ok(())
}

fn dirichlet(cfg: &RunConfig, model: &Model, keys: &Keys) -> Result<()> {
    let count = keys.usize_or("dirichlet.count", 20)?;
    let d = dirichlet_spectrum(model, count).context("Dirichlet spectrum failed")?;
    let mut out = csv(cfg, &["j", "delta", "mean_norm", "zero_mean", "borderline"]);
    for (j, e) in d.entries.iter().enumerate() {
        out.row(&[&(j + 1), &e.delta, &e.mean_norm, &e.zero_mean, &e.borderline]);
    }
    done(out.write(&cfg.out, "dirichlet.csv")?);
    if d.entries.iter().any(|e| e.borderline) {
        eprintln!("warning: some mean classifications are borderline; see the borderline column");
    }
    Ok(())
}

fn limit(cfg: &RunConfig, model: &Model, keys: &Keys) -> Result<()> {
    let count = keys.usize_or("limit.count", 40)?;
    let (head, roots, spectrum) = limit_spectrum(model, count).context("limit spectrum failed")?;
    let mut bands = csv(cfg, &["b", "lo", "hi"]);
    for (b, (lo, hi)) in spectrum.limit_bands.iter().enumerate() {
        bands.row(&[&(b + 1), lo, hi]);
    }
    done(bands.write(&cfg.out, "limit_bands.csv")?);
    let mut r = csv(cfg, &["nu", "multiplicity", "bracket"]);
    for root in &roots.roots {
        r.row(&[&root.nu, &root.multiplicity, &root.bracket]);
    }
    done(r.write(&cfg.out, "limit_roots.csv")?);
    let mut v = csv(cfg, &["j", "delta_j2", "omega_j", "holds"]);
    for g in &spectrum.verdicts {
        v.row(&[&g.j, &g.delta_j2, &g.omega_j, &g.holds]);
    }
    done(v.write(&cfg.out, "limit_verdicts.csv")?);
    for (lo, hi) in &spectrum.gaps {
        println!("limit gap ({lo}, {hi})");
    }
    if !roots.rootless.is_empty() {
        println!("brackets without a mass root: {:?}", roots.rootless);
    }
    let (_, _, shift) = tail_sensitivity(&head, model.spec.mean_density());
    println!("mass-root shift when the top Dirichlet value is dropped: {shift}");
    for w in &roots.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn series_alpha(keys: &Keys) -> Result<QuasiMomentum> {
    alpha_from(keys, "series.alpha", [1.0, 0.0, 0.0])
}

/// Convergence estimate for branch `j` and the first-order data it was built from.
fn estimate(
    cfg: &RunConfig,
    model: &Model,
    keys: &Keys,
    alpha: QuasiMomentum,
    j: usize,
) -> Result<(phononic::series::ConvergenceEstimate, phononic::series::FirstOrder)> {
    let g = cfg.geometry()?;
    let fo = first_order(model, alpha, j).context("limit eigenproblem failed")?;
    let (tau_minus, source) = match keys.str_or("radius.tau_source", "theta")? {
        "theta" => (tau_lower_bound(g.theta)?.0, TauSource::Theta(g.theta)),
        "computed" => {
            let s = compute_structural_spectrum(&model.pencil(alpha)?, &model.spec.material)?;
            let t = s.tau_min().ok_or_else(|| anyhow!("no interior structural values at {:?}", alpha.alpha))?;
            (t, TauSource::Computed)
        }
        other => return Err(ConfigError(format!("key `radius.tau_source`: unknown value `{other}` (theta, computed)")).into()),
    };
    let est = convergence_estimate(alpha, &fo.limits, j, tau_minus, source, &model.spec.material)?;
    Ok((est, fo))
}

fn radius(cfg: &RunConfig, model: &Model, keys: &Keys) -> Result<()> {
    let j = keys.usize_or("series.j", 1)?.max(1);
    let alphas = match keys.vec3_list("radius.alphas")? {
        Some(v) => v.into_iter().map(|a| QuasiMomentum::new([a[0] * PI, a[1] * PI, a[2] * PI])).collect(),
        None => vec![QuasiMomentum::new([PI, 0.0, 0.0]), QuasiMomentum::gamma()],
    };
    let mut out = csv(cfg, &["alpha_x", "alpha_y", "alpha_z", "j", "d", "tau_minus", "tau_source", "z_star", "r_star", "k_threshold"]);
    for alpha in alphas {
        let (e, _) = estimate(cfg, model, keys, alpha, j)?;
        let source = match e.tau_source {
            TauSource::Theta(_) => "theta",
            TauSource::Computed => "computed",
        };
        let a = alpha.alpha;
        let r = e.radius;
        out.row(&[&a[0], &a[1], &a[2], &j, &e.d, &e.tau_minus, &source, &r.z_star, &r.r_star, &r.k_threshold]);
        println!(
            "alpha = {:?}: |z*| = {}, r* = {}, series converges for k > {}",
            a,
            r.z_star.abs(),
            r.r_star,
            r.k_threshold
        );
    }
    done(out.write(&cfg.out, "radius.csv")?);
    Ok(())
}

fn series(cfg: &RunConfig, model: &Model, keys: &Keys) -> Result<()> {
    let alpha = series_alpha(keys)?;
    let j = keys.usize_or("series.j", 1)?.max(1);
    let ks = keys.list_or("series.contrasts", &[10.0, 100.0, 1000.0, 10000.0])?;
    if let Some(k) = ks.iter().find(|&&k| !(k > 0.0)) {
        return Err(ConfigError(format!("series.contrasts: contrast {k} must be positive")).into());
    }
    let (est, fo) = estimate(cfg, model, keys, alpha, j)?;
    let c = fo.coefficients.iter().find(|c| c.j == j).cloned().ok_or_else(|| anyhow!("no coefficients for branch {j}"))?;
    let rows = series_vs_direct(model, &c, &est, &ks).context("direct solves failed")?;

    let mut coeffs = csv(cfg, &["j", "xi0", "beta0", "beta1", "xi_slope", "exterior_energy", "cluster", "r_star"]);
    coeffs.row(&[&c.j, &c.xi0, &c.beta0, &c.beta1, &c.xi_slope, &c.exterior_energy, &c.cluster, &est.radius.r_star]);
    done(coeffs.write(&cfg.out, "series_coefficients.csv")?);
    let mut out = csv(cfg, &["k", "z", "direct_xi", "series_xi", "error", "bound", "in_disk"]);
    for r in &rows {
        out.row(&[&r.k, &r.z, &r.direct_xi, &r.series_xi, &r.error, &Opt(r.bound), &r.in_disk]);
    }
    done(out.write(&cfg.out, "series.csv")?);
    let outside = rows.iter().filter(|r| !r.in_disk).count();
    if outside > 0 {
        eprintln!(
            "warning: {outside} contrast(s) below the threshold k = {} are outside the convergence disk",
            est.radius.k_threshold
        );
    }
    Ok(())
}

fn gap(path: &Path, out_dir: &Path) -> Result<()> {
    let keys = Keys::load(path)?;
    let delta = keys.list_or("delta", &[])?;
    let omega = keys.list_or("omega", &[])?;
    if delta.is_empty() || omega.is_empty() {
        return Err(ConfigError(format!("{}: needs non-empty `delta` and `omega` arrays", path.display())).into());
    }
    let spectrum = limit_band_structure(&delta, &omega, &[])?;
    let mut out = Csv::new("none", None, &["j", "delta_j2", "omega_j", "holds"]);
    for v in &spectrum.verdicts {
        out.row(&[&v.j, &v.delta_j2, &v.omega_j, &v.holds]);
        if v.holds {
            println!("gap ({},{}): criterion delta_{{{}}} < omega_{} holds", v.delta_j2, v.omega_j, v.j + 2, v.j);
        } else {
            println!("no gap at j = {}: criterion delta_{{{}}} < omega_{} fails", v.j, v.j + 2, v.j);
        }
    }
    done(out.write(out_dir, "gap.csv")?);
    Ok(())
}
