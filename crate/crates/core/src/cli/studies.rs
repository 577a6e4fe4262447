//! Experiment drivers. Each returns plain rows; writing them out is the
//! caller's business.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expansion::{
    build_check_to_proxy, effective_rank, evaluate_expansion, solve_equivalent_density, ExpansionGeometry, QbkixConfig,
};
use crate::fieldeval::{evaluate_points, interior_test_points, make_reference, SourceLayout};
use crate::geometry::{build_uniform_mesh, ParametricCurve, PanelMesh};
use crate::kernels::{KernelSpec, Point};
use crate::solver::{
    boundary_values, eigenvalues, gmres, materialize_operator, solve_dirichlet, ApplyMode, Formulation, GmresOptions,
    MeshMode, SolveReport,
};

/// Runs GMRES on a dense matrix and keeps the report whether or not it
/// converged.
fn gmres_report(a: &DMatrix<f64>, rhs: &[f64], opts: &GmresOptions) -> Result<SolveReport> {
    match gmres(&|x| Ok((a * DVector::from_column_slice(x)).as_slice().to_vec()), rhs, opts) {
        Ok(r) => Ok(r),
        Err(Error::MaxIterations { report, .. }) => Ok(*report),
        Err(e) => Err(e),
    }
}

fn max_pointwise_error(vals: &[f64], reference: &[Vec<f64>], cdim: usize) -> f64 {
    reference
        .iter()
        .enumerate()
        .map(|(i, r)| (0..cdim).map(|k| (vals[i * cdim + k] - r[k]).powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub kernel: String,
    pub mode: String,
    pub panels: usize,
    pub max_error: Option<f64>,
    pub iterations: Option<usize>,
    /// `ok`, `max-iter` (best iterate used) or `failed: <reason>`.
    pub status: String,
}

/// Uniform-mesh interior Dirichlet solves with data from exterior sources,
/// error measured at interior test points.
pub fn convergence_study(
    curve: &ParametricCurve,
    spec: &KernelSpec,
    panels: &[usize],
    modes: &[ApplyMode],
    qbkix: &QbkixConfig,
    gm: &GmresOptions,
    layout: &SourceLayout,
    test_points: usize,
) -> Result<Vec<ConvergenceRow>> {
    let reference = make_reference(spec, curve, layout)?;
    let f = |x: Point| reference.value(x);
    let tp = interior_test_points(curve, test_points);
    let exact: Vec<Vec<f64>> = tp.iter().map(|&x| reference.value(x)).collect();
    let mut rows = Vec::new();
    for &m in panels {
        for &mode in modes {
            let form = Formulation::new(*spec, mode).with_qbkix(qbkix.clone());
            let mesh_mode = MeshMode::Uniform { panels: m, q: 16 };
            let mut row = ConvergenceRow {
                kernel: spec.name().to_string(),
                mode: mode.name().to_string(),
                panels: m,
                max_error: None,
                iterations: None,
                status: "ok".into(),
            };
            let solved = match solve_dirichlet(curve, &form, &f, &mesh_mode, gm) {
                Ok(sol) => Ok((sol.mesh, sol.report)),
                Err(Error::MaxIterations { report, .. }) => {
                    row.status = "max-iter".into();
                    build_uniform_mesh(curve, m, 16).map(|mesh| (mesh, *report))
                }
                Err(e) => Err(e),
            };
            match solved.and_then(|(mesh, rep)| {
                let (vals, _) = evaluate_points(&mesh, spec, form.layer(), &rep.density, &tp, Some(&form.qbkix_config()))?;
                Ok((max_pointwise_error(&vals, &exact, spec.cdim()), rep.iterations))
            }) {
                Ok((err, it)) => {
                    row.max_error = Some(err);
                    row.iterations = Some(it);
                }
                Err(e) => row.status = format!("failed: {e}"),
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Spectrum and GMRES histories of one operator discretisation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSpectrum {
    pub mode: ApplyMode,
    pub eigenvalues: Vec<[f64; 2]>,
    pub smooth: SolveReport,
    pub random: SolveReport,
}

impl ModeSpectrum {
    pub fn min_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z[0].hypot(z[1])).fold(f64::INFINITY, f64::min)
    }

    pub fn count_below(&self, bound: f64) -> usize {
        self.eigenvalues.iter().filter(|z| z[0].hypot(z[1]) < bound).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumOptions {
    pub modes: Vec<ApplyMode>,
    /// GMRES tolerance for the smooth-data histories.
    pub smooth_tol: f64,
    /// GMRES tolerance for the random right-hand side.
    pub random_tol: f64,
    pub max_iter: usize,
    /// Seed of the random right-hand side.
    pub seed: u64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { modes: ApplyMode::ALL.to_vec(), smooth_tol: 1e-13, random_tol: 1e-6, max_iter: 200, seed: 0 }
    }
}

/// Dense spectra of the boundary operator and GMRES histories for smooth
/// data from exterior sources and for a random right-hand side.
pub fn spectrum_study(
    mesh: &PanelMesh,
    spec: &KernelSpec,
    qbkix: &QbkixConfig,
    layout: &SourceLayout,
    opts: &SpectrumOptions,
) -> Result<Vec<ModeSpectrum>> {
    let reference = make_reference(spec, mesh.curve(), layout)?;
    let smooth_rhs = boundary_values(mesh, spec, &|x| reference.value(x))?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let random_rhs: Vec<f64> = (0..smooth_rhs.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let smooth_opts = GmresOptions { tol: opts.smooth_tol, max_iter: opts.max_iter };
    let random_opts = GmresOptions { tol: opts.random_tol, max_iter: opts.max_iter };
    let mut out = Vec::new();
    for &mode in &opts.modes {
        let form = Formulation::new(*spec, mode).with_qbkix(qbkix.clone());
        let a = materialize_operator(&form, mesh)?;
        out.push(ModeSpectrum {
            mode,
            eigenvalues: eigenvalues(&a)?,
            smooth: gmres_report(&a, &smooth_rhs, &smooth_opts)?,
            random: gmres_report(&a, &random_rhs, &random_opts)?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularValueRow {
    pub kernel: String,
    pub r_ratio: f64,
    /// 1-based index.
    pub n: usize,
    pub ratio: f64,
    pub model: f64,
}

/// Decay model `(1/n) (r_c/R)^(n/2)`, with exponent `n/4` for vector kernels.
pub fn singular_value_model(spec: &KernelSpec, r_ratio: f64, n: usize) -> f64 {
    let e = if spec.cdim() == 2 { n as f64 / 4.0 } else { n as f64 / 2.0 };
    r_ratio.powf(-e) / n as f64
}

/// Geometry with unit check radius centred at the origin.
pub fn unit_expansion(n_p: usize, n_c: usize, r_ratio: f64, delta: f64) -> ExpansionGeometry {
    ExpansionGeometry {
        center: [0.0, 0.0],
        anchor: [delta, 0.0],
        normal: [1.0, 0.0],
        delta,
        r_c: 1.0,
        big_r: r_ratio,
        n_p,
        n_c,
        panel: 0,
        panel_length: 4.0 * delta,
    }
}

/// Normalised singular values of the check-from-proxy matrix against the
/// decay model.
pub fn singular_value_study(spec: &KernelSpec, n_p: usize, n_c: usize, r_ratio: f64) -> Result<Vec<SingularValueRow>> {
    if n_p == 0 || n_c < n_p || !(r_ratio > 1.0) {
        return Err(Error::Config(format!("singvals needs 0 < n_p <= n_c and R/r_c > 1 (n_p={n_p}, n_c={n_c}, R/r_c={r_ratio})")));
    }
    let g = unit_expansion(n_p, n_c, r_ratio, 3.0);
    let f = build_check_to_proxy(&g, spec, 1e-14)?;
    let s1 = f.singular_values[0];
    Ok(f
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, s)| SingularValueRow {
            kernel: spec.name().to_string(),
            r_ratio,
            n: i + 1,
            ratio: s / s1,
            model: singular_value_model(spec, r_ratio, i + 1),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub n_p: usize,
    pub max_error: f64,
}

/// Laplace expansion error for a point source at distance `rho` from the
/// centre, measured on the circle of radius `delta`. Uses `R/r_c = r_ratio`,
/// unit check radius and `n_c = 2 n_p`.
pub fn expansion_rate_study(n_ps: &[usize], r_ratio: f64, delta: f64, rho: f64, eps_pinv: f64) -> Result<Vec<RateRow>> {
    let spec = KernelSpec::laplace();
    let src = [rho, 0.0];
    let field = |x: Point| -((x[0] - src[0]).hypot(x[1] - src[1])).ln() / TAU;
    let probes: Vec<Point> = (0..256)
        .map(|k| {
            let th = TAU * (k as f64 + 0.5) / 256.0;
            [delta * th.cos(), delta * th.sin()]
        })
        .collect();
    n_ps.iter()
        .map(|&n_p| {
            let g = unit_expansion(n_p, 2 * n_p, r_ratio, delta);
            let f = build_check_to_proxy(&g, &spec, eps_pinv)?;
            let u: Vec<f64> = g.check_points().iter().map(|&z| field(z)).collect();
            let alpha = solve_equivalent_density(&f, &u)?;
            let v = evaluate_expansion(&g, &f, &alpha, &probes)?;
            let err = probes.iter().zip(&v).map(|(&x, v)| (v - field(x)).abs()).fold(0.0, f64::max);
            Ok(RateRow { n_p, max_error: err })
        })
        .collect()
}

/// Least-squares slope of `ln(error)` against `n_p`.
pub fn log_slope(rows: &[RateRow]) -> Option<f64> {
    if rows.len() < 2 {
        return None;
    }
    let n = rows.len() as f64;
    let xm = rows.iter().map(|r| r.n_p as f64).sum::<f64>() / n;
    let ym = rows.iter().map(|r| r.max_error.ln()).sum::<f64>() / n;
    let sxy: f64 = rows.iter().map(|r| (r.n_p as f64 - xm) * (r.max_error.ln() - ym)).sum();
    let sxx: f64 = rows.iter().map(|r| (r.n_p as f64 - xm).powi(2)).sum();
    Some(sxy / sxx)
}

/// The effective rank `k_m` rounded to the nearest integer.
pub fn rank_ceiling(eps_pinv: f64, r_ratio: f64) -> usize {
    effective_rank(eps_pinv, r_ratio).round() as usize
}
