use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::cli::config::{FieldData, RunConfig};
use crate::cli::studies::{convergence_study, singular_value_study, spectrum_study, ConvergenceRow};
use crate::error::{Error, Result};
use crate::expansion::recommend_parameters;
use crate::fieldeval::{
    cubic_stokes_pressure, cubic_stokes_velocity, error_field, evaluate_field, make_reference, ErrorSummary, FieldGrid,
};
use crate::geometry::{build_uniform_mesh, ParametricCurve};
use crate::kernels::{KernelSpec, Point};
use crate::solver::{corner_solve, solve_dirichlet, CornerHandling, CornerOptions, Formulation, MeshMode, SolveReport};

/// Result of a subcommand: files written and the `--check` verdict.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<String>,
    /// Human-readable lines for stdout.
    pub summary: Vec<String>,
    /// Why the run misses its check threshold, if it does.
    pub check: Option<String>,
}

/// Fixed-width float text, 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write(&self, dir: &Path, name: &str, out: &mut Outcome) -> Result<()> {
        let path = dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush()?;
        out.files.push(path.display().to_string());
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        k => Error::Io(std::io::Error::other(format!("{k:?}"))),
    }
}

fn curve_of(cfg: &RunConfig) -> Result<ParametricCurve> {
    ParametricCurve::new(cfg.curve.clone())
}

fn summary_row(t: &mut Table, quantity: &str, s: Option<ErrorSummary>) {
    let (count, max, median, p99) = match s {
        Some(s) => (s.count.to_string(), fmt_f64(s.max), fmt_f64(s.median), fmt_f64(s.p99)),
        None => ("0".into(), String::new(), String::new(), String::new()),
    };
    t.push(vec![quantity.into(), count, max, median, p99]);
}

fn write_field(field: &FieldGrid, dir: &Path, name: &str, out: &mut Outcome) -> Result<()> {
    let cdim = field.cdim;
    let mut header = vec!["x", "y", "inside", "near"];
    let (vals, refs): (&[&str], &[&str]) =
        if cdim == 2 { (&["u1", "u2"], &["ref_u1", "ref_u2"]) } else { (&["u"], &["ref_u"]) };
    header.extend_from_slice(vals);
    header.extend_from_slice(refs);
    header.extend_from_slice(&["log10_error", "pressure", "ref_pressure", "log10_pressure_error"]);
    let mut t = Table::new(&header);
    for c in &field.cells {
        let mut row = vec![fmt_f64(c.point[0]), fmt_f64(c.point[1]), (c.inside as u8).to_string(), (c.near as u8).to_string()];
        for k in 0..cdim {
            row.push(c.value.get(k).map(|v| fmt_f64(*v)).unwrap_or_default());
        }
        for k in 0..cdim {
            row.push(c.reference.get(k).map(|v| fmt_f64(*v)).unwrap_or_default());
        }
        row.push(fmt_opt(c.log10_error));
        row.push(fmt_opt(c.pressure));
        row.push(fmt_opt(c.reference_pressure));
        row.push(fmt_opt(c.log10_pressure_error));
        t.push(row);
    }
    t.write(dir, name, out)
}

/// Error field of a solved density against a closed form.
fn field_errors(
    mesh: &crate::geometry::PanelMesh,
    form: &Formulation,
    density: &[f64],
    cfg: &RunConfig,
    exact: &(dyn Fn(Point) -> Vec<f64> + Sync),
    pressure: Option<&(dyn Fn(Point) -> f64 + Sync)>,
    near_qbkix: bool,
) -> Result<FieldGrid> {
    let q = form.qbkix_config();
    let field = evaluate_field(mesh, &form.spec, form.layer(), density, &cfg.grid, near_qbkix.then_some(&q))?;
    let reference = FieldGrid::new(mesh.curve(), &cfg.grid, form.spec.cdim())?.sample(exact, pressure);
    error_field(&field, &reference)
}

pub fn cmd_convergence(cfg: &RunConfig, dir: &Path) -> Result<Outcome> {
    let curve = curve_of(cfg)?;
    let cases: Vec<(KernelSpec, Vec<usize>)> = if cfg.convergence.cases.is_empty() {
        vec![(cfg.kernel, cfg.convergence.panels.clone())]
    } else {
        cfg.convergence.cases.iter().map(|c| (c.kernel, c.panels.clone())).collect()
    };
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for (spec, panels) in &cases {
        spec.validate()?;
        rows.extend(convergence_study(
            &curve,
            spec,
            panels,
            &cfg.convergence.modes,
            &cfg.qbkix,
            &cfg.gmres,
            &cfg.sources,
            cfg.convergence.test_points,
        )?);
    }
    let mut out = Outcome::default();
    let mut t = Table::new(&["kernel", "mode", "panels", "max_error", "iterations", "status"]);
    for r in &rows {
        t.push(vec![
            r.kernel.clone(),
            r.mode.clone(),
            r.panels.to_string(),
            fmt_opt(r.max_error),
            r.iterations.map(|i| i.to_string()).unwrap_or_default(),
            r.status.clone(),
        ]);
        out.summary.push(format!(
            "{:<10} {:<18} M={:<4} error={:<10} iterations={:<4} {}",
            r.kernel,
            r.mode,
            r.panels,
            r.max_error.map(|e| format!("{e:.2e}")).unwrap_or("-".into()),
            r.iterations.map(|i| i.to_string()).unwrap_or("-".into()),
            r.status
        ));
    }
    t.write(dir, "convergence.csv", &mut out)?;
    // the largest panel count of every (kernel, mode) must meet the threshold
    let mut last: BTreeMap<(String, String), &ConvergenceRow> = BTreeMap::new();
    for r in &rows {
        let e = last.entry((r.kernel.clone(), r.mode.clone())).or_insert(r);
        if r.panels >= e.panels {
            *e = r;
        }
    }
    for ((k, m), r) in last {
        match r.max_error {
            Some(e) if e <= cfg.check.max_error => {}
            _ => {
                out.check = Some(format!("{k} {m} at M={}: error {:?} above {:e}", r.panels, r.max_error, cfg.check.max_error));
                break;
            }
        }
    }
    Ok(out)
}

pub fn cmd_spectrum(cfg: &RunConfig, dir: &Path) -> Result<Outcome> {
    let curve = curve_of(cfg)?;
    let (panels, q) = match &cfg.mesh {
        MeshMode::Uniform { panels, q } => (*panels, *q),
        MeshMode::Adaptive(_) => return Err(Error::Config("spectrum runs on a uniform mesh".into())),
    };
    let mesh = build_uniform_mesh(&curve, panels, q)?;
    let study = spectrum_study(&mesh, &cfg.kernel, &cfg.qbkix, &cfg.sources, &cfg.spectrum)?;
    let mut out = Outcome::default();
    let mut ev = Table::new(&["mode", "index", "re", "im"]);
    let mut hist = Table::new(&["mode", "rhs", "iteration", "residual"]);
    let mut sum = Table::new(&[
        "mode",
        "min_abs_eigenvalue",
        "eigenvalues_below_0.1",
        "smooth_iterations",
        "smooth_converged",
        "smooth_iterations_to_1e-10",
        "random_iterations",
        "random_converged",
    ]);
    for s in &study {
        let name = s.mode.name();
        for (i, z) in s.eigenvalues.iter().enumerate() {
            ev.push(vec![name.into(), i.to_string(), fmt_f64(z[0]), fmt_f64(z[1])]);
        }
        for (label, rep) in [("smooth", &s.smooth), ("random", &s.random)] {
            for (i, r) in rep.residuals.iter().enumerate() {
                hist.push(vec![name.into(), label.into(), (i + 1).to_string(), fmt_f64(*r)]);
            }
        }
        let to10 = s.smooth.iterations_to(1e-10);
        sum.push(vec![
            name.into(),
            fmt_f64(s.min_abs_eigenvalue()),
            s.count_below(0.1).to_string(),
            s.smooth.iterations.to_string(),
            s.smooth.converged.to_string(),
            to10.map(|i| i.to_string()).unwrap_or_default(),
            s.random.iterations.to_string(),
            s.random.converged.to_string(),
        ]);
        out.summary.push(format!(
            "{name:<18} min|lambda|={:.2e} below0.1={:<4} smooth: {} it (to 1e-10: {}) random: {} it",
            s.min_abs_eigenvalue(),
            s.count_below(0.1),
            s.smooth.iterations,
            to10.map(|i| i.to_string()).unwrap_or("-".into()),
            s.random.iterations
        ));
    }
    ev.write(dir, "eigenvalues.csv", &mut out)?;
    hist.write(dir, "residuals.csv", &mut out)?;
    sum.write(dir, "spectrum_summary.csv", &mut out)?;
    let find = |m: &str| study.iter().find(|s| s.mode.name() == m).and_then(|s| s.smooth.iterations_to(1e-10));
    if let (Some(d), Some(t)) = (find("direct"), find("two-sided")) {
        if t > d + cfg.check.iteration_slack {
            out.check = Some(format!("two-sided needs {t} iterations to 1e-10, direct {d}"));
        }
    }
    Ok(out)
}

pub fn cmd_singvals(cfg: &RunConfig, dir: &Path) -> Result<Outcome> {
    let s = &cfg.singvals;
    let mut out = Outcome::default();
    let mut t = Table::new(&["kernel", "r_ratio", "n", "sigma_ratio", "model"]);
    for spec in &s.kernels {
        spec.validate()?;
        for &r in &s.r_ratios {
            let rows = singular_value_study(spec, s.n_p, s.n_c, r)?;
            let mut worst: f64 = 0.0;
            for row in &rows {
                t.push(vec![row.kernel.clone(), fmt_f64(r), row.n.to_string(), fmt_f64(row.ratio), fmt_f64(row.model)]);
                if row.model > 1e-13 {
                    worst = worst.max((row.ratio.log10() - row.model.log10()).abs());
                }
            }
            out.summary.push(format!("{:<10} R/r_c={r:<5} worst deviation from model: {worst:.2} decades", spec.name()));
            if worst > cfg.check.singvals_decades && out.check.is_none() {
                out.check = Some(format!("{} at R/r_c={r}: {worst:.2} decades from the model", spec.name()));
            }
        }
    }
    t.write(dir, "singular_values.csv", &mut out)?;
    Ok(out)
}

fn solution_data(cfg: &RunConfig, curve: &ParametricCurve) -> Result<FieldFunctions> {
    match cfg.field.data {
        FieldData::Sources => {
            let r = make_reference(&cfg.kernel, curve, &cfg.sources)?;
            let p = r.clone();
            let stokes = cfg.kernel == KernelSpec::Stokes;
            Ok(FieldFunctions {
                value: Box::new(move |x| r.value(x)),
                pressure: stokes.then(|| Box::new(move |x| p.pressure(x).unwrap_or(0.0)) as Box<dyn Fn(Point) -> f64 + Sync>),
            })
        }
        FieldData::CubicStokes => {
            if cfg.kernel != KernelSpec::Stokes {
                return Err(Error::Config("field.data = \"cubic-stokes\" needs kernel.family = \"stokes\"".into()));
            }
            Ok(FieldFunctions { value: Box::new(cubic_stokes_velocity), pressure: Some(Box::new(cubic_stokes_pressure)) })
        }
    }
}

struct FieldFunctions {
    value: Box<dyn Fn(Point) -> Vec<f64> + Sync>,
    pressure: Option<Box<dyn Fn(Point) -> f64 + Sync>>,
}

fn report_row(t: &mut Table, label: &str, r: &SolveReport) {
    t.push(vec![
        label.into(),
        r.iterations.to_string(),
        r.converged.to_string(),
        fmt_opt(r.final_residual()),
        fmt_opt(r.ritz_values.iter().map(|z| z[0].hypot(z[1])).reduce(f64::min)),
        fmt_opt(r.ritz_values.iter().map(|z| z[0].hypot(z[1])).reduce(f64::max)),
        fmt_opt(r.ritz_spread()),
    ]);
}

const REPORT_HEADER: [&str; 7] = ["run", "iterations", "converged", "final_residual", "ritz_min_abs", "ritz_max_abs", "ritz_spread"];

pub fn cmd_field(cfg: &RunConfig, dir: &Path) -> Result<Outcome> {
    let curve = curve_of(cfg)?;
    let data = solution_data(cfg, &curve)?;
    let form = Formulation::new(cfg.kernel, cfg.field.mode).with_qbkix(cfg.qbkix.clone());
    let sol = solve_dirichlet(&curve, &form, &*data.value, &cfg.mesh, &cfg.gmres)?;
    let errs = field_errors(&sol.mesh, &form, sol.density(), cfg, &*data.value, data.pressure.as_deref(), cfg.field.near_qbkix)?;
    let mut out = Outcome::default();
    write_field(&errs, dir, "field.csv", &mut out)?;
    let mut s = Table::new(&["quantity", "count", "max_log10_error", "median_log10_error", "p99_log10_error"]);
    summary_row(&mut s, "solution", errs.summary());
    if data.pressure.is_some() {
        summary_row(&mut s, "pressure", errs.pressure_summary());
    }
    s.write(dir, "summary.csv", &mut out)?;
    let mut r = Table::new(&REPORT_HEADER);
    report_row(&mut r, "solve", &sol.report);
    r.write(dir, "report.csv", &mut out)?;
    out.summary.push(format!("panels={} nodes={} iterations={}", sol.mesh.num_panels(), sol.mesh.num_nodes(), sol.report.iterations));
    if let Some(s) = errs.summary() {
        out.summary.push(format!("log10 error: max {:.2} median {:.2} p99 {:.2} over {} cells", s.max, s.median, s.p99, s.count));
        if s.max > cfg.check.max_error.log10() {
            out.check = Some(format!("max log10 error {:.2} above {:.2}", s.max, cfg.check.max_error.log10()));
        }
    }
    Ok(out)
}

pub fn cmd_corner(cfg: &RunConfig, dir: &Path) -> Result<Outcome> {
    let curve = curve_of(cfg)?;
    if cfg.kernel != KernelSpec::Laplace {
        return Err(Error::Config("corner runs need kernel.family = \"laplace\"".into()));
    }
    let reference = make_reference(&cfg.kernel, &curve, &cfg.sources)?;
    let f = |x: Point| reference.value(x);
    let c = &cfg.corner;
    let opts = CornerOptions { eps_r: c.eps_r, eps_a: c.eps_a, q: c.q, max_iter: c.max_iter };
    let base = Formulation::new(cfg.kernel, c.mode).with_qbkix(cfg.qbkix.clone());
    let run = |h: CornerHandling| {
        let mut form = base.clone();
        form.corners = h;
        corner_solve(&curve, &form, &f, &opts)
    };
    let sol = run(c.handling)?;
    let mut out = Outcome::default();
    let mut r = Table::new(&REPORT_HEADER);
    let name = |h: CornerHandling| match h {
        CornerHandling::SqrtWeight => "sqrt-weight",
        CornerHandling::None => "none",
    };
    report_row(&mut r, name(c.handling), &sol.report);
    if c.compare {
        let other = if c.handling == CornerHandling::None { CornerHandling::SqrtWeight } else { CornerHandling::None };
        match run(other) {
            Ok(s) => report_row(&mut r, name(other), &s.report),
            Err(Error::MaxIterations { report, .. }) => report_row(&mut r, name(other), &report),
            Err(e) => return Err(e),
        }
    }
    r.write(dir, "report.csv", &mut out)?;

    let mut levels: BTreeMap<u32, usize> = BTreeMap::new();
    for p in sol.mesh.panels() {
        *levels.entry(p.level).or_default() += 1;
    }
    let mut lt = Table::new(&["level", "panels"]);
    for (l, n) in &levels {
        lt.push(vec![l.to_string(), n.to_string()]);
    }
    lt.write(dir, "levels.csv", &mut out)?;

    let mut errs = field_errors(&sol.mesh, &sol.formulation, sol.density(), cfg, &f, None, true)?;
    let corners = curve.corner_points().to_vec();
    for cell in errs.cells.iter_mut() {
        let close = corners.iter().any(|k| (cell.point[0] - k[0]).hypot(cell.point[1] - k[1]) < c.exclusion);
        if close {
            cell.log10_error = None;
        }
    }
    write_field(&errs, dir, "field.csv", &mut out)?;
    let mut s = Table::new(&["quantity", "count", "max_log10_error", "median_log10_error", "p99_log10_error"]);
    summary_row(&mut s, "solution", errs.summary());
    s.write(dir, "summary.csv", &mut out)?;
    out.summary.push(format!(
        "panels={} max level={} iterations={} converged={}",
        sol.mesh.num_panels(),
        levels.keys().last().copied().unwrap_or(0),
        sol.report.iterations,
        sol.report.converged
    ));
    if let Some(s) = errs.summary() {
        out.summary.push(format!("log10 error away from corners: max {:.2} median {:.2}", s.max, s.median));
        if s.max > cfg.check.max_error.log10() {
            out.check = Some(format!("max log10 error {:.2} above {:.2}", s.max, cfg.check.max_error.log10()));
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct ParamsEcho {
    eps: f64,
    q: usize,
    delta_over_l: f64,
    k: usize,
    r_ratio: f64,
    theta: f64,
    beta: usize,
}

pub fn cmd_params(cfg: &RunConfig, dir: &Path) -> Result<Outcome> {
    let r = recommend_parameters(cfg.params.eps, cfg.params.q)?;
    let mut out = Outcome::default();
    let mut t = Table::new(&["eps", "q", "delta_over_l", "k", "r_ratio", "theta", "beta"]);
    t.push(vec![
        fmt_f64(cfg.params.eps),
        cfg.params.q.to_string(),
        fmt_f64(r.delta_over_l),
        r.k.to_string(),
        fmt_f64(r.r_ratio),
        fmt_f64(r.theta),
        r.beta.to_string(),
    ]);
    t.write(dir, "params.csv", &mut out)?;
    let echo = ParamsEcho {
        eps: cfg.params.eps,
        q: cfg.params.q,
        delta_over_l: r.delta_over_l,
        k: r.k,
        r_ratio: r.r_ratio,
        theta: r.theta,
        beta: r.beta,
    };
    let text = toml::to_string(&echo).map_err(|e| Error::Config(e.to_string()))?;
    let qb = toml::to_string(&r.config).map_err(|e| Error::Config(e.to_string()))?;
    out.summary.push(text.trim_end().to_string());
    out.summary.push(format!("\n[qbkix]\n{}", qb.trim_end()));
    Ok(out)
}

/// Writes the effective configuration next to the outputs.
pub fn echo_config(cfg: &RunConfig, dir: &Path, out: &mut Outcome) -> Result<()> {
    let path = dir.join("effective_config.toml");
    fs::write(&path, cfg.to_toml()?)?;
    out.files.push(path.display().to_string());
    Ok(())
}
