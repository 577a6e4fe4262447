use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::Side;
use crate::geometry::{build_adaptive_mesh, build_uniform_mesh, AdaptiveOptions, ParametricCurve, PanelMesh};
use crate::kernels::{KernelSpec, Point};
use crate::solver::formulation::{ApplyMode, BoundaryOperator, CornerHandling, Formulation};
use crate::solver::gmres::{gmres, GmresOptions, SolveReport};

/// Boundary data: values (`cdim` per point) at a boundary point.
pub type BoundaryData<'a> = &'a (dyn Fn(Point) -> Vec<f64> + Sync);

/// Uniform panels or adaptive refinement driven by the boundary data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum MeshMode {
    Uniform {
        panels: usize,
        #[serde(default = "default_q")]
        q: usize,
    },
    Adaptive(AdaptiveOptions),
}

fn default_q() -> usize {
    16
}

impl Default for MeshMode {
    fn default() -> Self {
        MeshMode::Uniform { panels: 30, q: 16 }
    }
}

/// A solved density together with the mesh it lives on.
#[derive(Debug, Clone)]
pub struct Solution {
    pub mesh: PanelMesh,
    pub formulation: Formulation,
    pub report: SolveReport,
}

impl Solution {
    pub fn density(&self) -> &[f64] {
        &self.report.density
    }
}

fn sample<'a>(curve: &'a ParametricCurve, f: BoundaryData<'a>, cdim: usize) -> impl Fn(f64) -> Vec<f64> + 'a {
    move |t| {
        let v = f(curve.position(t));
        debug_assert_eq!(v.len(), cdim);
        v
    }
}

pub fn build_mesh(curve: &ParametricCurve, form: &Formulation, f: BoundaryData, mode: &MeshMode) -> Result<PanelMesh> {
    match mode {
        MeshMode::Uniform { panels, q } => build_uniform_mesh(curve, *panels, *q),
        MeshMode::Adaptive(opts) => {
            let side = form.qbkix_config().side;
            let opts = AdaptiveOptions {
                delta_over_l: form.qbkix.delta_over_l,
                both_sides: side != Side::Interior && form.mode != ApplyMode::DirectNystrom,
                ..opts.clone()
            };
            build_adaptive_mesh(curve, &sample(curve, f, form.spec.cdim()), &opts)
        }
    }
}

/// Boundary data at every node, `cdim` values per node.
pub fn boundary_values(mesh: &PanelMesh, spec: &KernelSpec, f: BoundaryData) -> Result<Vec<f64>> {
    let cdim = spec.cdim();
    let mut out = Vec::with_capacity(mesh.num_nodes() * cdim);
    for n in mesh.nodes() {
        let v = f(n.x);
        if v.len() != cdim {
            return Err(Error::InvalidArgument(format!("boundary data returned {} values, expected {cdim}", v.len())));
        }
        out.extend(v);
    }
    Ok(out)
}

fn config_echo<T: Serialize>(value: &T) -> String {
    toml::to_string(value).unwrap_or_default()
}

#[derive(Serialize)]
struct Echo<'a> {
    formulation: &'a Formulation,
    gmres: &'a GmresOptions,
    nodes: usize,
    panels: usize,
}

fn with_echo(mut report: SolveReport, echo: &Echo) -> SolveReport {
    report.config = config_echo(echo);
    report
}

fn attach(r: Result<SolveReport>, echo: &Echo, post: impl Fn(&mut SolveReport)) -> Result<SolveReport> {
    match r {
        Ok(rep) => {
            let mut rep = with_echo(rep, echo);
            post(&mut rep);
            Ok(rep)
        }
        Err(Error::MaxIterations { iterations, residual, report }) => {
            let mut rep = with_echo(*report, echo);
            post(&mut rep);
            Err(Error::MaxIterations { iterations, residual, report: Box::new(rep) })
        }
        Err(e) => Err(e),
    }
}

/// Solves `(-1/2 I + K) phi = rhs` on a given mesh.
pub fn solve_on_mesh(mesh: &PanelMesh, form: &Formulation, rhs: &[f64], opts: &GmresOptions) -> Result<SolveReport> {
    let op = BoundaryOperator::new(form, mesh)?;
    if rhs.len() != op.dim() {
        return Err(Error::InvalidArgument(format!("rhs has {} entries, operator expects {}", rhs.len(), op.dim())));
    }
    let echo = Echo { formulation: form, gmres: opts, nodes: mesh.num_nodes(), panels: mesh.num_panels() };
    attach(gmres(&|x| op.apply(x), rhs, opts), &echo, |_| {})
}

/// Builds the mesh, samples `f` at the nodes and solves for the density.
pub fn solve_dirichlet(
    curve: &ParametricCurve,
    form: &Formulation,
    f: BoundaryData,
    mesh_mode: &MeshMode,
    opts: &GmresOptions,
) -> Result<Solution> {
    form.validate()?;
    let mesh = build_mesh(curve, form, f, mesh_mode)?;
    let rhs = boundary_values(&mesh, &form.spec, f)?;
    let report = solve_on_mesh(&mesh, form, &rhs, opts)?;
    Ok(Solution { mesh, formulation: form.clone(), report })
}

/// Options of [`corner_solve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CornerOptions {
    /// GMRES relative tolerance; the minimum panel length is a tenth of it.
    pub eps_r: f64,
    pub eps_a: f64,
    pub q: usize,
    pub max_iter: usize,
}

impl Default for CornerOptions {
    fn default() -> Self {
        Self { eps_r: 1e-6, eps_a: 1e-11, q: 16, max_iter: 200 }
    }
}

/// Dirichlet solve on a curve with corners.
///
/// The mesh is refined dyadically towards every corner down to `eps_r / 10`.
/// Unknowns on the last panel at each side of a corner are removed and held
/// at zero. With [`CornerHandling::SqrtWeight`] the system is solved as
/// `W^1/2 A W^-1/2 psi = W^1/2 f` with `phi = W^-1/2 psi`.
pub fn corner_solve(curve: &ParametricCurve, form: &Formulation, f: BoundaryData, opts: &CornerOptions) -> Result<Solution> {
    form.validate()?;
    if form.spec != KernelSpec::Laplace {
        return Err(Error::UnsupportedFamily { family: form.spec.name(), what: "corner solve (Laplace only)" });
    }
    if curve.is_smooth() {
        return Err(Error::InvalidArgument("corner solve needs a curve with corners".into()));
    }
    let gm = GmresOptions { tol: opts.eps_r, max_iter: opts.max_iter };
    gm.validate()?;
    let mode = MeshMode::Adaptive(AdaptiveOptions {
        q: opts.q,
        eps_a: opts.eps_a,
        eps_l: opts.eps_r / 10.0,
        ..Default::default()
    });
    let mesh = build_mesh(curve, form, f, &mode)?;
    let rhs = boundary_values(&mesh, &form.spec, f)?;
    let op = BoundaryOperator::new(form, &mesh)?;
    let a = op.to_matrix()?;

    let mut masked = vec![false; mesh.num_nodes()];
    for (p, _) in mesh.corner_panels() {
        let panel = &mesh.panels()[p];
        masked[panel.first_node..panel.first_node + mesh.q()].fill(true);
    }
    let keep: Vec<usize> = (0..mesh.num_nodes()).filter(|&j| !masked[j]).collect();
    let scale: Vec<f64> = match form.corners {
        CornerHandling::SqrtWeight => keep.iter().map(|&j| mesh.nodes()[j].weight.sqrt()).collect(),
        CornerHandling::None => vec![1.0; keep.len()],
    };
    let reduced = DMatrix::from_fn(keep.len(), keep.len(), |i, j| scale[i] * a[(keep[i], keep[j])] / scale[j]);
    let b: Vec<f64> = keep.iter().zip(&scale).map(|(&j, s)| s * rhs[j]).collect();
    let echo = Echo { formulation: form, gmres: &gm, nodes: mesh.num_nodes(), panels: mesh.num_panels() };
    let n = mesh.num_nodes();
    let expand = |rep: &mut SolveReport| {
        let mut phi = vec![0.0; n];
        for ((&j, s), psi) in keep.iter().zip(&scale).zip(&rep.density) {
            phi[j] = psi / s;
        }
        rep.density = phi;
    };
    let result = gmres(&|x| Ok((&reduced * DVector::from_column_slice(x)).as_slice().to_vec()), &b, &gm);
    let report = attach(result, &echo, expand)?;
    Ok(Solution { mesh, formulation: form.clone(), report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::eval_layer_potential;
    use crate::kernels::Layer;

    fn point_source(y: Point) -> impl Fn(Point) -> Vec<f64> + Sync {
        move |x: Point| vec![-((x[0] - y[0]).hypot(x[1] - y[1])).ln() / (2.0 * std::f64::consts::PI)]
    }

    #[test]
    fn direct_circle_solve() {
        let src = [1.7, 0.4];
        let f = point_source(src);
        let form = Formulation::new(KernelSpec::laplace(), ApplyMode::DirectNystrom);
        let sol = solve_dirichlet(
            &ParametricCurve::circle(1.0),
            &form,
            &f,
            &MeshMode::Uniform { panels: 8, q: 16 },
            &GmresOptions { tol: 1e-13, max_iter: 100 },
        )
        .unwrap();
        assert!(sol.report.converged && sol.report.iterations < 20);
        assert!(sol.report.config.contains("direct-nystrom"));
        let targets = [[0.1, 0.2], [-0.5, 0.3], [0.0, -0.6]];
        let u = eval_layer_potential(&sol.mesh, &form.spec, Layer::Double, sol.density(), &targets).unwrap();
        for (x, v) in targets.iter().zip(&u) {
            assert!((v - f(*x)[0]).abs() < 1e-11);
        }
    }

    #[test]
    fn zero_data_gives_zero_density() {
        let zero = |_: Point| vec![0.0];
        let form = Formulation::new(KernelSpec::laplace(), ApplyMode::DirectNystrom);
        let sol = solve_dirichlet(
            &ParametricCurve::circle(1.0),
            &form,
            &zero,
            &MeshMode::Uniform { panels: 4, q: 16 },
            &GmresOptions::default(),
        )
        .unwrap();
        assert_eq!(sol.report.iterations, 0);
        assert!(sol.density().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn mesh_mode_round_trips() {
        let m = MeshMode::Uniform { panels: 12, q: 16 };
        let s = toml::to_string(&m).unwrap();
        assert_eq!(toml::from_str::<MeshMode>(&s).unwrap(), m);
        let a: MeshMode = toml::from_str("mode = \"adaptive\"\neps_a = 1e-9").unwrap();
        assert!(matches!(a, MeshMode::Adaptive(o) if o.eps_a == 1e-9));
    }

    #[test]
    fn corner_solve_rejects_smooth_and_non_laplace() {
        let zero = |_: Point| vec![0.0];
        let form = Formulation::new(KernelSpec::laplace(), ApplyMode::QbkixTwoSided);
        assert!(corner_solve(&ParametricCurve::circle(1.0), &form, &zero, &CornerOptions::default()).is_err());
        let st = Formulation::new(KernelSpec::stokes(), ApplyMode::QbkixTwoSided);
        let zero2 = |_: Point| vec![0.0, 0.0];
        assert!(corner_solve(&ParametricCurve::square(1.0), &st, &zero2, &CornerOptions::default()).is_err());
    }
}
