use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expansion::config::{QbkixConfig, Side};
use crate::expansion::local::{
    cached_factors, evaluate_expansion, place_expansion, solve_equivalent_density, target_functional, Anchor,
    ExpansionGeometry,
};
use crate::geometry::{clearance_violations, nearest_boundary_point, PanelMesh};
use crate::kernels::{block_mul_add, KernelSpec, Layer, Point};
use crate::quadrature::{check_density, child_nodes, interpolation_matrix, SourceSet};

/// Coarse and `beta`-upsampled copies of the boundary rule.
///
/// Check values are computed with upsampled nodes on panels near the check
/// circle and with the native nodes elsewhere.
pub(crate) struct FineBoundary {
    q: usize,
    fq: usize,
    coarse: SourceSet,
    fine: SourceSet,
    /// `(beta q) x q` upsampling matrix, row-major.
    interp: Vec<f64>,
    first_node: Vec<usize>,
    panel_len: Vec<f64>,
    near_panels: f64,
}

impl FineBoundary {
    pub(crate) fn new(mesh: &PanelMesh, cfg: &QbkixConfig) -> Result<Self> {
        let fine_mesh = mesh.refine(cfg.beta)?;
        let rule = mesh.rule();
        let fine_nodes = child_nodes(rule, cfg.beta);
        Ok(Self {
            q: mesh.q(),
            fq: mesh.q() * cfg.beta,
            coarse: SourceSet::from_mesh(mesh),
            fine: SourceSet::from_mesh(&fine_mesh),
            interp: interpolation_matrix(&rule.nodes, &rule.bary, &fine_nodes),
            first_node: mesh.panels().iter().map(|p| p.first_node).collect(),
            panel_len: mesh.panels().iter().map(|p| p.arc_length).collect(),
            near_panels: cfg.near_panels,
        })
    }

    fn num_panels(&self) -> usize {
        self.first_node.len()
    }

    /// Panels within `near_panels` of their own length of a disc.
    fn near_flags(&self, center: Point, radius: f64) -> Vec<bool> {
        (0..self.num_panels())
            .map(|p| {
                let s = self.first_node[p];
                let d = self.coarse.x[s..s + self.q]
                    .iter()
                    .map(|x| (x[0] - center[0]).hypot(x[1] - center[1]))
                    .fold(f64::INFINITY, f64::min);
                d - radius < self.near_panels * self.panel_len[p]
            })
            .collect()
    }

    fn upsample(&self, density: &[f64], cdim: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.num_panels() * self.fq * cdim];
        for p in 0..self.num_panels() {
            let s = self.first_node[p];
            for m in 0..self.fq {
                for l in 0..self.q {
                    let w = self.interp[m * self.q + l];
                    for c in 0..cdim {
                        out[(p * self.fq + m) * cdim + c] += w * density[(s + l) * cdim + c];
                    }
                }
            }
        }
        out
    }

    /// Layer potential at `points` with the mixed coarse/fine rule.
    fn check_values(
        &self,
        spec: &KernelSpec,
        layer: Layer,
        near: &[bool],
        density: &[f64],
        fine_density: &[f64],
        points: &[Point],
    ) -> Vec<f64> {
        let cdim = spec.cdim();
        let mut out = vec![0.0; points.len() * cdim];
        for (k, z) in points.iter().enumerate() {
            let o = &mut out[k * cdim..(k + 1) * cdim];
            for (p, &is_near) in near.iter().enumerate() {
                let (src, dens, range) = if is_near {
                    (&self.fine, fine_density, p * self.fq..(p + 1) * self.fq)
                } else {
                    let s = self.first_node[p];
                    (&self.coarse, density, s..s + self.q)
                };
                for j in range {
                    let mut b = spec.layer_block(layer, [z[0] - src.x[j][0], z[1] - src.x[j][1]], src.n[j]);
                    for v in b.iter_mut() {
                        *v *= src.w[j];
                    }
                    block_mul_add(cdim, &b, &dens[j * cdim..(j + 1) * cdim], o);
                }
            }
        }
        out
    }

    /// `sum_k E_k K(z_k, y) w`, the contraction of a target functional with
    /// the layer kernel at one source.
    #[inline]
    fn contract(spec: &KernelSpec, layer: Layer, e: &[f64], checks: &[Point], y: Point, n: Point, w: f64) -> [f64; 4] {
        let cdim = spec.cdim();
        let nchk = checks.len() * cdim;
        let mut acc = [0.0; 4];
        for (k, z) in checks.iter().enumerate() {
            let b = spec.layer_block(layer, [z[0] - y[0], z[1] - y[1]], n);
            if cdim == 1 {
                acc[0] += e[k] * b[0];
            } else {
                for a in 0..2 {
                    let e0 = e[a * nchk + 2 * k];
                    let e1 = e[a * nchk + 2 * k + 1];
                    acc[a * 2] += e0 * b[0] + e1 * b[2];
                    acc[a * 2 + 1] += e0 * b[1] + e1 * b[3];
                }
            }
        }
        for v in acc.iter_mut() {
            *v *= w;
        }
        acc
    }

    /// Adds `weight * E G P` to a `cdim x (N cdim)` row block.
    #[allow(clippy::too_many_arguments)]
    fn accumulate_row(
        &self,
        spec: &KernelSpec,
        layer: Layer,
        e: &[f64],
        checks: &[Point],
        near: &[bool],
        weight: f64,
        row: &mut [f64],
    ) {
        let cdim = spec.cdim();
        let dim = self.coarse.len() * cdim;
        let put = |row: &mut [f64], node: usize, b: &[f64; 4], scale: f64| {
            for a in 0..cdim {
                for c in 0..cdim {
                    row[a * dim + node * cdim + c] += scale * b[a * 2 + c];
                }
            }
        };
        for (p, &is_near) in near.iter().enumerate() {
            let s = self.first_node[p];
            if is_near {
                for m in 0..self.fq {
                    let f = p * self.fq + m;
                    let b = Self::contract(spec, layer, e, checks, self.fine.x[f], self.fine.n[f], self.fine.w[f]);
                    for l in 0..self.q {
                        put(row, s + l, &b, weight * self.interp[m * self.q + l]);
                    }
                }
            } else {
                for j in s..s + self.q {
                    let b = Self::contract(spec, layer, e, checks, self.coarse.x[j], self.coarse.n[j], self.coarse.w[j]);
                    put(row, j, &b, weight);
                }
            }
        }
    }
}

fn check_layer_and_config(spec: &KernelSpec, layer: Layer, cfg: &QbkixConfig) -> Result<()> {
    spec.validate()?;
    spec.check_layer(layer)?;
    cfg.validate()
}

/// Fails with [`Error::CheckClearance`] when an expansion on the given sides
/// would sit closer than its own distance to a panel other than its parent.
/// Panels touching a corner are exempt.
pub fn check_clearance(mesh: &PanelMesh, cfg: &QbkixConfig, sides: &[f64]) -> Result<()> {
    let spans: Vec<_> = mesh.panels().iter().map(|p| p.span).collect();
    let both = sides.len() > 1 || sides.first() == Some(&1.0);
    let corner: Vec<usize> = mesh.corner_panels().into_iter().map(|c| c.0).collect();
    for (p, o, d, req) in clearance_violations(mesh.curve(), &spans, mesh.q(), cfg.delta_over_l, both)? {
        if !corner.contains(&p) {
            return Err(Error::CheckClearance { panel: p, offending: o, distance: d, required: req });
        }
    }
    Ok(())
}

/// Combination weights of each side's limit, and the identity coefficient,
/// that turn layer limits into `-1/2 phi + K phi`.
fn side_weights(side: Side) -> (Vec<(f64, f64)>, f64) {
    match side {
        Side::Interior => (vec![(-1.0, 1.0)], 0.0),
        Side::Exterior => (vec![(1.0, 1.0)], -1.0),
        Side::TwoSided => (vec![(-1.0, 0.5), (1.0, 0.5)], -0.5),
    }
}

/// Dense QBKIX on-surface operator for `-1/2 phi + K phi`.
#[derive(Debug, Clone)]
pub struct QbkixOperator {
    pub matrix: DMatrix<f64>,
    pub spec: KernelSpec,
    pub layer: Layer,
    pub side: Side,
}

impl QbkixOperator {
    pub fn build(mesh: &PanelMesh, spec: &KernelSpec, layer: Layer, cfg: &QbkixConfig) -> Result<Self> {
        check_layer_and_config(spec, layer, cfg)?;
        let (sides, identity) = side_weights(cfg.side);
        check_clearance(mesh, cfg, &sides.iter().map(|s| s.0).collect::<Vec<_>>())?;
        let fb = FineBoundary::new(mesh, cfg)?;
        let cdim = spec.cdim();
        let n = mesh.num_nodes();
        let dim = n * cdim;
        let rows: Result<Vec<Vec<f64>>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut row = vec![0.0; cdim * dim];
                for &(side, weight) in &sides {
                    let g = place_expansion(mesh, Anchor::Node { index: i, side }, cfg)?;
                    let f = cached_factors(&g, spec, cfg.eps_pinv)?;
                    let e = target_functional(&g, &f, mesh.nodes()[i].x);
                    let near = fb.near_flags(g.center, g.r_c);
                    fb.accumulate_row(spec, layer, &e, &g.check_points(), &near, weight, &mut row);
                }
                for a in 0..cdim {
                    row[a * dim + i * cdim + a] += identity;
                }
                Ok(row)
            })
            .collect();
        let rows = rows?;
        let matrix = DMatrix::from_row_iterator(dim, dim, rows.into_iter().flatten());
        Ok(Self { matrix, spec: *spec, layer, side: cfg.side })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, density: &[f64]) -> Result<Vec<f64>> {
        if density.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "density has {} entries, operator expects {}",
                density.len(),
                self.dim()
            )));
        }
        Ok((&self.matrix * DVector::from_column_slice(density)).as_slice().to_vec())
    }
}

/// Matrix-free on-surface application of `-1/2 phi + K phi` at every node.
///
/// Interior: the interior limit. Exterior: the exterior limit minus the jump.
/// Two-sided: the mean of both limits minus `phi / 2`.
pub fn onsurface_apply(
    mesh: &PanelMesh,
    spec: &KernelSpec,
    layer: Layer,
    density: &[f64],
    cfg: &QbkixConfig,
) -> Result<Vec<f64>> {
    check_layer_and_config(spec, layer, cfg)?;
    check_density(mesh.num_nodes(), spec, density)?;
    let (sides, identity) = side_weights(cfg.side);
    check_clearance(mesh, cfg, &sides.iter().map(|s| s.0).collect::<Vec<_>>())?;
    let fb = FineBoundary::new(mesh, cfg)?;
    let cdim = spec.cdim();
    let fine = fb.upsample(density, cdim);
    let vals: Result<Vec<Vec<f64>>> = (0..mesh.num_nodes())
        .into_par_iter()
        .map(|i| {
            let mut v = vec![0.0; cdim];
            for &(side, weight) in &sides {
                let g = place_expansion(mesh, Anchor::Node { index: i, side }, cfg)?;
                let f = cached_factors(&g, spec, cfg.eps_pinv)?;
                let near = fb.near_flags(g.center, g.r_c);
                let u = fb.check_values(spec, layer, &near, density, &fine, &g.check_points());
                let alpha = solve_equivalent_density(&f, &u)?;
                let val = evaluate_expansion(&g, &f, &alpha, &[mesh.nodes()[i].x])?;
                for c in 0..cdim {
                    v[c] += weight * val[c];
                }
            }
            for c in 0..cdim {
                v[c] += identity * density[i * cdim + c];
            }
            Ok(v)
        })
        .collect();
    Ok(vals?.concat())
}

/// Near-boundary evaluator with expansions shared per anchor node.
pub struct NearEvaluator<'a> {
    mesh: &'a PanelMesh,
    spec: KernelSpec,
    layer: Layer,
    cfg: QbkixConfig,
    fb: FineBoundary,
    density: Vec<f64>,
    fine_density: Vec<f64>,
}

/// How a single near target was handled.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Plan {
    Shared { node: usize, side_ext: bool },
    Dedicated,
    OnSurface { node: usize },
}

impl<'a> NearEvaluator<'a> {
    pub fn new(mesh: &'a PanelMesh, spec: &KernelSpec, layer: Layer, density: &[f64], cfg: &QbkixConfig) -> Result<Self> {
        check_layer_and_config(spec, layer, cfg)?;
        check_density(mesh.num_nodes(), spec, density)?;
        let fb = FineBoundary::new(mesh, cfg)?;
        let fine_density = fb.upsample(density, spec.cdim());
        Ok(Self { mesh, spec: *spec, layer, cfg: cfg.clone(), fb, density: density.to_vec(), fine_density })
    }

    fn alpha_for(&self, g: &ExpansionGeometry) -> Result<(std::sync::Arc<crate::expansion::PseudoInverseFactors>, Vec<f64>)> {
        let f = cached_factors(g, &self.spec, self.cfg.eps_pinv)?;
        let near = self.fb.near_flags(g.center, g.r_c);
        let u = self.fb.check_values(&self.spec, self.layer, &near, &self.density, &self.fine_density, &g.check_points());
        let alpha = solve_equivalent_density(&f, &u)?;
        Ok((f, alpha))
    }

    fn plan(&self, x: Point) -> Result<Plan> {
        let np = nearest_boundary_point(self.mesh, x);
        let l = self.mesh.panels()[np.panel].arc_length;
        let delta = self.cfg.delta_over_l * l;
        if np.distance > 2.0 * delta {
            return Err(Error::OutsideEvaluationDisc { distance: np.distance, radius: 2.0 * delta });
        }
        let nodes = self.mesh.nodes();
        let node = (0..nodes.len())
            .map(|j| (j, (nodes[j].x[0] - x[0]).hypot(nodes[j].x[1] - x[1])))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        if node.1 <= 1e-12 * l {
            return Ok(Plan::OnSurface { node: node.0 });
        }
        let (x0, n, _) = self.mesh.curve().curve_point(np.t);
        let side_ext = (x[0] - x0[0]) * n[0] + (x[1] - x0[1]) * n[1] > 0.0;
        let g = place_expansion(self.mesh, Anchor::Node { index: node.0, side: if side_ext { 1.0 } else { -1.0 } }, &self.cfg)?;
        if (x[0] - g.center[0]).hypot(x[1] - g.center[1]) <= g.delta {
            Ok(Plan::Shared { node: node.0, side_ext })
        } else {
            Ok(Plan::Dedicated)
        }
    }

    /// Values at targets within `2 delta` of the boundary. Targets on a node
    /// receive the limit selected by the configured side (the mean of both
    /// limits for two-sided).
    pub fn evaluate(&self, targets: &[Point]) -> Result<Vec<f64>> {
        let cdim = self.spec.cdim();
        let plans: Result<Vec<Plan>> = targets.par_iter().map(|&x| self.plan(x)).collect();
        let plans = plans?;
        let mut groups: BTreeMap<(usize, bool), Vec<usize>> = BTreeMap::new();
        let mut singles = Vec::new();
        for (t, p) in plans.iter().enumerate() {
            match *p {
                Plan::Shared { node, side_ext } => groups.entry((node, side_ext)).or_default().push(t),
                Plan::OnSurface { node } => {
                    for &(s, _) in &side_weights(self.cfg.side).0 {
                        groups.entry((node, s > 0.0)).or_default().push(t);
                    }
                }
                Plan::Dedicated => singles.push(t),
            }
        }
        let (side_w, _) = side_weights(self.cfg.side);
        let weight_of = |t: usize, ext: bool| -> f64 {
            match plans[t] {
                Plan::OnSurface { .. } => side_w.iter().find(|s| (s.0 > 0.0) == ext).map(|s| s.1).unwrap_or(0.0),
                _ => 1.0,
            }
        };
        let group_list: Vec<((usize, bool), Vec<usize>)> = groups.into_iter().collect();
        let shared: Result<Vec<Vec<(usize, Vec<f64>)>>> = group_list
            .par_iter()
            .map(|((node, ext), ts)| {
                let side = if *ext { 1.0 } else { -1.0 };
                let g = place_expansion(self.mesh, Anchor::Node { index: *node, side }, &self.cfg)?;
                let (f, alpha) = self.alpha_for(&g)?;
                let pts: Vec<Point> = ts.iter().map(|&t| targets[t]).collect();
                let vals = evaluate_expansion(&g, &f, &alpha, &pts)?;
                Ok(ts
                    .iter()
                    .enumerate()
                    .map(|(k, &t)| (t, vals[k * cdim..(k + 1) * cdim].iter().map(|v| v * weight_of(t, *ext)).collect()))
                    .collect())
            })
            .collect();
        let dedicated: Result<Vec<(usize, Vec<f64>)>> = singles
            .par_iter()
            .map(|&t| {
                let g = place_expansion(self.mesh, Anchor::Target(targets[t]), &self.cfg)?;
                let (f, alpha) = self.alpha_for(&g)?;
                Ok((t, evaluate_expansion(&g, &f, &alpha, &[targets[t]])?))
            })
            .collect();
        let mut out = vec![0.0; targets.len() * cdim];
        for (t, v) in shared?.into_iter().flatten().chain(dedicated?) {
            for c in 0..cdim {
                out[t * cdim + c] += v[c];
            }
        }
        Ok(out)
    }
}

/// QBKIX evaluation of a layer potential at targets near (within `2 delta`)
/// or on the boundary.
pub fn qbkix_evaluate(
    mesh: &PanelMesh,
    spec: &KernelSpec,
    layer: Layer,
    density: &[f64],
    targets: &[Point],
    cfg: &QbkixConfig,
) -> Result<Vec<f64>> {
    check_clearance(mesh, cfg, &[-1.0, 1.0])?;
    NearEvaluator::new(mesh, spec, layer, density, cfg)?.evaluate(targets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_uniform_mesh, ParametricCurve};
    use crate::quadrature::nystrom_apply;

    fn circle8() -> PanelMesh {
        build_uniform_mesh(&ParametricCurve::circle(1.0), 8, 16).unwrap()
    }

    #[test]
    fn gauss_identity_on_surface() {
        let mesh = circle8();
        let ones = vec![1.0; mesh.num_nodes()];
        let lap = KernelSpec::laplace();
        for side in [Side::Interior, Side::TwoSided, Side::Exterior] {
            let cfg = QbkixConfig::default().with_side(side);
            let v = onsurface_apply(&mesh, &lap, Layer::Double, &ones, &cfg).unwrap();
            assert!(v.iter().all(|x| (x + 1.0).abs() < 1e-9), "{side:?}");
            let op = QbkixOperator::build(&mesh, &lap, Layer::Double, &cfg).unwrap();
            let w = op.apply(&ones).unwrap();
            // the two paths fold the same pseudo-inverse in different orders
            for (a, b) in v.iter().zip(&w) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn one_sided_matches_nystrom_for_smooth_density() {
        let mesh = circle8();
        let lap = KernelSpec::laplace();
        let phi: Vec<f64> = mesh.nodes().iter().map(|n| (2.0 * n.t).cos() + 0.5 * n.t.sin()).collect();
        let cfg = QbkixConfig::default();
        let q = onsurface_apply(&mesh, &lap, Layer::Double, &phi, &cfg).unwrap();
        let d = nystrom_apply(&mesh, &lap, &phi).unwrap();
        let err = q.iter().zip(&d).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn jump_relation_and_two_sided_identity() {
        let mesh = circle8();
        let lap = KernelSpec::laplace();
        let phi: Vec<f64> = mesh.nodes().iter().map(|n| 1.0 + (3.0 * n.t).sin()).collect();
        let base = QbkixConfig::default();
        let int = onsurface_apply(&mesh, &lap, Layer::Double, &phi, &base.clone().with_side(Side::Interior)).unwrap();
        let ext = onsurface_apply(&mesh, &lap, Layer::Double, &phi, &base.clone().with_side(Side::Exterior)).unwrap();
        let two = onsurface_apply(&mesh, &lap, Layer::Double, &phi, &base.with_side(Side::TwoSided)).unwrap();
        for i in 0..phi.len() {
            // exterior output is (exterior limit - phi); limits differ by -phi
            let ext_limit = ext[i] + phi[i];
            assert!(((int[i] - ext_limit) + phi[i]).abs() < 1e-8);
            let avg = 0.5 * (int[i] + ext_limit);
            assert!((two[i] + 0.5 * phi[i] - avg).abs() < 1e-14);
        }
    }

    #[test]
    fn stokes_constant_density() {
        let mesh = circle8();
        let st = KernelSpec::stokes();
        let phi: Vec<f64> = (0..mesh.num_nodes()).flat_map(|_| [1.0, 0.0]).collect();
        let cfg = QbkixConfig::default().with_side(Side::TwoSided);
        let v = onsurface_apply(&mesh, &st, Layer::Double, &phi, &cfg).unwrap();
        for i in 0..mesh.num_nodes() {
            assert!((v[2 * i] + 1.0).abs() < 1e-8 && v[2 * i + 1].abs() < 1e-8);
        }
        let op = QbkixOperator::build(&mesh, &st, Layer::Double, &cfg).unwrap();
        let w = op.apply(&phi).unwrap();
        let diff = v.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-9, "{diff}");
    }

    #[test]
    fn near_targets_on_radial_line() {
        let mesh = circle8();
        let lap = KernelSpec::laplace();
        let ones = vec![1.0; mesh.num_nodes()];
        let l = mesh.panels()[0].arc_length;
        let ts: Vec<Point> = [1e-4, 1e-3, 0.01, 0.05, 0.1, 0.2, 0.3, 0.45]
            .iter()
            .map(|&s| {
                let r = 1.0 - s * l;
                [r * 0.37f64.cos(), r * 0.37f64.sin()]
            })
            .collect();
        let v = qbkix_evaluate(&mesh, &lap, Layer::Double, &ones, &ts, &QbkixConfig::default()).unwrap();
        for x in v {
            assert!((x + 1.0).abs() < 1e-9, "{x}");
        }
        let far = qbkix_evaluate(&mesh, &lap, Layer::Double, &ones, &[[0.0, 0.0]], &QbkixConfig::default());
        assert!(matches!(far, Err(Error::OutsideEvaluationDisc { .. })));
    }

    #[test]
    fn exterior_near_targets_vanish() {
        let mesh = circle8();
        let ones = vec![1.0; mesh.num_nodes()];
        let l = mesh.panels()[0].arc_length;
        let ts: Vec<Point> = [1e-3, 0.1, 0.4].iter().map(|&s| [0.0, 1.0 + s * l]).collect();
        let v = qbkix_evaluate(&mesh, &KernelSpec::laplace(), Layer::Double, &ones, &ts, &QbkixConfig::default()).unwrap();
        assert!(v.iter().all(|x| x.abs() < 1e-9), "{v:?}");
    }

    #[test]
    fn operator_is_linear() {
        let mesh = build_uniform_mesh(&ParametricCurve::star(1.0, 0.2, 3), 10, 16).unwrap();
        let lap = KernelSpec::laplace();
        let cfg = QbkixConfig::default().with_side(Side::TwoSided);
        let a: Vec<f64> = mesh.nodes().iter().map(|n| n.t.cos()).collect();
        let b: Vec<f64> = mesh.nodes().iter().map(|n| (5.0 * n.t).sin()).collect();
        let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.0 * x - 3.0 * y).collect();
        let op = QbkixOperator::build(&mesh, &lap, Layer::Double, &cfg).unwrap();
        let (fa, fb, fab) = (op.apply(&a).unwrap(), op.apply(&b).unwrap(), op.apply(&ab).unwrap());
        for i in 0..a.len() {
            assert!((fab[i] - (2.0 * fa[i] - 3.0 * fb[i])).abs() < 1e-13);
        }
    }
}
