use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::{qbkix_evaluate, QbkixConfig};
use crate::geometry::{is_inside, nearest_boundary_point, ParametricCurve, PanelMesh};
use crate::kernels::{stokes_pressure_vec, KernelSpec, Layer, Point};
use crate::quadrature::{check_density, eval_layer_potential};

/// Log10 floor of the pointwise error.
pub const ERROR_FLOOR: f64 = 1e-17;

/// Uniform tensor grid over a box; cell points are the box corners for
/// `nx, ny >= 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    /// `[xmin, xmax, ymin, ymax]`; the curve's bounding box when absent.
    pub bbox: Option<[f64; 4]>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { nx: 200, ny: 200, bbox: None }
    }
}

impl GridSpec {
    pub fn square(n: usize) -> Self {
        Self { nx: n, ny: n, bbox: None }
    }

    pub fn resolved_bbox(&self, curve: &ParametricCurve) -> [f64; 4] {
        self.bbox.unwrap_or_else(|| {
            let r = curve.bounding_radius();
            [-r, r, -r, r]
        })
    }

    pub fn points(&self, curve: &ParametricCurve) -> Vec<Point> {
        let [x0, x1, y0, y1] = self.resolved_bbox(curve);
        let coord = |a: f64, b: f64, n: usize, i: usize| if n == 1 { 0.5 * (a + b) } else { a + (b - a) * i as f64 / (n - 1) as f64 };
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push([coord(x0, x1, self.nx, i), coord(y0, y1, self.ny, j)]);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldCell {
    pub point: Point,
    pub inside: bool,
    /// Within `2 delta` of the boundary.
    pub near: bool,
    pub value: Vec<f64>,
    pub reference: Vec<f64>,
    pub log10_error: Option<f64>,
    /// Stokes only, far cells only.
    pub pressure: Option<f64>,
    pub reference_pressure: Option<f64>,
    pub log10_pressure_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldGrid {
    pub grid: GridSpec,
    pub bbox: [f64; 4],
    pub cdim: usize,
    /// Row-major, `x` fastest.
    pub cells: Vec<FieldCell>,
}

/// Order statistics of `log10` errors over inside cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub count: usize,
    pub max: f64,
    pub median: f64,
    pub p99: f64,
}

impl ErrorSummary {
    pub fn from_values(mut v: Vec<f64>) -> Option<Self> {
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let at = |q: f64| v[((q * (v.len() - 1) as f64).round() as usize).min(v.len() - 1)];
        Some(Self { count: v.len(), max: v[v.len() - 1], median: at(0.5), p99: at(0.99) })
    }
}

impl FieldGrid {
    /// Grid points with inside flags; points on the boundary are excluded.
    pub fn new(curve: &ParametricCurve, grid: &GridSpec, cdim: usize) -> Result<Self> {
        if grid.nx == 0 || grid.ny == 0 {
            return Err(Error::Config("grid needs nx, ny >= 1".into()));
        }
        let cells = grid
            .points(curve)
            .into_par_iter()
            .map(|p| FieldCell {
                point: p,
                inside: is_inside(curve, p).unwrap_or(false),
                near: false,
                value: Vec::new(),
                reference: Vec::new(),
                log10_error: None,
                pressure: None,
                reference_pressure: None,
                log10_pressure_error: None,
            })
            .collect();
        Ok(Self { grid: grid.clone(), bbox: grid.resolved_bbox(curve), cdim, cells })
    }

    /// Fills `value` (and `pressure`) at inside cells from a closed form.
    pub fn sample(mut self, f: &(dyn Fn(Point) -> Vec<f64> + Sync), p: Option<&(dyn Fn(Point) -> f64 + Sync)>) -> Self {
        self.cells.par_iter_mut().filter(|c| c.inside).for_each(|c| {
            c.value = f(c.point);
            c.pressure = p.map(|p| p(c.point));
        });
        self
    }

    pub fn inside_count(&self) -> usize {
        self.cells.iter().filter(|c| c.inside).count()
    }

    pub fn summary(&self) -> Option<ErrorSummary> {
        ErrorSummary::from_values(self.cells.iter().filter_map(|c| c.log10_error).collect())
    }

    pub fn pressure_summary(&self) -> Option<ErrorSummary> {
        ErrorSummary::from_values(self.cells.iter().filter_map(|c| c.log10_pressure_error).collect())
    }
}

fn log10_err(a: &[f64], b: &[f64]) -> f64 {
    let d = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    d.max(ERROR_FLOOR).log10()
}

/// Whether each point lies within `2 delta` of the boundary, `delta` taken
/// from the nearest panel.
pub fn near_flags(mesh: &PanelMesh, cfg: &QbkixConfig, points: &[Point]) -> Vec<bool> {
    points
        .par_iter()
        .map(|&x| {
            let np = nearest_boundary_point(mesh, x);
            np.distance <= 2.0 * cfg.delta_over_l * mesh.panels()[np.panel].arc_length
        })
        .collect()
}

/// Layer potential at arbitrary points: smooth quadrature beyond `2 delta`
/// of the boundary and QBKIX inside, or smooth quadrature everywhere when
/// `qbkix` is `None`. Returns the values and the near flags (with default
/// expansion parameters when `qbkix` is `None`).
pub fn evaluate_points(
    mesh: &PanelMesh,
    spec: &KernelSpec,
    layer: Layer,
    density: &[f64],
    points: &[Point],
    qbkix: Option<&QbkixConfig>,
) -> Result<(Vec<f64>, Vec<bool>)> {
    check_density(mesh.num_nodes(), spec, density)?;
    let cdim = spec.cdim();
    let cfg = qbkix.cloned().unwrap_or_default();
    let near = near_flags(mesh, &cfg, points);
    let (np, fp): (Vec<usize>, Vec<usize>) = (0..points.len()).partition(|&i| qbkix.is_some() && near[i]);
    let mut out = vec![0.0; points.len() * cdim];
    let far_pts: Vec<Point> = fp.iter().map(|&i| points[i]).collect();
    let far = eval_layer_potential(mesh, spec, layer, density, &far_pts)?;
    let near_vals = match qbkix {
        Some(c) if !np.is_empty() => {
            let near_pts: Vec<Point> = np.iter().map(|&i| points[i]).collect();
            qbkix_evaluate(mesh, spec, layer, density, &near_pts, c)?
        }
        _ => Vec::new(),
    };
    for (k, &i) in fp.iter().enumerate() {
        out[i * cdim..(i + 1) * cdim].copy_from_slice(&far[k * cdim..(k + 1) * cdim]);
    }
    for (k, &i) in np.iter().enumerate() {
        out[i * cdim..(i + 1) * cdim].copy_from_slice(&near_vals[k * cdim..(k + 1) * cdim]);
    }
    Ok((out, near))
}

/// Pressure of a Stokes double-layer density by smooth quadrature.
pub fn stokes_pressure_at(mesh: &PanelMesh, density: &[f64], points: &[Point]) -> Result<Vec<f64>> {
    check_density(mesh.num_nodes(), &KernelSpec::Stokes, density)?;
    Ok(points
        .par_iter()
        .map(|x| {
            let mut p = 0.0;
            for (j, n) in mesh.nodes().iter().enumerate() {
                let k = stokes_pressure_vec([x[0] - n.x[0], x[1] - n.x[1]], n.normal);
                p += n.weight * (k[0] * density[2 * j] + k[1] * density[2 * j + 1]);
            }
            p
        })
        .collect())
}

/// Solution on the inside cells of a grid. Stokes pressure is filled on
/// far cells only.
pub fn evaluate_field(
    mesh: &PanelMesh,
    spec: &KernelSpec,
    layer: Layer,
    density: &[f64],
    grid: &GridSpec,
    qbkix: Option<&QbkixConfig>,
) -> Result<FieldGrid> {
    let mut field = FieldGrid::new(mesh.curve(), grid, spec.cdim())?;
    let idx: Vec<usize> = (0..field.cells.len()).filter(|&i| field.cells[i].inside).collect();
    let pts: Vec<Point> = idx.iter().map(|&i| field.cells[i].point).collect();
    let (vals, near) = evaluate_points(mesh, spec, layer, density, &pts, qbkix)?;
    let cdim = spec.cdim();
    for (k, &i) in idx.iter().enumerate() {
        let c = &mut field.cells[i];
        c.value = vals[k * cdim..(k + 1) * cdim].to_vec();
        c.near = near[k];
    }
    if *spec == KernelSpec::Stokes {
        let far: Vec<usize> = idx.iter().copied().filter(|&i| !field.cells[i].near).collect();
        let pts: Vec<Point> = far.iter().map(|&i| field.cells[i].point).collect();
        let p = stokes_pressure_at(mesh, density, &pts)?;
        for (k, &i) in far.iter().enumerate() {
            field.cells[i].pressure = Some(p[k]);
        }
    }
    Ok(field)
}

/// Pointwise `log10` error of `field` against `reference` on the same grid.
///
/// Vector fields use the Euclidean norm of the difference. Pressure is
/// compared after removing the mean offset, since it is only determined up
/// to a constant.
pub fn error_field(field: &FieldGrid, reference: &FieldGrid) -> Result<FieldGrid> {
    if field.cells.len() != reference.cells.len() || field.bbox != reference.bbox || field.cdim != reference.cdim {
        return Err(Error::InvalidArgument("error_field needs two fields on the same grid".into()));
    }
    let mut out = field.clone();
    let mut offset = 0.0;
    let mut count = 0usize;
    for (c, r) in out.cells.iter_mut().zip(&reference.cells) {
        if c.inside != r.inside {
            return Err(Error::InvalidArgument("inside flags differ between fields".into()));
        }
        c.reference = r.value.clone();
        c.reference_pressure = r.pressure;
        if c.inside && c.value.len() == out.cdim && r.value.len() == out.cdim {
            c.log10_error = Some(log10_err(&c.value, &r.value));
        }
        if let (Some(p), Some(q)) = (c.pressure, r.pressure) {
            offset += p - q;
            count += 1;
        }
    }
    if count > 0 {
        offset /= count as f64;
        for c in out.cells.iter_mut() {
            if let (Some(p), Some(q)) = (c.pressure, c.reference_pressure) {
                c.log10_pressure_error = Some(((p - offset - q).abs()).max(ERROR_FLOOR).log10());
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_uniform_mesh;

    #[test]
    fn identical_and_offset_fields() {
        let c = ParametricCurve::circle(1.0);
        let g = GridSpec::square(12);
        let f = |x: Point| vec![x[0] * x[1]];
        let a = FieldGrid::new(&c, &g, 1).unwrap().sample(&f, None);
        let e = error_field(&a, &a).unwrap();
        assert!(e.cells.iter().filter(|c| c.inside).all(|c| c.log10_error == Some(-17.0)));
        assert!(e.cells.iter().filter(|c| !c.inside).all(|c| c.log10_error.is_none()));
        let shifted = |x: Point| vec![x[0] * x[1] + 1e-10];
        let b = FieldGrid::new(&c, &g, 1).unwrap().sample(&shifted, None);
        let e = error_field(&b, &a).unwrap();
        for c in e.cells.iter().filter_map(|c| c.log10_error) {
            assert!((c + 10.0).abs() < 1e-5);
        }
        let s = e.summary().unwrap();
        assert_eq!(s.count, a.inside_count());
    }

    #[test]
    fn summary_statistics() {
        let s = ErrorSummary::from_values((0..101).map(|i| -(i as f64)).collect()).unwrap();
        assert_eq!((s.max, s.median, s.p99), (0.0, -50.0, -1.0));
        assert!(ErrorSummary::from_values(vec![]).is_none());
    }

    #[test]
    fn routing_changes_only_near_cells() {
        let mesh = build_uniform_mesh(&ParametricCurve::circle(1.0), 8, 16).unwrap();
        let ones = vec![1.0; mesh.num_nodes()];
        let lap = KernelSpec::laplace();
        let cfg = QbkixConfig::default();
        let g = GridSpec::square(24);
        let on = evaluate_field(&mesh, &lap, Layer::Double, &ones, &g, Some(&cfg)).unwrap();
        let off = evaluate_field(&mesh, &lap, Layer::Double, &ones, &g, None).unwrap();
        let mut near = 0;
        for (a, b) in on.cells.iter().zip(&off.cells).filter(|(a, _)| a.inside) {
            if a.near {
                near += 1;
                assert!((a.value[0] + 1.0).abs() < 1e-8);
            } else {
                assert_eq!(a.value, b.value);
            }
        }
        assert!(near > 0);
        let worst = off.cells.iter().filter(|c| c.inside).map(|c| (c.value[0] + 1.0).abs()).fold(0.0, f64::max);
        assert!(worst > 1e-3, "{worst}");
    }

    #[test]
    fn exterior_points_route_too() {
        let mesh = build_uniform_mesh(&ParametricCurve::circle(1.0), 8, 16).unwrap();
        let ones = vec![1.0; mesh.num_nodes()];
        let pts = [[1.01, 0.0], [0.0, -1.5], [3.0, 1.0]];
        let (v, near) =
            evaluate_points(&mesh, &KernelSpec::laplace(), Layer::Double, &ones, &pts, Some(&QbkixConfig::default())).unwrap();
        assert_eq!(near, vec![true, false, false]);
        assert!(v.iter().all(|x| x.abs() < 1e-9), "{v:?}");
    }
}
