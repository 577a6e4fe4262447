//! Smooth panel quadrature: Gauss–Legendre rules, upsampling, direct
//! layer-potential sums and the Nyström matrix.

mod gauss;

pub use gauss::{
    barycentric_weights, child_nodes, gauss_legendre, interpolation_matrix, lagrange_upsample, GlRule,
    MAX_ORDER,
};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::PanelMesh;
use crate::kernels::{block_mul_add, sub, KernelSpec, Layer, Point};

/// Quadrature sources: positions, unit normals and weights.
#[derive(Debug, Clone, Default)]
pub struct SourceSet {
    pub x: Vec<Point>,
    pub n: Vec<Point>,
    pub w: Vec<f64>,
    /// Per-source length scale for the coincidence guard.
    pub scale: Vec<f64>,
}

impl SourceSet {
    pub fn from_mesh(mesh: &PanelMesh) -> Self {
        let mut s = SourceSet::default();
        for node in mesh.nodes() {
            s.x.push(node.x);
            s.n.push(node.normal);
            s.w.push(node.weight);
            s.scale.push(mesh.panels()[node.panel].arc_length);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Checks that `density` has `N cdim` finite entries.
pub fn check_density(mesh_nodes: usize, spec: &KernelSpec, density: &[f64]) -> Result<()> {
    let want = mesh_nodes * spec.cdim();
    if density.len() != want {
        return Err(Error::InvalidArgument(format!(
            "density has {} entries, expected {want}",
            density.len()
        )));
    }
    if density.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("density contains non-finite values".into()));
    }
    Ok(())
}

/// `out += sum_j K(target, x_j) phi_j w_j`, summed in source order.
#[inline]
pub(crate) fn accumulate_layer(
    spec: &KernelSpec,
    layer: Layer,
    src: &SourceSet,
    density: &[f64],
    target: Point,
    out: &mut [f64],
) -> Result<()> {
    let cdim = spec.cdim();
    for j in 0..src.len() {
        let r = sub(target, src.x[j]);
        let d2 = r[0] * r[0] + r[1] * r[1];
        let tol = 1e-14 * src.scale[j];
        if d2 <= tol * tol {
            return Err(Error::SingularEvaluation { distance: d2.sqrt() });
        }
        let mut b = spec.layer_block(layer, r, src.n[j]);
        let w = src.w[j];
        for v in b.iter_mut() {
            *v *= w;
        }
        block_mul_add(cdim, &b, &density[j * cdim..(j + 1) * cdim], out);
    }
    Ok(())
}

/// Direct smooth-quadrature layer potential at arbitrary targets.
///
/// Accurate only for targets well separated from the boundary; near targets
/// need the expansion module.
pub fn eval_layer_potential(
    mesh: &PanelMesh,
    spec: &KernelSpec,
    layer: Layer,
    density: &[f64],
    targets: &[Point],
) -> Result<Vec<f64>> {
    spec.validate()?;
    spec.check_layer(layer)?;
    check_density(mesh.num_nodes(), spec, density)?;
    let src = SourceSet::from_mesh(mesh);
    eval_sources(spec, layer, &src, density, targets)
}

pub(crate) fn eval_sources(
    spec: &KernelSpec,
    layer: Layer,
    src: &SourceSet,
    density: &[f64],
    targets: &[Point],
) -> Result<Vec<f64>> {
    let cdim = spec.cdim();
    let vals: Result<Vec<Vec<f64>>> = targets
        .par_iter()
        .map(|&x| {
            let mut o = vec![0.0; cdim];
            accumulate_layer(spec, layer, src, density, x, &mut o)?;
            Ok(o)
        })
        .collect();
    Ok(vals?.concat())
}

fn require_direct(spec: &KernelSpec) -> Result<()> {
    spec.validate()?;
    if !spec.supports_direct_nystrom() {
        return Err(Error::UnsupportedFamily {
            family: spec.name(),
            what: "direct Nystrom discretisation (Laplace and Stokes only)",
        });
    }
    Ok(())
}

/// Block `(i, j)` of the Nyström matrix of `-1/2 I + D`.
#[inline]
fn nystrom_block(mesh: &PanelMesh, spec: &KernelSpec, i: usize, j: usize) -> [f64; 4] {
    let nodes = mesh.nodes();
    let (ni, nj) = (&nodes[i], &nodes[j]);
    let mut b = if i == j {
        spec.diagonal_block(ni.curvature, ni.tangent()).expect("checked family")
    } else {
        spec.double_block(sub(ni.x, nj.x), nj.normal)
    };
    for v in b.iter_mut() {
        *v *= nj.weight;
    }
    if i == j {
        b[0] -= 0.5;
        b[3] -= 0.5;
    }
    b
}

/// Dense Nyström matrix of `-1/2 I + D` (Laplace and Stokes).
pub fn nystrom_matrix(mesh: &PanelMesh, spec: &KernelSpec) -> Result<DMatrix<f64>> {
    require_direct(spec)?;
    let n = mesh.num_nodes();
    let cdim = spec.cdim();
    let dim = n * cdim;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; cdim * dim];
            for j in 0..n {
                let b = nystrom_block(mesh, spec, i, j);
                for a in 0..cdim {
                    for c in 0..cdim {
                        row[a * dim + j * cdim + c] = b[a * 2 + c];
                    }
                }
            }
            row
        })
        .collect();
    Ok(DMatrix::from_row_iterator(dim, dim, rows.into_iter().flatten()))
}

/// Matrix-free Nyström product, rows formed on the fly.
pub fn nystrom_apply(mesh: &PanelMesh, spec: &KernelSpec, density: &[f64]) -> Result<Vec<f64>> {
    require_direct(spec)?;
    check_density(mesh.num_nodes(), spec, density)?;
    let n = mesh.num_nodes();
    let cdim = spec.cdim();
    let out: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut o = vec![0.0; cdim];
            for j in 0..n {
                let b = nystrom_block(mesh, spec, i, j);
                block_mul_add(cdim, &b, &density[j * cdim..(j + 1) * cdim], &mut o);
            }
            o
        })
        .collect();
    Ok(out.concat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_uniform_mesh, ParametricCurve};

    fn circle(m: usize) -> PanelMesh {
        build_uniform_mesh(&ParametricCurve::circle(1.0), m, 16).unwrap()
    }

    #[test]
    fn gauss_identity_far_targets() {
        let lap = KernelSpec::laplace();
        for m in [8, 16] {
            let mesh = circle(m);
            let ones = vec![1.0; mesh.num_nodes()];
            let v = eval_layer_potential(&mesh, &lap, Layer::Double, &ones, &[[0.0, 0.0], [3.0, 0.0]]).unwrap();
            assert!((v[0] + 1.0).abs() < 1e-12, "{}", v[0]);
            assert!(v[1].abs() < 1e-12);
        }
    }

    #[test]
    fn stresslet_identity() {
        let mesh = circle(8);
        let st = KernelSpec::stokes();
        let phi: Vec<f64> = (0..mesh.num_nodes()).flat_map(|_| [1.0, 0.0]).collect();
        let v = eval_layer_potential(&mesh, &st, Layer::Double, &phi, &[[0.0, 0.0], [0.2, -0.3]]).unwrap();
        for k in 0..2 {
            assert!((v[2 * k] + 1.0).abs() < 1e-10 && v[2 * k + 1].abs() < 1e-10, "{v:?}");
        }
    }

    #[test]
    fn coincident_target_rejected() {
        let mesh = circle(4);
        let x = mesh.nodes()[3].x;
        let ones = vec![1.0; mesh.num_nodes()];
        let r = eval_layer_potential(&mesh, &KernelSpec::laplace(), Layer::Double, &ones, &[x]);
        assert!(matches!(r, Err(Error::SingularEvaluation { .. })));
        let r = eval_layer_potential(&mesh, &KernelSpec::laplace(), Layer::Combined, &ones, &[[0.0, 0.0]]);
        assert!(r.is_err());
        assert!(eval_layer_potential(&mesh, &KernelSpec::laplace(), Layer::Double, &ones[1..], &[[0.0, 0.0]]).is_err());
    }

    #[test]
    fn nystrom_on_circle() {
        let mesh = circle(4);
        let a = nystrom_matrix(&mesh, &KernelSpec::laplace()).unwrap();
        let n = mesh.num_nodes();
        for i in 0..n {
            let s: f64 = (0..n).map(|j| a[(i, j)]).sum();
            assert!((s + 1.0).abs() < 1e-10);
        }
        let ones = vec![1.0; n];
        let ap = nystrom_apply(&mesh, &KernelSpec::laplace(), &ones).unwrap();
        assert!(ap.iter().all(|v| (v + 1.0).abs() < 1e-10));
        // Stokes constant field
        let st = KernelSpec::stokes();
        let phi: Vec<f64> = (0..n).flat_map(|_| [1.0, 0.0]).collect();
        let v = nystrom_apply(&mesh, &st, &phi).unwrap();
        for i in 0..n {
            assert!((v[2 * i] + 1.0).abs() < 1e-8 && v[2 * i + 1].abs() < 1e-8);
        }
        let am = nystrom_matrix(&mesh, &st).unwrap();
        let mv = &am * nalgebra::DVector::from_vec(phi.clone());
        for i in 0..2 * n {
            assert!((mv[i] - v[i]).abs() < 1e-13);
        }
        assert!(nystrom_matrix(&mesh, &KernelSpec::yukawa(2.0)).is_err());
    }

    #[test]
    fn principal_value_row_sums() {
        // (A + 1/2 I) 1 is the principal value of D[1] = -1/2
        let mesh = circle(4);
        let a = nystrom_matrix(&mesh, &KernelSpec::laplace()).unwrap();
        for i in 0..mesh.num_nodes() {
            let s: f64 = (0..mesh.num_nodes()).map(|j| a[(i, j)]).sum::<f64>() + 0.5;
            assert!((s + 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn far_field_converges_at_panel_order() {
        let curve = ParametricCurve::star(1.0, 0.2, 3);
        let lap = KernelSpec::laplace();
        let exact_at = |mesh: &PanelMesh| {
            // smooth density cos(2t)
            let phi: Vec<f64> = mesh.nodes().iter().map(|n| (2.0 * n.t).cos()).collect();
            eval_layer_potential(mesh, &lap, Layer::Double, &phi, &[[0.1, 0.2], [2.5, 0.0]]).unwrap()
        };
        let reference = exact_at(&build_uniform_mesh(&curve, 64, 16).unwrap());
        let e4: f64 = {
            let v = exact_at(&build_uniform_mesh(&curve, 4, 16).unwrap());
            (v[0] - reference[0]).abs().max((v[1] - reference[1]).abs())
        };
        let e8: f64 = {
            let v = exact_at(&build_uniform_mesh(&curve, 8, 16).unwrap());
            (v[0] - reference[0]).abs().max((v[1] - reference[1]).abs())
        };
        assert!(e8 < 1e-13 || e4 / e8 >= 2f64.powi(16), "e4={e4} e8={e8}");
    }

    #[test]
    fn upsampled_density_matches_far_evaluation() {
        let curve = ParametricCurve::ellipse(1.5, 1.0);
        let mesh = build_uniform_mesh(&curve, 10, 16).unwrap();
        let lap = KernelSpec::laplace();
        let phi: Vec<f64> = mesh.nodes().iter().map(|n| n.t.sin() + 0.3 * (3.0 * n.t).cos()).collect();
        let fine = mesh.refine(3).unwrap();
        let up: Vec<f64> = phi.chunks(16).flat_map(|c| lagrange_upsample(c, 3).unwrap()).collect();
        let t = [[0.0, 0.0], [4.0, 1.0]];
        let a = eval_layer_potential(&mesh, &lap, Layer::Double, &phi, &t).unwrap();
        let b = eval_layer_potential(&fine, &lap, Layer::Double, &up, &t).unwrap();
        for k in 0..2 {
            assert!((a[k] - b[k]).abs() < 1e-12);
        }
    }
}
