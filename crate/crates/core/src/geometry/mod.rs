//! Boundary curves, panel meshes and geometric queries.

mod adaptive;
mod curve;
mod mesh;
mod query;

pub use adaptive::{build_adaptive_mesh, check_admissibility, split_test_error, AdaptiveOptions, Violations};
pub(crate) use adaptive::clearance_violations;
pub use curve::{wrap_parameter, CurveShape, ParametricCurve};
pub use mesh::{build_uniform_mesh, check_partition, refine_mesh, Node, Panel, PanelMesh, ParamSpan};
pub use query::{curve_distance, is_inside, nearest_boundary_point, NearestPoint};

use crate::kernels::Point;

pub fn curve_point(curve: &ParametricCurve, t: f64) -> (Point, Point, f64) {
    curve.curve_point(t)
}

pub fn curvature(curve: &ParametricCurve, t: f64) -> f64 {
    curve.curvature(t)
}
