use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geometry::curve::{point_segment_distance, ParametricCurve};
use crate::geometry::mesh::PanelMesh;
use crate::kernels::Point;
use crate::quadrature::gauss_legendre;

/// Closest boundary point to a query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestPoint {
    pub panel: usize,
    pub t: f64,
    pub distance: f64,
    pub point: Point,
}

const NEWTON_ITERS: usize = 8;
const FALLBACK_SAMPLES: usize = 64;

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Newton on `(x - X(t)) . X'(t) = 0` inside `[ta, tb]`; `None` on non-convergence.
fn newton_on_interval(curve: &ParametricCurve, x: Point, t0: f64, ta: f64, tb: f64) -> Option<f64> {
    let mut t = t0;
    for _ in 0..NEWTON_ITERS {
        let p = curve.position(t);
        let d1 = curve.derivative(t);
        let d2 = curve.second_derivative(t);
        let r = [x[0] - p[0], x[1] - p[1]];
        let g = -(r[0] * d1[0] + r[1] * d1[1]);
        let h = d1[0] * d1[0] + d1[1] * d1[1] - (r[0] * d2[0] + r[1] * d2[1]);
        if h <= 0.0 {
            return None;
        }
        let tn = (t - g / h).clamp(ta, tb);
        let step = (tn - t).abs();
        t = tn;
        if step <= 1e-14 * (tb - ta) {
            return Some(t);
        }
    }
    None
}

fn sampled_argmin(curve: &ParametricCurve, x: Point, ta: f64, tb: f64) -> f64 {
    let mut best = (f64::INFINITY, ta);
    for k in 0..=FALLBACK_SAMPLES {
        let t = ta + (tb - ta) * k as f64 / FALLBACK_SAMPLES as f64;
        let d = dist(curve.position(t), x);
        if d < best.0 {
            best = (d, t);
        }
    }
    best.1
}

/// Closest point on one panel, starting from the given guess.
pub(crate) fn panel_closest(curve: &ParametricCurve, x: Point, ta: f64, tb: f64, t0: f64) -> (f64, f64) {
    let t = match newton_on_interval(curve, x, t0, ta, tb) {
        Some(t) => t,
        None => {
            let ts = sampled_argmin(curve, x, ta, tb);
            // polish, keeping the sample if Newton wanders off
            match newton_on_interval(curve, x, ts, ta, tb) {
                Some(t) if dist(curve.position(t), x) <= dist(curve.position(ts), x) => t,
                _ => ts,
            }
        }
    };
    let mut best = (dist(curve.position(t), x), t);
    for te in [ta, tb] {
        let d = dist(curve.position(te), x);
        if d < best.0 {
            best = (d, te);
        }
    }
    best
}

/// Nearest point of the discretised boundary's underlying curve to `x`.
///
/// Nodes prefilter the candidate panels; each candidate is then refined by a
/// local Newton iteration. Ties go to the smallest panel index.
pub fn nearest_boundary_point(mesh: &PanelMesh, x: Point) -> NearestPoint {
    let nodes = mesh.nodes();
    let node_d: Vec<f64> = nodes.iter().map(|n| dist(n.x, x)).collect();
    let dmin = node_d.iter().cloned().fold(f64::INFINITY, f64::min);
    let q = mesh.q();
    let curve = mesh.curve();
    let mut best: Option<NearestPoint> = None;
    for (p, panel) in mesh.panels().iter().enumerate() {
        let s = panel.first_node;
        let (j, dp) = (s..s + q)
            .map(|j| (j, node_d[j]))
            .fold((s, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        if dp > dmin + 0.5 * panel.arc_length {
            continue;
        }
        let (d, t) = panel_closest(curve, x, panel.t_a, panel.t_b, nodes[j].t);
        if best.is_none_or(|b| d < b.distance * (1.0 - 1e-13)) {
            best = Some(NearestPoint { panel: p, t, distance: d, point: curve.position(t) });
        }
    }
    best.expect("mesh has at least one panel")
}

/// Distance from `x` to the continuous curve.
pub fn curve_distance(curve: &ParametricCurve, x: Point) -> f64 {
    let corners = curve.corner_points();
    if !corners.is_empty() {
        let n = corners.len();
        return (0..n)
            .map(|k| point_segment_distance(x, corners[k], corners[(k + 1) % n]))
            .fold(f64::INFINITY, f64::min);
    }
    const S: usize = 256;
    let h = TAU / S as f64;
    let d: Vec<f64> = (0..S).map(|k| dist(curve.position(k as f64 * h), x)).collect();
    let mut best = f64::INFINITY;
    for k in 0..S {
        let (l, r) = (d[(k + S - 1) % S], d[(k + 1) % S]);
        if d[k] <= l && d[k] <= r {
            let t0 = k as f64 * h;
            best = best.min(panel_closest(curve, x, t0 - h, t0 + h, t0).0);
        }
    }
    best
}

fn winding_integrand(curve: &ParametricCurve, x: Point, t: f64) -> f64 {
    let p = curve.position(t);
    let d = curve.derivative(t);
    let r = [p[0] - x[0], p[1] - x[1]];
    (r[0] * d[1] - r[1] * d[0]) / (r[0] * r[0] + r[1] * r[1])
}

fn adaptive_angle(curve: &ParametricCurve, x: Point, a: f64, b: f64, whole: f64, depth: u32) -> f64 {
    let rule = gauss_legendre(16).expect("order 16 is valid");
    let gl = |a: f64, b: f64| -> f64 {
        let h = 0.5 * (b - a);
        rule.nodes
            .iter()
            .zip(&rule.weights)
            .map(|(s, w)| w * winding_integrand(curve, x, a + h * (s + 1.0)))
            .sum::<f64>()
            * h
    };
    let m = 0.5 * (a + b);
    let (l, r) = (gl(a, m), gl(m, b));
    if (l + r - whole).abs() < 1e-9 || depth > 60 {
        l + r
    } else {
        adaptive_angle(curve, x, a, m, l, depth + 1) + adaptive_angle(curve, x, m, b, r, depth + 1)
    }
}

/// Winding-number inside test. Points within `1e-12` of the curve are refused.
pub fn is_inside(curve: &ParametricCurve, x: Point) -> Result<bool> {
    let d = curve_distance(curve, x);
    if d < 1e-12 {
        return Err(Error::OnBoundary { distance: d });
    }
    let corners = curve.corner_points();
    let angle = if !corners.is_empty() {
        let n = corners.len();
        (0..n)
            .map(|k| {
                let a = [corners[k][0] - x[0], corners[k][1] - x[1]];
                let b = [corners[(k + 1) % n][0] - x[0], corners[(k + 1) % n][1] - x[1]];
                (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1])
            })
            .sum::<f64>()
    } else {
        let pieces = 16;
        (0..pieces)
            .map(|k| {
                let a = TAU * k as f64 / pieces as f64;
                let b = TAU * (k + 1) as f64 / pieces as f64;
                adaptive_angle(curve, x, a, b, f64::NAN, 0)
            })
            .sum::<f64>()
    };
    Ok((angle / TAU).round() as i64 == 1)
}
