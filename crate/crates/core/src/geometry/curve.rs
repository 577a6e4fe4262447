use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::kernels::Point;

/// Built-in closed curves, counterclockwise and `2 pi`-periodic in `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum CurveShape {
    Circle { r: f64 },
    Ellipse { a: f64, b: f64 },
    /// `X(t) = (r0 + amp cos(freq t)) (cos t, sin t)`.
    Star { r0: f64, amp: f64, freq: u32 },
    /// Axis-aligned square centred at the origin.
    Square {
        side: f64,
        #[serde(default)]
        corner_rounding: f64,
    },
    /// Star-shaped polygon with `points` outer vertices on radius `r_outer`
    /// alternating with inner vertices on radius `r_inner`.
    StarPolygon { points: u32, r_outer: f64, r_inner: f64 },
    /// Arbitrary simple polygon, vertices listed counterclockwise.
    Polygon { vertices: Vec<Point> },
}

/// A closed parametric curve `X(t)`, `t in [0, 2 pi)`.
///
/// Polygons are parametrised piecewise linearly with equal parameter length per
/// side, so corners sit exactly at `t_k = 2 pi k / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricCurve {
    shape: CurveShape,
    vertices: Vec<Point>,
}

impl ParametricCurve {
    pub fn new(shape: CurveShape) -> Result<Self> {
        let vertices = match &shape {
            CurveShape::Circle { r } => {
                positive("circle radius", *r)?;
                Vec::new()
            }
            CurveShape::Ellipse { a, b } => {
                positive("ellipse semi-axis a", *a)?;
                positive("ellipse semi-axis b", *b)?;
                Vec::new()
            }
            CurveShape::Star { r0, amp, freq } => {
                positive("star r0", *r0)?;
                if !(amp.abs() < *r0) || *freq == 0 {
                    return Err(Error::Config(format!(
                        "star requires |amp| < r0 and freq >= 1 (amp={amp}, r0={r0}, freq={freq})"
                    )));
                }
                Vec::new()
            }
            CurveShape::Square { side, corner_rounding } => {
                positive("square side", *side)?;
                if *corner_rounding != 0.0 {
                    return Err(Error::Config(
                        "square corner_rounding other than 0 is not supported".into(),
                    ));
                }
                let h = 0.5 * side;
                vec![[h, -h], [h, h], [-h, h], [-h, -h]]
            }
            CurveShape::StarPolygon { points, r_outer, r_inner } => {
                positive("star polygon r_inner", *r_inner)?;
                if *points < 2 || !(r_outer > r_inner) {
                    return Err(Error::Config(
                        "star polygon needs points >= 2 and r_outer > r_inner".into(),
                    ));
                }
                let n = 2 * *points as usize;
                (0..n)
                    .map(|k| {
                        let th = TAU * k as f64 / n as f64;
                        let r = if k % 2 == 0 { *r_outer } else { *r_inner };
                        [r * th.cos(), r * th.sin()]
                    })
                    .collect()
            }
            CurveShape::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::Config("polygon needs at least 3 vertices".into()));
                }
                let area: f64 = (0..vertices.len())
                    .map(|k| {
                        let a = vertices[k];
                        let b = vertices[(k + 1) % vertices.len()];
                        a[0] * b[1] - a[1] * b[0]
                    })
                    .sum();
                if area <= 0.0 {
                    return Err(Error::Config("polygon vertices must be counterclockwise".into()));
                }
                vertices.clone()
            }
        };
        Ok(Self { shape, vertices })
    }

    pub fn circle(r: f64) -> Self {
        Self::new(CurveShape::Circle { r }).expect("valid circle")
    }

    pub fn ellipse(a: f64, b: f64) -> Self {
        Self::new(CurveShape::Ellipse { a, b }).expect("valid ellipse")
    }

    pub fn star(r0: f64, amp: f64, freq: u32) -> Self {
        Self::new(CurveShape::Star { r0, amp, freq }).expect("valid star")
    }

    pub fn square(side: f64) -> Self {
        Self::new(CurveShape::Square { side, corner_rounding: 0.0 }).expect("valid square")
    }

    pub fn shape(&self) -> &CurveShape {
        &self.shape
    }

    pub fn is_smooth(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Parameters of the corners (empty for smooth curves).
    pub fn corners(&self) -> Vec<f64> {
        let n = self.vertices.len();
        (0..n).map(|k| TAU * k as f64 / n as f64).collect()
    }

    /// Corner positions.
    pub fn corner_points(&self) -> &[Point] {
        &self.vertices
    }

    /// Number of smooth pieces the parameter domain splits into.
    pub fn smooth_pieces(&self) -> usize {
        self.vertices.len().max(1)
    }

    fn segment(&self, t: f64) -> (usize, f64) {
        let n = self.vertices.len();
        let h = TAU / n as f64;
        let t = t.rem_euclid(TAU);
        let k = ((t / h).floor() as usize).min(n - 1);
        (k, (t - k as f64 * h) / h)
    }

    pub fn position(&self, t: f64) -> Point {
        match self.shape {
            CurveShape::Circle { r } => [r * t.cos(), r * t.sin()],
            CurveShape::Ellipse { a, b } => [a * t.cos(), b * t.sin()],
            CurveShape::Star { r0, amp, freq } => {
                let rho = r0 + amp * (freq as f64 * t).cos();
                [rho * t.cos(), rho * t.sin()]
            }
            _ => {
                let (k, s) = self.segment(t);
                let a = self.vertices[k];
                let b = self.vertices[(k + 1) % self.vertices.len()];
                [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
            }
        }
    }

    pub fn derivative(&self, t: f64) -> Point {
        match self.shape {
            CurveShape::Circle { r } => [-r * t.sin(), r * t.cos()],
            CurveShape::Ellipse { a, b } => [-a * t.sin(), b * t.cos()],
            CurveShape::Star { r0, amp, freq } => {
                let f = freq as f64;
                let rho = r0 + amp * (f * t).cos();
                let drho = -amp * f * (f * t).sin();
                let (s, c) = t.sin_cos();
                [drho * c - rho * s, drho * s + rho * c]
            }
            _ => {
                let n = self.vertices.len();
                let (k, _) = self.segment(t);
                let a = self.vertices[k];
                let b = self.vertices[(k + 1) % n];
                let h = TAU / n as f64;
                [(b[0] - a[0]) / h, (b[1] - a[1]) / h]
            }
        }
    }

    pub fn second_derivative(&self, t: f64) -> Point {
        match self.shape {
            CurveShape::Circle { r } => [-r * t.cos(), -r * t.sin()],
            CurveShape::Ellipse { a, b } => [-a * t.cos(), -b * t.sin()],
            CurveShape::Star { r0, amp, freq } => {
                let f = freq as f64;
                let rho = r0 + amp * (f * t).cos();
                let drho = -amp * f * (f * t).sin();
                let d2rho = -amp * f * f * (f * t).cos();
                let (s, c) = t.sin_cos();
                [
                    d2rho * c - 2.0 * drho * s - rho * c,
                    d2rho * s + 2.0 * drho * c - rho * s,
                ]
            }
            _ => [0.0, 0.0],
        }
    }

    /// Position, outward unit normal and speed `|X'(t)|`.
    pub fn curve_point(&self, t: f64) -> (Point, Point, f64) {
        let d = self.derivative(t);
        let speed = d[0].hypot(d[1]);
        // rotate the tangent by -90 degrees
        let normal = [d[1] / speed, -d[0] / speed];
        (self.position(t), normal, speed)
    }

    /// Signed curvature `(X' x X'') / |X'|^3`, positive on a counterclockwise circle.
    pub fn curvature(&self, t: f64) -> f64 {
        let d = self.derivative(t);
        let dd = self.second_derivative(t);
        let speed = d[0].hypot(d[1]);
        (d[0] * dd[1] - d[1] * dd[0]) / (speed * speed * speed)
    }

    /// Largest distance from the origin to the curve.
    pub fn bounding_radius(&self) -> f64 {
        match self.shape {
            CurveShape::Circle { r } => r,
            CurveShape::Ellipse { a, b } => a.max(b),
            CurveShape::Star { r0, amp, .. } => r0 + amp.abs(),
            _ => self.vertices.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max),
        }
    }

    /// Smallest distance from the origin to the curve, a lower bound for the
    /// radius of an origin-centred disc inside the domain (all built-ins are
    /// star-shaped about the origin).
    pub fn inner_radius(&self) -> f64 {
        match self.shape {
            CurveShape::Circle { r } => r,
            CurveShape::Ellipse { a, b } => a.min(b),
            CurveShape::Star { r0, amp, .. } => r0 - amp.abs(),
            _ => {
                let n = self.vertices.len();
                (0..n)
                    .map(|k| {
                        let a = self.vertices[k];
                        let b = self.vertices[(k + 1) % n];
                        point_segment_distance([0.0, 0.0], a, b)
                    })
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must be positive, got {v}")))
    }
}

pub(crate) fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let s = ((ap[0] * ab[0] + ap[1] * ab[1]) / (ab[0] * ab[0] + ab[1] * ab[1])).clamp(0.0, 1.0);
    (ap[0] - s * ab[0]).hypot(ap[1] - s * ab[1])
}

/// `t` reduced to `[0, 2 pi)`.
pub fn wrap_parameter(t: f64) -> f64 {
    let r = t.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}
