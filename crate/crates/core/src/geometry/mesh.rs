use std::f64::consts::TAU;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::curve::ParametricCurve;
use crate::kernels::Point;
use crate::quadrature::{gauss_legendre, GlRule};

/// Exact rational parameter interval `[2 pi a/den, 2 pi b/den)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamSpan {
    pub num_a: u64,
    pub num_b: u64,
    pub den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl ParamSpan {
    pub fn new(num_a: u64, num_b: u64, den: u64) -> Self {
        assert!(num_a < num_b && num_b <= den, "invalid span {num_a}/{den}..{num_b}/{den}");
        let g = gcd(gcd(num_a, num_b), den);
        Self { num_a: num_a / g, num_b: num_b / g, den: den / g }
    }

    pub fn full() -> Self {
        Self::new(0, 1, 1)
    }

    pub fn t_a(&self) -> f64 {
        TAU * self.num_a as f64 / self.den as f64
    }

    pub fn t_b(&self) -> f64 {
        TAU * self.num_b as f64 / self.den as f64
    }

    pub fn length(&self) -> f64 {
        TAU * (self.num_b - self.num_a) as f64 / self.den as f64
    }

    /// `k` equal children in increasing order.
    pub fn split(&self, k: u64) -> Vec<ParamSpan> {
        (0..k)
            .map(|j| ParamSpan::new(self.num_a * k + j, self.num_a * k + j + 1, self.den * k))
            .collect()
    }

    /// True when `num/den` (a fraction of the full turn) equals the start.
    pub fn starts_at(&self, num: u64, den: u64) -> bool {
        self.num_a as u128 * den as u128 == num as u128 * self.den as u128
    }

    pub fn ends_at(&self, num: u64, den: u64) -> bool {
        self.num_b as u128 * den as u128 == num as u128 * self.den as u128
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub span: ParamSpan,
    pub t_a: f64,
    pub t_b: f64,
    /// Depth in the bisection tree.
    pub level: u32,
    /// Index of the first node of this panel in the flattened node list.
    pub first_node: usize,
    pub arc_length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub t: f64,
    pub x: Point,
    pub normal: Point,
    pub speed: f64,
    pub weight: f64,
    pub curvature: f64,
    pub panel: usize,
}

impl Node {
    pub fn tangent(&self) -> Point {
        [-self.normal[1], self.normal[0]]
    }
}

/// Ordered panels covering `[0, 2 pi)` with Gauss–Legendre nodes.
#[derive(Debug, Clone)]
pub struct PanelMesh {
    curve: ParametricCurve,
    rule: Arc<GlRule>,
    panels: Vec<Panel>,
    nodes: Vec<Node>,
}

impl PanelMesh {
    /// Builds a mesh from spans that must partition the circle, in order.
    pub fn from_spans(curve: &ParametricCurve, q: usize, spans: &[(ParamSpan, u32)]) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidArgument(format!("need q >= 2 nodes per panel, got {q}")));
        }
        if spans.is_empty() {
            return Err(Error::InvalidArgument("mesh needs at least one panel".into()));
        }
        check_partition(spans.iter().map(|s| s.0))?;
        let rule = gauss_legendre(q)?;
        let mut panels = Vec::with_capacity(spans.len());
        let mut nodes = Vec::with_capacity(spans.len() * q);
        for (p, &(span, level)) in spans.iter().enumerate() {
            let (ta, tb) = (span.t_a(), span.t_b());
            let h = 0.5 * (tb - ta);
            let first_node = nodes.len();
            let mut arc = 0.0;
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let t = ta + h * (x + 1.0);
                let (pos, normal, speed) = curve.curve_point(t);
                let weight = speed * w * h;
                arc += weight;
                nodes.push(Node {
                    t,
                    x: pos,
                    normal,
                    speed,
                    weight,
                    curvature: curve.curvature(t),
                    panel: p,
                });
            }
            panels.push(Panel { span, t_a: ta, t_b: tb, level, first_node, arc_length: arc });
        }
        Ok(Self { curve: curve.clone(), rule, panels, nodes })
    }

    pub fn curve(&self) -> &ParametricCurve {
        &self.curve
    }

    pub fn rule(&self) -> &GlRule {
        &self.rule
    }

    pub fn q(&self) -> usize {
        self.rule.order()
    }

    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn num_panels(&self) -> usize {
        self.panels.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn panel_nodes(&self, p: usize) -> &[Node] {
        let q = self.q();
        let s = self.panels[p].first_node;
        &self.nodes[s..s + q]
    }

    pub fn prev(&self, p: usize) -> usize {
        (p + self.panels.len() - 1) % self.panels.len()
    }

    pub fn next(&self, p: usize) -> usize {
        (p + 1) % self.panels.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }

    pub fn spans(&self) -> Vec<(ParamSpan, u32)> {
        self.panels.iter().map(|p| (p.span, p.level)).collect()
    }

    /// Panels whose start or end parameter is a corner of the curve, as
    /// `(panel, corner index)` pairs.
    pub fn corner_panels(&self) -> Vec<(usize, usize)> {
        let n = self.curve.corners().len() as u64;
        let mut out = Vec::new();
        for (p, panel) in self.panels.iter().enumerate() {
            for k in 0..n {
                if panel.span.starts_at(k, n) || panel.span.ends_at(if k == 0 { n } else { k }, n) {
                    out.push((p, k as usize));
                }
            }
        }
        out
    }

    /// The mesh with every panel split into `beta` equal-parameter children,
    /// nodes evaluated on the curve.
    pub fn refine(&self, beta: usize) -> Result<PanelMesh> {
        if beta == 0 {
            return Err(Error::InvalidArgument("refinement factor must be >= 1".into()));
        }
        if beta == 1 {
            return Ok(self.clone());
        }
        let spans: Vec<(ParamSpan, u32)> = self
            .panels
            .iter()
            .flat_map(|p| p.span.split(beta as u64).into_iter().map(move |s| (s, p.level)))
            .collect();
        PanelMesh::from_spans(&self.curve, self.q(), &spans)
    }
}

/// `M` equal panels with `q` nodes each.
pub fn build_uniform_mesh(curve: &ParametricCurve, m: usize, q: usize) -> Result<PanelMesh> {
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one panel".into()));
    }
    let spans: Vec<(ParamSpan, u32)> =
        (0..m as u64).map(|i| (ParamSpan::new(i, i + 1, m as u64), 0)).collect();
    PanelMesh::from_spans(curve, q, &spans)
}

pub fn refine_mesh(mesh: &PanelMesh, beta: usize) -> Result<PanelMesh> {
    mesh.refine(beta)
}

/// Checks that the spans are contiguous, start at 0, and sum to one full turn.
pub fn check_partition(spans: impl IntoIterator<Item = ParamSpan>) -> Result<()> {
    // running sum a/b in lowest terms
    let (mut a, mut b): (u128, u128) = (0, 1);
    for s in spans {
        if !(a * s.den as u128 == s.num_a as u128 * b) {
            return Err(Error::InvalidArgument(format!(
                "panel spans are not contiguous at {}/{}",
                s.num_a, s.den
            )));
        }
        let (c, d) = (s.num_b as u128, s.den as u128);
        let g = gcd128(c, d);
        (a, b) = (c / g, d / g);
    }
    if a != b {
        return Err(Error::InvalidArgument("panel spans do not cover the full turn".into()));
    }
    Ok(())
}

fn gcd128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
