use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::curve::ParametricCurve;
use crate::geometry::mesh::{ParamSpan, PanelMesh};
use crate::geometry::query::panel_closest;
use crate::kernels::Point;
use crate::quadrature::{child_nodes, gauss_legendre, interpolation_matrix, GlRule};

/// Knobs of the adaptive panel builder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptiveOptions {
    pub q: usize,
    /// Interpolation tolerance for the split test.
    pub eps_a: f64,
    /// Panels with parameter length below `2 eps_l` are never split.
    pub eps_l: f64,
    /// Panel arc length allowed per radius of curvature.
    pub curvature_fraction: f64,
    /// Arc length below which the curvature test always passes; `eps_a` when absent.
    pub curvature_floor: Option<f64>,
    /// Expansion distance per panel length used by the clearance test.
    pub delta_over_l: f64,
    /// Also test clearance of exterior expansion centres.
    pub both_sides: bool,
    pub max_panels: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            q: 16,
            eps_a: 1e-11,
            eps_l: 1e-7,
            curvature_fraction: 1.0,
            curvature_floor: None,
            delta_over_l: 0.25,
            both_sides: true,
            max_panels: 20_000,
        }
    }
}

/// Which admissibility rules a panel violates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Violations {
    pub interpolation: bool,
    pub balance: bool,
    pub curvature: bool,
    pub clearance: bool,
}

impl Violations {
    pub fn any(&self) -> bool {
        self.interpolation || self.balance || self.curvature || self.clearance
    }
}

struct SplitTest<'a> {
    curve: &'a ParametricCurve,
    data: &'a dyn Fn(f64) -> Vec<f64>,
    rule: std::sync::Arc<GlRule>,
    interp: Vec<f64>,
    fine: Vec<f64>,
}

impl<'a> SplitTest<'a> {
    fn new(curve: &'a ParametricCurve, data: &'a dyn Fn(f64) -> Vec<f64>, q: usize) -> Result<Self> {
        let rule = gauss_legendre(q)?;
        let fine = child_nodes(&rule, 2);
        let interp = interpolation_matrix(&rule.nodes, &rule.bary, &fine);
        Ok(Self { curve, data, rule, interp, fine })
    }

    fn sample(&self, t: f64) -> Vec<f64> {
        let x = self.curve.position(t);
        let mut v = vec![x[0], x[1]];
        v.extend((self.data)(t));
        v
    }

    fn interpolation_error(&self, span: ParamSpan) -> f64 {
        let (ta, tb) = (span.t_a(), span.t_b());
        let h = 0.5 * (tb - ta);
        let coarse: Vec<Vec<f64>> =
            self.rule.nodes.iter().map(|s| self.sample(ta + h * (s + 1.0))).collect();
        let q = coarse.len();
        let mut err = 0.0f64;
        for (i, s) in self.fine.iter().enumerate() {
            let exact = self.sample(ta + h * (s + 1.0));
            for (c, e) in exact.iter().enumerate() {
                let v: f64 = (0..q).map(|j| self.interp[i * q + j] * coarse[j][c]).sum();
                err = err.max((v - e).abs());
            }
        }
        err
    }

    fn arc_and_min_radius(&self, span: ParamSpan) -> (f64, f64) {
        let (ta, tb) = (span.t_a(), span.t_b());
        let h = 0.5 * (tb - ta);
        let mut arc = 0.0;
        let mut kmax = 0.0f64;
        for (s, w) in self.rule.nodes.iter().zip(&self.rule.weights) {
            let t = ta + h * (s + 1.0);
            arc += self.curve.curve_point(t).2 * w * h;
            kmax = kmax.max(self.curve.curvature(t).abs());
        }
        (arc, if kmax > 0.0 { 1.0 / kmax } else { f64::INFINITY })
    }
}

fn touches_corner(curve: &ParametricCurve, span: ParamSpan) -> bool {
    let n = curve.corners().len() as u64;
    (0..=n).any(|k| span.starts_at(k, n) || span.ends_at(k, n))
}

/// Indices of panels whose expansion centres (at `delta_over_l` times the
/// panel length, both sides when requested) come closer than the expansion
/// distance to any other panel. Returns `(panel, offending, distance, required)`.
pub(crate) fn clearance_violations(
    curve: &ParametricCurve,
    spans: &[ParamSpan],
    q: usize,
    delta_over_l: f64,
    both_sides: bool,
) -> Result<Vec<(usize, usize, f64, f64)>> {
    let rule = gauss_legendre(q)?;
    struct Geo {
        ta: f64,
        tb: f64,
        arc: f64,
        ts: Vec<f64>,
        xs: Vec<Point>,
        ns: Vec<Point>,
    }
    let geo: Vec<Geo> = spans
        .iter()
        .map(|s| {
            let (ta, tb) = (s.t_a(), s.t_b());
            let h = 0.5 * (tb - ta);
            let mut g = Geo { ta, tb, arc: 0.0, ts: vec![], xs: vec![], ns: vec![] };
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let t = ta + h * (x + 1.0);
                let (p, n, sp) = curve.curve_point(t);
                g.arc += sp * w * h;
                g.ts.push(t);
                g.xs.push(p);
                g.ns.push(n);
            }
            g
        })
        .collect();
    let sides: &[f64] = if both_sides { &[-1.0, 1.0] } else { &[-1.0] };
    let mut out = Vec::new();
    for (p, gp) in geo.iter().enumerate() {
        let delta = delta_over_l * gp.arc;
        let mut worst: Option<(usize, f64)> = None;
        'centres: for j in 0..q {
            for &side in sides {
                let c = [gp.xs[j][0] + side * delta * gp.ns[j][0], gp.xs[j][1] + side * delta * gp.ns[j][1]];
                for (o, go) in geo.iter().enumerate() {
                    if o == p {
                        continue;
                    }
                    let (k, dn) = go
                        .xs
                        .iter()
                        .enumerate()
                        .map(|(k, x)| (k, (x[0] - c[0]).hypot(x[1] - c[1])))
                        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
                    if dn - 0.5 * go.arc > delta {
                        continue;
                    }
                    let (d, _) = panel_closest(curve, c, go.ta, go.tb, go.ts[k]);
                    if d < delta * (1.0 - 1e-9) && worst.is_none_or(|w| d < w.1) {
                        worst = Some((o, d));
                        if d < 0.5 * delta {
                            break 'centres;
                        }
                    }
                }
            }
        }
        if let Some((o, d)) = worst {
            out.push((p, o, d, delta));
        }
    }
    Ok(out)
}

/// Builds a balanced mesh that resolves the curve and the boundary data.
///
/// Panels are bisected in parameter until each passes the split
/// interpolation test, the curvature test, the neighbour balance test and
/// the expansion clearance test. Panels shorter than `2 eps_l` are left alone;
/// on a smooth curve (or away from corners) that counts as failure.
pub fn build_adaptive_mesh(
    curve: &ParametricCurve,
    boundary_data: &dyn Fn(f64) -> Vec<f64>,
    opts: &AdaptiveOptions,
) -> Result<PanelMesh> {
    if !(opts.eps_a > 0.0) || !(opts.eps_l > 0.0) || !(opts.curvature_fraction > 0.0) {
        return Err(Error::InvalidArgument(
            "adaptive mesh needs positive eps_a, eps_l and curvature_fraction".into(),
        ));
    }
    let test = SplitTest::new(curve, boundary_data, opts.q)?;
    let floor = opts.curvature_floor.unwrap_or(opts.eps_a);
    let ncorner = curve.corners().len() as u64;
    let mut spans: Vec<(ParamSpan, u32)> = if ncorner == 0 {
        vec![(ParamSpan::full(), 0)]
    } else {
        (0..ncorner).map(|k| (ParamSpan::new(k, k + 1, ncorner), 0)).collect()
    };
    let mut local_ok: HashMap<ParamSpan, bool> = HashMap::new();
    loop {
        let n = spans.len();
        let mut split = vec![false; n];
        for (i, &(s, _)) in spans.iter().enumerate() {
            let ok = *local_ok.entry(s).or_insert_with(|| {
                let (arc, rmin) = test.arc_and_min_radius(s);
                test.interpolation_error(s) <= opts.eps_a
                    && (arc <= opts.curvature_fraction * rmin || arc < floor)
            });
            split[i] = !ok;
        }
        for i in 0..n {
            let len = spans[i].0.length();
            for nb in [(i + n - 1) % n, (i + 1) % n] {
                if len > 2.0 * spans[nb].0.length() * (1.0 + 1e-12) {
                    split[i] = true;
                }
            }
        }
        if !split.iter().any(|&s| s) {
            let just: Vec<ParamSpan> = spans.iter().map(|s| s.0).collect();
            for (p, _, _, _) in clearance_violations(curve, &just, opts.q, opts.delta_over_l, opts.both_sides)? {
                split[p] = true;
            }
        }
        let mut changed = false;
        let mut next = Vec::with_capacity(n + 8);
        for (i, &(s, level)) in spans.iter().enumerate() {
            if split[i] && s.length() >= 2.0 * opts.eps_l {
                next.extend(s.split(2).into_iter().map(|c| (c, level + 1)));
                changed = true;
            } else {
                if split[i] && (ncorner == 0 || !touches_corner(curve, s)) {
                    return Err(Error::RefinementFailed { min_length: opts.eps_l });
                }
                next.push((s, level));
            }
        }
        spans = next;
        if spans.len() > opts.max_panels {
            return Err(Error::Numeric(format!(
                "adaptive refinement exceeded {} panels",
                opts.max_panels
            )));
        }
        if !changed {
            break;
        }
    }
    PanelMesh::from_spans(curve, opts.q, &spans)
}

/// Re-checks every admissibility rule on an existing mesh.
pub fn check_admissibility(
    mesh: &PanelMesh,
    boundary_data: &dyn Fn(f64) -> Vec<f64>,
    opts: &AdaptiveOptions,
) -> Result<Vec<Violations>> {
    let curve = mesh.curve();
    let test = SplitTest::new(curve, boundary_data, mesh.q())?;
    let floor = opts.curvature_floor.unwrap_or(opts.eps_a);
    let spans: Vec<ParamSpan> = mesh.panels().iter().map(|p| p.span).collect();
    let n = spans.len();
    let mut out = vec![Violations::default(); n];
    for (i, s) in spans.iter().enumerate() {
        out[i].interpolation = test.interpolation_error(*s) > opts.eps_a;
        let (arc, rmin) = test.arc_and_min_radius(*s);
        out[i].curvature = !(arc <= opts.curvature_fraction * rmin || arc < floor);
        let len = s.length();
        out[i].balance = [(i + n - 1) % n, (i + 1) % n]
            .iter()
            .any(|&nb| len > 2.0 * spans[nb].length() * (1.0 + 1e-12));
    }
    for (p, _, _, _) in clearance_violations(curve, &spans, mesh.q(), opts.delta_over_l, opts.both_sides)? {
        out[p].clearance = true;
    }
    Ok(out)
}

/// Interpolation split-test error of one span, exposed for diagnostics.
pub fn split_test_error(
    curve: &ParametricCurve,
    boundary_data: &dyn Fn(f64) -> Vec<f64>,
    q: usize,
    span: ParamSpan,
) -> Result<f64> {
    Ok(SplitTest::new(curve, boundary_data, q)?.interpolation_error(span))
}
