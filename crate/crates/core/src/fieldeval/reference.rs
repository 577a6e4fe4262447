use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{is_inside, ParametricCurve};
use crate::kernels::{block_mul_add, KernelSpec, Point};

/// Placement of the exterior point sources that generate test data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceLayout {
    pub count: usize,
    /// Source circle radius relative to the curve's bounding radius.
    pub radius_factor: f64,
    pub seed: u64,
}

impl Default for SourceLayout {
    fn default() -> Self {
        Self { count: 40, radius_factor: 1.5, seed: 0 }
    }
}

/// Sum of fundamental solutions placed outside the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub spec: KernelSpec,
    pub sources: Vec<Point>,
    /// `cdim` strengths per source.
    pub strengths: Vec<f64>,
}

impl ReferenceSolution {
    /// Checks that every source is strictly outside `curve`.
    pub fn new(spec: KernelSpec, curve: &ParametricCurve, sources: Vec<Point>, strengths: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if strengths.len() != sources.len() * spec.cdim() {
            return Err(Error::Config(format!(
                "{} strengths for {} sources of a {}-component kernel",
                strengths.len(),
                sources.len(),
                spec.cdim()
            )));
        }
        for y in &sources {
            match is_inside(curve, *y) {
                Ok(false) => {}
                Ok(true) => return Err(Error::Config(format!("reference source {y:?} lies inside the domain"))),
                Err(_) => return Err(Error::Config(format!("reference source {y:?} lies on the boundary"))),
            }
        }
        Ok(Self { spec, sources, strengths })
    }

    pub fn value(&self, x: Point) -> Vec<f64> {
        let cdim = self.spec.cdim();
        let mut out = vec![0.0; cdim];
        for (s, y) in self.sources.iter().enumerate() {
            let b = self.spec.single_block([x[0] - y[0], x[1] - y[1]]);
            block_mul_add(cdim, &b, &self.strengths[s * cdim..(s + 1) * cdim], &mut out);
        }
        out
    }

    /// Pressure of a Stokeslet sum; `None` for other families.
    pub fn pressure(&self, x: Point) -> Option<f64> {
        if self.spec != KernelSpec::Stokes {
            return None;
        }
        let mut p = 0.0;
        for (s, y) in self.sources.iter().enumerate() {
            let r = [x[0] - y[0], x[1] - y[1]];
            let f = &self.strengths[2 * s..2 * s + 2];
            p += (r[0] * f[0] + r[1] * f[1]) / (2.0 * PI * (r[0] * r[0] + r[1] * r[1]));
        }
        Some(p)
    }
}

/// `count` sources evenly spaced on a circle of `radius_factor` times the
/// bounding radius, with strengths uniform in `[-1, 1]` from a seeded stream.
pub fn make_reference(spec: &KernelSpec, curve: &ParametricCurve, layout: &SourceLayout) -> Result<ReferenceSolution> {
    if layout.count == 0 || !(layout.radius_factor > 1.0) {
        return Err(Error::Config("reference sources need count >= 1 and radius_factor > 1".into()));
    }
    let rad = layout.radius_factor * curve.bounding_radius();
    let sources: Vec<Point> = (0..layout.count)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / layout.count as f64;
            [rad * a.cos(), rad * a.sin()]
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(layout.seed);
    let strengths = (0..layout.count * spec.cdim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    ReferenceSolution::new(*spec, curve, sources, strengths)
}

/// `count` points on a circle of half the inner radius.
pub fn interior_test_points(curve: &ParametricCurve, count: usize) -> Vec<Point> {
    let rad = 0.5 * curve.inner_radius();
    (0..count)
        .map(|k| {
            let a = 2.0 * PI * (k as f64 + 0.5) / count as f64;
            [rad * a.cos(), rad * a.sin()]
        })
        .collect()
}

/// Velocity `(y^3, x^3)` of a polynomial Stokes flow with pressure `6xy`.
pub fn cubic_stokes_velocity(x: Point) -> Vec<f64> {
    vec![x[1].powi(3), x[0].powi(3)]
}

pub fn cubic_stokes_pressure(x: Point) -> f64 {
    6.0 * x[0] * x[1]
}
