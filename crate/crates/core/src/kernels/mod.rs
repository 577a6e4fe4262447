//! Fundamental solutions, double-layer kernels and their diagonal limits for
//! the Laplace, Yukawa, Helmholtz, Stokes and Navier (elastostatic) equations
//! in two dimensions.
//!
//! Every kernel is also available as a real `cdim x cdim` block ([`Block`]).
//! Helmholtz values `a + ib` are stored as the block `[[a, -b], [b, a]]`, so a
//! complex density sample `(re, im)` is an ordinary real 2-vector and the rest
//! of the crate only has to deal with real arithmetic.

pub mod bessel;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Row-major 2x2 block. Scalar real kernels use entry 0 only.
pub type Block = [f64; 4];

const COINCIDENT: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum KernelSpec {
    Laplace,
    Yukawa { lambda: f64 },
    Helmholtz { omega: f64 },
    Stokes,
    Navier {
        nu: f64,
        #[serde(default = "default_mu")]
        mu: f64,
    },
}

fn default_mu() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    ScalarReal,
    ScalarComplex,
    Matrix2,
}

/// Which layer potential to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Single,
    Double,
    /// `D + i omega S`, Helmholtz only.
    Combined,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelValue {
    Real(f64),
    Complex(Complex64),
    Matrix([[f64; 2]; 2]),
}

impl KernelValue {
    pub fn as_real(&self) -> Option<f64> {
        match *self {
            KernelValue::Real(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_complex(&self) -> Option<Complex64> {
        match *self {
            KernelValue::Complex(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_matrix(&self) -> Option<[[f64; 2]; 2]> {
        match *self {
            KernelValue::Matrix(m) => Some(m),
            _ => None,
        }
    }
}

impl KernelSpec {
    pub fn laplace() -> Self {
        KernelSpec::Laplace
    }

    pub fn yukawa(lambda: f64) -> Self {
        KernelSpec::Yukawa { lambda }
    }

    pub fn helmholtz(omega: f64) -> Self {
        KernelSpec::Helmholtz { omega }
    }

    pub fn stokes() -> Self {
        KernelSpec::Stokes
    }

    pub fn navier(nu: f64) -> Self {
        KernelSpec::Navier { nu, mu: 1.0 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Laplace => "laplace",
            KernelSpec::Yukawa { .. } => "yukawa",
            KernelSpec::Helmholtz { .. } => "helmholtz",
            KernelSpec::Stokes => "stokes",
            KernelSpec::Navier { .. } => "navier",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Yukawa { lambda } if !(lambda > 0.0 && lambda.is_finite()) => {
                Err(Error::Config(format!("Yukawa lambda must be positive, got {lambda}")))
            }
            KernelSpec::Helmholtz { omega } if !(omega > 0.0 && omega.is_finite()) => Err(
                Error::Config(format!("Helmholtz omega must be real and positive, got {omega}")),
            ),
            KernelSpec::Navier { nu, mu } if !(nu < 0.5 && nu > -1.0 && mu > 0.0) => Err(
                Error::Config(format!("Navier requires -1 < nu < 1/2 and mu > 0, got nu={nu}, mu={mu}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn value_kind(&self) -> ValueKind {
        match self {
            KernelSpec::Laplace | KernelSpec::Yukawa { .. } => ValueKind::ScalarReal,
            KernelSpec::Helmholtz { .. } => ValueKind::ScalarComplex,
            KernelSpec::Stokes | KernelSpec::Navier { .. } => ValueKind::Matrix2,
        }
    }

    /// Number of real components per density sample.
    pub fn cdim(&self) -> usize {
        match self.value_kind() {
            ValueKind::ScalarReal => 1,
            _ => 2,
        }
    }

    /// Physical components per sample (Helmholtz counts as one complex scalar).
    pub fn physical_dim(&self) -> usize {
        match self.value_kind() {
            ValueKind::Matrix2 => 2,
            _ => 1,
        }
    }

    /// Whether `Phi(s x, s y)` differs from `Phi(x, y)` by at most an additive
    /// constant, so check-to-proxy factors can be shared across scales.
    pub fn is_scale_invariant(&self) -> bool {
        matches!(self, KernelSpec::Laplace | KernelSpec::Stokes | KernelSpec::Navier { .. })
    }

    /// Dimensionless scale parameter for kernels that are not scale invariant.
    pub fn wave_scale(&self) -> Option<f64> {
        match *self {
            KernelSpec::Yukawa { lambda } => Some(lambda),
            KernelSpec::Helmholtz { omega } => Some(omega),
            _ => None,
        }
    }

    pub fn supports_direct_nystrom(&self) -> bool {
        matches!(self, KernelSpec::Laplace | KernelSpec::Stokes)
    }

    /// Single-layer kernel (the fundamental solution).
    pub fn single_layer(&self, x: Point, y: Point) -> Result<KernelValue> {
        let r = sub(x, y);
        check_distance(r)?;
        Ok(self.to_value(self.single_block(r)))
    }

    /// Double-layer kernel with dipole direction `n_y`.
    pub fn double_layer(&self, x: Point, y: Point, n_y: Point) -> Result<KernelValue> {
        let r = sub(x, y);
        check_distance(r)?;
        Ok(self.to_value(self.double_block(r, n_y)))
    }

    /// `lim_{y -> x} D(x, y)` along the boundary, for the families whose
    /// double-layer kernel is smooth on the curve.
    pub fn double_layer_diagonal(&self, curvature: f64, tangent: Point) -> Result<KernelValue> {
        Ok(self.to_value(self.diagonal_block(curvature, tangent)?))
    }

    pub(crate) fn diagonal_block(&self, curvature: f64, tangent: Point) -> Result<Block> {
        match self {
            KernelSpec::Laplace => Ok([-curvature / (4.0 * PI), 0.0, 0.0, 0.0]),
            KernelSpec::Stokes => {
                let c = -curvature / (2.0 * PI);
                let [t0, t1] = tangent;
                Ok([c * t0 * t0, c * t0 * t1, c * t1 * t0, c * t1 * t1])
            }
            _ => Err(Error::UnsupportedFamily {
                family: self.name(),
                what: "double-layer diagonal limit (kernel is singular on the boundary)",
            }),
        }
    }

    /// Block of the requested layer at separation `r = x - y`.
    #[inline]
    pub(crate) fn layer_block(&self, layer: Layer, r: Point, n: Point) -> Block {
        match layer {
            Layer::Single => self.single_block(r),
            Layer::Double => self.double_block(r, n),
            Layer::Combined => {
                // only valid for Helmholtz; validated by callers
                let omega = match *self {
                    KernelSpec::Helmholtz { omega } => omega,
                    _ => 0.0,
                };
                let d = self.double_block(r, n);
                let s = self.single_block(r);
                // i omega (a + ib) = -omega b + i omega a
                let re = d[0] - omega * s[2];
                let im = d[2] + omega * s[0];
                [re, -im, im, re]
            }
        }
    }

    pub(crate) fn check_layer(&self, layer: Layer) -> Result<()> {
        if layer == Layer::Combined && !matches!(self, KernelSpec::Helmholtz { .. }) {
            return Err(Error::UnsupportedFamily {
                family: self.name(),
                what: "combined-field layer (Helmholtz only)",
            });
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn single_block(&self, r: Point) -> Block {
        let r2 = r[0] * r[0] + r[1] * r[1];
        match *self {
            KernelSpec::Laplace => [-r2.ln() / (4.0 * PI), 0.0, 0.0, 0.0],
            KernelSpec::Yukawa { lambda } => {
                [bessel::k0(lambda * r2.sqrt()) / (2.0 * PI), 0.0, 0.0, 0.0]
            }
            KernelSpec::Helmholtz { omega } => {
                let h = bessel::hankel1_0(omega * r2.sqrt());
                // (i/4) H0 = (-Im H0 + i Re H0)/4
                let re = -0.25 * h.im;
                let im = 0.25 * h.re;
                [re, -im, im, re]
            }
            KernelSpec::Stokes => {
                let c = 1.0 / (4.0 * PI);
                let lg = -0.5 * r2.ln();
                let (a, b, d) = (r[0] * r[0] / r2, r[0] * r[1] / r2, r[1] * r[1] / r2);
                [c * (lg + a), c * b, c * b, c * (lg + d)]
            }
            KernelSpec::Navier { nu, mu } => {
                let c = 1.0 / (8.0 * PI * (1.0 - nu) * mu);
                let lg = -(3.0 - 4.0 * nu) * 0.5 * r2.ln();
                let (a, b, d) = (r[0] * r[0] / r2, r[0] * r[1] / r2, r[1] * r[1] / r2);
                [c * (lg + a), c * b, c * b, c * (lg + d)]
            }
        }
    }

    #[inline]
    pub(crate) fn double_block(&self, r: Point, n: Point) -> Block {
        let r2 = r[0] * r[0] + r[1] * r[1];
        let rn = r[0] * n[0] + r[1] * n[1];
        match *self {
            KernelSpec::Laplace => [rn / (2.0 * PI * r2), 0.0, 0.0, 0.0],
            KernelSpec::Yukawa { lambda } => {
                let d = r2.sqrt();
                [lambda / (2.0 * PI) * rn / d * bessel::k1(lambda * d), 0.0, 0.0, 0.0]
            }
            KernelSpec::Helmholtz { omega } => {
                let d = r2.sqrt();
                let h = bessel::hankel1_1(omega * d);
                let s = 0.25 * omega * rn / d;
                // i s H1
                let re = -s * h.im;
                let im = s * h.re;
                [re, -im, im, re]
            }
            KernelSpec::Stokes => {
                let c = rn / (PI * r2 * r2);
                [c * r[0] * r[0], c * r[0] * r[1], c * r[1] * r[0], c * r[1] * r[1]]
            }
            KernelSpec::Navier { nu, .. } => {
                let c = (1.0 - 2.0 * nu) / (4.0 * PI * (1.0 - nu));
                let e = 2.0 / (1.0 - 2.0 * nu) * rn / (r2 * r2);
                let inv = 1.0 / r2;
                // (<r,n> I + n (x) r - r (x) n)/|r|^2 + e r (x) r
                let a01 = (n[0] * r[1] - r[0] * n[1]) * inv;
                [
                    c * (rn * inv + e * r[0] * r[0]),
                    c * (a01 + e * r[0] * r[1]),
                    c * (-a01 + e * r[1] * r[0]),
                    c * (rn * inv + e * r[1] * r[1]),
                ]
            }
        }
    }

    fn to_value(&self, b: Block) -> KernelValue {
        match self.value_kind() {
            ValueKind::ScalarReal => KernelValue::Real(b[0]),
            ValueKind::ScalarComplex => KernelValue::Complex(Complex64::new(b[0], b[2])),
            ValueKind::Matrix2 => KernelValue::Matrix([[b[0], b[1]], [b[2], b[3]]]),
        }
    }
}

/// Stokes double-layer pressure kernel applied to the dipole direction:
/// `-(1/(pi |r|^2)) (I - 2 r (x) r / |r|^2) n`.
pub fn stokes_pressure(x: Point, y: Point, n_y: Point) -> Result<Point> {
    let r = sub(x, y);
    check_distance(r)?;
    Ok(stokes_pressure_vec(r, n_y))
}

#[inline]
pub(crate) fn stokes_pressure_vec(r: Point, n: Point) -> Point {
    let r2 = r[0] * r[0] + r[1] * r[1];
    let rn = r[0] * n[0] + r[1] * n[1];
    let c = -1.0 / (PI * r2);
    [c * (n[0] - 2.0 * rn * r[0] / r2), c * (n[1] - 2.0 * rn * r[1] / r2)]
}

#[inline]
pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn check_distance(r: Point) -> Result<()> {
    let d = (r[0] * r[0] + r[1] * r[1]).sqrt();
    if d <= COINCIDENT {
        Err(Error::SingularEvaluation { distance: d })
    } else {
        Ok(())
    }
}

/// `y += B x` for a `cdim x cdim` block.
#[inline]
pub(crate) fn block_mul_add(cdim: usize, b: &Block, x: &[f64], y: &mut [f64]) {
    if cdim == 1 {
        y[0] += b[0] * x[0];
    } else {
        y[0] += b[0] * x[0] + b[1] * x[1];
        y[1] += b[2] * x[0] + b[3] * x[1];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [KernelSpec; 5] = [
        KernelSpec::Laplace,
        KernelSpec::Yukawa { lambda: 2.0 },
        KernelSpec::Helmholtz { omega: 2.0 },
        KernelSpec::Stokes,
        KernelSpec::Navier { nu: 0.1, mu: 1.0 },
    ];

    #[test]
    fn trivial_values() {
        let s = KernelSpec::Laplace.single_layer([1.0, 0.0], [0.0, 0.0]).unwrap();
        assert_eq!(s.as_real().unwrap(), 0.0);
        let s = KernelSpec::Stokes.single_layer([1.0, 0.0], [0.0, 0.0]).unwrap();
        let m = s.as_matrix().unwrap();
        assert!((m[0][0] - 1.0 / (4.0 * PI)).abs() < 1e-16);
        assert_eq!([m[0][1], m[1][0], m[1][1]], [0.0, 0.0, 0.0]);
        let d = KernelSpec::Laplace.double_layer([0.0, 1.0], [0.0, 0.0], [1.0, 0.0]).unwrap();
        assert_eq!(d.as_real().unwrap(), 0.0);
        let d = KernelSpec::Laplace.double_layer([1.0, 0.0], [0.0, 0.0], [1.0, 0.0]).unwrap();
        assert!((d.as_real().unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-16);
        let d = KernelSpec::Stokes.double_layer([1.0, 0.0], [0.0, 0.0], [1.0, 0.0]).unwrap();
        let m = d.as_matrix().unwrap();
        assert!((m[0][0] - 1.0 / PI).abs() < 1e-16);
        assert_eq!([m[0][1], m[1][0], m[1][1]], [0.0, 0.0, 0.0]);
    }

    #[test]
    fn yukawa_single_layer_matches_k0() {
        let s = KernelSpec::yukawa(2.0).single_layer([1.0, 0.0], [0.0, 0.0]).unwrap();
        // K0(2) from the integral-representation oracle in bessel::tests
        let expected = 0.113_893_872_749_533_43 / (2.0 * PI);
        assert!((s.as_real().unwrap() - expected).abs() < 1e-16);
    }

    #[test]
    fn coincident_points_are_rejected() {
        for k in ALL {
            assert!(matches!(
                k.single_layer([0.3, 0.2], [0.3, 0.2]),
                Err(Error::SingularEvaluation { .. })
            ));
            assert!(k.double_layer([0.3, 0.2], [0.3, 0.2], [1.0, 0.0]).is_err());
        }
        assert!(stokes_pressure([0.0, 0.0], [0.0, 0.0], [1.0, 0.0]).is_err());
    }

    #[test]
    fn diagonal_limits() {
        let v = KernelSpec::Laplace.double_layer_diagonal(1.0, [0.0, 1.0]).unwrap();
        assert!((v.as_real().unwrap() + 1.0 / (4.0 * PI)).abs() < 1e-16);
        let v = KernelSpec::Stokes.double_layer_diagonal(0.0, [0.0, 1.0]).unwrap();
        assert_eq!(v.as_matrix().unwrap(), [[0.0, 0.0], [0.0, 0.0]]);
        let v = KernelSpec::Stokes.double_layer_diagonal(1.0, [0.0, 1.0]).unwrap();
        let m = v.as_matrix().unwrap();
        assert_eq!([m[0][0], m[0][1], m[1][0]], [0.0, 0.0, 0.0]);
        assert!((m[1][1] + 1.0 / (2.0 * PI)).abs() < 1e-16);
        for k in [ALL[1], ALL[2], ALL[4]] {
            assert!(matches!(
                k.double_layer_diagonal(1.0, [1.0, 0.0]),
                Err(Error::UnsupportedFamily { .. })
            ));
        }
    }

    #[test]
    fn pressure_values() {
        let p = stokes_pressure([1.0, 0.0], [0.0, 0.0], [1.0, 0.0]).unwrap();
        assert!((p[0] - 1.0 / PI).abs() < 1e-16 && p[1] == 0.0);
        let p = stokes_pressure([0.0, 2.0], [0.0, 0.0], [1.0, 0.0]).unwrap();
        assert!((p[0] + 1.0 / (4.0 * PI)).abs() < 1e-16 && p[1].abs() < 1e-16);
    }

    #[test]
    fn diagonal_limit_matches_double_layer_along_circle() {
        // On the unit circle D(x, y) -> -kappa/(4 pi) as y -> x along the curve.
        let x = [1.0, 0.0];
        for k in [KernelSpec::Laplace, KernelSpec::Stokes] {
            let s: f64 = 1e-5;
            let y = [s.cos(), s.sin()];
            let d = k.double_block(sub(x, y), y);
            let lim = k.diagonal_block(1.0, [0.0, 1.0]).unwrap();
            for i in 0..k.cdim() * k.cdim() {
                assert!((d[i] - lim[i]).abs() < 1e-6, "{k:?}");
            }
        }
    }

    fn fd_laplacian(f: impl Fn(Point) -> Block, x: Point, h: f64) -> Block {
        let c = f(x);
        let mut out = [0.0; 4];
        let xp = f([x[0] + h, x[1]]);
        let xm = f([x[0] - h, x[1]]);
        let yp = f([x[0], x[1] + h]);
        let ym = f([x[0], x[1] - h]);
        for i in 0..4 {
            out[i] = (xp[i] + xm[i] + yp[i] + ym[i] - 4.0 * c[i]) / (h * h);
        }
        out
    }

    #[test]
    fn scalar_kernels_solve_their_pdes() {
        let y = [0.1, -0.2];
        let x = [0.7, 0.5];
        let n = [0.6, 0.8];
        let h = 1e-3;
        for (k, shift) in [
            (KernelSpec::Laplace, 0.0),
            (KernelSpec::Yukawa { lambda: 2.0 }, -4.0),
            (KernelSpec::Helmholtz { omega: 2.0 }, 4.0),
        ] {
            for layer in [Layer::Single, Layer::Double] {
                let f = |p: Point| k.layer_block(layer, sub(p, y), n);
                let lap = fd_laplacian(f, x, h);
                let v = f(x);
                for i in [0, 2] {
                    let res = lap[i] + shift * v[i];
                    assert!(res.abs() < 1e-6, "{k:?} {layer:?}: residual {res}");
                }
            }
        }
    }

    #[test]
    fn helmholtz_combined_is_d_plus_i_omega_s() {
        let k = KernelSpec::helmholtz(2.0);
        let r = [0.4, -0.3];
        let n = [0.0, 1.0];
        let c = k.layer_block(Layer::Combined, r, n);
        let d = k.double_block(r, n);
        let s = k.single_block(r);
        let cz = Complex64::new(d[0], d[2]) + Complex64::new(0.0, 2.0) * Complex64::new(s[0], s[2]);
        assert!((c[0] - cz.re).abs() < 1e-15 && (c[2] - cz.im).abs() < 1e-15);
        assert_eq!(c[1], -c[2]);
        assert_eq!(c[3], c[0]);
    }

    // Column-wise vector field u(x) = K(x, y) e_j; returns (Delta u, grad div u, div u).
    fn vector_derivatives(f: &impl Fn(Point) -> Block, x: Point, col: usize, h: f64) -> ([f64; 2], [f64; 2], f64) {
        let u = |p: Point| {
            let b = f(p);
            [b[col], b[2 + col]]
        };
        let div = |p: Point| {
            (u([p[0] + h, p[1]])[0] - u([p[0] - h, p[1]])[0] + u([p[0], p[1] + h])[1]
                - u([p[0], p[1] - h])[1])
                / (2.0 * h)
        };
        let c = u(x);
        let mut lap = [0.0; 2];
        for i in 0..2 {
            lap[i] = (u([x[0] + h, x[1]])[i] + u([x[0] - h, x[1]])[i] + u([x[0], x[1] + h])[i]
                + u([x[0], x[1] - h])[i]
                - 4.0 * c[i])
                / (h * h);
        }
        let gd = [
            (div([x[0] + h, x[1]]) - div([x[0] - h, x[1]])) / (2.0 * h),
            (div([x[0], x[1] + h]) - div([x[0], x[1] - h])) / (2.0 * h),
        ];
        (lap, gd, div(x))
    }

    #[test]
    fn navier_kernels_solve_navier_equation() {
        let nu = 0.1;
        let k = KernelSpec::navier(nu);
        let y = [0.2, 0.1];
        let n = [0.8, -0.6];
        let x = [0.9, 0.7];
        for layer in [Layer::Single, Layer::Double] {
            let f = |p: Point| k.layer_block(layer, sub(p, y), n);
            for col in 0..2 {
                let (lap, gd, _) = vector_derivatives(&f, x, col, 1e-3);
                for i in 0..2 {
                    let res = lap[i] + gd[i] / (1.0 - 2.0 * nu);
                    assert!(res.abs() < 1e-4, "{layer:?} col {col}: {res}");
                }
            }
        }
    }

    #[test]
    fn stokes_double_layer_velocity_and_pressure_satisfy_stokes() {
        let y = [-0.1, 0.3];
        let n = [0.6, -0.8];
        let x = [0.8, 0.9];
        let h = 1e-3;
        let f = |p: Point| KernelSpec::Stokes.double_block(sub(p, y), n);
        for col in 0..2 {
            let (lap, _, div) = vector_derivatives(&f, x, col, h);
            assert!(div.abs() < 1e-6);
            let p = |q: Point| stokes_pressure_vec(sub(q, y), n)[col];
            let gp = [
                (p([x[0] + h, x[1]]) - p([x[0] - h, x[1]])) / (2.0 * h),
                (p([x[0], x[1] + h]) - p([x[0], x[1] - h])) / (2.0 * h),
            ];
            for i in 0..2 {
                assert!((lap[i] - gp[i]).abs() < 1e-4, "col {col}: {} vs {}", lap[i], gp[i]);
            }
        }
    }

    #[test]
    fn stokes_single_layer_is_divergence_free() {
        let y = [0.0, 0.0];
        let f = |p: Point| KernelSpec::Stokes.single_block(sub(p, y));
        for col in 0..2 {
            let (_, _, div) = vector_derivatives(&f, [0.6, -0.7], col, 1e-4);
            assert!(div.abs() < 1e-7);
        }
    }

    #[test]
    fn yukawa_minus_laplace_small_argument_limit() {
        let lambda = 2.0f64;
        let d = 1e-6;
        let yk = KernelSpec::yukawa(lambda).single_block([d, 0.0])[0];
        let lp = KernelSpec::Laplace.single_block([d, 0.0])[0];
        let limit = (-(lambda / 2.0).ln() - bessel::EULER_GAMMA) / (2.0 * PI);
        assert!((yk - lp - limit).abs() < 1e-10);
    }

    #[test]
    fn laplace_double_layer_is_odd() {
        let x = [0.3, -0.4];
        let y = [1.1, 0.2];
        let n = [0.0, 1.0];
        let a = KernelSpec::Laplace.double_block(sub(x, y), n)[0];
        let b = KernelSpec::Laplace.double_block(sub(y, x), n)[0];
        assert_eq!(a, -b);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn single_layer_is_symmetric(ax in -2.0..2.0f64, ay in -2.0..2.0f64, bx in -2.0..2.0f64, by in -2.0..2.0f64) {
                prop_assume!(((ax - bx).powi(2) + (ay - by).powi(2)).sqrt() > 1e-3);
                for k in ALL {
                    let s1 = k.single_block(sub([ax, ay], [bx, by]));
                    let s2 = k.single_block(sub([bx, by], [ax, ay]));
                    // transpose for matrix families; scalar kinds are symmetric entrywise
                    let t = [s2[0], s2[2], s2[1], s2[3]];
                    let cmp = if k.value_kind() == ValueKind::Matrix2 { t } else { s2 };
                    for i in 0..4 {
                        prop_assert!((s1[i] - cmp[i]).abs() <= 1e-14 * (1.0 + s1[i].abs()));
                    }
                }
            }
        }
    }
}
