use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expansion::config::QbkixConfig;
use crate::geometry::{nearest_boundary_point, PanelMesh};
use crate::kernels::{block_mul_add, KernelSpec, Point};

/// Where an expansion is anchored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Anchor {
    /// A boundary node, with the side sign (`-1` interior, `+1` exterior).
    Node { index: usize, side: f64 },
    /// A target near the boundary; the anchor is its nearest boundary point
    /// and the side is the target's side.
    Target(Point),
}

/// Centre, radii and rings of one expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionGeometry {
    pub center: Point,
    /// Boundary point the centre is offset from, and its outward normal.
    pub anchor: Point,
    pub normal: Point,
    pub delta: f64,
    pub r_c: f64,
    pub big_r: f64,
    pub n_p: usize,
    pub n_c: usize,
    pub panel: usize,
    pub panel_length: f64,
}

impl ExpansionGeometry {
    /// Geometry anchored at `x0` with normal `n`, on side `side`.
    pub fn at(x0: Point, n: Point, side: f64, panel: usize, panel_length: f64, cfg: &QbkixConfig) -> Self {
        let delta = cfg.delta_over_l * panel_length;
        let r_c = cfg.rc_over_delta * delta;
        Self {
            center: [x0[0] + side * delta * n[0], x0[1] + side * delta * n[1]],
            anchor: x0,
            normal: n,
            delta,
            r_c,
            big_r: cfg.r_ratio * r_c,
            n_p: cfg.n_p,
            n_c: cfg.n_c,
            panel,
            panel_length,
        }
    }

    fn ring(&self, radius: f64, n: usize) -> Vec<Point> {
        (0..n)
            .map(|j| {
                let th = TAU * j as f64 / n as f64;
                [self.center[0] + radius * th.cos(), self.center[1] + radius * th.sin()]
            })
            .collect()
    }

    pub fn proxy_points(&self) -> Vec<Point> {
        self.ring(self.big_r, self.n_p)
    }

    pub fn check_points(&self) -> Vec<Point> {
        self.ring(self.r_c, self.n_c)
    }

    /// Coordinates scaled so the check circle has unit radius.
    pub fn normalize(&self, x: Point) -> Point {
        [(x[0] - self.center[0]) / self.r_c, (x[1] - self.center[1]) / self.r_c]
    }
}

/// Sets up the expansion for a node or near target.
///
/// Targets farther than `2 delta` from the boundary are refused with
/// [`Error::OutsideEvaluationDisc`]; callers should use smooth quadrature.
pub fn place_expansion(mesh: &PanelMesh, anchor: Anchor, cfg: &QbkixConfig) -> Result<ExpansionGeometry> {
    match anchor {
        Anchor::Node { index, side } => {
            let node = mesh
                .nodes()
                .get(index)
                .ok_or_else(|| Error::InvalidArgument(format!("node index {index} out of range")))?;
            let l = mesh.panels()[node.panel].arc_length;
            Ok(ExpansionGeometry::at(node.x, node.normal, side, node.panel, l, cfg))
        }
        Anchor::Target(x) => {
            let np = nearest_boundary_point(mesh, x);
            let (x0, n, _) = mesh.curve().curve_point(np.t);
            let l = mesh.panels()[np.panel].arc_length;
            let delta = cfg.delta_over_l * l;
            if np.distance > 2.0 * delta {
                return Err(Error::OutsideEvaluationDisc { distance: np.distance, radius: 2.0 * delta });
            }
            let side = if (x[0] - x0[0]) * n[0] + (x[1] - x0[1]) * n[1] > 0.0 { 1.0 } else { -1.0 };
            Ok(ExpansionGeometry::at(x0, n, side, np.panel, l, cfg))
        }
    }
}

/// Truncated SVD of the check-from-proxy matrix, `Q ~ U S V^T`.
#[derive(Debug, Clone)]
pub struct PseudoInverseFactors {
    /// `U_k^T`, `k x (n_c cdim)`.
    pub ut: DMatrix<f64>,
    /// Reciprocals of the retained singular values.
    pub sigma_inv: Vec<f64>,
    /// `V_k`, `(n_p cdim) x k`.
    pub v: DMatrix<f64>,
    /// All singular values in decreasing order.
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub eps_pinv: f64,
    /// Proxy points of the unit-check-radius reference geometry.
    pub proxies: Vec<Point>,
    /// Kernel in reference coordinates.
    pub kernel: KernelSpec,
}

/// Kernel acting on coordinates scaled by `1/r_c`.
///
/// Log kernels differ from their scaled version by a constant (still a
/// solution of the PDE), so the same basis serves every expansion size.
pub(crate) fn reference_kernel(spec: &KernelSpec, r_c: f64) -> KernelSpec {
    match *spec {
        KernelSpec::Yukawa { lambda } => KernelSpec::Yukawa { lambda: lambda * r_c },
        KernelSpec::Helmholtz { omega } => KernelSpec::Helmholtz { omega: omega * r_c },
        other => other,
    }
}

/// Dense matrix of single-layer blocks between points, cdim-blocked.
pub(crate) fn kernel_matrix(spec: &KernelSpec, rows: &[Point], cols: &[Point]) -> DMatrix<f64> {
    let cdim = spec.cdim();
    let mut m = DMatrix::zeros(rows.len() * cdim, cols.len() * cdim);
    for (i, z) in rows.iter().enumerate() {
        for (j, y) in cols.iter().enumerate() {
            let b = spec.single_block([z[0] - y[0], z[1] - y[1]]);
            for a in 0..cdim {
                for c in 0..cdim {
                    m[(i * cdim + a, j * cdim + c)] = b[a * 2 + c];
                }
            }
        }
    }
    m
}

fn unit_ring(radius: f64, n: usize) -> Vec<Point> {
    (0..n)
        .map(|j| {
            let th = TAU * j as f64 / n as f64;
            [radius * th.cos(), radius * th.sin()]
        })
        .collect()
}

/// SVD of `Q_ij = Phi(z_i, y_j)` with the `eps_pinv` cutoff.
pub fn build_check_to_proxy(geometry: &ExpansionGeometry, spec: &KernelSpec, eps_pinv: f64) -> Result<PseudoInverseFactors> {
    spec.validate()?;
    if !(eps_pinv > 0.0 && eps_pinv < 1.0) {
        return Err(Error::InvalidArgument(format!("eps_pinv must be in (0,1), got {eps_pinv}")));
    }
    let kernel = reference_kernel(spec, geometry.r_c);
    let ratio = geometry.big_r / geometry.r_c;
    factor_reference(&kernel, geometry.n_p, geometry.n_c, ratio, eps_pinv)
}

fn factor_reference(kernel: &KernelSpec, n_p: usize, n_c: usize, ratio: f64, eps_pinv: f64) -> Result<PseudoInverseFactors> {
    let proxies = unit_ring(ratio, n_p);
    let checks = unit_ring(1.0, n_c);
    let q = kernel_matrix(kernel, &checks, &proxies);
    let svd = q.try_svd(true, true, f64::EPSILON, 0).ok_or_else(|| Error::Numeric("SVD did not converge".into()))?;
    let u = svd.u.ok_or_else(|| Error::Numeric("SVD returned no U".into()))?;
    let vt = svd.v_t.ok_or_else(|| Error::Numeric("SVD returned no V".into()))?;
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let smax = s[order[0]];
    let keep: Vec<usize> = order.iter().copied().filter(|&i| s[i] > eps_pinv * smax).collect();
    let k = keep.len();
    let mut ut = DMatrix::zeros(k, u.nrows());
    let mut v = DMatrix::zeros(vt.ncols(), k);
    let mut sigma_inv = Vec::with_capacity(k);
    for (c, &i) in keep.iter().enumerate() {
        ut.row_mut(c).copy_from(&u.column(i).transpose());
        v.column_mut(c).copy_from(&vt.row(i).transpose());
        sigma_inv.push(1.0 / s[i]);
    }
    Ok(PseudoInverseFactors {
        ut,
        sigma_inv,
        v,
        singular_values: order.iter().map(|&i| s[i]).collect(),
        rank: k,
        eps_pinv,
        proxies,
        kernel: *kernel,
    })
}

type CacheKey = (String, usize, usize, u64, u64);

fn cache() -> &'static RwLock<HashMap<CacheKey, Arc<PseudoInverseFactors>>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, Arc<PseudoInverseFactors>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Shared factors for an expansion geometry.
///
/// Keyed on the reference kernel (wave/decay parameters times `r_c`, rounded
/// to 12 significant digits), `n_p`, `n_c`, `R/r_c` and `eps_pinv`.
pub fn cached_factors(geometry: &ExpansionGeometry, spec: &KernelSpec, eps_pinv: f64) -> Result<Arc<PseudoInverseFactors>> {
    let kernel = reference_kernel(spec, geometry.r_c);
    let tag = match kernel {
        KernelSpec::Laplace => "laplace".to_string(),
        KernelSpec::Stokes => "stokes".to_string(),
        KernelSpec::Yukawa { lambda } => format!("yukawa:{lambda:.11e}"),
        KernelSpec::Helmholtz { omega } => format!("helmholtz:{omega:.11e}"),
        KernelSpec::Navier { nu, mu } => format!("navier:{nu:e}:{mu:e}"),
    };
    let ratio = geometry.big_r / geometry.r_c;
    // R/r_c goes through a multiply and divide; round away the noise
    let ratio_key = (ratio * 1e12).round() as u64;
    let key = (tag, geometry.n_p, geometry.n_c, ratio_key, eps_pinv.to_bits());
    if let Some(f) = cache().read().expect("factor cache poisoned").get(&key) {
        return Ok(f.clone());
    }
    let canonical = match kernel {
        KernelSpec::Yukawa { .. } | KernelSpec::Helmholtz { .. } => {
            // use the rounded parameter so equal keys give identical factors
            let p: f64 = key.0.split(':').nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.0);
            match kernel {
                KernelSpec::Yukawa { .. } => KernelSpec::Yukawa { lambda: p },
                _ => KernelSpec::Helmholtz { omega: p },
            }
        }
        k => k,
    };
    let f = Arc::new(factor_reference(&canonical, geometry.n_p, geometry.n_c, ratio_key as f64 / 1e12, eps_pinv)?);
    let mut w = cache().write().expect("factor cache poisoned");
    Ok(w.entry(key).or_insert(f).clone())
}

/// Proxy densities `alpha = V (S^+ (U^T u))`, applied in that order.
pub fn solve_equivalent_density(factors: &PseudoInverseFactors, check_values: &[f64]) -> Result<Vec<f64>> {
    if check_values.len() != factors.ut.ncols() {
        return Err(Error::InvalidArgument(format!(
            "expected {} check values, got {}",
            factors.ut.ncols(),
            check_values.len()
        )));
    }
    let u = DVector::from_column_slice(check_values);
    let mut w = &factors.ut * u;
    for (x, s) in w.iter_mut().zip(&factors.sigma_inv) {
        *x *= s;
    }
    Ok((&factors.v * w).as_slice().to_vec())
}

/// `cdim x (n_p cdim)` row block of proxy kernels at a target, row-major.
pub(crate) fn proxy_row(geometry: &ExpansionGeometry, factors: &PseudoInverseFactors, x: Point) -> Vec<f64> {
    let cdim = factors.kernel.cdim();
    let xn = geometry.normalize(x);
    let ncol = factors.proxies.len() * cdim;
    let mut row = vec![0.0; cdim * ncol];
    for (j, y) in factors.proxies.iter().enumerate() {
        let b = factors.kernel.single_block([xn[0] - y[0], xn[1] - y[1]]);
        for a in 0..cdim {
            for c in 0..cdim {
                row[a * ncol + j * cdim + c] = b[a * 2 + c];
            }
        }
    }
    row
}

/// Evaluates the proxy representation at targets within `delta` of the centre.
pub fn evaluate_expansion(
    geometry: &ExpansionGeometry,
    factors: &PseudoInverseFactors,
    alpha: &[f64],
    targets: &[Point],
) -> Result<Vec<f64>> {
    let cdim = factors.kernel.cdim();
    if alpha.len() != factors.proxies.len() * cdim {
        return Err(Error::InvalidArgument("proxy density length mismatch".into()));
    }
    let mut out = Vec::with_capacity(targets.len() * cdim);
    for &x in targets {
        let d = (x[0] - geometry.center[0]).hypot(x[1] - geometry.center[1]);
        if d > geometry.delta * (1.0 + 1e-12) {
            return Err(Error::OutsideEvaluationDisc { distance: d, radius: geometry.delta });
        }
        let xn = geometry.normalize(x);
        let mut v = vec![0.0; cdim];
        for (j, y) in factors.proxies.iter().enumerate() {
            let b = factors.kernel.single_block([xn[0] - y[0], xn[1] - y[1]]);
            block_mul_add(cdim, &b, &alpha[j * cdim..(j + 1) * cdim], &mut v);
        }
        out.extend(v);
    }
    Ok(out)
}

/// `E = row (V S^+ U^T)`, the `cdim x (n_c cdim)` map from check values to
/// the expansion value at one target, row-major.
pub(crate) fn target_functional(geometry: &ExpansionGeometry, factors: &PseudoInverseFactors, x: Point) -> Vec<f64> {
    let cdim = factors.kernel.cdim();
    let row = proxy_row(geometry, factors, x);
    let ncol = factors.v.nrows();
    let k = factors.rank;
    let nchk = factors.ut.ncols();
    let mut out = vec![0.0; cdim * nchk];
    for a in 0..cdim {
        let r = &row[a * ncol..(a + 1) * ncol];
        // (row V) S^+
        let mut rv = vec![0.0; k];
        for (c, rvc) in rv.iter_mut().enumerate() {
            let mut s = 0.0;
            for (j, rj) in r.iter().enumerate() {
                s += rj * factors.v[(j, c)];
            }
            *rvc = s * factors.sigma_inv[c];
        }
        let o = &mut out[a * nchk..(a + 1) * nchk];
        for (c, rvc) in rv.iter().enumerate() {
            for (m, om) in o.iter_mut().enumerate() {
                *om += rvc * factors.ut[(c, m)];
            }
        }
    }
    out
}
