use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Barycentric interpolation weights for the nodes.
    pub bary: Vec<f64>,
}

impl GlRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }
}

pub const MAX_ORDER: usize = 64;

/// Legendre `P_q(x)` and its derivative by the three-term recurrence.
fn legendre(q: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if q == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=q {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn compute(q: usize) -> GlRule {
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..q.div_ceil(2) {
        // Tricomi initial guess, descending from the right end
        let mut x = (PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(q, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(q, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[q - 1 - i] = x;
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }
    let bary = barycentric_weights(&nodes);
    GlRule { nodes, weights, bary }
}

/// Barycentric weights normalised to unit max magnitude.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w: Vec<f64> = (0..n)
        .map(|j| {
            let mut p = 1.0;
            for k in 0..n {
                if k != j {
                    p *= nodes[j] - nodes[k];
                }
            }
            1.0 / p
        })
        .collect();
    let m = w.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    for v in &mut w {
        *v /= m;
    }
    w
}

/// Cached `q`-point Gauss–Legendre rule, `1 <= q <= 64`.
pub fn gauss_legendre(q: usize) -> Result<Arc<GlRule>> {
    if q == 0 || q > MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "Gauss-Legendre order must be in 1..={MAX_ORDER}, got {q}"
        )));
    }
    static CACHE: OnceLock<Mutex<Vec<Option<Arc<GlRule>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(vec![None; MAX_ORDER + 1]));
    let mut guard = cache.lock().expect("gauss cache poisoned");
    Ok(guard[q].get_or_insert_with(|| Arc::new(compute(q))).clone())
}

/// Interpolation matrix (row-major, `xs.len() x nodes.len()`) from values at
/// `nodes` to points `xs`, by the barycentric formula.
pub fn interpolation_matrix(nodes: &[f64], bary: &[f64], xs: &[f64]) -> Vec<f64> {
    let q = nodes.len();
    let mut m = vec![0.0; xs.len() * q];
    for (i, &x) in xs.iter().enumerate() {
        let row = &mut m[i * q..(i + 1) * q];
        if let Some(j) = nodes.iter().position(|&t| t == x) {
            row[j] = 1.0;
            continue;
        }
        let mut den = 0.0;
        for j in 0..q {
            let c = bary[j] / (x - nodes[j]);
            row[j] = c;
            den += c;
        }
        for v in row.iter_mut() {
            *v /= den;
        }
    }
    m
}

/// Nodes on `[-1, 1]` of the `beta` equal children of the reference panel,
/// each carrying the `q`-point rule, in increasing order.
pub fn child_nodes(rule: &GlRule, beta: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(beta * rule.order());
    for c in 0..beta {
        let a = -1.0 + 2.0 * c as f64 / beta as f64;
        let h = 1.0 / beta as f64;
        for &x in &rule.nodes {
            out.push(a + h * (x + 1.0));
        }
    }
    out
}

/// Barycentric Lagrange upsampling of one panel's `q` values onto the nodes of
/// `beta` equal-parameter children.
pub fn lagrange_upsample(values: &[f64], beta: usize) -> Result<Vec<f64>> {
    let rule = gauss_legendre(values.len())?;
    if beta == 0 {
        return Err(Error::InvalidArgument("upsampling factor must be >= 1".into()));
    }
    if beta == 1 {
        return Ok(values.to_vec());
    }
    let xs = child_nodes(&rule, beta);
    let m = interpolation_matrix(&rule.nodes, &rule.bary, &xs);
    let q = values.len();
    Ok((0..xs.len())
        .map(|i| (0..q).map(|j| m[i * q + j] * values[j]).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_rules() {
        let r = gauss_legendre(1).unwrap();
        assert_eq!(r.nodes, vec![0.0]);
        assert!((r.weights[0] - 2.0).abs() < 1e-15);
        let r = gauss_legendre(2).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((r.nodes[0] + s).abs() < 1e-15 && (r.nodes[1] - s).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15 && (r.weights[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_and_symmetry() {
        for q in 1..=MAX_ORDER {
            let r = gauss_legendre(q).unwrap();
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-14, "q={q} sum={s}");
            for i in 0..q {
                assert!((r.nodes[i] + r.nodes[q - 1 - i]).abs() < 1e-15);
                assert!(r.weights[i] > 0.0);
                if i > 0 {
                    assert!(r.nodes[i] > r.nodes[i - 1]);
                }
            }
        }
        assert!(gauss_legendre(0).is_err());
        assert!(gauss_legendre(65).is_err());
    }

    #[test]
    fn monomials_integrated_exactly() {
        let r = gauss_legendre(16).unwrap();
        let i: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(30)).sum();
        assert!((i - 2.0 / 31.0).abs() < 1e-15);
        for q in [3, 8, 24] {
            let r = gauss_legendre(q).unwrap();
            for d in 0..2 * q {
                let i: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(d as i32)).sum();
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                assert!((i - exact).abs() < 1e-14, "q={q} d={d}");
            }
        }
    }

    #[test]
    fn upsample_constant_and_identity() {
        let v = vec![3.5; 16];
        let u = lagrange_upsample(&v, 4).unwrap();
        assert_eq!(u.len(), 64);
        assert!(u.iter().all(|x| (x - 3.5).abs() < 1e-13));
        let w: Vec<f64> = (0..16).map(|i| (i as f64).sin()).collect();
        assert_eq!(lagrange_upsample(&w, 1).unwrap(), w);
    }

    #[test]
    fn upsample_reproduces_legendre_polynomial() {
        let q = 16;
        let r = gauss_legendre(q).unwrap();
        let vals: Vec<f64> = r.nodes.iter().map(|&x| legendre(q - 1, x).0).collect();
        let up = lagrange_upsample(&vals, 3).unwrap();
        for (x, u) in child_nodes(&r, 3).iter().zip(&up) {
            assert!((legendre(q - 1, *x).0 - u).abs() < 1e-12);
        }
    }
}
