use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolveReport {
    pub density: Vec<f64>,
    pub iterations: usize,
    /// Relative residual after each iteration.
    pub residuals: Vec<f64>,
    /// Seconds.
    pub wall_time: f64,
    pub converged: bool,
    /// Eigenvalues `(re, im)` of the final Hessenberg matrix.
    pub ritz_values: Vec<[f64; 2]>,
    /// Effective configuration, as TOML.
    pub config: String,
}

impl SolveReport {
    pub fn final_residual(&self) -> Option<f64> {
        self.residuals.last().copied()
    }

    /// `max |ritz| / min |ritz|`, a cheap condition estimate.
    pub fn ritz_spread(&self) -> Option<f64> {
        let mags: Vec<f64> = self.ritz_values.iter().map(|z| z[0].hypot(z[1])).collect();
        let lo = mags.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = mags.iter().copied().fold(0.0, f64::max);
        (!mags.is_empty() && lo > 0.0).then(|| hi / lo)
    }

    /// Iterations needed to first reach relative residual `tol`.
    pub fn iterations_to(&self, tol: f64) -> Option<usize> {
        self.residuals.iter().position(|&r| r <= tol).map(|k| k + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmresOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 200 }
    }
}

impl GmresOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 1e-15 && self.tol < 1.0) {
            return Err(Error::Config(format!("gmres tol must lie in (1e-15, 1), got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("gmres max_iter must be positive".into()));
        }
        Ok(())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let h = a.hypot(b);
        (a / h, b / h)
    }
}

/// Unrestarted GMRES from a zero initial guess, modified Gram-Schmidt
/// orthogonalisation and Givens rotations.
///
/// On hitting `max_iter` the error carries the report with the best iterate.
pub fn gmres(apply: &dyn Fn(&[f64]) -> Result<Vec<f64>>, rhs: &[f64], opts: &GmresOptions) -> Result<SolveReport> {
    opts.validate()?;
    let start = Instant::now();
    let n = rhs.len();
    let bnorm = norm(rhs);
    let mut report = SolveReport { density: vec![0.0; n], converged: true, ..Default::default() };
    if bnorm == 0.0 {
        report.wall_time = start.elapsed().as_secs_f64();
        return Ok(report);
    }
    let m = opts.max_iter.min(n.max(1));
    let mut basis: Vec<Vec<f64>> = vec![rhs.iter().map(|x| x / bnorm).collect()];
    // column k of the Hessenberg matrix, unrotated, and rotated
    let mut hess: Vec<Vec<f64>> = Vec::new();
    let mut rot: Vec<Vec<f64>> = Vec::new();
    let mut cs: Vec<(f64, f64)> = Vec::new();
    let mut g = vec![bnorm];
    let mut converged = false;
    for k in 0..m {
        let mut w = apply(&basis[k])?;
        if w.len() != n {
            return Err(Error::InvalidArgument(format!("operator returned {} values for {n} unknowns", w.len())));
        }
        let mut h = vec![0.0; k + 2];
        for (i, v) in basis.iter().enumerate() {
            let d: f64 = w.iter().zip(v).map(|(a, b)| a * b).sum();
            h[i] = d;
            for (a, b) in w.iter_mut().zip(v) {
                *a -= d * b;
            }
        }
        let wn = norm(&w);
        h[k + 1] = wn;
        hess.push(h.clone());
        for (i, &(c, s)) in cs.iter().enumerate() {
            let (a, b) = (h[i], h[i + 1]);
            h[i] = c * a + s * b;
            h[i + 1] = -s * a + c * b;
        }
        let (c, s) = givens(h[k], h[k + 1]);
        h[k] = c * h[k] + s * h[k + 1];
        h[k + 1] = 0.0;
        cs.push((c, s));
        g.push(-s * g[k]);
        g[k] *= c;
        rot.push(h);
        let rel = g[k + 1].abs() / bnorm;
        report.residuals.push(rel);
        if rel <= opts.tol || wn == 0.0 {
            converged = rel <= opts.tol;
            break;
        }
        basis.push(w.iter().map(|x| x / wn).collect());
    }
    let k = rot.len();
    // back substitution on the rotated triangle
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for j in i + 1..k {
            s -= rot[j][i] * y[j];
        }
        y[i] = s / rot[i][i];
    }
    for (j, yj) in y.iter().enumerate() {
        for (x, v) in report.density.iter_mut().zip(&basis[j]) {
            *x += yj * v;
        }
    }
    report.iterations = k;
    report.converged = converged;
    report.ritz_values = ritz_values(&hess);
    report.wall_time = start.elapsed().as_secs_f64();
    if !converged {
        let residual = report.final_residual().unwrap_or(1.0);
        return Err(Error::MaxIterations { iterations: k, residual, report: Box::new(report) });
    }
    Ok(report)
}

fn ritz_values(hess: &[Vec<f64>]) -> Vec<[f64; 2]> {
    let k = hess.len();
    if k == 0 {
        return Vec::new();
    }
    let h = DMatrix::from_fn(k, k, |i, j| hess[j].get(i).copied().unwrap_or(0.0));
    schur_eigenvalues(h).unwrap_or_default()
}

/// Eigenvalues `(re, im)` sorted by real then imaginary part; `None` if the
/// Schur iteration fails.
pub(crate) fn schur_eigenvalues(m: DMatrix<f64>) -> Option<Vec<[f64; 2]>> {
    let a = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let mut ev: Vec<[f64; 2]> = a.eigenvalues().ok()?.iter().map(|z| [z.re, z.im]).collect();
    if ev.iter().any(|z| !z[0].is_finite() || !z[1].is_finite()) {
        return None;
    }
    ev.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    Some(ev)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(a: Vec<Vec<f64>>) -> impl Fn(&[f64]) -> Result<Vec<f64>> {
        move |x: &[f64]| Ok(a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect())
    }

    #[test]
    fn identity_in_one_step() {
        let r = gmres(&|x: &[f64]| Ok(x.to_vec()), &[1.0, -2.0, 3.0], &GmresOptions::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert!((r.density[1] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_two_by_two() {
        let op = dense(vec![vec![1.0, 0.0], vec![0.0, 2.0]]);
        let r = gmres(&op, &[1.0, 1.0], &GmresOptions { tol: 1e-14, max_iter: 10 }).unwrap();
        assert!(r.iterations <= 2);
        assert!((r.density[0] - 1.0).abs() < 1e-14 && (r.density[1] - 0.5).abs() < 1e-14);
        let mut ritz = r.ritz_values.clone();
        ritz.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert!((ritz[0][0] - 1.0).abs() < 1e-12 && (ritz[1][0] - 2.0).abs() < 1e-12);
        assert!((r.ritz_spread().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_rhs_is_immediate() {
        let r = gmres(&|x: &[f64]| Ok(x.to_vec()), &[0.0; 4], &GmresOptions::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.residuals.is_empty() && r.density.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn max_iterations_carries_iterate() {
        // cyclic shift: GMRES makes no progress until the last step
        let n = 6;
        let op = |x: &[f64]| Ok((0..x.len()).map(|i| x[(i + 1) % x.len()]).collect::<Vec<_>>());
        let mut b = vec![0.0; n];
        b[0] = 1.0;
        match gmres(&op, &b, &GmresOptions { tol: 1e-12, max_iter: 3 }) {
            Err(Error::MaxIterations { iterations, residual, report }) => {
                assert_eq!(iterations, 3);
                assert_eq!(report.residuals.len(), 3);
                assert!((residual - 1.0).abs() < 1e-12);
                assert!(!report.converged);
            }
            other => panic!("{other:?}"),
        }
        let r = gmres(&op, &b, &GmresOptions { tol: 1e-12, max_iter: 10 }).unwrap();
        assert_eq!(r.iterations, n);
    }

    #[test]
    fn bad_tolerance_rejected() {
        let op = |x: &[f64]| Ok(x.to_vec());
        assert!(matches!(gmres(&op, &[1.0], &GmresOptions { tol: 0.0, max_iter: 5 }), Err(Error::Config(_))));
        assert!(matches!(gmres(&op, &[1.0], &GmresOptions { tol: 1e-6, max_iter: 0 }), Err(Error::Config(_))));
    }

    #[test]
    fn residual_history_is_monotone() {
        let n = 30;
        let a: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 2.0 + i as f64 / n as f64 } else { 0.3 / (1.0 + (i as f64 - j as f64).abs()) }).collect())
            .collect();
        let op = dense(a.clone());
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let r = gmres(&op, &b, &GmresOptions { tol: 1e-12, max_iter: 100 }).unwrap();
        assert!(r.residuals.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        let ax = op(&r.density).unwrap();
        let res = ax.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt() / norm(&b);
        assert!(res < 1e-11, "{res}");
        assert_eq!(r.residuals.len(), r.iterations);
    }
}
