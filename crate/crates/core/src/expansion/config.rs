use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which limit(s) the on-surface operator uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Interior,
    Exterior,
    TwoSided,
}

impl Side {
    /// Signs of the centre offsets along the outward normal.
    pub fn offsets(&self) -> &'static [f64] {
        match self {
            Side::Interior => &[-1.0],
            Side::Exterior => &[1.0],
            Side::TwoSided => &[-1.0, 1.0],
        }
    }
}

/// Expansion parameters. Ratios are relative: `R = r_ratio r_c`,
/// `r_c = rc_over_delta delta`, `delta = delta_over_l L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QbkixConfig {
    pub n_p: usize,
    pub n_c: usize,
    pub r_ratio: f64,
    pub rc_over_delta: f64,
    pub delta_over_l: f64,
    pub beta: usize,
    pub eps_pinv: f64,
    pub side: Side,
    /// Panels closer than this many of their own lengths to a check circle
    /// are upsampled; farther panels use their native rule.
    pub near_panels: f64,
}

impl Default for QbkixConfig {
    fn default() -> Self {
        Self {
            n_p: 32,
            n_c: 64,
            r_ratio: 8.0,
            rc_over_delta: 1.0 / 3.0,
            delta_over_l: 0.25,
            beta: 4,
            eps_pinv: 1e-14,
            side: Side::Interior,
            near_panels: 1.5,
        }
    }
}

impl QbkixConfig {
    pub fn with_side(mut self, side: Side) -> Self {
        self.side = side;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("qbkix: {m}")));
        if self.n_p == 0 {
            return bad("n_p must be positive");
        }
        if self.n_c < self.n_p {
            return bad("n_c must be at least n_p");
        }
        if !(self.r_ratio > 1.0) {
            return bad("R/r_c must exceed 1");
        }
        if !(self.rc_over_delta > 0.0 && self.rc_over_delta < 1.0) {
            return bad("r_c/delta must lie in (0, 1)");
        }
        if !(self.delta_over_l > 0.0) {
            return bad("delta/L must be positive");
        }
        if self.beta == 0 {
            return bad("beta must be at least 1");
        }
        if !(self.eps_pinv > 0.0 && self.eps_pinv < 1.0) {
            return bad("eps_pinv must lie in (0, 1)");
        }
        if !(self.near_panels >= 0.0) {
            return bad("near_panels must be non-negative");
        }
        Ok(())
    }
}

/// Effective rank `2 ln(1/eps) / ln(R/r_c)` of the check-to-proxy matrix.
pub fn effective_rank(eps_pinv: f64, r_ratio: f64) -> f64 {
    2.0 * (1.0 / eps_pinv).ln() / r_ratio.ln()
}

/// Error bound for an expansion evaluated at radius `r` when the field has
/// its nearest singularity at distance `rho` from the centre.
///
/// `rho r <= R^2` is treated as the rough regime.
#[allow(clippy::too_many_arguments)]
pub fn predict_error(r: f64, rho: f64, big_r: f64, r_c: f64, n_p: usize, k: f64, e_c: f64, c: f64) -> f64 {
    let amplification = c * e_c * (r / r_c).powf(0.5 * k);
    if rho * r <= big_r * big_r {
        c * (r / rho).powf(0.5 * k) + amplification
    } else {
        c * (r / big_r).powi(n_p as i32) + amplification
    }
}

/// Output of [`recommend_parameters`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation {
    pub delta_over_l: f64,
    pub k: usize,
    pub r_ratio: f64,
    pub theta: f64,
    pub beta: usize,
    /// Unrounded values of `L/delta`, `k` and `beta`.
    pub raw_l_over_delta: f64,
    pub raw_k: f64,
    pub raw_beta: f64,
    pub config: QbkixConfig,
}

/// Parameter choice for target accuracy `eps` with `q`-point panels.
///
/// `L/delta` is rounded to an integer, `k` to a multiple of four and `beta`
/// to an integer; `R/r_c` follows from the rounded `k`.
pub fn recommend_parameters(eps: f64, q: usize) -> Result<Recommendation> {
    if !(eps > 0.0 && eps < 1.0) || q == 0 {
        return Err(Error::InvalidArgument(format!("need 0 < eps < 1 and q >= 1 (eps={eps}, q={q})")));
    }
    let eps_pinv = QbkixConfig::default().eps_pinv;
    let qf = q as f64;
    let root = eps.powf(1.0 / (2.0 * qf));
    let raw_l_over_delta = 8.0 * root;
    let l_over_delta = raw_l_over_delta.round().max(2.0);
    let delta_over_l = 1.0 / l_over_delta;
    let raw_k = 2.0 * eps.ln() / delta_over_l.ln();
    let k = ((raw_k / 4.0).round() as usize).max(1) * 4;
    let kf = k as f64;
    let r_ratio = eps_pinv.powf(-2.0 / kf);
    let theta = kf / (4.0 * qf + kf);
    let raw_beta = (l_over_delta / 4.0) / ((1.0 - theta) * theta.powf(kf / (4.0 * qf)) * root);
    let beta = (raw_beta.round() as usize).max(1);
    let config = QbkixConfig {
        n_p: k,
        n_c: 2 * k,
        r_ratio,
        rc_over_delta: theta,
        delta_over_l,
        beta,
        eps_pinv,
        ..Default::default()
    };
    Ok(Recommendation { delta_over_l, k, r_ratio, theta, beta, raw_l_over_delta, raw_k, raw_beta, config })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = QbkixConfig::default();
        c.validate().unwrap();
        assert_eq!((c.n_p, c.n_c, c.beta), (32, 64, 4));
        assert_eq!(c.r_ratio, 8.0);
        assert!(QbkixConfig { n_c: 16, ..c.clone() }.validate().is_err());
        assert!(QbkixConfig { r_ratio: 1.0, ..c.clone() }.validate().is_err());
        assert!(QbkixConfig { rc_over_delta: 1.0, ..c.clone() }.validate().is_err());
        assert!(QbkixConfig { eps_pinv: 0.0, ..c }.validate().is_err());
    }

    #[test]
    fn effective_rank_formula() {
        assert!((effective_rank(1e-14, 7.0) - 33.13).abs() < 0.01);
        assert!((effective_rank(1e-14, 8.0) - 31.0).abs() < 0.05);
        assert!((effective_rank(1e-7, 8.0) - 0.5 * effective_rank(1e-14, 8.0)).abs() < 1e-12);
    }

    #[test]
    fn error_model_cases() {
        let (rc, big_r) = (1.0, 8.0);
        // no extrapolation amplification at r = r_c
        let e = predict_error(rc, 1e300, big_r, rc, 32, 31.0, 1e-14, 0.1);
        assert!((e - 0.1 * 1e-14).abs() < 1e-28);
        // decreasing in rho at R/r_c = 8, delta = 3
        let k = 27.0;
        let a = predict_error(3.0, 0.8 * big_r, big_r, rc, 32, k, 1e-14, 0.1);
        let b = predict_error(3.0, big_r, big_r, rc, 32, k, 1e-14, 0.1);
        let c = predict_error(3.0, 2.0 * big_r, big_r, rc, 32, k, 1e-14, 0.1);
        assert!(a > b && b > c);
        // doubling k squares the ratio term
        let t1 = predict_error(3.0, 16.0, big_r, rc, 32, 10.0, 0.0, 1.0);
        let t2 = predict_error(3.0, 16.0, big_r, rc, 32, 20.0, 0.0, 1.0);
        assert!((t2 - t1 * t1).abs() < 1e-15 * t1);
        // smooth regime
        let s = predict_error(3.0, 100.0, big_r, rc, 8, 20.0, 0.0, 1.0);
        assert!((s - (3.0f64 / 8.0).powi(8)).abs() < 1e-15);
    }

    #[test]
    fn recipe_at_reference_setting() {
        let r = recommend_parameters(1e-10, 16).unwrap();
        assert_eq!(r.delta_over_l, 0.25);
        assert_eq!(r.k, 32);
        assert!((r.r_ratio - 7.0).abs() < 0.5);
        assert!((r.theta - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.beta, 5);
    }

    #[test]
    fn recipe_is_monotone_in_tolerance() {
        let tight = recommend_parameters(1e-10, 16).unwrap();
        let loose = recommend_parameters(1e-6, 16).unwrap();
        assert!(loose.k < tight.k);
        assert!(loose.beta <= tight.beta && loose.raw_beta < tight.raw_beta);
        assert!(loose.delta_over_l < tight.delta_over_l);
    }
}
