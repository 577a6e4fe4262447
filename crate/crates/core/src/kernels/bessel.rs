//! Integer-order Bessel functions of real positive argument.
//!
//! `J0, J1, Y0, Y1` use a power series for small arguments, Miller's backward
//! recurrence (normalised by `J0 + 2 sum J2k = 1`) together with Neumann series
//! for `Y` in the mid range, and the Hankel asymptotic expansion beyond
//! [`ASYMPTOTIC_SWITCH`]. `K0, K1` use the logarithmic series below 2 and the
//! Steed/Temme continued fraction above. `I0, I1` are only provided in
//! exponentially scaled form, which is what the Wronskian checks need.

use num_complex::Complex64;
use std::f64::consts::{FRAC_2_PI, FRAC_PI_4, PI};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_SWITCH: f64 = 4.0;
const ASYMPTOTIC_SWITCH: f64 = 25.0;
const EPS: f64 = 1e-17;

/// Bessel function of the first kind, order 0.
pub fn j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_SWITCH {
        j_series(0, x)
    } else if x <= ASYMPTOTIC_SWITCH {
        MillerTable::new(x).j(0)
    } else {
        hankel_asymptotic(0, x).re
    }
}

/// Bessel function of the first kind, order 1.
pub fn j1(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let v = if x <= SERIES_SWITCH {
        j_series(1, x)
    } else if x <= ASYMPTOTIC_SWITCH {
        MillerTable::new(x).j(1)
    } else {
        hankel_asymptotic(1, x).re
    };
    sign * v
}

/// Bessel function of the second kind, order 0 (`x > 0`).
pub fn y0(x: f64) -> f64 {
    hankel1_0(x).im
}

/// Bessel function of the second kind, order 1 (`x > 0`).
pub fn y1(x: f64) -> f64 {
    hankel1_1(x).im
}

/// Hankel function of the first kind, order 0: `J0(x) + i Y0(x)` for `x > 0`.
pub fn hankel1_0(x: f64) -> Complex64 {
    debug_assert!(x > 0.0);
    if x <= SERIES_SWITCH {
        let j = j_series(0, x);
        Complex64::new(j, y0_series(x, j))
    } else if x <= ASYMPTOTIC_SWITCH {
        let t = MillerTable::new(x);
        Complex64::new(t.j(0), t.y0())
    } else {
        hankel_asymptotic(0, x)
    }
}

/// Hankel function of the first kind, order 1: `J1(x) + i Y1(x)` for `x > 0`.
pub fn hankel1_1(x: f64) -> Complex64 {
    debug_assert!(x > 0.0);
    if x <= SERIES_SWITCH {
        let j = j_series(1, x);
        Complex64::new(j, y1_series(x, j))
    } else if x <= ASYMPTOTIC_SWITCH {
        let t = MillerTable::new(x);
        Complex64::new(t.j(1), t.y1())
    } else {
        hankel_asymptotic(1, x)
    }
}

// Power series of J_n, n in {0, 1}.
fn j_series(n: u32, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = if n == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + n as f64));
        sum += term;
        if term.abs() <= EPS * sum.abs() {
            break;
        }
        k += 1.0;
    }
    sum
}

// Y0 = (2/pi)(ln(x/2) + gamma) J0 + (2/pi) sum_{k>=1} (-1)^{k+1} H_k (x^2/4)^k / (k!)^2
fn y0_series(x: f64, j0: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut sum = 0.0;
    let mut k = 1.0;
    loop {
        term *= -q / (k * k);
        harmonic += 1.0 / k;
        let add = -term * harmonic;
        sum += add;
        if add.abs() <= EPS * sum.abs().max(1e-300) && k > 2.0 {
            break;
        }
        k += 1.0;
    }
    FRAC_2_PI * (((0.5 * x).ln() + EULER_GAMMA) * j0 + sum)
}

// Y1 = -2/(pi x) + (2/pi) ln(x/2) J1 - (x/(2 pi)) sum_k [psi(k+1) + psi(k+2)] (-x^2/4)^k / (k! (k+1)!)
fn y1_series(x: f64, j1: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut psi_a = -EULER_GAMMA; // psi(k+1)
    let mut psi_b = 1.0 - EULER_GAMMA; // psi(k+2)
    let mut sum = term * (psi_a + psi_b);
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + 1.0));
        psi_a += 1.0 / k;
        psi_b += 1.0 / (k + 1.0);
        let add = term * (psi_a + psi_b);
        sum += add;
        if add.abs() <= EPS * sum.abs() {
            break;
        }
        k += 1.0;
    }
    -FRAC_2_PI / x + FRAC_2_PI * (0.5 * x).ln() * j1 - x / (2.0 * PI) * sum
}

/// Normalised `J_0 .. J_N` from backward recurrence at a fixed argument.
struct MillerTable {
    x: f64,
    j: Vec<f64>,
}

impl MillerTable {
    fn new(x: f64) -> Self {
        let start = (x + 15.0 * x.cbrt() + 30.0) as usize;
        let start = start + (start & 1);
        let mut j = vec![0.0; start + 2];
        j[start] = 1e-30;
        for k in (1..=start).rev() {
            j[k - 1] = (2.0 * k as f64 / x) * j[k] - j[k + 1];
            if j[k - 1].abs() > 1e250 {
                for v in j.iter_mut().skip(k - 1) {
                    *v *= 1e-250;
                }
            }
        }
        let mut norm = j[0];
        let mut k = 2;
        while k <= start {
            norm += 2.0 * j[k];
            k += 2;
        }
        for v in j.iter_mut() {
            *v /= norm;
        }
        Self { x, j }
    }

    fn j(&self, n: usize) -> f64 {
        self.j[n]
    }

    fn y0(&self) -> f64 {
        let mut sum = 0.0;
        let mut k = 1;
        while 2 * k < self.j.len() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * self.j[2 * k] / k as f64;
            k += 1;
        }
        FRAC_2_PI * (((0.5 * self.x).ln() + EULER_GAMMA) * self.j[0]) - 2.0 * FRAC_2_PI * sum
    }

    fn y1(&self) -> f64 {
        let mut sum = 0.0;
        let mut k = 1;
        while 2 * k + 1 < self.j.len() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * (self.j[2 * k - 1] - self.j[2 * k + 1]) / k as f64;
            k += 1;
        }
        FRAC_2_PI * (((0.5 * self.x).ln() + EULER_GAMMA) * self.j[1] - self.j[0] / self.x)
            + FRAC_2_PI * sum
    }
}

// H^{(1)}_n(x) ~ sqrt(2/(pi x)) (P + iQ) e^{i chi}, chi = x - (n/2 + 1/4) pi.
fn hankel_asymptotic(n: u32, x: f64) -> Complex64 {
    let mu = 4.0 * (n * n) as f64;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut k = 1.0;
    let mut last = f64::INFINITY;
    loop {
        let odd = 2.0 * k - 1.0;
        term *= (mu - odd * odd) / (k * 8.0 * x);
        if term.abs() >= last {
            break;
        }
        last = term.abs();
        // a_k / x^k with alternating signs for P (even k) and Q (odd k)
        match (k as u64) % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < EPS {
            break;
        }
        k += 1.0;
    }
    // cos/sin of chi evaluated from cos x, sin x to keep the phase accurate at large x.
    let (s, c) = x.sin_cos();
    let (sp, cp) = if n == 0 {
        (FRAC_PI_4.sin(), FRAC_PI_4.cos())
    } else {
        ((3.0 * FRAC_PI_4).sin(), (3.0 * FRAC_PI_4).cos())
    };
    let cos_chi = c * cp + s * sp;
    let sin_chi = s * cp - c * sp;
    let amp = (FRAC_2_PI / x).sqrt();
    let re = amp * (p * cos_chi - q * sin_chi);
    let im = amp * (p * sin_chi + q * cos_chi);
    Complex64::new(re, im)
}

/// Modified Bessel function of the second kind, order 0 (`x > 0`).
pub fn k0(x: f64) -> f64 {
    if x <= 2.0 {
        k0_series(x)
    } else {
        let (k0e, _) = k_steed(x);
        k0e * (-x).exp()
    }
}

/// Modified Bessel function of the second kind, order 1 (`x > 0`).
pub fn k1(x: f64) -> f64 {
    if x <= 2.0 {
        k1_series(x)
    } else {
        let (_, k1e) = k_steed(x);
        k1e * (-x).exp()
    }
}

/// `e^x K0(x)`.
pub fn k0e(x: f64) -> f64 {
    if x <= 2.0 {
        k0_series(x) * x.exp()
    } else {
        k_steed(x).0
    }
}

/// `e^x K1(x)`.
pub fn k1e(x: f64) -> f64 {
    if x <= 2.0 {
        k1_series(x) * x.exp()
    } else {
        k_steed(x).1
    }
}

fn i_series(n: u32, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = if n == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + n as f64));
        sum += term;
        if term <= EPS * sum {
            break;
        }
        k += 1.0;
    }
    sum
}

fn i_asymptotic_scaled(n: u32, x: f64) -> f64 {
    let mu = 4.0 * (n * n) as f64;
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut k = 1.0;
    let mut last = f64::INFINITY;
    loop {
        let odd = 2.0 * k - 1.0;
        term *= -(mu - odd * odd) / (k * 8.0 * x);
        if term.abs() >= last || term.abs() < EPS {
            break;
        }
        last = term.abs();
        sum += term;
        k += 1.0;
    }
    sum / (2.0 * PI * x).sqrt()
}

/// `e^{-x} I0(x)` for `x >= 0`.
pub fn i0e(x: f64) -> f64 {
    if x <= 30.0 {
        i_series(0, x) * (-x).exp()
    } else {
        i_asymptotic_scaled(0, x)
    }
}

/// `e^{-x} I1(x)` for `x >= 0`.
pub fn i1e(x: f64) -> f64 {
    if x <= 30.0 {
        i_series(1, x) * (-x).exp()
    } else {
        i_asymptotic_scaled(1, x)
    }
}

// K0 = -(ln(x/2) + gamma) I0 + sum_{k>=1} H_k (x^2/4)^k / (k!)^2
fn k0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut sum = 0.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        harmonic += 1.0 / k;
        let add = term * harmonic;
        sum += add;
        if add <= EPS * sum {
            break;
        }
        k += 1.0;
    }
    -((0.5 * x).ln() + EULER_GAMMA) * i_series(0, x) + sum
}

// K1 = 1/x + ln(x/2) I1 - (x/4) sum_k [psi(k+1) + psi(k+2)] (x^2/4)^k / (k! (k+1)!)
fn k1_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut psi_a = -EULER_GAMMA;
    let mut psi_b = 1.0 - EULER_GAMMA;
    let mut sum = psi_a + psi_b;
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + 1.0));
        psi_a += 1.0 / k;
        psi_b += 1.0 / (k + 1.0);
        let add = term * (psi_a + psi_b);
        sum += add;
        if add.abs() <= EPS * sum.abs() {
            break;
        }
        k += 1.0;
    }
    1.0 / x + (0.5 * x).ln() * i_series(1, x) - 0.25 * x * sum
}

// Steed's continued fraction (Temme's CF2 variant) for order 0; returns (e^x K0, e^x K1).
fn k_steed(x: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k0e = (PI / (2.0 * x)).sqrt() / s;
    let k1e = k0e * (x + 0.5 - h) / x;
    (k0e, k1e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logspace(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n)
            .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64))
            .collect()
    }

    // K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt, trapezoid rule (spectrally accurate).
    fn k_integral(nu: f64, x: f64) -> f64 {
        let h = 0.01;
        let mut sum = 0.5 * (-x).exp();
        let mut t: f64 = h;
        loop {
            let v = (-x * t.cosh()).exp() * (nu * t).cosh();
            sum += v;
            if v < 1e-300 || v < 1e-20 * sum {
                break;
            }
            t += h;
        }
        sum * h
    }

    // J_n(x) = (1/pi) int_0^pi cos(n tau - x sin tau) dtau; periodic trapezoid.
    fn j_integral(n: i32, x: f64) -> f64 {
        let m = 64 + (2.0 * x) as usize;
        let h = 2.0 * PI / m as f64;
        let mut sum = 0.0;
        for i in 0..m {
            let tau = i as f64 * h;
            sum += (n as f64 * tau - x * tau.sin()).cos();
        }
        sum * h / (2.0 * PI)
    }

    #[test]
    fn k0_k1_match_integral_representation() {
        for &x in &[1e-3, 0.1, 0.5, 1.0, 1.9, 2.0, 2.1, 3.7, 8.0, 15.0, 40.0] {
            let r0 = k_integral(0.0, x);
            let r1 = k_integral(1.0, x);
            assert!((k0(x) - r0).abs() <= 1e-13 * r0, "K0({x}) = {} vs {r0}", k0(x));
            assert!((k1(x) - r1).abs() <= 1e-13 * r1, "K1({x}) = {} vs {r1}", k1(x));
        }
        // frozen from the integral oracle above
        assert!((k0(2.0) - 0.113_893_872_749_533_43).abs() < 1e-15);
    }

    #[test]
    fn j0_j1_match_integral_representation() {
        for &x in &[1e-4, 0.3, 1.0, 3.9, 4.1, 7.5, 12.0, 24.9, 25.1, 60.0] {
            assert!((j0(x) - j_integral(0, x)).abs() < 2e-15, "J0({x})");
            assert!((j1(x) - j_integral(1, x)).abs() < 2e-15, "J1({x})");
        }
    }

    #[test]
    fn modified_bessel_wronskian() {
        // I0 K1 + I1 K0 = 1/x
        for x in logspace(100, -8.0, 3.0) {
            let w = i0e(x) * k1e(x) + i1e(x) * k0e(x);
            assert!((w * x - 1.0).abs() < 1e-13, "x = {x}: {}", w * x);
        }
    }

    #[test]
    fn bessel_jy_wronskian() {
        // J1 Y0 - J0 Y1 = 2/(pi x)
        for x in logspace(100, -8.0, 3.0) {
            let h0 = hankel1_0(x);
            let h1 = hankel1_1(x);
            let w = h1.re * h0.im - h0.re * h1.im;
            let expected = 2.0 / (PI * x);
            assert!(((w - expected) / expected).abs() < 1e-13, "x = {x}: {w} vs {expected}");
        }
    }

    #[test]
    fn branches_agree_at_switch_points() {
        let x = SERIES_SWITCH;
        let t = MillerTable::new(x);
        assert!((j_series(0, x) - t.j(0)).abs() < 1e-15);
        assert!((j_series(1, x) - t.j(1)).abs() < 1e-15);
        let x = ASYMPTOTIC_SWITCH;
        let t = MillerTable::new(x);
        let h0 = hankel_asymptotic(0, x);
        let h1 = hankel_asymptotic(1, x);
        for (a, b) in [(t.j(0), h0.re), (t.y0(), h0.im), (t.j(1), h1.re), (t.y1(), h1.im)] {
            assert!((a - b).abs() < 2e-15, "{a} vs {b}");
        }
        let (k0e, k1e) = k_steed(2.0);
        let e = (-2.0f64).exp();
        assert!((k0_series(2.0) - k0e * e).abs() < 1e-14 * k0_series(2.0));
        assert!((k1_series(2.0) - k1e * e).abs() < 1e-14 * k1_series(2.0));
    }

    #[test]
    fn small_argument_limits() {
        let x = 1e-6;
        assert!((k0(x) + (0.5 * x).ln() + EULER_GAMMA).abs() < 1e-11);
        assert!((y0(x) - FRAC_2_PI * ((0.5 * x).ln() + EULER_GAMMA)).abs() < 1e-11);
        assert!((k1(x) * x - 1.0).abs() < 1e-10);
    }
}
