//! Numerical helpers: error function tails, Gaussian CDFs and binomial PMFs.

use std::f64::consts::SQRT_2;

/// Complementary error function.
#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Standard normal CDF `P(Z <= z)`.
#[inline]
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Standard normal survival function `P(Z > z)`, accurate in the upper tail.
#[inline]
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// Full PMF of `Binomial(trials, p)` as a vector indexed by success count.
///
/// Terms are built in log space from the mode outwards so that `trials` in
/// the thousands neither underflows the interior nor loses the tails.
pub fn binomial_pmf(trials: u64, p: f64) -> Vec<f64> {
    let n = trials as usize;
    if p <= 0.0 {
        let mut v = vec![0.0; n + 1];
        v[0] = 1.0;
        return v;
    }
    if p >= 1.0 {
        let mut v = vec![0.0; n + 1];
        v[n] = 1.0;
        return v;
    }
    let ln_p = p.ln();
    let ln_q = (-p).ln_1p();
    let mut ln_choose = 0.0;
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        if k > 0 {
            ln_choose += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        out.push((ln_choose + k as f64 * ln_p + (n - k) as f64 * ln_q).exp());
    }
    out
}

/// Single PMF value of `Binomial(trials, p)` at `k`; zero outside the support.
pub fn binomial_pmf_at(k: u64, trials: u64, p: f64) -> f64 {
    if k > trials {
        return 0.0;
    }
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if k == trials { 1.0 } else { 0.0 };
    }
    let ln_choose = libm::lgamma(trials as f64 + 1.0)
        - libm::lgamma(k as f64 + 1.0)
        - libm::lgamma((trials - k) as f64 + 1.0);
    (ln_choose + k as f64 * p.ln() + (trials - k) as f64 * (-p).ln_1p()).exp()
}

/// Discrete convolution of two PMFs over non-negative integers.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}
