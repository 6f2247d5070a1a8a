//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's probability code.

#![allow(dead_code)]

/// erfc by the Maclaurin series of erf; accurate to ~1e-15 for |x| < 3.
pub fn erfc_series(x: f64) -> f64 {
    assert!(x.abs() < 3.0, "series oracle used outside its range");
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    for n in 1..200 {
        term *= -x2 / n as f64;
        let add = term / (2 * n + 1) as f64;
        sum += add;
        if add.abs() < 1e-18 {
            break;
        }
    }
    1.0 - 2.0 / std::f64::consts::PI.sqrt() * sum
}

/// Gaussian upper tail `P(Z >= z)`: series erfc near the centre, statrs in
/// the tails where the absolute value is tiny.
pub fn gauss_sf(z: f64) -> f64 {
    let x = z / std::f64::consts::SQRT_2;
    if x.abs() < 2.5 {
        0.5 * erfc_series(x)
    } else {
        0.5 * statrs::function::erf::erfc(x)
    }
}

/// PMF of the number of absorbed molecules when molecule `i` is absorbed
/// independently with probability `probs[i]`, by enumerating all 2^n outcomes.
pub fn enumerate_counts(probs: &[f64]) -> Vec<f64> {
    let n = probs.len();
    assert!(n <= 26);
    // Neumaier-compensated accumulation per bin; up to 2^24 terms land in a bin.
    let mut sum = vec![0.0f64; n + 1];
    let mut comp = vec![0.0f64; n + 1];
    for mask in 0u32..(1u32 << n) {
        let mut p = 1.0;
        for (i, &q) in probs.iter().enumerate() {
            p *= if mask >> i & 1 == 1 { q } else { 1.0 - q };
        }
        let k = mask.count_ones() as usize;
        let t = sum[k] + p;
        if sum[k].abs() >= p.abs() {
            comp[k] += (sum[k] - t) + p;
        } else {
            comp[k] += (p - t) + sum[k];
        }
        sum[k] = t;
    }
    sum.iter().zip(&comp).map(|(s, c)| s + c).collect()
}

/// Per-molecule absorption probabilities for one slot context.
pub fn molecules(
    m: usize,
    prev: bool,
    cur: bool,
    next: bool,
    p_sig: f64,
    p_prev: f64,
    p_next: Option<f64>,
) -> Vec<f64> {
    let mut v = Vec::new();
    if cur {
        v.extend(std::iter::repeat_n(p_sig, m));
    }
    if prev {
        v.extend(std::iter::repeat_n(p_prev, m));
    }
    if let (Some(p), true) = (p_next, next) {
        v.extend(std::iter::repeat_n(p, m));
    }
    v
}

/// Enumerated count PMFs for all 2·2·2 bit contexts, as ((prev, cur, next), pmf).
pub fn context_pmfs(
    m: usize,
    p_sig: f64,
    p_prev: f64,
    p_next: Option<f64>,
) -> Vec<((bool, bool, bool), Vec<f64>)> {
    let mut out = Vec::new();
    for prev in [false, true] {
        for cur in [false, true] {
            for next in [false, true] {
                let pmf = enumerate_counts(&molecules(m, prev, cur, next, p_sig, p_prev, p_next));
                out.push(((prev, cur, next), pmf));
            }
        }
    }
    out
}

/// Brute-force BER over enumerated contexts with equiprobable bits, Gaussian
/// noise tails via statrs erfc. Returns (p_e, p_e0, p_e1).
pub fn brute_force_ber(
    contexts: &[((bool, bool, bool), Vec<f64>)],
    sigma: f64,
    threshold: f64,
) -> (f64, f64, f64) {
    let mut e0 = 0.0;
    let mut e1 = 0.0;
    let w = 0.25;
    for ((_, cur, _), pmf) in contexts {
        let cur = *cur;
        {
            {
                let mut upper = 0.0;
                for (k, &p) in pmf.iter().enumerate() {
                    let k = k as f64;
                    upper += p * if sigma > 0.0 {
                        gauss_sf((threshold - k) / sigma)
                    } else if k >= threshold {
                        1.0
                    } else {
                        0.0
                    };
                }
                if cur {
                    e1 += w * (1.0 - upper);
                } else {
                    e0 += w * upper;
                }
            }
        }
    }
    (0.5 * e0 + 0.5 * e1, e0, e1)
}

/// Sample variance.
pub fn variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}
