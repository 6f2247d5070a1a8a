//! Classified model of a received slot: signal + adjacent-bit ISI + noise.
//!
//! The count absorbed in the current receive slot is
//! `total = signal + isi + noise`, where `signal ~ Bin(M·b(i), p_sig)`, the ISI
//! term is the sum of binomial leakage from the previous (and, when the
//! receive slot trails transmission, the next) bit, and `noise ~ N(0, σ²)`.
//! Counts are integers; `total` is real because the noise is continuous.

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channel::AbsorptionProfile;
use crate::special::{binomial_pmf, binomial_pmf_at, convolve, normal_cdf, normal_sf};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationParams {
    /// Molecules released for a `1` bit (M).
    pub molecules_per_one: u64,
    /// Prior probability of a `1` bit.
    #[serde(default = "half")]
    pub prior_one: f64,
}

fn half() -> f64 {
    0.5
}

impl Default for ModulationParams {
    fn default() -> Self {
        ModulationParams {
            molecules_per_one: 500,
            prior_one: 0.5,
        }
    }
}

impl ModulationParams {
    pub fn new(molecules_per_one: u64, prior_one: f64) -> Result<Self> {
        let m = ModulationParams {
            molecules_per_one,
            prior_one,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.molecules_per_one == 0 {
            return Err(Error::domain("molecules_per_one must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.prior_one) {
            return Err(Error::domain(format!(
                "prior_one outside [0, 1]: {}",
                self.prior_one
            )));
        }
        Ok(())
    }

    pub fn prior_zero(&self) -> f64 {
        1.0 - self.prior_one
    }

    pub fn m(&self) -> f64 {
        self.molecules_per_one as f64
    }

    /// Prior weight of a bit value.
    pub fn prior(&self, bit: bool) -> f64 {
        if bit {
            self.prior_one
        } else {
            self.prior_zero()
        }
    }

    pub(crate) fn emitted(&self, bit: bool) -> u64 {
        if bit {
            self.molecules_per_one
        } else {
            0
        }
    }
}

/// Additive Gaussian counting noise.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseParams {
    pub std_dev: f64,
}

impl NoiseParams {
    pub fn new(std_dev: f64) -> Result<Self> {
        if std_dev >= 0.0 && std_dev.is_finite() {
            Ok(NoiseParams { std_dev })
        } else {
            Err(Error::domain(format!(
                "noise std_dev must be finite and >= 0, got {std_dev}"
            )))
        }
    }

    pub fn variance(&self) -> f64 {
        self.std_dev * self.std_dev
    }
}

/// Absorption probabilities that apply to one receive slot.
///
/// With the receive slot aligned to its transmit slot (the usual case) the
/// signal uses offset 0, the previous bit offset 1, and the next bit cannot
/// contribute because its molecules are released after the slot ends. When
/// the receive slot trails transmission by one slot, the signal uses offset 1,
/// the previous bit offset 2 and the next bit offset 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotProbs {
    pub signal: f64,
    pub prev: f64,
    /// `None` when next-bit interference is inactive.
    pub next: Option<f64>,
}

impl SlotProbs {
    pub fn aligned(profile: &AbsorptionProfile) -> Self {
        SlotProbs {
            signal: profile.probabilities()[0],
            prev: profile.probabilities()[1],
            next: None,
        }
    }

    pub fn lagged(profile: &AbsorptionProfile) -> Result<Self> {
        let p = profile.probabilities();
        if p.len() < 3 {
            return Err(Error::config(
                "max_offset",
                "a lagged receive slot needs profile offsets 0..=2",
            ));
        }
        Ok(SlotProbs {
            signal: p[1],
            prev: p[2],
            next: Some(p[0]),
        })
    }

    pub fn from_profile(profile: &AbsorptionProfile, next_active: bool) -> Result<Self> {
        if next_active {
            Self::lagged(profile)
        } else {
            Ok(Self::aligned(profile))
        }
    }

    pub fn next_active(&self) -> bool {
        self.next.is_some()
    }
}

/// One realized receive slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotComposition {
    pub signal_count: u64,
    /// ISI molecules released by the previous bit.
    pub isi_prev: u64,
    /// ISI molecules released by the next bit (zero unless next-bit ISI is active).
    pub isi_next: u64,
    pub noise_value: f64,
}

impl SlotComposition {
    pub fn isi_count(&self) -> u64 {
        self.isi_prev + self.isi_next
    }

    /// The received statistic compared against the threshold.
    pub fn total(&self) -> f64 {
        (self.signal_count + self.isi_count()) as f64 + self.noise_value
    }
}

/// A frame of bits.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitSequence(pub Vec<bool>);

impl BitSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Neighbours of slot `i`; bits outside the frame are 0.
    pub fn context(&self, i: usize) -> (bool, bool, bool) {
        let prev = i.checked_sub(1).is_some_and(|j| self.0[j]);
        let next = self.0.get(i + 1).copied().unwrap_or(false);
        (prev, self.0[i], next)
    }

    /// Alternating `1010…` pattern, useful for debugging.
    pub fn alternating(len: usize) -> Self {
        BitSequence((0..len).map(|i| i % 2 == 0).collect())
    }
}

impl std::str::FromStr for BitSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::domain(format!("not a bit: {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitSequence)
    }
}

/// `P(signal = k0)` for the current bit.
pub fn signal_pmf(k0: u64, bit: bool, modulation: &ModulationParams, p_sig: f64) -> f64 {
    binomial_pmf_at(k0, modulation.emitted(bit), p_sig)
}

/// `P(isi = k1)`: convolution of the previous- and next-bit binomials.
pub fn isi_pmf(
    k1: u64,
    prev_bit: bool,
    next_bit: bool,
    modulation: &ModulationParams,
    p_prev: f64,
    p_next: f64,
    next_active: bool,
) -> f64 {
    let n_prev = modulation.emitted(prev_bit);
    if !next_active {
        return binomial_pmf_at(k1, n_prev, p_prev);
    }
    let n_next = modulation.emitted(next_bit);
    (0..=k1.min(n_prev))
        .map(|h| binomial_pmf_at(h, n_prev, p_prev) * binomial_pmf_at(k1 - h, n_next, p_next))
        .sum()
}

/// Gaussian noise density at `k2`.
pub fn noise_density(k2: f64, noise: &NoiseParams) -> Result<f64> {
    let s = noise.std_dev;
    if !(s > 0.0) {
        return Err(Error::domain("noise density needs std_dev > 0"));
    }
    Ok((-k2 * k2 / (2.0 * s * s)).exp() / ((2.0 * std::f64::consts::PI).sqrt() * s))
}

/// Distribution of the received statistic for one bit context: an integer
/// PMF (signal ⊛ ISI) plus independent `N(0, σ²)` noise.
#[derive(Debug, Clone, PartialEq)]
pub struct RxDistribution {
    pmf: Vec<f64>,
    sigma: f64,
}

impl RxDistribution {
    pub fn new(pmf: Vec<f64>, sigma: f64) -> Self {
        RxDistribution { pmf, sigma }
    }

    /// PMF of the integer part `signal + isi`.
    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        let discrete: f64 = self
            .pmf
            .iter()
            .enumerate()
            .map(|(k, p)| (k as f64 - mean).powi(2) * p)
            .sum();
        discrete + self.sigma * self.sigma
    }

    /// `P(total < x)`
    pub fn prob_below(&self, x: f64) -> f64 {
        if self.sigma > 0.0 {
            self.weighted(|k| normal_cdf((x - k) / self.sigma))
        } else {
            self.weighted(|k| if k < x { 1.0 } else { 0.0 })
        }
    }

    /// `P(total >= x)`
    pub fn prob_at_least(&self, x: f64) -> f64 {
        if self.sigma > 0.0 {
            self.weighted(|k| normal_sf((x - k) / self.sigma))
        } else {
            self.weighted(|k| if k >= x { 1.0 } else { 0.0 })
        }
    }

    /// `P(total <= x)`
    pub fn cdf(&self, x: f64) -> f64 {
        if self.sigma > 0.0 {
            self.prob_below(x)
        } else {
            self.weighted(|k| if k <= x { 1.0 } else { 0.0 })
        }
    }

    fn weighted(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(k, &p)| p * f(k as f64))
            .sum()
    }
}

/// Exact distribution of the received statistic given the three bits.
pub fn rx_distribution(
    prev_bit: bool,
    cur_bit: bool,
    next_bit: bool,
    probs: &SlotProbs,
    modulation: &ModulationParams,
    noise: &NoiseParams,
) -> RxDistribution {
    let signal = binomial_pmf(modulation.emitted(cur_bit), probs.signal);
    let mut pmf = convolve(
        &signal,
        &binomial_pmf(modulation.emitted(prev_bit), probs.prev),
    );
    if let Some(p_next) = probs.next {
        pmf = convolve(&pmf, &binomial_pmf(modulation.emitted(next_bit), p_next));
    }
    RxDistribution::new(pmf, noise.std_dev)
}

/// Pre-built samplers for one channel; reused across slots.
#[derive(Debug, Clone)]
pub struct SlotSampler {
    signal: Binomial,
    prev: Binomial,
    next: Option<Binomial>,
    sigma: f64,
}

impl SlotSampler {
    pub fn new(
        probs: &SlotProbs,
        modulation: &ModulationParams,
        noise: &NoiseParams,
    ) -> Result<Self> {
        let m = modulation.molecules_per_one;
        let binom = |p: f64| Binomial::new(m, p).map_err(|e| Error::domain(e.to_string()));
        Ok(SlotSampler {
            signal: binom(probs.signal)?,
            prev: binom(probs.prev)?,
            next: probs.next.map(binom).transpose()?,
            sigma: noise.std_dev,
        })
    }

    /// Draws one slot. Every call consumes one standard normal variate and
    /// one binomial per emitting bit, independent of the noise level.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        prev: bool,
        cur: bool,
        next: bool,
        rng: &mut R,
    ) -> SlotComposition {
        let signal_count = if cur { self.signal.sample(rng) } else { 0 };
        let isi_prev = if prev { self.prev.sample(rng) } else { 0 };
        let isi_next = match (&self.next, next) {
            (Some(d), true) => d.sample(rng),
            _ => 0,
        };
        let z: f64 = StandardNormal.sample(rng);
        SlotComposition {
            signal_count,
            isi_prev,
            isi_next,
            noise_value: self.sigma * z,
        }
    }
}

/// Draws one slot composition for the given bit context.
pub fn sample_slot<R: Rng + ?Sized>(
    prev_bit: bool,
    cur_bit: bool,
    next_bit: bool,
    probs: &SlotProbs,
    modulation: &ModulationParams,
    noise: &NoiseParams,
    rng: &mut R,
) -> Result<SlotComposition> {
    Ok(SlotSampler::new(probs, modulation, noise)?.sample(prev_bit, cur_bit, next_bit, rng))
}
