//! Closed-form performance analysis: BER at a fixed threshold, optimal
//! thresholds, the slot-length condition and SINR.

use serde::{Deserialize, Serialize};

use crate::channel::{time_to_peak, ChannelParams};
use crate::model::{rx_distribution, ModulationParams, NoiseParams, RxDistribution, SlotProbs};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerResult {
    pub p_e: f64,
    /// Error probability given a transmitted 1.
    pub p_e_one: f64,
    /// Error probability given a transmitted 0.
    pub p_e_zero: f64,
    pub threshold_used: f64,
}

/// Conditional received-statistic distributions for every adjacent-bit
/// context, weighted by the bit priors. Build once, evaluate many thresholds.
#[derive(Debug, Clone)]
pub struct BerEvaluator {
    modulation: ModulationParams,
    /// (weight given the current bit, distribution) for current bit 0 and 1.
    given_zero: Vec<(f64, RxDistribution)>,
    given_one: Vec<(f64, RxDistribution)>,
}

impl BerEvaluator {
    pub fn new(probs: &SlotProbs, modulation: &ModulationParams, noise: &NoiseParams) -> Self {
        let nexts: &[bool] = if probs.next_active() {
            &[false, true]
        } else {
            &[false]
        };
        let mut given_zero = Vec::new();
        let mut given_one = Vec::new();
        for prev in [false, true] {
            for &next in nexts {
                let mut w = modulation.prior(prev);
                if probs.next_active() {
                    w *= modulation.prior(next);
                }
                if w == 0.0 {
                    continue;
                }
                given_zero.push((
                    w,
                    rx_distribution(prev, false, next, probs, modulation, noise),
                ));
                given_one.push((
                    w,
                    rx_distribution(prev, true, next, probs, modulation, noise),
                ));
            }
        }
        BerEvaluator {
            modulation: *modulation,
            given_zero,
            given_one,
        }
    }

    pub fn modulation(&self) -> &ModulationParams {
        &self.modulation
    }

    /// BER of a receiver deciding 1 iff the statistic is `>= threshold`.
    pub fn ber(&self, threshold: f64) -> BerResult {
        let p_e_one: f64 = self
            .given_one
            .iter()
            .map(|(w, d)| w * d.prob_below(threshold))
            .sum();
        let p_e_zero: f64 = self
            .given_zero
            .iter()
            .map(|(w, d)| w * d.prob_at_least(threshold))
            .sum();
        let p_e_one = p_e_one.clamp(0.0, 1.0);
        let p_e_zero = p_e_zero.clamp(0.0, 1.0);
        BerResult {
            p_e: self.modulation.prior_zero() * p_e_zero + self.modulation.prior_one * p_e_one,
            p_e_one,
            p_e_zero,
            threshold_used: threshold,
        }
    }

    /// Means of the received statistic given bit 0 and bit 1, neighbours
    /// averaged over their priors.
    pub fn conditional_means(&self) -> (f64, f64) {
        let mean = |v: &[(f64, RxDistribution)]| v.iter().map(|(w, d)| w * d.mean()).sum::<f64>();
        (mean(&self.given_zero), mean(&self.given_one))
    }
}

/// Analytical BER at a fixed threshold.
pub fn ber_fixed(
    threshold: f64,
    probs: &SlotProbs,
    modulation: &ModulationParams,
    noise: &NoiseParams,
) -> Result<BerResult> {
    if threshold.is_nan() {
        return Err(Error::domain("threshold is NaN"));
    }
    Ok(BerEvaluator::new(probs, modulation, noise).ber(threshold))
}

const GOLDEN_TOL: f64 = 1e-3;

/// Threshold in `[0, M]` minimizing BER: unit-step grid, then golden-section
/// refinement around the best grid point. Ties go to the smaller threshold.
pub fn optimal_threshold_search(eval: &BerEvaluator) -> (f64, f64) {
    let m = eval.modulation().molecules_per_one;
    let mut best = (0.0, eval.ber(0.0).p_e);
    for t in 1..=m {
        let t = t as f64;
        let p = eval.ber(t).p_e;
        if p < best.1 {
            best = (t, p);
        }
    }
    let lo = (best.0 - 1.0).max(0.0);
    let hi = (best.0 + 1.0).min(m as f64);
    let refined = golden_section(|t| eval.ber(t).p_e, lo, hi, GOLDEN_TOL);
    let p = eval.ber(refined).p_e;
    if p < best.1 {
        (refined, p)
    } else {
        best
    }
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        c
    } else {
        d
    }
}

/// Gaussian-approximation optimal threshold from the conditional means:
/// the midpoint plus `σ² / (μ1 − μ0) · ln(p0 / p1)`.
pub fn optimal_threshold_closed(
    e_sig0: f64,
    e_isi0: f64,
    e_sig1: f64,
    e_isi1: f64,
    noise: &NoiseParams,
    modulation: &ModulationParams,
) -> Result<f64> {
    let mean0 = e_sig0 + e_isi0;
    let mean1 = e_sig1 + e_isi1;
    let gap = mean1 - mean0;
    if gap == 0.0 {
        return Err(Error::SingularThreshold(mean0));
    }
    let midpoint = (mean0 + mean1) / 2.0;
    let (p0, p1) = (modulation.prior_zero(), modulation.prior_one);
    if p0 == p1 {
        return Ok(midpoint);
    }
    Ok(midpoint + noise.variance() / gap * (p0 / p1).ln())
}

/// [`optimal_threshold_closed`] with the conditional means taken from the
/// channel, neighbours averaged over their priors.
pub fn optimal_threshold_closed_for(
    probs: &SlotProbs,
    modulation: &ModulationParams,
    noise: &NoiseParams,
) -> Result<f64> {
    let m = modulation.m();
    let p1 = modulation.prior_one;
    let isi = m * p1 * (probs.prev + probs.next.unwrap_or(0.0));
    optimal_threshold_closed(0.0, isi, m * probs.signal, isi, noise, modulation)
}

/// Mean optimal threshold `M·(2G(2τ) − G(τ))·f / 2`, where `f` is the ligand
/// factor applied to the absorption probabilities.
pub fn mean_optimal_threshold(
    ch: &ChannelParams,
    modulation: &ModulationParams,
    ligand_factor: f64,
) -> Result<f64> {
    ch.validate()?;
    let tau = ch.slot_length;
    Ok(modulation.m() * (2.0 * ch.cdf(2.0 * tau) - ch.cdf(tau)) * ligand_factor / 2.0)
}

/// True when `τ > r² / 6D`, the necessary condition for expected signal to
/// exceed expected ISI.
pub fn slot_condition(ch: &ChannelParams) -> Result<bool> {
    Ok(ch.slot_length > time_to_peak(ch.distance, ch.diffusion_coefficient)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrResult {
    /// `f64::INFINITY` when both interference and noise power are zero.
    pub gamma_e: f64,
    pub signal_power: f64,
    pub isi_power: f64,
    /// `floor(σ²)`
    pub noise_power: f64,
}

/// Which interference count enters the SINR denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IsiPowerTerm {
    /// Leakage of the next bit into the current slot. Zero for an aligned
    /// receive slot.
    #[default]
    NextBit,
    /// Leakage of the previous bit into the current slot.
    PreviousBit,
}

/// Empirical SINR: mean squared signal count over mean squared ISI count
/// plus `floor(σ²)`.
pub fn sinr(signal_counts: &[u64], isi_counts: &[u64], noise: &NoiseParams) -> Result<SinrResult> {
    if signal_counts.is_empty() {
        return Err(Error::domain("SINR needs at least one slot"));
    }
    if signal_counts.len() != isi_counts.len() {
        return Err(Error::domain(format!(
            "signal and ISI sequences differ in length ({} vs {})",
            signal_counts.len(),
            isi_counts.len()
        )));
    }
    let power =
        |v: &[u64]| v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>() / v.len() as f64;
    Ok(sinr_from_powers(
        power(signal_counts),
        power(isi_counts),
        noise,
    ))
}

pub(crate) fn sinr_from_powers(
    signal_power: f64,
    isi_power: f64,
    noise: &NoiseParams,
) -> SinrResult {
    let noise_power = noise.variance().floor();
    let denom = isi_power + noise_power;
    let gamma_e = if signal_power == 0.0 {
        0.0
    } else if denom == 0.0 {
        f64::INFINITY
    } else {
        signal_power / denom
    };
    SinrResult {
        gamma_e,
        signal_power,
        isi_power,
        noise_power,
    }
}

fn binomial_second_moment(n: f64, p: f64) -> f64 {
    n * p * (1.0 - p) + (n * p).powi(2)
}

/// Expected per-slot signal and ISI powers for i.i.d. bits.
pub fn expected_powers(
    probs: &SlotProbs,
    modulation: &ModulationParams,
    term: IsiPowerTerm,
) -> (f64, f64) {
    let m = modulation.m();
    let p1 = modulation.prior_one;
    let signal = p1 * binomial_second_moment(m, probs.signal);
    let isi = match term {
        IsiPowerTerm::PreviousBit => p1 * binomial_second_moment(m, probs.prev),
        IsiPowerTerm::NextBit => probs
            .next
            .map_or(0.0, |p| p1 * binomial_second_moment(m, p)),
    };
    (signal, isi)
}

/// Noise level at which the expected SINR equals `target_gamma`.
pub fn noise_for_target_sinr(
    probs: &SlotProbs,
    modulation: &ModulationParams,
    term: IsiPowerTerm,
    target_gamma: f64,
) -> Result<NoiseParams> {
    if !(target_gamma > 0.0 && target_gamma.is_finite()) {
        return Err(Error::domain(format!(
            "target SINR must be positive, got {target_gamma}"
        )));
    }
    let (signal, isi) = expected_powers(probs, modulation, term);
    let variance = signal / target_gamma - isi;
    if variance < 0.0 {
        return Err(Error::UnreachableSinr {
            target: target_gamma,
            ceiling: signal / isi,
        });
    }
    NoiseParams::new(variance.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{AbsorptionProfile, LigandParams};

    fn table1_probs() -> SlotProbs {
        let ch = ChannelParams::default();
        let prof = AbsorptionProfile::build(&ch, &LigandParams::default(), 4).unwrap();
        SlotProbs::aligned(&prof)
    }

    #[test]
    fn separated_symbols_have_zero_error() {
        let probs = SlotProbs {
            signal: 1.0,
            prev: 0.0,
            next: None,
        };
        let r = ber_fixed(
            250.0,
            &probs,
            &ModulationParams::default(),
            &NoiseParams::default(),
        )
        .unwrap();
        assert_eq!(r.p_e, 0.0);
    }

    #[test]
    fn threshold_below_everything_decodes_ones() {
        let r = ber_fixed(
            f64::NEG_INFINITY,
            &table1_probs(),
            &ModulationParams::default(),
            &NoiseParams::new(30.0).unwrap(),
        )
        .unwrap();
        assert_eq!((r.p_e_one, r.p_e_zero, r.p_e), (0.0, 1.0, 0.5));
    }

    #[test]
    fn ber_combines_priors() {
        let m = ModulationParams::new(500, 0.3).unwrap();
        let r = ber_fixed(200.0, &table1_probs(), &m, &NoiseParams::new(40.0).unwrap()).unwrap();
        assert!((r.p_e - (0.7 * r.p_e_zero + 0.3 * r.p_e_one)).abs() < 1e-15);
    }

    #[test]
    fn flat_objective_picks_smallest_grid_point() {
        let probs = SlotProbs {
            signal: 0.0,
            prev: 0.0,
            next: None,
        };
        let eval = BerEvaluator::new(
            &probs,
            &ModulationParams::default(),
            &NoiseParams::new(10.0).unwrap(),
        );
        let (t, p) = optimal_threshold_search(&eval);
        assert_eq!(t, 0.0);
        assert_eq!(p, 0.5);
    }

    #[test]
    fn zero_error_plateau_is_interior() {
        let probs = SlotProbs {
            signal: 1.0,
            prev: 0.0,
            next: None,
        };
        let eval = BerEvaluator::new(
            &probs,
            &ModulationParams::default(),
            &NoiseParams::default(),
        );
        let (t, p) = optimal_threshold_search(&eval);
        assert!(t > 0.0 && t < 500.0);
        assert_eq!(p, 0.0);
    }

    #[test]
    fn table1_search_below_midpoint() {
        let m = ModulationParams::default();
        let probs = table1_probs();
        let noise = noise_for_target_sinr(&probs, &m, IsiPowerTerm::NextBit, 10.0).unwrap();
        let (t, _) = optimal_threshold_search(&BerEvaluator::new(&probs, &m, &noise));
        assert!(t < 250.0, "{t}");
    }

    #[test]
    fn closed_form_threshold() {
        let eq = ModulationParams::new(500, 0.5).unwrap();
        let noise = NoiseParams::new(20.0).unwrap();
        assert_eq!(
            optimal_threshold_closed(0.0, 50.0, 350.0, 50.0, &noise, &eq).unwrap(),
            225.0
        );
        let skew = ModulationParams::new(500, 1.0 / 3.0).unwrap();
        let t = optimal_threshold_closed(0.0, 50.0, 350.0, 50.0, &noise, &skew).unwrap();
        assert!((t - 225.792_168_206_354_22).abs() < 1e-10);
        assert!(matches!(
            optimal_threshold_closed(10.0, 5.0, 5.0, 10.0, &noise, &skew),
            Err(Error::SingularThreshold(_))
        ));
    }

    #[test]
    fn mean_optimal_threshold_table1() {
        let t =
            mean_optimal_threshold(&ChannelParams::default(), &ModulationParams::default(), 1.0)
                .unwrap();
        assert!((t - 212.234_605_518_280_4).abs() < 1e-9, "{t}");
        let long = ChannelParams::new(10.0, 4.0, 1e9).unwrap();
        let t = mean_optimal_threshold(&long, &ModulationParams::default(), 1.0).unwrap();
        assert!((t - 250.0).abs() < 0.01);
    }

    #[test]
    fn slot_condition_cases() {
        assert!(slot_condition(&ChannelParams::new(10.0, 4.0, 4.0).unwrap()).unwrap());
        assert!(!slot_condition(&ChannelParams::new(10.0, 20.0, 1.0).unwrap()).unwrap());
        let boundary = ChannelParams::new(10.0, 6.0, 36.0 / 60.0).unwrap();
        assert_eq!(boundary.slot_length, time_to_peak(6.0, 10.0).unwrap());
        assert!(!slot_condition(&boundary).unwrap());
    }

    #[test]
    fn sinr_cases() {
        let n = |s2: f64| NoiseParams::new(s2.sqrt()).unwrap();
        let r = sinr(&[3, 4], &[1, 1], &n(2.9)).unwrap();
        assert!((r.gamma_e - 12.5 / 3.0).abs() < 1e-12);
        assert_eq!(r.noise_power, 2.0);
        assert_eq!(sinr(&[0, 0, 0], &[1, 2, 3], &n(4.0)).unwrap().gamma_e, 0.0);
        assert!((sinr(&[7, 7], &[0, 0], &n(49.0)).unwrap().gamma_e - 1.0).abs() < 1e-12);
        assert_eq!(
            sinr(&[1], &[0], &NoiseParams::default()).unwrap().gamma_e,
            f64::INFINITY
        );
        assert!(sinr(&[], &[], &n(1.0)).is_err());
        assert!(sinr(&[1, 2], &[1], &n(1.0)).is_err());
    }

    #[test]
    fn target_sinr_inversion() {
        let m = ModulationParams::default();
        let probs = SlotProbs {
            signal: 0.8186,
            prev: 0.1214,
            next: None,
        };
        let noise = noise_for_target_sinr(&probs, &m, IsiPowerTerm::PreviousBit, 10.0).unwrap();
        assert!(
            (noise.variance() - 6511.126_341).abs() < 1e-6,
            "{}",
            noise.variance()
        );

        let (sig, isi) = expected_powers(&probs, &m, IsiPowerTerm::PreviousBit);
        let limit =
            noise_for_target_sinr(&probs, &m, IsiPowerTerm::PreviousBit, sig / isi).unwrap();
        assert!(limit.std_dev < 1e-6);
        match noise_for_target_sinr(&probs, &m, IsiPowerTerm::PreviousBit, 2.0 * sig / isi) {
            Err(Error::UnreachableSinr { ceiling, .. }) => {
                assert!((ceiling - sig / isi).abs() < 1e-9)
            }
            other => panic!("{other:?}"),
        }
        // Halving the target below the ISI-limited point doubles the denominator.
        let half =
            noise_for_target_sinr(&probs, &m, IsiPowerTerm::PreviousBit, sig / isi / 2.0).unwrap();
        assert!((isi + half.variance() - 2.0 * isi).abs() < 1e-6);

        let literal = noise_for_target_sinr(&probs, &m, IsiPowerTerm::NextBit, 10.0).unwrap();
        assert!((literal.variance() - sig / 10.0).abs() < 1e-9);
        assert!(noise_for_target_sinr(&probs, &m, IsiPowerTerm::NextBit, 0.0).is_err());
    }
}
