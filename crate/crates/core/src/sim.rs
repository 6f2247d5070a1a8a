//! Seeded Monte Carlo experiments.
//!
//! Every trial owns a ChaCha8 stream seeded from
//! `derive_seed(master, sweep_index, trial_index)`, so results do not depend
//! on how trials are scheduled across threads. Trial outcomes are collected in
//! index order before being reduced.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{noise_for_target_sinr, sinr_from_powers, IsiPowerTerm, SinrResult};
use crate::channel::AbsorptionProfile;
use crate::config::{Alignment, BitSource, ExperimentConfig, Receiver};
use crate::model::{
    BitSequence, ModulationParams, NoiseParams, SlotComposition, SlotProbs, SlotSampler,
};
use crate::modem::{demod_fixed, AtvReceiver};
use crate::{Error, Result};

/// z-score of a two-sided 95% normal interval.
const Z_95: f64 = 1.959_963_984_540_054;

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sweep point `sweep_index` under `master`. Distinct indices give
/// distinct seeds (the mixer is a bijection).
pub fn point_seed(master: u64, sweep_index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ sweep_index)
}

/// Seed of one trial within a sweep point.
pub fn derive_seed(master: u64, sweep_index: u64, trial_index: u64) -> u64 {
    splitmix64(point_seed(master, sweep_index) ^ trial_index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Channel, noise and receiver of one experiment with every default resolved.
#[derive(Debug, Clone)]
pub struct Setup {
    pub profile: AbsorptionProfile,
    pub probs: SlotProbs,
    pub modulation: ModulationParams,
    pub noise: NoiseParams,
    pub receiver: Receiver,
    pub isi_term: IsiPowerTerm,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let profile = AbsorptionProfile::build(&cfg.channel, &cfg.ligand, cfg.max_offset)?;
        let probs = SlotProbs::from_profile(&profile, cfg.alignment == Alignment::Lagged)?;
        let noise = match (cfg.noise.sigma, cfg.noise.target_sinr) {
            (Some(s), _) => NoiseParams::new(s)?,
            (None, Some(g)) => {
                noise_for_target_sinr(&probs, &cfg.modulation, cfg.sinr_isi_term, g)?
            }
            (None, None) => unreachable!("validated"),
        };
        Ok(Setup {
            profile,
            probs,
            modulation: cfg.modulation,
            noise,
            receiver: cfg.resolve_receiver()?,
            isi_term: cfg.sinr_isi_term,
        })
    }

    fn isi_for_sinr(&self, slot: &SlotComposition) -> u64 {
        match self.isi_term {
            IsiPowerTerm::PreviousBit => slot.isi_prev,
            IsiPowerTerm::NextBit => slot.isi_next,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub ber_empirical: f64,
    /// Half-width of the 95% normal-approximation interval on `ber_empirical`.
    pub ci_halfwidth: f64,
    pub sinr: SinrResult,
    /// Threshold applied at each slot of the first trial (ATV only).
    pub threshold_trace: Vec<f64>,
    /// Threshold after the last slot of the first trial.
    pub final_threshold: f64,
    pub errors_one: u64,
    pub errors_zero: u64,
    pub bits: u64,
    pub trial_bers: Vec<f64>,
    /// Seed of the sweep point this result belongs to.
    pub seed: u64,
    pub noise: NoiseParams,
}

impl SimResult {
    pub fn errors(&self) -> u64 {
        self.errors_one + self.errors_zero
    }
}

#[derive(Debug, Clone, Default)]
struct TrialOutcome {
    errors_one: u64,
    errors_zero: u64,
    signal_sq: f64,
    isi_sq: f64,
    trace: Vec<f64>,
    final_threshold: f64,
}

fn draw_bits(source: BitSource, n: usize, prior_one: f64, rng: &mut ChaCha8Rng) -> BitSequence {
    match source {
        BitSource::Random => BitSequence((0..n).map(|_| rng.random_bool(prior_one)).collect()),
        BitSource::Alternating => BitSequence::alternating(n),
    }
}

fn run_trial(
    setup: &Setup,
    sampler: &SlotSampler,
    cfg: &ExperimentConfig,
    seed: u64,
    keep_trace: bool,
) -> TrialOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits = draw_bits(
        cfg.bits,
        cfg.num_slots,
        setup.modulation.prior_one,
        &mut rng,
    );
    let mut atv = match &setup.receiver {
        Receiver::Atv(c) => Some(AtvReceiver::new(c.clone())),
        Receiver::Fixed(_) => None,
    };
    let mut out = TrialOutcome::default();
    if keep_trace && atv.is_some() {
        out.trace.reserve(bits.len());
    }
    for i in 0..bits.len() {
        let (prev, cur, next) = bits.context(i);
        let slot = sampler.sample(prev, cur, next, &mut rng);
        let n_rx = slot.total();
        let decoded = match (&mut atv, &setup.receiver) {
            (Some(r), _) => {
                if keep_trace {
                    out.trace.push(r.threshold());
                }
                r.receive(n_rx)
            }
            (None, Receiver::Fixed(t)) => demod_fixed(n_rx, *t),
            (None, Receiver::Atv(_)) => unreachable!(),
        };
        if decoded != cur {
            if cur {
                out.errors_one += 1;
            } else {
                out.errors_zero += 1;
            }
        }
        let s = slot.signal_count as f64;
        let isi = setup.isi_for_sinr(&slot) as f64;
        out.signal_sq += s * s;
        out.isi_sq += isi * isi;
    }
    out.final_threshold = match (&atv, &setup.receiver) {
        (Some(r), _) => r.threshold(),
        (None, Receiver::Fixed(t)) => *t,
        (None, Receiver::Atv(_)) => unreachable!(),
    };
    out
}

/// Runs one sweep point. `run_experiment` is point 0.
pub fn run_point(cfg: &ExperimentConfig, sweep_index: u64) -> Result<SimResult> {
    let setup = Setup::new(cfg)?;
    let sampler = SlotSampler::new(&setup.probs, &setup.modulation, &setup.noise)?;
    let outcomes: Vec<TrialOutcome> = (0..cfg.num_trials as u64)
        .into_par_iter()
        .map(|t| {
            run_trial(
                &setup,
                &sampler,
                cfg,
                derive_seed(cfg.seed, sweep_index, t),
                t == 0,
            )
        })
        .collect();

    let slots = cfg.num_slots as u64;
    let bits = slots * cfg.num_trials as u64;
    let mut errors_one = 0;
    let mut errors_zero = 0;
    let mut signal_sq = 0.0;
    let mut isi_sq = 0.0;
    let mut trial_bers = Vec::with_capacity(outcomes.len());
    for o in &outcomes {
        errors_one += o.errors_one;
        errors_zero += o.errors_zero;
        signal_sq += o.signal_sq;
        isi_sq += o.isi_sq;
        trial_bers.push((o.errors_one + o.errors_zero) as f64 / slots as f64);
    }
    let ber = (errors_one + errors_zero) as f64 / bits as f64;
    let first = outcomes.into_iter().next().unwrap_or_default();
    Ok(SimResult {
        ber_empirical: ber,
        ci_halfwidth: Z_95 * (ber * (1.0 - ber) / bits as f64).sqrt(),
        sinr: sinr_from_powers(signal_sq / bits as f64, isi_sq / bits as f64, &setup.noise),
        threshold_trace: first.trace,
        final_threshold: first.final_threshold,
        errors_one,
        errors_zero,
        bits,
        trial_bers,
        seed: point_seed(cfg.seed, sweep_index),
        noise: setup.noise,
    })
}

/// Runs a single experiment; any sweep list is ignored.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SimResult> {
    let mut point = cfg.clone();
    point.sweep.clear();
    run_point(&point, 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// (parameter path, value) for each sweep axis.
    pub coordinates: Vec<(String, f64)>,
    pub config: ExperimentConfig,
    pub result: SimResult,
}

/// Runs every point of the config's sweep, in definition order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let points = cfg.sweep_points()?;
    points
        .into_par_iter()
        .enumerate()
        .map(|(i, (coordinates, config))| {
            let result = run_point(&config, i as u64)?;
            Ok(SweepRow {
                coordinates,
                config,
                result,
            })
        })
        .collect::<Result<Vec<_>>>()
}

/// Builds a rayon pool with `threads` workers (0 = rayon's default).
pub fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))
}
