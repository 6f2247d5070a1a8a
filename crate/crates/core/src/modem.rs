//! OOK modulation, fixed-threshold detection and the adaptive threshold
//! variation (ATV) receiver.

use std::collections::VecDeque;

use crate::model::ModulationParams;
use crate::{Error, Result};

/// Molecules released for `bit`: `M` for 1, none for 0.
pub fn modulate(bit: bool, modulation: &ModulationParams) -> u64 {
    if bit {
        modulation.molecules_per_one
    } else {
        0
    }
}

/// Decodes 1 iff `n_rx >= threshold`.
#[inline]
pub fn demod_fixed(n_rx: f64, threshold: f64) -> bool {
    n_rx >= threshold
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtvConfig {
    /// Tolerated imbalance μ between the two decision distances.
    pub tolerance: f64,
    pub initial_threshold: f64,
    pub threshold_min: f64,
    pub threshold_max: f64,
    /// Number of most recent slots kept in the running sums. `None`
    /// accumulates from the first slot.
    pub window: Option<usize>,
}

impl AtvConfig {
    /// Starts at `M/2` and clamps to `[0, M]`.
    pub fn new(modulation: &ModulationParams, tolerance: f64) -> Result<Self> {
        let m = modulation.m();
        let cfg = AtvConfig {
            tolerance,
            initial_threshold: m / 2.0,
            threshold_min: 0.0,
            threshold_max: m,
            window: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance >= 0.0) {
            return Err(Error::config("tolerance", "must be non-negative"));
        }
        if !(self.threshold_min <= self.initial_threshold
            && self.initial_threshold <= self.threshold_max)
        {
            return Err(Error::config(
                "initial_threshold",
                format!(
                    "{} not within [{}, {}]",
                    self.initial_threshold, self.threshold_min, self.threshold_max
                ),
            ));
        }
        if self.window == Some(0) {
            return Err(Error::config("window", "must be at least 1"));
        }
        Ok(())
    }
}

/// Learning state of the ATV receiver.
///
/// `count_ones + count_zeros == slot_index` holds while no window is set;
/// with a window the counters cover only the retained slots.
#[derive(Debug, Clone, PartialEq)]
pub struct AtvState {
    pub threshold: f64,
    pub count_ones: u64,
    pub count_zeros: u64,
    pub sum_ones: f64,
    pub sum_zeros: f64,
    pub slot_index: u64,
    history: VecDeque<(bool, f64)>,
}

impl AtvState {
    pub fn new(cfg: &AtvConfig) -> Self {
        AtvState {
            threshold: cfg.initial_threshold,
            count_ones: 0,
            count_zeros: 0,
            sum_ones: 0.0,
            sum_zeros: 0.0,
            slot_index: 0,
            history: VecDeque::new(),
        }
    }

    fn record(&mut self, bit: bool, n_rx: f64) {
        if bit {
            self.sum_ones += n_rx;
            self.count_ones += 1;
        } else {
            self.sum_zeros += n_rx;
            self.count_zeros += 1;
        }
    }

    fn forget(&mut self, bit: bool, n_rx: f64) {
        if bit {
            self.count_ones -= 1;
            self.sum_ones = if self.count_ones == 0 {
                0.0
            } else {
                self.sum_ones - n_rx
            };
        } else {
            self.count_zeros -= 1;
            self.sum_zeros = if self.count_zeros == 0 {
                0.0
            } else {
                self.sum_zeros - n_rx
            };
        }
    }

    /// Decodes `n_rx` with the current threshold, then updates the threshold
    /// for the next slot.
    pub fn step_mut(&mut self, n_rx: f64, cfg: &AtvConfig) -> bool {
        let bit = demod_fixed(n_rx, self.threshold);
        self.record(bit, n_rx);
        self.slot_index += 1;
        if let Some(w) = cfg.window {
            self.history.push_back((bit, n_rx));
            if self.history.len() > w {
                let (old_bit, old_rx) = self.history.pop_front().expect("non-empty history");
                self.forget(old_bit, old_rx);
            }
        }

        // Both means are needed; hold the threshold until each symbol has been seen.
        if self.count_ones > 0 && self.count_zeros > 0 {
            let to_zeros = self.threshold - self.sum_zeros / self.count_zeros as f64;
            let to_ones = self.sum_ones / self.count_ones as f64 - self.threshold;
            let imbalance = to_zeros - to_ones;
            if imbalance > cfg.tolerance {
                self.threshold -= 1.0;
            } else if imbalance < -cfg.tolerance {
                self.threshold += 1.0;
            }
        }
        self.threshold = self.threshold.clamp(cfg.threshold_min, cfg.threshold_max);
        bit
    }
}

/// Pure form of [`AtvState::step_mut`].
pub fn atv_step(state: &AtvState, n_rx: f64, cfg: &AtvConfig) -> (bool, AtvState) {
    let mut next = state.clone();
    let bit = next.step_mut(n_rx, cfg);
    (bit, next)
}

/// An ATV receiver owning its configuration and state.
#[derive(Debug, Clone)]
pub struct AtvReceiver {
    cfg: AtvConfig,
    state: AtvState,
}

impl AtvReceiver {
    pub fn new(cfg: AtvConfig) -> Self {
        let state = AtvState::new(&cfg);
        AtvReceiver { cfg, state }
    }

    /// Threshold that will be applied to the next slot.
    pub fn threshold(&self) -> f64 {
        self.state.threshold
    }

    pub fn state(&self) -> &AtvState {
        &self.state
    }

    pub fn receive(&mut self, n_rx: f64) -> bool {
        self.state.step_mut(n_rx, &self.cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(tolerance: f64) -> AtvConfig {
        AtvConfig::new(&ModulationParams::default(), tolerance).unwrap()
    }

    #[test]
    fn ook_levels() {
        let m = ModulationParams::default();
        assert_eq!(modulate(true, &m), 500);
        assert_eq!(modulate(false, &m), 0);
    }

    #[test]
    fn fixed_threshold_ties_decode_one() {
        assert!(demod_fixed(250.0, 250.0));
        assert!(!demod_fixed(249.9, 250.0));
        assert!(!demod_fixed(-5.0, 0.0));
        assert!(demod_fixed(-5.0, -5.0));
    }

    #[test]
    fn first_clean_one_keeps_threshold() {
        let c = cfg(30.0);
        let (bit, s) = atv_step(&AtvState::new(&c), 500.0, &c);
        assert!(bit);
        assert_eq!((s.count_ones, s.count_zeros, s.slot_index), (1, 0, 1));
        assert_eq!(s.sum_ones, 500.0);
        assert_eq!(s.threshold, 250.0);
    }

    #[test]
    fn imbalance_beyond_tolerance_lowers_threshold() {
        let c = cfg(30.0);
        // After slots of 400 (decoded 1) and 50 (decoded 0): A = 200, B = 150.
        let mut s = AtvState::new(&c);
        s.step_mut(400.0, &c);
        let (bit, s) = atv_step(&s, 50.0, &c);
        assert!(!bit);
        assert_eq!((s.count_ones, s.count_zeros), (1, 1));
        assert_eq!(s.threshold, 249.0);
    }

    #[test]
    fn imbalance_within_tolerance_holds() {
        let c = cfg(60.0);
        let mut s = AtvState::new(&c);
        s.step_mut(400.0, &c);
        s.step_mut(50.0, &c);
        assert_eq!(s.threshold, 250.0);
    }

    #[test]
    fn negative_imbalance_raises_threshold() {
        let c = cfg(10.0);
        let mut r = AtvReceiver::new(c);
        r.receive(480.0);
        r.receive(200.0);
        // A = 50, B = 230
        assert_eq!(r.threshold(), 251.0);
    }

    #[test]
    fn clamped_to_range() {
        let mut c = cfg(0.0);
        c.threshold_min = 249.5;
        let mut r = AtvReceiver::new(c);
        for _ in 0..5 {
            r.receive(260.0);
            r.receive(0.0);
        }
        assert_eq!(r.threshold(), 249.5);
    }

    #[test]
    fn window_forgets_old_slots() {
        let mut c = cfg(1e9);
        c.window = Some(2);
        let mut r = AtvReceiver::new(c);
        r.receive(400.0);
        r.receive(10.0);
        r.receive(20.0);
        let s = r.state();
        assert_eq!((s.count_ones, s.count_zeros), (0, 2));
        assert_eq!(s.sum_ones, 0.0);
        assert_eq!(s.sum_zeros, 30.0);
        assert_eq!(s.slot_index, 3);
    }

    #[test]
    fn invalid_configs() {
        let mut c = cfg(30.0);
        c.initial_threshold = 600.0;
        assert!(c.validate().is_err());
        assert!(AtvConfig::new(&ModulationParams::default(), -1.0).is_err());
        let mut c = cfg(30.0);
        c.window = Some(0);
        assert!(c.validate().is_err());
    }
}
