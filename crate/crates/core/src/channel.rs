//! Diffusion channel physics.
//!
//! Lengths are in micrometres, times in seconds and diffusion coefficients in
//! µm²/s. SI quantities appear only in [`PhysicalMedium`].

use serde::{Deserialize, Serialize};

use crate::special::erfc;
use crate::{Error, Result};

/// Default number of slot offsets kept in an [`AbsorptionProfile`].
pub const DEFAULT_MAX_OFFSET: usize = 50;

const M2_TO_UM2: f64 = 1e12;

fn require_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

/// Fluid and molecule properties that determine the diffusion coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalMedium {
    /// J/K
    pub boltzmann_constant: f64,
    /// K
    pub temperature: f64,
    /// Pa·s
    pub dynamic_viscosity: f64,
    /// m
    pub hydraulic_radius: f64,
}

impl PhysicalMedium {
    pub const BOLTZMANN: f64 = 1.380649e-23;

    pub fn new(temperature: f64, dynamic_viscosity: f64, hydraulic_radius: f64) -> Self {
        PhysicalMedium {
            boltzmann_constant: Self::BOLTZMANN,
            temperature,
            dynamic_viscosity,
            hydraulic_radius,
        }
    }
}

/// Stokes–Einstein diffusion coefficient `k_B T / (6π η R_H)` in µm²/s.
pub fn diffusion_coefficient(medium: &PhysicalMedium) -> Result<f64> {
    require_positive("boltzmann_constant", medium.boltzmann_constant)?;
    require_positive("temperature", medium.temperature)?;
    require_positive("dynamic_viscosity", medium.dynamic_viscosity)?;
    require_positive("hydraulic_radius", medium.hydraulic_radius)?;
    let si = medium.boltzmann_constant * medium.temperature
        / (6.0 * std::f64::consts::PI * medium.dynamic_viscosity * medium.hydraulic_radius);
    Ok(si * M2_TO_UM2)
}

/// Link geometry and medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// µm²/s
    pub diffusion_coefficient: f64,
    /// Transmitter to receiver distance, µm.
    pub distance: f64,
    /// Slot length τ, s.
    pub slot_length: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            diffusion_coefficient: 10.0,
            distance: 4.0,
            slot_length: 4.0,
        }
    }
}

impl ChannelParams {
    pub fn new(diffusion_coefficient: f64, distance: f64, slot_length: f64) -> Result<Self> {
        let ch = ChannelParams {
            diffusion_coefficient,
            distance,
            slot_length,
        };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("diffusion_coefficient", self.diffusion_coefficient)?;
        require_positive("distance", self.distance)?;
        require_positive("slot_length", self.slot_length)
    }

    /// Absorption CDF at this channel's distance, `G(r, t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        cdf_unchecked(self.distance, t, self.diffusion_coefficient)
    }
}

/// Receptor kinetics of a ligand-based receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LigandParams {
    pub binding_rate: f64,
    pub releasing_rate: f64,
    /// µmol/l
    pub receptor_density: f64,
}

impl Default for LigandParams {
    fn default() -> Self {
        LigandParams {
            binding_rate: 0.1,
            releasing_rate: 0.08,
            receptor_density: 1.0,
        }
    }
}

impl LigandParams {
    /// Ligand factor of one: absorption probabilities pass through unchanged.
    pub const UNIT: LigandParams = LigandParams {
        binding_rate: 1.0,
        releasing_rate: 1.0,
        receptor_density: 1.0,
    };

    pub fn validate(&self) -> Result<()> {
        require_positive("binding_rate", self.binding_rate)?;
        require_positive("releasing_rate", self.releasing_rate)?;
        require_positive("receptor_density", self.receptor_density)
    }

    /// `a·Q / b`
    pub fn factor(&self) -> f64 {
        self.binding_rate * self.receptor_density / self.releasing_rate
    }
}

/// Density of a single released molecule at displacement `x` after time `t`:
/// `(4πDt)^(-3/2) · exp(-x² / 4Dt)`.
pub fn green_function(x: f64, t: f64, d: f64) -> Result<f64> {
    require_positive("t", t)?;
    require_positive("diffusion coefficient", d)?;
    let four_dt = 4.0 * d * t;
    Ok((std::f64::consts::PI * four_dt).powf(-1.5) * (-x * x / four_dt).exp())
}

/// Probability that a molecule released at distance `x` has been absorbed by
/// time `t`: `erfc(x / sqrt(4Dt))`, and 0 at `t = 0`.
pub fn absorption_cdf(x: f64, t: f64, d: f64) -> Result<f64> {
    require_positive("x", x)?;
    require_positive("diffusion coefficient", d)?;
    if !(t >= 0.0) {
        return Err(Error::domain(format!("t must be non-negative, got {t}")));
    }
    Ok(cdf_unchecked(x, t, d))
}

fn cdf_unchecked(x: f64, t: f64, d: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    erfc(x / (4.0 * d * t).sqrt())
}

/// Probability that a molecule released at the start of a slot is absorbed
/// during the slot `offset` slots later: `G(r,(k+1)τ) − G(r,kτ)`.
pub fn slot_absorption_prob(offset: i64, ch: &ChannelParams) -> Result<f64> {
    if offset < 0 {
        return Err(Error::domain(format!(
            "slot offset must be non-negative, got {offset}"
        )));
    }
    ch.validate()?;
    let k = offset as f64;
    let tau = ch.slot_length;
    Ok((ch.cdf((k + 1.0) * tau) - ch.cdf(k * tau)).max(0.0))
}

/// Result of [`ligand_scale`]: the probability and whether it hit the cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub probability: f64,
    pub clamped: bool,
}

/// Scales a raw absorption probability by `a·Q/b`, capped at 1.
pub fn ligand_scale(p_raw: f64, lig: &LigandParams) -> Result<Scaled> {
    if !(0.0..=1.0).contains(&p_raw) {
        return Err(Error::domain(format!(
            "probability outside [0, 1]: {p_raw}"
        )));
    }
    lig.validate()?;
    let unclamped = lig.factor() * p_raw;
    Ok(Scaled {
        probability: unclamped.min(1.0),
        clamped: unclamped > 1.0,
    })
}

/// `r² / 6D`, the peak time of [`green_function`] at distance `r`.
pub fn time_to_peak(r: f64, d: f64) -> Result<f64> {
    require_positive("r", r)?;
    require_positive("diffusion coefficient", d)?;
    Ok(r * r / (6.0 * d))
}

/// Per-offset absorption probabilities `p(k)`, `k = 0..=max_offset`, after
/// ligand scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionProfile {
    probabilities: Vec<f64>,
    raw: Vec<f64>,
    ligand_factor: f64,
    clamped: bool,
    tail_mass: f64,
}

impl AbsorptionProfile {
    pub fn build(ch: &ChannelParams, lig: &LigandParams, max_offset: usize) -> Result<Self> {
        if max_offset == 0 {
            return Err(Error::domain("max_offset must be at least 1"));
        }
        ch.validate()?;
        lig.validate()?;
        let mut raw = Vec::with_capacity(max_offset + 1);
        let mut probabilities = Vec::with_capacity(max_offset + 1);
        let mut clamped = false;
        for k in 0..=max_offset {
            let p = slot_absorption_prob(k as i64, ch)?;
            let s = ligand_scale(p, lig)?;
            clamped |= s.clamped;
            raw.push(p);
            probabilities.push(s.probability);
        }
        let tail_mass = 1.0 - ch.cdf((max_offset as f64 + 1.0) * ch.slot_length);
        Ok(AbsorptionProfile {
            probabilities,
            raw,
            ligand_factor: lig.factor(),
            clamped,
            tail_mass,
        })
    }

    /// Profile from explicit probabilities, for tests and hand-built channels.
    pub fn from_probabilities(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.len() < 2 {
            return Err(Error::domain("profile needs offsets 0 and 1"));
        }
        if let Some(p) = probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::domain(format!("probability outside [0, 1]: {p}")));
        }
        let tail_mass = (1.0 - probabilities.iter().sum::<f64>()).max(0.0);
        Ok(AbsorptionProfile {
            raw: probabilities.clone(),
            probabilities,
            ligand_factor: 1.0,
            clamped: false,
            tail_mass,
        })
    }

    pub fn max_offset(&self) -> usize {
        self.probabilities.len() - 1
    }

    /// Scaled probability at `offset`, or `None` past `max_offset`.
    pub fn get(&self, offset: usize) -> Option<f64> {
        self.probabilities.get(offset).copied()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Probabilities before ligand scaling.
    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn ligand_factor(&self) -> f64 {
        self.ligand_factor
    }

    /// True if any entry exceeded 1 after scaling and was capped.
    pub fn clamped(&self) -> bool {
        self.clamped
    }

    /// Unscaled absorption mass beyond `max_offset`, `1 − G(r, (K+1)τ)`.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }
}
