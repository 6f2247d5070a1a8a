//! Declarative experiment description, loaded from JSON.
//!
//! Every section is optional and falls back to the reference link:
//! D = 10 µm²/s, r = 4 µm, τ = 4 s, a = 0.1, b = 0.08, Q = 1 µmol/l,
//! M = 500, equiprobable bits, target SINR 10, a fixed threshold at M/2,
//! 10⁴ slots and one trial. Unknown keys are rejected.
//!
//! ```json
//! {
//!   "channel": { "diffusion_coefficient": 10, "distance": 8, "slot_length": 2 },
//!   "noise": { "target_sinr": 10 },
//!   "receiver": { "kind": "atv", "tolerance": 30 },
//!   "num_slots": 10000,
//!   "num_trials": 10,
//!   "seed": 7,
//!   "sweep": [ { "parameter": "noise.target_sinr", "values": [1, 2, 5, 10, 20] } ]
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::IsiPowerTerm;
use crate::channel::{ChannelParams, LigandParams, DEFAULT_MAX_OFFSET};
use crate::model::ModulationParams;
use crate::modem::AtvConfig;
use crate::{Error, Result};

/// Exactly one of `sigma` or `target_sinr`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_sinr: Option<f64>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            sigma: None,
            target_sinr: Some(10.0),
        }
    }
}

impl NoiseSpec {
    pub fn sigma(sigma: f64) -> Self {
        NoiseSpec {
            sigma: Some(sigma),
            target_sinr: None,
        }
    }

    pub fn target_sinr(gamma: f64) -> Self {
        NoiseSpec {
            sigma: None,
            target_sinr: Some(gamma),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReceiverSpec {
    /// Fixed threshold; `M/2` when omitted.
    Fixed {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        threshold: Option<f64>,
    },
    Atv {
        #[serde(default = "default_tolerance")]
        tolerance: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        initial_threshold: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        threshold_min: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        threshold_max: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<usize>,
    },
}

fn default_tolerance() -> f64 {
    30.0
}

impl Default for ReceiverSpec {
    fn default() -> Self {
        ReceiverSpec::Fixed { threshold: None }
    }
}

impl ReceiverSpec {
    pub fn fixed(threshold: f64) -> Self {
        ReceiverSpec::Fixed {
            threshold: Some(threshold),
        }
    }

    pub fn atv(tolerance: f64) -> Self {
        ReceiverSpec::Atv {
            tolerance,
            initial_threshold: None,
            threshold_min: None,
            threshold_max: None,
            window: None,
        }
    }

    pub fn is_atv(&self) -> bool {
        matches!(self, ReceiverSpec::Atv { .. })
    }
}

/// A receiver with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub enum Receiver {
    Fixed(f64),
    Atv(AtvConfig),
}

/// Whether the receive slot coincides with the transmit slot or trails it by one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    #[default]
    Aligned,
    Lagged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BitSource {
    /// i.i.d. bits with the configured prior.
    #[default]
    Random,
    /// `1010…`, for debugging.
    Alternating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub channel: ChannelParams,
    pub ligand: LigandParams,
    pub modulation: ModulationParams,
    pub noise: NoiseSpec,
    /// Interference term used when converting `noise.target_sinr` to σ and
    /// when measuring SINR.
    pub sinr_isi_term: IsiPowerTerm,
    pub alignment: Alignment,
    pub receiver: ReceiverSpec,
    pub bits: BitSource,
    pub num_slots: usize,
    pub num_trials: usize,
    pub seed: u64,
    pub max_offset: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepAxis>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            channel: ChannelParams::default(),
            ligand: LigandParams::default(),
            modulation: ModulationParams::default(),
            noise: NoiseSpec::default(),
            sinr_isi_term: IsiPowerTerm::default(),
            alignment: Alignment::default(),
            receiver: ReceiverSpec::default(),
            bits: BitSource::default(),
            num_slots: 10_000,
            num_trials: 1,
            seed: 0,
            max_offset: DEFAULT_MAX_OFFSET,
            sweep: Vec::new(),
        }
    }
}

fn in_section(section: &str, e: Error) -> Error {
    match e {
        Error::Domain(reason) => Error::config(section, reason),
        other => other,
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.channel
            .validate()
            .map_err(|e| in_section("channel", e))?;
        self.ligand
            .validate()
            .map_err(|e| in_section("ligand", e))?;
        self.modulation
            .validate()
            .map_err(|e| in_section("modulation", e))?;
        match (self.noise.sigma, self.noise.target_sinr) {
            (Some(s), None) if s >= 0.0 && s.is_finite() => {}
            (None, Some(g)) if g > 0.0 && g.is_finite() => {}
            (Some(_), Some(_)) | (None, None) => {
                return Err(Error::config(
                    "noise",
                    "set exactly one of `sigma` and `target_sinr`",
                ))
            }
            (Some(s), None) => {
                return Err(Error::config(
                    "noise.sigma",
                    format!("must be >= 0, got {s}"),
                ))
            }
            (None, Some(g)) => {
                return Err(Error::config(
                    "noise.target_sinr",
                    format!("must be > 0, got {g}"),
                ))
            }
        }
        self.resolve_receiver()?;
        if self.num_slots == 0 {
            return Err(Error::config("num_slots", "must be at least 1"));
        }
        if self.num_trials == 0 {
            return Err(Error::config("num_trials", "must be at least 1"));
        }
        let needed = if self.alignment == Alignment::Lagged {
            2
        } else {
            1
        };
        if self.max_offset < needed {
            return Err(Error::config(
                "max_offset",
                format!("must be at least {needed}"),
            ));
        }
        for axis in &self.sweep {
            if axis.values.is_empty() {
                return Err(Error::config(
                    format!("sweep.{}", axis.parameter),
                    "no values",
                ));
            }
            for &v in &axis.values {
                self.with_parameter(&axis.parameter, v)?;
            }
        }
        Ok(())
    }

    pub fn resolve_receiver(&self) -> Result<Receiver> {
        let m = self.modulation.m();
        match self.receiver {
            ReceiverSpec::Fixed { threshold } => {
                let t = threshold.unwrap_or(m / 2.0);
                if t.is_nan() {
                    return Err(Error::config("receiver.threshold", "is NaN"));
                }
                Ok(Receiver::Fixed(t))
            }
            ReceiverSpec::Atv {
                tolerance,
                initial_threshold,
                threshold_min,
                threshold_max,
                window,
            } => {
                let cfg = AtvConfig {
                    tolerance,
                    initial_threshold: initial_threshold.unwrap_or(m / 2.0),
                    threshold_min: threshold_min.unwrap_or(0.0),
                    threshold_max: threshold_max.unwrap_or(m),
                    window,
                };
                cfg.validate().map_err(|e| match e {
                    Error::Config { key, reason } => {
                        Error::config(format!("receiver.{key}"), reason)
                    }
                    other => other,
                })?;
                Ok(Receiver::Atv(cfg))
            }
        }
    }

    /// Copy of this config with one parameter replaced. The sweep list is
    /// dropped from the copy.
    pub fn with_parameter(&self, path: &str, value: f64) -> Result<Self> {
        let mut c = self.clone();
        c.sweep.clear();
        let count = |v: f64| -> Result<u64> {
            if v >= 0.0 && v.fract() == 0.0 && v < u64::MAX as f64 {
                Ok(v as u64)
            } else {
                Err(Error::config(
                    path,
                    format!("expected a whole number, got {v}"),
                ))
            }
        };
        match path {
            "channel.diffusion_coefficient" => c.channel.diffusion_coefficient = value,
            "channel.distance" => c.channel.distance = value,
            "channel.slot_length" => c.channel.slot_length = value,
            "ligand.binding_rate" => c.ligand.binding_rate = value,
            "ligand.releasing_rate" => c.ligand.releasing_rate = value,
            "ligand.receptor_density" => c.ligand.receptor_density = value,
            "modulation.molecules_per_one" => c.modulation.molecules_per_one = count(value)?,
            "modulation.prior_one" => c.modulation.prior_one = value,
            "noise.sigma" => c.noise = NoiseSpec::sigma(value),
            "noise.target_sinr" => c.noise = NoiseSpec::target_sinr(value),
            "receiver.threshold" => match &mut c.receiver {
                ReceiverSpec::Fixed { threshold } => *threshold = Some(value),
                ReceiverSpec::Atv { .. } => {
                    return Err(Error::config(path, "only a fixed receiver has a threshold"))
                }
            },
            "receiver.tolerance" => match &mut c.receiver {
                ReceiverSpec::Atv { tolerance, .. } => *tolerance = value,
                ReceiverSpec::Fixed { .. } => {
                    return Err(Error::config(path, "only an ATV receiver has a tolerance"))
                }
            },
            "num_slots" => c.num_slots = count(value)? as usize,
            "num_trials" => c.num_trials = count(value)? as usize,
            _ => return Err(Error::config(path, "unknown sweep parameter")),
        }
        c.validate().map_err(|e| match e {
            Error::Config { reason, .. } => Error::config(path, reason),
            other => other,
        })?;
        Ok(c)
    }

    /// All sweep points in definition order, first axis varying slowest.
    pub fn sweep_points(&self) -> Result<Vec<(Vec<(String, f64)>, ExperimentConfig)>> {
        if self.sweep.is_empty() {
            return Err(Error::config("sweep", "no sweep defined"));
        }
        let mut points: Vec<(Vec<(String, f64)>, ExperimentConfig)> =
            vec![(Vec::new(), self.clone())];
        for axis in &self.sweep {
            if axis.values.is_empty() {
                return Err(Error::config(
                    format!("sweep.{}", axis.parameter),
                    "no values",
                ));
            }
            let mut next = Vec::with_capacity(points.len() * axis.values.len());
            for (coords, cfg) in &points {
                for &v in &axis.values {
                    let mut coords = coords.clone();
                    coords.push((axis.parameter.clone(), v));
                    next.push((coords, cfg.with_parameter(&axis.parameter, v)?));
                }
            }
            points = next;
        }
        Ok(points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_reference_link() {
        let cfg = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.resolve_receiver().unwrap(), Receiver::Fixed(250.0));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_json(r#"{"chanel": {}}"#).unwrap_err();
        assert!(err.to_string().contains("chanel"), "{err}");
        let err = ExperimentConfig::from_json(r#"{"channel": {"distanse": 3}}"#).unwrap_err();
        assert!(err.to_string().contains("distanse"), "{err}");
        let err =
            ExperimentConfig::from_json(r#"{"receiver": {"kind": "atv", "tol": 3}}"#).unwrap_err();
        assert!(err.to_string().contains("tol"), "{err}");
    }

    #[test]
    fn noise_needs_exactly_one_field() {
        let err = ExperimentConfig::from_json(r#"{"noise": {"sigma": 1, "target_sinr": 2}}"#)
            .unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "noise"));
        assert!(ExperimentConfig::from_json(r#"{"noise": {}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"noise": {"sigma": 3}}"#).is_ok());
    }

    #[test]
    fn invalid_field_is_named() {
        let err = ExperimentConfig::from_json(
            r#"{"channel": {"diffusion_coefficient": 10, "distance": -1, "slot_length": 4}}"#,
        )
        .unwrap_err();
        assert!(
            matches!(err, Error::Config { ref key, .. } if key == "channel"),
            "{err}"
        );
        assert!(err.to_string().contains("distance"));
        let err = ExperimentConfig::from_json(r#"{"num_slots": 0}"#).unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "num_slots"));
    }

    #[test]
    fn atv_receiver_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"receiver": {"kind": "atv"}}"#).unwrap();
        match cfg.resolve_receiver().unwrap() {
            Receiver::Atv(a) => {
                assert_eq!(a.tolerance, 30.0);
                assert_eq!(
                    (a.initial_threshold, a.threshold_min, a.threshold_max),
                    (250.0, 0.0, 500.0)
                );
            }
            r => panic!("{r:?}"),
        }
    }

    #[test]
    fn sweep_points_cartesian_order() {
        let cfg = ExperimentConfig {
            sweep: vec![
                SweepAxis {
                    parameter: "channel.distance".into(),
                    values: vec![4.0, 8.0],
                },
                SweepAxis {
                    parameter: "noise.target_sinr".into(),
                    values: vec![1.0, 2.0, 5.0],
                },
            ],
            ..Default::default()
        };
        let pts = cfg.sweep_points().unwrap();
        assert_eq!(pts.len(), 6);
        assert_eq!(
            pts[1].0,
            vec![
                ("channel.distance".to_string(), 4.0),
                ("noise.target_sinr".to_string(), 2.0)
            ]
        );
        assert_eq!(pts[3].1.channel.distance, 8.0);
        assert_eq!(pts[3].1.noise, NoiseSpec::target_sinr(1.0));
        assert!(pts.iter().all(|(_, c)| c.sweep.is_empty()));
    }

    #[test]
    fn bad_sweep_path_names_the_key() {
        let cfg = ExperimentConfig {
            sweep: vec![SweepAxis {
                parameter: "channel.radius".into(),
                values: vec![1.0],
            }],
            ..Default::default()
        };
        let err = cfg.validate().unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "channel.radius"));
        let empty = ExperimentConfig {
            sweep: vec![SweepAxis {
                parameter: "channel.distance".into(),
                values: vec![],
            }],
            ..Default::default()
        };
        assert!(empty.sweep_points().is_err());
        assert!(ExperimentConfig::default().sweep_points().is_err());
    }

    #[test]
    fn json_round_trip() {
        let cfg = ExperimentConfig {
            receiver: ReceiverSpec::atv(60.0),
            sweep: vec![SweepAxis {
                parameter: "receiver.tolerance".into(),
                values: vec![30.0, 60.0],
            }],
            ..Default::default()
        };
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }
}
