//! Simulation and analysis of a diffusion-based molecular communication link.
//!
//! A transmitter releases `M` molecules for every `1` bit (on-off keying) and
//! nothing for a `0`. Each molecule is absorbed by the receiver with a
//! probability that depends on how many slots have elapsed since its release,
//! so a slot's received count splits into three parts: signal molecules from
//! the current bit, inter-symbol interference from adjacent bits, and additive
//! Gaussian counting noise.
//!
//! Modules, bottom-up:
//! - [`channel`]: diffusion constants, absorption CDF and per-slot absorption
//!   probabilities ([`AbsorptionProfile`]).
//! - [`model`]: exact distributions and Monte Carlo sampling of a received slot.
//! - [`modem`]: OOK modulation, fixed-threshold demodulation and the adaptive
//!   threshold variation (ATV) receiver.
//! - [`analysis`]: analytical BER, optimal thresholds and SINR.
//! - [`sim`]: seeded, parallel Monte Carlo experiments and parameter sweeps.
//! - [`cli`]: the `molcom` command-line front end.

pub mod analysis;
pub mod channel;
pub mod cli;
pub mod config;
mod error;
pub mod model;
pub mod modem;
pub mod sim;
pub mod special;

pub use channel::{AbsorptionProfile, ChannelParams, LigandParams, PhysicalMedium};
pub use error::{Error, Result};
pub use model::{ModulationParams, NoiseParams, SlotComposition, SlotProbs};
pub use modem::{AtvConfig, AtvReceiver, AtvState};
