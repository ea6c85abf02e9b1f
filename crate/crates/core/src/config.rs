//! JSON run configuration shared by the CLI, the experiment runner, and
//! the persisted trace sidecars.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::balance::{BalanceError, ComPosition};
use crate::gait::{GaitError, GaitParams, PhaseOffsets};
use crate::kinematics::{KinematicsError, RobotGeometry, FLEXION_LIMIT};
use crate::spine::MIN_WARP_STEPS_PER_PERIOD;
use crate::tilt::{TiltError, TiltParams};

/// Version stamped into configs and trace sidecars.
pub const SCHEMA_VERSION: &str = "1.0";

/// Major version this build reads. Files with a different major are
/// rejected; minors within the major are assumed compatible.
pub const SCHEMA_MAJOR: u32 = 1;

/// Extracts the major component of a `major.minor` version string.
pub fn schema_major(version: &str) -> Option<u32> {
    version.split('.').next()?.parse().ok()
}

/// Errors from configuration parsing and validation.
#[derive(Debug, Error)]
pub enum ConfigError {
    /// The JSON failed to parse (or contained unknown fields).
    #[error("invalid configuration JSON: {0}")]
    Parse(#[from] serde_json::Error),
    /// A schema major this build does not read.
    #[error(
        "configuration schema version {found:?} is not supported \
         (this build reads major {SCHEMA_MAJOR})"
    )]
    SchemaVersion { found: String },
    /// A field-level constraint violation.
    #[error("invalid configuration: {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    /// Invalid geometry.
    #[error("invalid configuration: {0}")]
    Kinematics(#[from] KinematicsError),
    /// Invalid gait parameters.
    #[error("invalid configuration: {0}")]
    Gait(#[from] GaitError),
    /// Invalid center of mass.
    #[error("invalid configuration: {0}")]
    Balance(#[from] BalanceError),
    /// Invalid tilt parameters.
    #[error("invalid configuration: {0}")]
    Tilt(#[from] TiltError),
}

/// Gait section: the cycle is specified by frequency, everything else
/// matches [`GaitParams`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaitConfig {
    /// Cycle frequency, Hz. Overridden per sweep cell.
    pub frequency_hz: f64,
    /// Stride wave amplitude, meters.
    pub stride_amplitude: f64,
    /// Stance fraction; must be exactly `0.5`.
    pub duty: f64,
    /// Fore/hind wave phase offsets, cycles.
    pub phase_offsets: PhaseOffsets,
}

/// Spine controller section. The controller kind is chosen at run time;
/// the warped kind's balance target is solved, not configured.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpineConfig {
    /// Flexion amplitude `α`, radians.
    pub amplitude: f64,
    /// Initial phase `φ`, radians.
    pub initial_phase: f64,
}

/// Simulation resolution section.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    /// Steps per gait cycle; at least 100 and a multiple of 4, so the
    /// quarter-cycle instants land exactly on the step grid.
    pub steps_per_period: u32,
    /// Whole gait cycles to simulate.
    pub periods: u32,
}

/// Frequency sweep section.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// First swept frequency, Hz.
    pub frequency_start_hz: f64,
    /// Spacing between swept frequencies, Hz.
    pub frequency_step_hz: f64,
    /// Number of frequencies.
    pub frequency_count: u32,
    /// Repetitions (random time origins) per frequency.
    pub repetitions: u32,
}

/// The complete run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Schema stamp, `major.minor`.
    pub schema_version: String,
    pub geometry: RobotGeometry,
    pub com: ComPosition,
    pub gait: GaitConfig,
    pub spine: SpineConfig,
    pub tilt: TiltParams,
    pub simulation: SimulationConfig,
    pub sweep: SweepConfig,
    /// Master seed; every sweep cell derives its own RNG stream from it.
    pub seed: u64,
    /// Where simulate/sweep write traces and summaries.
    pub output_dir: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            geometry: RobotGeometry {
                spine_length: 0.16,
                body_length: 0.12,
                hind_hip_halfwidth: 0.010,
                fore_hip_halfwidth: 0.020,
            },
            com: ComPosition::fixed(-0.178, 0.0),
            gait: GaitConfig {
                frequency_hz: 2.1,
                stride_amplitude: 0.05,
                duty: 0.5,
                phase_offsets: PhaseOffsets {
                    fore: 0.0,
                    hind: 0.5,
                },
            },
            spine: SpineConfig {
                amplitude: 0.016,
                initial_phase: 0.0,
            },
            tilt: TiltParams {
                roll_gain: 20.0,
                pitch_gain: 20.0,
                damping: 1.0,
                reset_on_switch: false,
            },
            simulation: SimulationConfig {
                steps_per_period: 1024,
                periods: 4,
            },
            sweep: SweepConfig {
                frequency_start_hz: 0.5,
                frequency_step_hz: 0.4,
                frequency_count: 11,
                repetitions: 10,
            },
            seed: 53,
            output_dir: PathBuf::from("runs"),
        }
    }
}

impl Config {
    /// Parses and validates a configuration from JSON text.
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let config: Config = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Pretty JSON rendering, newline-terminated.
    pub fn to_json_pretty(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        text
    }

    /// Checks every cross-field constraint.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if schema_major(&self.schema_version) != Some(SCHEMA_MAJOR) {
            return Err(ConfigError::SchemaVersion {
                found: self.schema_version.clone(),
            });
        }
        self.geometry.validate()?;
        self.com.validate()?;

        if !(self.gait.frequency_hz.is_finite() && self.gait.frequency_hz > 0.0) {
            return Err(ConfigError::Invalid {
                field: "gait.frequency_hz",
                reason: format!(
                    "must be strictly positive and finite, got {}",
                    self.gait.frequency_hz
                ),
            });
        }
        // Building the runtime parameters runs the gait's own checks
        // (amplitude, the exact-half duty, phase finiteness).
        self.gait_params_at(self.gait.frequency_hz)?;

        if !(self.spine.amplitude.is_finite()
            && (0.0..=FLEXION_LIMIT).contains(&self.spine.amplitude))
        {
            return Err(ConfigError::Invalid {
                field: "spine.amplitude",
                reason: format!(
                    "must be within [0, {FLEXION_LIMIT}] rad, got {}",
                    self.spine.amplitude
                ),
            });
        }
        if !self.spine.initial_phase.is_finite() {
            return Err(ConfigError::Invalid {
                field: "spine.initial_phase",
                reason: format!("must be finite, got {}", self.spine.initial_phase),
            });
        }
        self.tilt.validate()?;

        if self.simulation.steps_per_period < MIN_WARP_STEPS_PER_PERIOD {
            return Err(ConfigError::Invalid {
                field: "simulation.steps_per_period",
                reason: format!(
                    "must be at least {MIN_WARP_STEPS_PER_PERIOD}, got {}",
                    self.simulation.steps_per_period
                ),
            });
        }
        if !self.simulation.steps_per_period.is_multiple_of(4) {
            return Err(ConfigError::Invalid {
                field: "simulation.steps_per_period",
                reason: format!(
                    "must be a multiple of 4 so quarter-cycle instants land on the \
                     step grid, got {}",
                    self.simulation.steps_per_period
                ),
            });
        }
        if self.simulation.periods < 1 {
            return Err(ConfigError::Invalid {
                field: "simulation.periods",
                reason: "must simulate at least one cycle".to_string(),
            });
        }

        if !(self.sweep.frequency_start_hz.is_finite() && self.sweep.frequency_start_hz > 0.0) {
            return Err(ConfigError::Invalid {
                field: "sweep.frequency_start_hz",
                reason: format!(
                    "must be strictly positive and finite, got {}",
                    self.sweep.frequency_start_hz
                ),
            });
        }
        if !(self.sweep.frequency_step_hz.is_finite() && self.sweep.frequency_step_hz >= 0.0) {
            return Err(ConfigError::Invalid {
                field: "sweep.frequency_step_hz",
                reason: format!(
                    "must be non-negative and finite, got {}",
                    self.sweep.frequency_step_hz
                ),
            });
        }
        if self.sweep.frequency_count < 1 {
            return Err(ConfigError::Invalid {
                field: "sweep.frequency_count",
                reason: "must sweep at least one frequency".to_string(),
            });
        }
        if self.sweep.repetitions < 1 {
            return Err(ConfigError::Invalid {
                field: "sweep.repetitions",
                reason: "must run at least one repetition".to_string(),
            });
        }
        Ok(())
    }

    /// Runtime gait parameters for a given cycle frequency.
    pub fn gait_params_at(&self, frequency_hz: f64) -> Result<GaitParams, ConfigError> {
        let period = 1.0 / frequency_hz;
        Ok(GaitParams::new(
            period,
            self.gait.stride_amplitude,
            self.gait.duty,
            self.gait.phase_offsets,
        )?)
    }

    /// The swept frequencies, in sweep order.
    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.sweep.frequency_count)
            .map(|m| self.sweep.frequency_start_hz + self.sweep.frequency_step_hz * f64::from(m))
            .collect()
    }
}
