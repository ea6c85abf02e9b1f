//! Trot stride generation and the diagonal stance schedule.
//!
//! An ideal trot moves diagonal leg pairs together with a duty factor of
//! exactly one half: the left-fore + right-hind pair stances during the
//! first half of each cycle and the right-fore + left-hind pair during the
//! second half. At every instant exactly one diagonal is on the ground, and
//! its two feet define the support line used by the balance model.
//!
//! Strides are cosine waves of a common amplitude. The fore and hind waves
//! carry independent phase offsets (an ideal trot hind offset is one half
//! cycle), and the wave evaluated here is always the one of the *currently
//! stancing* leg of each girdle — so the returned pair jumps at the
//! diagonal switch, where the newly landing pair takes over at its own
//! touchdown placement. Within either stance half the strides are smooth.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::StrideState;

/// Errors from gait parameter validation.
#[derive(Debug, Error)]
pub enum GaitError {
    /// The cycle period must be strictly positive and finite.
    #[error("gait period must be strictly positive and finite, got {value}")]
    InvalidPeriod { value: f64 },
    /// The stride amplitude must be strictly positive and finite.
    #[error("stride amplitude must be strictly positive and finite, got {value}")]
    InvalidAmplitude { value: f64 },
    /// Only the ideal trot duty factor is modeled.
    #[error("duty factor must be exactly 0.5 (ideal trot), got {value}")]
    UnsupportedDuty { value: f64 },
    /// Phase offsets must be finite.
    #[error("phase offset {name} must be finite, got {value}")]
    NonFinitePhase { name: &'static str, value: f64 },
}

/// Phase offsets of the fore and hind stride waves, in cycles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseOffsets {
    /// Fore stride wave offset, fraction of a cycle.
    pub fore: f64,
    /// Hind stride wave offset, fraction of a cycle.
    pub hind: f64,
}

/// Parameters of the trot gait.
///
/// Construct through [`GaitParams::new`] (or call [`GaitParams::validate`])
/// so the ideal-trot duty restriction is enforced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaitParams {
    /// Cycle period, seconds.
    pub period: f64,
    /// Stride wave amplitude, meters.
    pub stride_amplitude: f64,
    /// Stance fraction of the cycle; must be exactly `0.5`.
    pub duty: f64,
    /// Phase offsets of the fore and hind waves.
    pub phase_offsets: PhaseOffsets,
}

impl GaitParams {
    /// Builds gait parameters, rejecting anything but an ideal trot.
    pub fn new(
        period: f64,
        stride_amplitude: f64,
        duty: f64,
        phase_offsets: PhaseOffsets,
    ) -> Result<Self, GaitError> {
        let gait = Self {
            period,
            stride_amplitude,
            duty,
            phase_offsets,
        };
        gait.validate()?;
        Ok(gait)
    }

    /// Checks period, amplitude, the exact-half duty, and phase finiteness.
    pub fn validate(&self) -> Result<(), GaitError> {
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(GaitError::InvalidPeriod { value: self.period });
        }
        if !(self.stride_amplitude.is_finite() && self.stride_amplitude > 0.0) {
            return Err(GaitError::InvalidAmplitude {
                value: self.stride_amplitude,
            });
        }
        if self.duty != 0.5 {
            return Err(GaitError::UnsupportedDuty { value: self.duty });
        }
        if !self.phase_offsets.fore.is_finite() {
            return Err(GaitError::NonFinitePhase {
                name: "fore",
                value: self.phase_offsets.fore,
            });
        }
        if !self.phase_offsets.hind.is_finite() {
            return Err(GaitError::NonFinitePhase {
                name: "hind",
                value: self.phase_offsets.hind,
            });
        }
        Ok(())
    }

    /// Duration of one stance half-cycle, seconds.
    pub fn half_period(&self) -> f64 {
        0.5 * self.period
    }
}

/// The four legs, named fore/hind and left/right.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Leg {
    LeftFore,
    RightFore,
    LeftHind,
    RightHind,
}

/// Whether a leg is on the ground or swinging.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StancePhase {
    Stance,
    Swing,
}

/// One leg's place in the gait cycle at a queried instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LegPhase {
    pub leg: Leg,
    pub phase: StancePhase,
    /// Fraction of the current stance or swing interval already elapsed,
    /// in `[0, 1)`.
    pub progress: f64,
}

/// The two diagonal stance pairs of a trot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Diagonal {
    /// Left fore + right hind: the first half of each cycle.
    LfRh,
    /// Right fore + left hind: the second, mirrored half.
    RfLh,
}

/// Position within the cycle: time since the cycle started, in seconds.
fn cycle_time(gait: &GaitParams, t: f64) -> f64 {
    t.rem_euclid(gait.period)
}

/// The diagonal pair on the ground at time `t`.
pub fn active_diagonal(gait: &GaitParams, t: f64) -> Diagonal {
    if cycle_time(gait, t) >= gait.half_period() {
        Diagonal::RfLh
    } else {
        Diagonal::LfRh
    }
}

/// Stride displacements of the currently stancing diagonal at time `t`.
///
/// Each girdle's stance stride is a cosine of the cycle fraction plus that
/// girdle's phase offset; during the mirrored half-cycle the offsets gain an
/// extra half cycle because the opposite legs are on the ground. The result
/// is periodic in `t` with the gait period and smooth within each stance
/// half; it jumps at the diagonal switch, where the landing pair takes over.
///
/// `t` may be any finite value; negative times wrap into the cycle.
pub fn stride_at(gait: &GaitParams, t: f64) -> StrideState {
    let tau = cycle_time(gait, t);
    let frac = tau / gait.period;
    let mirrored = tau >= gait.half_period();
    let offset = if mirrored { 0.5 } else { 0.0 };
    let two_pi = 2.0 * std::f64::consts::PI;
    let fore_stride =
        gait.stride_amplitude * (two_pi * (frac + gait.phase_offsets.fore + offset)).cos();
    let hind_stride =
        gait.stride_amplitude * (two_pi * (frac + gait.phase_offsets.hind + offset)).cos();
    StrideState {
        fore_stride,
        hind_stride,
        time: t,
    }
}

/// Stance/swing state and progress of all four legs at time `t`.
///
/// Legs are reported in the fixed order left-fore, right-fore, left-hind,
/// right-hind. The schedule is right-continuous: at the switch instant the
/// newly landing pair is already reported as stancing with progress `0`.
pub fn stance_schedule(gait: &GaitParams, t: f64) -> [LegPhase; 4] {
    let tau = cycle_time(gait, t);
    let half = gait.half_period();
    let first_half = tau < half;
    let progress = if first_half {
        tau / half
    } else {
        (tau - half) / half
    };
    let phase_of = |stances_first_half: bool| {
        if stances_first_half == first_half {
            StancePhase::Stance
        } else {
            StancePhase::Swing
        }
    };
    [
        LegPhase {
            leg: Leg::LeftFore,
            phase: phase_of(true),
            progress,
        },
        LegPhase {
            leg: Leg::RightFore,
            phase: phase_of(false),
            progress,
        },
        LegPhase {
            leg: Leg::LeftHind,
            phase: phase_of(false),
            progress,
        },
        LegPhase {
            leg: Leg::RightHind,
            phase: phase_of(true),
            progress,
        },
    ]
}
