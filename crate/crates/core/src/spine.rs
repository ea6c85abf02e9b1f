//! Open-loop spine controllers.
//!
//! Three controllers drive the lateral flexion angle:
//!
//! - **non-spine**: the spine is held rigid (`R ≡ 0`), the baseline.
//! - **spine**: a plain cosine, `R(t) = α·cos(ω t + φ)` with `ω = 2π/T`
//!   locked to the gait period.
//! - **balance-spine**: the same cosine, but evaluated on a *time-warped*
//!   phase that runs at rate `k₁·ω` during the first quarter of each stance
//!   half and `k₂·ω = (2 − k₁)·ω` during the second. Choosing
//!   `k₁ = 2·arccos(R′/α)/π` makes the warped phase reach `arccos(R′/α)`
//!   exactly at mid-stance, so the flexion passes through the balancing
//!   angle `R′` at the instant the balance solver assumed — while `k₁ + k₂`
//!   still sums to `2`, keeping the average rate (and the cycle period)
//!   unchanged.
//!
//! The warped controller is stateful: it integrates its phase step by step
//! at the simulation resolution, choosing each step's rate from the step's
//! midpoint so the quarter boundaries land between samples and never
//! depend on floating-point ties.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

use crate::kinematics::FLEXION_LIMIT;

/// Minimum number of controller steps per gait cycle for the warped kind.
pub const MIN_WARP_STEPS_PER_PERIOD: u32 = 100;

/// Errors from spine controller configuration and evaluation.
#[derive(Debug, Error)]
pub enum SpineError {
    /// Amplitude outside `[0, π/2]` or not finite.
    #[error("spine amplitude must be finite and within [0, {FLEXION_LIMIT}] rad, got {value}")]
    InvalidAmplitude { value: f64 },
    /// Non-positive or non-finite cycle period.
    #[error("controller period must be strictly positive and finite, got {value}")]
    InvalidPeriod { value: f64 },
    /// Non-positive or non-finite time step.
    #[error("controller time step must be strictly positive and finite, got {value}")]
    InvalidTimeStep { value: f64 },
    /// The warped controller needs a reasonably fine step to integrate its
    /// phase.
    #[error(
        "time step {time_step} s is too coarse for the warped controller: \
         need at least {MIN_WARP_STEPS_PER_PERIOD} steps per cycle of period {period} s"
    )]
    TimeStepTooCoarse { time_step: f64, period: f64 },
    /// Non-finite initial phase.
    #[error("controller initial phase must be finite, got {value}")]
    NonFinitePhase { value: f64 },
    /// The warped controller was configured without a balance target.
    #[error("the warped controller needs a balance target R' when its amplitude is positive")]
    MissingBalanceTarget,
    /// Balance target is NaN or infinite.
    #[error("balance target must be finite, got {value}")]
    NonFiniteBalanceTarget { value: f64 },
    /// Negative balance targets cannot be reached by the warped sweep.
    #[error(
        "balance target R' = {target} rad is negative; the warped controller sweeps \
         through +R' and cannot reach it"
    )]
    NegativeBalanceTarget { target: f64 },
    /// Balance target above the amplitude: the cosine never gets there.
    #[error(
        "balance target R' = {target} rad exceeds the spine amplitude {amplitude} rad; \
         raise the spine amplitude above the target"
    )]
    TargetExceedsAmplitude { target: f64, amplitude: f64 },
    /// Warp factor requested for a zero-amplitude spine.
    #[error("warp factor is undefined for a non-positive spine amplitude ({amplitude})")]
    ZeroAmplitudeWarp { amplitude: f64 },
    /// A controller kind string that is not one of the known names.
    #[error("unknown controller kind {got:?}; expected non-spine, spine, or balance-spine")]
    UnknownKind { got: String },
    /// A query time that does not sit on the controller's step grid.
    #[error("time {t} s is not aligned to the controller step grid (step {time_step} s)")]
    OffGridTime { t: f64, time_step: f64 },
}

/// Which controller drives the spine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    /// Rigid spine, `R ≡ 0`.
    NonSpine,
    /// Uniform-rate cosine.
    Spine,
    /// Time-warped cosine that hits the balance target at mid-stance.
    BalanceSpine,
}

impl ControllerKind {
    /// All kinds, in baseline → warped order.
    pub fn all() -> [ControllerKind; 3] {
        [
            ControllerKind::NonSpine,
            ControllerKind::Spine,
            ControllerKind::BalanceSpine,
        ]
    }

    /// The canonical command-line name of this kind.
    pub fn as_str(&self) -> &'static str {
        match self {
            ControllerKind::NonSpine => "non-spine",
            ControllerKind::Spine => "spine",
            ControllerKind::BalanceSpine => "balance-spine",
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ControllerKind {
    type Err = SpineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "non-spine" => Ok(ControllerKind::NonSpine),
            "spine" => Ok(ControllerKind::Spine),
            "balance-spine" => Ok(ControllerKind::BalanceSpine),
            other => Err(SpineError::UnknownKind {
                got: other.to_string(),
            }),
        }
    }
}

/// Parameters shared by all spine controllers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpineParams {
    /// Which controller to run.
    pub kind: ControllerKind,
    /// Flexion amplitude `α`, radians, in `[0, π/2]`.
    pub amplitude: f64,
    /// Gait cycle period `T`, seconds.
    pub period: f64,
    /// Initial phase `φ`, radians.
    pub initial_phase: f64,
    /// Controller step, seconds. The warped controller integrates its phase
    /// on this grid and requires at least
    /// [`MIN_WARP_STEPS_PER_PERIOD`] steps per cycle; the open-loop kinds
    /// are closed-form in `t` and only need it to define the step grid.
    pub time_step: f64,
    /// Flexion the warped controller must reach at mid-stance, radians.
    /// Required (and used) only by [`ControllerKind::BalanceSpine`] with a
    /// positive amplitude.
    pub balance_target: Option<f64>,
}

impl SpineParams {
    /// Parameters for an open-loop kind, with the step grid defaulted to
    /// 1024 steps per cycle.
    pub fn open_loop(
        kind: ControllerKind,
        amplitude: f64,
        period: f64,
        initial_phase: f64,
    ) -> Self {
        Self {
            kind,
            amplitude,
            period,
            initial_phase,
            time_step: period / 1024.0,
            balance_target: None,
        }
    }

    /// Parameters for the warped controller.
    pub fn warped(
        amplitude: f64,
        period: f64,
        initial_phase: f64,
        time_step: f64,
        balance_target: f64,
    ) -> Self {
        Self {
            kind: ControllerKind::BalanceSpine,
            amplitude,
            period,
            initial_phase,
            time_step,
            balance_target: Some(balance_target),
        }
    }

    /// Checks the waveform fields (amplitude, period, phase) only.
    pub fn validate_waveform(&self) -> Result<(), SpineError> {
        if !(self.amplitude.is_finite() && (0.0..=FLEXION_LIMIT).contains(&self.amplitude)) {
            return Err(SpineError::InvalidAmplitude {
                value: self.amplitude,
            });
        }
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(SpineError::InvalidPeriod { value: self.period });
        }
        if !self.initial_phase.is_finite() {
            return Err(SpineError::NonFinitePhase {
                value: self.initial_phase,
            });
        }
        Ok(())
    }

    /// Full validation, including the step grid and the warped kind's
    /// balance target.
    pub fn validate(&self) -> Result<(), SpineError> {
        self.validate_waveform()?;
        if !(self.time_step.is_finite() && self.time_step > 0.0) {
            return Err(SpineError::InvalidTimeStep {
                value: self.time_step,
            });
        }
        if self.kind == ControllerKind::BalanceSpine {
            if self.time_step > self.period / f64::from(MIN_WARP_STEPS_PER_PERIOD) {
                return Err(SpineError::TimeStepTooCoarse {
                    time_step: self.time_step,
                    period: self.period,
                });
            }
            if self.amplitude > 0.0 {
                let target = self
                    .balance_target
                    .ok_or(SpineError::MissingBalanceTarget)?;
                if !target.is_finite() {
                    return Err(SpineError::NonFiniteBalanceTarget { value: target });
                }
                if target < 0.0 {
                    return Err(SpineError::NegativeBalanceTarget { target });
                }
                if target > self.amplitude {
                    return Err(SpineError::TargetExceedsAmplitude {
                        target,
                        amplitude: self.amplitude,
                    });
                }
            }
        }
        Ok(())
    }
}

/// The two rate segments of each stance half-cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Segment {
    /// From touchdown to mid-stance: rate `k₁·ω`.
    FirstQuarter,
    /// From mid-stance to the diagonal switch: rate `k₂·ω`.
    SecondQuarter,
}

/// Rate multiplier for one warp segment.
///
/// `k₁ = 2·arccos(R′/α)/π` stretches (or compresses) the first quarter so
/// the warped phase reaches `arccos(R′/α)` exactly at mid-stance;
/// `k₂ = 2 − k₁` restores the average rate. `k₁ + k₂` sums to exactly `2`
/// in floating point, and a target of `0` gives `k₁ = k₂ = 1` exactly.
pub fn warp_factor(
    balance_target: f64,
    amplitude: f64,
    segment: Segment,
) -> Result<f64, SpineError> {
    if !(amplitude.is_finite() && amplitude > 0.0) {
        return Err(SpineError::ZeroAmplitudeWarp { amplitude });
    }
    if !balance_target.is_finite() {
        return Err(SpineError::NonFiniteBalanceTarget {
            value: balance_target,
        });
    }
    if balance_target < 0.0 {
        return Err(SpineError::NegativeBalanceTarget {
            target: balance_target,
        });
    }
    if balance_target > amplitude {
        return Err(SpineError::TargetExceedsAmplitude {
            target: balance_target,
            amplitude,
        });
    }
    let k1 = 2.0 * (balance_target / amplitude).acos() / std::f64::consts::PI;
    Ok(match segment {
        Segment::FirstQuarter => k1,
        Segment::SecondQuarter => 2.0 - k1,
    })
}

/// Integration state of the warped phase.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WarpState {
    /// Accumulated warped phase `f_T`, radians.
    pub warped_phase: f64,
    /// Segment the *next* step will integrate through.
    pub segment: Segment,
    /// Rate multiplier of that segment.
    pub k: f64,
}

/// A stepped spine controller.
///
/// `flexion()` reads the current step's flexion; `advance()` moves to the
/// next step. The controller counts steps from the gait-cycle origin, so a
/// simulation that starts mid-cycle must construct it with
/// [`Controller::from_gait_origin`] — the warped phase accumulated before
/// the simulation window matters.
#[derive(Clone, Debug)]
pub struct Controller {
    params: SpineParams,
    omega: f64,
    k_first: f64,
    k_second: f64,
    /// Warped kind with zero amplitude: flexion is identically zero and the
    /// warp state machine is bypassed.
    degenerate: bool,
    abs_step: u64,
    state: WarpState,
}

impl Controller {
    /// Builds a controller positioned at the gait-cycle origin (step 0).
    pub fn new(params: SpineParams) -> Result<Self, SpineError> {
        params.validate()?;
        let degenerate = params.kind == ControllerKind::BalanceSpine && params.amplitude == 0.0;
        let (k_first, k_second) = if params.kind == ControllerKind::BalanceSpine && !degenerate {
            let target = params
                .balance_target
                .ok_or(SpineError::MissingBalanceTarget)?;
            (
                warp_factor(target, params.amplitude, Segment::FirstQuarter)?,
                warp_factor(target, params.amplitude, Segment::SecondQuarter)?,
            )
        } else {
            (1.0, 1.0)
        };
        let omega = 2.0 * std::f64::consts::PI / params.period;
        let mut controller = Self {
            params,
            omega,
            k_first,
            k_second,
            degenerate,
            abs_step: 0,
            state: WarpState {
                warped_phase: 0.0,
                segment: Segment::FirstQuarter,
                k: k_first,
            },
        };
        let segment = controller.segment_for_step(0);
        controller.state.segment = segment;
        controller.state.k = controller.k_for(segment);
        Ok(controller)
    }

    /// Builds a controller and advances it to `origin_step`, accumulating
    /// whatever warped phase the steps before the simulation window would
    /// have produced.
    pub fn from_gait_origin(params: SpineParams, origin_step: u64) -> Result<Self, SpineError> {
        let mut controller = Self::new(params)?;
        for _ in 0..origin_step {
            controller.advance();
        }
        Ok(controller)
    }

    /// Segment containing the midpoint of the given step.
    ///
    /// Using the step midpoint keeps the decision a half-step away from the
    /// quarter boundaries, so it never rides on a floating-point tie.
    fn segment_for_step(&self, step: u64) -> Segment {
        let half = 0.5 * self.params.period;
        let quarter = 0.25 * self.params.period;
        let midpoint = ((step as f64 + 0.5) * self.params.time_step).rem_euclid(half);
        if midpoint < quarter {
            Segment::FirstQuarter
        } else {
            Segment::SecondQuarter
        }
    }

    fn k_for(&self, segment: Segment) -> f64 {
        match segment {
            Segment::FirstQuarter => self.k_first,
            Segment::SecondQuarter => self.k_second,
        }
    }

    /// The parameters the controller was built from.
    pub fn params(&self) -> &SpineParams {
        &self.params
    }

    /// Which controller kind this is.
    pub fn kind(&self) -> ControllerKind {
        self.params.kind
    }

    /// Steps taken since the gait-cycle origin.
    pub fn step_index(&self) -> u64 {
        self.abs_step
    }

    /// Time since the gait-cycle origin, seconds.
    pub fn time(&self) -> f64 {
        self.abs_step as f64 * self.params.time_step
    }

    /// The warp integration state (meaningful for the warped kind).
    pub fn warp_state(&self) -> WarpState {
        self.state
    }

    /// Flexion angle at the current step, radians.
    pub fn flexion(&self) -> f64 {
        match self.params.kind {
            ControllerKind::NonSpine => 0.0,
            ControllerKind::Spine => {
                self.params.amplitude * (self.omega * self.time() + self.params.initial_phase).cos()
            }
            ControllerKind::BalanceSpine => {
                if self.degenerate {
                    0.0
                } else {
                    self.params.amplitude
                        * (self.state.warped_phase + self.params.initial_phase).cos()
                }
            }
        }
    }

    /// Phase driving the cosine at the current step, radians.
    ///
    /// For the warped kind this is the accumulated warped phase `f_T`; for
    /// the uniform cosine it is `ω·t`; the rigid kind reports `0`.
    pub fn warped_phase(&self) -> f64 {
        match self.params.kind {
            ControllerKind::NonSpine => 0.0,
            ControllerKind::Spine => self.omega * self.time(),
            ControllerKind::BalanceSpine => self.state.warped_phase,
        }
    }

    /// Rate multiplier in effect at the current step.
    ///
    /// `0` for the rigid kind (and the degenerate zero-amplitude warped
    /// controller), `1` for the uniform cosine, `k₁` or `k₂` for the warped
    /// kind.
    pub fn scale_factor(&self) -> f64 {
        match self.params.kind {
            ControllerKind::NonSpine => 0.0,
            ControllerKind::Spine => 1.0,
            ControllerKind::BalanceSpine => {
                if self.degenerate {
                    0.0
                } else {
                    self.state.k
                }
            }
        }
    }

    /// Moves to the next step, integrating the warped phase through the
    /// current segment.
    pub fn advance(&mut self) {
        let stepping_warp = self.params.kind == ControllerKind::BalanceSpine && !self.degenerate;
        if stepping_warp {
            self.state.warped_phase += self.state.k * self.omega * self.params.time_step;
        }
        self.abs_step += 1;
        let segment = self.segment_for_step(self.abs_step);
        self.state.segment = segment;
        self.state.k = self.k_for(segment);
    }
}

/// Stateless evaluation of one controller step.
///
/// Returns the flexion at time `t` (which must lie on the controller's step
/// grid) together with the state advanced by one step. The open-loop kinds
/// carry no state and return it unchanged; the warped kind integrates its
/// phase through the segment the step's midpoint falls in, exactly as
/// [`Controller::advance`] does.
pub fn flexion_at(
    params: &SpineParams,
    state: &WarpState,
    t: f64,
) -> Result<(f64, WarpState), SpineError> {
    params.validate()?;
    if !t.is_finite() || t < 0.0 {
        return Err(SpineError::OffGridTime {
            t,
            time_step: params.time_step,
        });
    }
    let steps = t / params.time_step;
    let rounded = steps.round();
    if (steps - rounded).abs() > 1e-6 {
        return Err(SpineError::OffGridTime {
            t,
            time_step: params.time_step,
        });
    }
    let step = rounded as u64;

    match params.kind {
        ControllerKind::NonSpine => Ok((0.0, *state)),
        ControllerKind::Spine => {
            let omega = 2.0 * std::f64::consts::PI / params.period;
            let flexion = params.amplitude * (omega * t + params.initial_phase).cos();
            Ok((flexion, *state))
        }
        ControllerKind::BalanceSpine => {
            if params.amplitude == 0.0 {
                return Ok((0.0, *state));
            }
            let target = params
                .balance_target
                .ok_or(SpineError::MissingBalanceTarget)?;
            let flexion = params.amplitude * (state.warped_phase + params.initial_phase).cos();
            let omega = 2.0 * std::f64::consts::PI / params.period;
            let half = 0.5 * params.period;
            let quarter = 0.25 * params.period;
            let segment_of = |step: u64| {
                let midpoint = ((step as f64 + 0.5) * params.time_step).rem_euclid(half);
                if midpoint < quarter {
                    Segment::FirstQuarter
                } else {
                    Segment::SecondQuarter
                }
            };
            let k_now = warp_factor(target, params.amplitude, segment_of(step))?;
            let next_segment = segment_of(step + 1);
            let next = WarpState {
                warped_phase: state.warped_phase + k_now * omega * params.time_step,
                segment: next_segment,
                k: warp_factor(target, params.amplitude, next_segment)?,
            };
            Ok((flexion, next))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn warped_params(target: f64) -> SpineParams {
        let period = 1.0 / 2.1;
        SpineParams::warped(0.016, period, 0.0, period / 1024.0, target)
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in ControllerKind::all() {
            let text = kind.to_string();
            assert_eq!(text.parse::<ControllerKind>().unwrap(), kind);
        }
        assert_eq!(ControllerKind::NonSpine.to_string(), "non-spine");
        assert_eq!(ControllerKind::BalanceSpine.to_string(), "balance-spine");
        assert!(matches!(
            "wiggly".parse::<ControllerKind>(),
            Err(SpineError::UnknownKind { .. })
        ));
    }

    #[test]
    fn kind_serializes_with_kebab_case_names() {
        let json = serde_json::to_string(&ControllerKind::BalanceSpine).unwrap();
        assert_eq!(json, "\"balance-spine\"");
        let back: ControllerKind = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ControllerKind::BalanceSpine);
    }

    #[test]
    fn warp_factor_reference_values() {
        // A target of half the amplitude puts arccos at π/3, so k₁ must be
        // exactly the double-precision 2/3.
        let k1 = warp_factor(0.008, 0.016, Segment::FirstQuarter).unwrap();
        assert!((k1 - 0.6666666666666666).abs() < 1e-15);

        // A zero target leaves the rate uniform — exactly.
        assert_eq!(warp_factor(0.0, 0.016, Segment::FirstQuarter).unwrap(), 1.0);
        assert_eq!(
            warp_factor(0.0, 0.016, Segment::SecondQuarter).unwrap(),
            1.0
        );

        // A target equal to the amplitude freezes the first quarter.
        assert_eq!(
            warp_factor(0.016, 0.016, Segment::FirstQuarter).unwrap(),
            0.0
        );
        assert_eq!(
            warp_factor(0.016, 0.016, Segment::SecondQuarter).unwrap(),
            2.0
        );
    }

    #[test]
    fn warp_factor_rejects_out_of_range_targets() {
        assert!(matches!(
            warp_factor(-0.001, 0.016, Segment::FirstQuarter),
            Err(SpineError::NegativeBalanceTarget { .. })
        ));
        assert!(matches!(
            warp_factor(0.017, 0.016, Segment::FirstQuarter),
            Err(SpineError::TargetExceedsAmplitude { .. })
        ));
        assert!(matches!(
            warp_factor(0.001, 0.0, Segment::FirstQuarter),
            Err(SpineError::ZeroAmplitudeWarp { .. })
        ));
    }

    #[test]
    fn params_validation_covers_each_failure() {
        let good = warped_params(0.009);
        assert!(good.validate().is_ok());

        let mut p = good;
        p.amplitude = -0.1;
        assert!(matches!(
            p.validate(),
            Err(SpineError::InvalidAmplitude { .. })
        ));

        p = good;
        p.time_step = good.period / 50.0;
        assert!(matches!(
            p.validate(),
            Err(SpineError::TimeStepTooCoarse { .. })
        ));

        p = good;
        p.balance_target = None;
        assert!(matches!(
            p.validate(),
            Err(SpineError::MissingBalanceTarget)
        ));

        p = good;
        p.balance_target = Some(0.05);
        assert!(matches!(
            p.validate(),
            Err(SpineError::TargetExceedsAmplitude { .. })
        ));

        // Open-loop kinds do not require the fine step grid.
        let coarse = SpineParams {
            time_step: 0.5,
            ..SpineParams::open_loop(ControllerKind::Spine, 0.016, 1.0, 0.0)
        };
        assert!(coarse.validate().is_ok());
    }

    #[test]
    fn rigid_controller_is_identically_zero() {
        let params = SpineParams::open_loop(ControllerKind::NonSpine, 0.0, 1.0, 0.0);
        let mut ctrl = Controller::new(params).unwrap();
        for _ in 0..300 {
            assert_eq!(ctrl.flexion(), 0.0);
            assert_eq!(ctrl.scale_factor(), 0.0);
            assert_eq!(ctrl.warped_phase(), 0.0);
            ctrl.advance();
        }
    }

    #[test]
    fn uniform_cosine_matches_closed_form() {
        let period = 1.0 / 2.1;
        let params = SpineParams::open_loop(ControllerKind::Spine, 0.016, period, 0.3);
        let mut ctrl = Controller::new(params).unwrap();
        let omega = 2.0 * PI / period;
        for step in 0..500u64 {
            let t = step as f64 * params.time_step;
            assert_eq!(ctrl.flexion(), 0.016 * (omega * t + 0.3).cos());
            assert_eq!(ctrl.scale_factor(), 1.0);
            ctrl.advance();
        }
    }

    #[test]
    fn warped_phase_advances_a_full_turn_per_cycle() {
        let params = warped_params(0.009);
        let mut ctrl = Controller::new(params).unwrap();
        for _ in 0..1024 {
            ctrl.advance();
        }
        assert_relative_eq!(
            ctrl.warp_state().warped_phase,
            2.0 * PI,
            max_relative = 1e-12
        );
    }

    #[test]
    fn warped_flexion_hits_the_target_at_mid_stance() {
        let target = 0.009;
        let params = warped_params(target);
        let mut ctrl = Controller::new(params).unwrap();
        // Steps 256 and 768 are the mid-stance instants of the two halves
        // (1024 steps per cycle): flexion must pass through ±R' there.
        let mut seen = Vec::new();
        for step in 0..=768u64 {
            if step == 256 || step == 768 {
                seen.push(ctrl.flexion());
            }
            ctrl.advance();
        }
        assert_relative_eq!(seen[0], target, max_relative = 1e-9);
        assert_relative_eq!(seen[1], -target, max_relative = 1e-9);
    }

    #[test]
    fn zero_amplitude_warped_controller_degenerates_to_rigid() {
        let period = 1.0 / 2.1;
        let params = SpineParams::warped(0.0, period, 0.0, period / 1024.0, 0.0);
        let mut ctrl = Controller::new(params).unwrap();
        for _ in 0..1024 {
            assert_eq!(ctrl.flexion(), 0.0);
            assert_eq!(ctrl.scale_factor(), 0.0);
            ctrl.advance();
        }
    }

    #[test]
    fn gait_origin_construction_equals_manual_stepping() {
        let params = warped_params(0.0123);
        let seeded = Controller::from_gait_origin(params, 341).unwrap();
        let mut manual = Controller::new(params).unwrap();
        for _ in 0..341 {
            manual.advance();
        }
        assert_eq!(seeded.warp_state(), manual.warp_state());
        assert_eq!(seeded.step_index(), manual.step_index());
        assert_eq!(seeded.flexion(), manual.flexion());
    }

    #[test]
    fn flexion_at_matches_the_stepped_controller() {
        let params = warped_params(0.009);
        let mut ctrl = Controller::new(params).unwrap();
        let mut state = ctrl.warp_state();
        for step in 0..600u64 {
            let t = step as f64 * params.time_step;
            let (flexion, next) = flexion_at(&params, &state, t).unwrap();
            assert_eq!(flexion, ctrl.flexion(), "step {step}");
            state = next;
            ctrl.advance();
        }
    }

    #[test]
    fn flexion_at_rejects_off_grid_times() {
        let params = warped_params(0.009);
        let state = Controller::new(params).unwrap().warp_state();
        let off = 0.4 * params.time_step;
        assert!(matches!(
            flexion_at(&params, &state, off),
            Err(SpineError::OffGridTime { .. })
        ));
        assert!(flexion_at(&params, &state, 17.0 * params.time_step).is_ok());
    }

    proptest! {
        #[test]
        fn warp_factors_sum_to_exactly_two(fraction in 0.0f64..=1.0) {
            let amplitude = 0.016;
            let target = fraction * amplitude;
            let target = target.min(amplitude);
            let k1 = warp_factor(target, amplitude, Segment::FirstQuarter).unwrap();
            let k2 = warp_factor(target, amplitude, Segment::SecondQuarter).unwrap();
            prop_assert!((0.0..=1.0).contains(&k1));
            prop_assert!((1.0..=2.0).contains(&k2));
            // The sum is exact in floating point, not merely close.
            prop_assert_eq!(k1 + k2, 2.0);
        }

        #[test]
        fn warped_cycle_phase_is_target_independent(
            fraction in 0.0f64..=1.0,
            steps in 128u32..2048,
        ) {
            // Whatever the target, a full cycle advances the warped phase
            // by one full turn: the warp redistributes time, never creates
            // or destroys it.
            let amplitude = 0.016;
            let period = 0.5;
            let steps = steps - (steps % 4); // keep quarters on the grid
            let params = SpineParams::warped(
                amplitude,
                period,
                0.0,
                period / f64::from(steps),
                fraction * amplitude,
            );
            let mut ctrl = Controller::new(params).unwrap();
            for _ in 0..steps {
                ctrl.advance();
            }
            let phase = ctrl.warp_state().warped_phase;
            prop_assert!((phase - 2.0 * PI).abs() < 2.0 * PI * 1e-12);
        }
    }
}
