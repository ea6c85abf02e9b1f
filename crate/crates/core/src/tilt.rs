//! Tilt proxies driven by the balance measure, and their metrics.
//!
//! The balance measure `dis` says how far the center of mass sits from the
//! support line; these proxies turn it into body-tilt angles without a full
//! dynamics simulation:
//!
//! - **Roll** integrates a damped second-order response,
//!   `θ̈ = roll_gain·dis − damping·θ̇`, with a semi-implicit Euler step at
//!   the trace resolution. Gravity torque about the support line is
//!   proportional to the lever arm `dis`, so the roll angle accumulates the
//!   measure's history.
//! - **Pitch** is instantaneous: the lever arm's longitudinal component is
//!   `dis·a/‖(a, b)‖` for support line `a·x + b·y + c = 0`, scaled by
//!   `pitch_gain`. Pitch has no memory — a level support line produces no
//!   pitch regardless of history.
//!
//! Metrics are aggregated over *switch-aligned half-stride windows*: each
//! window spans one stance half, starting at a diagonal switch, so that
//! averages compare like with like across controllers and random time
//! origins.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::balance::SupportLine;

/// Errors from tilt simulation and metrics.
#[derive(Debug, Error)]
pub enum TiltError {
    /// No samples to integrate.
    #[error("tilt simulation needs a non-empty balance trace")]
    EmptyTrace,
    /// Non-positive or non-finite time step.
    #[error("tilt time step must be strictly positive and finite, got {value}")]
    InvalidTimeStep { value: f64 },
    /// Invalid gains or damping.
    #[error("invalid tilt parameters: {reason}")]
    InvalidParams { reason: String },
    /// Reset schedule with a zero interval.
    #[error("reset interval must be at least 1 step")]
    InvalidResetInterval,
    /// The metric traces disagree on length.
    #[error("trace lengths differ: roll {roll}, pitch {pitch}, dis {dis}")]
    MismatchedLengths {
        roll: usize,
        pitch: usize,
        dis: usize,
    },
    /// The trace has no complete half-stride window after the start offset.
    #[error(
        "no complete half-stride window: {available} samples after the aligned start, \
         window needs {half_steps}"
    )]
    NoCompleteWindow { available: usize, half_steps: usize },
}

/// Gains of the tilt proxies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TiltParams {
    /// Roll forcing gain, rad·s⁻²·m⁻¹.
    pub roll_gain: f64,
    /// Pitch gain, rad·m⁻¹.
    pub pitch_gain: f64,
    /// Roll velocity damping, s⁻¹.
    pub damping: f64,
    /// Zero the roll state at every diagonal switch (models a stabilizing
    /// reflex that re-levels the body at each touchdown).
    pub reset_on_switch: bool,
}

impl TiltParams {
    /// Checks that the gains and damping are finite and non-negative.
    pub fn validate(&self) -> Result<(), TiltError> {
        for (name, value) in [
            ("roll_gain", self.roll_gain),
            ("pitch_gain", self.pitch_gain),
            ("damping", self.damping),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(TiltError::InvalidParams {
                    reason: format!("{name} must be finite and non-negative, got {value}"),
                });
            }
        }
        Ok(())
    }
}

/// Where the diagonal switches fall on a trace's step grid.
///
/// Sample `i` is a switch instant when `(i + origin_offset) % interval ==
/// 0`: `origin_offset` is the trace's first step counted from the
/// gait-cycle origin, and `interval` is the number of steps per stance
/// half.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ResetSchedule {
    /// Steps between the gait-cycle origin and the trace's first sample.
    pub origin_offset: u64,
    /// Steps per stance half-cycle.
    pub interval: u32,
}

/// Per-half-stride aggregate metrics of one simulation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalanceMetrics {
    /// Mean of `|θ_roll|` across switch-aligned half-stride windows, rad.
    pub mean_abs_roll: f64,
    /// Mean of `|θ_pitch|` across the same windows, rad.
    pub mean_abs_pitch: f64,
    /// Signed trapezoid integral of `dis` over the first aligned window,
    /// m·s. Near-zero means the measure's excursions cancel within one
    /// stance half.
    pub half_stride_signed_area: f64,
    /// Mean of `|θ_roll|` sampled exactly at the switch instants, rad.
    pub roll_at_switch: f64,
}

/// Integrates the roll response to a balance trace.
///
/// Returns one roll angle per input sample; sample `i` is the state
/// *before* integrating step `i`, so `out[0]` is always `0`. When
/// `params.reset_on_switch` is set and a schedule is given, the roll state
/// is zeroed at every switch instant after the first sample (the trace's
/// own start is a switch only for the windows, not for the state).
pub fn simulate_roll(
    dis: &[f64],
    dt: f64,
    params: &TiltParams,
    switches: Option<ResetSchedule>,
) -> Result<Vec<f64>, TiltError> {
    if dis.is_empty() {
        return Err(TiltError::EmptyTrace);
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(TiltError::InvalidTimeStep { value: dt });
    }
    params.validate()?;
    if let Some(schedule) = &switches {
        if schedule.interval == 0 {
            return Err(TiltError::InvalidResetInterval);
        }
    }

    let mut theta = 0.0f64;
    let mut velocity = 0.0f64;
    let mut out = Vec::with_capacity(dis.len());
    for (i, &d) in dis.iter().enumerate() {
        if params.reset_on_switch {
            if let Some(schedule) = &switches {
                if i > 0
                    && (i as u64 + schedule.origin_offset)
                        .is_multiple_of(u64::from(schedule.interval))
                {
                    theta = 0.0;
                    velocity = 0.0;
                }
            }
        }
        out.push(theta);
        // Semi-implicit Euler: update the velocity first, then move the
        // angle with the *new* velocity.
        velocity += dt * (params.roll_gain * d - params.damping * velocity);
        theta += dt * velocity;
    }
    Ok(out)
}

/// Instantaneous pitch proxy for one sample.
///
/// Projects the balance lever arm onto the longitudinal axis through the
/// support line's normal direction: `pitch_gain · dis · a / ‖(a, b)‖`.
pub fn pitch_reading(line: &SupportLine, dis: f64, pitch_gain: f64) -> f64 {
    pitch_gain * dis * line.a / line.a.hypot(line.b)
}

/// Aggregates tilt metrics over switch-aligned half-stride windows.
///
/// `start` is the index of the first switch instant in the trace and
/// `half_steps` the window length in steps; window `j` covers samples
/// `[start + j·half_steps, start + (j+1)·half_steps)`, its right endpoint
/// being the next window's first sample (and the switch instant used for
/// [`BalanceMetrics::roll_at_switch`]). A trailing portion shorter than one
/// window is ignored; at least one complete window must fit.
pub fn half_stride_metrics(
    roll: &[f64],
    pitch: &[f64],
    dis: &[f64],
    dt: f64,
    half_steps: usize,
    start: usize,
) -> Result<BalanceMetrics, TiltError> {
    if roll.len() != pitch.len() || roll.len() != dis.len() {
        return Err(TiltError::MismatchedLengths {
            roll: roll.len(),
            pitch: pitch.len(),
            dis: dis.len(),
        });
    }
    if roll.is_empty() {
        return Err(TiltError::EmptyTrace);
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(TiltError::InvalidTimeStep { value: dt });
    }
    let available = roll.len().saturating_sub(1).saturating_sub(start);
    if half_steps == 0 || available < half_steps {
        return Err(TiltError::NoCompleteWindow {
            available,
            half_steps,
        });
    }

    let windows = available / half_steps;
    let mut mean_abs_roll = 0.0;
    let mut mean_abs_pitch = 0.0;
    let mut roll_at_switch = 0.0;
    for w in 0..windows {
        let base = start + w * half_steps;
        let mut roll_sum = 0.0;
        let mut pitch_sum = 0.0;
        for i in base..base + half_steps {
            roll_sum += roll[i].abs();
            pitch_sum += pitch[i].abs();
        }
        mean_abs_roll += roll_sum / half_steps as f64;
        mean_abs_pitch += pitch_sum / half_steps as f64;
        roll_at_switch += roll[base + half_steps].abs();
    }
    mean_abs_roll /= windows as f64;
    mean_abs_pitch /= windows as f64;
    roll_at_switch /= windows as f64;

    let mut half_stride_signed_area = 0.0;
    for i in start..start + half_steps {
        half_stride_signed_area += (dis[i] + dis[i + 1]) * 0.5 * dt;
    }

    Ok(BalanceMetrics {
        mean_abs_roll,
        mean_abs_pitch,
        half_stride_signed_area,
        roll_at_switch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn undamped(gain: f64) -> TiltParams {
        TiltParams {
            roll_gain: gain,
            pitch_gain: 20.0,
            damping: 0.0,
            reset_on_switch: false,
        }
    }

    #[test]
    fn constant_forcing_gives_the_exact_discrete_quadratic() {
        // With damping 0 and constant dis = c, the recurrence telescopes:
        // out[n] = gain·c·dt²·n(n+1)/2. Dyadic inputs make this exact.
        let dis = vec![1.0; 33];
        let dt = 0.5;
        let gain = 2.0;
        let roll = simulate_roll(&dis, dt, &undamped(gain), None).unwrap();
        assert_eq!(roll[0], 0.0);
        for (n, &theta) in roll.iter().enumerate() {
            let n_f = n as f64;
            assert_eq!(theta, gain * dt * dt * n_f * (n_f + 1.0) / 2.0);
        }
    }

    #[test]
    fn response_is_exactly_linear_in_the_forcing() {
        // Scaling dis by a power of two scales every intermediate exactly,
        // damping included.
        let dis: Vec<f64> = (0..200).map(|i| (0.1 * i as f64).sin() * 0.01).collect();
        let scaled: Vec<f64> = dis.iter().map(|d| d * 4.0).collect();
        let params = TiltParams {
            roll_gain: 20.0,
            pitch_gain: 20.0,
            damping: 1.0,
            reset_on_switch: false,
        };
        let base = simulate_roll(&dis, 1.0 / 2048.0, &params, None).unwrap();
        let big = simulate_roll(&scaled, 1.0 / 2048.0, &params, None).unwrap();
        for (a, b) in base.iter().zip(&big) {
            assert_eq!((a * 4.0).to_bits(), b.to_bits());
        }
    }

    #[test]
    fn tracks_an_analytic_solution_that_returns_to_level() {
        // Choose θ(t) = sin(2u)·sin²(u) with u = π t/H: θ and θ̇ vanish at
        // both ends, and the profile is antisymmetric about the midpoint.
        // Feeding dis = θ̈/gain (damping 0) must reproduce θ and land back
        // near zero at the window end.
        let h = 0.5;
        let n = 512usize;
        let dt = h / n as f64;
        let gain = 20.0;
        let omega = PI / h;
        let dis: Vec<f64> = (0..=n)
            .map(|i| {
                let u = omega * (i as f64 * dt);
                // d²/dt² [sin(2u)·sin²(u)] = ω²·2·sin(2u)·(3·cos(2u) − 2·sin²(u))
                omega
                    * omega
                    * 2.0
                    * (2.0 * u).sin()
                    * (3.0 * (2.0 * u).cos() - 2.0 * u.sin() * u.sin())
                    / gain
            })
            .collect();
        let roll = simulate_roll(&dis, dt, &undamped(gain), None).unwrap();
        let target: Vec<f64> = (0..=n)
            .map(|i| {
                let u = omega * (i as f64 * dt);
                (2.0 * u).sin() * u.sin() * u.sin()
            })
            .collect();
        let peak = target.iter().cloned().fold(0.0f64, |m, v| m.max(v.abs()));
        let worst = roll
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(peak > 0.6, "test profile should actually move"); // true max 3√3/8 ≈ 0.65
        assert!(worst < 0.05 * peak, "worst error {worst} vs peak {peak}");
        assert!(
            roll[n].abs() < 0.05 * peak,
            "did not return to level: {}",
            roll[n]
        );
    }

    #[test]
    fn reset_schedule_zeroes_the_state_at_switches() {
        let dis = vec![0.01; 33];
        let params = TiltParams {
            reset_on_switch: true,
            ..undamped(20.0)
        };
        let schedule = ResetSchedule {
            origin_offset: 0,
            interval: 8,
        };
        let roll = simulate_roll(&dis, 0.01, &params, Some(schedule)).unwrap();
        assert_eq!(roll[8], 0.0);
        assert_eq!(roll[16], 0.0);
        assert_ne!(roll[7], 0.0);
        assert_ne!(roll[9], 0.0);

        // An origin offset moves the switch instants accordingly.
        let offset = ResetSchedule {
            origin_offset: 3,
            interval: 8,
        };
        let shifted = simulate_roll(&dis, 0.01, &params, Some(offset)).unwrap();
        assert_eq!(shifted[5], 0.0);
        assert_eq!(shifted[13], 0.0);
        assert_ne!(shifted[8], 0.0);

        // Without the flag the schedule is ignored.
        let plain = simulate_roll(&dis, 0.01, &undamped(20.0), Some(schedule)).unwrap();
        assert_ne!(plain[8], 0.0);
    }

    #[test]
    fn reset_never_fires_on_the_first_sample() {
        let dis = vec![0.01; 9];
        let params = TiltParams {
            reset_on_switch: true,
            ..undamped(20.0)
        };
        // origin_offset divisible by the interval puts a switch at i = 0;
        // the state is already fresh there and must not be re-zeroed in a
        // way that changes anything — and more importantly the run must not
        // panic on the modulo.
        let schedule = ResetSchedule {
            origin_offset: 16,
            interval: 8,
        };
        let roll = simulate_roll(&dis, 0.01, &params, Some(schedule)).unwrap();
        assert_eq!(roll[0], 0.0);
        assert_eq!(roll[8], 0.0);
        assert_ne!(roll[7], 0.0);
    }

    #[test]
    fn pitch_reading_projects_through_the_line_normal() {
        let line = SupportLine {
            a: 3.0,
            b: 4.0,
            c: 0.0,
        };
        // a/hypot = 3/5; gain 20, dis 0.01 → 20·0.01·0.6 = 0.12.
        let p = pitch_reading(&line, 0.01, 20.0);
        assert!((p - 0.12).abs() < 1e-15);

        // A level support line (normal purely lateral) produces no pitch.
        let level = SupportLine {
            a: 0.0,
            b: 1.0,
            c: 0.2,
        };
        assert_eq!(pitch_reading(&level, 0.05, 20.0), 0.0);
    }

    #[test]
    fn metrics_on_a_hand_checked_trace() {
        let roll = [0.0, 1.0, 2.0, 3.0, 4.0];
        let pitch = [0.0, -1.0, -2.0, -3.0, -4.0];
        let dis = [1.0, 1.0, 1.0, 1.0, 1.0];
        let m = half_stride_metrics(&roll, &pitch, &dis, 0.5, 2, 0).unwrap();
        // Windows [0,2) and [2,4): means 0.5 and 2.5 → 1.5.
        assert_eq!(m.mean_abs_roll, 1.5);
        assert_eq!(m.mean_abs_pitch, 1.5);
        // Switch samples are indices 2 and 4: (2 + 4)/2 = 3.
        assert_eq!(m.roll_at_switch, 3.0);
        // First window trapezoid: two panels of (1+1)/2·0.5 each.
        assert_eq!(m.half_stride_signed_area, 1.0);
    }

    #[test]
    fn metrics_ignore_a_trailing_partial_window() {
        let roll = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let pitch = roll;
        let dis = [0.0; 6];
        // start 1, half 2: windows [1,3) and [3,5); sample 5 is ignored.
        let m = half_stride_metrics(&roll, &pitch, &dis, 0.5, 2, 1).unwrap();
        assert_eq!(
            m.mean_abs_roll,
            ((1.0 + 2.0) / 2.0 + (3.0 + 4.0) / 2.0) / 2.0
        );
    }

    #[test]
    fn metrics_reject_degenerate_inputs() {
        let v = [0.0, 1.0, 2.0];
        assert!(matches!(
            half_stride_metrics(&v, &v[..2], &v, 0.5, 1, 0),
            Err(TiltError::MismatchedLengths { .. })
        ));
        assert!(matches!(
            half_stride_metrics(&v, &v, &v, 0.5, 4, 0),
            Err(TiltError::NoCompleteWindow { .. })
        ));
        assert!(matches!(
            half_stride_metrics(&v, &v, &v, 0.5, 1, 5),
            Err(TiltError::NoCompleteWindow { .. })
        ));
        assert!(matches!(
            half_stride_metrics(&v, &v, &v, 0.0, 1, 0),
            Err(TiltError::InvalidTimeStep { .. })
        ));
        assert!(simulate_roll(&[], 0.1, &undamped(1.0), None).is_err());
    }

    proptest! {
        #[test]
        fn roll_stays_bounded_under_damping(
            amplitude in 0.0001f64..0.01,
            cycles in 1u32..6,
        ) {
            // A damped response to bounded forcing cannot blow up: bound by
            // the static gain with a healthy safety factor.
            let n = 512 * cycles as usize;
            let dt = 1.0 / 1024.0;
            let dis: Vec<f64> = (0..n)
                .map(|i| amplitude * (2.0 * PI * i as f64 * dt * 2.1).sin())
                .collect();
            let params = TiltParams {
                roll_gain: 20.0,
                pitch_gain: 20.0,
                damping: 1.0,
                reset_on_switch: false,
            };
            let roll = simulate_roll(&dis, dt, &params, None).unwrap();
            let bound = 100.0 * 20.0 * amplitude;
            prop_assert!(roll.iter().all(|t| t.abs() < bound));
        }

        #[test]
        fn window_start_only_reindexes_complete_windows(start in 0usize..32) {
            // Metrics over a constant trace are the same wherever the
            // aligned start falls, as long as a window fits.
            let roll = vec![0.25; 256];
            let pitch = vec![0.5; 256];
            let dis = vec![0.125; 256];
            let m = half_stride_metrics(&roll, &pitch, &dis, 0.5, 32, start).unwrap();
            prop_assert_eq!(m.mean_abs_roll, 0.25);
            prop_assert_eq!(m.mean_abs_pitch, 0.5);
            prop_assert_eq!(m.roll_at_switch, 0.25);
        }
    }
}
