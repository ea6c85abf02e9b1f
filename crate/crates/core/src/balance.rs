//! The diagonal support line and the center-of-mass balance measure.
//!
//! During an ideal trot the robot stands on one diagonal leg pair, and the
//! line through those two feet is the entire base of support. The balance
//! measure `dis` is the signed perpendicular distance from the center of
//! mass to that line: zero means the robot is momentarily balanced, and the
//! sign says which way it tips. With the left-fore + right-hind pair on the
//! ground, positive `dis` means the center of mass lies toward the robot's
//! right.
//!
//! The mirrored diagonal (right-fore + left-hind) is handled by symmetry:
//! its footholds are the lateral reflection of the primary diagonal's
//! footholds evaluated at the opposite flexion angle, and its support line
//! coefficients follow the same reflection. The center of mass is *not*
//! reflected — it is a property of the body, not of the stance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gait::{active_diagonal, Diagonal, GaitError, GaitParams};
use crate::kinematics::{
    arc_centroid, footholds, hind_displacement, Footholds, KinematicsError, Point, RobotGeometry,
    StrideState,
};
use crate::spine::{Controller, ControllerKind, SpineError, SpineParams};

/// Minimum `samples_per_period` accepted by [`dis_trace`].
pub const MIN_TRACE_SAMPLES: u32 = 8;

/// Errors from balance evaluation.
#[derive(Debug, Error)]
pub enum BalanceError {
    /// The two footholds coincide, so no support line exists.
    #[error("support line is degenerate: footholds coincide (a = {a}, b = {b})")]
    DegenerateSupportLine { a: f64, b: f64 },
    /// A center-of-mass coordinate or mass fraction is invalid.
    #[error("invalid center of mass: {reason}")]
    InvalidCom { reason: String },
    /// Trace sampling below the supported minimum.
    #[error("dis trace needs at least {MIN_TRACE_SAMPLES} samples per period, got {got}")]
    TooFewSamples { got: u32 },
    /// The controller's cycle period does not match the gait's.
    #[error("controller period {controller} s does not match gait period {gait} s")]
    PeriodMismatch { controller: f64, gait: f64 },
    /// Underlying kinematic failure.
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    /// Invalid gait parameters.
    #[error(transparent)]
    Gait(#[from] GaitError),
    /// Invalid spine controller parameters.
    #[error(transparent)]
    Controller(#[from] SpineError),
}

/// How the center of mass responds to spinal flexion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ComMode {
    /// The center of mass stays at the configured point.
    #[default]
    Fixed,
    /// A fraction of the body mass rides on the spine arc, so the effective
    /// center of mass shifts with the arc's centroid.
    FlexionCoupled { spine_mass_fraction: f64 },
}

/// The body's center of mass in the fore-body frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComPosition {
    /// Longitudinal position, meters (negative is rearward of the fore hips).
    pub cx: f64,
    /// Lateral position, meters (positive toward the robot's right).
    pub cy: f64,
    /// Flexion response mode.
    #[serde(default)]
    pub mode: ComMode,
}

impl ComPosition {
    /// A fixed center of mass at `(cx, cy)`.
    pub fn fixed(cx: f64, cy: f64) -> Self {
        Self {
            cx,
            cy,
            mode: ComMode::Fixed,
        }
    }

    /// Checks coordinates and, for the coupled mode, the mass fraction.
    pub fn validate(&self) -> Result<(), BalanceError> {
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(BalanceError::InvalidCom {
                reason: format!("coordinates ({}, {}) must be finite", self.cx, self.cy),
            });
        }
        if let ComMode::FlexionCoupled {
            spine_mass_fraction,
        } = self.mode
        {
            if !(spine_mass_fraction.is_finite() && (0.0..=1.0).contains(&spine_mass_fraction)) {
                return Err(BalanceError::InvalidCom {
                    reason: format!(
                        "spine mass fraction {spine_mass_fraction} must be within [0, 1]"
                    ),
                });
            }
        }
        Ok(())
    }

    /// Effective center of mass at the given flexion angle.
    ///
    /// In the fixed mode this is `(cx, cy)` unconditionally (and exactly).
    /// In the flexion-coupled mode the configured point is shifted by the
    /// spine-arc centroid's displacement from its straight-spine position,
    /// scaled by the spine mass fraction — so a fraction of `0`, or a
    /// flexion of `0`, reproduces the fixed mode exactly.
    pub fn position_at(
        &self,
        geom: &RobotGeometry,
        flexion: f64,
    ) -> Result<Point, KinematicsError> {
        match self.mode {
            ComMode::Fixed => Ok(Point {
                x: self.cx,
                y: self.cy,
            }),
            ComMode::FlexionCoupled {
                spine_mass_fraction,
            } => {
                let bent = arc_centroid(geom, flexion)?;
                let straight = arc_centroid(geom, 0.0)?;
                Ok(Point {
                    x: self.cx + spine_mass_fraction * (bent.x - straight.x),
                    y: self.cy + spine_mass_fraction * (bent.y - straight.y),
                })
            }
        }
    }
}

/// The support line through the two stance feet, as `a·x + b·y + c = 0`.
///
/// The coefficients are oriented so that positive [`signed_distance`] is
/// toward the robot's right while the left-fore + right-hind diagonal
/// stances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportLine {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl SupportLine {
    /// Euclidean norm of the line normal `(a, b)`.
    pub fn normal_magnitude(&self) -> f64 {
        self.a.hypot(self.b)
    }
}

/// Support line of the left-fore + right-hind diagonal, in closed form.
///
/// Expanding the two-point line through the [`footholds`] gives
///
/// ```text
/// a = l_hy + l_FH
/// b = l_f + l_B + l_S − l_hx
/// c = (l_B + l_S − l_hx)·l_FH − l_f·l_hy
/// ```
///
/// which avoids forming the foothold coordinates first and keeps the
/// coefficients exactly consistent with [`hind_displacement`].
pub fn support_line(
    geom: &RobotGeometry,
    stride: &StrideState,
    flexion: f64,
) -> Result<SupportLine, BalanceError> {
    let (l_hx, l_hy) = hind_displacement(geom, stride.hind_stride, flexion)?;
    let a = l_hy + geom.fore_hip_halfwidth;
    let b = stride.fore_stride + geom.body_length + geom.spine_length - l_hx;
    let c = (geom.body_length + geom.spine_length - l_hx) * geom.fore_hip_halfwidth
        - stride.fore_stride * l_hy;
    let line = SupportLine { a, b, c };
    let norm = line.normal_magnitude();
    if norm.is_nan() || norm <= 0.0 {
        return Err(BalanceError::DegenerateSupportLine { a, b });
    }
    Ok(line)
}

/// Signed perpendicular distance from a point to the support line, meters.
///
/// Positive values are on the side of the line the normal `(a, b)` points
/// to — the robot's right for lines built by [`support_line`].
pub fn signed_distance(line: &SupportLine, com: Point) -> Result<f64, BalanceError> {
    let norm = line.normal_magnitude();
    if !norm.is_finite() || norm <= 0.0 {
        return Err(BalanceError::DegenerateSupportLine {
            a: line.a,
            b: line.b,
        });
    }
    Ok((line.a * com.x + line.b * com.y + line.c) / norm)
}

/// Everything the balance model knows about one instant of stance.
#[derive(Clone, Copy, Debug)]
pub struct BalanceSample {
    /// Strides the sample was evaluated at.
    pub stride: StrideState,
    /// Flexion angle the sample was evaluated at, radians.
    pub flexion: f64,
    /// Which diagonal pair is on the ground.
    pub diagonal: Diagonal,
    /// Stance foothold positions.
    pub footholds: Footholds,
    /// Support line through the footholds.
    pub line: SupportLine,
    /// Signed distance from the center of mass to the line, meters.
    pub dis: f64,
}

/// Evaluates footholds, support line, and balance measure for one instant.
///
/// For the mirrored diagonal the footholds are the lateral reflection of
/// the primary diagonal's footholds at the opposite flexion angle, and the
/// line coefficients are reflected accordingly (`a`, `c` negate, `b` is
/// unchanged); the center of mass is left alone. This makes the balance
/// measure of a symmetric gait antisymmetric across the diagonal switch.
pub fn balance_sample(
    geom: &RobotGeometry,
    stride: &StrideState,
    flexion: f64,
    com: Point,
    diagonal: Diagonal,
) -> Result<BalanceSample, BalanceError> {
    let (feet, line) = match diagonal {
        Diagonal::LfRh => (
            footholds(geom, stride, flexion)?,
            support_line(geom, stride, flexion)?,
        ),
        Diagonal::RfLh => {
            let base = footholds(geom, stride, -flexion)?;
            let reflected = Footholds {
                fore: Point {
                    x: base.fore.x,
                    y: -base.fore.y,
                },
                hind: Point {
                    x: base.hind.x,
                    y: -base.hind.y,
                },
            };
            let primary = support_line(geom, stride, -flexion)?;
            (
                reflected,
                SupportLine {
                    a: -primary.a,
                    b: primary.b,
                    c: -primary.c,
                },
            )
        }
    };
    let dis = signed_distance(&line, com)?;
    Ok(BalanceSample {
        stride: *stride,
        flexion,
        diagonal,
        footholds: feet,
        line,
        dis,
    })
}

/// Samples the balance measure over one full gait cycle.
///
/// Returns `samples_per_period + 1` pairs `(t, dis)` covering `[0, T]`
/// inclusive, with the left-fore + right-hind diagonal active on the first
/// half-cycle and the mirrored diagonal on the second. The spine controller
/// runs from the cycle origin; the time-warped kind integrates its phase at
/// the trace resolution and therefore needs at least 100 samples per
/// period, while the open-loop kinds are closed-form in `t` and accept any
/// count down to [`MIN_TRACE_SAMPLES`].
pub fn dis_trace(
    geom: &RobotGeometry,
    gait: &GaitParams,
    controller: &SpineParams,
    com: &ComPosition,
    samples_per_period: u32,
) -> Result<Vec<(f64, f64)>, BalanceError> {
    if samples_per_period < MIN_TRACE_SAMPLES {
        return Err(BalanceError::TooFewSamples {
            got: samples_per_period,
        });
    }
    geom.validate()?;
    gait.validate()?;
    com.validate()?;
    if controller.period != gait.period {
        return Err(BalanceError::PeriodMismatch {
            controller: controller.period,
            gait: gait.period,
        });
    }

    let n = samples_per_period;
    let dt = gait.period / f64::from(n);
    // The warped controller is stateful; sample it at the trace resolution.
    // The open-loop kinds are evaluated in closed form below.
    let mut warped = match controller.kind {
        ControllerKind::BalanceSpine => {
            let params = SpineParams {
                time_step: dt,
                ..*controller
            };
            Some(Controller::new(params)?)
        }
        ControllerKind::NonSpine | ControllerKind::Spine => {
            controller.validate_waveform()?;
            None
        }
    };

    let omega = 2.0 * std::f64::consts::PI / gait.period;
    let mut out = Vec::with_capacity(n as usize + 1);
    for i in 0..=n {
        let t = f64::from(i) * dt;
        let flexion = match (&warped, controller.kind) {
            (Some(ctrl), _) => ctrl.flexion(),
            (None, ControllerKind::NonSpine) => 0.0,
            (None, _) => controller.amplitude * (omega * t + controller.initial_phase).cos(),
        };
        let stride = crate::gait::stride_at(gait, t);
        let diagonal = active_diagonal(gait, t);
        let com_point = com.position_at(geom, flexion)?;
        let sample = balance_sample(geom, &stride, flexion, com_point, diagonal)?;
        out.push((t, sample.dis));
        if let Some(ctrl) = warped.as_mut() {
            ctrl.advance();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gait::PhaseOffsets;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn default_geometry() -> RobotGeometry {
        RobotGeometry::new(0.16, 0.12, 0.010, 0.020).unwrap()
    }

    fn default_gait() -> GaitParams {
        GaitParams::new(
            1.0 / 2.1,
            0.05,
            0.5,
            PhaseOffsets {
                fore: 0.0,
                hind: 0.5,
            },
        )
        .unwrap()
    }

    fn stride(fore: f64, hind: f64) -> StrideState {
        StrideState {
            fore_stride: fore,
            hind_stride: hind,
            time: 0.0,
        }
    }

    #[test]
    fn rest_pose_distance_matches_reference() {
        // Straight spine, mid-stance strides (both zero), default geometry,
        // center of mass on the midline: reference computed independently
        // at 40-digit precision.
        let geom = default_geometry();
        let line = support_line(&geom, &stride(0.0, 0.0), 0.0).unwrap();
        let dis = signed_distance(&line, Point { x: -0.178, y: 0.0 }).unwrap();
        assert_relative_eq!(dis, 0.0009232870714969654, max_relative = 1e-12);
    }

    #[test]
    fn line_passes_through_both_footholds() {
        let geom = default_geometry();
        let s = stride(0.031, -0.017);
        for &r in &[0.0, 0.2, -0.35, 0.7] {
            let feet = footholds(&geom, &s, r).unwrap();
            let line = support_line(&geom, &s, r).unwrap();
            let norm = line.normal_magnitude();
            let res_fore = (line.a * feet.fore.x + line.b * feet.fore.y + line.c) / norm;
            let res_hind = (line.a * feet.hind.x + line.b * feet.hind.y + line.c) / norm;
            assert!(res_fore.abs() < 1e-15, "fore residual {res_fore}");
            assert!(res_hind.abs() < 1e-15, "hind residual {res_hind}");
        }
    }

    #[test]
    fn positive_distance_is_to_the_robots_right() {
        // With the left-fore + right-hind pair stancing, the left foot is
        // at negative y and the right foot at positive y, so positive y is
        // the robot's right; a center of mass displaced that way must
        // measure positive.
        let geom = default_geometry();
        let line = support_line(&geom, &stride(0.05, -0.05), 0.0).unwrap();
        let right = signed_distance(&line, Point { x: -0.15, y: 0.1 }).unwrap();
        let left = signed_distance(&line, Point { x: -0.15, y: -0.1 }).unwrap();
        assert!(right > 0.0);
        assert!(left < 0.0);
    }

    #[test]
    fn degenerate_line_is_rejected() {
        let line = SupportLine {
            a: 0.0,
            b: 0.0,
            c: 1.0,
        };
        assert!(matches!(
            signed_distance(&line, Point { x: 0.0, y: 0.0 }),
            Err(BalanceError::DegenerateSupportLine { .. })
        ));
    }

    #[test]
    fn mirrored_diagonal_reflects_footholds_and_line() {
        let geom = default_geometry();
        let s = stride(0.02, 0.04);
        let r = 0.25;
        let com = Point { x: -0.178, y: 0.0 };
        let mirrored = balance_sample(&geom, &s, r, com, Diagonal::RfLh).unwrap();
        let base = balance_sample(&geom, &s, -r, com, Diagonal::LfRh).unwrap();
        assert_eq!(mirrored.footholds.fore.x, base.footholds.fore.x);
        assert_eq!(mirrored.footholds.fore.y, -base.footholds.fore.y);
        assert_eq!(mirrored.footholds.hind.x, base.footholds.hind.x);
        assert_eq!(mirrored.footholds.hind.y, -base.footholds.hind.y);
        assert_eq!(mirrored.dis, -base.dis);
    }

    #[test]
    fn com_modes_agree_at_zero_flexion_and_fraction() {
        let geom = default_geometry();
        let fixed = ComPosition::fixed(-0.178, 0.01);
        let coupled = ComPosition {
            mode: ComMode::FlexionCoupled {
                spine_mass_fraction: 0.4,
            },
            ..fixed
        };
        let zero_fraction = ComPosition {
            mode: ComMode::FlexionCoupled {
                spine_mass_fraction: 0.0,
            },
            ..fixed
        };

        let at_rest = coupled.position_at(&geom, 0.0).unwrap();
        assert_eq!(at_rest, Point { x: -0.178, y: 0.01 });
        for &r in &[0.0, 0.1, -0.3] {
            assert_eq!(
                zero_fraction.position_at(&geom, r).unwrap(),
                fixed.position_at(&geom, r).unwrap()
            );
        }

        // Positive flexion swings the spine centroid toward +y.
        let bent = coupled.position_at(&geom, 0.3).unwrap();
        assert!(bent.y > 0.01);
    }

    #[test]
    fn com_validation_rejects_bad_values() {
        assert!(ComPosition::fixed(f64::NAN, 0.0).validate().is_err());
        let bad_fraction = ComPosition {
            cx: 0.0,
            cy: 0.0,
            mode: ComMode::FlexionCoupled {
                spine_mass_fraction: 1.5,
            },
        };
        assert!(bad_fraction.validate().is_err());
    }

    #[test]
    fn dis_trace_covers_one_cycle_inclusive() {
        let geom = default_geometry();
        let gait = default_gait();
        let params = SpineParams::open_loop(ControllerKind::Spine, 0.016, gait.period, 0.0);
        let com = ComPosition::fixed(-0.178, 0.0);
        let trace = dis_trace(&geom, &gait, &params, &com, 64).unwrap();
        assert_eq!(trace.len(), 65);
        assert_eq!(trace[0].0, 0.0);
        assert_relative_eq!(trace[64].0, gait.period, max_relative = 1e-15);
        assert!(trace.iter().all(|(_, d)| d.is_finite()));
    }

    #[test]
    fn dis_trace_rejects_undersampling_and_period_mismatch() {
        let geom = default_geometry();
        let gait = default_gait();
        let com = ComPosition::fixed(-0.178, 0.0);
        let params = SpineParams::open_loop(ControllerKind::NonSpine, 0.0, gait.period, 0.0);
        assert!(matches!(
            dis_trace(&geom, &gait, &params, &com, 7),
            Err(BalanceError::TooFewSamples { got: 7 })
        ));
        let mismatched = SpineParams::open_loop(ControllerKind::NonSpine, 0.0, 1.0, 0.0);
        assert!(matches!(
            dis_trace(&geom, &gait, &mismatched, &com, 64),
            Err(BalanceError::PeriodMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn incidence_holds_across_the_domain(
            fore in -0.05f64..0.05,
            hind in -0.05f64..0.05,
            r in -FRAC_PI_2..FRAC_PI_2,
        ) {
            let geom = default_geometry();
            let s = stride(fore, hind);
            let feet = footholds(&geom, &s, r).unwrap();
            let line = support_line(&geom, &s, r).unwrap();
            let norm = line.normal_magnitude();
            prop_assert!((line.a * feet.fore.x + line.b * feet.fore.y + line.c).abs() / norm < 1e-12);
            prop_assert!((line.a * feet.hind.x + line.b * feet.hind.y + line.c).abs() / norm < 1e-12);
        }

        #[test]
        fn mirror_antisymmetry(
            fore in -0.05f64..0.05,
            hind in -0.05f64..0.05,
            r in -1.0f64..1.0,
            cx in -0.3f64..0.1,
            cy in -0.05f64..0.05,
        ) {
            // The mirrored diagonal at flexion R, measured against a
            // laterally reflected center of mass, is exactly the negated
            // primary measurement at flexion -R.
            let geom = default_geometry();
            let s = stride(fore, hind);
            let mirrored = balance_sample(
                &geom, &s, r, Point { x: cx, y: cy }, Diagonal::RfLh,
            ).unwrap();
            let base = balance_sample(
                &geom, &s, -r, Point { x: cx, y: -cy }, Diagonal::LfRh,
            ).unwrap();
            prop_assert_eq!(mirrored.dis, -base.dis);
        }

        #[test]
        fn distance_scales_with_lateral_offset(
            offset in 0.001f64..0.1,
        ) {
            // Moving the center of mass straight toward the robot's right
            // (positive y) increases the signed distance.
            let geom = default_geometry();
            let line = support_line(&geom, &stride(0.05, -0.05), 0.0).unwrap();
            let center = signed_distance(&line, Point { x: -0.178, y: 0.0 }).unwrap();
            let shifted = signed_distance(&line, Point { x: -0.178, y: offset }).unwrap();
            prop_assert!(shifted > center);
        }
    }
}
