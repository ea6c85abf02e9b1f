//! Foothold kinematics for a quadruped with a laterally flexing spine.
//!
//! The body is viewed from above in a frame fixed to the fore body: `+x`
//! points forward, `+y` to the robot's right. The fore hips sit at the
//! origin, the spine of length `spine_length` extends rearward, and the
//! hind body of length `body_length` hangs off the spine's rear end. A
//! lateral flexion angle `R` bends the spine into a circular arc with total
//! arc angle `2R`, which swings the hind hips (and the hind foothold) both
//! forward and sideways.
//!
//! All lengths are meters and all angles radians. Flexion is positive when
//! the spine bends toward the robot's right (`+y`), swinging the hind
//! quarters that way.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest admissible magnitude of the flexion angle `R`, in radians.
///
/// At `|R| = π/2` the spine arc has turned a full half circle and the hind
/// body points straight back at the fore body; beyond that the planar model
/// stops being meaningful.
pub const FLEXION_LIMIT: f64 = std::f64::consts::FRAC_PI_2;

/// Arc-angle magnitude below which the trigonometric ratios switch to their
/// truncated series.
///
/// `sin(θ)/θ` and `(1 − cos θ)/θ` lose relative accuracy to cancellation as
/// `θ → 0`; below this threshold the series are exact to well under one ulp.
pub const SERIES_SWITCH_THRESHOLD: f64 = 1e-4;

/// Errors from kinematic evaluation.
#[derive(Debug, Error)]
pub enum KinematicsError {
    /// An input that must be a finite number was NaN or infinite.
    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    /// A flexion angle outside the supported range.
    #[error("flexion angle {value} rad is outside [-{FLEXION_LIMIT}, {FLEXION_LIMIT}]")]
    FlexionOutOfRange { value: f64 },
    /// A geometry length that is not strictly positive and finite.
    #[error("geometry field {field} must be strictly positive and finite, got {value}")]
    InvalidGeometry { field: &'static str, value: f64 },
}

/// A point in the top-view body frame, in meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

/// Fixed link lengths of the robot, in meters.
///
/// All four lengths must be strictly positive and finite; construct through
/// [`RobotGeometry::new`] or call [`RobotGeometry::validate`] after
/// deserializing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotGeometry {
    /// Length of the flexible spine segment between fore and hind body.
    pub spine_length: f64,
    /// Length of the rigid hind body behind the spine's rear end.
    pub body_length: f64,
    /// Lateral half-spacing of the hind hip pair.
    pub hind_hip_halfwidth: f64,
    /// Lateral half-spacing of the fore hip pair.
    pub fore_hip_halfwidth: f64,
}

impl RobotGeometry {
    /// Builds a geometry, rejecting non-positive or non-finite lengths.
    pub fn new(
        spine_length: f64,
        body_length: f64,
        hind_hip_halfwidth: f64,
        fore_hip_halfwidth: f64,
    ) -> Result<Self, KinematicsError> {
        let geom = Self {
            spine_length,
            body_length,
            hind_hip_halfwidth,
            fore_hip_halfwidth,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Checks that every length is strictly positive and finite.
    pub fn validate(&self) -> Result<(), KinematicsError> {
        let fields = [
            ("spine_length", self.spine_length),
            ("body_length", self.body_length),
            ("hind_hip_halfwidth", self.hind_hip_halfwidth),
            ("fore_hip_halfwidth", self.fore_hip_halfwidth),
        ];
        for (field, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(KinematicsError::InvalidGeometry { field, value });
            }
        }
        Ok(())
    }
}

/// Instantaneous fore/hind stride displacements along the body axis.
///
/// Strides are the longitudinal offsets of the stance feet from their hip
/// pairs, as produced by [`crate::gait::stride_at`]; `time` records the
/// query instant in seconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrideState {
    /// Longitudinal offset of the stance fore foot, meters.
    pub fore_stride: f64,
    /// Longitudinal offset of the stance hind foot, meters.
    pub hind_stride: f64,
    /// Time the strides were sampled at, seconds.
    pub time: f64,
}

/// A validated lateral flexion angle.
///
/// Carries the flexion angle `R` and exposes the spine's total arc angle
/// `2R`. The free kinematic functions accept raw `f64` angles and perform
/// the same validation; this type is for callers that want the checked
/// invariant carried in the type.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlexionState {
    flexion: f64,
}

impl FlexionState {
    /// Validates that `flexion` is finite and within `±`[`FLEXION_LIMIT`].
    pub fn new(flexion: f64) -> Result<Self, KinematicsError> {
        check_flexion(flexion)?;
        Ok(Self { flexion })
    }

    /// The flexion angle `R`, radians.
    pub fn angle(&self) -> f64 {
        self.flexion
    }

    /// The spine's total arc angle `2R`, radians.
    pub fn arc_angle(&self) -> f64 {
        2.0 * self.flexion
    }
}

/// Positions of the two stance feet of a diagonal pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Footholds {
    /// Stance fore foot.
    pub fore: Point,
    /// Stance hind foot.
    pub hind: Point,
}

fn check_finite(name: &'static str, value: f64) -> Result<(), KinematicsError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(KinematicsError::NonFinite { name, value })
    }
}

fn check_flexion(flexion: f64) -> Result<(), KinematicsError> {
    check_finite("flexion angle", flexion)?;
    if flexion.abs() > FLEXION_LIMIT {
        return Err(KinematicsError::FlexionOutOfRange { value: flexion });
    }
    Ok(())
}

/// `sin(θ)/θ`, series-stabilized near zero.
fn sinc(theta: f64) -> f64 {
    if theta.abs() < SERIES_SWITCH_THRESHOLD {
        let t2 = theta * theta;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0
    } else {
        theta.sin() / theta
    }
}

/// `(1 − cos θ)/θ`, series-stabilized near zero.
fn versinc(theta: f64) -> f64 {
    if theta.abs() < SERIES_SWITCH_THRESHOLD {
        theta / 2.0 - theta * theta * theta / 24.0
    } else {
        (1.0 - theta.cos()) / theta
    }
}

/// `(1 − cos θ)/θ²`, series-stabilized near zero.
fn haverc(theta: f64) -> f64 {
    if theta.abs() < SERIES_SWITCH_THRESHOLD {
        let t2 = theta * theta;
        0.5 - t2 / 24.0 + t2 * t2 / 720.0
    } else {
        (1.0 - theta.cos()) / (theta * theta)
    }
}

/// `(1 − sin(θ)/θ)/θ²`, series-stabilized near zero.
fn sinc_defect(theta: f64) -> f64 {
    if theta.abs() < SERIES_SWITCH_THRESHOLD {
        let t2 = theta * theta;
        1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0
    } else {
        (1.0 - theta.sin() / theta) / (theta * theta)
    }
}

/// Displacement of the stance hind foot induced by stride and flexion.
///
/// Returns `(l_hx, l_hy)`: the hind foot's position relative to the spine's
/// rear end, expressed in the fore-body frame. With the spine bent into an
/// arc of angle `θ = 2·flexion`:
///
/// ```text
/// l_hx = l_h·cos θ + l_HH·sin θ + l_S·(1 − sin θ / θ)
/// l_hy = l_S·(1 − cos θ)/θ + l_HH·cos θ − l_h·sin θ
/// ```
///
/// where `l_h` is the hind stride, `l_HH` the hind hip halfwidth, and `l_S`
/// the spine length. The ratios are evaluated by truncated series below
/// [`SERIES_SWITCH_THRESHOLD`], so the map is smooth through `flexion = 0`,
/// where it reduces exactly to `(l_h, l_HH)`.
///
/// # Errors
///
/// Non-finite inputs produce [`KinematicsError::NonFinite`]; a flexion
/// magnitude above [`FLEXION_LIMIT`] produces
/// [`KinematicsError::FlexionOutOfRange`].
pub fn hind_displacement(
    geom: &RobotGeometry,
    hind_stride: f64,
    flexion: f64,
) -> Result<(f64, f64), KinematicsError> {
    check_finite("hind stride", hind_stride)?;
    check_flexion(flexion)?;
    let theta = 2.0 * flexion;
    let l_hx = hind_stride * theta.cos()
        + geom.hind_hip_halfwidth * theta.sin()
        + geom.spine_length * (1.0 - sinc(theta));
    let l_hy = geom.spine_length * versinc(theta) + geom.hind_hip_halfwidth * theta.cos()
        - hind_stride * theta.sin();
    Ok((l_hx, l_hy))
}

/// Stance foothold positions for the left-fore + right-hind diagonal.
///
/// The fore foot sits at `(l_f, −l_FH)`: the stance fore leg is the left
/// one, offset by the fore stride along the body and by the fore hip
/// halfwidth to the robot's left (`−y` in this frame). The
/// hind foot is the [`hind_displacement`] result carried back behind the
/// spine and hind body: `(l_hx − l_B − l_S, l_hy)`.
///
/// # Errors
///
/// Propagates the [`hind_displacement`] errors; stride components must be
/// finite.
pub fn footholds(
    geom: &RobotGeometry,
    stride: &StrideState,
    flexion: f64,
) -> Result<Footholds, KinematicsError> {
    check_finite("fore stride", stride.fore_stride)?;
    let (l_hx, l_hy) = hind_displacement(geom, stride.hind_stride, flexion)?;
    Ok(Footholds {
        fore: Point {
            x: stride.fore_stride,
            y: -geom.fore_hip_halfwidth,
        },
        hind: Point {
            x: l_hx - geom.body_length - geom.spine_length,
            y: l_hy,
        },
    })
}

/// Centroid of the spine arc, relative to the spine's fore attachment.
///
/// Used by the flexion-coupled center-of-mass mode: when the spine bends
/// into an arc of angle `θ = 2·flexion`, the spine segment's own mass
/// centroid moves to
///
/// ```text
/// x̄ = −l_S·(1 − cos θ)/θ²,    ȳ = l_S·θ·(1 − sin θ / θ)/θ²
/// ```
///
/// which reduces to `(−l_S/2, 0)` — the midpoint of the straight spine —
/// exactly at `flexion = 0`.
///
/// # Errors
///
/// Same domain checks as [`hind_displacement`].
pub fn arc_centroid(geom: &RobotGeometry, flexion: f64) -> Result<Point, KinematicsError> {
    check_flexion(flexion)?;
    let theta = 2.0 * flexion;
    Ok(Point {
        x: -geom.spine_length * haverc(theta),
        y: geom.spine_length * theta * sinc_defect(theta),
    })
}
