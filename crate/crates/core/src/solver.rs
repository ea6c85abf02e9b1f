//! Bisection solver for the balancing flexion angle.
//!
//! At mid-stance the balance measure `dis` is, for sane geometries, a
//! strictly decreasing function of the flexion angle: bending the spine
//! toward the robot's left swings the hind foothold so the support line
//! sweeps across the center of mass. The solver finds the flexion `R′`
//! where `dis(R′) = 0` by plain bisection — robust, derivative-free, and
//! immune to the mild curvature of the profile.
//!
//! Monotonicity is *checked*, not assumed: a coarse probe runs before the
//! bisection and its report travels with the result, so a caller can warn
//! when the profile wiggles (in which case bisection still returns *a*
//! root, just not necessarily the only one).

use thiserror::Error;

use crate::balance::{balance_sample, BalanceError, ComPosition};
use crate::gait::{stride_at, Diagonal, GaitParams};
use crate::kinematics::{KinematicsError, RobotGeometry, StrideState, FLEXION_LIMIT};

/// Default residual tolerance, meters.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Hard cap on bisection iterations.
pub const MAX_ITERATIONS: u32 = 200;

/// Sample count of the pre-solve monotonicity probe.
pub const PROBE_SAMPLES: u32 = 129;

/// Errors from the balance solve.
#[derive(Debug, Error)]
pub enum SolveError {
    /// The search range is empty, reversed, or outside the flexion domain.
    #[error(
        "search range [{lo}, {hi}] must be increasing and within \
         [-{FLEXION_LIMIT}, {FLEXION_LIMIT}]"
    )]
    InvalidRange { lo: f64, hi: f64 },
    /// Non-positive or non-finite tolerance.
    #[error("solver tolerance must be strictly positive and finite, got {value}")]
    InvalidTolerance { value: f64 },
    /// Too few probe samples to say anything about monotonicity.
    #[error("monotonicity probe needs at least 3 samples, got {got}")]
    InvalidSampleCount { got: u32 },
    /// The balance measure has the same sign at both ends of the range, so
    /// bisection has nothing to bracket.
    #[error(
        "no sign change over [{lo}, {hi}]: dis(lo) = {f_lo} m, dis(hi) = {f_hi} m; \
         the bracket does not straddle a balance point"
    )]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    /// The iteration cap was reached with the residual still above
    /// tolerance.
    #[error(
        "bisection used all {MAX_ITERATIONS} iterations with residual {residual} m \
         still above tolerance {tolerance} m"
    )]
    ResidualNotConverged { residual: f64, tolerance: f64 },
    /// Evaluating the balance measure failed.
    #[error(transparent)]
    Balance(#[from] BalanceError),
    /// Invalid geometry or center of mass.
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

/// A balance root-finding problem: which flexion zeroes `dis` for a fixed
/// stride pose?
#[derive(Clone, Copy, Debug)]
pub struct BalanceProblem {
    /// Robot link lengths.
    pub geometry: RobotGeometry,
    /// Strides frozen at the instant being balanced (mid-stance, usually).
    pub stride: StrideState,
    /// Center of mass (possibly flexion-coupled).
    pub com: ComPosition,
    /// Flexion search range `(lo, hi)`, radians.
    pub search_range: (f64, f64),
    /// Residual tolerance on `|dis|`, meters.
    pub tolerance: f64,
}

impl BalanceProblem {
    /// Builds a problem after validating every piece.
    pub fn new(
        geometry: RobotGeometry,
        stride: StrideState,
        com: ComPosition,
        search_range: (f64, f64),
        tolerance: f64,
    ) -> Result<Self, SolveError> {
        geometry.validate()?;
        com.validate()?;
        let (lo, hi) = search_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi)
            || lo < -FLEXION_LIMIT
            || hi > FLEXION_LIMIT
        {
            return Err(SolveError::InvalidRange { lo, hi });
        }
        if !(tolerance.is_finite() && tolerance > 0.0) {
            return Err(SolveError::InvalidTolerance { value: tolerance });
        }
        Ok(Self {
            geometry,
            stride,
            com,
            search_range,
            tolerance,
        })
    }

    /// The standard problem: balance the mid-stance pose of a gait over the
    /// full flexion range at the default tolerance.
    pub fn mid_stance(
        geometry: RobotGeometry,
        gait: &GaitParams,
        com: ComPosition,
    ) -> Result<Self, SolveError> {
        let stride = stride_at(gait, 0.25 * gait.period);
        Self::new(
            geometry,
            stride,
            com,
            (-FLEXION_LIMIT, FLEXION_LIMIT),
            DEFAULT_TOLERANCE,
        )
    }

    /// The balance measure at flexion `r` for this problem's frozen pose.
    ///
    /// Evaluated on the primary (left-fore + right-hind) diagonal; by the
    /// mirror symmetry the other diagonal balances at `-r`.
    pub fn distance_at(&self, r: f64) -> Result<f64, SolveError> {
        let com = self.com.position_at(&self.geometry, r)?;
        let sample = balance_sample(&self.geometry, &self.stride, r, com, Diagonal::LfRh)?;
        Ok(sample.dis)
    }
}

/// Overall slope direction of a sampled profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeSign {
    Increasing,
    Decreasing,
}

/// What the monotonicity probe saw.
#[derive(Clone, Copy, Debug)]
pub struct MonotonicityReport {
    /// Every adjacent sample pair moved the same strict direction.
    pub strictly_monotone: bool,
    /// That direction, when one exists.
    pub derivative_sign: Option<DerivativeSign>,
    /// Number of sign changes of the sampled *values* — roots crossed.
    pub sign_changes: u32,
    /// The profile is flat to within the problem tolerance (its total
    /// variation says nothing at this resolution).
    pub degenerate_flat: bool,
    /// How many samples the probe used.
    pub samples: u32,
}

/// Result of a successful balance solve.
#[derive(Clone, Copy, Debug)]
pub struct SolveOutcome {
    /// The balancing flexion `R′`, radians.
    pub root: f64,
    /// `|dis(root)|` at acceptance, meters.
    pub residual: f64,
    /// Bisection iterations spent (0 if an endpoint was already a root).
    pub iterations: u32,
    /// Pre-solve probe report; `strictly_monotone == false` is the
    /// non-monotonicity warning.
    pub probe: MonotonicityReport,
}

/// Probes `f` on `samples` equally spaced points over `[lo, hi]`.
fn probe_fn<F>(
    mut f: F,
    lo: f64,
    hi: f64,
    samples: u32,
    flat_tolerance: f64,
) -> Result<MonotonicityReport, SolveError>
where
    F: FnMut(f64) -> Result<f64, SolveError>,
{
    if samples < 3 {
        return Err(SolveError::InvalidSampleCount { got: samples });
    }
    let n = samples as usize;
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let r = lo + (hi - lo) * (i as f64) / ((n - 1) as f64);
        values.push(f(r)?);
    }

    let mut all_up = true;
    let mut all_down = true;
    for pair in values.windows(2) {
        let d = pair[1] - pair[0];
        if d <= 0.0 {
            all_up = false;
        }
        if d >= 0.0 {
            all_down = false;
        }
    }
    // Count transitions between consecutive nonzero signs, so a root that
    // lands exactly on a grid point still registers as one crossing.
    let mut sign_changes = 0u32;
    let mut last_sign: Option<bool> = None;
    for &value in &values {
        if value == 0.0 {
            continue;
        }
        let sign = value > 0.0;
        if last_sign == Some(!sign) {
            sign_changes += 1;
        }
        last_sign = Some(sign);
    }
    let spread = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - values.iter().cloned().fold(f64::INFINITY, f64::min);
    let derivative_sign = if all_up {
        Some(DerivativeSign::Increasing)
    } else if all_down {
        Some(DerivativeSign::Decreasing)
    } else {
        None
    };
    Ok(MonotonicityReport {
        strictly_monotone: derivative_sign.is_some(),
        derivative_sign,
        sign_changes,
        degenerate_flat: spread < flat_tolerance,
        samples,
    })
}

/// Plain bisection of `f` over `[lo, hi]`.
///
/// Accepts as soon as `|f(mid)| < tolerance`; an endpoint that is exactly
/// zero is returned immediately with zero iterations.
fn bisect<F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tolerance: f64,
) -> Result<(f64, f64, u32), SolveError>
where
    F: FnMut(f64) -> Result<f64, SolveError>,
{
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok((lo, 0.0, 0));
    }
    if f_hi == 0.0 {
        return Ok((hi, 0.0, 0));
    }
    if (f_lo > 0.0) == (f_hi > 0.0) {
        return Err(SolveError::NoSignChange { lo, hi, f_lo, f_hi });
    }
    for iteration in 1..=MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid)?;
        if f_mid.abs() < tolerance {
            return Ok((mid, f_mid.abs(), iteration));
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    let f_mid = f(mid)?;
    if f_mid.abs() < tolerance {
        Ok((mid, f_mid.abs(), MAX_ITERATIONS))
    } else {
        Err(SolveError::ResidualNotConverged {
            residual: f_mid.abs(),
            tolerance,
        })
    }
}

/// Samples the balance profile and reports whether it is strictly monotone.
///
/// `samples` must be at least 3. Flatness is judged against the problem's
/// residual tolerance.
pub fn monotonicity_probe(
    problem: &BalanceProblem,
    samples: u32,
) -> Result<MonotonicityReport, SolveError> {
    let (lo, hi) = problem.search_range;
    probe_fn(
        |r| problem.distance_at(r),
        lo,
        hi,
        samples,
        problem.tolerance,
    )
}

/// Finds the balancing flexion by bisection.
///
/// Runs a [`monotonicity_probe`] first and attaches its report to the
/// outcome — a non-monotone profile is a warning, not a failure, since
/// bisection still converges to a root inside the bracket. Fails if the
/// bracket has no sign change or the residual will not come under
/// tolerance.
pub fn solve_balance_flexion(problem: &BalanceProblem) -> Result<SolveOutcome, SolveError> {
    let probe = monotonicity_probe(problem, PROBE_SAMPLES)?;
    let (lo, hi) = problem.search_range;
    let (root, residual, iterations) =
        bisect(|r| problem.distance_at(r), lo, hi, problem.tolerance)?;
    Ok(SolveOutcome {
        root,
        residual,
        iterations,
        probe,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gait::PhaseOffsets;

    use proptest::prelude::*;

    fn default_problem() -> BalanceProblem {
        let geometry = RobotGeometry::new(0.16, 0.12, 0.010, 0.020).unwrap();
        let gait = GaitParams::new(
            1.0 / 2.1,
            0.05,
            0.5,
            PhaseOffsets {
                fore: 0.0,
                hind: 0.5,
            },
        )
        .unwrap();
        BalanceProblem::mid_stance(geometry, &gait, ComPosition::fixed(-0.178, 0.0)).unwrap()
    }

    #[test]
    fn solves_the_default_model_to_the_reference_root() {
        // Root computed independently at 40-digit precision: the
        // double-precision bisection must land within its own residual
        // tolerance's basin of it.
        let outcome = solve_balance_flexion(&default_problem()).unwrap();
        assert!((outcome.root - 0.009007024483791391).abs() < 1e-6);
        assert!(outcome.residual < DEFAULT_TOLERANCE);
        assert!(outcome.iterations > 0 && outcome.iterations <= MAX_ITERATIONS);
        assert!(outcome.probe.strictly_monotone);
        assert_eq!(
            outcome.probe.derivative_sign,
            Some(DerivativeSign::Decreasing)
        );
        assert_eq!(outcome.probe.sign_changes, 1);
    }

    #[test]
    fn distance_is_antisymmetric_to_the_mirrored_diagonal_root() {
        // The mirrored diagonal balances at -R′: check through the mirror
        // identity rather than a second solve.
        let problem = default_problem();
        let root = solve_balance_flexion(&problem).unwrap().root;
        let com = problem.com.position_at(&problem.geometry, -root).unwrap();
        let mirrored = balance_sample(
            &problem.geometry,
            &problem.stride,
            -root,
            com,
            Diagonal::RfLh,
        )
        .unwrap();
        assert!(mirrored.dis.abs() < DEFAULT_TOLERANCE);
    }

    #[test]
    fn bisect_accepts_an_exact_endpoint_root() {
        let f = |x: f64| Ok(x);
        let (root, residual, iterations) = bisect(f, 0.0, 1.0, 1e-12).unwrap();
        assert_eq!(root, 0.0);
        assert_eq!(residual, 0.0);
        assert_eq!(iterations, 0);
    }

    #[test]
    fn bisect_reports_both_endpoint_values_when_unbracketed() {
        let f = |x: f64| Ok(x * x + 1.0);
        let err = bisect(f, -1.0, 2.0, 1e-9).unwrap_err();
        match &err {
            SolveError::NoSignChange { f_lo, f_hi, .. } => {
                assert_eq!(*f_lo, 2.0);
                assert_eq!(*f_hi, 5.0);
            }
            other => panic!("expected NoSignChange, got {other:?}"),
        }
        let text = err.to_string();
        assert!(text.contains("dis(lo) = 2"));
        assert!(text.contains("dis(hi) = 5"));
    }

    #[test]
    fn bisect_converges_on_a_flat_rooted_cubic() {
        let f = |x: f64| Ok((x - 0.3f64).powi(3));
        let (root, residual, _) = bisect(f, -1.0, 1.0, 1e-15).unwrap();
        assert!((root - 0.3).abs() < 1e-4); // cube root of 1e-15 wide basin
        assert!(residual < 1e-15);
    }

    #[test]
    fn probe_classifies_shapes() {
        let up = probe_fn(|x| Ok(2.0 * x), -1.0, 1.0, 33, 1e-9).unwrap();
        assert!(up.strictly_monotone);
        assert_eq!(up.derivative_sign, Some(DerivativeSign::Increasing));
        assert_eq!(up.sign_changes, 1);
        assert!(!up.degenerate_flat);

        let flat = probe_fn(|_| Ok(1.0), -1.0, 1.0, 33, 1e-9).unwrap();
        assert!(!flat.strictly_monotone);
        assert!(flat.degenerate_flat);
        assert_eq!(flat.sign_changes, 0);

        let wiggle = probe_fn(|x: f64| Ok((6.0 * x).sin()), -1.0, 1.0, 65, 1e-9).unwrap();
        assert!(!wiggle.strictly_monotone);
        assert!(wiggle.sign_changes >= 2);

        assert!(matches!(
            probe_fn(Ok, 0.0, 1.0, 2, 1e-9),
            Err(SolveError::InvalidSampleCount { got: 2 })
        ));
    }

    #[test]
    fn iteration_count_matches_the_bracket_shrink_rate() {
        // |dis| at the midpoint falls roughly geometrically; the default
        // problem needs a few dozen iterations, far under the cap.
        let outcome = solve_balance_flexion(&default_problem()).unwrap();
        assert!(
            (10..=60).contains(&outcome.iterations),
            "iterations = {}",
            outcome.iterations
        );
    }

    #[test]
    fn rejects_bad_ranges_and_tolerances() {
        let geometry = RobotGeometry::new(0.16, 0.12, 0.010, 0.020).unwrap();
        let stride = StrideState {
            fore_stride: 0.0,
            hind_stride: 0.05,
            time: 0.0,
        };
        let com = ComPosition::fixed(-0.178, 0.0);
        assert!(matches!(
            BalanceProblem::new(geometry, stride, com, (1.0, -1.0), 1e-9),
            Err(SolveError::InvalidRange { .. })
        ));
        assert!(matches!(
            BalanceProblem::new(geometry, stride, com, (-2.0, 1.0), 1e-9),
            Err(SolveError::InvalidRange { .. })
        ));
        assert!(matches!(
            BalanceProblem::new(geometry, stride, com, (-1.0, 1.0), 0.0),
            Err(SolveError::InvalidTolerance { .. })
        ));
    }

    proptest! {
        #[test]
        fn bisection_root_zeroes_synthetic_lines(
            root in -0.9f64..0.9,
            slope in 0.1f64..10.0,
        ) {
            let f = move |x: f64| Ok(slope * (x - root));
            let (found, residual, _) = bisect(f, -1.0, 1.0, 1e-12).unwrap();
            prop_assert!((found - root).abs() < 1e-12 / slope + 1e-12);
            prop_assert!(residual < 1e-12);
        }

        #[test]
        fn solve_balances_shifted_centers_of_mass(cy in -0.004f64..0.004) {
            // Small lateral CoM shifts keep the profile bracketed; the
            // solve must still drive |dis| under tolerance.
            let mut problem = default_problem();
            problem.com.cy = cy;
            let outcome = solve_balance_flexion(&problem).unwrap();
            let check = problem.distance_at(outcome.root).unwrap();
            prop_assert!(check.abs() < DEFAULT_TOLERANCE);
        }
    }
}
