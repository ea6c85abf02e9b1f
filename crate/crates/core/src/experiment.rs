//! Seeded experiment runner: single cells, frequency sweeps, summaries.
//!
//! A *cell* is one simulated run, identified by (controller kind, frequency
//! index, repetition). Each cell derives its own RNG stream from the master
//! seed — stream id `(frequency_index << 32) | repetition` — and draws one
//! random time origin from it. The stream id deliberately ignores the
//! controller kind, so the three controllers of a cell share the same time
//! origin and their metrics compare like-for-like.
//!
//! Everything downstream of the seed is deterministic: re-running a cell
//! reproduces its trace bit for bit, and a sweep returns its records in a
//! fixed order (kind-major, then frequency, then repetition) regardless of
//! how many worker threads computed them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::balance::{balance_sample, BalanceError};
use crate::config::{Config, ConfigError, SCHEMA_VERSION};
use crate::gait::{active_diagonal, stride_at, GaitError, GaitParams};
use crate::kinematics::KinematicsError;
use crate::solver::{solve_balance_flexion, BalanceProblem, SolveError, SolveOutcome};
use crate::spine::{Controller, ControllerKind, SpineError, SpineParams};
use crate::tilt::{
    half_stride_metrics, pitch_reading, simulate_roll, BalanceMetrics, ResetSchedule, TiltError,
};
use crate::trace::{trace_file_name, write_trace, ExperimentRecord, TraceError, TraceRow};

/// File name the sweep summary is written under.
pub const SUMMARY_FILE_NAME: &str = "summary.json";

/// Errors from running experiments.
#[derive(Debug, Error)]
pub enum ExperimentError {
    /// A frequency index outside the sweep grid.
    #[error("frequency index {index} is outside the sweep grid of {count} frequencies")]
    FrequencyIndexOutOfRange { index: u32, count: u32 },
    /// A repetition outside the configured count.
    #[error("repetition {repetition} is outside the configured {repetitions} repetitions")]
    RepetitionOutOfRange { repetition: u32, repetitions: u32 },
    /// The worker pool could not be built.
    #[error("failed to build the worker pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Gait(#[from] GaitError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Balance(#[from] BalanceError),
    #[error(transparent)]
    Spine(#[from] SpineError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Tilt(#[from] TiltError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Draws the random time origin of a cell, in steps from the gait-cycle
/// origin (always less than one gait cycle).
///
/// The draw is a pure function of the master seed and the cell coordinates;
/// the controller kind plays no part, so the three controllers of a cell
/// are paired on the same origin.
pub fn origin_step_for_cell(config: &Config, frequency_index: u32, repetition: u32) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream((u64::from(frequency_index) << 32) | u64::from(repetition));
    rng.gen_range(0..u64::from(config.simulation.steps_per_period))
}

/// Solves the flexion the warped controller must reach at mid-stance.
pub fn solve_warp_target(config: &Config, gait: &GaitParams) -> Result<SolveOutcome, SolveError> {
    let problem = BalanceProblem::mid_stance(config.geometry, gait, config.com)?;
    solve_balance_flexion(&problem)
}

/// Controller parameters for one run, solving the warp target when the
/// warped kind needs one.
fn controller_params(
    config: &Config,
    kind: ControllerKind,
    gait: &GaitParams,
    time_step: f64,
) -> Result<SpineParams, ExperimentError> {
    let amplitude = config.spine.amplitude;
    let phase = config.spine.initial_phase;
    match kind {
        ControllerKind::NonSpine | ControllerKind::Spine => {
            let mut params = SpineParams::open_loop(kind, amplitude, gait.period, phase);
            params.time_step = time_step;
            Ok(params)
        }
        ControllerKind::BalanceSpine => {
            if amplitude == 0.0 {
                // Degenerate rigid warp: nothing to solve, nothing to reach.
                return Ok(SpineParams::warped(0.0, gait.period, phase, time_step, 0.0));
            }
            let outcome = solve_warp_target(config, gait)?;
            Ok(SpineParams::warped(
                amplitude,
                gait.period,
                phase,
                time_step,
                outcome.root,
            ))
        }
    }
}

/// Runs one simulation with every coordinate pinned explicitly.
///
/// `frequency_hz` is the gait cycle frequency; `origin_step` positions the
/// trace within the gait cycle (the first sample is `origin_step` steps
/// after the cycle origin). `frequency_index` and `repetition` are recorded
/// in the output but do not influence the simulation. The trace covers
/// `steps_per_period · periods + 1` samples, endpoint included.
pub fn run_with_origin(
    config: &Config,
    kind: ControllerKind,
    frequency_hz: f64,
    frequency_index: u32,
    repetition: u32,
    origin_step: u64,
) -> Result<ExperimentRecord, ExperimentError> {
    config.validate()?;
    let gait = config.gait_params_at(frequency_hz)?;
    let steps = config.simulation.steps_per_period;
    let time_step = gait.period / f64::from(steps);
    let params = controller_params(config, kind, &gait, time_step)?;
    let mut controller = Controller::from_gait_origin(params, origin_step)?;

    let total = u64::from(steps) * u64::from(config.simulation.periods);
    let mut rows = Vec::with_capacity(total as usize + 1);
    let mut dis = Vec::with_capacity(total as usize + 1);
    let mut pitch = Vec::with_capacity(total as usize + 1);
    for i in 0..=total {
        let t_abs = (origin_step + i) as f64 * time_step;
        let flexion = controller.flexion();
        let stride = stride_at(&gait, t_abs);
        let diagonal = active_diagonal(&gait, t_abs);
        let com = config.com.position_at(&config.geometry, flexion)?;
        let sample = balance_sample(&config.geometry, &stride, flexion, com, diagonal)?;
        let theta_pitch = pitch_reading(&sample.line, sample.dis, config.tilt.pitch_gain);
        rows.push(TraceRow {
            t: i as f64 * time_step,
            l_f: stride.fore_stride,
            l_h: stride.hind_stride,
            r: flexion,
            f_t: controller.warped_phase(),
            k: controller.scale_factor(),
            fx: sample.footholds.fore.x,
            fy: sample.footholds.fore.y,
            hx: sample.footholds.hind.x,
            hy: sample.footholds.hind.y,
            dis: sample.dis,
            theta_roll: 0.0, // integrated below, once the whole trace exists
            theta_pitch,
        });
        dis.push(sample.dis);
        pitch.push(theta_pitch);
        controller.advance();
    }

    let half = steps / 2;
    let schedule = ResetSchedule {
        origin_offset: origin_step,
        interval: half,
    };
    let roll = simulate_roll(&dis, time_step, &config.tilt, Some(schedule))?;
    for (row, theta) in rows.iter_mut().zip(&roll) {
        row.theta_roll = *theta;
    }

    let half = half as usize;
    let start = (half - (origin_step as usize % half)) % half;
    let metrics = half_stride_metrics(&roll, &pitch, &dis, time_step, half, start)?;

    Ok(ExperimentRecord {
        config: config.clone(),
        controller: kind,
        frequency_hz,
        frequency_index,
        repetition,
        seed: config.seed,
        origin_step,
        rows,
        metrics,
    })
}

/// Runs one sweep cell: frequency from the sweep grid, time origin from the
/// cell's RNG stream.
pub fn run_cell(
    config: &Config,
    kind: ControllerKind,
    frequency_index: u32,
    repetition: u32,
) -> Result<ExperimentRecord, ExperimentError> {
    if frequency_index >= config.sweep.frequency_count {
        return Err(ExperimentError::FrequencyIndexOutOfRange {
            index: frequency_index,
            count: config.sweep.frequency_count,
        });
    }
    if repetition >= config.sweep.repetitions {
        return Err(ExperimentError::RepetitionOutOfRange {
            repetition,
            repetitions: config.sweep.repetitions,
        });
    }
    let frequency_hz = config.sweep.frequency_start_hz
        + config.sweep.frequency_step_hz * f64::from(frequency_index);
    let origin = origin_step_for_cell(config, frequency_index, repetition);
    run_with_origin(
        config,
        kind,
        frequency_hz,
        frequency_index,
        repetition,
        origin,
    )
}

/// Runs a single simulation at the configured gait frequency (not the sweep
/// grid), with the time origin drawn from cell stream (0, 0).
pub fn run_single(
    config: &Config,
    kind: ControllerKind,
) -> Result<ExperimentRecord, ExperimentError> {
    let origin = origin_step_for_cell(config, 0, 0);
    run_with_origin(config, kind, config.gait.frequency_hz, 0, 0, origin)
}

/// Runs every cell of a sweep for the given controller kinds.
///
/// Records come back kind-major, then by frequency index, then by
/// repetition — the same order whatever the worker count. `jobs` limits the
/// worker threads (`None` = one per core, `Some(1)` = fully serial).
pub fn run_sweep(
    config: &Config,
    kinds: &[ControllerKind],
    jobs: Option<usize>,
) -> Result<Vec<ExperimentRecord>, ExperimentError> {
    config.validate()?;
    let mut cells = Vec::new();
    for &kind in kinds {
        for index in 0..config.sweep.frequency_count {
            for repetition in 0..config.sweep.repetitions {
                cells.push((kind, index, repetition));
            }
        }
    }
    let run_all = || {
        cells
            .par_iter()
            .map(|&(kind, index, repetition)| run_cell(config, kind, index, repetition))
            .collect::<Result<Vec<_>, _>>()
    };
    match jobs {
        Some(1) => cells
            .iter()
            .map(|&(kind, index, repetition)| run_cell(config, kind, index, repetition))
            .collect(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
            pool.install(run_all)
        }
        None => run_all(),
    }
}

/// Writes each record's trace (CSV + sidecar) into `dir` under its
/// canonical file name, creating the directory if needed. Returns the CSV
/// paths in record order.
pub fn write_records(
    records: &[ExperimentRecord],
    dir: &Path,
) -> Result<Vec<PathBuf>, ExperimentError> {
    std::fs::create_dir_all(dir).map_err(|source| TraceError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths = Vec::with_capacity(records.len());
    for record in records {
        let name = trace_file_name(record.controller, record.frequency_index, record.repetition);
        let path = dir.join(name);
        write_trace(record, &path)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Mean and sample standard deviation of one metric across repetitions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator); `0` for one sample.
    pub std: f64,
}

impl MeanStd {
    fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: 0.0,
                std: 0.0,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (n - 1) as f64).sqrt()
        };
        Self { mean, std }
    }
}

/// Aggregated metrics of one controller at one frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerStats {
    /// Repetitions aggregated.
    pub repetitions: u32,
    pub mean_abs_roll: MeanStd,
    pub mean_abs_pitch: MeanStd,
    /// Statistics of `|half_stride_signed_area|`.
    pub half_stride_abs_area: MeanStd,
    pub roll_at_switch: MeanStd,
}

/// Aggregated metrics of all controllers at one frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyStats {
    pub frequency_hz: f64,
    pub frequency_index: u32,
    /// Controller name (`non-spine` / `spine` / `balance-spine`) → stats.
    pub controllers: BTreeMap<String, ControllerStats>,
}

/// Sweep summary, as written to `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSummary {
    pub schema_version: String,
    pub seed: u64,
    /// Keyed by frequency formatted to three decimals (`"2.100"`).
    pub frequencies: BTreeMap<String, FrequencyStats>,
}

/// The map key a frequency is summarized under.
pub fn frequency_key(frequency_hz: f64) -> String {
    format!("{frequency_hz:.3}")
}

/// Accumulator for one frequency: (frequency, index, controller → metrics).
type FrequencyBucket = (f64, u32, BTreeMap<String, Vec<BalanceMetrics>>);

/// Aggregates sweep records into per-frequency, per-controller statistics.
pub fn summarize(records: &[ExperimentRecord]) -> SweepSummary {
    let mut grouped: BTreeMap<String, FrequencyBucket> = BTreeMap::new();
    for record in records {
        let key = frequency_key(record.frequency_hz);
        let slot = grouped
            .entry(key)
            .or_insert_with(|| (record.frequency_hz, record.frequency_index, BTreeMap::new()));
        slot.2
            .entry(record.controller.to_string())
            .or_default()
            .push(record.metrics);
    }

    let frequencies = grouped
        .into_iter()
        .map(|(key, (frequency_hz, frequency_index, by_controller))| {
            let controllers = by_controller
                .into_iter()
                .map(|(name, metrics)| {
                    let take = |f: &dyn Fn(&BalanceMetrics) -> f64| {
                        MeanStd::from_samples(&metrics.iter().map(f).collect::<Vec<_>>())
                    };
                    let stats = ControllerStats {
                        repetitions: metrics.len() as u32,
                        mean_abs_roll: take(&|m| m.mean_abs_roll),
                        mean_abs_pitch: take(&|m| m.mean_abs_pitch),
                        half_stride_abs_area: take(&|m| m.half_stride_signed_area.abs()),
                        roll_at_switch: take(&|m| m.roll_at_switch),
                    };
                    (name, stats)
                })
                .collect();
            (
                key,
                FrequencyStats {
                    frequency_hz,
                    frequency_index,
                    controllers,
                },
            )
        })
        .collect();

    SweepSummary {
        schema_version: SCHEMA_VERSION.to_string(),
        seed: records.first().map_or(0, |r| r.seed),
        frequencies,
    }
}
