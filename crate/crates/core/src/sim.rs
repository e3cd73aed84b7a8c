//! Monte Carlo BER engine.
//!
//! Every trial owns a ChaCha8 stream keyed by `(master_seed, point_index)`
//! with the trial index as stream id, so results do not depend on how trials
//! are scheduled across threads. Early stopping is checked only at fixed
//! batch boundaries for the same reason.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aoa::estimate_aoa_from_covariance;
use crate::beamformer::{
    beamform_outputs, constraint_matrix, eigensplit, BeamformerState, EigenSplit,
};
use crate::config::{AoaMode, BeamformerMode, ScenarioConfig, SweepAxis, SweepConfig};
use crate::detector::{detect, DetectionResult};
use crate::numerics::sample_covariance;
use crate::spreading::{select_pair, CodewordPair};
use crate::synthesis::{synthesize_codeword, Scenario, SignalModel};
use crate::{Error, Result};

/// Trials dispatched between early-stop checks.
pub const BATCH_SIZE: u64 = 512;
const CALIBRATION_STREAM: u64 = u64::MAX;
const WILSON_Z95: f64 = 1.959_963_984_540_054;

/// Independent RNG for one trial.
pub fn trial_rng(master_seed: u64, point_index: u64, trial_index: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&point_index.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(trial_index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverOptions {
    pub aoa_mode: AoaMode,
    pub beamformer_mode: BeamformerMode,
    pub grid_step_deg: f64,
    pub rank_tol: f64,
}

impl ReceiverOptions {
    pub fn from_config(cfg: &SweepConfig) -> Self {
        Self {
            aoa_mode: cfg.aoa_mode,
            beamformer_mode: cfg.beamformer_mode,
            grid_step_deg: cfg.scenario.grid_step_deg,
            rank_tol: cfg.rank_tol,
        }
    }
}

impl Default for ReceiverOptions {
    fn default() -> Self {
        Self::from_config(&SweepConfig::default())
    }
}

/// Everything one sweep point shares across its trials.
#[derive(Debug, Clone)]
pub struct TrialContext {
    pub scenario: Scenario,
    pub model: SignalModel,
    pub pair: CodewordPair,
    pub options: ReceiverOptions,
    master_seed: u64,
    point_index: u64,
    /// Angle and split fixed for the run (per-run AoA mode).
    fixed: Option<(f64, EigenSplit)>,
    held: Option<BeamformerState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub truth: i8,
    pub detection: DetectionResult,
    pub aoa_deg: f64,
    pub rank: usize,
    /// Leakage of the true direct-path response into the null space, dB.
    pub null_depth_db: f64,
    pub aoa_low_confidence: bool,
}

impl TrialOutcome {
    pub fn bit_error(&self) -> bool {
        self.detection.decision != self.truth
    }
}

impl TrialContext {
    pub fn new(
        scenario: Scenario,
        options: ReceiverOptions,
        master_seed: u64,
        point_index: u64,
    ) -> Result<Self> {
        let model = SignalModel::new(&scenario)?;
        let pair = select_pair(
            scenario.code_order,
            scenario.code_rows.0,
            scenario.code_rows.1,
        )?;
        let mut ctx = Self {
            scenario,
            model,
            pair,
            options,
            master_seed,
            point_index,
            fixed: None,
            held: None,
        };
        let needs_calibration =
            options.aoa_mode == AoaMode::PerRun || options.beamformer_mode == BeamformerMode::Hold;
        if needs_calibration {
            let mut rng = trial_rng(master_seed, point_index, CALIBRATION_STREAM);
            let frame = synthesize_codeword(&ctx.model, 1, &ctx.pair, &mut rng)?;
            let r_hat = sample_covariance(&frame.samples)?;
            let (angle, split, _) = ctx.split_for(&r_hat)?;
            if options.beamformer_mode == BeamformerMode::Hold {
                ctx.held = Some(BeamformerState::train_from_covariance(
                    split.clone(),
                    &r_hat,
                )?);
            }
            if options.aoa_mode == AoaMode::PerRun {
                ctx.fixed = Some((angle, split));
            }
        }
        Ok(ctx)
    }

    fn split_for(&self, r_hat: &crate::CMatrix) -> Result<(f64, EigenSplit, bool)> {
        let est = estimate_aoa_from_covariance(
            r_hat,
            self.options.grid_step_deg,
            1,
            &self.scenario.array,
        )?;
        let angle = est.primary();
        let split = eigensplit(
            &constraint_matrix(angle, &self.scenario.array)?,
            self.options.rank_tol,
        )?;
        Ok((angle, split, est.low_confidence))
    }

    /// One codeword end to end. Deterministic in `trial_index`.
    pub fn run_trial(&self, trial_index: u64) -> Result<TrialOutcome> {
        let mut rng = trial_rng(self.master_seed, self.point_index, trial_index);
        let truth: i8 = if rng.random::<bool>() { 1 } else { -1 };
        let frame = synthesize_codeword(&self.model, truth, &self.pair, &mut rng)?;
        let r_hat = sample_covariance(&frame.samples)?;

        let (aoa_deg, split, low_conf) = match &self.fixed {
            Some((angle, split)) => (*angle, split.clone(), false),
            None => self.split_for(&r_hat)?,
        };
        let rank = split.rank;
        let null_depth_db = split.leakage_db(&self.model.direct);
        let state = match &self.held {
            Some(held) => BeamformerState {
                split,
                ..held.clone()
            },
            None => BeamformerState::train_from_covariance(split, &r_hat)?,
        };
        let (nu0, nu1) = beamform_outputs(&state, &frame.samples)?;
        let detection = detect(&nu0, &nu1, &self.pair)?;
        Ok(TrialOutcome {
            truth,
            detection,
            aoa_deg,
            rank,
            null_depth_db,
            aoa_low_confidence: low_conf,
        })
    }
}

/// Convenience wrapper: 1 if the trial decoded the wrong symbol.
pub fn run_trial(
    scenario: &Scenario,
    options: ReceiverOptions,
    trial_index: u64,
    master_seed: u64,
) -> Result<u8> {
    let ctx = TrialContext::new(scenario.clone(), options, master_seed, 0)?;
    Ok(ctx.run_trial(trial_index)?.bit_error() as u8)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub axis_name: String,
    pub axis_value: f64,
    pub code_order: u32,
    pub codeword_len: u64,
    pub n_antennas: usize,
    pub snr_db: f64,
    pub d1_m: f64,
    pub trials: u64,
    pub errors: u64,
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub axis_value: f64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepOutcome {
    pub records: Vec<BerRecord>,
    pub failures: Vec<PointFailure>,
}

/// 95% Wilson score interval for `errors` out of `trials`.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = WILSON_Z95 * WILSON_Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let low = if errors == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let high = if errors == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (low, high)
}

/// Run trials for one already-resolved point.
pub fn run_point(ctx: &TrialContext, trials: u64, max_errors: Option<u64>) -> Result<(u64, u64)> {
    let mut done = 0u64;
    let mut errors = 0u64;
    while done < trials {
        let end = (done + BATCH_SIZE).min(trials);
        let batch: u64 = (done..end)
            .into_par_iter()
            .map(|t| ctx.run_trial(t).map(|o| o.bit_error() as u64))
            .try_reduce(|| 0, |a, b| Ok(a + b))?;
        errors += batch;
        done = end;
        if max_errors.is_some_and(|m| errors >= m) {
            break;
        }
    }
    Ok((done, errors))
}

fn make_record(
    axis: SweepAxis,
    value: f64,
    sc: &ScenarioConfig,
    trials: u64,
    errors: u64,
) -> BerRecord {
    let (ci_low, ci_high) = wilson_interval(errors, trials);
    BerRecord {
        axis_name: axis.name().to_string(),
        axis_value: value,
        code_order: sc.code_order,
        codeword_len: 1u64 << sc.code_order,
        n_antennas: sc.n_antennas,
        snr_db: sc.snr_db,
        d1_m: sc.d1_m,
        trials,
        errors,
        ber: errors as f64 / trials as f64,
        ci_low,
        ci_high,
    }
}

/// Evaluate every axis value. A point whose scenario is invalid becomes a
/// [`PointFailure`] instead of aborting the sweep.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutcome> {
    run_sweep_with(config, |_| {})
}

/// [`run_sweep`] with a callback after each finished point.
pub fn run_sweep_with(
    config: &SweepConfig,
    mut on_point: impl FnMut(std::result::Result<&BerRecord, &PointFailure>),
) -> Result<SweepOutcome> {
    config.validate()?;
    let options = ReceiverOptions::from_config(config);
    let mut outcome = SweepOutcome::default();
    for (index, &value) in config.values.iter().enumerate() {
        let point = config.axis.apply(&config.scenario, value).and_then(|sc| {
            let scenario = sc.resolve()?;
            let ctx = TrialContext::new(scenario, options, config.master_seed, index as u64)?;
            let (trials, errors) = run_point(&ctx, config.trials_per_point, config.max_errors)?;
            Ok(make_record(config.axis, value, &sc, trials, errors))
        });
        match point {
            Ok(rec) => {
                on_point(Ok(&rec));
                outcome.records.push(rec);
            }
            Err(e) => {
                let failure = PointFailure {
                    axis_value: value,
                    message: e.to_string(),
                };
                on_point(Err(&failure));
                outcome.failures.push(failure);
            }
        }
    }
    Ok(outcome)
}

/// Smallest SNR (dB) in `[lo, hi]` at which the estimated BER is at most
/// `target`, by bisection on the sweep engine. `base.values` is ignored.
pub fn snr_for_target_ber(
    base: &SweepConfig,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    resolution_db: f64,
) -> Result<f64> {
    let ber_at = |snr: f64, index: u64| -> Result<f64> {
        let sc = SweepAxis::SnrDb.apply(&base.scenario, snr)?;
        let ctx = TrialContext::new(
            sc.resolve()?,
            ReceiverOptions::from_config(base),
            base.master_seed,
            index,
        )?;
        let (trials, errors) = run_point(&ctx, base.trials_per_point, base.max_errors)?;
        Ok(errors as f64 / trials as f64)
    };
    let mut index = 0;
    while hi - lo > resolution_db {
        let mid = 0.5 * (lo + hi);
        index += 1;
        if ber_at(mid, index)? <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Sidecar path written next to a results CSV.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let mut name = csv_path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Write the records CSV and a JSON sidecar with the resolved config.
pub fn write_results(outcome: &SweepOutcome, config: &SweepConfig, path: &Path) -> Result<()> {
    write_csv(&outcome.records, path)?;
    let sidecar = serde_json::json!({
        "generator": concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")),
        "master_seed": config.master_seed,
        "config": config,
        "failures": outcome.failures,
    });
    let side = sidecar_path(path);
    let io = |source| Error::Io {
        path: side.clone(),
        source,
    };
    let mut f = File::create(&side).map_err(io)?;
    serde_json::to_writer_pretty(&mut f, &sidecar).map_err(|e| io(e.into()))?;
    f.write_all(b"\n").map_err(io)?;
    Ok(())
}

pub fn write_csv(records: &[BerRecord], path: &Path) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub const CSV_HEADER: [&str; 12] = [
    "axis_name",
    "axis_value",
    "code_order",
    "codeword_len",
    "n_antennas",
    "snr_db",
    "d1_m",
    "trials",
    "errors",
    "ber",
    "ci_low",
    "ci_high",
];

pub fn read_results(path: &Path) -> Result<Vec<BerRecord>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_err)
}
