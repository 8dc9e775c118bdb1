use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::prepare::PreparedData;
use super::report::{mean_std, ExperimentReport, ReportRow};
use crate::correction::CorrectorBundle;
use crate::data::partition_semi_private;
use crate::debias::{train_baseline, train_fairsp, TrainerVariant};
use crate::error::{Error, Result, StageExt};
use crate::metrics::FairnessReport;
use crate::privacy::{privatize, PrivacyBudget};

/// Grid used by the hyperparameter sensitivity mode for both `α` and `β`.
pub const SENSITIVITY_GRID: [f64; 5] = [0.6, 0.7, 0.8, 0.9, 1.0];

/// Coordinates of one run. Everything else comes from the config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub variant: TrainerVariant,
    pub epsilon: f64,
    pub clean_ratio: f64,
    pub seed: u64,
    pub alpha: f64,
    pub beta: f64,
}

impl Cell {
    pub fn new(
        config: &ExperimentConfig,
        variant: TrainerVariant,
        epsilon: f64,
        clean_ratio: f64,
        seed: u64,
    ) -> Self {
        Self {
            variant,
            epsilon,
            clean_ratio,
            seed,
            alpha: config.debias.alpha,
            beta: config.debias.beta,
        }
    }
}

/// Runs one cell and returns its row, or the first failing stage's error.
///
/// Stages: split (with per-split encoding for tables), partition, noise,
/// correction (fairsp only), train, evaluate. The run seed feeds every
/// stage; stages draw from separately tagged streams.
pub fn try_run_cell(
    config: &ExperimentConfig,
    data: &PreparedData,
    cell: &Cell,
) -> Result<ReportRow> {
    let start = Instant::now();
    let mut row = ReportRow::empty(data.name(), cell);
    let split = data.split(config.test_fraction, cell.seed)?;
    let partition =
        partition_semi_private(&split.train, cell.clean_ratio, cell.seed).stage("partition")?;
    let budget = PrivacyBudget::new(cell.epsilon).stage("noise")?;
    let (noised, noise) = privatize(&partition, budget, cell.seed).stage("noise")?;

    let mut debias = config.debias;
    debias.alpha = cell.alpha;
    debias.beta = cell.beta;
    debias.seed = cell.seed;

    let model = if cell.variant == TrainerVariant::Fairsp {
        let corrected = if noised.private.is_empty() {
            noised.private.clone()
        } else {
            let bundle = CorrectorBundle::fit(
                &noised.clean,
                &noised.private,
                &config.correction,
                cell.seed,
            )
            .stage("correct")?;
            row.c_hat = Some(bundle.c_hat);
            row.correction = bundle.diagnostics(&noised.private).stage("correct")?;
            bundle.correct(&noised.private).stage("correct")?
        };
        train_fairsp(&noised.clean, &corrected, &debias).stage("train")?
    } else {
        train_baseline(cell.variant, &noised, &debias).stage("train")?
    };

    let report = FairnessReport::evaluate(&model, &split.test).stage("evaluate")?;
    row.accuracy = Some(report.accuracy);
    row.f1 = Some(report.f1);
    row.delta_dp = Some(report.delta_dp);
    row.delta_eo = Some(report.delta_eo);
    row.group_counts = Some(report.group_counts);
    row.noise = Some(noise);
    row.n_train = Some(split.train.len());
    row.n_test = Some(split.test.len());
    row.n_clean = Some(noised.clean.len());
    row.n_private = Some(noised.private.len());
    row.runtime_secs = start.elapsed().as_secs_f64();
    Ok(row)
}

/// Like [`try_run_cell`] but records a failure in the row instead of
/// returning it.
pub fn run_cell(config: &ExperimentConfig, data: &PreparedData, cell: &Cell) -> ReportRow {
    let start = Instant::now();
    match try_run_cell(config, data, cell) {
        Ok(row) => {
            log::info!(
                "{} eps={} ratio={} seed={}: acc={:.4} eo={:.4}",
                cell.variant,
                cell.epsilon,
                cell.clean_ratio,
                cell.seed,
                row.accuracy.unwrap_or(f64::NAN),
                row.delta_eo.unwrap_or(f64::NAN)
            );
            row
        }
        Err(e) => {
            log::warn!(
                "{} eps={} seed={} failed: {e}",
                cell.variant,
                cell.epsilon,
                cell.seed
            );
            let mut row = ReportRow::empty(data.name(), cell);
            row.error = Some(e.to_string());
            row.runtime_secs = start.elapsed().as_secs_f64();
            row
        }
    }
}

/// Loads the dataset and runs one cell with the config's `α` and `β`.
pub fn run_single(
    config: &ExperimentConfig,
    variant: TrainerVariant,
    epsilon: f64,
    clean_ratio: f64,
    seed: u64,
) -> Result<ReportRow> {
    config.validate()?;
    let data = PreparedData::load(config)?;
    try_run_cell(
        config,
        &data,
        &Cell::new(config, variant, epsilon, clean_ratio, seed),
    )
}

/// Variant × ε × ratio × seed, in that nesting order.
pub fn sweep_cells(config: &ExperimentConfig) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &v in &config.variants {
        for &e in &config.epsilons {
            for &r in &config.clean_ratios {
                for &s in &config.seeds {
                    cells.push(Cell::new(config, v, e, r, s));
                }
            }
        }
    }
    cells
}

/// Runs `cells` on a pool of `config.workers` threads. Rows come back in
/// `cells` order regardless of completion order.
pub fn run_cells(
    config: &ExperimentConfig,
    data: &PreparedData,
    cells: &[Cell],
) -> Result<Vec<ReportRow>> {
    if config.workers == 1 {
        return Ok(cells.iter().map(|c| run_cell(config, data, c)).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        cells
            .par_iter()
            .map(|c| run_cell(config, data, c))
            .collect()
    }))
}

pub fn run_sweep(config: &ExperimentConfig, data: &PreparedData) -> Result<ExperimentReport> {
    config.validate()?;
    let rows = run_cells(config, data, &sweep_cells(config))?;
    Ok(ExperimentReport::from_rows(rows))
}

/// Per-seed difference `with − without` for each metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedDelta {
    pub epsilon: f64,
    pub clean_ratio: f64,
    pub seed: u64,
    pub accuracy: f64,
    pub f1: f64,
    pub delta_dp: f64,
    pub delta_eo: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    /// `fairsp` and `clean_plus_private` rows, paired by seed.
    pub report: ExperimentReport,
    /// Pairs where both runs succeeded.
    pub deltas: Vec<PairedDelta>,
}

impl AblationReport {
    /// Mean and sample std of one paired delta across seeds.
    pub fn delta_stats(&self, metric: &str) -> Option<(f64, f64)> {
        let vals: Vec<f64> = self
            .deltas
            .iter()
            .map(|d| match metric {
                "accuracy" => d.accuracy,
                "f1" => d.f1,
                "delta_dp" => d.delta_dp,
                _ => d.delta_eo,
            })
            .collect();
        mean_std(&vals)
    }
}

/// Full method against the same pipeline without the correction stage, which
/// is the two-adversary trainer on the raw noised attributes.
pub fn ablate_correction(config: &ExperimentConfig, data: &PreparedData) -> Result<AblationReport> {
    config.validate()?;
    let mut cells = Vec::new();
    for &e in &config.epsilons {
        for &r in &config.clean_ratios {
            for &s in &config.seeds {
                cells.push(Cell::new(config, TrainerVariant::Fairsp, e, r, s));
                cells.push(Cell::new(config, TrainerVariant::CleanPlusPrivate, e, r, s));
            }
        }
    }
    let rows = run_cells(config, data, &cells)?;
    let deltas = rows
        .chunks(2)
        .filter_map(|pair| {
            let (with, without) = (&pair[0], &pair[1]);
            let d = |a: Option<f64>, b: Option<f64>| Some(a? - b?);
            Some(PairedDelta {
                epsilon: with.epsilon,
                clean_ratio: with.clean_ratio,
                seed: with.seed,
                accuracy: d(with.accuracy, without.accuracy)?,
                f1: d(with.f1, without.f1)?,
                delta_dp: d(with.delta_dp, without.delta_dp)?,
                delta_eo: d(with.delta_eo, without.delta_eo)?,
            })
        })
        .collect();
    Ok(AblationReport {
        report: ExperimentReport::from_rows(rows),
        deltas,
    })
}

/// One-at-a-time sweep of `α` (with `β` from the config) and then `β` (with
/// `α` from the config) over `grid`, for the full method.
pub fn sensitivity(
    config: &ExperimentConfig,
    data: &PreparedData,
    grid: &[f64],
) -> Result<ExperimentReport> {
    config.validate()?;
    if grid.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Config("sensitivity grid values must be >= 0".into()));
    }
    let mut cells = Vec::new();
    for &e in &config.epsilons {
        for &r in &config.clean_ratios {
            for (vary_alpha, values) in [(true, grid), (false, grid)] {
                for &v in values {
                    for &s in &config.seeds {
                        let mut c = Cell::new(config, TrainerVariant::Fairsp, e, r, s);
                        if vary_alpha {
                            c.alpha = v;
                        } else {
                            c.beta = v;
                        }
                        cells.push(c);
                    }
                }
            }
        }
    }
    // The two passes share the point where the grid value equals the config
    // value; keep one copy.
    let mut unique: Vec<Cell> = Vec::with_capacity(cells.len());
    for c in cells {
        if !unique.contains(&c) {
            unique.push(c);
        }
    }
    Ok(ExperimentReport::from_rows(run_cells(
        config, data, &unique,
    )?))
}
