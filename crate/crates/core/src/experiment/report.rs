use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::correction::{CorrectionDiagnostics, CorruptionMatrix};
use crate::debias::TrainerVariant;
use crate::error::{Error, Result};
use crate::metrics::GroupCounts;
use crate::privacy::NoiseReport;

pub const ROWS_FILE: &str = "rows.jsonl";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const CURVES_FILE: &str = "curves.csv";

/// One (variant, ε, clean ratio, seed) cell.
///
/// Fields that do not apply to a run (Ĉ for baselines, metrics of a failed
/// run) are `null` rather than absent, so every row has the same shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub dataset: String,
    pub variant: TrainerVariant,
    pub epsilon: f64,
    pub clean_ratio: f64,
    pub seed: u64,
    pub alpha: f64,
    pub beta: f64,
    pub accuracy: Option<f64>,
    pub f1: Option<f64>,
    pub delta_dp: Option<f64>,
    pub delta_eo: Option<f64>,
    pub group_counts: Option<GroupCounts>,
    pub c_hat: Option<CorruptionMatrix>,
    pub correction: Option<CorrectionDiagnostics>,
    pub noise: Option<NoiseReport>,
    pub n_train: Option<usize>,
    pub n_test: Option<usize>,
    pub n_clean: Option<usize>,
    pub n_private: Option<usize>,
    pub runtime_secs: f64,
    pub error: Option<String>,
}

impl ReportRow {
    pub(crate) fn empty(dataset: &str, cell: &super::Cell) -> Self {
        Self {
            dataset: dataset.to_string(),
            variant: cell.variant,
            epsilon: cell.epsilon,
            clean_ratio: cell.clean_ratio,
            seed: cell.seed,
            alpha: cell.alpha,
            beta: cell.beta,
            accuracy: None,
            f1: None,
            delta_dp: None,
            delta_eo: None,
            group_counts: None,
            c_hat: None,
            correction: None,
            noise: None,
            n_train: None,
            n_test: None,
            n_clean: None,
            n_private: None,
            runtime_secs: 0.0,
            error: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    /// The row with wall-clock time zeroed. Two runs of the same tuple agree
    /// on everything else bit for bit.
    pub fn deterministic_part(&self) -> ReportRow {
        ReportRow {
            runtime_secs: 0.0,
            ..self.clone()
        }
    }

    fn key(&self) -> GroupKey {
        GroupKey {
            variant: self.variant,
            epsilon: self.epsilon.to_bits(),
            clean_ratio: self.clean_ratio.to_bits(),
            alpha: self.alpha.to_bits(),
            beta: self.beta.to_bits(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct GroupKey {
    variant: TrainerVariant,
    epsilon: u64,
    clean_ratio: u64,
    alpha: u64,
    beta: u64,
}

/// Mean and sample standard deviation (`n − 1` denominator; 0 for one value).
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}

pub const METRICS: [&str; 4] = ["accuracy", "f1", "delta_dp", "delta_eo"];

fn metric(row: &ReportRow, name: &str) -> Option<f64> {
    match name {
        "accuracy" => row.accuracy,
        "f1" => row.f1,
        "delta_dp" => row.delta_dp,
        "delta_eo" => row.delta_eo,
        _ => None,
    }
}

/// Mean ± std over the successful seeds of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub variant: TrainerVariant,
    pub epsilon: f64,
    pub clean_ratio: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Successful seeds, space separated.
    pub seeds: String,
    pub n_ok: usize,
    pub n_failed: usize,
    pub accuracy_mean: Option<f64>,
    pub accuracy_std: Option<f64>,
    pub f1_mean: Option<f64>,
    pub f1_std: Option<f64>,
    pub delta_dp_mean: Option<f64>,
    pub delta_dp_std: Option<f64>,
    pub delta_eo_mean: Option<f64>,
    pub delta_eo_std: Option<f64>,
}

impl AggregateRow {
    pub fn mean(&self, name: &str) -> Option<f64> {
        match name {
            "accuracy" => self.accuracy_mean,
            "f1" => self.f1_mean,
            "delta_dp" => self.delta_dp_mean,
            "delta_eo" => self.delta_eo_mean,
            _ => None,
        }
    }

    pub fn std(&self, name: &str) -> Option<f64> {
        match name {
            "accuracy" => self.accuracy_std,
            "f1" => self.f1_std,
            "delta_dp" => self.delta_dp_std,
            "delta_eo" => self.delta_eo_std,
            _ => None,
        }
    }
}

/// Long-format record for plotting: one metric of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub variant: TrainerVariant,
    pub epsilon: f64,
    pub clean_ratio: f64,
    pub alpha: f64,
    pub beta: f64,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

pub fn aggregate(rows: &[ReportRow]) -> Vec<AggregateRow> {
    // First-appearance order, so aggregates follow the sweep order.
    let mut groups: Vec<(GroupKey, Vec<&ReportRow>)> = Vec::new();
    for r in rows {
        let k = r.key();
        match groups.iter_mut().find(|(g, _)| *g == k) {
            Some((_, members)) => members.push(r),
            None => groups.push((k, vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|(_, members)| {
            let ok: Vec<&ReportRow> = members.iter().copied().filter(|r| r.is_ok()).collect();
            let stat = |name: &str| {
                let vals: Vec<f64> = ok.iter().filter_map(|r| metric(r, name)).collect();
                mean_std(&vals)
            };
            let [acc, f1, dp, eo] = METRICS.map(stat);
            let first = members[0];
            AggregateRow {
                variant: first.variant,
                epsilon: first.epsilon,
                clean_ratio: first.clean_ratio,
                alpha: first.alpha,
                beta: first.beta,
                seeds: ok
                    .iter()
                    .map(|r| r.seed.to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
                n_ok: ok.len(),
                n_failed: members.len() - ok.len(),
                accuracy_mean: acc.map(|s| s.0),
                accuracy_std: acc.map(|s| s.1),
                f1_mean: f1.map(|s| s.0),
                f1_std: f1.map(|s| s.1),
                delta_dp_mean: dp.map(|s| s.0),
                delta_dp_std: dp.map(|s| s.1),
                delta_eo_mean: eo.map(|s| s.0),
                delta_eo_std: eo.map(|s| s.1),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    pub aggregates: Vec<AggregateRow>,
}

impl ExperimentReport {
    pub fn from_rows(rows: Vec<ReportRow>) -> Self {
        let aggregates = aggregate(&rows);
        Self { rows, aggregates }
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| !r.is_ok())
    }

    pub fn find(
        &self,
        variant: TrainerVariant,
        epsilon: f64,
        clean_ratio: f64,
    ) -> Option<&AggregateRow> {
        self.aggregates
            .iter()
            .find(|a| a.variant == variant && a.epsilon == epsilon && a.clean_ratio == clean_ratio)
    }

    pub fn curves(&self) -> Vec<CurvePoint> {
        let mut out = Vec::new();
        for a in &self.aggregates {
            for m in METRICS {
                if let (Some(mean), Some(std)) = (a.mean(m), a.std(m)) {
                    out.push(CurvePoint {
                        variant: a.variant,
                        epsilon: a.epsilon,
                        clean_ratio: a.clean_ratio,
                        alpha: a.alpha,
                        beta: a.beta,
                        metric: m.to_string(),
                        mean,
                        std,
                        n: a.n_ok,
                    });
                }
            }
        }
        out
    }

    /// Writes `rows.jsonl`, `aggregate.csv` and `curves.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_rows(&dir.join(ROWS_FILE), &self.rows)?;
        write_csv(&dir.join(AGGREGATE_FILE), &self.aggregates)?;
        write_csv(&dir.join(CURVES_FILE), &self.curves())?;
        Ok(())
    }

    /// Reloads per-seed rows from `dir` and recomputes the aggregates. If an
    /// aggregate table is present it must match the recomputed one.
    pub fn load(dir: &Path) -> Result<Self> {
        let report = Self::from_rows(read_rows(&dir.join(ROWS_FILE))?);
        let agg_path = dir.join(AGGREGATE_FILE);
        if agg_path.exists() {
            let stored: Vec<AggregateRow> = read_csv(&agg_path)?;
            check_aggregates(&stored, &report.aggregates)?;
        }
        Ok(report)
    }
}

fn close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => (x - y).abs() <= 1e-9 * (1.0 + x.abs()),
        _ => false,
    }
}

/// Stored aggregates must cover exactly the recomputed groups with the same
/// statistics.
pub fn check_aggregates(stored: &[AggregateRow], recomputed: &[AggregateRow]) -> Result<()> {
    if stored.len() != recomputed.len() {
        return Err(Error::Config(format!(
            "aggregate table has {} groups, rows give {}",
            stored.len(),
            recomputed.len()
        )));
    }
    for (s, r) in stored.iter().zip(recomputed) {
        let same_group = s.variant == r.variant
            && s.epsilon == r.epsilon
            && s.clean_ratio == r.clean_ratio
            && s.alpha == r.alpha
            && s.beta == r.beta;
        let same_stats = s.seeds == r.seeds
            && s.n_ok == r.n_ok
            && s.n_failed == r.n_failed
            && METRICS
                .iter()
                .all(|m| close(s.mean(m), r.mean(m)) && close(s.std(m), r.std(m)));
        if !(same_group && same_stats) {
            return Err(Error::Config(format!(
                "aggregate for {} at epsilon {} does not match its rows",
                r.variant, r.epsilon
            )));
        }
    }
    Ok(())
}

pub fn write_rows(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in rows {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<ReportRow>> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut rows = Vec::new();
    for line in file.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            rows.push(serde_json::from_str(&line)?);
        }
    }
    Ok(rows)
}

fn write_csv<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for it in items {
        w.serialize(it)?;
    }
    w.flush()?;
    Ok(())
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|x| x.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(seed: u64, acc: f64, eo: Option<f64>) -> ReportRow {
        let cell = crate::experiment::Cell {
            variant: TrainerVariant::Vanilla,
            epsilon: 0.5,
            clean_ratio: 0.2,
            seed,
            alpha: 1.0,
            beta: 1.0,
        };
        let mut r = ReportRow::empty("t", &cell);
        r.accuracy = Some(acc);
        r.f1 = Some(acc);
        r.delta_dp = Some(0.1);
        r.delta_eo = eo;
        r
    }

    #[test]
    fn sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[7.0]), Some((7.0, 0.0)));
        assert_eq!(mean_std(&[]), None);
    }

    #[test]
    fn failed_rows_are_excluded_from_statistics() {
        let mut bad = row(3, 0.0, None);
        bad.error = Some("boom".into());
        let rep =
            ExperimentReport::from_rows(vec![row(1, 0.8, Some(0.1)), row(2, 0.6, Some(0.3)), bad]);
        let a = &rep.aggregates[0];
        assert_eq!((a.n_ok, a.n_failed), (2, 1));
        assert_eq!(a.seeds, "1 2");
        assert!((a.accuracy_mean.unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(rep.failures().count(), 1);
    }

    #[test]
    fn write_load_round_trip_and_tamper_check() {
        let dir = tempfile::tempdir().unwrap();
        let rep = ExperimentReport::from_rows(vec![row(1, 0.8, Some(0.1)), row(2, 0.7, None)]);
        rep.write(dir.path()).unwrap();
        let back = ExperimentReport::load(dir.path()).unwrap();
        assert_eq!(back, rep);

        let mut tampered = rep.rows.clone();
        tampered[0].accuracy = Some(0.1);
        write_rows(&dir.path().join(ROWS_FILE), &tampered).unwrap();
        assert!(ExperimentReport::load(dir.path()).is_err());
    }
}
