//! `fairsp` command-line driver.
//!
//! Every verb takes an optional `--config` TOML file; flags override it.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fairsp_core::data::{EncodingMap, SyntheticSpec};
use fairsp_core::debias::TrainerVariant;
use fairsp_core::experiment::{
    ablate_correction, run_sweep, sensitivity, try_run_cell, AggregateRow, Cell, DatasetSource,
    ExperimentConfig, ExperimentReport, PreparedData, SchemaSource, SyntheticPreset,
    SENSITIVITY_GRID,
};

#[derive(Parser)]
#[command(
    name = "fairsp",
    version,
    about = "Fair classification with locally private sensitive attributes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and cache a dataset, and write the encoding fitted on the first seed's training split.
    Prepare(Common),
    /// Run a single (variant, epsilon, clean ratio, seed) cell.
    Run(Common),
    /// Run the Cartesian product of variants, epsilons, ratios and seeds.
    Sweep(Common),
    /// Compare the full method with and without attribute correction.
    Ablate(Common),
    /// Sweep alpha and beta over 0.6..1.0 for the full method.
    Sensitivity(Common),
    /// Re-aggregate an output directory from its per-seed rows.
    Report {
        /// Directory holding rows.jsonl.
        #[arg(long, env = "FAIRSP_OUT_DIR")]
        out: PathBuf,
    },
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV dataset path.
    #[arg(long, conflicts_with = "synthetic")]
    dataset: Option<PathBuf>,
    /// Schema file for --dataset.
    #[arg(long, requires = "dataset")]
    schema: Option<PathBuf>,
    /// Use a generated dataset instead of a CSV.
    #[arg(long, value_parser = parse_preset)]
    synthetic: Option<SyntheticPreset>,
    /// Rows to generate with --synthetic.
    #[arg(long, default_value_t = 8000, requires = "synthetic")]
    rows: usize,
    #[arg(long = "variant", value_delimiter = ',')]
    variants: Vec<TrainerVariant>,
    #[arg(long = "epsilon", value_delimiter = ',')]
    epsilons: Vec<f64>,
    #[arg(long = "clean-ratio", value_delimiter = ',')]
    clean_ratios: Vec<f64>,
    #[arg(long = "seeds", alias = "seed", value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Training epochs for both the debiasing and the correction networks.
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Output directory; defaults to $FAIRSP_OUT_DIR, then ./fairsp-out.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_preset(s: &str) -> Result<SyntheticPreset, String> {
    match s.replace('-', "_").as_str() {
        "biased" => Ok(SyntheticPreset::Biased),
        "unbiased" => Ok(SyntheticPreset::Unbiased),
        "adult_proxy" => Ok(SyntheticPreset::AdultProxy),
        other => Err(format!(
            "unknown preset `{other}` (biased, unbiased, adult_proxy)"
        )),
    }
}

impl Common {
    fn build(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.dataset, self.synthetic) {
            (Some(path), _, _) => ExperimentConfig::from_file(path)
                .with_context(|| format!("reading config {}", path.display()))?,
            (None, Some(_), _) | (None, None, Some(_)) => {
                ExperimentConfig::new(self.dataset_source()?.unwrap())
            }
            (None, None, None) => bail!("need --config, --dataset with --schema, or --synthetic"),
        };
        if self.config.is_some() {
            if let Some(src) = self.dataset_source()? {
                cfg.dataset = src;
            }
        }
        if !self.variants.is_empty() {
            cfg.variants = self.variants.clone();
        }
        if !self.epsilons.is_empty() {
            cfg.epsilons = self.epsilons.clone();
        }
        if !self.clean_ratios.is_empty() {
            cfg.clean_ratios = self.clean_ratios.clone();
        }
        if !self.seeds.is_empty() {
            cfg.seeds = self.seeds.clone();
        }
        if let Some(a) = self.alpha {
            cfg.debias.alpha = a;
        }
        if let Some(b) = self.beta {
            cfg.debias.beta = b;
        }
        if let Some(e) = self.epochs {
            cfg.debias.train.epochs = e;
            cfg.correction.train.epochs = e;
        }
        if let Some(t) = self.test_fraction {
            cfg.test_fraction = t;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if let Some(c) = &self.cache_dir {
            cfg.cache_dir = Some(c.clone());
        }
        if let Some(o) = &self.out {
            cfg.out_dir = Some(o.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn dataset_source(&self) -> Result<Option<DatasetSource>> {
        if let Some(path) = &self.dataset {
            let Some(schema) = &self.schema else {
                bail!("--dataset needs --schema");
            };
            return Ok(Some(DatasetSource::Csv {
                path: path.clone(),
                schema: SchemaSource::Path(schema.clone()),
            }));
        }
        Ok(self.synthetic.map(|preset| DatasetSource::Synthetic {
            preset,
            n: self.rows,
            seed: 0,
        }))
    }
}

fn load(cfg: &ExperimentConfig) -> Result<PreparedData> {
    let data = PreparedData::load(cfg).context("loading dataset")?;
    log::info!("{}: {} rows", data.name(), data.len());
    Ok(data)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)
        .with_context(|| format!("writing {}", path.display()))
}

fn fmt(v: Option<f64>, s: Option<f64>) -> String {
    match (v, s) {
        (Some(v), Some(s)) => format!("{:6.2} ± {:5.2}", 100.0 * v, 100.0 * s),
        _ => format!("{:>14}", "n/a"),
    }
}

fn print_aggregates(aggs: &[AggregateRow]) {
    println!(
        "{:<20} {:>5} {:>5} {:>4} {:>4} {:>14} {:>14} {:>14} {:>14} {:>4}",
        "variant", "eps", "ratio", "a", "b", "acc", "f1", "dDP", "dEO", "fail"
    );
    for a in aggs {
        println!(
            "{:<20} {:>5} {:>5} {:>4} {:>4} {} {} {} {} {:>4}",
            a.variant.name(),
            a.epsilon,
            a.clean_ratio,
            a.alpha,
            a.beta,
            fmt(a.accuracy_mean, a.accuracy_std),
            fmt(a.f1_mean, a.f1_std),
            fmt(a.delta_dp_mean, a.delta_dp_std),
            fmt(a.delta_eo_mean, a.delta_eo_std),
            a.n_failed
        );
    }
}

fn finish(report: &ExperimentReport, out: &Path) -> Result<()> {
    report
        .write(out)
        .with_context(|| format!("writing report to {}", out.display()))?;
    print_aggregates(&report.aggregates);
    for f in report.failures() {
        eprintln!(
            "failed: {} eps={} ratio={} seed={}: {}",
            f.variant,
            f.epsilon,
            f.clean_ratio,
            f.seed,
            f.error.as_deref().unwrap_or("")
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Prepare(c) => {
            let cfg = c.build()?;
            let data = load(&cfg)?;
            let out = cfg.resolved_out_dir();
            std::fs::create_dir_all(&out)?;
            let split = data.split(cfg.test_fraction, cfg.seeds[0])?;
            let summary = serde_json::json!({
                "dataset": data.name(),
                "rows": data.len(),
                "dropped_rows": match &data { PreparedData::Table { raw, .. } => raw.dropped_rows, _ => 0 },
                "train_rows": split.train.len(),
                "test_rows": split.test.len(),
                "feature_width": split.train.feature_width(),
                "unseen_test_categories": split.unseen_test_categories,
                "cache_dir": cfg.resolved_cache_dir(),
            });
            if let Some(map) = &split.encoding {
                write_json(&out.join("encoding.json"), map as &EncodingMap)?;
            }
            if let DatasetSource::Synthetic { .. } | DatasetSource::SyntheticSpec { .. } =
                &cfg.dataset
            {
                let spec: SyntheticSpec = cfg.dataset.synthetic_spec().unwrap();
                write_json(&out.join("synthetic_spec.json"), &spec)?;
            }
            write_json(&out.join("prepared.json"), &summary)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Run(c) => {
            let cfg = c.build()?;
            let one = |n: usize, what: &str| -> Result<()> {
                if n != 1 {
                    bail!("`run` takes exactly one {what}; use `sweep` for several");
                }
                Ok(())
            };
            // A config file may list several values; flags narrow them down.
            one(cfg.variants.len(), "variant")?;
            one(cfg.epsilons.len(), "epsilon")?;
            one(cfg.clean_ratios.len(), "clean ratio")?;
            one(cfg.seeds.len(), "seed")?;
            let data = load(&cfg)?;
            let cell = Cell::new(
                &cfg,
                cfg.variants[0],
                cfg.epsilons[0],
                cfg.clean_ratios[0],
                cfg.seeds[0],
            );
            let row = try_run_cell(&cfg, &data, &cell)?;
            let out = cfg.resolved_out_dir();
            let report = ExperimentReport::from_rows(vec![row]);
            report.write(&out)?;
            println!("{}", serde_json::to_string_pretty(&report.rows[0])?);
        }
        Command::Sweep(c) => {
            let cfg = c.build()?;
            let data = load(&cfg)?;
            finish(&run_sweep(&cfg, &data)?, &cfg.resolved_out_dir())?;
        }
        Command::Ablate(c) => {
            let cfg = c.build()?;
            let data = load(&cfg)?;
            let ab = ablate_correction(&cfg, &data)?;
            let out = cfg.resolved_out_dir();
            finish(&ab.report, &out)?;
            write_json(&out.join("paired_deltas.json"), &ab.deltas)?;
            for m in ["accuracy", "f1", "delta_dp", "delta_eo"] {
                if let Some((mean, std)) = ab.delta_stats(m) {
                    println!(
                        "with - without {m:<9} {:+.2} ± {:.2}",
                        100.0 * mean,
                        100.0 * std
                    );
                }
            }
        }
        Command::Sensitivity(c) => {
            let cfg = c.build()?;
            let data = load(&cfg)?;
            finish(
                &sensitivity(&cfg, &data, &SENSITIVITY_GRID)?,
                &cfg.resolved_out_dir(),
            )?;
        }
        Command::Report { out } => {
            let report = ExperimentReport::load(&out)
                .with_context(|| format!("loading {}", out.display()))?;
            finish(&report, &out)?;
        }
    }
    Ok(())
}
