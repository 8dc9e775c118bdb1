use std::path::Path;

use fairsp_core::data::DatasetSchema;
use fairsp_core::debias::TrainerVariant;
use fairsp_core::experiment::{
    ablate_correction, content_hash, load_table, run_cells, run_single, run_sweep, sweep_cells,
    DatasetSource, ExperimentConfig, ExperimentReport, PreparedData, SyntheticPreset,
};
use fairsp_core::Error;

fn config(preset: SyntheticPreset, n: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(DatasetSource::Synthetic { preset, n, seed: 0 });
    c.debias.train.epochs = 4;
    c.correction.train.epochs = 4;
    c.epsilons = vec![0.5];
    c.seeds = vec![5, 7];
    c
}

#[test]
fn a_row_regenerates_bit_identically() {
    let c = config(SyntheticPreset::Biased, 1500);
    let a = run_single(&c, TrainerVariant::Fairsp, 0.5, 0.2, 7).unwrap();
    let b = run_single(&c, TrainerVariant::Fairsp, 0.5, 0.2, 7).unwrap();
    assert!(a.is_ok(), "{:?}", a.error);
    assert_eq!(a.deterministic_part(), b.deterministic_part());
    assert_eq!(a.accuracy.unwrap().to_bits(), b.accuracy.unwrap().to_bits());
    // A different seed changes the row.
    let c2 = run_single(&c, TrainerVariant::Fairsp, 0.5, 0.2, 11).unwrap();
    assert_ne!(a.deterministic_part(), c2.deterministic_part());
}

#[test]
fn vanilla_is_fair_when_the_attribute_is_independent() {
    let mut c = config(SyntheticPreset::Unbiased, 8000);
    c.debias.train.epochs = 10;
    let row = run_single(&c, TrainerVariant::Vanilla, 0.5, 0.2, 5).unwrap();
    assert!(row.delta_dp.unwrap() < 0.05, "{row:?}");
}

#[test]
fn empty_seed_list_rejected() {
    let mut c = config(SyntheticPreset::Biased, 100);
    c.seeds.clear();
    assert!(matches!(c.validate(), Err(Error::Config(_))));
    let data = PreparedData::load(&config(SyntheticPreset::Biased, 100)).unwrap();
    assert!(run_sweep(&c, &data).is_err());
}

#[test]
fn config_round_trips_through_toml() {
    let mut c = config(SyntheticPreset::AdultProxy, 321);
    c.variants = vec![TrainerVariant::Fairsp, TrainerVariant::RemoveS];
    c.debias.alpha = 0.7;
    let back = ExperimentConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
    assert_eq!(back, c);
}

#[test]
fn sweep_records_failed_cells_and_continues() {
    let mut c = config(SyntheticPreset::Biased, 600);
    c.variants = vec![TrainerVariant::PrivateOnly, TrainerVariant::Vanilla];
    // No private subset at ratio 1, so private_only cannot train there.
    c.clean_ratios = vec![0.2, 1.0];
    c.seeds = vec![5];
    let data = PreparedData::load(&c).unwrap();
    let report = run_sweep(&c, &data).unwrap();
    assert_eq!(report.rows.len(), 4);
    let failed: Vec<_> = report.failures().collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(
        (failed[0].variant, failed[0].clean_ratio),
        (TrainerVariant::PrivateOnly, 1.0)
    );
    assert!(failed[0].error.as_deref().unwrap().contains("train"));
    let agg = report.find(TrainerVariant::PrivateOnly, 0.5, 1.0).unwrap();
    assert_eq!((agg.n_ok, agg.n_failed), (0, 1));
    assert!(agg.accuracy_mean.is_none());
    assert_eq!(
        report.find(TrainerVariant::Vanilla, 0.5, 1.0).unwrap().n_ok,
        1
    );
}

#[test]
fn ablation_pairs_runs_by_seed() {
    let c = config(SyntheticPreset::Biased, 1200);
    let data = PreparedData::load(&c).unwrap();
    let ab = ablate_correction(&c, &data).unwrap();
    assert_eq!(ab.report.rows.len(), 2 * c.seeds.len());
    assert_eq!(ab.deltas.len(), c.seeds.len());
    for (pair, d) in ab.report.rows.chunks(2).zip(&ab.deltas) {
        assert_eq!(
            (pair[0].variant, pair[1].variant),
            (TrainerVariant::Fairsp, TrainerVariant::CleanPlusPrivate)
        );
        assert_eq!((pair[0].seed, pair[1].seed), (d.seed, d.seed));
        assert_eq!(
            d.delta_eo,
            pair[0].delta_eo.unwrap() - pair[1].delta_eo.unwrap()
        );
        // The without-correction arm is an ordinary clean_plus_private run.
        let alone = run_single(&c, TrainerVariant::CleanPlusPrivate, 0.5, 0.2, d.seed).unwrap();
        assert_eq!(alone.deterministic_part(), pair[1].deterministic_part());
    }
}

#[test]
fn report_round_trips_and_detects_tampering() {
    let c = config(SyntheticPreset::Biased, 600);
    let data = PreparedData::load(&c).unwrap();
    let report = run_sweep(&c, &data).unwrap();
    let dir = tempfile::tempdir().unwrap();
    report.write(dir.path()).unwrap();
    for f in ["rows.jsonl", "aggregate.csv", "curves.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let back = ExperimentReport::load(dir.path()).unwrap();
    assert_eq!(back.rows, report.rows);
    assert_eq!(back.aggregates, report.aggregates);

    let agg = dir.path().join("aggregate.csv");
    let text = std::fs::read_to_string(&agg).unwrap();
    let mean = format!("{}", report.aggregates[0].accuracy_mean.unwrap());
    std::fs::write(&agg, text.replacen(&mean, "0.123", 1)).unwrap();
    assert!(ExperimentReport::load(dir.path()).is_err());
}

#[test]
fn parallel_sweep_matches_serial() {
    let mut c = config(SyntheticPreset::Biased, 800);
    c.variants = vec![TrainerVariant::Fairsp, TrainerVariant::CleanOnly];
    let data = PreparedData::load(&c).unwrap();
    let cells = sweep_cells(&c);
    let serial = run_cells(&c, &data, &cells).unwrap();
    c.workers = 3;
    let parallel = run_cells(&c, &data, &cells).unwrap();
    let strip = |rows: Vec<fairsp_core::experiment::ReportRow>| {
        rows.into_iter()
            .map(|r| r.deterministic_part())
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(serial), strip(parallel));
}

const SCHEMA: &str = r#"
columns = [{ name = "x", kind = "numeric" }, { name = "c", kind = "categorical" }]
label = { column = "y", positive = ["1"] }
sensitive = { column = "s", protected = ["f"] }
"#;

fn write_csv(path: &Path, rows: usize) {
    let mut s = String::from("x,c,s,y\n");
    for i in 0..rows {
        s.push_str(&format!(
            "{i},{},{},{}\n",
            ["a", "b"][i % 2],
            ["f", "m"][i % 3 % 2],
            i % 2
        ));
    }
    std::fs::write(path, s).unwrap();
}

#[test]
fn cache_is_reused_and_invalidated_by_content() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, cache) = (dir.path().join("d.csv"), dir.path().join("cache"));
    let schema = DatasetSchema::from_toml_str(SCHEMA).unwrap();
    write_csv(&csv, 10);
    let first = load_table(&csv, &schema, Some(&cache)).unwrap();
    let entries = || std::fs::read_dir(&cache).unwrap().count();
    assert_eq!(entries(), 1);

    // A hit is served from the cache file, not re-parsed.
    let key = content_hash(&std::fs::read(&csv).unwrap(), &schema).unwrap();
    let entry = cache.join(format!("{key}.json"));
    let mut doctored = first.clone();
    doctored.dropped_rows = 777;
    std::fs::write(&entry, serde_json::to_vec(&doctored).unwrap()).unwrap();
    assert_eq!(
        load_table(&csv, &schema, Some(&cache))
            .unwrap()
            .dropped_rows,
        777
    );

    // Changing the file changes the key.
    write_csv(&csv, 12);
    let second = load_table(&csv, &schema, Some(&cache)).unwrap();
    assert_eq!((second.len(), second.dropped_rows), (12, 0));
    assert_eq!(entries(), 2);

    // So does changing the schema.
    let other =
        DatasetSchema::from_toml_str(&SCHEMA.replace(r#"positive = ["1"]"#, r#"positive = ["0"]"#))
            .unwrap();
    assert_ne!(
        content_hash(&std::fs::read(&csv).unwrap(), &other).unwrap(),
        content_hash(&std::fs::read(&csv).unwrap(), &schema).unwrap()
    );
    assert_eq!(
        load_table(&csv, &other, Some(&cache)).unwrap().records[0].label,
        1
    );
}

#[test]
fn csv_config_resolves_paths_against_its_directory() {
    let dir = tempfile::tempdir().unwrap();
    write_csv(&dir.path().join("d.csv"), 40);
    std::fs::write(dir.path().join("d.schema.toml"), SCHEMA).unwrap();
    let cfg_path = dir.path().join("exp.toml");
    std::fs::write(
        &cfg_path,
        "seeds = [1]\nepsilons = [1.0]\n[dataset]\nkind = \"csv\"\npath = \"d.csv\"\nschema = \"d.schema.toml\"\n",
    )
    .unwrap();
    let c = ExperimentConfig::from_file(&cfg_path).unwrap();
    let data = PreparedData::load(&c).unwrap();
    assert_eq!(data.len(), 40);
    let split = data.split(0.5, 1).unwrap();
    assert_eq!((split.train.len(), split.test.len()), (20, 20));
    assert!(split.encoding.is_some());
}

#[test]
fn bundled_experiment_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for f in [
        "adult.toml",
        "compas.toml",
        "synthetic_biased.toml",
        "pilot.toml",
    ] {
        let c = ExperimentConfig::from_file(dir.join(f)).unwrap_or_else(|e| panic!("{f}: {e}"));
        assert_eq!(c.seeds, fairsp_core::experiment::DEFAULT_SEEDS, "{f}");
    }
}
