use std::path::PathBuf;

use fairsp_core::data::{
    encode, load_csv, load_csv_reader, partition_semi_private, split_indices, synthesize,
    DatasetSchema, EncodingMap, RawValue, SyntheticSpec,
};
use fairsp_core::Error;
use proptest::prelude::*;

const SCHEMA: &str = r#"
columns = [
    { name = "age", kind = "numeric" },
    { name = "job", kind = "categorical" },
]
label = { column = "income", positive = [">50K", ">50K."] }
sensitive = { column = "sex", protected = ["Female"] }
missing_tokens = ["", "?"]
"#;

const CSV: &str = "\
age,job,sex,income,unused
30,clerk,Male,<=50K,x
40,?,Female,>50K,x
50,exec,Female,>50K.,x
20,clerk,Male,<=50K,x
";

fn schema() -> DatasetSchema {
    DatasetSchema::from_toml_str(SCHEMA).unwrap()
}

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn csv_rows_map_label_and_sensitive_values() {
    let t = load_csv_reader(CSV.as_bytes(), &schema()).unwrap();
    assert_eq!(t.len(), 3);
    assert_eq!(t.dropped_rows, 1);
    assert_eq!(
        t.records.iter().map(|r| r.label).collect::<Vec<_>>(),
        vec![0, 1, 0]
    );
    assert_eq!(
        t.records.iter().map(|r| r.sensitive).collect::<Vec<_>>(),
        vec![0, 1, 0]
    );
    assert_eq!(t.records[1].features[0], RawValue::Number(50.0));
}

#[test]
fn sensitive_column_never_encoded() {
    let s = schema();
    let t = load_csv_reader(CSV.as_bytes(), &s).unwrap();
    let (d, map) = encode(&t, &s).unwrap();
    // age (1) + job one-hot over {clerk, exec} (2)
    assert_eq!(d.feature_width(), 3);
    assert!(map.feature_names().iter().all(|n| !n.contains("sex")));
    assert_eq!(d.a, vec![0, 1, 0]);
}

#[test]
fn sensitive_as_feature_rejected() {
    let bad = SCHEMA.replace(
        r#"{ name = "job", kind = "categorical" },"#,
        r#"{ name = "sex", kind = "categorical" },"#,
    );
    assert!(matches!(
        DatasetSchema::from_toml_str(&bad),
        Err(Error::Schema(_))
    ));
}

#[test]
fn missing_header_is_a_schema_error() {
    let csv = "age,job,gender,income\n1,a,Male,<=50K\n";
    assert!(matches!(
        load_csv_reader(csv.as_bytes(), &schema()),
        Err(Error::Schema(_))
    ));
}

#[test]
fn unparsable_number_reports_row_and_column() {
    let csv = "age,job,sex,income\n1,a,Male,<=50K\nold,a,Male,<=50K\n";
    match load_csv_reader(csv.as_bytes(), &schema()) {
        Err(Error::Parse { row, column, value }) => {
            assert_eq!((row, column.as_str(), value.as_str()), (2, "age", "old"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn encoding_uses_training_statistics_only() {
    let s = schema();
    let csv = "age,job,sex,income\n10,a,Male,<=50K\n20,a,Female,>50K\n30,b,Male,<=50K\n1000,c,Female,>50K\n";
    let t = load_csv_reader(csv.as_bytes(), &s).unwrap();
    let train = t.select(&[0, 1, 2]);
    let test = t.select(&[3]);
    let map = EncodingMap::fit(&train).unwrap();
    let tr = map.transform(&train).unwrap().dataset;
    let col: Vec<f64> = (0..3).map(|r| tr.x.get(r, 0)).collect();
    let mean = col.iter().sum::<f64>() / 3.0;
    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 3.0;
    assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
    let te = map.transform(&test).unwrap();
    // (1000 − 20) / sqrt(200/3), with an unseen category encoded as zeros
    assert!((te.dataset.x.get(0, 0) - 980.0 / (200.0f64 / 3.0).sqrt()).abs() < 1e-9);
    assert_eq!(te.unseen_categories, 1);
    assert_eq!(&te.dataset.x.row(0)[1..], &[0.0, 0.0]);
}

#[test]
fn bundled_schemas_parse() {
    for f in ["adult.schema.toml", "compas.schema.toml"] {
        let s = DatasetSchema::from_file(configs_dir().join(f)).unwrap();
        assert!(!s.columns.is_empty(), "{f}");
    }
}

#[test]
fn adult_row_count_when_available() {
    let Some(path) = std::env::var_os("FAIRSP_ADULT_CSV") else {
        eprintln!("FAIRSP_ADULT_CSV not set; skipping");
        return;
    };
    let s = DatasetSchema::from_file(configs_dir().join("adult.schema.toml")).unwrap();
    let t = load_csv(path, &s).unwrap();
    assert_eq!(t.len() + t.dropped_rows, 48_842);
    let (train, test) = split_indices(t.len(), 0.5, 5).unwrap();
    assert_eq!(test.len(), t.len().div_ceil(2));
    assert_eq!(train.len() + test.len(), t.len());
}

#[test]
fn unbiased_generator_has_independent_attribute() {
    let d = synthesize(&SyntheticSpec::unbiased(20_000, 1)).unwrap();
    let rate = |g: u8| {
        let (pos, n) =
            d.y.iter()
                .zip(&d.a)
                .filter(|(_, &a)| a == g)
                .fold((0, 0), |(p, n), (&y, _)| (p + usize::from(y), n + 1));
        pos as f64 / n as f64
    };
    assert!((rate(1) - rate(0)).abs() < 0.03);
}

#[test]
fn biased_generator_couples_attribute_with_label() {
    let d = synthesize(&SyntheticSpec::biased(20_000, 1)).unwrap();
    let rate = |g: u8| {
        let sel: Vec<u8> =
            d.y.iter()
                .zip(&d.a)
                .filter(|(_, &a)| a == g)
                .map(|(&y, _)| y)
                .collect();
        sel.iter().map(|&v| f64::from(v)).sum::<f64>() / sel.len() as f64
    };
    assert!(rate(1) - rate(0) > 0.15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_is_a_partition(n in 2usize..2000, f in 0.05f64..0.95, seed in any::<u64>()) {
        match split_indices(n, f, seed) {
            Ok((train, test)) => {
                let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
                prop_assert_eq!(test.len(), (n as f64 * f - 1e-9).ceil() as usize);
            }
            Err(e) => prop_assert!(matches!(e, Error::EmptySplit(_))),
        }
    }

    #[test]
    fn partition_sizes_follow_ratio(n in 20usize..600, r in 0.05f64..1.0, seed in any::<u64>()) {
        let d = synthesize(&SyntheticSpec::unbiased(n, seed)).unwrap();
        let p = partition_semi_private(&d, r, seed).unwrap();
        prop_assert_eq!(p.clean.len(), (n as f64 * r).round() as usize);
        prop_assert_eq!(p.total(), n);
        let mut idx: Vec<usize> = p.clean_indices.iter().chain(&p.private_indices).copied().collect();
        idx.sort_unstable();
        prop_assert_eq!(idx, (0..n).collect::<Vec<_>>());
    }
}
