use std::path::Path;

use epsim::data::{generate_synthetic, ingest, write_dataset, Manifest, SyntheticSpec};
use epsim::Error;

fn written(days: usize, seed: u64) -> (tempfile::TempDir, epsim::data::Dataset) {
    let spec = SyntheticSpec::reference(seed).unwrap();
    let ds = generate_synthetic(&spec, days).unwrap().dataset;
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&ds, dir.path()).unwrap();
    (dir, ds)
}

fn edit(path: &Path, f: impl FnOnce(Vec<String>) -> Vec<String>) {
    let text = std::fs::read_to_string(path).unwrap();
    let lines = f(text.lines().map(str::to_string).collect());
    std::fs::write(path, lines.join("\n") + "\n").unwrap();
}

#[test]
fn synthetic_dataset_round_trips_through_files() {
    let (dir, ds) = written(45, 3);
    let back = ingest(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(back.n_days(), 45);
    assert_eq!(back, ds);
}

#[test]
fn two_year_fixture_spans_730_days() {
    let (dir, _) = written(730, 4);
    assert_eq!(ingest(&dir.path().join("manifest.json")).unwrap().n_days(), 730);
}

#[test]
fn three_hour_gap_is_rejected_with_its_timestamps() {
    let (dir, _) = written(10, 5);
    // rows 1.. are hours; drop hours 100..103
    edit(&dir.path().join("load.csv"), |mut l| {
        l.drain(101..104);
        l
    });
    match ingest(&dir.path().join("manifest.json")) {
        Err(Error::Gap { series, after, before }) => {
            assert_eq!(series, "load");
            assert!(after.starts_with("2014-01-10T03:00:00"), "{after}");
            assert!(before.starts_with("2014-01-10T07:00:00"), "{before}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn duplicate_planned_row_is_rejected_with_its_line() {
    let (dir, _) = written(5, 6);
    edit(&dir.path().join("planned.csv"), |mut l| {
        let row = l[7].clone();
        l.insert(8, row);
        l
    });
    match ingest(&dir.path().join("manifest.json")) {
        Err(Error::Duplicate { file, row, key }) => {
            assert!(file.ends_with("planned.csv"));
            assert_eq!(row, 9);
            assert!(key.contains("2014-01-06"), "{key}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn wrong_header_is_a_schema_error() {
    let (dir, _) = written(5, 7);
    edit(&dir.path().join("wind.csv"), |mut l| {
        l[0] = "time,value".into();
        l
    });
    assert!(matches!(ingest(&dir.path().join("manifest.json")), Err(Error::Schema { file, .. }) if file.ends_with("wind.csv")));
}

#[test]
fn unit_mismatch_names_the_series() {
    let (dir, _) = written(5, 8);
    let path = dir.path().join("manifest.json");
    let mut m = Manifest::load(&path).unwrap();
    m.planned.series[0].unit = "GWh".into();
    m.save(&path).unwrap();
    match ingest(&path) {
        Err(Error::UnitMismatch { series, expected, found }) => {
            assert_eq!(series, m.planned.series[0].name);
            assert_eq!((expected.as_str(), found.as_str()), ("MWh", "GWh"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn span_longer_than_the_files_is_rejected() {
    let (dir, _) = written(5, 9);
    let path = dir.path().join("manifest.json");
    let mut m = Manifest::load(&path).unwrap();
    m.span.days = 6;
    m.save(&path).unwrap();
    assert!(ingest(&path).is_err());
}

#[test]
fn zero_noise_persistence_is_constant() {
    let spec = SyntheticSpec::persistence(1, 250.0).unwrap();
    let ds = generate_synthetic(&spec, 20).unwrap().dataset;
    assert!(ds.physical[0].values.iter().all(|&v| v == 250.0));
    for p in &ds.planned {
        assert!(p.to_day_major().iter().all(|&v| v == 250.0));
    }
    let prices = ds.prices.unwrap();
    assert!(prices.iter().all(|&p| p == prices[0]));
}

#[test]
fn generation_is_deterministic_per_seed() {
    let a = generate_synthetic(&SyntheticSpec::reference(11).unwrap(), 20).unwrap().dataset;
    let b = generate_synthetic(&SyntheticSpec::reference(11).unwrap(), 20).unwrap().dataset;
    let c = generate_synthetic(&SyntheticSpec::reference(12).unwrap(), 20).unwrap().dataset;
    assert_eq!(a, b);
    assert_ne!(a.prices, c.prices);
}

#[test]
fn explosive_spec_warns_but_generates() {
    let mut spec = SyntheticSpec::reference(2).unwrap();
    spec.burn_in_days = 0;
    spec.equations[0].lags[0].coef = 1.05;
    let m = generate_synthetic(&spec, 3).unwrap();
    assert!(!m.warnings.is_empty());
    assert_eq!(m.dataset.n_days(), 3);
}
