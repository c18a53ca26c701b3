use lcml_core::ingest::{load_csv, write_csv};
use lcml_core::models::{codec, ClassifierConfig, ForestConfig};
use lcml_core::{Error, LabeledDataset, LightCurve};

fn dataset() -> LabeledDataset {
    let curves = (0..12)
        .map(|i| LightCurve::new(vec![i as f64 * 0.1, 1.0 / (i as f64 + 3.0), -(i as f64)]).unwrap())
        .collect();
    LabeledDataset::new(curves, (0..12).map(|i| u8::from(i % 3 == 0)).collect()).unwrap()
}

#[test]
fn csv_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let ds = dataset();
    write_csv(&ds, &path).unwrap();
    assert_eq!(load_csv(&path).unwrap(), ds);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("LABEL,FLUX.1,FLUX.2,FLUX.3\n2,"));
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = load_csv(dir.path().join("absent.csv")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.is_data_error());
}

#[test]
fn model_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.lcm");
    let ds = dataset();
    let model = ClassifierConfig::RandomForest(ForestConfig { n_trees: 5, ..Default::default() })
        .fit(ds.curves(), ds.labels())
        .unwrap();
    codec::save(&model, &path).unwrap();
    let back = codec::load(&path).unwrap();
    assert_eq!(back, model);
    assert_eq!(back.predict(ds.curves()).unwrap(), model.predict(ds.curves()).unwrap());
}
