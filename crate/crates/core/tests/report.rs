use fedmia_core::attacks::AttackTag;
use fedmia_core::data::{gen_synthetic, SyntheticSpec};
use fedmia_core::federation::{RoundConfig, Strategy};
use fedmia_core::harness::{cross_validate, CvConfig, ResultsRow};
use fedmia_core::nn::Architecture;
use fedmia_core::report::{emit_results, roc_path, write_rows, OutputFormat};

fn report() -> fedmia_core::harness::Report {
    let spec = SyntheticSpec { num_classes: 3, input_dim: 4, samples_per_class: 8, cluster_spread: 0.9 };
    let data = gen_synthetic(&spec, 4).unwrap();
    let cfg = CvConfig {
        round: RoundConfig::new(Strategy::FedAvg, 2, 2, 1),
        arch: Architecture::new(4, vec![6], 5, 3),
        num_splits: 3,
        member_fraction: 0.5,
        attacks: AttackTag::ALL.to_vec(),
        target_fpr: 0.1,
        seed: 1,
        workers: 1,
    };
    cross_validate(&cfg, &data).unwrap()
}

#[test]
fn csv_and_json_carry_identical_values() {
    let report = report();
    let mut csv_bytes = Vec::new();
    write_rows(&report.rows, OutputFormat::Csv, &mut csv_bytes).unwrap();
    let mut json_bytes = Vec::new();
    write_rows(&report.rows, OutputFormat::Json, &mut json_bytes).unwrap();

    let from_json: Vec<ResultsRow> = serde_json::from_slice(&json_bytes).unwrap();
    let mut reader = csv::Reader::from_reader(csv_bytes.as_slice());
    let from_csv: Vec<ResultsRow> = reader.deserialize().collect::<Result<_, _>>().unwrap();
    assert_eq!(from_csv, from_json);
    assert_eq!(from_json, report.rows.iter().map(ResultsRow::rounded).collect::<Vec<_>>());
}

#[test]
fn files_on_disk() {
    let report = report();
    let dir = tempfile::tempdir().unwrap();
    for format in [OutputFormat::Csv, OutputFormat::Json] {
        let path = dir.path().join(format!("results.{format}"));
        emit_results(&report, &path, format).unwrap();
        assert!(path.exists());
        let roc = std::fs::read_to_string(roc_path(&path, format)).unwrap();
        for curve in &report.curves {
            assert!(roc.contains(&curve.strategy));
        }
    }
    let csv_roc = std::fs::read_to_string(dir.path().join("results_roc.csv")).unwrap();
    let points: usize = report.curves.iter().map(|c| c.curve.len()).sum();
    assert_eq!(csv_roc.lines().count(), points + 1);
    assert!(emit_results(&report, &dir.path().join("missing/x.csv"), OutputFormat::Csv).is_err());
}
