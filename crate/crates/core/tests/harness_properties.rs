use std::fs;

use hbsurf::geometry::SurfaceKind;
use hbsurf::harness::{
    convergence_slope, emit, error_metrics, read_report_json, run_experiment, ErrorReport, ErrorRow, ExperimentConfig,
    OutputFormat, TestFunction, REPORT_CSV_HEADER,
};
use proptest::prelude::*;

fn small_report(record_timing: bool) -> ErrorReport {
    let mut config = ExperimentConfig::new(SurfaceKind::Cylinder, TestFunction::F2, vec![0, 2], vec![60, 120, 240]);
    config.record_timing = record_timing;
    run_experiment(&config).unwrap()
}

#[test]
fn json_output_round_trips() {
    let report = small_report(true);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    emit(&report, OutputFormat::from_path(&path), &path).unwrap();
    assert_eq!(read_report_json(fs::File::open(&path).unwrap()).unwrap(), report);
}

#[test]
fn csv_output_has_one_line_per_row() {
    let report = small_report(true);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    emit(&report, OutputFormat::from_path(&path), &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "n,order,mae,rmse,fill,sep,seconds");
    assert_eq!(REPORT_CSV_HEADER.join(","), "n,order,mae,rmse,fill,sep,seconds");
    assert_eq!(lines.count(), 3 * 2);
}

#[test]
fn untimed_runs_are_bit_stable() {
    let dir = tempfile::tempdir().unwrap();
    let bytes = |name: &str| {
        let path = dir.path().join(name);
        emit(&small_report(false), OutputFormat::Json, &path).unwrap();
        fs::read(path).unwrap()
    };
    assert_eq!(bytes("a.json"), bytes("b.json"));
}

fn rows(order: u32, fills: &[f64], rmse: impl Fn(f64) -> f64) -> Vec<ErrorRow> {
    fills
        .iter()
        .enumerate()
        .map(|(i, &fill)| {
            let e = rmse(fill);
            ErrorRow { n: 100 << i, order, mae: 2.0 * e, rmse: e, fill, sep: fill / 3.0, seconds: 0.0, delta: 1.0 }
        })
        .collect()
}

proptest! {
    #[test]
    fn rmse_never_exceeds_mae(r in prop::collection::vec(-1e3..1e3f64, 1..100)) {
        let (mae, rmse) = error_metrics(&r);
        prop_assert!(rmse <= mae);
        prop_assert!(mae <= rmse * (r.len() as f64).sqrt() * (1.0 + 1e-12));
    }

    #[test]
    fn power_laws_are_recovered(
        p in 0.0..6.0f64,
        c in 1e-3..1e3f64,
        fills in prop::collection::vec(1e-3..1.0f64, 4..10),
    ) {
        let spread = fills.iter().cloned().fold(f64::MIN, f64::max) / fills.iter().cloned().fold(f64::MAX, f64::min);
        prop_assume!(spread > 1.5);
        let fit = convergence_slope(&rows(1, &fills, |h| c * h.powf(p)), 1).unwrap();
        prop_assert!((fit.slope - p).abs() < 1e-9);
        prop_assert!(fit.residual < 1e-9);
    }
}
