use std::path::PathBuf;

use occlusion_meter::eval::{render_markdown, report_band_histogram, BandHistogram};
use occlusion_meter::ingest::{parse_detections, write_reports, ParseOptions, ReportFormat};
use occlusion_meter::{classify_frame, ClassifierConfig, PartClass, VisibilityReport};

fn fixture(name: &str) -> Vec<u8> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/scenarios")
        .join(format!("{name}.json"));
    std::fs::read(path).unwrap()
}

fn classify(name: &str) -> Vec<VisibilityReport> {
    let frame = parse_detections(&fixture(name), ParseOptions::default()).unwrap();
    classify_frame(&frame, &ClassifierConfig::default())
}

fn all() -> Vec<VisibilityReport> {
    "abcdefghi"
        .chars()
        .flat_map(|c| classify(&format!("scenario_{c}")))
        .collect()
}

#[test]
fn partial_wheel_scenarios_split_the_wheel_share() {
    let wheels = |name: &str| {
        classify(name)[0]
            .part_contributions
            .get(PartClass::Wheel)
            .to_vec()
    };
    assert_eq!(wheels("scenario_a"), vec![41.0, 41.0 * 0.7]);
    assert_eq!(wheels("scenario_b"), vec![41.0, 20.5]);
    assert_eq!(wheels("scenario_c"), vec![41.0, 41.0 * 0.4]);
    assert_eq!(wheels("scenario_d"), vec![20.5]);
}

#[test]
fn low_confidence_extra_is_ignored() {
    let r = classify("scenario_g");
    assert_eq!(r.len(), 1);
    assert_eq!(r[0].part_contributions.wheel.len(), 2);
    assert!((r[0].visibility_pct - 87.7).abs() < 1e-9);
}

#[test]
fn polygons_do_not_change_the_estimate() {
    let frame = parse_detections(&fixture("scenario_f"), ParseOptions::default()).unwrap();
    assert!(frame.detections.iter().any(|d| d.polygon.is_some()));
    assert_eq!(classify("scenario_f")[0].visibility_pct, 100.0);
}

#[test]
fn missing_frame_and_handlebar() {
    let h = &classify("scenario_h")[0];
    assert!(h.part_contributions.handlebar.is_empty());
    assert!((h.occlusion_pct - 21.5).abs() < 1e-9);
    let i = &classify("scenario_i")[0];
    assert!(i.part_contributions.frame.is_empty());
    assert_eq!(i.visibility_pct, 42.0);
}

#[test]
fn band_histogram_of_the_scenarios() {
    assert_eq!(report_band_histogram(&all()), BandHistogram([2, 5, 2, 0]));
}

#[test]
fn rendered_table() {
    let md = render_markdown(&all());
    let rows: Vec<&str> = md.lines().skip(2).collect();
    assert_eq!(rows[0], "| scenario_a | 69.7 | 17 | 1 | 87.7 | 12.3 |");
    assert_eq!(rows[3], "| scenario_d | 20.5 | 0 | 0 | 20.5 | 79.5 |");
    assert_eq!(rows[8], "| scenario_i | 41.0 | 0 | 1 | 42.0 | 58.0 |");

    let mut csv = Vec::new();
    write_reports(&all(), ReportFormat::Csv, &mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    assert!(
        csv.contains("\nscenario_e,0,82.0,17.0,1.0,100.0,0.0,low_or_none\n"),
        "{csv}"
    );
}
