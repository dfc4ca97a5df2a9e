//! Reading detector output and writing visibility reports.
//!
//! The canonical input is one JSON document per image:
//!
//! ```json
//! {
//!   "image": {"id": "scene_a", "width": 640, "height": 640},
//!   "predictions": [
//!     {"class": "wheel", "confidence": 0.91, "x": 170, "y": 380, "width": 180, "height": 180,
//!      "points": [{"x": 80, "y": 290}, ...]}
//!   ]
//! }
//! ```
//!
//! Boxes are center-based (`x`, `y` are the box center). Unknown extra fields
//! are ignored.

use std::io::Write;

use log::warn;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::IngestError;
use crate::model::{
    validate_frame, DetectionFrame, PartClass, Point, RawDetection, RawFrame, VisibilityReport,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Drop detections with unknown labels (with a warning) instead of failing.
    pub permissive: bool,
}

#[derive(Debug, Deserialize)]
struct ImageInfo {
    id: String,
    width: u32,
    height: u32,
}

#[derive(Debug, Deserialize)]
struct CenterPrediction {
    class: String,
    confidence: f64,
    x: f64,
    y: f64,
    width: f64,
    height: f64,
    #[serde(default)]
    points: Option<Vec<Point>>,
}

#[derive(Debug, Deserialize)]
struct CornerPrediction {
    class: String,
    confidence: f64,
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
    #[serde(default)]
    points: Option<Vec<Point>>,
}

#[derive(Debug, Deserialize)]
struct Document<P> {
    image: ImageInfo,
    predictions: Vec<P>,
}

fn decode<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, IngestError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        IngestError::Malformed {
            path,
            message: e.into_inner().to_string(),
        }
    })
}

/// Parses a canonical (center-based) detection document.
pub fn parse_detections(
    bytes: &[u8],
    options: ParseOptions,
) -> Result<DetectionFrame, IngestError> {
    let doc: Document<CenterPrediction> = decode(bytes)?;
    let detections = doc
        .predictions
        .into_iter()
        .map(|p| RawDetection {
            label: p.class,
            x_min: p.x - p.width / 2.0,
            y_min: p.y - p.height / 2.0,
            x_max: p.x + p.width / 2.0,
            y_max: p.y + p.height / 2.0,
            polygon: p.points,
            confidence: p.confidence,
        })
        .collect();
    finish(doc.image, detections, options)
}

/// Parses a document whose predictions carry `x_min`/`y_min`/`x_max`/`y_max`.
pub fn parse_corner_detections(
    bytes: &[u8],
    options: ParseOptions,
) -> Result<DetectionFrame, IngestError> {
    let doc: Document<CornerPrediction> = decode(bytes)?;
    let detections = doc
        .predictions
        .into_iter()
        .map(|p| RawDetection {
            label: p.class,
            x_min: p.x_min,
            y_min: p.y_min,
            x_max: p.x_max,
            y_max: p.y_max,
            polygon: p.points,
            confidence: p.confidence,
        })
        .collect();
    finish(doc.image, detections, options)
}

fn finish(
    image: ImageInfo,
    mut detections: Vec<RawDetection>,
    options: ParseOptions,
) -> Result<DetectionFrame, IngestError> {
    if options.permissive {
        let mut index = 0;
        detections.retain(|d| {
            let keep = d.label.parse::<PartClass>().is_ok();
            if !keep {
                warn!(
                    "{}: dropping prediction {index} with unknown label `{}`",
                    image.id, d.label
                );
            }
            index += 1;
            keep
        });
    }
    validate_frame(RawFrame {
        image_id: image.id,
        image_width: image.width,
        image_height: image.height,
        detections,
    })
    .map_err(IngestError::Invalid)
}

/// Output encodings for reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format `{other}`")),
        }
    }
}

pub const CSV_HEADER: [&str; 8] = [
    "image_id",
    "bicycle_index",
    "wheel_pct",
    "frame_pct",
    "handlebar_pct",
    "visibility_pct",
    "occlusion_pct",
    "band",
];

pub(crate) fn pct(v: f64) -> String {
    // Avoid rendering "-0.0".
    let s = format!("{v:.1}");
    if s == "-0.0" {
        "0.0".into()
    } else {
        s
    }
}

/// Writes reports as CSV (one decimal per percentage) or as a JSON array
/// at full precision.
pub fn write_reports<W: Write>(
    reports: &[VisibilityReport],
    format: ReportFormat,
    mut sink: W,
) -> Result<(), IngestError> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(sink);
            w.write_record(CSV_HEADER)?;
            for r in reports {
                let c = &r.part_contributions;
                w.write_record([
                    r.image_id.clone(),
                    r.bicycle_index.to_string(),
                    pct(c.total(PartClass::Wheel)),
                    pct(c.total(PartClass::Frame)),
                    pct(c.total(PartClass::Handlebar)),
                    pct(r.visibility_pct),
                    pct(r.occlusion_pct),
                    r.band.to_string(),
                ])?;
            }
            w.flush()?;
        }
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut sink, reports)?;
            sink.write_all(b"\n")?;
            sink.flush()?;
        }
    }
    Ok(())
}

/// Reads back a JSON report array produced by [`write_reports`].
pub fn read_reports(bytes: &[u8]) -> Result<Vec<VisibilityReport>, IngestError> {
    decode(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::classify_frame;
    use crate::model::{BoundingBox, ClassifierConfig};

    fn doc(predictions: &str) -> String {
        format!(
            r#"{{"image": {{"id": "t", "width": 640, "height": 640}}, "predictions": [{predictions}]}}"#
        )
    }

    #[test]
    fn center_boxes_become_corners() {
        let text = doc(
            r#"{"class": "wheel", "x": 320, "y": 320, "width": 100, "height": 100, "confidence": 0.9}"#,
        );
        let f = parse_detections(text.as_bytes(), ParseOptions::default()).unwrap();
        assert_eq!(
            f.detections[0].bbox,
            BoundingBox::new(270.0, 270.0, 370.0, 370.0).unwrap()
        );
        assert_eq!(f.detections[0].part, PartClass::Wheel);
    }

    #[test]
    fn confidence_is_range_checked() {
        let text = doc(
            r#"{"class": "frame", "x": 320, "y": 320, "width": 100, "height": 100, "confidence": 1.2}"#,
        );
        let err = parse_detections(text.as_bytes(), ParseOptions::default()).unwrap_err();
        assert!(err.to_string().contains("confidence out of range"), "{err}");
    }

    #[test]
    fn missing_fields_name_the_path() {
        let text =
            doc(r#"{"class": "frame", "x": 320, "width": 100, "height": 100, "confidence": 0.8}"#);
        let err = parse_detections(text.as_bytes(), ParseOptions::default()).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("predictions[0]") && msg.contains("missing field `y`"),
            "{msg}"
        );

        let err = parse_detections(
            br#"{"image": {"id": "t", "width": "wide", "height": 3}}"#,
            ParseOptions::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("image.width"), "{err}");
    }

    #[test]
    fn unknown_labels_fail_unless_permissive() {
        let text = doc(concat!(
            r#"{"class": "pedal", "x": 50, "y": 50, "width": 10, "height": 10, "confidence": 0.9},"#,
            r#"{"class": "Wheel", "x": 320, "y": 320, "width": 100, "height": 100, "confidence": 0.9}"#
        ));
        let err = parse_detections(text.as_bytes(), ParseOptions::default()).unwrap_err();
        assert!(err.to_string().contains("unknown part label: pedal"));
        let f = parse_detections(text.as_bytes(), ParseOptions { permissive: true }).unwrap();
        assert_eq!(f.detections.len(), 1);
    }

    #[test]
    fn corner_reader() {
        let text = doc(
            r#"{"class": "handlebar", "x_min": 10, "y_min": 20, "x_max": 30, "y_max": 25, "confidence": 0.6}"#,
        );
        let f = parse_corner_detections(text.as_bytes(), ParseOptions::default()).unwrap();
        assert_eq!(
            f.detections[0].bbox,
            BoundingBox::new(10.0, 20.0, 30.0, 25.0).unwrap()
        );
    }

    fn scenario_a() -> Vec<VisibilityReport> {
        let text = doc(concat!(
            r#"{"class": "wheel", "x": 150, "y": 400, "width": 180, "height": 180, "confidence": 0.9},"#,
            r#"{"class": "wheel", "x": 420, "y": 400, "width": 126, "height": 180, "confidence": 0.88},"#,
            r#"{"class": "frame", "x": 290, "y": 330, "width": 200, "height": 150, "confidence": 0.8},"#,
            r#"{"class": "handlebar", "x": 380, "y": 230, "width": 50, "height": 30, "confidence": 0.6}"#
        ));
        let f = parse_detections(text.as_bytes(), ParseOptions::default()).unwrap();
        classify_frame(&f, &ClassifierConfig::default())
    }

    #[test]
    fn csv_rows_use_one_decimal() {
        let mut out = Vec::new();
        write_reports(&scenario_a(), ReportFormat::Csv, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert_eq!(lines[1], "t,0,69.7,17.0,1.0,87.7,12.3,partial");
    }

    #[test]
    fn empty_csv_is_header_only() {
        let mut out = Vec::new();
        write_reports(&[], ReportFormat::Csv, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            format!("{}\n", CSV_HEADER.join(","))
        );
    }

    #[test]
    fn csv_quotes_awkward_ids() {
        let mut reports = scenario_a();
        reports[0].image_id = "a,\"b\"".into();
        let mut out = Vec::new();
        write_reports(&reports, ReportFormat::Csv, &mut out).unwrap();
        assert!(String::from_utf8(out)
            .unwrap()
            .contains("\"a,\"\"b\"\"\",0,"));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let reports = scenario_a();
        let mut out = Vec::new();
        write_reports(&reports, ReportFormat::Json, &mut out).unwrap();
        let back = read_reports(&out).unwrap();
        assert_eq!(back, reports);
        let mut again = Vec::new();
        write_reports(&back, ReportFormat::Json, &mut again).unwrap();
        assert_eq!(again, out);
    }
}
