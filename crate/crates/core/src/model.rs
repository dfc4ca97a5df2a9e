//! Domain types shared by every stage of the pipeline.
//!
//! Everything here is plain data plus constructors that establish the
//! invariants. No I/O happens in this module and no raster data is ever held.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, FrameError};

/// Tolerance for invariants that are sums of user-supplied reals.
const SUM_EPS: f64 = 1e-9;

/// Maximum disagreement between a polygon's extent and its bounding box.
pub const POLYGON_BBOX_TOLERANCE: f64 = 0.5;

/// The detectable semantic parts of a bicycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartClass {
    Wheel,
    Frame,
    Handlebar,
}

impl PartClass {
    pub const ALL: [PartClass; 3] = [PartClass::Wheel, PartClass::Frame, PartClass::Handlebar];

    pub fn as_str(self) -> &'static str {
        match self {
            PartClass::Wheel => "wheel",
            PartClass::Frame => "frame",
            PartClass::Handlebar => "handlebar",
        }
    }

    /// How many parts of this class a single bicycle can carry.
    pub fn max_per_bicycle(self) -> usize {
        match self {
            PartClass::Wheel => 2,
            PartClass::Frame | PartClass::Handlebar => 1,
        }
    }
}

impl fmt::Display for PartClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Labels are case-folded before matching; anything else is rejected.
impl FromStr for PartClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "wheel" => Ok(PartClass::Wheel),
            "frame" => Ok(PartClass::Frame),
            "handlebar" => Ok(PartClass::Handlebar),
            _ => Err(s.to_string()),
        }
    }
}

/// A 2D point in pixel or metric coordinates depending on context.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Corner-based axis-aligned box in image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BoundingBox {
    /// Builds a box, rejecting non-positive extents and non-finite coordinates.
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Option<Self> {
        let finite = [x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite());
        (finite && x_max > x_min && y_max > y_min).then_some(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    /// Converts a center-based box (as emitted by most detectors) to corners.
    pub fn from_center(cx: f64, cy: f64, width: f64, height: f64) -> Option<Self> {
        Self::new(
            cx - width / 2.0,
            cy - height / 2.0,
            cx + width / 2.0,
            cy + height / 2.0,
        )
    }

    /// Tight box around a point set; `None` when the extent is degenerate.
    pub fn enclosing(points: &[Point]) -> Option<Self> {
        let first = points.first()?;
        let mut b = (first.x, first.y, first.x, first.y);
        for p in &points[1..] {
            b.0 = b.0.min(p.x);
            b.1 = b.1.min(p.y);
            b.2 = b.2.max(p.x);
            b.3 = b.3.max(p.y);
        }
        Self::new(b.0, b.1, b.2, b.3)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    /// `min(w, h) / max(w, h)`, always in `(0, 1]`.
    pub fn aspect_ratio(&self) -> f64 {
        let (w, h) = (self.width(), self.height());
        w.min(h) / w.max(h)
    }

    /// Euclidean distance between the two boxes; zero when they touch or overlap.
    pub fn gap(&self, other: &BoundingBox) -> f64 {
        let dx = (other.x_min - self.x_max)
            .max(self.x_min - other.x_max)
            .max(0.0);
        let dy = (other.y_min - self.y_max)
            .max(self.y_min - other.y_max)
            .max(0.0);
        dx.hypot(dy)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            x_min: self.x_min * s,
            y_min: self.y_min * s,
            x_max: self.x_max * s,
            y_max: self.y_max * s,
        }
    }
}

/// One detected bicycle part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartDetection {
    pub part: PartClass,
    pub bbox: BoundingBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polygon: Option<Vec<Point>>,
    pub confidence: f64,
}

impl PartDetection {
    pub fn new(part: PartClass, bbox: BoundingBox, confidence: f64) -> Self {
        Self {
            part,
            bbox,
            polygon: None,
            confidence,
        }
    }
}

/// All detections reported for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionFrame {
    pub image_id: String,
    pub image_width: u32,
    pub image_height: u32,
    pub detections: Vec<PartDetection>,
}

/// A detection before its label and geometry have been checked.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDetection {
    pub label: String,
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub polygon: Option<Vec<Point>>,
    pub confidence: f64,
}

/// An unvalidated frame, as read from a detector output document.
#[derive(Debug, Clone, PartialEq)]
pub struct RawFrame {
    pub image_id: String,
    pub image_width: u32,
    pub image_height: u32,
    pub detections: Vec<RawDetection>,
}

impl From<&DetectionFrame> for RawFrame {
    fn from(frame: &DetectionFrame) -> Self {
        RawFrame {
            image_id: frame.image_id.clone(),
            image_width: frame.image_width,
            image_height: frame.image_height,
            detections: frame
                .detections
                .iter()
                .map(|d| RawDetection {
                    label: d.part.as_str().to_string(),
                    x_min: d.bbox.x_min,
                    y_min: d.bbox.y_min,
                    x_max: d.bbox.x_max,
                    y_max: d.bbox.y_max,
                    polygon: d.polygon.clone(),
                    confidence: d.confidence,
                })
                .collect(),
        }
    }
}

/// Checks every detection of `frame` and clamps boxes to the image.
///
/// All problems are collected rather than stopping at the first one.
pub fn validate_frame(frame: RawFrame) -> Result<DetectionFrame, Vec<FrameError>> {
    let mut errors = Vec::new();
    if frame.image_width == 0 || frame.image_height == 0 {
        errors.push(FrameError::EmptyImage {
            width: frame.image_width,
            height: frame.image_height,
        });
        return Err(errors);
    }
    let (w, h) = (frame.image_width as f64, frame.image_height as f64);
    let mut detections = Vec::with_capacity(frame.detections.len());

    for (index, raw) in frame.detections.into_iter().enumerate() {
        let part = match raw.label.parse::<PartClass>() {
            Ok(p) => Some(p),
            Err(label) => {
                errors.push(FrameError::UnknownLabel { index, label });
                None
            }
        };
        if !(0.0..=1.0).contains(&raw.confidence) {
            errors.push(FrameError::ConfidenceOutOfRange {
                index,
                value: raw.confidence,
            });
        }
        let coords = [raw.x_min, raw.y_min, raw.x_max, raw.y_max];
        if coords.iter().any(|c| !c.is_finite()) {
            errors.push(FrameError::NonFinite { index });
            continue;
        }
        let x_min = raw.x_min.clamp(0.0, w);
        let x_max = raw.x_max.clamp(0.0, w);
        let y_min = raw.y_min.clamp(0.0, h);
        let y_max = raw.y_max.clamp(0.0, h);
        if x_max <= x_min {
            errors.push(FrameError::ZeroWidth { index });
        }
        if y_max <= y_min {
            errors.push(FrameError::ZeroHeight { index });
        }
        let Some(bbox) = BoundingBox::new(x_min, y_min, x_max, y_max) else {
            continue;
        };

        let polygon = match raw.polygon {
            Some(points) => match check_polygon(index, points, &bbox, w, h) {
                Ok(points) => Some(points),
                Err(e) => {
                    errors.push(e);
                    continue;
                }
            },
            None => None,
        };

        if let Some(part) = part {
            detections.push(PartDetection {
                part,
                bbox,
                polygon,
                confidence: raw.confidence,
            });
        }
    }

    if errors.is_empty() {
        Ok(DetectionFrame {
            image_id: frame.image_id,
            image_width: frame.image_width,
            image_height: frame.image_height,
            detections,
        })
    } else {
        Err(errors)
    }
}

fn check_polygon(
    index: usize,
    points: Vec<Point>,
    bbox: &BoundingBox,
    w: f64,
    h: f64,
) -> Result<Vec<Point>, FrameError> {
    if points.len() < 3 {
        return Err(FrameError::PolygonTooSmall {
            index,
            vertices: points.len(),
        });
    }
    let clamped: Vec<Point> = points
        .into_iter()
        .map(|p| Point::new(p.x.clamp(0.0, w), p.y.clamp(0.0, h)))
        .collect();
    let extent = BoundingBox::enclosing(&clamped).ok_or(FrameError::PolygonMismatch { index })?;
    let deltas = [
        extent.x_min - bbox.x_min,
        extent.y_min - bbox.y_min,
        extent.x_max - bbox.x_max,
        extent.y_max - bbox.y_max,
    ];
    if deltas.iter().any(|d| d.abs() > POLYGON_BBOX_TOLERANCE) {
        return Err(FrameError::PolygonMismatch { index });
    }
    Ok(clamped)
}

/// Reference surface areas of a bicycle and the percentage share of each part.
///
/// The percentage shares drive classification. The cm² figures are kept for
/// documentation and alternative models; the default shares are the cm²
/// ratios rounded to whole percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurfaceAreaModel {
    pub wheel_area_cm2: f64,
    pub frame_area_cm2: f64,
    pub handlebar_area_cm2: f64,
    pub total_area_cm2: f64,
    pub wheel_share_pct: f64,
    pub frame_share_pct: f64,
    pub handlebar_share_pct: f64,
}

impl Default for SurfaceAreaModel {
    fn default() -> Self {
        Self {
            wheel_area_cm2: 3400.0,
            frame_area_cm2: 1454.0,
            handlebar_area_cm2: 110.0,
            total_area_cm2: 8364.0,
            wheel_share_pct: 41.0,
            frame_share_pct: 17.0,
            handlebar_share_pct: 1.0,
        }
    }
}

impl SurfaceAreaModel {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let parts = [
            self.wheel_area_cm2,
            self.frame_area_cm2,
            self.handlebar_area_cm2,
            self.wheel_share_pct,
            self.frame_share_pct,
            self.handlebar_share_pct,
        ];
        if parts.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(ConfigError::NegativeArea);
        }
        let total = 2.0 * self.wheel_area_cm2 + self.frame_area_cm2 + self.handlebar_area_cm2;
        if (total - self.total_area_cm2).abs() > SUM_EPS * total.max(1.0) {
            return Err(ConfigError::AreaTotal {
                expected: total,
                found: self.total_area_cm2,
            });
        }
        let shares = self.share_sum();
        if (shares - 100.0).abs() > SUM_EPS {
            return Err(ConfigError::ShareSum(shares));
        }
        Ok(())
    }

    pub fn share_sum(&self) -> f64 {
        2.0 * self.wheel_share_pct + self.frame_share_pct + self.handlebar_share_pct
    }

    pub fn share_pct(&self, part: PartClass) -> f64 {
        match part {
            PartClass::Wheel => self.wheel_share_pct,
            PartClass::Frame => self.frame_share_pct,
            PartClass::Handlebar => self.handlebar_share_pct,
        }
    }

    pub fn area_cm2(&self, part: PartClass) -> f64 {
        match part {
            PartClass::Wheel => self.wheel_area_cm2,
            PartClass::Frame => self.frame_area_cm2,
            PartClass::Handlebar => self.handlebar_area_cm2,
        }
    }
}

/// Categorical occlusion level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OcclusionBand {
    LowOrNone,
    Partial,
    Heavy,
    Severe,
}

impl OcclusionBand {
    pub const ALL: [OcclusionBand; 4] = [
        OcclusionBand::LowOrNone,
        OcclusionBand::Partial,
        OcclusionBand::Heavy,
        OcclusionBand::Severe,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OcclusionBand::LowOrNone => "low_or_none",
            OcclusionBand::Partial => "partial",
            OcclusionBand::Heavy => "heavy",
            OcclusionBand::Severe => "severe",
        }
    }
}

impl fmt::Display for OcclusionBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OcclusionBand {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OcclusionBand::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| s.to_string())
    }
}

/// Percent contributed by each detected part of one bicycle.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PartContributions {
    pub wheel: Vec<f64>,
    pub frame: Vec<f64>,
    pub handlebar: Vec<f64>,
}

impl PartContributions {
    pub fn get(&self, part: PartClass) -> &[f64] {
        match part {
            PartClass::Wheel => &self.wheel,
            PartClass::Frame => &self.frame,
            PartClass::Handlebar => &self.handlebar,
        }
    }

    pub fn push(&mut self, part: PartClass, pct: f64) {
        match part {
            PartClass::Wheel => self.wheel.push(pct),
            PartClass::Frame => self.frame.push(pct),
            PartClass::Handlebar => self.handlebar.push(pct),
        }
    }

    /// Zero (not `-0.0`) when the part is absent.
    pub fn total(&self, part: PartClass) -> f64 {
        self.get(part).iter().fold(0.0, |a, v| a + v)
    }

    pub fn sum(&self) -> f64 {
        PartClass::ALL.iter().fold(0.0, |a, p| a + self.total(*p))
    }
}

/// Visibility and occlusion of one bicycle instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityReport {
    pub image_id: String,
    pub bicycle_index: usize,
    pub part_contributions: PartContributions,
    pub visibility_pct: f64,
    pub occlusion_pct: f64,
    pub band: OcclusionBand,
}

/// One step of the wheel aspect-ratio rule: ratios at or above
/// `ratio_threshold` map to `fraction` of a full wheel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WheelStep {
    pub ratio_threshold: f64,
    pub fraction: f64,
}

impl WheelStep {
    pub const fn new(ratio_threshold: f64, fraction: f64) -> Self {
        Self {
            ratio_threshold,
            fraction,
        }
    }
}

/// Fractions the aspect-ratio rule can assign to a detected wheel.
pub const WHEEL_FRACTIONS: [f64; 4] = [1.0, 0.7, 0.5, 0.4];

/// Tunable parameters of the classifier and the synthetic detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub confidence_threshold: f64,
    /// Descending thresholds; the last one is 0.0 so every ratio maps somewhere.
    pub wheel_fractions: Vec<WheelStep>,
    /// Only used by the simulated detector.
    pub detectability_floor: f64,
    pub grouping_distance_factor: f64,
    pub area_model: SurfaceAreaModel,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            confidence_threshold: 0.5,
            wheel_fractions: vec![
                WheelStep::new(0.85, 1.0),
                WheelStep::new(0.60, 0.7),
                WheelStep::new(0.45, 0.5),
                WheelStep::new(0.0, 0.4),
            ],
            detectability_floor: 0.10,
            grouping_distance_factor: 1.5,
            area_model: SurfaceAreaModel::default(),
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.confidence_threshold) {
            return Err(ConfigError::ConfidenceThreshold(self.confidence_threshold));
        }
        if !(self.grouping_distance_factor.is_finite() && self.grouping_distance_factor >= 0.0) {
            return Err(ConfigError::GroupingFactor(self.grouping_distance_factor));
        }
        if !(0.0..=1.0).contains(&self.detectability_floor) {
            return Err(ConfigError::DetectabilityFloor(self.detectability_floor));
        }
        let steps = &self.wheel_fractions;
        let (first, last) = match (steps.first(), steps.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(ConfigError::NoWheelSteps),
        };
        if first.fraction != 1.0 {
            return Err(ConfigError::FirstFraction(first.fraction));
        }
        if last.ratio_threshold != 0.0 {
            return Err(ConfigError::LastThreshold(last.ratio_threshold));
        }
        for s in steps {
            if !(s.fraction > 0.0 && s.fraction <= 1.0) {
                return Err(ConfigError::FractionRange(s.fraction));
            }
            if !(0.0..=1.0).contains(&s.ratio_threshold) {
                return Err(ConfigError::ThresholdRange(s.ratio_threshold));
            }
        }
        for pair in steps.windows(2) {
            if pair[1].ratio_threshold >= pair[0].ratio_threshold
                || pair[1].fraction >= pair[0].fraction
            {
                return Err(ConfigError::NotDecreasing);
            }
        }
        self.area_model.validate()
    }

    /// Ratio thresholds excluding the trailing 0.0 catch-all.
    pub fn ratio_thresholds(&self) -> Vec<f64> {
        let n = self.wheel_fractions.len().saturating_sub(1);
        self.wheel_fractions[..n]
            .iter()
            .map(|s| s.ratio_threshold)
            .collect()
    }

    /// Default steps with the three upper thresholds replaced.
    pub fn with_thresholds(&self, thresholds: [f64; 3]) -> Self {
        let mut cfg = self.clone();
        cfg.wheel_fractions = thresholds
            .iter()
            .chain(std::iter::once(&0.0))
            .zip(WHEEL_FRACTIONS)
            .map(|(t, f)| WheelStep::new(*t, f))
            .collect();
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(label: &str, b: [f64; 4]) -> RawDetection {
        RawDetection {
            label: label.into(),
            x_min: b[0],
            y_min: b[1],
            x_max: b[2],
            y_max: b[3],
            polygon: None,
            confidence: 0.9,
        }
    }

    fn frame(detections: Vec<RawDetection>) -> RawFrame {
        RawFrame {
            image_id: "img".into(),
            image_width: 640,
            image_height: 640,
            detections,
        }
    }

    #[test]
    fn unknown_label_is_rejected_by_name() {
        let errs = validate_frame(frame(vec![raw("pedal", [0.0, 0.0, 5.0, 5.0])])).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].to_string(), "unknown part label: pedal");
    }

    #[test]
    fn zero_width_box_is_rejected_with_index() {
        let errs = validate_frame(frame(vec![raw("wheel", [10.0, 10.0, 10.0, 20.0])])).unwrap_err();
        assert_eq!(errs[0].to_string(), "zero-width bbox at index 0");
    }

    #[test]
    fn valid_frame_is_returned_unchanged() {
        let input = frame(vec![
            raw("wheel", [10.0, 300.0, 200.0, 490.0]),
            raw("Frame", [150.0, 200.0, 400.0, 400.0]),
            raw("HANDLEBAR", [380.0, 150.0, 430.0, 180.0]),
        ]);
        let out = validate_frame(input.clone()).unwrap();
        let back = RawFrame::from(&out);
        assert_eq!(back.detections.len(), 3);
        for (a, b) in back.detections.iter().zip(&input.detections) {
            assert_eq!(a.label, b.label.to_lowercase());
            assert_eq!(
                [a.x_min, a.y_min, a.x_max, a.y_max],
                [b.x_min, b.y_min, b.x_max, b.y_max]
            );
        }
        let again = validate_frame(back).unwrap();
        assert_eq!(again, out);
    }

    #[test]
    fn boxes_are_clamped_to_the_image() {
        let out = validate_frame(frame(vec![raw("wheel", [-20.0, 600.0, 100.0, 700.0])])).unwrap();
        let b = out.detections[0].bbox;
        assert_eq!(
            [b.x_min, b.y_min, b.x_max, b.y_max],
            [0.0, 600.0, 100.0, 640.0]
        );
    }

    #[test]
    fn all_errors_are_collected() {
        let mut bad = raw("wheel", [0.0, 0.0, 5.0, 5.0]);
        bad.confidence = 1.2;
        let errs = validate_frame(frame(vec![
            raw("seat", [0.0, 0.0, 5.0, 5.0]),
            bad,
            raw("frame", [0.0, 9.0, 5.0, 9.0]),
        ]))
        .unwrap_err();
        let msgs: Vec<String> = errs.iter().map(|e| e.to_string()).collect();
        assert_eq!(
            msgs,
            [
                "unknown part label: seat",
                "confidence out of range at index 1: 1.2",
                "zero-height bbox at index 2",
            ]
        );
    }

    #[test]
    fn polygon_must_match_its_box() {
        let mut d = raw("frame", [10.0, 10.0, 50.0, 40.0]);
        d.polygon = Some(vec![
            Point::new(10.0, 10.0),
            Point::new(50.2, 10.0),
            Point::new(30.0, 40.3),
        ]);
        assert!(validate_frame(frame(vec![d.clone()])).is_ok());

        d.polygon = Some(vec![
            Point::new(10.0, 10.0),
            Point::new(40.0, 10.0),
            Point::new(30.0, 40.0),
        ]);
        let errs = validate_frame(frame(vec![d.clone()])).unwrap_err();
        assert!(matches!(errs[0], FrameError::PolygonMismatch { index: 0 }));

        d.polygon = Some(vec![Point::new(10.0, 10.0), Point::new(50.0, 40.0)]);
        let errs = validate_frame(frame(vec![d])).unwrap_err();
        assert!(matches!(
            errs[0],
            FrameError::PolygonTooSmall { vertices: 2, .. }
        ));
    }

    #[test]
    fn default_area_model_is_consistent() {
        let m = SurfaceAreaModel::default();
        m.validate().unwrap();
        assert_eq!(m.share_sum(), 100.0);
        assert_eq!(
            2.0 * m.wheel_area_cm2 + m.frame_area_cm2 + m.handlebar_area_cm2,
            8364.0
        );
        // Rounded shares stay within half a percent of the cm² ratios.
        for part in PartClass::ALL {
            let exact = 100.0 * m.area_cm2(part) / m.total_area_cm2;
            assert!((exact - m.share_pct(part)).abs() < 0.5, "{part}: {exact}");
        }
    }

    #[test]
    fn area_model_rejects_bad_totals() {
        let m = SurfaceAreaModel {
            total_area_cm2: 8000.0,
            ..Default::default()
        };
        assert!(matches!(m.validate(), Err(ConfigError::AreaTotal { .. })));
        let m = SurfaceAreaModel {
            frame_share_pct: 18.0,
            ..Default::default()
        };
        assert!(matches!(m.validate(), Err(ConfigError::ShareSum(_))));
    }

    #[test]
    fn default_config_is_valid_and_total() {
        let cfg = ClassifierConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.ratio_thresholds(), vec![0.85, 0.60, 0.45]);
        let fr: Vec<f64> = cfg.wheel_fractions.iter().map(|s| s.fraction).collect();
        assert_eq!(fr, WHEEL_FRACTIONS);
    }

    #[test]
    fn config_rejects_non_total_or_unordered_steps() {
        let mut cfg = ClassifierConfig::default();
        cfg.wheel_fractions.last_mut().unwrap().ratio_threshold = 0.1;
        assert!(matches!(cfg.validate(), Err(ConfigError::LastThreshold(_))));

        let cfg = ClassifierConfig::default().with_thresholds([0.6, 0.85, 0.45]);
        assert!(matches!(cfg.validate(), Err(ConfigError::NotDecreasing)));

        let mut cfg = ClassifierConfig::default();
        cfg.wheel_fractions[0].fraction = 0.9;
        assert!(matches!(cfg.validate(), Err(ConfigError::FirstFraction(_))));
    }

    #[test]
    fn bbox_geometry() {
        let a = BoundingBox::new(0.0, 0.0, 100.0, 50.0).unwrap();
        assert_eq!(a.aspect_ratio(), 0.5);
        let b = BoundingBox::new(103.0, 54.0, 110.0, 60.0).unwrap();
        assert_eq!(a.gap(&b), 5.0);
        assert_eq!(b.gap(&a), 5.0);
        let c = BoundingBox::new(50.0, 10.0, 60.0, 20.0).unwrap();
        assert_eq!(a.gap(&c), 0.0);
        assert!(BoundingBox::new(1.0, 1.0, 1.0, 2.0).is_none());
        assert_eq!(
            BoundingBox::from_center(320.0, 320.0, 100.0, 100.0).unwrap(),
            BoundingBox::new(270.0, 270.0, 370.0, 370.0).unwrap()
        );
    }

    #[test]
    fn labels_are_case_folded() {
        assert_eq!(" Wheel ".parse::<PartClass>(), Ok(PartClass::Wheel));
        assert_eq!("HandleBar".parse::<PartClass>(), Ok(PartClass::Handlebar));
        assert_eq!("bike".parse::<PartClass>(), Err("bike".to_string()));
    }
}
