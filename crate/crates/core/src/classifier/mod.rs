//! Turns part detections into per-bicycle visibility and occlusion.
//!
//! Each detected part adds its share of the bicycle's surface area. Frames
//! and handlebars count in full. A wheel counts in proportion to the aspect
//! ratio of its box, because a wheel that is turned or partly hidden
//! produces a box narrower than a square. Occlusion is whatever
//! visibility leaves of 100%.

mod calibrate;

pub use calibrate::{calibrate_ratios, calibrate_thresholds, Calibration};

use serde::{Deserialize, Serialize};

use crate::error::ClassifyError;
use crate::model::{
    BoundingBox, ClassifierConfig, DetectionFrame, OcclusionBand, PartClass, PartContributions,
    PartDetection, VisibilityReport,
};

/// Fraction of a full wheel implied by a wheel box's aspect ratio.
///
/// Thresholds are scanned from the top; the first one at or below the ratio
/// wins. A valid config always ends in a 0.0 threshold, so this is total.
pub fn wheel_visibility_fraction(bbox: &BoundingBox, config: &ClassifierConfig) -> f64 {
    fraction_for_ratio(bbox.aspect_ratio(), config)
}

pub(crate) fn fraction_for_ratio(ratio: f64, config: &ClassifierConfig) -> f64 {
    config
        .wheel_fractions
        .iter()
        .find(|s| s.ratio_threshold <= ratio)
        .or(config.wheel_fractions.last())
        .map_or(0.0, |s| s.fraction)
}

/// Percent of the bicycle's surface this one detection accounts for.
pub fn part_visibility(det: &PartDetection, config: &ClassifierConfig) -> f64 {
    let share = config.area_model.share_pct(det.part);
    match det.part {
        PartClass::Wheel => share * wheel_visibility_fraction(&det.bbox, config),
        PartClass::Frame | PartClass::Handlebar => share,
    }
}

/// Parts believed to belong to one bicycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartGroup {
    pub bicycle_index: usize,
    /// Indices into the frame's detection list, ascending.
    pub detection_indices: Vec<usize>,
    pub parts: Vec<PartDetection>,
}

impl PartGroup {
    pub fn count(&self, part: PartClass) -> usize {
        self.parts.iter().filter(|d| d.part == part).count()
    }
}

/// Clusters a frame's detections into bicycle instances.
///
/// Two parts are linked when the gap between their boxes is at most
/// `grouping_distance_factor` times the largest wheel diagonal in the frame
/// (only touching boxes link when no wheel was detected); clusters are the
/// connected components. Each cluster then keeps at most two wheels, one
/// frame and one handlebar, preferring higher confidence, then larger box,
/// then earlier detection.
///
/// This rule is a heuristic for multi-bicycle images and is not part of the
/// evaluated single-bicycle method.
pub fn group_parts(frame: &DetectionFrame, config: &ClassifierConfig) -> Vec<PartGroup> {
    let dets = &frame.detections;
    if dets.is_empty() {
        return Vec::new();
    }
    let wheel_diag = dets
        .iter()
        .filter(|d| d.part == PartClass::Wheel)
        .map(|d| d.bbox.diagonal())
        .fold(0.0, f64::max);
    let link = config.grouping_distance_factor * wheel_diag;

    let mut parent: Vec<usize> = (0..dets.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..dets.len() {
        for j in i + 1..dets.len() {
            if dets[i].bbox.gap(&dets[j].bbox) <= link {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                // Root is always the smallest index in the component.
                parent[a.max(b)] = a.min(b);
            }
        }
    }

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; dets.len()];
    for i in 0..dets.len() {
        let r = find(&mut parent, i);
        if root_slot[r] == usize::MAX {
            root_slot[r] = clusters.len();
            clusters.push(Vec::new());
        }
        clusters[root_slot[r]].push(i);
    }

    clusters
        .into_iter()
        .enumerate()
        .map(|(bicycle_index, members)| {
            let mut kept = Vec::new();
            for class in PartClass::ALL {
                let mut of_class: Vec<usize> = members
                    .iter()
                    .copied()
                    .filter(|&i| dets[i].part == class)
                    .collect();
                of_class.sort_by(|&a, &b| {
                    let (da, db) = (&dets[a], &dets[b]);
                    db.confidence
                        .total_cmp(&da.confidence)
                        .then(db.bbox.area().total_cmp(&da.bbox.area()))
                        .then(a.cmp(&b))
                });
                kept.extend(of_class.into_iter().take(class.max_per_bicycle()));
            }
            kept.sort_unstable();
            PartGroup {
                bicycle_index,
                parts: kept.iter().map(|&i| dets[i].clone()).collect(),
                detection_indices: kept,
            }
        })
        .collect()
}

/// Sums part visibilities of one bicycle and derives its occlusion.
///
/// Parts that were not detected contribute nothing, so an empty group is
/// fully occluded.
pub fn classify_bicycle(
    image_id: &str,
    group: &PartGroup,
    config: &ClassifierConfig,
) -> VisibilityReport {
    let mut contributions = PartContributions::default();
    for det in &group.parts {
        contributions.push(det.part, part_visibility(det, config));
    }
    let visibility_pct = contributions.sum().clamp(0.0, 100.0);
    let occlusion_pct = 100.0 - visibility_pct;
    VisibilityReport {
        image_id: image_id.to_string(),
        bicycle_index: group.bicycle_index,
        part_contributions: contributions,
        visibility_pct,
        occlusion_pct,
        band: band_for(occlusion_pct),
    }
}

/// Maps an occlusion percentage onto its band.
///
/// `[0, 10)` low or none, `[10, 40)` partial, `[40, 80]` heavy, `(80, 100]`
/// severe.
pub fn occlusion_band(occlusion_pct: f64) -> Result<OcclusionBand, ClassifyError> {
    if !(0.0..=100.0).contains(&occlusion_pct) {
        return Err(ClassifyError::OcclusionOutOfRange(occlusion_pct));
    }
    Ok(band_for(occlusion_pct))
}

fn band_for(occlusion_pct: f64) -> OcclusionBand {
    if occlusion_pct < 10.0 {
        OcclusionBand::LowOrNone
    } else if occlusion_pct < 40.0 {
        OcclusionBand::Partial
    } else if occlusion_pct <= 80.0 {
        OcclusionBand::Heavy
    } else {
        OcclusionBand::Severe
    }
}

/// Full pipeline for one image: confidence filter, grouping, per-bicycle
/// classification. Reports come back most visible first.
pub fn classify_frame(frame: &DetectionFrame, config: &ClassifierConfig) -> Vec<VisibilityReport> {
    let kept = DetectionFrame {
        detections: frame
            .detections
            .iter()
            .filter(|d| d.confidence >= config.confidence_threshold)
            .cloned()
            .collect(),
        ..frame.clone()
    };
    let mut reports: Vec<VisibilityReport> = group_parts(&kept, config)
        .iter()
        .map(|g| classify_bicycle(&frame.image_id, g, config))
        .collect();
    reports.sort_by(|a, b| {
        b.visibility_pct
            .total_cmp(&a.visibility_pct)
            .then(a.bicycle_index.cmp(&b.bicycle_index))
    });
    reports
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::WHEEL_FRACTIONS;
    use proptest::prelude::*;

    fn bbox(x: f64, y: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(x, y, x + w, y + h).unwrap()
    }

    fn det(part: PartClass, b: BoundingBox, confidence: f64) -> PartDetection {
        PartDetection::new(part, b, confidence)
    }

    fn frame(detections: Vec<PartDetection>) -> DetectionFrame {
        DetectionFrame {
            image_id: "t".into(),
            image_width: 640,
            image_height: 640,
            detections,
        }
    }

    fn group(parts: Vec<PartDetection>) -> PartGroup {
        PartGroup {
            bicycle_index: 0,
            detection_indices: (0..parts.len()).collect(),
            parts,
        }
    }

    /// One bicycle laid out left to right; `wheel_dims` are (w, h) per wheel.
    fn bicycle(
        x0: f64,
        wheel_dims: &[(f64, f64)],
        frame_part: bool,
        handlebar: bool,
    ) -> Vec<PartDetection> {
        let mut v = Vec::new();
        let mut x = x0;
        for &(w, h) in wheel_dims {
            v.push(det(PartClass::Wheel, bbox(x, 300.0, w, h), 0.9));
            x += 220.0;
        }
        if frame_part {
            v.push(det(
                PartClass::Frame,
                bbox(x0 + 100.0, 220.0, 200.0, 140.0),
                0.85,
            ));
        }
        if handlebar {
            v.push(det(
                PartClass::Handlebar,
                bbox(x0 + 260.0, 190.0, 40.0, 30.0),
                0.7,
            ));
        }
        v
    }

    #[test]
    fn wheel_fraction_examples() {
        let cfg = ClassifierConfig::default();
        let share = cfg.area_model.wheel_share_pct;
        let sq = bbox(0.0, 0.0, 100.0, 100.0);
        assert_eq!(wheel_visibility_fraction(&sq, &cfg), 1.0);
        assert_eq!(share * wheel_visibility_fraction(&sq, &cfg), 41.0);
        let half = bbox(0.0, 0.0, 100.0, 50.0);
        assert_eq!(wheel_visibility_fraction(&half, &cfg), 0.5);
        assert_eq!(share * 0.5, 20.5);
        let angled = bbox(0.0, 0.0, 100.0, 70.0);
        assert_eq!(wheel_visibility_fraction(&angled, &cfg), 0.7);
        let both = 41.0 + share * wheel_visibility_fraction(&angled, &cfg);
        assert!((both - 69.7).abs() < 1e-9);
        // Portrait boxes behave like landscape ones.
        assert_eq!(
            wheel_visibility_fraction(&bbox(0.0, 0.0, 70.0, 100.0), &cfg),
            0.7
        );
    }

    #[test]
    fn wheel_fraction_at_thresholds() {
        let cfg = ClassifierConfig::default();
        let at = |r: f64| wheel_visibility_fraction(&bbox(0.0, 0.0, 1000.0, 1000.0 * r), &cfg);
        assert_eq!(at(0.85), 1.0);
        assert_eq!(at(0.849), 0.7);
        assert_eq!(at(0.6), 0.7);
        assert_eq!(at(0.599), 0.5);
        assert_eq!(at(0.45), 0.5);
        assert_eq!(at(0.449), 0.4);
        assert_eq!(at(0.01), 0.4);
    }

    #[test]
    fn part_visibility_examples() {
        let cfg = ClassifierConfig::default();
        let b = bbox(0.0, 0.0, 50.0, 120.0);
        assert_eq!(part_visibility(&det(PartClass::Frame, b, 0.9), &cfg), 17.0);
        assert_eq!(
            part_visibility(&det(PartClass::Handlebar, b, 0.9), &cfg),
            1.0
        );
        let w = part_visibility(
            &det(PartClass::Wheel, bbox(0.0, 0.0, 100.0, 40.0), 0.9),
            &cfg,
        );
        assert!((w - 16.4).abs() < 1e-12);
        assert!((41.0 + w - 57.4).abs() < 1e-9);
    }

    #[test]
    fn classify_bicycle_examples() {
        let cfg = ClassifierConfig::default();
        let full = classify_bicycle(
            "e",
            &group(bicycle(0.0, &[(180.0, 180.0); 2], true, true)),
            &cfg,
        );
        assert_eq!((full.visibility_pct, full.occlusion_pct), (100.0, 0.0));
        assert_eq!(full.band, OcclusionBand::LowOrNone);

        let lone = classify_bicycle(
            "d",
            &group(bicycle(0.0, &[(180.0, 90.0)], false, false)),
            &cfg,
        );
        assert_eq!((lone.visibility_pct, lone.occlusion_pct), (20.5, 79.5));
        assert_eq!(lone.band, OcclusionBand::Heavy);

        let h = classify_bicycle(
            "h",
            &group(bicycle(0.0, &[(180.0, 180.0), (180.0, 90.0)], true, false)),
            &cfg,
        );
        assert!((h.visibility_pct - 78.5).abs() < 1e-9);
        assert!((h.occlusion_pct - 21.5).abs() < 1e-9);
        assert!(h.part_contributions.handlebar.is_empty());

        let empty = classify_bicycle("x", &group(vec![]), &cfg);
        assert_eq!((empty.visibility_pct, empty.occlusion_pct), (0.0, 100.0));
        assert_eq!(empty.band, OcclusionBand::Severe);
    }

    #[test]
    fn band_boundaries() {
        let cases = [
            (0.0, OcclusionBand::LowOrNone),
            (24.6, OcclusionBand::Partial),
            (79.5, OcclusionBand::Heavy),
            (9.999, OcclusionBand::LowOrNone),
            (10.0, OcclusionBand::Partial),
            (39.999, OcclusionBand::Partial),
            (40.0, OcclusionBand::Heavy),
            (80.0, OcclusionBand::Heavy),
            (80.001, OcclusionBand::Severe),
            (100.0, OcclusionBand::Severe),
        ];
        for (pct, band) in cases {
            assert_eq!(occlusion_band(pct), Ok(band), "{pct}");
        }
        assert!(occlusion_band(-0.1).is_err());
        assert!(occlusion_band(100.5).is_err());
        assert!(occlusion_band(f64::NAN).is_err());
    }

    #[test]
    fn single_bicycle_is_one_group() {
        let cfg = ClassifierConfig::default();
        let groups = group_parts(
            &frame(bicycle(50.0, &[(180.0, 180.0); 2], true, true)),
            &cfg,
        );
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].parts.len(), 4);
        assert!(group_parts(&frame(vec![]), &cfg).is_empty());
    }

    #[test]
    fn separated_bicycles_form_two_groups() {
        let cfg = ClassifierConfig::default();
        // Small wheels (diag ≈ 85) far apart.
        let mut dets = vec![
            det(PartClass::Wheel, bbox(0.0, 0.0, 60.0, 60.0), 0.9),
            det(PartClass::Wheel, bbox(80.0, 0.0, 60.0, 60.0), 0.9),
            det(PartClass::Wheel, bbox(400.0, 400.0, 60.0, 60.0), 0.9),
            det(PartClass::Wheel, bbox(480.0, 400.0, 60.0, 60.0), 0.9),
        ];
        dets.push(det(PartClass::Frame, bbox(420.0, 360.0, 80.0, 60.0), 0.9));
        let groups = group_parts(&frame(dets.clone()), &cfg);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].detection_indices, vec![0, 1]);
        assert_eq!(groups[1].detection_indices, vec![2, 3, 4]);

        // Independent count of connected components by exhaustive pairwise check.
        let link = 1.5 * dets.iter().map(|d| d.bbox.diagonal()).fold(0.0, f64::max);
        let mut label: Vec<usize> = (0..dets.len()).collect();
        loop {
            let mut changed = false;
            for i in 0..dets.len() {
                for j in 0..dets.len() {
                    if dets[i].bbox.gap(&dets[j].bbox) <= link && label[j] > label[i] {
                        label[j] = label[i];
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        label.sort_unstable();
        label.dedup();
        assert_eq!(label.len(), groups.len());
    }

    #[test]
    fn pruning_keeps_best_two_wheels() {
        let cfg = ClassifierConfig::default();
        let dets = vec![
            det(PartClass::Wheel, bbox(0.0, 0.0, 100.0, 100.0), 0.7),
            det(PartClass::Wheel, bbox(50.0, 0.0, 100.0, 100.0), 0.9),
            det(PartClass::Wheel, bbox(100.0, 0.0, 100.0, 100.0), 0.8),
        ];
        let g = group_parts(&frame(dets), &cfg);
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].detection_indices, vec![1, 2]);
    }

    #[test]
    fn pruning_ties_prefer_larger_then_earlier() {
        let cfg = ClassifierConfig::default();
        let dets = vec![
            det(PartClass::Frame, bbox(0.0, 0.0, 100.0, 100.0), 0.8),
            det(PartClass::Frame, bbox(10.0, 0.0, 120.0, 100.0), 0.8),
            det(PartClass::Handlebar, bbox(0.0, 0.0, 10.0, 10.0), 0.6),
            det(PartClass::Handlebar, bbox(5.0, 0.0, 10.0, 10.0), 0.6),
        ];
        let g = group_parts(&frame(dets), &cfg);
        assert_eq!(g[0].detection_indices, vec![1, 2]);
    }

    #[test]
    fn without_wheels_only_touching_parts_join() {
        let cfg = ClassifierConfig::default();
        let apart = vec![
            det(PartClass::Frame, bbox(100.0, 220.0, 200.0, 140.0), 0.8),
            det(PartClass::Handlebar, bbox(260.0, 190.0, 40.0, 20.0), 0.7),
        ];
        assert_eq!(group_parts(&frame(apart.clone()), &cfg).len(), 2);
        let mut touching = apart;
        touching[1].bbox = bbox(260.0, 200.0, 40.0, 20.0);
        assert_eq!(group_parts(&frame(touching), &cfg).len(), 1);
    }

    #[test]
    fn low_confidence_frame_yields_nothing() {
        let cfg = ClassifierConfig::default();
        let mut dets = bicycle(0.0, &[(180.0, 180.0); 2], true, true);
        for d in &mut dets {
            d.confidence = 0.49;
        }
        assert!(classify_frame(&frame(dets), &cfg).is_empty());
    }

    #[test]
    fn reports_are_sorted_by_visibility() {
        let cfg = ClassifierConfig::default();
        let mut dets = bicycle(0.0, &[(90.0, 45.0)], false, false);
        let mut far = bicycle(0.0, &[(90.0, 90.0), (90.0, 90.0)], true, false);
        for d in &mut far {
            d.bbox.y_min += 5000.0;
            d.bbox.y_max += 5000.0;
        }
        dets.extend(far);
        let reports = classify_frame(&frame(dets), &cfg);
        assert_eq!(reports.len(), 2);
        assert_eq!(reports[0].bicycle_index, 1);
        assert_eq!(reports[0].visibility_pct, 99.0);
        assert_eq!(reports[1].visibility_pct, 20.5);
    }

    fn arb_detection() -> impl Strategy<Value = PartDetection> {
        (
            0usize..3,
            0.0..600.0f64,
            0.0..600.0f64,
            1.0..200.0f64,
            1.0..200.0f64,
            0.0..=1.0f64,
        )
            .prop_map(|(c, x, y, w, h, conf)| det(PartClass::ALL[c], bbox(x, y, w, h), conf))
    }

    fn arb_frame() -> impl Strategy<Value = DetectionFrame> {
        prop::collection::vec(arb_detection(), 0..10).prop_map(frame)
    }

    proptest! {
        #[test]
        fn reports_conserve_and_quantize(f in arb_frame()) {
            let cfg = ClassifierConfig::default();
            for r in classify_frame(&f, &cfg) {
                prop_assert!((r.visibility_pct + r.occlusion_pct - 100.0).abs() <= 1e-9);
                prop_assert!((0.0..=100.0).contains(&r.visibility_pct));
                prop_assert!(r.part_contributions.wheel.len() <= 2);
                prop_assert!(r.part_contributions.frame.len() <= 1);
                prop_assert!(r.part_contributions.handlebar.len() <= 1);
                for w in &r.part_contributions.wheel {
                    prop_assert!(WHEEL_FRACTIONS.iter().any(|f| 41.0 * f == *w));
                }
                prop_assert!(r.part_contributions.frame.iter().all(|v| *v == 17.0));
                prop_assert!(r.part_contributions.handlebar.iter().all(|v| *v == 1.0));
            }
        }

        #[test]
        fn scaling_leaves_reports_unchanged(f in arb_frame(), s in 0.1..10.0f64) {
            let cfg = ClassifierConfig::default();
            let mut scaled = f.clone();
            for d in &mut scaled.detections {
                d.bbox = d.bbox.scaled(s);
            }
            let a = classify_frame(&f, &cfg);
            let b = classify_frame(&scaled, &cfg);
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                prop_assert_eq!(x.visibility_pct, y.visibility_pct);
                prop_assert_eq!(x.bicycle_index, y.bicycle_index);
            }
        }

        #[test]
        fn full_visibility_needs_every_part(parts in prop::collection::vec(arb_detection(), 0..6)) {
            let cfg = ClassifierConfig::default();
            let g = group(parts);
            prop_assume!(PartClass::ALL.iter().all(|c| g.count(*c) <= c.max_per_bicycle()));
            let r = classify_bicycle("p", &g, &cfg);
            let full_wheels = g.parts.iter()
                .filter(|d| d.part == PartClass::Wheel && d.bbox.aspect_ratio() >= 0.85).count();
            let complete = full_wheels == 2 && g.count(PartClass::Frame) == 1
                && g.count(PartClass::Handlebar) == 1 && g.count(PartClass::Wheel) == 2;
            prop_assert_eq!(r.visibility_pct == 100.0, complete);
        }

        #[test]
        fn removing_a_part_never_raises_visibility(parts in prop::collection::vec(arb_detection(), 1..5)) {
            let cfg = ClassifierConfig::default();
            let whole = classify_bicycle("m", &group(parts.clone()), &cfg).visibility_pct;
            for i in 0..parts.len() {
                let mut fewer = parts.clone();
                fewer.remove(i);
                prop_assert!(classify_bicycle("m", &group(fewer), &cfg).visibility_pct <= whole);
            }
        }
    }
}
