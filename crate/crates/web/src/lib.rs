//! Browser bindings for the occlusion demo.
//!
//! Everything crosses the boundary as JSON strings. The plain functions
//! ([`wheel_fraction`], [`evaluate`], [`generate`]) are usable natively; the
//! `#[wasm_bindgen]` wrappers only convert errors.

use occlusion_meter::geometry::ConvexPolygon;
use occlusion_meter::synth::{
    generate_scene, ground_truth, simulate_detections, BicycleTemplate, Scene,
};
use occlusion_meter::{
    classify_frame, part_visibility, wheel_visibility_fraction, BoundingBox, ClassifierConfig,
    OcclusionBand, PartClass, Point,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WheelView {
    pub ratio: f64,
    pub fraction: f64,
    pub contribution_pct: f64,
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub visibility_pct: f64,
    pub occlusion_pct: f64,
    pub band: OcclusionBand,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartView {
    pub class: PartClass,
    pub polygon: Vec<Point>,
    pub visible_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionView {
    pub class: PartClass,
    pub bbox: [f64; 4],
    pub confidence: f64,
    pub contribution_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneView {
    pub seed: u64,
    pub occluders: Vec<[f64; 4]>,
    pub parts: Vec<PartView>,
    pub detections: Vec<DetectionView>,
    pub exact: Outcome,
    /// Absent when no bicycle was detected (fully occluded).
    pub estimated: Option<Outcome>,
}

fn corners(b: &BoundingBox) -> [f64; 4] {
    [b.x_min, b.y_min, b.x_max, b.y_max]
}

pub fn wheel_fraction(width: f64, height: f64) -> Result<WheelView, String> {
    let bbox = BoundingBox::new(0.0, 0.0, width, height)
        .ok_or_else(|| format!("box must have positive size, got {width}x{height}"))?;
    let cfg = ClassifierConfig::default();
    let fraction = wheel_visibility_fraction(&bbox, &cfg);
    Ok(WheelView {
        ratio: bbox.aspect_ratio(),
        fraction,
        contribution_pct: cfg.area_model.share_pct(PartClass::Wheel) * fraction,
        thresholds: cfg.ratio_thresholds(),
    })
}

fn view(scene: &Scene) -> SceneView {
    let cfg = ClassifierConfig::default();
    let truth = ground_truth(scene, &cfg.area_model);
    let frame = simulate_detections(scene, cfg.detectability_floor);
    let estimated = classify_frame(&frame, &cfg).first().map(|r| Outcome {
        visibility_pct: r.visibility_pct,
        occlusion_pct: r.occlusion_pct,
        band: r.band,
    });
    SceneView {
        seed: scene.seed,
        occluders: scene.occluders.iter().map(|o| corners(&o.bbox())).collect(),
        parts: scene
            .parts()
            .into_iter()
            .zip(&truth.parts)
            .map(|(p, t)| PartView {
                class: p.class,
                polygon: p.polygon.vertices().to_vec(),
                visible_fraction: t.visible_fraction,
            })
            .collect(),
        detections: frame
            .detections
            .iter()
            .map(|d| DetectionView {
                class: d.part,
                bbox: corners(&d.bbox),
                confidence: d.confidence,
                contribution_pct: part_visibility(d, &cfg),
            })
            .collect(),
        exact: Outcome {
            visibility_pct: truth.visibility_pct,
            occlusion_pct: truth.occlusion_pct,
            band: truth.band,
        },
        estimated,
    }
}

/// Default bicycle under the given `[x0, y0, x1, y1]` rectangles.
pub fn evaluate(occluders: &[[f64; 4]]) -> Result<SceneView, String> {
    let rects = occluders
        .iter()
        .map(|&[x0, y0, x1, y1]| {
            ConvexPolygon::rectangle(x0.min(x1), y0.min(y1), x0.max(x1), y0.max(y1))
                .map_err(|e| format!("occluder {x0},{y0},{x1},{y1}: {e}"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(view(
        &Scene::new(BicycleTemplate::default(), 0).with_occluders(rects),
    ))
}

pub fn generate(seed: u64, occluders: usize, coverage: f64) -> Result<SceneView, String> {
    if !(0.0..=1.0).contains(&coverage) {
        return Err(format!("coverage must be in [0, 1], got {coverage}"));
    }
    Ok(view(&generate_scene(seed, occluders, coverage)))
}

fn to_json<T: Serialize>(v: Result<T, String>) -> Result<String, JsError> {
    let v = v.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = wheelFraction)]
pub fn wheel_fraction_js(width: f64, height: f64) -> Result<String, JsError> {
    to_json(wheel_fraction(width, height))
}

/// `occluders` is a JSON array of `[x0, y0, x1, y1]` pixel rectangles.
#[wasm_bindgen(js_name = evaluateOccluders)]
pub fn evaluate_js(occluders: &str) -> Result<String, JsError> {
    let rects: Vec<[f64; 4]> =
        serde_json::from_str(occluders).map_err(|e| JsError::new(&format!("occluders: {e}")))?;
    to_json(evaluate(&rects))
}

/// The seed arrives as a decimal string because JS numbers cannot hold
/// every `u64`.
#[wasm_bindgen(js_name = generateScene)]
pub fn generate_js(seed: &str, occluders: usize, coverage: f64) -> Result<String, JsError> {
    let seed: u64 = seed
        .trim()
        .parse()
        .map_err(|_| JsError::new(&format!("seed `{seed}` is not a non-negative integer")))?;
    to_json(generate(seed, occluders, coverage))
}
