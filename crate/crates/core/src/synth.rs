//! Synthetic side-view bicycles with exact ground truth.
//!
//! A scene places a [`BicycleTemplate`] on a 640×640 canvas and covers it
//! with axis-aligned occluders. Ground truth comes straight from polygon
//! clipping; an idealized detector turns the visible geometry into part
//! detections so the classifier can be scored against the exact answer.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{classify_frame, occlusion_band};
use crate::error::GeometryError;
use crate::eval::{band_confusion, BandConfusion};
use crate::geometry::{
    circle_polygon, signed_area, subtract_occluders, visible_area, ConvexPolygon, Polygon,
};
use crate::model::{
    BoundingBox, ClassifierConfig, DetectionFrame, OcclusionBand, PartClass, PartDetection, Point,
    SurfaceAreaModel,
};

pub const CANVAS_SIZE: u32 = 640;
pub const WHEEL_SEGMENTS: usize = 128;
pub const MAX_PLACEMENT_ATTEMPTS: usize = 1000;
/// Placement stops early once coverage is this close to the target.
pub const COVERAGE_TOLERANCE: f64 = 0.005;

/// Side-view bicycle geometry in meters.
///
/// Coordinates put the rear hub at `x = 0` and the ground at `y = 0`, with
/// `y` pointing up. The frame is two triangles sharing the edge from the
/// bottom bracket to the seat cluster; both triangles sit between the
/// wheels' bounding boxes so that a wheel can be hidden on its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BicycleTemplate {
    pub wheel_radius: f64,
    pub wheelbase: f64,
    /// Rear stay end, bottom bracket, seat cluster.
    pub rear_triangle: [Point; 3],
    /// Bottom bracket, head tube top, seat cluster.
    pub front_triangle: [Point; 3],
    /// Side-on projection of the bar: `[x_min, y_min, x_max, y_max]`.
    pub handlebar: [f64; 4],
    /// Physical bar width across the bicycle; not visible side-on.
    pub handlebar_width: f64,
}

impl Default for BicycleTemplate {
    fn default() -> Self {
        let stay = Point::new(0.36, 0.34);
        let bracket = Point::new(0.56, 0.27);
        let seat = Point::new(0.38, 0.88);
        let head = Point::new(0.69, 0.84);
        Self {
            wheel_radius: 0.35,
            wheelbase: 1.05,
            rear_triangle: [stay, bracket, seat],
            front_triangle: [bracket, head, seat],
            handlebar: [0.62, 0.92, 0.74, 1.00],
            handlebar_width: 0.61,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TemplateError {
    #[error("handlebar top {0} m outside [0.75, 1.10] m")]
    HandlebarHeight(f64),
    #[error("overall length {0} m outside [1.5, 1.8] m")]
    Length(f64),
    #[error("{part} covers {actual:.1}% of the template, model share is {expected}%")]
    Proportion {
        part: PartClass,
        actual: f64,
        expected: f64,
    },
    #[error("frame triangles overlap or do not share the seat edge")]
    FrameShape,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl BicycleTemplate {
    pub fn length(&self) -> f64 {
        self.wheelbase + 2.0 * self.wheel_radius
    }

    pub fn validate(&self, model: &SurfaceAreaModel) -> Result<(), TemplateError> {
        let top = self.handlebar[3];
        if !(0.75..=1.10).contains(&top) {
            return Err(TemplateError::HandlebarHeight(top));
        }
        let len = self.length();
        if !(1.5..=1.8).contains(&len) {
            return Err(TemplateError::Length(len));
        }
        let parts = self.parts_in(&Placement::metric())?;
        let tri: f64 = [self.rear_triangle, self.front_triangle]
            .iter()
            .map(|t| signed_area(t).abs())
            .sum();
        let frame = &parts[2];
        if (frame.polygon.area() - tri).abs() > 1e-9 * tri {
            return Err(TemplateError::FrameShape);
        }
        let total: f64 = parts.iter().map(|p| p.polygon.area()).sum();
        for p in [&parts[0], &parts[2], &parts[3]] {
            let actual = 100.0 * p.polygon.area() / total;
            let expected = model.share_pct(p.class);
            if (actual / expected - 1.0).abs() > 0.25 {
                return Err(TemplateError::Proportion {
                    part: p.class,
                    actual,
                    expected,
                });
            }
        }
        Ok(())
    }

    fn parts_in(&self, at: &Placement) -> Result<Vec<ScenePart>, GeometryError> {
        let r = self.wheel_radius;
        let map = |p: Point| at.to_px(p);
        let mut parts = Vec::with_capacity(4);
        for hub_x in [0.0, self.wheelbase] {
            let wheel = circle_polygon(map(Point::new(hub_x, r)), r * at.scale, WHEEL_SEGMENTS)?;
            parts.push(ScenePart {
                class: PartClass::Wheel,
                pieces: vec![ConvexPolygon::new(wheel.vertices().to_vec())?],
                polygon: wheel,
            });
        }
        let [stay, bracket, seat] = self.rear_triangle;
        let head = self.front_triangle[1];
        let frame = Polygon::new([stay, bracket, head, seat].map(map).to_vec())?;
        let pieces = vec![
            ConvexPolygon::new(self.rear_triangle.map(map).to_vec())?,
            ConvexPolygon::new(self.front_triangle.map(map).to_vec())?,
        ];
        parts.push(ScenePart {
            class: PartClass::Frame,
            polygon: frame,
            pieces,
        });
        let [x0, y0, x1, y1] = self.handlebar;
        let (a, b) = (map(Point::new(x0, y0)), map(Point::new(x1, y1)));
        let bar = ConvexPolygon::rectangle(a.x, a.y, b.x, b.y)?;
        parts.push(ScenePart {
            class: PartClass::Handlebar,
            polygon: bar.polygon().clone(),
            pieces: vec![bar],
        });
        Ok(parts)
    }
}

/// Meter-to-pixel mapping; pixel `y` grows downward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub scale: f64,
    pub origin_x: f64,
    pub ground_y: f64,
}

impl Placement {
    fn metric() -> Self {
        Self {
            scale: 1.0,
            origin_x: 0.0,
            ground_y: 0.0,
        }
    }

    /// Centers `template` horizontally on the canvas at `scale` px/m.
    pub fn centered(template: &BicycleTemplate, scale: f64) -> Self {
        let canvas = CANVAS_SIZE as f64;
        let left = (canvas - template.length() * scale) / 2.0;
        Self {
            scale,
            origin_x: left + template.wheel_radius * scale,
            ground_y: canvas - 170.0,
        }
    }

    pub fn to_px(&self, p: Point) -> Point {
        Point::new(
            self.origin_x + p.x * self.scale,
            self.ground_y - p.y * self.scale,
        )
    }
}

/// One bicycle part in pixel coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenePart {
    pub class: PartClass,
    pub polygon: Polygon,
    /// Disjoint convex pieces whose union is `polygon`.
    pub pieces: Vec<ConvexPolygon>,
}

/// A placed bicycle plus occluders. Serializes to JSON for fixture pinning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub template: BicycleTemplate,
    pub placement: Placement,
    pub occluders: Vec<ConvexPolygon>,
    pub seed: u64,
}

impl Scene {
    pub fn new(template: BicycleTemplate, seed: u64) -> Self {
        let placement = Placement::centered(&template, 300.0);
        Self {
            template,
            placement,
            occluders: Vec::new(),
            seed,
        }
    }

    /// Parts in order: rear wheel, front wheel, frame, handlebar.
    pub fn parts(&self) -> Vec<ScenePart> {
        self.template
            .parts_in(&self.placement)
            .expect("template geometry is valid")
    }

    /// Pixel bounding box of the whole bicycle.
    pub fn bicycle_bbox(&self) -> BoundingBox {
        let pts: Vec<Point> = self
            .parts()
            .iter()
            .flat_map(|p| p.polygon.vertices().to_vec())
            .collect();
        BoundingBox::enclosing(&pts).expect("bicycle has extent")
    }

    pub fn with_occluders(mut self, occluders: Vec<ConvexPolygon>) -> Self {
        self.occluders = occluders;
        self
    }
}

fn exact_coverage(parts: &[ScenePart], occluders: &[ConvexPolygon]) -> f64 {
    let (mut total, mut seen) = (0.0, 0.0);
    for p in parts {
        total += p.polygon.area();
        seen += subtract_occluders(&p.pieces, occluders)
            .iter()
            .map(|q| q.area())
            .sum::<f64>();
    }
    1.0 - seen / total
}

/// Deterministic scene whose occluders cover roughly `coverage_target` of
/// the bicycle's area.
///
/// Up to [`MAX_PLACEMENT_ATTEMPTS`] random occluder sets are drawn; the one
/// closest to the target is kept.
pub fn generate_scene(seed: u64, occluder_count: usize, coverage_target: f64) -> Scene {
    let target = coverage_target.clamp(0.0, 1.0);
    let scene = Scene::new(BicycleTemplate::default(), seed);
    if occluder_count == 0 {
        return scene;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parts = scene.parts();
    let bb = scene.bicycle_bbox();
    let (w, h) = (bb.width(), bb.height());
    let canvas = CANVAS_SIZE as f64;

    let mut best: Option<(f64, Vec<ConvexPolygon>)> = None;
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let occluders: Vec<ConvexPolygon> = (0..occluder_count)
            .map(|_| {
                let cx = rng.gen_range(bb.x_min..bb.x_max);
                let cy = rng.gen_range(bb.y_min..bb.y_max);
                let ow = w * rng.gen_range(0.05..1.1);
                let oh = h * rng.gen_range(0.05..1.1);
                let x0 = (cx - ow / 2.0).max(0.0);
                let y0 = (cy - oh / 2.0).max(0.0);
                let x1 = (cx + ow / 2.0).min(canvas);
                let y1 = (cy + oh / 2.0).min(canvas);
                ConvexPolygon::rectangle(x0, y0, x1, y1).expect("occluder has extent")
            })
            .collect();
        let miss = (exact_coverage(&parts, &occluders) - target).abs();
        if best.as_ref().is_none_or(|(m, _)| miss < *m) {
            best = Some((miss, occluders));
        }
        if miss <= COVERAGE_TOLERANCE {
            break;
        }
    }
    scene.with_occluders(best.map(|(_, o)| o).unwrap_or_default())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartTruth {
    pub class: PartClass,
    pub area: f64,
    pub visible_area: f64,
    pub visible_fraction: f64,
}

/// Exact per-part visibility of a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub parts: Vec<PartTruth>,
    pub visibility_pct: f64,
    pub occlusion_pct: f64,
    pub band: OcclusionBand,
}

/// Weights each part's exact visible fraction by its surface share (no
/// quantization).
pub fn ground_truth(scene: &Scene, model: &SurfaceAreaModel) -> GroundTruth {
    let parts: Vec<PartTruth> = scene
        .parts()
        .into_iter()
        .map(|p| {
            let area = p.polygon.area();
            let visible = visible_area(&p.polygon, &scene.occluders);
            PartTruth {
                class: p.class,
                area,
                visible_area: visible,
                visible_fraction: (visible / area).clamp(0.0, 1.0),
            }
        })
        .collect();
    let visibility_pct = parts
        .iter()
        .map(|p| model.share_pct(p.class) * p.visible_fraction)
        .sum::<f64>()
        .clamp(0.0, 100.0);
    let occlusion_pct = 100.0 - visibility_pct;
    GroundTruth {
        parts,
        visibility_pct,
        occlusion_pct,
        band: occlusion_band(occlusion_pct).expect("occlusion within [0, 100]"),
    }
}

/// Idealized detector: every part at least `detectability_floor` visible is
/// reported with the bounding box of its visible region and a confidence
/// rising linearly from 0.5 (invisible) to 1.0 (fully visible).
pub fn simulate_detections(scene: &Scene, detectability_floor: f64) -> DetectionFrame {
    let canvas = CANVAS_SIZE as f64;
    let mut detections = Vec::new();
    for part in scene.parts() {
        let area = part.polygon.area();
        let visible = subtract_occluders(&part.pieces, &scene.occluders);
        let fraction = (visible.iter().map(|p| p.area()).sum::<f64>() / area).clamp(0.0, 1.0);
        if fraction < detectability_floor || visible.is_empty() {
            continue;
        }
        let pts: Vec<Point> = visible.iter().flat_map(|p| p.vertices().to_vec()).collect();
        let Some(b) = BoundingBox::enclosing(&pts) else {
            continue;
        };
        let Some(bbox) = BoundingBox::new(
            b.x_min.max(0.0),
            b.y_min.max(0.0),
            b.x_max.min(canvas),
            b.y_max.min(canvas),
        ) else {
            continue;
        };
        detections.push(PartDetection::new(part.class, bbox, 0.5 + 0.5 * fraction));
    }
    DetectionFrame {
        image_id: format!("synthetic-{}", scene.seed),
        image_width: CANVAS_SIZE,
        image_height: CANVAS_SIZE,
        detections,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorError {
    pub estimated_occlusion: f64,
    pub exact_occlusion: f64,
    pub estimated_band: OcclusionBand,
    pub exact_band: OcclusionBand,
    pub bands_agree: bool,
}

impl EstimatorError {
    pub fn abs_error(&self) -> f64 {
        (self.estimated_occlusion - self.exact_occlusion).abs()
    }
}

/// Runs the simulated detector and the classifier on `scene` and compares
/// with ground truth. With no bicycle reported, estimated occlusion is 100.
pub fn estimator_error(scene: &Scene, config: &ClassifierConfig) -> EstimatorError {
    let truth = ground_truth(scene, &config.area_model);
    let frame = simulate_detections(scene, config.detectability_floor);
    let reports = classify_frame(&frame, config);
    let (estimated_occlusion, estimated_band) =
        reports.first().map_or((100.0, OcclusionBand::Severe), |r| {
            (r.occlusion_pct, r.band)
        });
    EstimatorError {
        estimated_occlusion,
        exact_occlusion: truth.occlusion_pct,
        estimated_band,
        exact_band: truth.band,
        bands_agree: estimated_band == truth.band,
    }
}

/// Parameters of a batch of synthetic scenes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenes: usize,
    pub seed: u64,
    pub occluders: usize,
    /// Fixed coverage target; drawn uniformly from `[0, 1)` per scene when absent.
    pub coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub errors: Vec<EstimatorError>,
    pub mean_abs_error: f64,
    pub max_abs_error: f64,
    pub confusion: BandConfusion,
}

impl ExperimentResult {
    pub fn agreement_rate(&self) -> f64 {
        self.confusion.agreement_rate()
    }
}

/// Scene `i` of a batch: its own seed and coverage target, both drawn from
/// the batch seed so that batches are reproducible.
pub fn experiment_scenes(spec: &ExperimentSpec) -> Vec<(u64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.scenes)
        .map(|_| {
            let seed = rng.next_u64();
            let coverage = rng.gen_range(0.0..1.0);
            (seed, spec.coverage.unwrap_or(coverage))
        })
        .collect()
}

pub fn run_experiment(spec: ExperimentSpec, config: &ClassifierConfig) -> ExperimentResult {
    let plan = experiment_scenes(&spec);
    let threads = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(16);
    let chunk = plan.len().div_ceil(threads).max(1);
    let errors: Vec<EstimatorError> = std::thread::scope(|s| {
        let handles: Vec<_> = plan
            .chunks(chunk)
            .map(|work| {
                s.spawn(move || {
                    work.iter()
                        .map(|&(seed, cov)| {
                            estimator_error(&generate_scene(seed, spec.occluders, cov), config)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    });

    let abs: Vec<f64> = errors.iter().map(EstimatorError::abs_error).collect();
    let mean_abs_error = if abs.is_empty() {
        0.0
    } else {
        crate::eval::pairwise_sum(&abs) / abs.len() as f64
    };
    let est: Vec<OcclusionBand> = errors.iter().map(|e| e.estimated_band).collect();
    let exact: Vec<OcclusionBand> = errors.iter().map(|e| e.exact_band).collect();
    ExperimentResult {
        spec,
        mean_abs_error,
        max_abs_error: abs.iter().copied().fold(0.0, f64::max),
        confusion: band_confusion(&est, &exact).expect("paired lists"),
        errors,
    }
}
