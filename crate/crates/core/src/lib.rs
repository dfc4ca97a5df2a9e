//! Objective bicycle occlusion levels from parts-based detections.
//!
//! A detector reports wheels, frames and handlebars. Each part accounts for
//! a fixed share of a bicycle's side-view surface (two wheels at 41% each,
//! frame 17%, handlebar 1%). Summing the shares of the parts that were
//! detected gives the bicycle's visibility, and occlusion is the
//! remainder. Wheels are discounted when their box is far from square.
//!
//! Modules:
//! - [`model`]: domain types and validation
//! - [`geometry`]: polygon area, clipping and visible area
//! - [`classifier`]: the visibility/occlusion pipeline and threshold calibration
//! - [`ingest`]: detector JSON in, CSV/JSON reports out
//! - [`synth`]: synthetic scenes with exact ground truth
//! - [`eval`]: summaries, band histograms and confusion matrices

pub mod classifier;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod ingest;
pub mod model;
pub mod synth;

pub use classifier::{
    calibrate_thresholds, classify_bicycle, classify_frame, group_parts, occlusion_band,
    part_visibility, wheel_visibility_fraction, PartGroup,
};
pub use model::{
    validate_frame, BoundingBox, ClassifierConfig, DetectionFrame, OcclusionBand, PartClass,
    PartDetection, Point, SurfaceAreaModel, VisibilityReport,
};
