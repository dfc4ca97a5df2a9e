use thiserror::Error;

/// A problem with one detection of a frame.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("unknown part label: {label}")]
    UnknownLabel { index: usize, label: String },
    #[error("zero-width bbox at index {index}")]
    ZeroWidth { index: usize },
    #[error("zero-height bbox at index {index}")]
    ZeroHeight { index: usize },
    #[error("non-finite bbox coordinate at index {index}")]
    NonFinite { index: usize },
    #[error("confidence out of range at index {index}: {value}")]
    ConfidenceOutOfRange { index: usize, value: f64 },
    #[error("polygon at index {index} has {vertices} vertices, need at least 3")]
    PolygonTooSmall { index: usize, vertices: usize },
    #[error("polygon at index {index} does not match its bbox")]
    PolygonMismatch { index: usize },
    #[error("image has empty extent {width}x{height}")]
    EmptyImage { width: u32, height: u32 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("confidence threshold {0} outside [0, 1]")]
    ConfidenceThreshold(f64),
    #[error("grouping distance factor {0} must be finite and non-negative")]
    GroupingFactor(f64),
    #[error("detectability floor {0} outside [0, 1]")]
    DetectabilityFloor(f64),
    #[error("wheel fraction table is empty")]
    NoWheelSteps,
    #[error("first wheel fraction must be 1.0, found {0}")]
    FirstFraction(f64),
    #[error("last wheel ratio threshold must be 0.0, found {0}")]
    LastThreshold(f64),
    #[error("wheel fraction {0} outside (0, 1]")]
    FractionRange(f64),
    #[error("wheel ratio threshold {0} outside [0, 1]")]
    ThresholdRange(f64),
    #[error("wheel thresholds and fractions must both be strictly decreasing")]
    NotDecreasing,
    #[error("surface areas and shares must be finite and non-negative")]
    NegativeArea,
    #[error("total area {found} cm² does not match part sum {expected} cm²")]
    AreaTotal { expected: f64, found: f64 },
    #[error("part shares sum to {0}%, expected 100%")]
    ShareSum(f64),
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed document at `{path}`: {message}")]
    Malformed { path: String, message: String },
    #[error("invalid frame: {}", join(.0))]
    Invalid(Vec<FrameError>),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("unknown band `{0}`")]
    UnknownBand(String),
}

fn join(errors: &[FrameError]) -> String {
    errors
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("occlusion {0}% outside [0, 100]")]
    OcclusionOutOfRange(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("no labeled examples")]
    Empty,
    #[error("grid step {0} must lie in (0, 0.25]")]
    GridStep(f64),
    #[error("ratio {ratio} labeled both {first} and {second}")]
    Conflict { ratio: f64, first: f64, second: f64 },
    #[error("fraction {0} is not one of the wheel fractions")]
    UnknownFraction(f64),
    #[error("ratio {0} outside (0, 1]")]
    RatioRange(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon has zero area")]
    Degenerate,
    #[error("polygon is not convex")]
    NotConvex,
    #[error("circle needs at least 16 segments, got {0}")]
    TooFewSegments(usize),
    #[error("radius {0} must be positive")]
    Radius(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("cannot summarize an empty report list")]
    Empty,
    #[error("estimated and exact lists differ in length ({estimated} vs {exact})")]
    LengthMismatch { estimated: usize, exact: usize },
}
