use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sample {which} has no points inside the query ball")]
    EmptyIntersection { which: &'static str },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("hypothesis ({which}) violated: {detail}")]
    HypothesisViolation { which: &'static str, detail: String },

    #[error("no admissible cube found above level {max_level}")]
    DepthLimit { max_level: i32 },

    #[error("ball family is empty: the excluded set covers the boundary")]
    EmptyFamily,

    #[error("profile slope {slope} exceeds theta = {theta}")]
    SlopeViolation { slope: f64, theta: f64 },

    #[error("placement failed: {0}")]
    Placement(String),

    #[error("budget exceeded: {what} = {value} > {limit}")]
    Budget {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("separation condition failed at x = {x:?}, r = {r}")]
    SeparationFailure { x: Vec<f64>, r: f64 },

    #[error("no normal orientation works at x = {x:?}, r = {r}")]
    OrientationFailure { x: Vec<f64>, r: f64 },

    #[error("base domain flatness {delta} exceeds cap {cap}")]
    FlatnessPrecondition { delta: f64, cap: f64 },

    #[error("certificate {inequality} failed for pair ({q}, {p}): {detail}")]
    Certificate {
        inequality: &'static str,
        q: usize,
        p: usize,
        detail: String,
    },

    #[error("walk exceeded {steps} steps")]
    StepBudget { steps: usize },

    #[error("walk failure rate {rate} exceeds {limit}")]
    FailureRate { rate: f64, limit: f64 },

    #[error("zero estimated mass at radius {r}")]
    ZeroMass { r: f64 },

    #[error("sample covering radius {covering} too coarse for scale {scale}")]
    Resolution { covering: f64, scale: f64 },

    #[error("overlap count grows with refinement: {0}")]
    UnboundedOverlap(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
