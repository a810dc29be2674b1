use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("angle condition unsolvable for given Γ = ({0}, {1}, {2})")]
    AngleConditionUnsolvable(f64, f64, f64),

    #[error("geodesic minimization did not converge after {iterations} iterations (best value {best})")]
    GeodesicNotConverged { best: f64, iterations: usize },

    #[error("no connection found between wells {0} and {1}")]
    NoConnection(usize, usize),

    #[error("heteroclinic solve did not converge: residual {residual:.3e} after {iterations} iterations")]
    HeteroclinicNotConverged { residual: f64, iterations: usize },

    #[error("stationary triple junction stagnated at residual {residual:.3e} (target {target:.3e})")]
    StationaryStagnated { residual: f64, target: f64, field: Vec<f64> },

    #[error("flow singular or under-resolved at t = {time}: {reason}")]
    FlowSingular { time: f64, reason: String },

    #[error("degenerate curvature stencil")]
    DegenerateStencil,

    #[error("outside tube validity: {0}")]
    OutsideTube(String),

    #[error("no positive admissible radii: {0}")]
    NotAdmissible(String),

    #[error("uncovered point ({0}, {1})")]
    Uncovered(f64, f64),

    #[error("angle undefined at the junction")]
    AngleUndefined,

    #[error("under-resolved: {0}")]
    UnderResolved(String),

    #[error("instability at t = {time}: |u| = {magnitude}")]
    Instability { time: f64, magnitude: f64 },

    #[error("linear solve did not converge: residual {0:.3e}")]
    LinearSolve(f64),

    #[error("duhamel sweeps diverged: history {0:?}")]
    DuhamelDiverged(Vec<f64>),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("requested time {0} outside stored range [{1}, {2}]")]
    TimeOutOfRange(f64, f64, f64),

    #[error("non-monotone data: {0}")]
    NonMonotone(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
