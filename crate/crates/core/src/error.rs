use alloc::string::String;

/// Failures raised by the solvers, builders and the simulator.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("edge list contains no edges")]
    EmptyEdgeList,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid scenario: {0}")]
    Validation(String),

    #[error("invalid cost model: {0}")]
    CostModel(String),

    #[error("integration blew up at grid point {index} (t = {time})")]
    Blowup { index: usize, time: f64 },

    #[error("state left [0, 1] by {excess:e} at grid point {index} (t = {time})")]
    OutOfBounds { index: usize, time: f64, excess: f64 },

    #[error(
        "budget {budget} is not bracketed: resource {resource_at_low} at mu = {mu_low}, \
         {resource_at_high} at mu = {mu_high}"
    )]
    Bracket {
        budget: f64,
        mu_low: f64,
        mu_high: f64,
        resource_at_low: f64,
        resource_at_high: f64,
    },

    #[error(
        "resource is not monotone in mu: r({mu_a}) = {resource_a} but r({mu_b}) = {resource_b}"
    )]
    NonMonotoneResource {
        mu_a: f64,
        resource_a: f64,
        mu_b: f64,
        resource_b: f64,
    },

    #[error("beta(t)*dt = {value} exceeds 1 at t = {time}; refine the time grid")]
    StepSize { time: f64, value: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
