use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no solution: r*eta = {r_eta:e} exceeds H_max = {h_max:e}")]
    NoSolution { r_eta: f64, h_max: f64 },
    #[error("singular slope: |H_xi| = {h_xi:e} at x = {x}")]
    SingularSlope { x: f64, h_xi: f64 },
    #[error("root not bracketed on [{lo}, {hi}]")]
    RootNotBracketed { lo: f64, hi: f64 },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("step size underflow at x = {x}")]
    StepFailure { x: f64 },
    #[error(
        "eps-limit not Cauchy after {levels} levels at x0 = {x0} (last sup-difference {diff:e})"
    )]
    NonCauchy { x0: f64, levels: usize, diff: f64 },
    #[error("restart at x0 = {x0} cannot make progress: W'(x0) - xi_sharp = {gap:e} >= 0")]
    RestartStalled { x0: f64, gap: f64 },
    #[error("backward arc from x = {x} stopped with {reason}")]
    UnexpectedStop { x: f64, reason: String },
    #[error("regime violated: {0}")]
    RegimeViolated(String),
    #[error("no devaluation witness found on the scan grid")]
    WitnessNotFound,
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
