use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid or incomplete configuration (odd `b`, missing gain entry, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Success target that no finite SIR reaches.
    #[error("infeasible target: efficiency {target} is not below the ceiling {ceiling}")]
    InfeasibleTarget { target: f64, ceiling: f64 },

    /// The queue is not stable: `f(gamma) <= lambda * tau`.
    #[error("unstable queue: success probability {success} does not exceed offered load {load}")]
    Unstable { success: f64, load: f64 },

    /// The delay bound is shorter than the bare packet transmission time.
    #[error("delay bound unsatisfiable: bit rate {bit_rate} is below L/D = {min_rate}")]
    DelayUnsatisfiable { bit_rate: f64, min_rate: f64 },

    /// No constellation up to `b_max` can meet the traffic's delay requirement.
    /// `residual` is the left-hand side of the feasibility test at `b_max` (feasible iff < 1).
    #[error("QoS infeasible up to b = {b_max}: feasibility residual {residual} >= 1")]
    QosInfeasible { b_max: u32, residual: f64 },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("fit failure: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
