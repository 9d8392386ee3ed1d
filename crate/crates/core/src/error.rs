use thiserror::Error;

/// Errors raised by the analytic pipeline, the simulator and the sweep runner.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value (file, flag or template) failed validation.
    #[error("configuration error: {0}")]
    Config(String),

    /// Moments that no distribution can have, e.g. E[V²] < E[V]².
    #[error("infeasible moments: second moment {m2} < squared first moment {m1_sq}")]
    InfeasibleMoments { m2: f64, m1_sq: f64 },

    /// The log-domain variance of the SINR ratio came out negative.
    #[error("infeasible correlation: ratio log-variance {sigma2} < 0")]
    InfeasibleCorrelation { sigma2: f64 },

    /// Bounded search could not reach the requested outage level.
    #[error(
        "target OP {target} unreachable for N in [{n_min}, {n_max}]: OP({n_min}) = {op_min}, OP({n_max}) = {op_max}"
    )]
    Unreachable {
        target: f64,
        n_min: usize,
        n_max: usize,
        op_min: f64,
        op_max: f64,
    },

    /// Analytic OP was found to increase somewhere along the search range.
    #[error("OP is not monotone decreasing in N: OP({n_lo}) = {op_lo} < OP({n_hi}) = {op_hi}")]
    NotMonotone {
        n_lo: usize,
        op_lo: f64,
        n_hi: usize,
        op_hi: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
