use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not positive semi-definite (min eigenvalue {min_eig:e}, norm {norm:e})")]
    NotPsd { min_eig: f64, norm: f64 },

    /// The robust problem has no feasible point at all, e.g. `λmax(QᴴQ) <= η²`.
    #[error("problem is infeasible: {0}")]
    Infeasible(String),

    /// A fixed-α inner problem has an empty feasible set.
    #[error("inner problem infeasible at alpha = {alpha}: {reason}")]
    PrimalInfeasible { alpha: f64, reason: String },

    #[error("branch condition violated: {0}")]
    Branch(String),

    #[error("rank-one recovery failed (constraint residual {residual:e})")]
    RecoveryFailure { residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
