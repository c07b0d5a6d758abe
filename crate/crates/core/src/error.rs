use thiserror::Error;

/// Errors surfaced by the simulation library.
#[derive(Debug, Error)]
pub enum SimError {
    /// An input fell outside the declared domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model assumption (nonnegative rate, PSD covariance, ...) was violated
    /// at evaluation time.
    #[error("assumption violation: {0}")]
    Assumption(String),

    /// A fixed-increment probability step exceeded the admissible budget;
    /// the caller must shrink the time step.
    #[error("step size too large: {0}")]
    StepSize(String),

    /// The root condition alpha^2 + 4 beta >= 0 failed at an evaluation point.
    #[error("root condition violated: discriminant = {discriminant} at (t={t}, y={y})")]
    RootCondition { t: f64, y: f64, discriminant: f64 },

    /// Unrecoverable numerical degeneracy inside a scheme step.
    #[error("numerical failure at step {step}: {message}")]
    Numerical { step: usize, message: String },
}

pub type Result<T> = std::result::Result<T, SimError>;
