use thiserror::Error;

use crate::model::Amplitudes;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: expected {expected} entries, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("time integration did not settle by t = {t_max} (last residual {residual:.3e})")]
    Timeout {
        t_max: f64,
        residual: f64,
        last: Box<Amplitudes>,
    },

    #[error("singular Jacobian at Newton iteration {iteration}")]
    SingularJacobian { iteration: usize },

    #[error("Newton did not converge in {iterations} iterations (best residual {residual:.3e})")]
    NewtonDiverged {
        iterations: usize,
        residual: f64,
        best: Box<Amplitudes>,
    },

    #[error("degenerate cubic: {0}")]
    DegenerateCubic(String),

    #[error("pole in cubic reduction: {0} vanishes")]
    Pole(&'static str),

    #[error("sweep failed at grid index {index} (control = {control}): {source}")]
    Sweep {
        index: usize,
        control: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("instability boundary at site a_{site}: detuning {delta_tilde} <= 2|U~| = {two_u}")]
    InstabilityBoundary {
        site: usize,
        delta_tilde: f64,
        two_u: f64,
    },

    #[error("rotating-wave approximation refused: {}", .0.join("; "))]
    RwaRefused(Vec<String>),

    #[error("effective SSH aggregation failed: {}", .0.join("; "))]
    NonUniform(Vec<String>),

    #[error("topology undefined: {0}")]
    TopologyUndefined(String),

    #[error("winding resolution insufficient: {0}")]
    Resolution(String),

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("singular probe matrix at delta_p = {0}")]
    Singular(f64),

    #[error("unstable steady state: eigenvalue {0} has non-negative real part")]
    Unstable(num_complex::Complex64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for usage/config problems, 1 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) | Error::Json(_) | Error::Shape { .. } => 2,
            _ => 1,
        }
    }
}
