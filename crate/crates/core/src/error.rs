use thiserror::Error;

/// Errors raised by the estimation library.
///
/// Numeric payloads are stored as `f64` regardless of the scalar type in use.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("row {row}: {message}")]
    Validation { row: usize, message: String },

    #[error("{} invalid row(s):{}", .0.len(), list_rows(.0))]
    InvalidRows(Vec<(usize, String)>),

    #[error("time {t} is beyond the estimated support (last usable time {limit})")]
    OutOfSupport { t: f64, limit: f64 },

    #[error("unknown stratum label {0}; expected 1, 2 or 3")]
    UnknownStratum(u8),

    #[error("likelihood underflow for subject {id}")]
    Underflow { id: String },

    #[error("all stratum mixture weights vanish for subject {id}")]
    NumericalDegeneracy { id: String },

    #[error("empty weighted risk set at jump time {time} ({scale})")]
    DegenerateRiskSet { scale: &'static str, time: f64 },

    #[error("{context}: Newton solver did not converge (score norm {residual:.3e})")]
    SolverFailure { context: String, residual: f64 },

    #[error("{0}: Hessian is singular (design may be rank deficient)")]
    RankDeficient(String),

    #[error("no {0} events in the data; the corresponding baseline hazard is not estimable")]
    MissingEvents(&'static str),

    #[error("EM iteration {iter}: {source}")]
    AtIteration {
        iter: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("stratum 1 weight sums to zero; marginal effects are undefined")]
    DegenerateStratum,

    #[error("{failed} of {total} bootstrap resamples failed; inference is unreliable")]
    UnreliableInference { failed: usize, total: usize },

    #[error("quadrature did not reach tolerance on [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Csv(#[from] csv::Error),

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for problems with the caller's input as opposed to numerical
    /// breakdown during estimation.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::InvalidInput(_)
            | Error::Validation { .. }
            | Error::InvalidRows(_)
            | Error::MissingEvents(_)
            | Error::UnknownStratum(_)
            | Error::OutOfSupport { .. }
            | Error::Csv(_)
            | Error::Json(_)
            | Error::Io(_) => true,
            Error::AtIteration { source, .. } => source.is_input_error(),
            _ => false,
        }
    }
}

fn list_rows(rows: &[(usize, String)]) -> String {
    rows.iter().map(|(r, m)| format!("\n  row {r}: {m}")).collect()
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
