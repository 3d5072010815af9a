use serde_json::{json, Value};

/// Failures surfaced by the harness and the command line.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("infeasible theory constants: {precondition} does not hold")]
    Infeasible { precondition: String, detail: Value },
    #[error("invalid parameter: {0}")]
    Invalid(coint_rec_core::Error),
    #[error("numerical failure: {0}")]
    Numerical(coint_rec_core::Error),
}

pub type AppResult<T> = std::result::Result<T, AppError>;

impl From<coint_rec_core::Error> for AppError {
    fn from(e: coint_rec_core::Error) -> Self {
        use coint_rec_core::Error as E;
        match e {
            E::NotPositiveDefinite | E::NonFinite { .. } | E::Numerical(_) => {
                AppError::Numerical(e)
            }
            _ => AppError::Invalid(e),
        }
    }
}

impl AppError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for bad configuration or input, 3 for infeasible
    /// constants, 4 for numerical failures, 1 for i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) | AppError::Input(_) | AppError::Invalid(_) => 2,
            AppError::Infeasible { .. } => 3,
            AppError::Numerical(_) => 4,
            AppError::Io { .. } => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AppError::Config(_) => "config",
            AppError::Input(_) => "input",
            AppError::Io { .. } => "io",
            AppError::Infeasible { .. } => "infeasible_constants",
            AppError::Invalid(_) => "invalid_parameter",
            AppError::Numerical(_) => "numerical",
        }
    }

    /// Machine-readable form printed on failure.
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        if let AppError::Infeasible {
            precondition,
            detail,
        } = self
        {
            v["precondition"] = json!(precondition);
            v["detail"] = detail.clone();
        }
        v
    }
}
