use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unresolved bus reference {0}")]
    UnknownBus(u32),
    #[error("unknown generator {bus}/{unit_id}")]
    UnknownGenerator { bus: u32, unit_id: String },
    #[error("invalid case: {0}")]
    InvalidCase(String),
    #[error("singular jacobian at bus {bus}")]
    SingularJacobian { bus: u32 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("initialization failed for {unit}: {reason}")]
    Init { unit: String, reason: String },
    #[error("power flow did not converge (max mismatch {max_mismatch:.3e} MVA after {iterations} iterations)")]
    PowerFlowNotConverged { iterations: usize, max_mismatch: f64 },
    #[error("voltage collapse suspected near bus {bus} at t={time:.4}s")]
    VoltageCollapse { bus: u32, time: f64 },
    #[error("non-finite state in {channel} at t={time:.4}s")]
    NonFinite { channel: String, time: f64 },
    #[error("non-finite input to {0}")]
    NonFiniteInput(&'static str),
    #[error("metrics error: {0}")]
    Metrics(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
