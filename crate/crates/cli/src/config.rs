use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Invalid(_) => 2,
            Self::Infeasible(_) => 3,
            Self::Io(_) => 1,
        }
    }
}

impl From<ratetest_core::Error> for CliError {
    fn from(e: ratetest_core::Error) -> Self {
        match e {
            ratetest_core::Error::Infeasible { .. } => Self::Infeasible(e.to_string()),
            other => Self::Invalid(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

/// Values from the optional JSON config file, overridden by every flag that was given.
pub fn resolve<T: Serialize + DeserializeOwned>(config: Option<&Path>, flags: &T) -> CliResult<T> {
    let mut base = match config {
        Some(path) => match read_json::<Value>(path)? {
            Value::Object(map) => map,
            _ => return Err(invalid(format!("{}: config must be a JSON object", path.display()))),
        },
        None => Map::new(),
    };
    let overlay = serde_json::to_value(flags).map_err(|e| invalid(e.to_string()))?;
    if let Value::Object(map) = overlay {
        for (k, v) in map {
            if !v.is_null() {
                base.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(base)).map_err(|e| invalid(format!("config: {e}")))
}

pub fn required<T>(value: Option<T>, name: &str) -> CliResult<T> {
    value.ok_or_else(|| invalid(format!("missing required value `{name}`")))
}
