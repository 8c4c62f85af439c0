use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] l22embed::Error),
    #[error("cannot read {0}: {1}")]
    Read(PathBuf, std::io::Error),
    #[error("cannot write output: {0}")]
    Write(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Lib(e) => e.kind(),
            CliError::Read(..) => "Read",
            CliError::Write(_) => "Write",
            CliError::Json(_) => "Json",
            CliError::Usage(_) => "Usage",
        }
    }

    /// 2 for bad input, 1 for failures on our side.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(e) if !e.is_validation() => 1,
            CliError::Write(_) | CliError::Json(_) => 1,
            _ => 2,
        }
    }
}

/// Writes to `path` through a temporary file in the same directory, or to stdout.
pub fn emit(text: String, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
        Some(p) => {
            let dir = p
                .parent()
                .filter(|d| !d.as_os_str().is_empty())
                .unwrap_or(Path::new("."));
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(text.as_bytes())?;
            tmp.persist(p).map_err(|e| e.error)?;
        }
    }
    Ok(())
}

fn cell(v: &Value) -> String {
    match v {
        Value::Array(a) if a.len() > 8 => format!("[{} items]", a.len()),
        Value::Object(_) => "{...}".into(),
        other => other.to_string(),
    }
}

/// Two-column rendering of the top-level fields; nested objects get one level of detail.
pub fn table(v: &Value) -> String {
    let mut lines = Vec::new();
    if let Value::Object(map) = v {
        let nested = map
            .values()
            .filter_map(Value::as_object)
            .flat_map(|m| m.keys().map(|k| k.len() + 2));
        let width = map.keys().map(|k| k.len()).chain(nested).max().unwrap_or(0) + 2;
        for (k, val) in map {
            match val {
                Value::Object(inner) => {
                    lines.push(k.to_string());
                    for (ik, iv) in inner {
                        lines.push(format!("  {ik:<w$}{}", cell(iv), w = width - 2));
                    }
                }
                _ => lines.push(format!("{k:<width$}{}", cell(val))),
            }
        }
    }
    lines.push(String::new());
    lines.join("\n")
}
