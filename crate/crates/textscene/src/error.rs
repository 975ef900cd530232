use std::io;
use std::path::{Path, PathBuf};

use textscene_core::corpus::CorpusError;
use textscene_core::metrics::MetricError;
use textscene_core::model::ModelError;
use textscene_core::render::RenderError;
use textscene_core::scene::SceneError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad input: flags, config values, malformed or mismatched files.
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Missing { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: checksum mismatch")]
    Checksum { path: PathBuf },
    #[error("{0}")]
    Runtime(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

pub type Result<T> = std::result::Result<T, Error>;

pub const EXIT_INVALID: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        Error::Io { path: path.to_path_buf(), source }
    }

    /// Opening an input: a missing file is a validation error.
    pub fn open(path: &Path, source: io::Error) -> Self {
        if source.kind() == io::ErrorKind::NotFound {
            Error::Missing { path: path.to_path_buf(), source }
        } else {
            Error::io(path, source)
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Runtime(_) | Error::Model(_) => EXIT_RUNTIME,
            Error::Render(RenderError::Placement { .. }) => EXIT_RUNTIME,
            _ => EXIT_INVALID,
        }
    }

    pub fn kind(&self) -> &'static str {
        if self.exit_code() == EXIT_INVALID {
            "validation"
        } else {
            "runtime"
        }
    }

    /// One JSON line for stderr.
    pub fn to_line(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

pub fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::open(path, e))
}

pub fn read_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::open(path, e))
}

pub fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Runtime(e.to_string()))?;
    text.push('\n');
    write(path, text)
}
