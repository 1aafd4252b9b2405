//! Pipeline runner, artifact store and read-only HTTP service over the
//! `atlas-core` library.

pub mod artifacts;
pub mod config;
pub mod pipeline;
pub mod service;
pub mod stages;

use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or arguments, found before any work starts.
    #[error("validation error: {0}")]
    Validation(String),
    #[error("stage {stage} failed: {cause}")]
    Stage { stage: String, cause: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Stage { .. } => 3,
        }
    }

    pub fn stage(stage: &str, cause: impl std::fmt::Display) -> Self {
        CliError::Stage { stage: stage.to_string(), cause: cause.to_string() }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_hash(path: &Path) -> std::io::Result<String> {
    std::fs::read(path).map(|b| sha256_hex(&b))
}
