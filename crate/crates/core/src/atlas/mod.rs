//! Map artifacts, caption labels and the filter query engine.

use std::path::Path;

use thiserror::Error;

pub mod map;
pub mod query;
pub mod rules;

pub use map::{
    axis_profile, build_ccp_map, build_lda_map, default_anchors, element_overlay, export_map, import_map, place_labels, AxisAnchor,
    AxisProfile, LabelAxes, MapDocument, MapPoint, MapType, OverlayMode, PlacedLabel, topic_name,
};
pub use query::{parse_filter, FilterExpr, QueryIndex, QueryResult};
pub use rules::{default_rules, label_caption, label_captions, LabelRule, RuleSet};

#[derive(Debug, Error)]
pub enum AtlasError {
    #[error("label rules: {0}")]
    Rules(String),
    #[error("{0}")]
    Invalid(String),
    #[error("misaligned inputs: {0}")]
    Alignment(String),
    #[error("unknown element {0:?}")]
    UnknownElement(String),
    #[error("unknown topic {0:?}")]
    UnknownTopic(String),
    #[error("unknown caption label {0:?}")]
    UnknownLabel(String),
    #[error("syntax error at {position}: {message}")]
    Parse { message: String, position: usize },
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl AtlasError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        AtlasError::Io { path: path.display().to_string(), message: e.to_string() }
    }

    /// Byte offset of a syntax error.
    pub fn position(&self) -> Option<usize> {
        match self {
            AtlasError::Parse { position, .. } => Some(*position),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, AtlasError>;
