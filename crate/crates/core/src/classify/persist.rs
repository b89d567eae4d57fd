//! Versioned JSON model files. Each file records a hash of the vocabulary it was
//! trained on, checked again on load.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::svm::LinearModel;
use super::text::TextModel;
use crate::error::{Result, StanceError};
use crate::features::Vocabulary;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SavedModel {
    Svm {
        vocabulary: Vocabulary,
        model: LinearModel,
    },
    Text {
        model: TextModel,
    },
}

impl SavedModel {
    pub fn vocabulary_terms(&self) -> &[String] {
        match self {
            SavedModel::Svm { vocabulary, .. } => vocabulary.terms(),
            SavedModel::Text { model } => model.vocab(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    vocab_hash: String,
    #[serde(flatten)]
    model: SavedModel,
}

/// 64-bit FNV-1a over the terms, each followed by a newline, as 16 hex digits.
pub fn vocab_hash(terms: &[String]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for t in terms {
        for b in t.bytes().chain(std::iter::once(b'\n')) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

pub fn model_to_json(model: &SavedModel) -> String {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        vocab_hash: vocab_hash(model.vocabulary_terms()),
        model: model.clone(),
    };
    serde_json::to_string(&file).expect("models serialize")
}

pub fn model_from_json(raw: &str) -> Result<SavedModel> {
    let file: ModelFile =
        serde_json::from_str(raw).map_err(|e| StanceError::parse(e.line(), format!("model file: {e}")))?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(StanceError::Config(format!(
            "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
            file.format_version
        )));
    }
    let actual = vocab_hash(file.model.vocabulary_terms());
    if actual != file.vocab_hash {
        return Err(StanceError::Config(format!(
            "vocabulary hash mismatch: file says {}, contents hash to {actual}",
            file.vocab_hash
        )));
    }
    Ok(file.model)
}

pub fn save_model(path: &Path, model: &SavedModel) -> Result<()> {
    fs::write(path, model_to_json(model)).map_err(|e| StanceError::io(path, e))
}

pub fn load_model(path: &Path) -> Result<SavedModel> {
    let raw = fs::read_to_string(path).map_err(|e| StanceError::io(path, e))?;
    model_from_json(&raw)
}
