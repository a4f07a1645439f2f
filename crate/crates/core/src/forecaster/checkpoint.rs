use std::path::Path;

use serde::{Deserialize, Serialize};

use super::lstm::LstmModel;
use super::train::TrainConfig;
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "folio-lstm/v1";

/// Self-describing JSON model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub ticker: Option<String>,
    pub model: LstmModel,
    pub train: Option<TrainConfig>,
}

pub fn save_checkpoint(
    model: &LstmModel,
    ticker: Option<&str>,
    train: Option<&TrainConfig>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let ck = Checkpoint {
        format: CHECKPOINT_FORMAT.into(),
        ticker: ticker.map(str::to_string),
        model: model.clone(),
        train: train.copied(),
    };
    let json = serde_json::to_string(&ck)?;
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ck: Checkpoint = serde_json::from_str(&text)?;
    if ck.format != CHECKPOINT_FORMAT {
        return Err(Error::Invalid(format!(
            "{}: unsupported checkpoint format {:?}",
            path.display(),
            ck.format
        )));
    }
    ck.model.validate()?;
    Ok(ck)
}
