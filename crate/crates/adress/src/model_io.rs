//! Trained models as JSON documents carrying the kind, hyperparameters,
//! seed, training column names and fitted parameters.

use std::path::Path;

use adress_core::learners::TrainedModel;

use crate::error::{io, Error, Result};

pub fn save_model(path: &Path, model: &TrainedModel) -> Result<()> {
    let json = serde_json::to_string_pretty(model).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    std::fs::write(path, json).map_err(io(path))
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}
