use std::path::{Path, PathBuf};

use crate::attribute_model::AttributeModel;
use crate::error::{Error, Result};

pub fn save_model(path: impl AsRef<Path>, model: &AttributeModel) -> Result<()> {
    let json = serde_json::to_string_pretty(model)
        .map_err(|e| Error::format(format!("cannot encode model: {e}")))?;
    std::fs::write(path, json + "\n")?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<AttributeModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let model: AttributeModel = serde_json::from_str(&text)
        .map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
    if model.weights.is_empty() {
        return Err(Error::format(format!(
            "{}: model has no weights",
            path.display()
        )));
    }
    Ok(model)
}

/// Writes `<dir>/<attribute_name>.json` for each model and returns the paths.
pub fn save_models(dir: impl AsRef<Path>, models: &[AttributeModel]) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    models
        .iter()
        .map(|m| {
            if m.attribute_name.is_empty()
                || m.attribute_name.contains(['/', '\\'])
                || m.attribute_name.starts_with('.')
            {
                return Err(Error::input(format!(
                    "attribute name {:?} is not usable as a file name",
                    m.attribute_name
                )));
            }
            let path = dir.join(format!("{}.json", m.attribute_name));
            save_model(&path, m)?;
            Ok(path)
        })
        .collect()
}

/// Loads every `*.json` model in `dir`, ordered by file name.
pub fn load_models_dir(dir: impl AsRef<Path>) -> Result<Vec<AttributeModel>> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::input(format!("no model files in {}", dir.display())));
    }
    let models = paths.iter().map(load_model).collect::<Result<Vec<_>>>()?;
    let dim = models[0].dim();
    if let Some(m) = models.iter().find(|m| m.dim() != dim) {
        return Err(Error::input(format!(
            "model {:?} has dimension {}, expected {dim}",
            m.attribute_name,
            m.dim()
        )));
    }
    Ok(models)
}
