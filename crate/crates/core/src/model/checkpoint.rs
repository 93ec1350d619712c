use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{build_model, Model, ModelSpec};
use crate::error::{Error, Result};

/// Serialised model: the model spec plus the raw parameters of each named segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub spec: ModelSpec,
    pub segments: BTreeMap<String, Vec<f64>>,
}

impl Checkpoint {
    pub fn from_model(model: &Model) -> Self {
        let segments = model
            .segments()
            .iter()
            .map(|s| (s.name.clone(), model.params()[s.offset..s.offset + s.len].to_vec()))
            .collect();
        Self { spec: model.spec().clone(), segments }
    }

    pub fn into_model(self) -> Result<Model> {
        let mut model = build_model(&self.spec)?;
        let layout = model.segments().to_vec();
        if layout.len() != self.segments.len() {
            return Err(Error::Data(format!(
                "checkpoint has {} segments, spec expects {}",
                self.segments.len(),
                layout.len()
            )));
        }
        for seg in layout {
            let values = self
                .segments
                .get(&seg.name)
                .ok_or_else(|| Error::Data(format!("checkpoint lacks segment '{}'", seg.name)))?;
            if values.len() != seg.len {
                return Err(Error::DimensionMismatch { expected: seg.len, actual: values.len() });
            }
            model.params_mut()[seg.offset..seg.offset + seg.len].copy_from_slice(values);
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
