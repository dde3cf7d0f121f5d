//! Saving and loading trained models.
//!
//! A checkpoint is a directory:
//!
//! ```text
//! model.json            configuration and word vocabulary
//! weights.safetensors   trainable parameters
//! frozen.safetensors    frozen contextual encoder (bilstm-bert only)
//! contextual/           config.json and tokenizer.json (contextual variants)
//! ```

use std::path::Path;

use candle::Device;
use serde::{Deserialize, Serialize};

use crate::contextual::ContextualAssets;
use crate::model::{ModelConfig, RankerModel, Source};
use crate::params::{read_safetensors, ParamStore};
use crate::vocab::Vocabulary;
use crate::{Error, Result};

const FORMAT: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: u32,
    config: ModelConfig,
    vocabulary: Option<Vocabulary>,
}

fn fail(path: &Path, reason: impl ToString) -> Error {
    Error::Checkpoint {
        path: path.to_owned(),
        reason: reason.to_string(),
    }
}

impl RankerModel {
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| fail(dir, e))?;
        let manifest = Manifest {
            format: FORMAT,
            config: self.config().clone(),
            vocabulary: self.vocabulary().cloned(),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(dir.join("model.json"), text).map_err(|e| fail(dir, e))?;
        self.trainable().save(dir.join("weights.safetensors"))?;
        if !self.frozen().is_empty() {
            self.frozen().save(dir.join("frozen.safetensors"))?;
        }
        if let Some(assets) = self.contextual_assets() {
            let sub = dir.join("contextual");
            std::fs::create_dir_all(&sub).map_err(|e| fail(&sub, e))?;
            assets.save_description(&sub)?;
        }
        Ok(())
    }

    /// Loads a checkpoint; every parameter must be present with the right shape.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest_path = dir.join("model.json");
        let text = std::fs::read_to_string(&manifest_path).map_err(|e| fail(dir, format!("cannot read model.json: {e}")))?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| fail(dir, format!("model.json: {e}")))?;
        if manifest.format != FORMAT {
            return Err(fail(dir, format!("unsupported format {}", manifest.format)));
        }
        let assets = if manifest.config.encoder.variant.is_contextual() {
            let sub = dir.join("contextual");
            Some(ContextualAssets::from_dir(&sub, false).map_err(|e| fail(dir, e))?)
        } else {
            None
        };

        let device = Device::Cpu;
        let stores = |file: &str| -> Result<ParamStore> {
            let store = ParamStore::seeded(0);
            let path = dir.join(file);
            if path.is_file() {
                store.stage(read_safetensors(&path, &device)?);
            }
            store.set_strict(true);
            Ok(store)
        };
        let trainable = stores("weights.safetensors")?;
        let frozen = stores("frozen.safetensors")?;
        let model = RankerModel::assemble(
            manifest.config,
            trainable.clone(),
            frozen.clone(),
            Source::Stored {
                vocabulary: manifest.vocabulary,
                assets,
            },
        )
        .map_err(|e| fail(dir, e))?;
        trainable.set_strict(false);
        frozen.set_strict(false);
        Ok(model)
    }
}
