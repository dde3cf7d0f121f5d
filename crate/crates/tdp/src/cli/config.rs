//! Layered configuration: built-in defaults, then a TOML file, then flags.
//!
//! ```toml
//! [model]
//! ffn_hidden_dim = 64
//! activation = "relu"
//!
//! [model.encoder]
//! variant = "FROZEN_CONTEXTUAL_RECURRENT"
//! contextual_model_name = "models/bert-base-uncased"
//!
//! [train]
//! learning_rate = 0.0005
//! epochs = 75
//!
//! [grid]
//! learning_rates = [0.001, 0.0005]
//! epochs = [50, 100]
//! ```

use std::path::Path;

use anyhow::{bail, Context};
use serde::de::DeserializeOwned;
use serde::Serialize;
use toml::{Table, Value};

use tdp_neural::{EncoderVariant, GridSpec, ModelConfig, TrainConfig};

#[derive(Debug, Default)]
pub struct ConfigFile {
    table: Table,
}

impl ConfigFile {
    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let table: Table = text.parse().with_context(|| format!("parsing config {}", path.display()))?;
        for key in table.keys() {
            if !matches!(key.as_str(), "model" | "train" | "grid") {
                bail!("{}: unknown section `{key}`", path.display());
            }
        }
        Ok(ConfigFile { table })
    }

    pub fn variant(&self) -> anyhow::Result<Option<EncoderVariant>> {
        let found = self
            .table
            .get("model")
            .and_then(|m| m.get("encoder"))
            .and_then(|e| e.get("variant"));
        match found {
            None => Ok(None),
            Some(v) => Ok(Some(v.clone().try_into().context("model.encoder.variant")?)),
        }
    }

    /// `ModelConfig::new(variant)` with the `[model]` section laid over it.
    pub fn model(&self, variant: EncoderVariant) -> anyhow::Result<ModelConfig> {
        layer(ModelConfig::new(variant), self.table.get("model"), "model")
    }

    pub fn train(&self) -> anyhow::Result<TrainConfig> {
        layer(TrainConfig::default(), self.table.get("train"), "train")
    }

    pub fn grid(&self) -> anyhow::Result<GridSpec> {
        layer(GridSpec::default(), self.table.get("grid"), "grid")
    }
}

fn layer<T: Serialize + DeserializeOwned>(base: T, overlay: Option<&Value>, section: &str) -> anyhow::Result<T> {
    let Some(overlay) = overlay else {
        return Ok(base);
    };
    let mut value = Value::try_from(base)?;
    merge(&mut value, overlay);
    value.try_into().with_context(|| format!("config section [{section}]"))
}

fn merge(base: &mut Value, overlay: &Value) {
    match (base, overlay) {
        (Value::Table(b), Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}
