//! Named parameter storage with reproducible initialization.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::{Arc, Mutex};

use candle::{DType, Device, Shape, Tensor, Var};
use candle_nn::init::{FanInOut, NormalOrUniform};
use candle_nn::var_builder::SimpleBackend;
use candle_nn::{Init, VarBuilder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::{Error, Result};

struct Inner {
    vars: BTreeMap<String, Var>,
    pending: HashMap<String, Tensor>,
    rng: ChaCha8Rng,
    zeros: bool,
    strict: bool,
}

/// A shared map from parameter names to variables.
///
/// Parameters are created on first request through a [`VarBuilder`]. Values
/// come, in order of preference, from tensors staged with [`stage`], or
/// from the layer's init hint sampled with a seeded generator. Creation
/// order is fixed by model construction, so a seed fixes every value.
///
/// [`stage`]: ParamStore::stage
#[derive(Clone)]
pub struct ParamStore {
    inner: Arc<Mutex<Inner>>,
}

impl std::fmt::Debug for ParamStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let inner = self.inner.lock().unwrap();
        f.debug_struct("ParamStore")
            .field("vars", &inner.vars.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl ParamStore {
    pub fn seeded(seed: u64) -> Self {
        Self::build(seed, false)
    }

    /// Every parameter starts at zero regardless of its init hint.
    pub fn zeros() -> Self {
        Self::build(0, true)
    }

    fn build(seed: u64, zeros: bool) -> Self {
        ParamStore {
            inner: Arc::new(Mutex::new(Inner {
                vars: BTreeMap::new(),
                pending: HashMap::new(),
                rng: ChaCha8Rng::seed_from_u64(seed),
                zeros,
                strict: false,
            })),
        }
    }

    pub fn var_builder(&self, dtype: DType, device: &Device) -> VarBuilder<'static> {
        VarBuilder::from_backend(Box::new(self.clone()), dtype, device.clone())
    }

    /// Values to use instead of sampling when the named parameters get created.
    pub fn stage(&self, tensors: impl IntoIterator<Item = (String, Tensor)>) {
        self.inner.lock().unwrap().pending.extend(tensors);
    }

    /// In strict mode a parameter without a staged value is an error.
    pub fn set_strict(&self, strict: bool) {
        self.inner.lock().unwrap().strict = strict;
    }

    pub fn clear_staged(&self) {
        self.inner.lock().unwrap().pending.clear();
    }

    /// Variables sorted by name.
    pub fn named_vars(&self) -> Vec<(String, Var)> {
        let inner = self.inner.lock().unwrap();
        inner.vars.iter().map(|(k, v)| (k.clone(), v.clone())).collect()
    }

    pub fn vars(&self) -> Vec<Var> {
        self.named_vars().into_iter().map(|(_, v)| v).collect()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Deep copies of every current value.
    pub fn snapshot(&self) -> Result<BTreeMap<String, Tensor>> {
        self.named_vars()
            .into_iter()
            .map(|(k, v)| Ok((k, v.as_tensor().copy()?)))
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let tensors: HashMap<String, Tensor> = self
            .named_vars()
            .into_iter()
            .map(|(k, v)| (k, v.as_tensor().clone()))
            .collect();
        candle::safetensors::save(&tensors, path).map_err(|e| Error::Checkpoint {
            path: path.to_owned(),
            reason: e.to_string(),
        })
    }

    fn sample(inner: &mut Inner, shape: &Shape, init: Init) -> Vec<f64> {
        let n = shape.elem_count();
        if inner.zeros {
            return vec![0.0; n];
        }
        let rng = &mut inner.rng;
        let uniform = |rng: &mut ChaCha8Rng, lo: f64, up: f64| -> Vec<f64> {
            if up <= lo {
                vec![lo; n]
            } else {
                (0..n).map(|_| rng.random_range(lo..up)).collect()
            }
        };
        let normal = |rng: &mut ChaCha8Rng, mean: f64, std: f64| -> Vec<f64> {
            match Normal::new(mean, std) {
                Ok(d) => (0..n).map(|_| d.sample(rng)).collect(),
                Err(_) => vec![mean; n],
            }
        };
        match init {
            Init::Const(v) => vec![v; n],
            Init::Randn { mean, stdev } => normal(rng, mean, stdev),
            Init::Uniform { lo, up } => uniform(rng, lo, up),
            Init::Kaiming {
                dist,
                fan,
                non_linearity,
            } => {
                let fan = match fan {
                    FanInOut::FanIn => FanInOut::FanIn.for_shape(shape),
                    FanInOut::FanOut => FanInOut::FanOut.for_shape(shape),
                };
                let std = non_linearity.gain() / (fan.max(1) as f64).sqrt();
                match dist {
                    NormalOrUniform::Uniform => {
                        let bound = 3f64.sqrt() * std;
                        uniform(rng, -bound, bound)
                    }
                    NormalOrUniform::Normal => normal(rng, 0.0, std),
                }
            }
        }
    }
}

impl SimpleBackend for ParamStore {
    fn get(&self, shape: Shape, name: &str, init: Init, dtype: DType, dev: &Device) -> candle::Result<Tensor> {
        let mut inner = self.inner.lock().unwrap();
        if let Some(var) = inner.vars.get(name) {
            if var.shape() != &shape {
                candle::bail!("shape mismatch on {name}: {shape:?} <> {:?}", var.shape())
            }
            return Ok(var.as_tensor().clone());
        }
        let value = if let Some(staged) = inner.pending.remove(name) {
            if staged.shape() != &shape {
                candle::bail!("stored {name} has shape {:?}, expected {shape:?}", staged.shape())
            }
            staged.to_dtype(dtype)?.to_device(dev)?
        } else if inner.strict {
            candle::bail!("no stored value for parameter {name}")
        } else {
            let values = Self::sample(&mut inner, &shape, init);
            Tensor::from_vec(values, shape, dev)?.to_dtype(dtype)?
        };
        let var = Var::from_tensor(&value)?;
        let tensor = var.as_tensor().clone();
        inner.vars.insert(name.to_owned(), var);
        Ok(tensor)
    }

    fn get_unchecked(&self, name: &str, dtype: DType, dev: &Device) -> candle::Result<Tensor> {
        let mut inner = self.inner.lock().unwrap();
        if let Some(var) = inner.vars.get(name) {
            return Ok(var.as_tensor().clone());
        }
        match inner.pending.remove(name) {
            Some(staged) => {
                let var = Var::from_tensor(&staged.to_dtype(dtype)?.to_device(dev)?)?;
                let tensor = var.as_tensor().clone();
                inner.vars.insert(name.to_owned(), var);
                Ok(tensor)
            }
            None => candle::bail!("no parameter named {name}"),
        }
    }

    fn contains_tensor(&self, name: &str) -> bool {
        let inner = self.inner.lock().unwrap();
        inner.vars.contains_key(name) || inner.pending.contains_key(name)
    }
}

/// Reads a safetensors file into memory.
pub fn read_safetensors(path: &Path, device: &Device) -> Result<HashMap<String, Tensor>> {
    candle::safetensors::load(path, device).map_err(|e| Error::Checkpoint {
        path: path.to_owned(),
        reason: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_values() {
        let make = |seed| {
            let store = ParamStore::seeded(seed);
            let vb = store.var_builder(DType::F32, &Device::Cpu);
            candle_nn::linear(3, 2, vb.pp("l")).unwrap();
            store.snapshot().unwrap()["l.weight"].to_vec2::<f32>().unwrap()
        };
        assert_eq!(make(1), make(1));
        assert_ne!(make(1), make(2));
    }

    #[test]
    fn staged_and_strict() {
        let store = ParamStore::seeded(0);
        store.stage([("w".to_owned(), Tensor::ones((2, 2), DType::F32, &Device::Cpu).unwrap())]);
        store.set_strict(true);
        let vb = store.var_builder(DType::F32, &Device::Cpu);
        let w = vb.get((2, 2), "w").unwrap();
        assert_eq!(w.sum_all().unwrap().to_scalar::<f32>().unwrap(), 4.0);
        assert!(vb.get((2, 2), "missing").is_err());
    }
}
