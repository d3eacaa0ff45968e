use std::collections::{BTreeMap, HashMap};

use candle_core::{DType, Device, Tensor, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::{Error, Result};

/// How a parameter is (re)initialized by [`ParamStore::init_weights`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    /// Gaussian with the configured std.
    Weight,
    /// Zero.
    Bias,
    /// One (normalization gains).
    Scale,
    /// Left alone; filled from pretrained vectors.
    Embedding,
}

#[derive(Debug, Clone)]
pub struct Param {
    pub var: Var,
    pub kind: ParamKind,
}

/// Named trainable tensors, iterated in name order so seeded initialization
/// and serialization are reproducible.
#[derive(Debug, Clone)]
pub struct ParamStore {
    dtype: DType,
    device: Device,
    params: BTreeMap<String, Param>,
}

impl ParamStore {
    pub fn new(dtype: DType) -> Self {
        Self {
            dtype,
            device: Device::Cpu,
            params: BTreeMap::new(),
        }
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn add(&mut self, name: impl Into<String>, dims: &[usize], kind: ParamKind) -> Result<Var> {
        let name = name.into();
        if self.params.contains_key(&name) {
            return Err(Error::InvalidInput(format!("duplicate parameter {name}")));
        }
        let init = match kind {
            ParamKind::Scale => Tensor::ones(dims, self.dtype, &self.device)?,
            _ => Tensor::zeros(dims, self.dtype, &self.device)?,
        };
        let var = Var::from_tensor(&init)?;
        self.params.insert(name, Param { var: var.clone(), kind });
        Ok(var)
    }

    /// Weights ~ N(0, std^2), biases 0, scales 1; embeddings untouched.
    pub fn init_weights(&self, std: f64, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, std).map_err(|e| Error::InvalidInput(e.to_string()))?;
        for p in self.params.values() {
            let shape = p.var.shape().clone();
            let value = match p.kind {
                ParamKind::Weight => {
                    let data: Vec<f64> = (0..shape.elem_count()).map(|_| normal.sample(&mut rng)).collect();
                    Tensor::from_vec(data, shape, &self.device)?.to_dtype(self.dtype)?
                }
                ParamKind::Bias => Tensor::zeros(shape, self.dtype, &self.device)?,
                ParamKind::Scale => Tensor::ones(shape, self.dtype, &self.device)?,
                ParamKind::Embedding => continue,
            };
            p.var.set(&value)?;
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Param> {
        self.params.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Param)> {
        self.params.iter()
    }

    pub fn vars(&self) -> Vec<Var> {
        self.params.values().map(|p| p.var.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn num_elements(&self) -> usize {
        self.params.values().map(|p| p.var.elem_count()).sum()
    }

    /// Snapshot of every parameter, detached from the autograd graph.
    pub fn tensors(&self) -> Result<BTreeMap<String, Tensor>> {
        self.params
            .iter()
            .map(|(k, p)| Ok((k.clone(), p.var.as_tensor().copy()?.detach())))
            .collect()
    }

    /// Overwrites every parameter from `tensors`; all names must be present
    /// with matching shapes.
    pub fn load(&self, tensors: &HashMap<String, Tensor>) -> Result<()> {
        for (name, p) in &self.params {
            let t = tensors
                .get(name)
                .ok_or_else(|| Error::Checkpoint(format!("missing tensor {name}")))?;
            if t.dims() != p.var.dims() {
                return Err(Error::Checkpoint(format!(
                    "tensor {name} has shape {:?}, expected {:?}",
                    t.dims(),
                    p.var.dims()
                )));
            }
            p.var.set(&t.to_dtype(self.dtype)?)?;
        }
        Ok(())
    }
}
