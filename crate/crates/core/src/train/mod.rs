//! Adversarial training loops for both networks.

mod pcn;
mod tpn;

pub use pcn::{fit_pcn, load_image_dir, train_pcn, PaletteCache, PcnSample};
pub use tpn::{fit_tpn, train_tpn};

use std::io::Write;
use std::path::PathBuf;

use candle_core::Tensor;
use candle_nn::{AdamW, Optimizer, ParamsAdamW};
use serde::{Deserialize, Serialize};

use crate::nn::objective::{LossWeights, HUBER_DELTA};
use crate::nn::ParamStore;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub delta: f64,
    pub huber_weight: f64,
    pub kl_weight: f64,
    pub init_std: f64,
    pub seed: u64,
    /// Stop after this many optimizer steps even if epochs remain.
    pub max_steps: Option<usize>,
    /// Also write a checkpoint every this many epochs.
    pub checkpoint_every: Option<usize>,
    /// Where checkpoints and `history.csv` go; nothing is written without it.
    pub out_dir: Option<PathBuf>,
}

impl TrainConfig {
    pub fn tpn() -> Self {
        Self {
            learning_rate: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            epochs: 500,
            batch_size: 32,
            delta: HUBER_DELTA,
            huber_weight: 100.0,
            kl_weight: 0.5,
            init_std: 0.05,
            seed: 0,
            max_steps: None,
            checkpoint_every: None,
            out_dir: None,
        }
    }

    pub fn pcn() -> Self {
        Self {
            epochs: 100,
            batch_size: 8,
            huber_weight: 10.0,
            kl_weight: 0.0,
            ..Self::tpn()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning rate", self.learning_rate),
            ("delta", self.delta),
            ("init std", self.init_std),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::InvalidInput(format!("{name} must be in [0, 1), got {v}")));
            }
        }
        for (name, v) in [("huber weight", self.huber_weight), ("kl weight", self.kl_weight)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidInput("batch size must be positive".into()));
        }
        if self.checkpoint_every == Some(0) {
            return Err(Error::InvalidInput("checkpoint interval must be positive".into()));
        }
        Ok(())
    }

    pub fn weights(&self) -> LossWeights {
        LossWeights {
            huber: self.huber_weight,
            kl: self.kl_weight,
            delta: self.delta,
        }
    }

    fn optimizer(&self, params: &ParamStore) -> Result<AdamW> {
        Ok(AdamW::new(
            params.vars(),
            ParamsAdamW {
                lr: self.learning_rate,
                beta1: self.beta1,
                beta2: self.beta2,
                eps: 1e-8,
                weight_decay: 0.0,
            },
        )?)
    }
}

/// Mean losses over one epoch's batches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLosses {
    pub epoch: usize,
    pub d_loss: f64,
    pub g_loss: f64,
    pub huber: f64,
    pub kl: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochLosses>,
    pub steps: usize,
}

impl History {
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for e in &self.epochs {
            w.serialize(e)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn last(&self) -> Option<&EpochLosses> {
        self.epochs.last()
    }
}

#[derive(Default)]
struct Accumulator {
    batches: usize,
    d: f64,
    g: f64,
    huber: f64,
    kl: f64,
}

impl Accumulator {
    fn finish(&self, epoch: usize) -> EpochLosses {
        let n = self.batches.max(1) as f64;
        EpochLosses {
            epoch,
            d_loss: self.d / n,
            g_loss: self.g / n,
            huber: self.huber / n,
            kl: self.kl / n,
        }
    }
}

fn scalar(t: &Tensor) -> Result<f64> {
    Ok(t.to_dtype(candle_core::DType::F64)?.to_scalar::<f64>()?)
}

/// Aborts on a non-finite loss.
fn guard(step: usize, what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Diverged { step, what })
    }
}

fn write_history(config: &TrainConfig, history: &History) -> Result<()> {
    if let Some(dir) = &config.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
        let path = dir.join("history.csv");
        let file = std::fs::File::create(&path).map_err(|e| Error::file(&path, e))?;
        history.write_csv(file)?;
    }
    Ok(())
}
