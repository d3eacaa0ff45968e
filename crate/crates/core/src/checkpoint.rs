//! Versioned checkpoint container.
//!
//! A checkpoint is a safetensors file holding one or both model sections.
//! Tensors are named `{section}/{g|d}/{param}` and stored as little-endian
//! f32. Header metadata carries the format tag, version, section list, each
//! section's JSON config plus its sha256, and the TPN vocabulary.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use candle_core::{DType, Device, Tensor};
use safetensors::tensor::{Dtype, TensorView};
use safetensors::SafeTensors;
use sha2::{Digest, Sha256};

use crate::data::{EmbeddingMatrix, Vocabulary};
use crate::nn::ParamStore;
use crate::pcn::{PcnConfig, PcnModel};
use crate::tpn::{TpnConfig, TpnModel};
use crate::{Error, Result};

pub const FORMAT: &str = "palette-forge-checkpoint";
pub const VERSION: &str = "1";

const TPN: &str = "tpn";
const PCN: &str = "pcn";

/// Lowercase hex sha256 of a file's bytes.
pub fn file_sha256(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::file(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn sha256_str(s: &str) -> String {
    hex::encode(Sha256::digest(s.as_bytes()))
}

struct Section {
    name: &'static str,
    config: String,
    tensors: Vec<(String, Vec<usize>, Vec<u8>)>,
}

fn collect(prefix: &str, store: &ParamStore, out: &mut Vec<(String, Vec<usize>, Vec<u8>)>) -> Result<()> {
    for (name, t) in store.tensors()? {
        let values = t.to_dtype(DType::F32)?.flatten_all()?.to_vec1::<f32>()?;
        let bytes = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        out.push((format!("{prefix}/{name}"), t.dims().to_vec(), bytes));
    }
    Ok(())
}

fn section(name: &'static str, config: String, g: &ParamStore, d: &ParamStore) -> Result<Section> {
    let mut tensors = Vec::new();
    collect(&format!("{name}/g"), g, &mut tensors)?;
    collect(&format!("{name}/d"), d, &mut tensors)?;
    Ok(Section { name, config, tensors })
}

/// Writes the given models into one checkpoint file.
pub fn save(path: impl AsRef<Path>, tpn: Option<&TpnModel>, pcn: Option<&PcnModel>) -> Result<()> {
    let mut sections = Vec::new();
    let mut meta = HashMap::new();
    if let Some(m) = tpn {
        let s = section(TPN, serde_json::to_string(&m.config)?, m.generator_params(), m.discriminator_params())?;
        meta.insert(format!("{TPN}.vocab"), serde_json::to_string(&m.vocab)?);
        sections.push(s);
    }
    if let Some(m) = pcn {
        sections.push(section(PCN, serde_json::to_string(&m.config)?, m.generator_params(), m.discriminator_params())?);
    }
    if sections.is_empty() {
        return Err(Error::Checkpoint("nothing to save".into()));
    }
    meta.insert("format".into(), FORMAT.into());
    meta.insert("version".into(), VERSION.into());
    meta.insert(
        "sections".into(),
        sections.iter().map(|s| s.name).collect::<Vec<_>>().join(","),
    );
    for s in &sections {
        meta.insert(format!("{}.config_hash", s.name), sha256_str(&s.config));
        meta.insert(format!("{}.config", s.name), s.config.clone());
    }
    let views = sections
        .iter()
        .flat_map(|s| &s.tensors)
        .map(|(name, shape, bytes)| {
            TensorView::new(Dtype::F32, shape.clone(), bytes)
                .map(|v| (name.clone(), v))
                .map_err(|e| Error::Checkpoint(e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let bytes = safetensors::serialize(views, Some(meta)).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::file(path, e))
}

/// A parsed checkpoint file.
pub struct Checkpoint {
    meta: HashMap<String, String>,
    tensors: BTreeMap<String, Tensor>,
}

impl Checkpoint {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::file(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |e: safetensors::SafeTensorError| Error::Checkpoint(e.to_string());
        let (_, header) = SafeTensors::read_metadata(bytes).map_err(bad)?;
        let meta = header.metadata().clone().unwrap_or_default();
        match meta.get("format").map(String::as_str) {
            Some(FORMAT) => {}
            other => return Err(Error::Checkpoint(format!("unrecognized format {other:?}"))),
        }
        match meta.get("version").map(String::as_str) {
            Some(VERSION) => {}
            other => return Err(Error::Checkpoint(format!("unsupported version {other:?}"))),
        }
        let file = SafeTensors::deserialize(bytes).map_err(bad)?;
        let mut tensors = BTreeMap::new();
        for (name, view) in file.tensors() {
            if view.dtype() != Dtype::F32 {
                return Err(Error::Checkpoint(format!("tensor {name} is {:?}, expected F32", view.dtype())));
            }
            let values: Vec<f32> = view
                .data()
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            tensors.insert(name, Tensor::from_vec(values, view.shape(), &Device::Cpu)?);
        }
        Ok(Self { meta, tensors })
    }

    pub fn sections(&self) -> Vec<&str> {
        self.meta
            .get("sections")
            .map(|s| s.split(',').filter(|s| !s.is_empty()).collect())
            .unwrap_or_default()
    }

    pub fn has(&self, section: &str) -> bool {
        self.sections().contains(&section)
    }

    fn meta(&self, key: &str) -> Result<&str> {
        self.meta
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Checkpoint(format!("missing metadata {key}")))
    }

    fn config<T: serde::de::DeserializeOwned>(&self, section: &str) -> Result<T> {
        if !self.has(section) {
            return Err(Error::Checkpoint(format!("checkpoint has no {section} section")));
        }
        let json = self.meta(&format!("{section}.config"))?;
        if sha256_str(json) != self.meta(&format!("{section}.config_hash"))? {
            return Err(Error::Checkpoint(format!("{section} config hash mismatch")));
        }
        Ok(serde_json::from_str(json)?)
    }

    fn params(&self, prefix: &str) -> HashMap<String, Tensor> {
        let prefix = format!("{prefix}/");
        self.tensors
            .iter()
            .filter_map(|(k, t)| k.strip_prefix(&prefix).map(|n| (n.to_string(), t.clone())))
            .collect()
    }

    pub fn tpn(&self, dtype: DType) -> Result<TpnModel> {
        let config: TpnConfig = self.config(TPN)?;
        let vocab: Vocabulary = serde_json::from_str(self.meta(&format!("{TPN}.vocab"))?)?;
        let rows = vocab.len();
        let model = TpnModel::new(config, vocab, &EmbeddingMatrix::zeros(rows), dtype)?;
        model.generator_params().load(&self.params("tpn/g"))?;
        model.discriminator_params().load(&self.params("tpn/d"))?;
        Ok(model)
    }

    pub fn pcn(&self, dtype: DType) -> Result<PcnModel> {
        let config: PcnConfig = self.config(PCN)?;
        let model = PcnModel::new(config, dtype)?;
        model.generator_params().load(&self.params("pcn/g"))?;
        model.discriminator_params().load(&self.params("pcn/d"))?;
        Ok(model)
    }
}

pub fn load_tpn(path: impl AsRef<Path>) -> Result<TpnModel> {
    Checkpoint::read(path)?.tpn(DType::F32)
}

pub fn load_pcn(path: impl AsRef<Path>) -> Result<PcnModel> {
    Checkpoint::read(path)?.pcn(DType::F32)
}
