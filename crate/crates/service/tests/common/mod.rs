#![allow(dead_code)]

use std::path::{Path, PathBuf};

use candle_core::DType;
use pf_core::checkpoint;
use pf_core::data::synthetic::synthetic_pat;
use pf_core::data::{random_embeddings, PatRecord, Vocabulary};
use pf_core::pcn::{PcnConfig, PcnModel};
use pf_core::tpn::{TpnConfig, TpnModel};

pub fn small_tpn_config() -> TpnConfig {
    TpnConfig {
        encoder_hidden: 12,
        condition_dim: 8,
        decoder_hidden: 12,
        attention_dim: 8,
        discriminator_hidden: vec![8],
    }
}

pub fn small_pcn_config() -> PcnConfig {
    PcnConfig {
        resolution: 16,
        widths: [4, 6, 8, 10],
        discriminator_widths: vec![4, 6],
    }
}

pub fn records() -> Vec<PatRecord> {
    synthetic_pat(12, 4)
}

/// Randomly initialized models saved to `dir`; returns (tpn path, pcn path).
pub fn write_checkpoints(dir: &Path) -> (PathBuf, PathBuf) {
    let recs = records();
    let vocab = Vocabulary::from_texts(recs.iter().map(|r| r.text.as_str()));
    let emb = random_embeddings(&vocab, 1);
    let tpn = TpnModel::new(small_tpn_config(), vocab, &emb, DType::F32).unwrap();
    tpn.init_weights(0.3, 5).unwrap();
    let pcn = PcnModel::new(small_pcn_config(), DType::F32).unwrap();
    pcn.init_weights(0.3, 6).unwrap();
    let (t, p) = (dir.join("tpn.safetensors"), dir.join("pcn.safetensors"));
    checkpoint::save(&t, Some(&tpn), None).unwrap();
    checkpoint::save(&p, None, Some(&pcn)).unwrap();
    (t, p)
}
