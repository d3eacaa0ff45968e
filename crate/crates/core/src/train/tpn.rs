use candle_core::{DType, Device, Tensor};
use candle_nn::Optimizer;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{guard, scalar, write_history, Accumulator, History, TrainConfig};
use crate::checkpoint;
use crate::color::PALETTE_DIM;
use crate::data::{EmbeddingMatrix, PatRecord, Vocabulary};
use crate::nn::objective::discriminator_loss_t;
use crate::tpn::{TpnConfig, TpnModel};
use crate::{Error, Result};

/// Builds a model over `vocab`/`embeddings`, initializes it from
/// `config.seed` and trains it on `records`.
pub fn train_tpn(
    records: &[PatRecord],
    vocab: Vocabulary,
    embeddings: &EmbeddingMatrix,
    model_config: TpnConfig,
    config: &TrainConfig,
) -> Result<(TpnModel, History)> {
    config.validate()?;
    let model = TpnModel::new(model_config, vocab, embeddings, DType::F32)?;
    model.init_weights(config.init_std, config.seed)?;
    let history = fit_tpn(&model, records, config)?;
    Ok((model, history))
}

/// Alternating discriminator/generator updates on an existing model.
///
/// Each step samples noise, runs the generator once, updates D on
/// `(c̄, y)` vs `(c̄, ŷ)` and then G against the updated D. `c̄` is held fixed
/// (detached) inside D in both updates so the conditioning is shaped only
/// by the reconstruction and KL terms.
pub fn fit_tpn(model: &TpnModel, records: &[PatRecord], config: &TrainConfig) -> Result<History> {
    config.validate()?;
    if records.is_empty() {
        return Err(Error::TooFewRecords { found: 0, needed: 1 });
    }
    let weights = config.weights();
    let mut opt_g = config.optimizer(model.generator_params())?;
    let mut opt_d = config.optimizer(model.discriminator_params())?;
    let mut noise_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let encoded: Vec<Vec<u32>> = records.iter().map(|r| model.vocab.encode(&r.text).ids).collect();
    let targets: Vec<[f32; PALETTE_DIM]> = records.iter().map(|r| r.palette.to_normalized()).collect();

    let mut history = History::default();
    let mut order: Vec<usize> = (0..records.len()).collect();
    'epochs: for epoch in 1..=config.epochs {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(epoch as u64)));
        let mut acc = Accumulator::default();
        for chunk in order.chunks(config.batch_size) {
            if config.max_steps.is_some_and(|m| history.steps >= m) {
                break;
            }
            let step = history.steps + 1;
            let rows: Vec<Vec<u32>> = chunk.iter().map(|&i| encoded[i].clone()).collect();
            let (x, mask) = model.embed_ids(&rows)?;
            let flat: Vec<f32> = chunk.iter().flat_map(|&i| targets[i]).collect();
            let target = Tensor::from_vec(flat, (chunk.len(), PALETTE_DIM), &Device::Cpu)?.to_dtype(model.dtype())?;
            let eps = model.noise(chunk.len(), mask.dim(1)?, &mut noise_rng)?;

            let out = model.generate(&x, &mask, &eps)?;
            let c_bar = out.cond.c_bar.detach();

            let d_real = model.discriminate_palette(&c_bar, &target)?;
            let d_fake = model.discriminate_palette(&c_bar, &out.palette.detach())?;
            let d_loss = discriminator_loss_t(&d_real, &d_fake)?;
            acc.d += guard(step, "discriminator loss", scalar(&d_loss)?)?;
            opt_d.backward_step(&d_loss)?;

            let d_fake = model.discriminate_palette(&c_bar, &out.palette)?;
            let g = model.generator_loss(&d_fake, &out, &target, weights)?;
            acc.g += guard(step, "generator loss", scalar(&g.total)?)?;
            acc.huber += scalar(&g.huber)?;
            acc.kl += scalar(&g.kl)?;
            opt_g.backward_step(&g.total)?;

            acc.batches += 1;
            history.steps = step;
        }
        if acc.batches == 0 {
            break 'epochs;
        }
        let losses = acc.finish(epoch);
        log::info!(
            "tpn epoch {epoch}: d {:.4} g {:.4} huber {:.5} kl {:.4}",
            losses.d_loss,
            losses.g_loss,
            losses.huber,
            losses.kl
        );
        history.epochs.push(losses);
        if let (Some(every), Some(dir)) = (config.checkpoint_every, &config.out_dir) {
            if epoch % every == 0 {
                checkpoint::save(dir.join(format!("tpn-epoch{epoch}.safetensors")), Some(model), None)?;
            }
        }
    }
    if let Some(dir) = &config.out_dir {
        checkpoint::save(dir.join("tpn.safetensors"), Some(model), None)?;
    }
    write_history(config, &history)?;
    Ok(history)
}
