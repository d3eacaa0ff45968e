use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::TpnModel;
use crate::color::Palette;
use crate::data::{tokenize, Vocabulary};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleOptions {
    pub count: usize,
    pub seed: u64,
    /// Use `ε = 0`, i.e. decode from the condition means.
    pub zero_noise: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledPalette {
    pub palette: Palette,
    /// `5 x T` attention weights over the known tokens.
    pub attention: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Samples {
    /// Tokens the model attended over.
    pub tokens: Vec<String>,
    /// Tokens dropped because the vocabulary does not know them.
    pub unknown: Vec<String>,
    /// Every token was unknown; the palettes come from an empty condition and
    /// do not reflect the text.
    pub all_unknown: bool,
    pub palettes: Vec<SampledPalette>,
}

/// Draws `count` palettes for `text`, one noise draw each. The whole batch is
/// a deterministic function of `(text, seed, model)`.
pub fn sample_palettes(model: &TpnModel, text: &str, opts: SampleOptions) -> Result<Samples> {
    if opts.count == 0 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    if tokenize(text).is_empty() {
        return Err(Error::EmptyText(text.to_string()));
    }
    let encoded = model.vocab.encode(text);
    let all_unknown = encoded.ids.is_empty();
    let tokens = known_tokens(&model.vocab, &encoded.ids);

    let rows = vec![encoded.ids; opts.count];
    let (x, mask) = model.embed_ids(&rows)?;
    let len = mask.dim(1)?;
    let eps = if opts.zero_noise {
        model.zero_noise(opts.count, len)?
    } else {
        model.noise(opts.count, len, &mut ChaCha8Rng::seed_from_u64(opts.seed))?
    };
    let out = model.generate(&x, &mask, &eps)?;

    let flat: Vec<Vec<f32>> = out.palette.to_dtype(candle_core::DType::F32)?.to_vec2()?;
    let attention: Vec<Vec<Vec<f64>>> = out.attention.to_dtype(candle_core::DType::F64)?.to_vec3()?;
    let palettes = flat
        .iter()
        .zip(attention)
        .map(|(p, attention)| {
            Ok(SampledPalette {
                palette: Palette::from_normalized(p)?,
                attention,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Samples {
        tokens,
        unknown: encoded.unknown,
        all_unknown,
        palettes,
    })
}

fn known_tokens(vocab: &Vocabulary, ids: &[u32]) -> Vec<String> {
    ids.iter()
        .filter_map(|&id| vocab.token(id).map(str::to_string))
        .collect()
}
