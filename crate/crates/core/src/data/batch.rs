use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{EmbeddingMatrix, PatRecord, Vocabulary, EMBEDDING_DIM, PAD_ID};
use crate::color::PALETTE_DIM;

/// A batch of token sequences padded to a common length, with their word
/// vectors and validity mask. A single text is a batch of one.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedText {
    pub batch: usize,
    pub len: usize,
    /// `batch x len` token ids, [`PAD_ID`] past each row's end.
    pub ids: Vec<u32>,
    /// `batch x len`, true for real tokens.
    pub mask: Vec<bool>,
    /// `batch x len x 300` word vectors; padded positions are zero.
    pub vectors: Vec<f32>,
}

impl EmbeddedText {
    /// Pads `rows` to the longest row and gathers their vectors. See [`pad_ids`].
    pub fn from_id_rows(rows: &[Vec<u32>], embeddings: &EmbeddingMatrix) -> Self {
        let (batch, len, ids, mask) = pad_ids(rows);
        let mut vectors = vec![0.0; batch * len * EMBEDDING_DIM];
        for (pos, (&id, &valid)) in ids.iter().zip(&mask).enumerate() {
            if valid {
                vectors[pos * EMBEDDING_DIM..(pos + 1) * EMBEDDING_DIM].copy_from_slice(embeddings.row(id));
            }
        }
        Self {
            batch,
            len,
            ids,
            mask,
            vectors,
        }
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.mask
            .chunks(self.len.max(1))
            .take(self.batch)
            .map(|row| row.iter().filter(|&&m| m).count())
            .collect()
    }
}

/// Pads id rows to a common length, returning `(batch, len, ids, mask)`.
/// An empty row becomes a single padding token marked valid, so every
/// sequence has at least one position.
pub fn pad_ids(rows: &[Vec<u32>]) -> (usize, usize, Vec<u32>, Vec<bool>) {
    let rows: Vec<&[u32]> = rows
        .iter()
        .map(|r| if r.is_empty() { &[PAD_ID][..] } else { r.as_slice() })
        .collect();
    let batch = rows.len();
    let len = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    let mut ids = vec![PAD_ID; batch * len];
    let mut mask = vec![false; batch * len];
    for (b, row) in rows.iter().enumerate() {
        for (t, &id) in row.iter().enumerate() {
            ids[b * len + t] = id;
            mask[b * len + t] = true;
        }
    }
    (batch, len, ids, mask)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub text: EmbeddedText,
    /// Raw Lab palettes, color-major.
    pub palettes: Vec<[f64; PALETTE_DIM]>,
    /// Positions of the batch rows in the source record list.
    pub indices: Vec<usize>,
}

/// Splits `records` into batches of `batch_size` (the last one may be short).
/// With a seed the record order is shuffled deterministically first.
pub fn batches<'a>(
    records: &'a [PatRecord],
    batch_size: usize,
    vocab: &'a Vocabulary,
    embeddings: &'a EmbeddingMatrix,
    seed: Option<u64>,
) -> impl Iterator<Item = Batch> + 'a {
    let mut order: Vec<usize> = (0..records.len()).collect();
    if let Some(seed) = seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let chunks: Vec<Vec<usize>> = order.chunks(batch_size.max(1)).map(<[usize]>::to_vec).collect();
    chunks.into_iter().map(move |indices| {
        let rows: Vec<Vec<u32>> = indices.iter().map(|&i| vocab.encode(&records[i].text).ids).collect();
        Batch {
            text: EmbeddedText::from_id_rows(&rows, embeddings),
            palettes: indices.iter().map(|&i| records[i].palette.to_flat()).collect(),
            indices,
        }
    })
}
