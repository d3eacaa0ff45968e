use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Vocabulary, PAD_ID};
use crate::{Error, Result};

pub const EMBEDDING_DIM: usize = 300;

/// Standard deviation of the Gaussian used for tokens missing from the file.
pub const OOV_STD: f64 = 0.05;

/// Row-major `|V| x 300` word vectors aligned with a [`Vocabulary`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn zeros(rows: usize) -> Self {
        Self {
            rows,
            data: vec![0.0; rows * EMBEDDING_DIM],
        }
    }

    pub fn from_vec(rows: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * EMBEDDING_DIM {
            return Err(Error::LengthMismatch {
                left: data.len(),
                right: rows * EMBEDDING_DIM,
            });
        }
        Ok(Self { rows, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn row(&self, id: u32) -> &[f32] {
        let i = id as usize * EMBEDDING_DIM;
        &self.data[i..i + EMBEDDING_DIM]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }
}

/// Builds the embedding matrix for `vocab` from a word2vec/GloVe text file.
///
/// Tokens found in the file get their vectors verbatim, the rest are drawn
/// from `N(0, OOV_STD^2)` in vocabulary order, and the padding row is zero.
/// A leading `count dim` header line is accepted.
pub fn load_embeddings(vocab: &Vocabulary, path: impl AsRef<Path>, seed: u64) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    let found = read_vectors(vocab, BufReader::new(file))?;
    Ok(fill(vocab, &found, seed))
}

/// Every row drawn from the OOV initializer, as if no pretrained file had
/// any of the words.
pub fn random_embeddings(vocab: &Vocabulary, seed: u64) -> EmbeddingMatrix {
    fill(vocab, &HashMap::new(), seed)
}

fn fill(vocab: &Vocabulary, found: &HashMap<u32, Vec<f32>>, seed: u64) -> EmbeddingMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, OOV_STD).expect("valid std");
    let mut m = EmbeddingMatrix::zeros(vocab.len());
    for id in 0..vocab.len() as u32 {
        if id == PAD_ID {
            continue;
        }
        let start = id as usize * EMBEDDING_DIM;
        let row = &mut m.data[start..start + EMBEDDING_DIM];
        match found.get(&id) {
            Some(v) => row.copy_from_slice(v),
            None => row.iter_mut().for_each(|x| *x = normal.sample(&mut rng) as f32),
        }
    }
    m
}

fn read_vectors(vocab: &Vocabulary, reader: impl BufRead) -> Result<HashMap<u32, Vec<f32>>> {
    let mut found = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let mut fields = line.split_whitespace();
        let Some(word) = fields.next() else { continue };
        let rest: Vec<&str> = fields.collect();
        if lineno == 1 && rest.len() == 1 && word.parse::<usize>().is_ok() && rest[0].parse::<usize>().is_ok() {
            continue;
        }
        if rest.len() != EMBEDDING_DIM {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {EMBEDDING_DIM} values, found {}", rest.len()),
            });
        }
        let Some(id) = vocab.id(word).filter(|&id| id != PAD_ID) else {
            continue;
        };
        let vector = rest
            .iter()
            .map(|s| s.parse::<f32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                line: lineno,
                message: e.to_string(),
            })?;
        found.entry(id).or_insert(vector);
    }
    Ok(found)
}

/// Writes `(token, vector)` pairs in word2vec text layout with a header line.
pub fn write_embeddings<'a>(entries: impl IntoIterator<Item = (&'a str, &'a [f32])>, mut writer: impl Write) -> Result<()> {
    let entries: Vec<_> = entries.into_iter().collect();
    writeln!(writer, "{} {}", entries.len(), EMBEDDING_DIM)?;
    for (tok, v) in entries {
        write!(writer, "{tok}")?;
        for x in v {
            write!(writer, " {x}")?;
        }
        writeln!(writer)?;
    }
    Ok(())
}
