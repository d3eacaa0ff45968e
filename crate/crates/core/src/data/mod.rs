//! Palette-and-text corpus: record I/O, tokenization, vocabulary, pretrained
//! embeddings, splits and batching.

mod batch;
mod embeddings;
mod records;
pub mod synthetic;
mod tokenize;
mod vocab;

pub use batch::{batches, pad_ids, Batch, EmbeddedText};
pub use embeddings::{load_embeddings, random_embeddings, write_embeddings, EmbeddingMatrix, EMBEDDING_DIM, OOV_STD};
pub use records::{load_pat, parse_pat, split, write_pat, PatRecord, FULL_TEST_SIZE};
pub use tokenize::tokenize;
pub use vocab::{Encoded, Vocabulary, PAD_ID, PAD_TOKEN};
