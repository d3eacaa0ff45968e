//! Text-conditioned color palette generation and palette-guided colorization.
//!
//! The crate is organized around the two adversarial models:
//!
//! * [`tpn`] turns a short text into five-color Lab palettes. A GRU encoder feeds
//!   conditioning augmentation, and an attention decoder emits one color per step.
//! * [`pcn`] colorizes a grayscale lightness channel with a palette-conditioned U-Net.
//!
//! [`color`] holds the color-science kernel shared by both, [`data`] the
//! palette-and-text corpus handling, [`train`] the training loops, and
//! [`metrics`] the diversity/multimodality evaluation.

pub mod checkpoint;
pub mod color;
pub mod data;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod pcn;
pub mod tpn;
pub mod train;

pub use error::{Error, Result};
