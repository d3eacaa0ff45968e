//! Minimal neural-network building blocks on top of candle tensors.

mod im2col;
mod layers;
pub mod objective;
mod params;

pub use layers::{leaky_relu, sigmoid, BatchNorm2d, Conv2d, GruCell, Linear};
pub use params::{Param, ParamKind, ParamStore};
