//! Checks shared by these tests and the acceptance run.
#![allow(dead_code)]

pub mod attention;
pub mod color;
pub mod gradients;
pub mod kl;
pub mod metrics;
