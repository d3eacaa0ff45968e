//! Command-line tools and the HTTP inference service.
//!
//! The service answers under `/api`:
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/api/health` | loaded checkpoints and their sha256 |
//! | POST | `/api/palettes` | `{text, count, seed?}` to palettes with attention |
//! | POST | `/api/colorize` | multipart `image` + `palette` (+ `text`) to PNG |
//! | GET | `/api/gallery` | colorization history, newest first |
//! | GET | `/api/gallery/{id}` | one entry |
//!
//! Anything else is served from the static UI directory when one is configured.

pub mod api;
pub mod cli;
pub mod config;
pub mod gallery;
