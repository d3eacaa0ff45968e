//! Service settings, layered as config file < environment < command line.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;

pub const ENV_TPN: &str = "PF_TPN_CKPT";
pub const ENV_PCN: &str = "PF_PCN_CKPT";
pub const ENV_PORT: &str = "PF_PORT";
pub const ENV_GALLERY: &str = "PF_GALLERY_PATH";

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_MAX_UPLOAD: usize = 10 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceConfig {
    pub host: String,
    pub port: u16,
    pub tpn_checkpoint: Option<PathBuf>,
    pub pcn_checkpoint: Option<PathBuf>,
    pub gallery_path: PathBuf,
    /// Directory with the UI bundle; nothing is served outside `/api` without it.
    pub static_dir: Option<PathBuf>,
    /// Largest accepted colorize upload, in bytes.
    pub max_upload_bytes: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            host: "127.0.0.1".into(),
            port: DEFAULT_PORT,
            tpn_checkpoint: None,
            pcn_checkpoint: None,
            gallery_path: PathBuf::from("gallery.jsonl"),
            static_dir: None,
            max_upload_bytes: DEFAULT_MAX_UPLOAD,
        }
    }
}

/// One layer of settings; unset fields defer to the layer below.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub host: Option<String>,
    pub port: Option<u16>,
    pub tpn_checkpoint: Option<PathBuf>,
    pub pcn_checkpoint: Option<PathBuf>,
    pub gallery_path: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
    pub max_upload_bytes: Option<usize>,
}

impl Overrides {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Reads the `PF_*` variables through `var`.
    pub fn from_env(var: impl Fn(&str) -> Option<String>) -> anyhow::Result<Self> {
        let port = match var(ENV_PORT) {
            Some(p) => Some(p.trim().parse().with_context(|| format!("{ENV_PORT}={p:?} is not a port"))?),
            None => None,
        };
        Ok(Self {
            port,
            tpn_checkpoint: var(ENV_TPN).map(PathBuf::from),
            pcn_checkpoint: var(ENV_PCN).map(PathBuf::from),
            gallery_path: var(ENV_GALLERY).map(PathBuf::from),
            ..Self::default()
        })
    }

    fn apply(self, c: &mut ServiceConfig) {
        if let Some(v) = self.host {
            c.host = v;
        }
        if let Some(v) = self.port {
            c.port = v;
        }
        if let Some(v) = self.tpn_checkpoint {
            c.tpn_checkpoint = Some(v);
        }
        if let Some(v) = self.pcn_checkpoint {
            c.pcn_checkpoint = Some(v);
        }
        if let Some(v) = self.gallery_path {
            c.gallery_path = v;
        }
        if let Some(v) = self.static_dir {
            c.static_dir = Some(v);
        }
        if let Some(v) = self.max_upload_bytes {
            c.max_upload_bytes = v;
        }
    }
}

impl ServiceConfig {
    /// Defaults, then `file`, then `env`, then `flags`.
    pub fn layered(file: Overrides, env: Overrides, flags: Overrides) -> Self {
        let mut c = Self::default();
        for layer in [file, env, flags] {
            layer.apply(&mut c);
        }
        c
    }
}
