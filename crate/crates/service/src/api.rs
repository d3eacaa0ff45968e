//! HTTP JSON API and static UI serving.

use std::io::Cursor;
use std::path::Path;
use std::sync::Arc;

use anyhow::Context;
use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Path as UrlPath, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use pf_core::checkpoint::{file_sha256, load_pcn, load_tpn};
use pf_core::color::{LabColor, Palette};
use pf_core::pcn::{colorize_full, PcnModel};
use pf_core::tpn::{sample_palettes, SampleOptions, TpnModel};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;
use uuid::Uuid;

use crate::config::ServiceConfig;
use crate::gallery::{Gallery, GalleryEntry};

pub const MAX_COUNT: usize = 20;
pub const DEFAULT_COUNT: usize = 5;
pub const GALLERY_ID_HEADER: &str = "x-gallery-id";

/// A checkpoint section loaded once at startup, with the file's sha256.
#[derive(Debug)]
pub struct Loaded<M> {
    pub model: M,
    pub sha256: String,
}

#[derive(Debug, Clone)]
pub struct AppState {
    pub tpn: Option<Arc<Loaded<TpnModel>>>,
    pub pcn: Option<Arc<Loaded<PcnModel>>>,
    pub gallery: Arc<Gallery>,
    pub max_upload_bytes: usize,
}

impl AppState {
    pub fn load(config: &ServiceConfig) -> anyhow::Result<Self> {
        let tpn = config.tpn_checkpoint.as_deref().map(|p| load(p, |p| load_tpn(p))).transpose()?;
        let pcn = config.pcn_checkpoint.as_deref().map(|p| load(p, |p| load_pcn(p))).transpose()?;
        Ok(Self {
            tpn: tpn.map(Arc::new),
            pcn: pcn.map(Arc::new),
            gallery: Arc::new(Gallery::open(&config.gallery_path)?),
            max_upload_bytes: config.max_upload_bytes,
        })
    }
}

fn load<M>(path: &Path, section: impl Fn(&Path) -> pf_core::Result<M>) -> anyhow::Result<Loaded<M>> {
    let model = section(path).with_context(|| format!("loading {}", path.display()))?;
    Ok(Loaded {
        model,
        sha256: file_sha256(path)?,
    })
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn internal(err: impl std::fmt::Display) -> Self {
        log::error!("{err}");
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, err.to_string())
    }
}

impl From<pf_core::Error> for ApiError {
    fn from(e: pf_core::Error) -> Self {
        use pf_core::Error::*;
        match e {
            InvalidInput(_) | Parse { .. } | PaletteArity { .. } | EmptyText(_) | Image(_) => Self::bad_request(e.to_string()),
            other => Self::internal(other),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState, static_dir: Option<&Path>) -> Router {
    let limit = state.max_upload_bytes;
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/palettes", post(palettes))
        .route("/api/colorize", post(colorize).layer(DefaultBodyLimit::max(limit.saturating_add(64 * 1024))))
        .route("/api/gallery", get(gallery_list))
        .route("/api/gallery/{id}", get(gallery_get))
        .route("/api/{*rest}", get(not_found).post(not_found))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(not_found),
    }
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not found")
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub tpn_loaded: bool,
    pub pcn_loaded: bool,
    pub tpn_checkpoint_sha256: Option<String>,
    pub pcn_checkpoint_sha256: Option<String>,
    pub gallery_entries: usize,
}

async fn health(State(s): State<AppState>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        tpn_loaded: s.tpn.is_some(),
        pcn_loaded: s.pcn.is_some(),
        tpn_checkpoint_sha256: s.tpn.as_ref().map(|l| l.sha256.clone()),
        pcn_checkpoint_sha256: s.pcn.as_ref().map(|l| l.sha256.clone()),
        gallery_entries: s.gallery.list().len(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PaletteRequest {
    pub text: String,
    #[serde(default = "default_count")]
    pub count: usize,
    pub seed: Option<u64>,
}

fn default_count() -> usize {
    DEFAULT_COUNT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaletteView {
    pub lab: Vec<LabColor>,
    pub hex: Vec<String>,
}

impl From<&Palette> for PaletteView {
    fn from(p: &Palette) -> Self {
        Self {
            lab: p.colors().to_vec(),
            hex: p.hex().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaletteResponse {
    pub text: String,
    pub seed: u64,
    /// Tokens the attention rows refer to, in order.
    pub tokens: Vec<String>,
    pub unknown: Vec<String>,
    pub all_unknown: bool,
    pub palettes: Vec<PaletteView>,
    /// One `5 x tokens` matrix per palette.
    pub attention: Vec<Vec<Vec<f64>>>,
}

/// Shared by the HTTP handler and `pf sample`.
pub fn sample_response(model: &TpnModel, text: &str, count: usize, seed: u64) -> pf_core::Result<PaletteResponse> {
    let s = sample_palettes(
        model,
        text,
        SampleOptions {
            count,
            seed,
            zero_noise: false,
        },
    )?;
    Ok(PaletteResponse {
        text: text.to_string(),
        seed,
        tokens: s.tokens,
        unknown: s.unknown,
        all_unknown: s.all_unknown,
        palettes: s.palettes.iter().map(|p| PaletteView::from(&p.palette)).collect(),
        attention: s.palettes.into_iter().map(|p| p.attention).collect(),
    })
}

fn parse_json<T: serde::de::DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

async fn palettes(State(s): State<AppState>, body: Bytes) -> ApiResult<Json<PaletteResponse>> {
    let req: PaletteRequest = parse_json(&body)?;
    if req.text.trim().is_empty() {
        return Err(ApiError::bad_request("text must not be empty"));
    }
    if !(1..=MAX_COUNT).contains(&req.count) {
        return Err(ApiError::bad_request(format!("count must be between 1 and {MAX_COUNT}, got {}", req.count)));
    }
    let tpn = s
        .tpn
        .clone()
        .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no palette checkpoint loaded"))?;
    let seed = req.seed.unwrap_or_else(|| Uuid::new_v4().as_u64_pair().0);
    let out = tokio::task::spawn_blocking(move || sample_response(&tpn.model, &req.text, req.count, seed))
        .await
        .map_err(ApiError::internal)??;
    Ok(Json(out))
}

/// Accepted palette payloads: the core form `{"colors": [...]}`, the
/// `/api/palettes` form `{"lab": [...]}`, or a bare array of `[L, a, b]`.
#[derive(Deserialize)]
#[serde(untagged)]
enum PaletteInput {
    Colors { colors: Vec<LabColor> },
    Lab { lab: Vec<LabColor> },
    Bare(Vec<LabColor>),
}

pub fn parse_palette(text: &str) -> pf_core::Result<Palette> {
    let input: PaletteInput = serde_json::from_str(text)
        .map_err(|e| pf_core::Error::InvalidInput(format!("palette must be a list of [L, a, b] colors: {e}")))?;
    let colors = match input {
        PaletteInput::Colors { colors } | PaletteInput::Lab { lab: colors } | PaletteInput::Bare(colors) => colors,
    };
    Palette::from_slice(&colors)
}

pub fn encode_png(img: &image::RgbImage) -> pf_core::Result<Vec<u8>> {
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png)?;
    Ok(out.into_inner())
}

async fn colorize(State(s): State<AppState>, mut multipart: Multipart) -> ApiResult<Response> {
    let too_large = || {
        ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            format!("upload exceeds {} bytes", s.max_upload_bytes),
        )
    };
    let (mut image, mut palette, mut text) = (None, None, None);
    loop {
        let field = match multipart.next_field().await {
            Ok(Some(f)) => f,
            Ok(None) => break,
            Err(e) if e.status() == StatusCode::PAYLOAD_TOO_LARGE => return Err(too_large()),
            Err(e) => return Err(ApiError::bad_request(e.body_text())),
        };
        let name = field.name().unwrap_or_default().to_string();
        let data = match field.bytes().await {
            Ok(d) => d,
            Err(e) if e.status() == StatusCode::PAYLOAD_TOO_LARGE => return Err(too_large()),
            Err(e) => return Err(ApiError::bad_request(e.body_text())),
        };
        match name.as_str() {
            "image" => image = Some(data),
            "palette" => palette = Some(String::from_utf8_lossy(&data).into_owned()),
            "text" => text = Some(String::from_utf8_lossy(&data).into_owned()).filter(|t| !t.trim().is_empty()),
            _ => {}
        }
    }
    let image = image.ok_or_else(|| ApiError::bad_request("missing `image` field"))?;
    if image.len() > s.max_upload_bytes {
        return Err(too_large());
    }
    let palette = parse_palette(&palette.ok_or_else(|| ApiError::bad_request("missing `palette` field"))?)?;
    let pcn = s
        .pcn
        .clone()
        .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no colorization checkpoint loaded"))?;

    let decoded = image::load_from_memory(&image)
        .map_err(|e| ApiError::bad_request(format!("cannot decode image: {e}")))?
        .to_rgb8();
    let model = pcn.clone();
    let png = tokio::task::spawn_blocking(move || -> pf_core::Result<Vec<u8>> {
        encode_png(&colorize_full(&model.model, &decoded, &palette)?)
    })
    .await
    .map_err(ApiError::internal)??;

    let mut entry = GalleryEntry::new(text, palette, pcn.sha256.clone());
    let dir = s.gallery.image_dir();
    let path = dir.join(format!("{}.png", entry.id));
    std::fs::create_dir_all(&dir)
        .and_then(|_| std::fs::write(&path, &png))
        .map_err(ApiError::internal)?;
    entry.image_path = Some(path);
    let id = entry.id;
    s.gallery.append(entry).map_err(ApiError::internal)?;

    let mut resp = (StatusCode::OK, png).into_response();
    let headers = resp.headers_mut();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("image/png"));
    headers.insert(GALLERY_ID_HEADER, HeaderValue::from_str(&id.to_string()).expect("uuid is ascii"));
    Ok(resp)
}

async fn gallery_list(State(s): State<AppState>) -> Json<Vec<GalleryEntry>> {
    Json(s.gallery.list())
}

async fn gallery_get(State(s): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<GalleryEntry>> {
    let missing = || ApiError::new(StatusCode::NOT_FOUND, format!("no gallery entry {id}"));
    let uuid = Uuid::parse_str(&id).map_err(|_| missing())?;
    s.gallery.get(uuid).map(Json).ok_or_else(missing)
}

/// Binds and serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> anyhow::Result<()> {
    let state = AppState::load(&config)?;
    if state.tpn.is_none() {
        log::warn!("no palette checkpoint configured; /api/palettes will answer 503");
    }
    if state.pcn.is_none() {
        log::warn!("no colorization checkpoint configured; /api/colorize will answer 503");
    }
    let app = router(state, config.static_dir.as_deref());
    let addr = format!("{}:{}", config.host, config.port);
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
