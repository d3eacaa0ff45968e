//! Append-only JSON-lines store of colorization results.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::Context;
use chrono::{DateTime, Utc};
use pf_core::color::Palette;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryEntry {
    pub id: Uuid,
    pub timestamp: DateTime<Utc>,
    pub text: Option<String>,
    pub palette: Palette,
    pub image_path: Option<PathBuf>,
    /// sha256 of the checkpoint file that produced the entry.
    pub checkpoint_sha256: String,
}

impl GalleryEntry {
    pub fn new(text: Option<String>, palette: Palette, checkpoint_sha256: String) -> Self {
        Self {
            id: Uuid::new_v4(),
            timestamp: Utc::now(),
            text,
            palette,
            image_path: None,
            checkpoint_sha256,
        }
    }
}

/// Entries are kept in memory in file order and appended under one lock, so
/// concurrent writers never interleave lines.
#[derive(Debug)]
pub struct Gallery {
    path: PathBuf,
    inner: Mutex<Inner>,
}

#[derive(Debug)]
struct Inner {
    file: File,
    entries: Vec<GalleryEntry>,
}

impl Gallery {
    /// Opens (creating if needed) the store at `path` and loads its entries.
    /// Malformed lines, e.g. a torn final write, are skipped with a warning.
    pub fn open(path: impl Into<PathBuf>) -> anyhow::Result<Self> {
        let path = path.into();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        let mut entries = Vec::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path).with_context(|| format!("opening {}", path.display()))?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<GalleryEntry>(&line) {
                    Ok(e) => entries.push(e),
                    Err(err) => log::warn!("{}:{}: skipping gallery line: {err}", path.display(), i + 1),
                }
            }
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .with_context(|| format!("opening {} for append", path.display()))?;
        // Start a fresh line after a torn final write.
        let bytes = std::fs::read(&path)?;
        if bytes.last().is_some_and(|&b| b != b'\n') {
            file.write_all(b"\n")?;
        }
        Ok(Self {
            path,
            inner: Mutex::new(Inner { file, entries }),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Directory for images saved alongside the store.
    pub fn image_dir(&self) -> PathBuf {
        let stem = self.path.file_stem().and_then(|s| s.to_str()).unwrap_or("gallery");
        self.path.with_file_name(format!("{stem}-images"))
    }

    pub fn append(&self, entry: GalleryEntry) -> anyhow::Result<()> {
        let mut line = serde_json::to_string(&entry)?;
        line.push('\n');
        let mut inner = self.inner.lock().expect("gallery lock poisoned");
        inner.file.write_all(line.as_bytes())?;
        inner.file.flush()?;
        inner.entries.push(entry);
        Ok(())
    }

    /// Newest first.
    pub fn list(&self) -> Vec<GalleryEntry> {
        let inner = self.inner.lock().expect("gallery lock poisoned");
        inner.entries.iter().rev().cloned().collect()
    }

    pub fn get(&self, id: Uuid) -> Option<GalleryEntry> {
        let inner = self.inner.lock().expect("gallery lock poisoned");
        inner.entries.iter().find(|e| e.id == id).cloned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pf_core::color::LabColor;

    fn palette(l: f64) -> Palette {
        Palette::new([LabColor::new(l, 1.0, 2.0); 5]).unwrap()
    }

    #[test]
    fn entries_persist_newest_first() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/gallery.jsonl");
        let g = Gallery::open(&path).unwrap();
        assert!(g.list().is_empty());
        let a = GalleryEntry::new(Some("first".into()), palette(10.0), "abc".into());
        let b = GalleryEntry::new(None, palette(20.0), "abc".into());
        g.append(a.clone()).unwrap();
        g.append(b.clone()).unwrap();
        drop(g);

        std::fs::OpenOptions::new().append(true).open(&path).unwrap().write_all(b"{\"torn\":").unwrap();
        let g = Gallery::open(&path).unwrap();
        assert_eq!(g.list(), vec![b.clone(), a.clone()]);
        assert_eq!(g.get(a.id), Some(a));
        assert_eq!(g.get(Uuid::new_v4()), None);
        assert_eq!(g.image_dir(), dir.path().join("sub/gallery-images"));

        let c = GalleryEntry::new(None, palette(30.0), "def".into());
        g.append(c.clone()).unwrap();
        drop(g);
        assert_eq!(Gallery::open(&path).unwrap().list()[0], c);
    }
}
