use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use thiserror::Error;

use super::MapSnapshot;
use crate::Scalar;

const CURRENT: &str = "CURRENT";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("snapshot {path} is unreadable: {source}")]
    Corrupt { path: PathBuf, source: serde_json::Error },
    #[error("invalid snapshot id {0:?}")]
    InvalidId(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("snapshot");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Directory of snapshots (`<snapshot_id>.json`) plus a `CURRENT` pointer.
///
/// Readers get an `Arc` to an immutable snapshot and never block on a
/// publish for longer than the pointer swap. Publication is serialized.
pub struct SnapshotStore<T> {
    root: PathBuf,
    current: RwLock<Option<Arc<MapSnapshot<T>>>>,
    writer: Mutex<()>,
}

impl<T: Scalar> SnapshotStore<T> {
    /// Opens (creating if needed) the store and loads the published snapshot.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        let probe = root.join(".write-probe");
        fs::write(&probe, b"").map_err(io_err(&probe))?;
        fs::remove_file(&probe).map_err(io_err(&probe))?;

        let store = Self { root, current: RwLock::new(None), writer: Mutex::new(()) };
        let pointer = store.root.join(CURRENT);
        if pointer.exists() {
            let id = fs::read_to_string(&pointer).map_err(io_err(&pointer))?;
            let snapshot = store.load(id.trim())?;
            *store.current.write().expect("store lock poisoned") = Some(Arc::new(snapshot));
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn current(&self) -> Option<Arc<MapSnapshot<T>>> {
        self.current.read().expect("store lock poisoned").clone()
    }

    /// Holds the single-writer lock; callers that stage files alongside a
    /// publish take it first.
    pub fn writer(&self) -> MutexGuard<'_, ()> {
        self.writer.lock().expect("store writer lock poisoned")
    }

    fn path_for(&self, id: &str) -> Result<PathBuf, StoreError> {
        if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric()) {
            return Err(StoreError::InvalidId(id.to_string()));
        }
        Ok(self.root.join(format!("{id}.json")))
    }

    pub fn load(&self, id: &str) -> Result<MapSnapshot<T>, StoreError> {
        let path = self.path_for(id)?;
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        serde_json::from_slice(&bytes).map_err(|source| StoreError::Corrupt { path, source })
    }

    /// Writes the snapshot, then swaps `CURRENT` and the in-memory pointer.
    pub fn publish(&self, snapshot: MapSnapshot<T>) -> Result<Arc<MapSnapshot<T>>, StoreError> {
        let _guard = self.writer();
        self.publish_locked(snapshot)
    }

    /// [`publish`](Self::publish) for callers already holding [`writer`](Self::writer).
    pub fn publish_locked(&self, snapshot: MapSnapshot<T>) -> Result<Arc<MapSnapshot<T>>, StoreError> {
        let path = self.path_for(&snapshot.snapshot_id)?;
        let json = serde_json::to_vec_pretty(&snapshot).expect("snapshot is serializable");
        write_atomic(&path, &json)?;
        write_atomic(&self.root.join(CURRENT), format!("{}\n", snapshot.snapshot_id).as_bytes())?;
        let snapshot = Arc::new(snapshot);
        *self.current.write().expect("store lock poisoned") = Some(Arc::clone(&snapshot));
        tracing::info!(snapshot_id = %snapshot.snapshot_id, "published snapshot");
        Ok(snapshot)
    }
}
