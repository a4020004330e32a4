//! File-backed store.
//!
//! ```text
//! <root>/questions/<qid>/manifest.json
//! <root>/questions/<qid>/sessions/<sid>.json
//! <root>/questions/<qid>/models/<group-hash>.json
//! ```
//!
//! Every write goes to a temporary file in the target directory and is then
//! renamed into place, so readers never see a partial file.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use qlens_core::analytics::GroupFilter;
use qlens_core::model::TransitionModel;
use qlens_core::{QuestionManifest, Session};
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store unavailable at {path}: {source}")]
    Unavailable { path: PathBuf, source: io::Error },
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("corrupt store file {path}: {source}")]
    Corrupt { path: PathBuf, source: serde_json::Error },
    #[error("invalid identifier `{0}`")]
    BadId(String),
}

/// Identifiers become file names, so only a conservative alphabet is allowed.
pub fn is_safe_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

/// Hex SHA-256 of the filter's JSON form. Filter sets are ordered, so
/// equivalent filters hash alike.
pub fn group_hash(filter: &GroupFilter) -> String {
    let canonical = serde_json::to_vec(filter).expect("filter serializes");
    hex::encode(Sha256::digest(&canonical))
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl Store {
    /// Opens the store at `root`, creating the layout if needed.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        let questions = root.join("questions");
        fs::create_dir_all(&questions).map_err(|source| StoreError::Unavailable {
            path: questions.clone(),
            source,
        })?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn question_dir(&self, qid: &str) -> Result<PathBuf, StoreError> {
        if !is_safe_id(qid) {
            return Err(StoreError::BadId(qid.to_string()));
        }
        Ok(self.root.join("questions").join(qid))
    }

    fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
        let dir = path.parent().expect("store paths have a parent");
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let mut tmp = NamedTempFile::new_in(dir).map_err(io_err(dir))?;
        tmp.write_all(bytes).map_err(io_err(path))?;
        tmp.as_file().sync_all().map_err(io_err(path))?;
        tmp.persist(path).map_err(|e| StoreError::Io {
            path: path.to_path_buf(),
            source: e.error,
        })?;
        Ok(())
    }

    fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Option<T>, StoreError> {
        let bytes = match fs::read(path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(io_err(path)(e)),
        };
        serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|source| StoreError::Corrupt {
                path: path.to_path_buf(),
                source,
            })
    }

    /// Sorted ids of every question with a manifest.
    pub fn question_ids(&self) -> Result<Vec<String>, StoreError> {
        let dir = self.root.join("questions");
        let entries = fs::read_dir(&dir).map_err(|source| StoreError::Unavailable {
            path: dir.clone(),
            source,
        })?;
        let mut ids = Vec::new();
        for entry in entries {
            let entry = entry.map_err(io_err(&dir))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if is_safe_id(&name) && entry.path().join("manifest.json").is_file() {
                ids.push(name);
            }
        }
        ids.sort();
        Ok(ids)
    }

    pub fn put_manifest(&self, manifest: &QuestionManifest) -> Result<(), StoreError> {
        let path = self.question_dir(&manifest.question_id)?.join("manifest.json");
        let text = serde_json::to_vec_pretty(manifest).expect("manifest serializes");
        Self::write_atomic(&path, &text)
    }

    pub fn manifest(&self, qid: &str) -> Result<Option<QuestionManifest>, StoreError> {
        let Ok(dir) = self.question_dir(qid) else {
            return Ok(None);
        };
        Self::read_json(&dir.join("manifest.json"))
    }

    /// Writes a session; returns whether one with that id was replaced.
    pub fn put_session(&self, qid: &str, session: &Session) -> Result<bool, StoreError> {
        if !is_safe_id(&session.session_id) {
            return Err(StoreError::BadId(session.session_id.clone()));
        }
        let path = self
            .question_dir(qid)?
            .join("sessions")
            .join(format!("{}.json", session.session_id));
        let existed = path.is_file();
        Self::write_atomic(&path, &serde_json::to_vec(session).expect("session serializes"))?;
        Ok(existed)
    }

    /// All sessions of a question, sorted by session id.
    pub fn sessions(&self, qid: &str) -> Result<Vec<Session>, StoreError> {
        let dir = self.question_dir(qid)?.join("sessions");
        let entries = match fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(io_err(&dir)(e)),
        };
        let mut paths = Vec::new();
        for entry in entries {
            let path = entry.map_err(io_err(&dir))?.path();
            if path.extension().is_some_and(|e| e == "json") {
                paths.push(path);
            }
        }
        let mut sessions = Vec::with_capacity(paths.len());
        for path in paths {
            if let Some(s) = Self::read_json::<Session>(&path)? {
                sessions.push(s);
            }
        }
        sessions.sort_by(|a, b| a.session_id.cmp(&b.session_id));
        Ok(sessions)
    }

    pub fn model_path(&self, qid: &str, filter: &GroupFilter) -> Result<PathBuf, StoreError> {
        Ok(self
            .question_dir(qid)?
            .join("models")
            .join(format!("{}.json", group_hash(filter))))
    }

    pub fn load_model(&self, qid: &str, filter: &GroupFilter) -> Result<Option<TransitionModel>, StoreError> {
        Self::read_json(&self.model_path(qid, filter)?)
    }

    pub fn save_model(&self, qid: &str, model: &TransitionModel) -> Result<(), StoreError> {
        let path = self.model_path(qid, &model.group)?;
        Self::write_atomic(&path, model.to_json().as_bytes())
    }

    /// Drops every cached model of a question.
    pub fn clear_models(&self, qid: &str) -> Result<(), StoreError> {
        let dir = self.question_dir(qid)?.join("models");
        match fs::remove_dir_all(&dir) {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(()),
            Err(e) => Err(io_err(&dir)(e)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qlens_core::demo::{golden_session, product_question};
    use qlens_core::model::build_model;

    #[test]
    fn ids_are_restricted() {
        assert!(is_safe_id("q-product"));
        assert!(is_safe_id("s_01.a"));
        for bad in ["", "..", ".hidden", "a/b", "a\\b", "q 1"] {
            assert!(!is_safe_id(bad), "{bad}");
        }
    }

    #[test]
    fn equivalent_filters_share_a_hash() {
        let a = GroupFilter::grades([7, 2]);
        let b = GroupFilter::grades([2, 7, 2]);
        assert_eq!(group_hash(&a), group_hash(&b));
        assert_ne!(group_hash(&a), group_hash(&GroupFilter::grades([2])));
        assert_eq!(group_hash(&GroupFilter::default()).len(), 64);
    }

    #[test]
    fn model_roundtrip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let m = product_question();
        store.put_manifest(&m).unwrap();
        assert!(!store.put_session(&m.question_id, &golden_session()).unwrap());
        assert!(store.put_session(&m.question_id, &golden_session()).unwrap());
        let sessions = store.sessions(&m.question_id).unwrap();
        assert_eq!(sessions, vec![golden_session()]);
        let model = build_model(&sessions, &m);
        store.save_model(&m.question_id, &model).unwrap();
        let back = store.load_model(&m.question_id, &GroupFilter::default()).unwrap().unwrap();
        assert_eq!(back.to_json(), model.to_json());
        store.clear_models(&m.question_id).unwrap();
        assert!(store.load_model(&m.question_id, &GroupFilter::default()).unwrap().is_none());
        assert_eq!(store.question_ids().unwrap(), vec![m.question_id.clone()]);
        assert_eq!(store.manifest(&m.question_id).unwrap(), Some(m));
        assert_eq!(store.manifest("../etc").unwrap(), None);
    }
}
