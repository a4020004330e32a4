use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};

use qlens_core::ingest::{build_sessions, parse_events, IngestError, MalformedRecord};
use qlens_core::model::TransitionModel;
use qlens_core::views::{build_views, group_model, recommendation_for_rank, GroupQuery, ViewsError};
use qlens_core::QuestionManifest;
use serde::{Deserialize, Serialize};

use crate::store::{is_safe_id, Store};
use crate::ServiceError;

pub const QUESTIONS_SCHEMA: &str = "qlens-questions/1";
pub const INGEST_SCHEMA: &str = "qlens-ingest/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionEntry {
    pub question_id: String,
    pub title: String,
    pub student_count: u32,
    pub session_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionList {
    pub schema: String,
    pub questions: Vec<QuestionEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub schema: String,
    pub question_id: String,
    /// Sessions written, replacements included.
    pub sessions_added: usize,
    /// Ids of sessions that replaced an earlier upload.
    pub overwritten: Vec<String>,
    pub lines_skipped: usize,
    /// Unpaired or off-ROI mouse-downs/ups.
    pub drags_dropped: usize,
    /// Completed drags that left the answer unchanged.
    pub noop_drags: usize,
    pub skipped: Vec<MalformedRecord>,
}

/// Store plus per-question reader/writer locks. Reads share a question's
/// lock; ingest holds it exclusively.
pub struct Service {
    store: Store,
    locks: Mutex<HashMap<String, Arc<RwLock<()>>>>,
}

impl Service {
    pub fn new(store: Store) -> Self {
        Self {
            store,
            locks: Mutex::new(HashMap::new()),
        }
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    fn lock(&self, qid: &str) -> Arc<RwLock<()>> {
        self.locks
            .lock()
            .expect("lock table poisoned")
            .entry(qid.to_string())
            .or_default()
            .clone()
    }

    fn manifest(&self, qid: &str) -> Result<QuestionManifest, ServiceError> {
        self.store
            .manifest(qid)?
            .ok_or_else(|| ServiceError::UnknownQuestion(qid.to_string()))
    }

    pub fn add_manifest(&self, manifest: &QuestionManifest) -> Result<(), ServiceError> {
        let lock = self.lock(&manifest.question_id);
        let _guard = lock.write().expect("question lock poisoned");
        self.store.put_manifest(manifest)?;
        self.store.clear_models(&manifest.question_id)?;
        Ok(())
    }

    pub fn list_questions(&self) -> Result<QuestionList, ServiceError> {
        let mut questions = Vec::new();
        for qid in self.store.question_ids()? {
            let lock = self.lock(&qid);
            let _guard = lock.read().expect("question lock poisoned");
            let Some(manifest) = self.store.manifest(&qid)? else {
                continue;
            };
            let sessions = self.store.sessions(&qid)?;
            let mut students: Vec<&str> = sessions.iter().map(|s| s.student_id.as_str()).collect();
            students.sort_unstable();
            students.dedup();
            questions.push(QuestionEntry {
                question_id: qid.clone(),
                title: manifest.title,
                student_count: students.len() as u32,
                session_count: sessions.len() as u32,
            });
        }
        Ok(QuestionList {
            schema: QUESTIONS_SCHEMA.to_string(),
            questions,
        })
    }

    fn model(&self, manifest: &QuestionManifest, query: &GroupQuery) -> Result<TransitionModel, ServiceError> {
        let qid = &manifest.question_id;
        if let Some(model) = self.store.load_model(qid, &query.filter)? {
            return Ok(model);
        }
        let sessions = self.store.sessions(qid)?;
        let model = group_model(&sessions, manifest, &query.filter);
        self.store.save_model(qid, &model)?;
        Ok(model)
    }

    /// Composite views payload as JSON text.
    pub fn get_views(&self, qid: &str, query: &GroupQuery) -> Result<String, ServiceError> {
        let lock = self.lock(qid);
        let _guard = lock.read().expect("question lock poisoned");
        let manifest = self.manifest(qid)?;
        let model = self.model(&manifest, query)?;
        Ok(build_views(&model, &manifest, query).to_json())
    }

    /// Recommendation for the 1-based `rank` in the group's error list, as
    /// JSON text.
    pub fn get_recommendation(&self, qid: &str, rank: usize, query: &GroupQuery) -> Result<String, ServiceError> {
        let lock = self.lock(qid);
        let _guard = lock.read().expect("question lock poisoned");
        let manifest = self.manifest(qid)?;
        let model = self.model(&manifest, query)?;
        match recommendation_for_rank(&model, &manifest, rank, query.top_errors) {
            Ok(payload) => Ok(payload.to_json()),
            Err(ViewsError::NoSuchError(rank)) => Err(ServiceError::UnknownError(rank)),
        }
    }

    /// Ingests JSON-lines events for `qid`. Sessions of other questions in
    /// the upload are skipped and counted.
    pub fn post_ingest(&self, qid: &str, body: &[u8]) -> Result<IngestReport, ServiceError> {
        let manifest = self.manifest(qid)?;
        let mut log = parse_events(body).map_err(|e| match e {
            IngestError::EmptyInput { skipped } => {
                ServiceError::MalformedPayload(format!("no valid event lines ({skipped} malformed)"))
            }
            other => ServiceError::MalformedPayload(other.to_string()),
        })?;

        let mut skipped = log.malformed.clone();
        let (mine, stray): (Vec<_>, Vec<_>) = log.sessions.drain(..).partition(|s| s.question_id == qid);
        if mine.is_empty() {
            let other = stray.first().map_or_else(String::new, |s| s.question_id.clone());
            return Err(ServiceError::UnknownQuestion(other));
        }
        let mut lines_skipped = log.malformed.len();
        for s in &stray {
            lines_skipped += s.events.len();
        }
        let (mine, unsafe_ids): (Vec<_>, Vec<_>) = mine.into_iter().partition(|s| is_safe_id(&s.session_id));
        for s in &unsafe_ids {
            lines_skipped += s.events.len();
            skipped.push(MalformedRecord {
                line: 0,
                reason: format!("session id `{}` is not a safe identifier", s.session_id),
            });
        }
        for s in &stray {
            skipped.push(MalformedRecord {
                line: 0,
                reason: format!("session `{}` belongs to question `{}`", s.session_id, s.question_id),
            });
        }
        log.sessions = mine;
        let outcome = build_sessions(&log, &manifest).map_err(|e| ServiceError::MalformedPayload(e.to_string()))?;

        let lock = self.lock(qid);
        let _guard = lock.write().expect("question lock poisoned");
        let mut overwritten = Vec::new();
        for s in &outcome.sessions {
            if self.store.put_session(qid, s)? {
                overwritten.push(s.session_id.clone());
            }
        }
        self.store.clear_models(qid)?;
        Ok(IngestReport {
            schema: INGEST_SCHEMA.to_string(),
            question_id: qid.to_string(),
            sessions_added: outcome.sessions.len(),
            overwritten,
            lines_skipped,
            drags_dropped: outcome.tally.dropped(),
            noop_drags: outcome.tally.noop,
            skipped,
        })
    }
}
