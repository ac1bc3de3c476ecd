//! Session records and their on-disk persistence.
//!
//! Each record lives in `<data_dir>/<id>.json` and is replaced atomically
//! (temp file in the same directory, then rename). Every record has its own
//! lock; a mutation that finds the lock taken fails instead of waiting.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock, TryLockError};

use chrono::{DateTime, Utc};
use kbdbg_core::session::DebugSession;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub kb_source: String,
    pub session: DebugSession,
}

impl SessionRecord {
    pub fn new(kb_source: String, session: DebugSession) -> Self {
        Self {
            id: uuid::Uuid::new_v4().simple().to_string(),
            created_at: Utc::now(),
            kb_source,
            session,
        }
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("no session `{0}`")]
    NotFound(String),
    #[error("session `{id}` is unavailable: {reason}")]
    Unavailable { id: String, reason: String },
    #[error("session `{0}` is being modified by another request")]
    Busy(String),
    #[error("storage error: {0}")]
    Io(#[from] io::Error),
    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
}

enum Slot {
    Ready(Box<Mutex<SessionRecord>>),
    Unavailable(String),
}

/// Listing entry for one stored session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub id: String,
    pub created_at: Option<DateTime<Utc>>,
    pub status: String,
    pub queries_asked: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub struct SessionStore {
    data_dir: Option<PathBuf>,
    slots: RwLock<BTreeMap<String, Arc<Slot>>>,
}

fn is_valid_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl SessionStore {
    /// A store that keeps records in memory only.
    pub fn in_memory() -> Self {
        Self {
            data_dir: None,
            slots: RwLock::new(BTreeMap::new()),
        }
    }

    /// Opens `data_dir`, creating it if needed, and loads every record in it.
    /// Files that fail to parse are kept as unavailable entries.
    pub fn open(data_dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = data_dir.into();
        fs::create_dir_all(&dir)?;
        let mut slots = BTreeMap::new();
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            let Some(id) = json_stem(&path) else { continue };
            let slot = match fs::read(&path)
                .map_err(|e| e.to_string())
                .and_then(|bytes| {
                    serde_json::from_slice::<SessionRecord>(&bytes).map_err(|e| e.to_string())
                }) {
                Ok(record) if record.id == id => Slot::Ready(Box::new(Mutex::new(record))),
                Ok(record) => Slot::Unavailable(format!("file names session `{}`", record.id)),
                Err(reason) => Slot::Unavailable(reason),
            };
            slots.insert(id, Arc::new(slot));
        }
        Ok(Self {
            data_dir: Some(dir),
            slots: RwLock::new(slots),
        })
    }

    pub fn data_dir(&self) -> Option<&Path> {
        self.data_dir.as_deref()
    }

    fn path_of(&self, id: &str) -> Option<PathBuf> {
        self.data_dir.as_ref().map(|d| d.join(format!("{id}.json")))
    }

    fn persist(&self, record: &SessionRecord) -> Result<(), StoreError> {
        let (Some(dir), Some(path)) = (self.data_dir.as_ref(), self.path_of(&record.id)) else {
            return Ok(());
        };
        let bytes = serde_json::to_vec_pretty(record)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(&bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(path).map_err(|e| e.error)?;
        Ok(())
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, StoreError> {
        self.slots
            .read()
            .expect("store lock poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::NotFound(id.to_string()))
    }

    /// Persists and registers a new record.
    pub fn insert(&self, record: SessionRecord) -> Result<SessionRecord, StoreError> {
        assert!(is_valid_id(&record.id), "record ids are generated tokens");
        self.persist(&record)?;
        let slot = Arc::new(Slot::Ready(Box::new(Mutex::new(record.clone()))));
        self.slots
            .write()
            .expect("store lock poisoned")
            .insert(record.id.clone(), slot);
        Ok(record)
    }

    /// A snapshot of the record.
    pub fn get(&self, id: &str) -> Result<SessionRecord, StoreError> {
        match &*self.slot(id)? {
            Slot::Ready(m) => Ok(m.lock().unwrap_or_else(|p| p.into_inner()).clone()),
            Slot::Unavailable(reason) => Err(StoreError::Unavailable {
                id: id.to_string(),
                reason: reason.clone(),
            }),
        }
    }

    /// Applies `f` to a copy of the record and stores the result. Fails with
    /// [`StoreError::Busy`] while another mutation of the same record runs;
    /// on any error the stored record is unchanged.
    pub fn update<E>(
        &self,
        id: &str,
        f: impl FnOnce(&SessionRecord) -> Result<SessionRecord, E>,
    ) -> Result<Result<SessionRecord, E>, StoreError> {
        let slot = self.slot(id)?;
        let Slot::Ready(m) = &*slot else {
            return Err(self.get(id).expect_err("slot is unavailable"));
        };
        let mut guard = match m.try_lock() {
            Ok(g) => g,
            Err(TryLockError::WouldBlock) => return Err(StoreError::Busy(id.to_string())),
            Err(TryLockError::Poisoned(p)) => p.into_inner(),
        };
        let next = match f(&guard) {
            Ok(next) => next,
            Err(e) => return Ok(Err(e)),
        };
        self.persist(&next)?;
        *guard = next.clone();
        Ok(Ok(next))
    }

    pub fn delete(&self, id: &str) -> Result<(), StoreError> {
        let slot = self.slot(id)?;
        if let Slot::Ready(m) = &*slot {
            if matches!(m.try_lock(), Err(TryLockError::WouldBlock)) {
                return Err(StoreError::Busy(id.to_string()));
            }
        }
        if let Some(path) = self.path_of(id) {
            match fs::remove_file(path) {
                Ok(()) => {}
                Err(e) if e.kind() == io::ErrorKind::NotFound => {}
                Err(e) => return Err(e.into()),
            }
        }
        self.slots.write().expect("store lock poisoned").remove(id);
        Ok(())
    }

    pub fn list(&self) -> Vec<Summary> {
        let slots: Vec<(String, Arc<Slot>)> = self
            .slots
            .read()
            .expect("store lock poisoned")
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let mut out: Vec<Summary> = slots
            .into_iter()
            .map(|(id, slot)| match &*slot {
                Slot::Ready(m) => {
                    let r = m.lock().unwrap_or_else(|p| p.into_inner());
                    Summary {
                        id,
                        created_at: Some(r.created_at),
                        status: r.session.status().to_string(),
                        queries_asked: r.session.queries_asked(),
                        error: None,
                    }
                }
                Slot::Unavailable(reason) => Summary {
                    id,
                    created_at: None,
                    status: "UNAVAILABLE".into(),
                    queries_asked: 0,
                    error: Some(reason.clone()),
                },
            })
            .collect();
        out.sort_by(|a, b| {
            a.created_at
                .cmp(&b.created_at)
                .then_with(|| a.id.cmp(&b.id))
        });
        out
    }
}

fn json_stem(path: &Path) -> Option<String> {
    if path.extension()? != "json" {
        return None;
    }
    let stem = path.file_stem()?.to_str()?;
    is_valid_id(stem).then(|| stem.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use kbdbg_core::logic::parse_kb;
    use kbdbg_core::selection::Answer;
    use kbdbg_core::session::{start_session, submit_answer, SessionConfig, Status};

    const KB_C: &str = "[ontology]\na1: A -> B\na2: A -> ~B\n[background]\nb1: A\n";

    fn record() -> SessionRecord {
        let s = start_session(parse_kb(KB_C).unwrap(), SessionConfig::default()).unwrap();
        SessionRecord::new(KB_C.to_string(), s)
    }

    #[test]
    fn round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::open(dir.path()).unwrap();
        let r = store.insert(record()).unwrap();
        let answered = store
            .update(&r.id, |r| {
                submit_answer(&r.session, Answer::Yes).map(|session| SessionRecord {
                    session,
                    ..r.clone()
                })
            })
            .unwrap()
            .unwrap();
        assert_eq!(answered.session.status(), Status::Finished);

        let reopened = SessionStore::open(dir.path()).unwrap();
        assert_eq!(reopened.get(&r.id).unwrap(), answered);
        assert_eq!(reopened.list().len(), 1);
    }

    #[test]
    fn corrupt_files_are_isolated() {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::open(dir.path()).unwrap();
        let good = store.insert(record()).unwrap();
        fs::write(dir.path().join("broken.json"), b"{ not json").unwrap();
        fs::write(dir.path().join("notes.txt"), b"ignored").unwrap();

        let reopened = SessionStore::open(dir.path()).unwrap();
        assert!(reopened.get(&good.id).is_ok());
        assert!(matches!(
            reopened.get("broken"),
            Err(StoreError::Unavailable { .. })
        ));
        let list = reopened.list();
        assert_eq!(list.len(), 2);
        assert!(list
            .iter()
            .any(|s| s.id == "broken" && s.status == "UNAVAILABLE"));
    }

    #[test]
    fn failed_updates_leave_the_record_alone() {
        let store = SessionStore::in_memory();
        let r = store.insert(record()).unwrap();
        let out = store
            .update(&r.id, |_| Err::<SessionRecord, _>("nope"))
            .unwrap();
        assert_eq!(out, Err("nope"));
        assert_eq!(store.get(&r.id).unwrap(), r);
    }

    #[test]
    fn delete_removes_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::open(dir.path()).unwrap();
        let r = store.insert(record()).unwrap();
        assert!(dir.path().join(format!("{}.json", r.id)).exists());
        store.delete(&r.id).unwrap();
        assert!(!dir.path().join(format!("{}.json", r.id)).exists());
        assert!(matches!(store.get(&r.id), Err(StoreError::NotFound(_))));
        assert!(matches!(store.delete(&r.id), Err(StoreError::NotFound(_))));
    }

    #[test]
    fn no_temp_files_remain() {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::open(dir.path()).unwrap();
        for _ in 0..3 {
            store.insert(record()).unwrap();
        }
        let names: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(names.len(), 3);
        assert!(names.iter().all(|n| n.to_string_lossy().ends_with(".json")));
    }
}
