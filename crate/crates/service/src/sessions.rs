//! Per-session event logs. Each session has its own lock, so batches for
//! one session are applied in order while different sessions proceed in
//! parallel.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use emosuggest_core::session::{BatchOutcome, EventKind, SessionEvent, SessionLog, TimingConfig};
use emosuggest_core::SessionError;

use crate::labels::LabelStore;

#[derive(Debug, thiserror::Error)]
pub enum SessionStoreError {
    #[error("invalid session id {0:?}")]
    InvalidId(String),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("session log: {0}")]
    Io(#[from] io::Error),
}

/// Session ids double as file names: 1–64 characters from
/// `[A-Za-z0-9_.-]`, not starting with a dot.
pub fn valid_session_id(id: &str) -> bool {
    (1..=64).contains(&id.len())
        && !id.starts_with('.')
        && id.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.'))
}

#[derive(Debug, Default)]
pub struct SessionRegistry {
    dir: Option<PathBuf>,
    sessions: Mutex<HashMap<String, Arc<Mutex<SessionLog>>>>,
}

impl SessionRegistry {
    pub fn in_memory() -> Self {
        SessionRegistry::default()
    }

    /// Event logs are kept in `dir/<session_id>.jsonl`.
    pub fn persistent(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(SessionRegistry {
            dir: Some(dir),
            sessions: Mutex::default(),
        })
    }

    fn log_path(&self, id: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{id}.jsonl")))
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<SessionLog>>, SessionStoreError> {
        let mut sessions = self.sessions.lock().expect("session registry lock");
        if let Some(s) = sessions.get(id) {
            return Ok(s.clone());
        }
        let log = match self.log_path(id) {
            Some(path) if path.exists() => SessionLog::restore(read_events(&path)?)?,
            _ => SessionLog::default(),
        };
        let log = Arc::new(Mutex::new(log));
        sessions.insert(id.to_string(), log.clone());
        Ok(log)
    }

    /// Applies a batch, persists its events and stores any derived labels.
    pub fn append(
        &self,
        id: &str,
        idempotency_key: Option<&str>,
        events: &[SessionEvent],
        timing: &TimingConfig,
        labels: &LabelStore,
    ) -> Result<BatchOutcome, SessionStoreError> {
        if !valid_session_id(id) {
            return Err(SessionStoreError::InvalidId(id.to_string()));
        }
        let session = self.session(id)?;
        let mut log = session.lock().expect("session lock");
        let outcome = log.append_batch(id, idempotency_key, events, timing)?;
        if outcome.duplicate {
            return Ok(outcome);
        }
        if let Some(path) = self.log_path(id) {
            append_events(&path, events)?;
        }
        labels.append(&outcome.labels)?;
        Ok(outcome)
    }

    pub fn last_t(&self, id: &str) -> Option<u64> {
        let sessions = self.sessions.lock().expect("session registry lock");
        let log = sessions.get(id)?.lock().expect("session lock");
        log.last_t()
    }
}

fn read_events(path: &Path) -> io::Result<Vec<SessionEvent>> {
    let mut events = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        events.push(serde_json::from_str(&line).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?);
    }
    Ok(events)
}

fn append_events(path: &Path, events: &[SessionEvent]) -> io::Result<()> {
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut buf = Vec::new();
    for e in events {
        serde_json::to_writer(&mut buf, e)?;
        buf.push(b'\n');
    }
    file.write_all(&buf)?;
    if events.iter().any(|e| e.kind == EventKind::Send) {
        file.sync_data()?;
    }
    Ok(())
}
