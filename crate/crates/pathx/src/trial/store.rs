//! Append-only event log, one JSON record per line.
//!
//! Appends go through a single writer lock; readers clone a snapshot of the
//! folded session table. Opening a log replays it and rejects any sequence
//! the session state machine would not allow.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use pathx_core::trial::{Demographics, SessionState};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct DemographicsRecord {
    pub nationality: Option<String>,
    pub education: Option<String>,
    pub age_band: Option<String>,
    pub gender: Option<String>,
    pub rs_familiarity: Option<bool>,
}

impl From<&DemographicsRecord> for Demographics {
    fn from(d: &DemographicsRecord) -> Self {
        Demographics {
            nationality: d.nationality.clone(),
            education: d.education.clone(),
            age_band: d.age_band.clone(),
            gender: d.gender.clone(),
            rs_familiarity: d.rs_familiarity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleEntry {
    pub item: String,
    pub label: String,
    /// Sentence per scorer name; `None` when the scorer found no path.
    pub explanations: BTreeMap<String, Option<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub question: u8,
    pub goal: String,
    /// The answer as given, e.g. `MoreA`.
    pub answer: String,
    /// Scorer shown on the favoured side, if any.
    pub favoured: Option<String>,
    /// Answer with the side replaced by the scorer, e.g. `more_pem`.
    pub resolved: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    SessionCreated { session: String, demographics: DemographicsRecord },
    Profile { session: String, items: Vec<String> },
    Bundle { session: String, side_a: String, side_b: String, entries: Vec<BundleEntry> },
    Responses { session: String, answers: Vec<AnswerRecord> },
}

impl Event {
    pub fn session(&self) -> &str {
        match self {
            Event::SessionCreated { session, .. }
            | Event::Profile { session, .. }
            | Event::Bundle { session, .. }
            | Event::Responses { session, .. } => session,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionRecord {
    pub id: String,
    pub demographics: DemographicsRecord,
    pub state: SessionState,
    pub profile: Option<Vec<String>>,
    pub side_a: Option<String>,
    pub side_b: Option<String>,
    pub bundle: Vec<BundleEntry>,
    pub answers: Vec<AnswerRecord>,
}

/// Sessions folded from the log, in creation order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Snapshot {
    pub sessions: BTreeMap<String, SessionRecord>,
    pub order: Vec<String>,
}

impl Snapshot {
    /// Applies one event, failing on anything out of sequence.
    pub fn apply(&mut self, e: &Event) -> std::result::Result<(), String> {
        let id = e.session();
        if let Event::SessionCreated { session, demographics } = e {
            if self.sessions.contains_key(session) {
                return Err(format!("session {session} created twice"));
            }
            self.order.push(session.clone());
            self.sessions.insert(
                session.clone(),
                SessionRecord {
                    id: session.clone(),
                    demographics: demographics.clone(),
                    state: SessionState::Created,
                    profile: None,
                    side_a: None,
                    side_b: None,
                    bundle: Vec::new(),
                    answers: Vec::new(),
                },
            );
            return Ok(());
        }
        let s = self.sessions.get_mut(id).ok_or_else(|| format!("unknown session {id}"))?;
        match e {
            Event::SessionCreated { .. } => unreachable!("handled above"),
            Event::Profile { items, .. } => {
                if s.state != SessionState::Created || s.profile.is_some() {
                    return Err(format!("session {id}: profile after {}", s.state));
                }
                s.profile = Some(items.clone());
            }
            Event::Bundle { side_a, side_b, entries, .. } => {
                if s.profile.is_none() {
                    return Err(format!("session {id}: bundle before profile"));
                }
                s.state = s.state.advance(SessionState::Profiled).map_err(|e| e.to_string())?;
                s.side_a = Some(side_a.clone());
                s.side_b = Some(side_b.clone());
                s.bundle = entries.clone();
            }
            Event::Responses { answers, .. } => {
                s.state = s.state.advance(SessionState::Completed).map_err(|e| e.to_string())?;
                s.answers = answers.clone();
            }
        }
        Ok(())
    }

    pub fn completed(&self) -> impl Iterator<Item = &SessionRecord> {
        self.order.iter().map(|id| &self.sessions[id]).filter(|s| s.state == SessionState::Completed)
    }
}

pub struct EventLog {
    path: Option<PathBuf>,
    writer: Mutex<Option<File>>,
    snapshot: RwLock<Arc<Snapshot>>,
    events: Mutex<usize>,
}

impl EventLog {
    /// A log kept in memory only.
    pub fn in_memory() -> Self {
        EventLog {
            path: None,
            writer: Mutex::new(None),
            snapshot: RwLock::new(Arc::new(Snapshot::default())),
            events: Mutex::new(0),
        }
    }

    /// Opens (creating if needed) and replays the log at `path`.
    pub fn open(path: &Path) -> Result<Self> {
        let mut snap = Snapshot::default();
        let mut count = 0;
        if path.exists() {
            let f = File::open(path).map_err(|e| Error::io(path, e))?;
            for (i, line) in BufReader::new(f).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let parse = |msg: String| Error::Parse { path: path.to_path_buf(), line: i as u64 + 1, msg };
                let e: Event = serde_json::from_str(&line).map_err(|e| parse(e.to_string()))?;
                snap.apply(&e).map_err(parse)?;
                count += 1;
            }
        }
        let f = OpenOptions::new().create(true).append(true).open(path).map_err(|e| Error::io(path, e))?;
        Ok(EventLog {
            path: Some(path.to_path_buf()),
            writer: Mutex::new(Some(f)),
            snapshot: RwLock::new(Arc::new(snap)),
            events: Mutex::new(count),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// Validates and appends events as one write; the snapshot changes
    /// only when the write succeeded.
    pub fn append(&self, events: &[Event]) -> Result<()> {
        let mut writer = self.writer.lock().expect("log writer poisoned");
        let mut next = (**self.snapshot.read().expect("snapshot poisoned")).clone();
        let mut buf = Vec::new();
        for e in events {
            next.apply(e).map_err(Error::Other)?;
            serde_json::to_writer(&mut buf, e).map_err(|e| Error::Other(e.to_string()))?;
            buf.push(b'\n');
        }
        if let (Some(f), Some(p)) = (writer.as_mut(), &self.path) {
            f.write_all(&buf).and_then(|_| f.flush()).map_err(|e| Error::io(p, e))?;
        }
        *self.snapshot.write().expect("snapshot poisoned") = Arc::new(next);
        *self.events.lock().expect("counter poisoned") += events.len();
        Ok(())
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        Arc::clone(&self.snapshot.read().expect("snapshot poisoned"))
    }

    pub fn event_count(&self) -> usize {
        *self.events.lock().expect("counter poisoned")
    }
}
