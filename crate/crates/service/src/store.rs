//! On-disk persistence: one append-only JSON-lines event log per session,
//! plus a periodic snapshot so loading does not replay from the start.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ApiError, ApiResult};
use crate::session::{Event, SessionState};

pub const SNAPSHOT_EVERY: u64 = 100;

#[derive(Serialize, Deserialize)]
struct Snapshot {
    events_applied: u64,
    state: SessionState,
}

/// Append handle for one session's log.
#[derive(Debug)]
pub struct EventLog {
    dir: PathBuf,
    id: String,
    file: File,
}

fn log_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.events.jsonl"))
}

fn snapshot_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.snapshot.json"))
}

impl EventLog {
    /// Start a new log whose first line is the creation event.
    pub fn create(dir: &Path, state: &SessionState) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        let file = OpenOptions::new()
            .create_new(true)
            .append(true)
            .open(log_path(dir, &state.id))?;
        let mut log = EventLog {
            dir: dir.to_path_buf(),
            id: state.id.clone(),
            file,
        };
        log.write_line(&state.history[0])?;
        Ok(log)
    }

    fn open(dir: &Path, id: &str) -> io::Result<Self> {
        let file = OpenOptions::new().append(true).open(log_path(dir, id))?;
        Ok(EventLog {
            dir: dir.to_path_buf(),
            id: id.to_string(),
            file,
        })
    }

    fn write_line(&mut self, event: &Event) -> io::Result<()> {
        let mut line = serde_json::to_vec(event).map_err(io::Error::other)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.flush()
    }

    /// Append an event already applied to `state`, snapshotting when due.
    pub fn append(&mut self, event: &Event, state: &SessionState) -> io::Result<()> {
        self.write_line(event)?;
        if state.events_logged.is_multiple_of(SNAPSHOT_EVERY) {
            self.snapshot(state)?;
        }
        Ok(())
    }

    pub fn snapshot(&self, state: &SessionState) -> io::Result<()> {
        let snap = Snapshot {
            events_applied: state.events_logged,
            state: state.clone(),
        };
        let path = snapshot_path(&self.dir, &self.id);
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_vec(&snap).map_err(io::Error::other)?)?;
        fs::rename(tmp, path)
    }

    pub fn sync(&self) -> io::Result<()> {
        self.file.sync_data()
    }
}

fn corrupt(path: &Path, msg: impl std::fmt::Display) -> ApiError {
    ApiError::internal(format!("{}: {msg}", path.display()))
}

/// Rebuild one session from its snapshot (if any) and the log tail.
pub fn load_session(dir: &Path, id: &str) -> ApiResult<(SessionState, EventLog)> {
    let path = log_path(dir, id);
    let reader = BufReader::new(File::open(&path).map_err(|e| corrupt(&path, e))?);
    let mut events = Vec::new();
    let mut lines = reader.lines().peekable();
    while let Some(line) = lines.next() {
        let line = line.map_err(|e| corrupt(&path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Event>(&line) {
            Ok(e) => events.push(e),
            // A torn final line from an interrupted write is dropped.
            Err(_) if lines.peek().is_none() => break,
            Err(e) => return Err(corrupt(&path, e)),
        }
    }
    if events.is_empty() {
        return Err(corrupt(&path, "empty event log"));
    }

    let snap_path = snapshot_path(dir, id);
    let snapshot = fs::read(&snap_path)
        .ok()
        .and_then(|bytes| serde_json::from_slice::<Snapshot>(&bytes).ok())
        .filter(|s| s.events_applied as usize <= events.len() && s.state.id == id);
    let (mut state, skip) = match snapshot {
        Some(s) => (s.state, s.events_applied as usize),
        None => (SessionState::from_created(&events[0])?, 1),
    };
    for e in &events[skip..] {
        state.apply(e).map_err(|err| corrupt(&path, err))?;
    }
    let log = EventLog::open(dir, id).map_err(|e| corrupt(&path, e))?;
    Ok((state, log))
}

/// Ids of every session with a log in `dir`.
pub fn session_ids(dir: &Path) -> io::Result<Vec<String>> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut ids: Vec<String> = fs::read_dir(dir)?
        .filter_map(|entry| {
            let name = entry.ok()?.file_name().into_string().ok()?;
            name.strip_suffix(".events.jsonl").map(str::to_string)
        })
        .collect();
    ids.sort();
    Ok(ids)
}
