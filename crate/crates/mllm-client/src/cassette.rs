//! Record/replay of chat exchanges keyed by request digest.

use std::collections::{HashMap, VecDeque};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::transport::{ChatRequest, Transport};
use crate::ClientError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CassetteMode {
    /// Straight to the inner transport; nothing persisted.
    Live,
    /// Inner transport, appending every exchange to the cassette.
    Record,
    /// Cassette only; a missing digest is an error.
    Replay,
}

impl FromStr for CassetteMode {
    type Err = ClientError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(Self::Live),
            "record" => Ok(Self::Record),
            "replay" => Ok(Self::Replay),
            other => Err(ClientError::Config(format!("unknown cassette mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub digest: String,
    pub request: ChatRequest,
    pub response: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

pub fn read_cassette(path: &Path) -> Result<Vec<CassetteEntry>, ClientError> {
    let err = |message: String| ClientError::Cassette { path: path.display().to_string(), message };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| err(format!("line {}: {e}", i + 1))))
        .collect()
}

/// Appends every exchange of the inner transport to a cassette file.
pub struct Recorder<T> {
    inner: T,
    path: PathBuf,
    file: Mutex<std::fs::File>,
}

impl<T: Transport> Recorder<T> {
    pub fn create(inner: T, path: impl Into<PathBuf>) -> Result<Self, ClientError> {
        let path = path.into();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| ClientError::Cassette { path: path.display().to_string(), message: e.to_string() })?;
        Ok(Self { inner, path, file: Mutex::new(file) })
    }
}

impl<T: Transport> Transport for Recorder<T> {
    fn send(&self, request: &ChatRequest) -> Result<String, ClientError> {
        let response = self.inner.send(request)?;
        let entry = CassetteEntry {
            digest: request.digest(),
            request: request.clone(),
            response: response.clone(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        };
        let line = serde_json::to_string(&entry).expect("entry serializes") + "\n";
        self.file
            .lock()
            .expect("cassette lock")
            .write_all(line.as_bytes())
            .map_err(|e| ClientError::Cassette { path: self.path.display().to_string(), message: e.to_string() })?;
        Ok(response)
    }
}

/// Serves responses from a cassette. Repeated identical requests are answered
/// in recorded order; the last answer repeats once the queue runs dry.
pub struct Player {
    queues: Mutex<HashMap<String, (VecDeque<String>, String)>>,
}

impl Player {
    pub fn open(path: &Path) -> Result<Self, ClientError> {
        Ok(Self::from_entries(read_cassette(path)?))
    }

    pub fn from_entries(entries: Vec<CassetteEntry>) -> Self {
        let mut queues: HashMap<String, (VecDeque<String>, String)> = HashMap::new();
        for e in entries {
            let slot = queues.entry(e.digest).or_default();
            slot.0.push_back(e.response.clone());
            slot.1 = e.response;
        }
        Self { queues: Mutex::new(queues) }
    }
}

impl Transport for Player {
    fn send(&self, request: &ChatRequest) -> Result<String, ClientError> {
        let digest = request.digest();
        let mut queues = self.queues.lock().expect("cassette lock");
        let (queue, last) = queues.get_mut(&digest).ok_or(ClientError::CassetteMiss(digest))?;
        Ok(queue.pop_front().unwrap_or_else(|| last.clone()))
    }
}

/// Wraps `inner` according to `mode`. Replay needs no inner transport; live
/// and record do.
pub fn record_replay(
    mode: CassetteMode,
    cassette: Option<&Path>,
    inner: Option<Arc<dyn Transport>>,
) -> Result<Arc<dyn Transport>, ClientError> {
    let need_inner = || inner.clone().ok_or_else(|| ClientError::Config("no live transport configured".into()));
    let need_path = || cassette.ok_or_else(|| ClientError::Config("cassette path required".into()));
    Ok(match mode {
        CassetteMode::Live => need_inner()?,
        CassetteMode::Record => Arc::new(Recorder::create(need_inner()?, need_path()?)?),
        CassetteMode::Replay => Arc::new(Player::open(need_path()?)?),
    })
}
