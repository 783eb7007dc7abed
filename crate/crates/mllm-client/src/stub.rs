//! Minimal local chat-completions server for offline tests and demos. One
//! thread per connection, `Connection: close`, no TLS.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

/// Computes `(status, body)` from the request body and the 0-based hit count.
pub type Handler = dyn Fn(&str, usize) -> (u16, String) + Send + Sync;

pub struct StubServer {
    addr: std::net::SocketAddr,
    hits: Arc<AtomicUsize>,
    peak: Arc<AtomicUsize>,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

/// Wraps message text in a chat-completions response body.
pub fn completion(text: &str) -> String {
    serde_json::json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]}).to_string()
}

/// Text of the last message in a request body, or the raw body.
pub fn last_user_text(body: &str) -> String {
    serde_json::from_str::<serde_json::Value>(body)
        .ok()
        .and_then(|v| {
            let content = v.pointer("/messages")?.as_array()?.last()?.get("content")?.clone();
            match content {
                serde_json::Value::String(s) => Some(s),
                serde_json::Value::Array(parts) => {
                    Some(parts.iter().filter_map(|p| p.get("text")?.as_str().map(str::to_string)).collect())
                }
                _ => None,
            }
        })
        .unwrap_or_else(|| body.to_string())
}

fn read_request(stream: &mut TcpStream) -> std::io::Result<String> {
    let mut reader = BufReader::new(stream);
    let mut length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body)?;
    Ok(String::from_utf8_lossy(&body).into_owned())
}

impl StubServer {
    pub fn start(handler: impl Fn(&str, usize) -> (u16, String) + Send + Sync + 'static) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let hits = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        let active = Arc::new(AtomicUsize::new(0));
        let stop = Arc::new(AtomicBool::new(false));
        let handler: Arc<Handler> = Arc::new(handler);
        let thread = {
            let (hits, peak, stop) = (hits.clone(), peak.clone(), stop.clone());
            std::thread::spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(mut stream) = stream else { continue };
                    let (hits, peak, active, handler) = (hits.clone(), peak.clone(), active.clone(), handler.clone());
                    std::thread::spawn(move || {
                        let now = active.fetch_add(1, Ordering::SeqCst) + 1;
                        peak.fetch_max(now, Ordering::SeqCst);
                        if let Ok(body) = read_request(&mut stream) {
                            let n = hits.fetch_add(1, Ordering::SeqCst);
                            let (status, reply) = handler(&body, n);
                            let head = format!(
                                "HTTP/1.1 {status} Stub\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                                reply.len()
                            );
                            let _ = stream.write_all(head.as_bytes());
                            let _ = stream.write_all(reply.as_bytes());
                        }
                        active.fetch_sub(1, Ordering::SeqCst);
                    });
                }
            })
        };
        Ok(Self { addr, hits, peak, stop, thread: Some(thread) })
    }

    /// Base URL to put in an endpoint config.
    pub fn base_url(&self) -> String {
        format!("http://{}/v1", self.addr)
    }

    /// Requests served so far.
    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    /// Most requests seen in flight at once.
    pub fn peak_concurrency(&self) -> usize {
        self.peak.load(Ordering::SeqCst)
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the accept loop
        let _ = TcpStream::connect(self.addr);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

fn section<'a>(prompt: &'a str, header: &str) -> &'a str {
    let Some(start) = prompt.find(header).map(|i| i + header.len()) else { return "" };
    let rest = &prompt[start..];
    rest.find("\n\n").map_or(rest, |end| &rest[..end]).trim()
}

/// A deterministic stand-in model for the shipped templates: segments the
/// instruction with the rule-based parser, walks toward a candidate whose
/// description mentions the landmark, and approves every audit.
pub fn heuristic_reply(prompt: &str) -> String {
    if prompt.contains("Split the instruction") {
        let instruction = section(prompt, "Instruction:\n");
        let parser = vlnplan::InstructionParser::default();
        let items: Vec<serde_json::Value> = parser
            .segment(instruction)
            .unwrap_or_else(|_| vec![instruction.to_string()])
            .into_iter()
            .map(|f| serde_json::json!({"text": f, "landmark": parser.landmark(&f)}))
            .collect();
        return serde_json::json!({ "sub_instructions": items }).to_string();
    }
    if prompt.contains("Navigable candidate viewpoints") {
        let sub = section(prompt, "Current sub-instruction:\n");
        let landmark = sub
            .rsplit_once("(landmark: ")
            .map(|(_, l)| l.trim_end_matches(')').to_string())
            .unwrap_or_default();
        let cands = section(prompt, "Navigable candidate viewpoints:\n");
        let hit = cands
            .lines()
            .position(|l| !landmark.is_empty() && l.contains(landmark.as_str()))
            .map(|i| i + 1);
        let (choice, d) = hit.map_or((1, 5.0), |i| (i, 0.5));
        return format!(
            "Looking at the options, I pick this one.\n{}",
            serde_json::json!({"choice": choice, "distance_m": d, "why": "heuristic"})
        );
    }
    let finished = section(prompt, "Finished sub-instructions:\n")
        .lines()
        .filter(|l| l.split_once(". ").is_some_and(|(n, _)| n.chars().all(|c| c.is_ascii_digit())))
        .count();
    serde_json::json!({"satisfied": vec![true; finished], "action": "continue", "why": "heuristic"}).to_string()
}
