//! Structured-block extraction from free-form model output.

use serde_json::{Map, Value};
use vlnplan::instruction::{build_plan, Plan};
use vlnplan::navigator::{AuditVerdict, MetaAction, WaypointChoice};

use crate::ClientError;

fn err(msg: impl Into<String>) -> ClientError {
    ClientError::Parse(msg.into())
}

/// First JSON object in `raw` (at any nesting start) that has `key`.
pub fn find_block(raw: &str, key: &str) -> Option<Map<String, Value>> {
    for (i, _) in raw.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&raw[i..]).into_iter::<Value>();
        if let Some(Ok(Value::Object(map))) = stream.next() {
            if map.contains_key(key) {
                return Some(map);
            }
        }
    }
    None
}

fn index_field(map: &Map<String, Value>, key: &str) -> Result<usize, ClientError> {
    let v = &map[key];
    if let Some(u) = v.as_u64() {
        return usize::try_from(u).map_err(|_| err(format!("`{key}` too large")));
    }
    // integral floats such as 2.0 are accepted
    match v.as_f64() {
        Some(f) if f >= 0.0 && f.fract() == 0.0 && f < 1e15 => Ok(f as usize),
        _ => Err(err(format!("`{key}` must be a non-negative integer, got {v}"))),
    }
}

fn why(map: &Map<String, Value>) -> String {
    map.get("why").and_then(Value::as_str).unwrap_or_default().to_string()
}

/// Parses `{"choice": 1..n, "distance_m": number, "why": text}`.
pub fn parse_choice(raw: &str, n_candidates: usize) -> Result<WaypointChoice, ClientError> {
    let map = find_block(raw, "choice").ok_or_else(|| err("no block with `choice`"))?;
    let choice = index_field(&map, "choice")?;
    if !(1..=n_candidates).contains(&choice) {
        return Err(err(format!("choice {choice} outside 1..={n_candidates}")));
    }
    let distance = map
        .get("distance_m")
        .and_then(Value::as_f64)
        .ok_or_else(|| err("`distance_m` missing or not a number"))?;
    if !(distance >= 0.0 && distance.is_finite()) {
        return Err(err(format!("`distance_m` must be a non-negative number, got {distance}")));
    }
    Ok(WaypointChoice { candidate_index: choice, estimated_landmark_distance: distance, rationale: why(&map) })
}

/// Parses `{"satisfied": [bool; n], "action": ..., "backtrack_to": int, "why": text}`.
pub fn parse_audit(raw: &str, n_finished: usize) -> Result<AuditVerdict, ClientError> {
    let map = find_block(raw, "satisfied").ok_or_else(|| err("no block with `satisfied`"))?;
    let satisfied = map["satisfied"]
        .as_array()
        .ok_or_else(|| err("`satisfied` is not a list"))?
        .iter()
        .map(|v| v.as_bool().ok_or_else(|| err(format!("`satisfied` entry {v} is not a boolean"))))
        .collect::<Result<Vec<bool>, _>>()?;
    if satisfied.len() != n_finished {
        return Err(err(format!(
            "{} satisfaction flags for {n_finished} finished sub-instructions",
            satisfied.len()
        )));
    }
    let action = map.get("action").and_then(Value::as_str).ok_or_else(|| err("`action` missing"))?;
    let target = match map.get("backtrack_to") {
        None | Some(Value::Null) => None,
        Some(_) => Some(index_field(&map, "backtrack_to")?),
    };
    let meta_action = match (action.trim().to_ascii_lowercase().replace('-', "_").as_str(), target) {
        ("continue", None) => MetaAction::Continue,
        ("stay", None) => MetaAction::Stay,
        ("look_around", None) => MetaAction::LookAround,
        ("backtrack", Some(target_index)) => MetaAction::Backtrack { target_index },
        ("backtrack", None) => return Err(err("`backtrack` requires `backtrack_to`")),
        ("continue" | "stay" | "look_around", Some(_)) => {
            return Err(err(format!("`backtrack_to` given with action `{action}`")))
        }
        (other, _) => return Err(err(format!("unknown action `{other}`"))),
    };
    Ok(AuditVerdict { satisfied, meta_action, rationale: why(&map), parse_fallback: false })
}

/// Parses `{"sub_instructions": [{"text": ..., "landmark": ...}]}`.
pub fn parse_plan(raw: &str) -> Result<Plan, ClientError> {
    let map = find_block(raw, "sub_instructions").ok_or_else(|| err("no block with `sub_instructions`"))?;
    let items = map["sub_instructions"].as_array().ok_or_else(|| err("`sub_instructions` is not a list"))?;
    let mut fragments = Vec::with_capacity(items.len());
    let mut landmarks = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let (text, landmark) = match item {
            Value::String(s) => (s.clone(), String::new()),
            Value::Object(o) => (
                o.get("text").and_then(Value::as_str).ok_or_else(|| err(format!("item {i} has no text")))?.to_string(),
                o.get("landmark").and_then(Value::as_str).unwrap_or_default().trim().to_lowercase(),
            ),
            _ => return Err(err(format!("item {i} is neither text nor an object"))),
        };
        fragments.push(text.trim().to_string());
        landmarks.push(landmark);
    }
    build_plan(fragments, landmarks).map_err(|e| err(e.to_string()))
}
