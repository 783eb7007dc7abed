use std::fmt::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use vlnplan::navigator::{AuditRequest, AuditVerdict, HistoryEntry, Navigator, NavigatorError, WaypointChoice};
use vlnplan::scene::{Candidate, Observation};
use vlnplan::suite::NavigatorFactory;
use vlnplan::{Episode, Plan, Scene, SubInstruction};

use crate::parse::{parse_audit, parse_choice, parse_plan};
use crate::templates::{Phase, Templates};
use crate::transport::{ChatRequest, Message, Transport};
use crate::ClientError;

const SYSTEM: &str = "You are the planner of an embodied navigation agent. \
Reason briefly, then answer with exactly the JSON object the user asks for.";

/// How many history entries the look-now prompt shows.
const HISTORY_WINDOW: usize = 8;

fn to_nav(e: ClientError) -> NavigatorError {
    match e {
        ClientError::Parse(m) => NavigatorError::Parse(m),
        other => NavigatorError::Transport(other.to_string()),
    }
}

/// Navigator backed by a chat-completions endpoint. Never sees ground truth.
pub struct NetworkedNavigator {
    transport: Arc<dyn Transport>,
    templates: Arc<Templates>,
    model: String,
    images: bool,
    image_root: Option<PathBuf>,
}

impl NetworkedNavigator {
    pub fn new(transport: Arc<dyn Transport>, templates: Arc<Templates>, model: impl Into<String>) -> Self {
        Self { transport, templates, model: model.into(), images: false, image_root: None }
    }

    /// Attach candidate images; relative refs resolve against `root`.
    pub fn with_images(mut self, root: Option<PathBuf>) -> Self {
        self.images = true;
        self.image_root = root;
        self
    }

    fn ask(&self, phase: Phase, values: &[(&str, &str)], images: Vec<String>) -> Result<String, NavigatorError> {
        let prompt = self.templates.get(phase).render(values).map_err(to_nav)?;
        let request = ChatRequest {
            model: self.model.clone(),
            messages: vec![Message::system(SYSTEM), Message::user_with_images(prompt, images)],
            temperature: 0.0,
        };
        self.transport.send(&request).map_err(to_nav)
    }

    fn data_url(&self, image_ref: &str) -> Option<String> {
        let path = match &self.image_root {
            Some(root) if Path::new(image_ref).is_relative() => root.join(image_ref),
            _ => PathBuf::from(image_ref),
        };
        let bytes = std::fs::read(&path).ok()?;
        let mime = match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("png") => "image/png",
            Some("jpg" | "jpeg") => "image/jpeg",
            Some("webp") => "image/webp",
            Some("gif") => "image/gif",
            _ => "application/octet-stream",
        };
        Some(format!("data:{mime};base64,{}", STANDARD.encode(bytes)))
    }
}

pub fn describe_observation(obs: &Observation) -> String {
    let mut out = String::new();
    for (i, s) in obs.sectors.iter().enumerate() {
        let _ = write!(out, "{:>2}. {:>3}°: {}", i + 1, s.heading_deg, s.description);
        if !s.landmarks.is_empty() {
            let _ = write!(out, " [landmarks: {}]", s.landmarks.join(", "));
        }
        out.push('\n');
    }
    out
}

pub fn describe_candidates(cands: &[Candidate]) -> String {
    let mut out = String::new();
    for c in cands {
        let _ = writeln!(
            out,
            "{}. {:.0}° to the right of the current heading, {:.1} m away: {}",
            c.index, c.relative_heading, c.distance, c.description
        );
    }
    out
}

pub fn describe_history(history: &[HistoryEntry]) -> String {
    if history.is_empty() {
        return "(none)\n".into();
    }
    let mut out = String::new();
    for h in &history[history.len().saturating_sub(HISTORY_WINDOW)..] {
        let marks = if h.landmarks_seen.is_empty() { "none".to_string() } else { h.landmarks_seen.join(", ") };
        let _ = writeln!(
            out,
            "event {}: node {} ({}), {:.1} m, landmarks: {marks}",
            h.step, h.node, h.chosen_description, h.traveled
        );
    }
    out
}

pub fn describe_finished(plan: &Plan) -> String {
    let mut out = String::new();
    for s in plan.finished() {
        let _ = write!(out, "{}. {}", s.index + 1, s.text);
        if !s.landmark.is_empty() {
            let _ = write!(out, " [landmark: {}]", s.landmark);
        }
        out.push('\n');
    }
    out
}

impl Navigator for NetworkedNavigator {
    fn decompose(&mut self, instruction: &str, initial: &Observation) -> Result<Plan, NavigatorError> {
        let obs = describe_observation(initial);
        let raw = self.ask(Phase::Forward, &[("instruction", instruction), ("observation", &obs)], Vec::new())?;
        parse_plan(&raw).map_err(to_nav)
    }

    fn choose_waypoint(
        &mut self,
        sub: &SubInstruction,
        candidates: &[Candidate],
        history: &[HistoryEntry],
    ) -> Result<WaypointChoice, NavigatorError> {
        if candidates.is_empty() {
            return Err(NavigatorError::NoCandidates);
        }
        let sub_text = if sub.landmark.is_empty() {
            sub.text.clone()
        } else {
            format!("{} (landmark: {})", sub.text, sub.landmark)
        };
        let images = if self.images {
            candidates.iter().filter_map(|c| c.image_ref.as_deref()).filter_map(|r| self.data_url(r)).collect()
        } else {
            Vec::new()
        };
        let raw = self.ask(
            Phase::Now,
            &[
                ("sub_instruction", &sub_text),
                ("candidates", &describe_candidates(candidates)),
                ("history", &describe_history(history)),
            ],
            images,
        )?;
        parse_choice(&raw, candidates.len()).map_err(to_nav)
    }

    fn audit(&mut self, request: &AuditRequest<'_>) -> Result<AuditVerdict, NavigatorError> {
        // request.goal_known is deliberately ignored
        let raw = self.ask(
            Phase::Backward,
            &[("replay", request.replay), ("finished_subs", &describe_finished(request.plan))],
            Vec::new(),
        )?;
        parse_audit(&raw, request.plan.finished_count()).map_err(to_nav)
    }
}

/// One networked navigator per episode over a shared transport.
pub struct NetworkedFactory {
    pub transport: Arc<dyn Transport>,
    pub templates: Arc<Templates>,
    pub model: String,
    pub images: bool,
    pub image_root: Option<PathBuf>,
}

impl NavigatorFactory for NetworkedFactory {
    fn create<'a>(&self, _scene: &'a Scene, _episode: &'a Episode) -> Result<Box<dyn Navigator + 'a>, String> {
        let nav = NetworkedNavigator::new(self.transport.clone(), self.templates.clone(), self.model.clone());
        Ok(Box::new(if self.images { nav.with_images(self.image_root.clone()) } else { nav }))
    }
}
