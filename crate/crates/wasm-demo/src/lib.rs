//! Browser bindings. Every export takes and returns JSON strings; the
//! `*_json` functions hold the logic and are testable natively.

use serde::{Deserialize, Serialize};
use vlnplan::fixtures::{generate, FixtureConfig};
use vlnplan::metrics::{evaluate, MetricsReport};
use vlnplan::planner::{Ablation, StopReason};
use vlnplan::scene::{Position, SceneFile};
use vlnplan::{DriftOracle, Episode, GreedyOracle, InstructionParser, Planner, PlannerConfig, Scene};
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize, Deserialize)]
pub struct Maze {
    pub scene: SceneFile,
    pub episode: Episode,
}

#[derive(Debug, Deserialize)]
pub struct RunRequest {
    pub maze: Maze,
    /// `greedy` or `drift`.
    pub navigator: String,
    #[serde(default)]
    pub drift_p: f64,
    #[serde(default)]
    pub seed: u64,
    /// `full`, `no-backward` or `local-only`.
    pub ablation: String,
}

#[derive(Debug, Serialize)]
pub struct RunView {
    pub physical: Vec<Position>,
    pub logical: Vec<Position>,
    pub reference: Vec<Position>,
    pub stop_reason: StopReason,
    pub steps: usize,
    pub audits: usize,
    pub backtracks: usize,
    pub metrics: MetricsReport,
    pub log: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Segment {
    pub text: String,
    pub landmark: String,
}

pub fn generate_maze_json(seed: u64, size: usize, distractor_rate: f64) -> Result<String, String> {
    let mut set = generate(&FixtureConfig { count: 1, seed, size, distractor_rate, ..Default::default() })
        .map_err(|e| e.to_string())?;
    let maze = Maze { scene: set.scenes.remove(0).to_file(), episode: set.episodes.remove(0) };
    serde_json::to_string(&maze).map_err(|e| e.to_string())
}

pub fn run_episode_json(request: &str) -> Result<String, String> {
    let req: RunRequest = serde_json::from_str(request).map_err(|e| format!("bad request: {e}"))?;
    let scene = Scene::new(req.maze.scene).map_err(|e| e.to_string())?;
    let episode = req.maze.episode;
    let ablation = match req.ablation.as_str() {
        "full" => Ablation::FULL,
        "no-backward" => Ablation::NO_BACKWARD,
        "local-only" => Ablation::LOCAL_ONLY,
        other => return Err(format!("unknown ablation `{other}`")),
    };
    let planner = Planner::new(PlannerConfig { ablation, ..Default::default() }, InstructionParser::default());
    let greedy = GreedyOracle::new(&scene, InstructionParser::default(), 3.0);
    let result = match req.navigator.as_str() {
        "greedy" => planner.run_episode(&scene, &episode, &mut { greedy }),
        "drift" => {
            let mut nav = DriftOracle::new(greedy, req.drift_p, req.seed).map_err(|e| e.to_string())?;
            planner.run_episode(&scene, &episode, &mut nav)
        }
        other => return Err(format!("unknown navigator `{other}`")),
    }
    .map_err(|e| e.to_string())?;
    let metrics = evaluate(&scene, &episode, &result).map_err(|e| e.to_string())?;
    let pos = |ids: &[vlnplan::NodeId]| -> Result<Vec<Position>, String> {
        ids.iter().map(|id| scene.position(id).map_err(|e| e.to_string())).collect()
    };
    let view = RunView {
        physical: pos(&result.physical_path)?,
        logical: pos(&result.logical_path)?,
        reference: pos(&episode.reference_path)?,
        stop_reason: result.stop_reason,
        steps: result.steps_used,
        audits: result.audits,
        backtracks: result.backtracks,
        metrics,
        log: result
            .decisions
            .iter()
            .map(|d| {
                let flag = d.flag.as_deref().map(|f| format!(" [{f}]")).unwrap_or_default();
                format!("{:>2} {:<8} {}{flag}", d.step, format!("{:?}", d.phase).to_lowercase(), d.decision)
            })
            .collect(),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

pub fn segment_json(instruction: &str) -> Result<String, String> {
    let parser = InstructionParser::default();
    let segments: Vec<Segment> = parser
        .segment(instruction)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|text| Segment { landmark: parser.landmark(&text), text })
        .collect();
    serde_json::to_string(&segments).map_err(|e| e.to_string())
}

#[wasm_bindgen(start)]
pub fn start() {
    console_error_panic_hook::set_once();
}

#[wasm_bindgen(js_name = generateMaze)]
pub fn generate_maze(seed: u32, size: u32, distractor_rate: f64) -> Result<String, JsValue> {
    generate_maze_json(u64::from(seed), size as usize, distractor_rate).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = runEpisode)]
pub fn run_episode(request: &str) -> Result<String, JsValue> {
    run_episode_json(request).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = segmentInstruction)]
pub fn segment_instruction(instruction: &str) -> Result<String, JsValue> {
    segment_json(instruction).map_err(|e| JsValue::from_str(&e))
}
