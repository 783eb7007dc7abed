//! The look-forward / look-now / look-backward episode loop.

mod log;
mod meta;
mod replay;

pub use log::{inputs_digest, sha256_hex, to_jsonl, DecisionRecord, Phase};
pub use meta::{apply_meta_action, MetaOutcome};
pub use replay::assemble_replay;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::episode::{Episode, EpisodeError};
use crate::instruction::{InstructionParser, Plan};
use crate::navigator::{AuditRequest, AuditVerdict, HistoryEntry, Navigator};
use crate::scene::{NodeId, Pose, Scene, SceneError};

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    #[error("invalid planner config: {0}")]
    Config(String),
    #[error("cannot build a plan: {0}")]
    Plan(String),
}

/// Which planner stages are switched off.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ablation {
    /// Skip look-forward: the whole instruction is a single sub-goal.
    pub no_forward: bool,
    /// Skip look-backward: reaching the distance gate verifies immediately.
    pub no_backward: bool,
}

impl Ablation {
    pub const FULL: Self = Self {
        no_forward: false,
        no_backward: false,
    };
    pub const NO_BACKWARD: Self = Self {
        no_forward: false,
        no_backward: true,
    };
    pub const LOCAL_ONLY: Self = Self {
        no_forward: true,
        no_backward: true,
    };

    pub fn label(&self) -> &'static str {
        match (self.no_forward, self.no_backward) {
            (false, false) => "full",
            (false, true) => "no-backward",
            (true, true) => "local-only",
            (true, false) => "no-forward",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Landmark distance below which a sub-goal is ready for audit (meters).
    pub distance_threshold: f64,
    pub max_steps: usize,
    pub max_consecutive_stays: usize,
    pub max_backtracks: usize,
    pub ablation: Ablation,
    /// Hand the true goal to the audit. Only scripted oracles use it.
    #[serde(default)]
    pub reveal_goal: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            distance_threshold: 3.0,
            max_steps: 40,
            max_consecutive_stays: 2,
            max_backtracks: 3,
            ablation: Ablation::FULL,
            reveal_goal: false,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlannerError> {
        if !(self.distance_threshold > 0.0 && self.distance_threshold.is_finite()) {
            return Err(PlannerError::Config(format!(
                "distance threshold must be positive, got {}",
                self.distance_threshold
            )));
        }
        if self.max_consecutive_stays == 0 || self.max_backtracks == 0 {
            return Err(PlannerError::Config("stay and backtrack budgets must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    CompletedPlan,
    StepBudget,
    NoCandidates,
    BacktrackBudget,
}

/// Mutable per-episode trajectory bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryState {
    pub pose: Pose,
    /// Committed waypoints (τ); entry 0 is the start.
    pub logical: Vec<HistoryEntry>,
    /// Everything remembered for the navigator, including look-arounds.
    pub history: Vec<HistoryEntry>,
    pub odometry_total: f64,
    pub physical_path: Vec<NodeId>,
    pub step_count: usize,
    pub consecutive_stays: usize,
    pub backtracks: usize,
    next_event: u64,
}

impl TrajectoryState {
    pub fn new(scene: &Scene, start: Pose) -> Result<Self, SceneError> {
        let node = scene.node(&start.node)?;
        let entry = HistoryEntry {
            step: 0,
            node: start.node.clone(),
            chosen_description: "start".into(),
            traveled: 0.0,
            landmarks_seen: node.landmarks(),
        };
        Ok(Self {
            physical_path: vec![start.node.clone()],
            pose: start,
            logical: vec![entry.clone()],
            history: vec![entry],
            odometry_total: 0.0,
            step_count: 0,
            consecutive_stays: 0,
            backtracks: 0,
            next_event: 1,
        })
    }

    /// Appends to the navigator-facing history with a fresh sequence number.
    pub(crate) fn remember(&mut self, mut entry: HistoryEntry) -> HistoryEntry {
        entry.step = self.next_event;
        self.next_event += 1;
        self.history.push(entry.clone());
        entry
    }

    /// Commits a move to an adjacent node as a new logical waypoint.
    pub fn commit_move(&mut self, scene: &Scene, target: &NodeId, description: &str) -> Result<f64, SceneError> {
        let (pose, len) = scene.step_to(&self.pose, target)?;
        self.pose = pose;
        self.odometry_total += len;
        self.physical_path.push(target.clone());
        self.step_count += 1;
        let landmarks_seen = scene.node(target)?.landmarks();
        let entry = self.remember(HistoryEntry {
            step: 0,
            node: target.clone(),
            chosen_description: description.to_string(),
            traveled: len,
            landmarks_seen,
        });
        self.logical.push(entry);
        Ok(len)
    }

    pub fn logical_nodes(&self) -> Vec<NodeId> {
        self.logical.iter().map(|h| h.node.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub episode_id: String,
    pub stop_pose: Pose,
    pub physical_path: Vec<NodeId>,
    pub logical_path: Vec<NodeId>,
    pub odometry_total: f64,
    pub steps_used: usize,
    pub stop_reason: StopReason,
    pub audits: usize,
    pub backtracks: usize,
    pub plan: Plan,
    pub decisions: Vec<DecisionRecord>,
}

/// Episode runner bound to a configuration and instruction lexicons.
#[derive(Debug, Clone, Default)]
pub struct Planner {
    pub config: PlannerConfig,
    pub parser: InstructionParser,
}

/// Runs one episode with the default lexicons.
pub fn run_episode(
    scene: &Scene,
    episode: &Episode,
    navigator: &mut dyn Navigator,
    config: &PlannerConfig,
) -> Result<EpisodeResult, PlannerError> {
    Planner {
        config: config.clone(),
        parser: InstructionParser::default(),
    }
    .run_episode(scene, episode, navigator)
}

struct Run<'a> {
    scene: &'a Scene,
    episode: &'a Episode,
    config: &'a PlannerConfig,
    state: TrajectoryState,
    plan: Plan,
    decisions: Vec<DecisionRecord>,
    audits: usize,
}

impl Run<'_> {
    fn log(&mut self, phase: Phase, digest: String, decision: String, rationale: String, flag: Option<String>) {
        self.decisions.push(DecisionRecord {
            step: self.state.step_count,
            phase,
            inputs_digest: digest,
            decision,
            rationale,
            flag,
        });
    }

    fn finish(self, stop_reason: StopReason) -> EpisodeResult {
        EpisodeResult {
            episode_id: self.episode.episode_id.clone(),
            stop_pose: self.state.pose.clone(),
            logical_path: self.state.logical_nodes(),
            physical_path: self.state.physical_path,
            odometry_total: self.state.odometry_total,
            steps_used: self.state.step_count,
            stop_reason,
            audits: self.audits,
            backtracks: self.state.backtracks,
            plan: self.plan,
            decisions: self.decisions,
        }
    }

    /// Verifies the current sub-goal without navigator approval.
    fn force_continue(&mut self, why: &str) -> bool {
        let done = self.plan.advance();
        self.state.consecutive_stays = 0;
        self.log(
            Phase::Backward,
            inputs_digest(&[why]),
            "continue".into(),
            why.to_string(),
            Some("forced-continue".into()),
        );
        done
    }

    /// Look-backward loop at a distance gate. Returns a stop reason when the
    /// episode has to end.
    fn audit_gate(&mut self, navigator: &mut dyn Navigator) -> Result<Option<StopReason>, PlannerError> {
        let mut queries = 0usize;
        loop {
            queries += 1;
            let replay = assemble_replay(&self.state, &self.plan);
            let finished = self.plan.finished_count();
            let request = AuditRequest {
                replay: &replay,
                plan: &self.plan,
                trajectory: &self.state.logical,
                goal_known: self.config.reveal_goal.then_some(self.episode.goal_position),
            };
            let verdict = navigator
                .audit(&request)
                .and_then(|v| v.validate(finished, self.state.logical.len()).map(|_| v))
                .unwrap_or_else(|e| AuditVerdict::fallback(e.to_string()));
            self.audits += 1;
            let flags: Vec<&str> = verdict
                .satisfied
                .iter()
                .map(|&s| if s { "yes" } else { "no" })
                .collect();
            self.log(
                Phase::Backward,
                inputs_digest(&[replay.as_str()]),
                format!("{} [satisfied: {}]", verdict.meta_action.label(), flags.join(",")),
                verdict.rationale.clone(),
                verdict.parse_fallback.then(|| "parse-fallback".to_string()),
            );

            let outcome = apply_meta_action(
                verdict.meta_action,
                &mut self.state,
                &mut self.plan,
                self.scene,
                self.config,
            )?;
            match outcome {
                MetaOutcome::Advanced { plan_complete } => {
                    return Ok(plan_complete.then_some(StopReason::CompletedPlan));
                }
                MetaOutcome::BacktrackedTo(_) => return Ok(None),
                MetaOutcome::BacktrackBudgetExhausted => return Ok(Some(StopReason::BacktrackBudget)),
                MetaOutcome::Stayed {
                    escalated,
                    rejected_backtrack,
                } => {
                    if rejected_backtrack {
                        self.log(
                            Phase::Backward,
                            inputs_digest(&[replay.as_str()]),
                            "stay".into(),
                            "backtrack target not before the current waypoint".into(),
                            Some("rejected-backtrack".into()),
                        );
                    }
                    if escalated {
                        self.log(
                            Phase::Backward,
                            inputs_digest(&[replay.as_str()]),
                            "look-around".into(),
                            format!("{} consecutive stays", self.state.consecutive_stays),
                            Some("stay-escalation".into()),
                        );
                    }
                }
                MetaOutcome::LookedAround { .. } => {}
            }
            if queries > self.config.max_consecutive_stays + 1 {
                let done = self.force_continue("audit did not settle within the stay budget");
                return Ok(done.then_some(StopReason::CompletedPlan));
            }
        }
    }
}

impl Planner {
    pub fn new(config: PlannerConfig, parser: InstructionParser) -> Self {
        Self { config, parser }
    }

    pub fn run_episode(
        &self,
        scene: &Scene,
        episode: &Episode,
        navigator: &mut dyn Navigator,
    ) -> Result<EpisodeResult, PlannerError> {
        self.config.validate()?;
        episode.validate(scene)?;
        let config = &self.config;
        let start = episode.start_pose();
        let state = TrajectoryState::new(scene, start.clone())?;

        // look forward
        let initial = scene.observe(&start)?;
        let forward_digest = inputs_digest(&[
            episode.instruction.as_str(),
            &serde_json::to_string(&initial).expect("observation serializes"),
        ]);
        let (plan, decision, rationale, flag) = if config.ablation.no_forward {
            let plan = self
                .parser
                .single_step_plan(&episode.instruction)
                .map_err(|e| PlannerError::Plan(e.to_string()))?;
            (plan, "single sub-instruction".to_string(), "look-forward disabled".to_string(), None)
        } else {
            match navigator
                .decompose(&episode.instruction, &initial)
                .and_then(|p| {
                    p.check_invariants()
                        .map_err(crate::navigator::NavigatorError::Invalid)
                        .map(|_| p)
                }) {
                Ok(plan) => (plan, String::new(), "navigator plan".to_string(), None),
                Err(e) => {
                    let plan = self
                        .parser
                        .plan(&episode.instruction)
                        .map_err(|e| PlannerError::Plan(e.to_string()))?;
                    (plan, String::new(), e.to_string(), Some("segmenter-fallback".to_string()))
                }
            }
        };
        let mut run = Run {
            scene,
            episode,
            config,
            state,
            plan,
            decisions: Vec::new(),
            audits: 0,
        };
        let summary = if decision.is_empty() {
            let subs: Vec<String> = run
                .plan
                .sub_instructions()
                .iter()
                .map(|s| format!("{} <{}>", s.text, s.landmark))
                .collect();
            format!("plan: {}", subs.join(" | "))
        } else {
            decision
        };
        run.log(Phase::Forward, forward_digest, summary, rationale, flag);

        loop {
            let Some(sub) = run.plan.current().cloned() else {
                return Ok(run.finish(StopReason::CompletedPlan));
            };
            if run.state.step_count >= config.max_steps {
                return Ok(run.finish(StopReason::StepBudget));
            }

            // look now
            let mut candidates = scene.candidates(&run.state.pose)?;
            if candidates.is_empty() {
                let visited = meta::look_around(&mut run.state, scene)?;
                run.log(
                    Phase::Now,
                    inputs_digest(&[run.state.pose.node.as_str()]),
                    "look-around".into(),
                    format!("no candidates; visited {visited} neighbors"),
                    Some("dead-end".into()),
                );
                candidates = scene.candidates(&run.state.pose)?;
                if candidates.is_empty() {
                    return Ok(run.finish(StopReason::NoCandidates));
                }
            }
            let now_digest = {
                let mut parts = vec![sub.text.clone(), sub.landmark.clone()];
                parts.extend(candidates.iter().map(|c| format!("{}:{}", c.target_node, c.description)));
                parts.push(run.state.history.len().to_string());
                inputs_digest(&parts)
            };
            let choice = navigator
                .choose_waypoint(&sub, &candidates, &run.state.history)
                .and_then(|c| c.validate(candidates.len()).map(|_| c));
            let choice = match choice {
                Ok(c) => c,
                Err(e) => {
                    run.state.step_count += 1;
                    run.state.consecutive_stays += 1;
                    run.log(Phase::Now, now_digest, "stay".into(), e.to_string(), Some("navigator-failure".into()));
                    if run.state.consecutive_stays > config.max_consecutive_stays
                        && run.force_continue("navigator kept failing beyond the stay budget")
                    {
                        return Ok(run.finish(StopReason::CompletedPlan));
                    }
                    continue;
                }
            };
            let picked = &candidates[choice.candidate_index - 1];
            run.state.commit_move(scene, &picked.target_node, &picked.description)?;
            run.state.consecutive_stays = 0;
            let d = choice.estimated_landmark_distance;
            run.log(
                Phase::Now,
                now_digest,
                format!(
                    "move to {} (candidate {}, d={})",
                    picked.target_node,
                    choice.candidate_index,
                    if d.is_finite() { format!("{d:.2}") } else { "inf".into() }
                ),
                choice.rationale.clone(),
                None,
            );

            if d < config.distance_threshold {
                run.plan.mark_tentatively_done();
                if config.ablation.no_backward {
                    let done = run.plan.advance();
                    run.log(
                        Phase::Now,
                        inputs_digest(&[sub.text.as_str()]),
                        "verified".into(),
                        "distance gate reached; look-backward disabled".into(),
                        None,
                    );
                    if done {
                        return Ok(run.finish(StopReason::CompletedPlan));
                    }
                } else if let Some(reason) = run.audit_gate(navigator)? {
                    return Ok(run.finish(reason));
                }
            }
        }
    }
}
