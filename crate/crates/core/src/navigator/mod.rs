//! The decision-maker interface the planner consults at each phase, plus
//! scripted implementations used for evaluation without a language model.

mod drift;
mod greedy;

pub use drift::DriftOracle;
pub use greedy::GreedyOracle;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instruction::{Plan, SubInstruction};
use crate::scene::{Candidate, NodeId, Observation, Position};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NavigatorError {
    #[error("no candidates to choose from")]
    NoCandidates,
    #[error("navigator response could not be parsed: {0}")]
    Parse(String),
    #[error("navigator transport failed: {0}")]
    Transport(String),
    #[error("navigator returned an invalid decision: {0}")]
    Invalid(String),
}

/// The navigator's pick among the current candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointChoice {
    /// 1-based ordinal into the candidate list.
    pub candidate_index: usize,
    /// Estimated distance from the chosen waypoint to the sub-goal landmark.
    pub estimated_landmark_distance: f64,
    pub rationale: String,
}

impl WaypointChoice {
    pub fn validate(&self, candidates: usize) -> Result<(), NavigatorError> {
        if !(1..=candidates).contains(&self.candidate_index) {
            return Err(NavigatorError::Invalid(format!(
                "candidate {} outside 1..={candidates}",
                self.candidate_index
            )));
        }
        if self.estimated_landmark_distance.is_nan() || self.estimated_landmark_distance < 0.0 {
            return Err(NavigatorError::Invalid(format!(
                "negative landmark distance {}",
                self.estimated_landmark_distance
            )));
        }
        Ok(())
    }
}

/// Corrective action chosen after a trajectory audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MetaAction {
    Continue,
    Stay,
    Backtrack { target_index: usize },
    LookAround,
}

impl MetaAction {
    pub fn label(&self) -> String {
        match self {
            MetaAction::Continue => "continue".into(),
            MetaAction::Stay => "stay".into(),
            MetaAction::Backtrack { target_index } => format!("backtrack({target_index})"),
            MetaAction::LookAround => "look-around".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditVerdict {
    /// One judgment per finished sub-instruction, in plan order.
    pub satisfied: Vec<bool>,
    pub meta_action: MetaAction,
    pub rationale: String,
    /// Set when the verdict replaces an unusable navigator response.
    #[serde(default)]
    pub parse_fallback: bool,
}

impl AuditVerdict {
    /// Stay verdict substituted for a failed or malformed audit.
    pub fn fallback(reason: impl Into<String>) -> Self {
        Self {
            satisfied: Vec::new(),
            meta_action: MetaAction::Stay,
            rationale: reason.into(),
            parse_fallback: true,
        }
    }

    pub fn validate(&self, finished: usize, trajectory_len: usize) -> Result<(), NavigatorError> {
        if self.satisfied.len() != finished {
            return Err(NavigatorError::Invalid(format!(
                "{} satisfaction flags for {finished} finished sub-instructions",
                self.satisfied.len()
            )));
        }
        if let MetaAction::Backtrack { target_index } = self.meta_action {
            if target_index + 1 >= trajectory_len {
                return Err(NavigatorError::Invalid(format!(
                    "backtrack target {target_index} not before the last of {trajectory_len} waypoints"
                )));
            }
        }
        Ok(())
    }
}

/// One remembered movement or observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub step: u64,
    pub node: NodeId,
    pub chosen_description: String,
    pub traveled: f64,
    pub landmarks_seen: Vec<String>,
}

/// Everything the look-backward audit sees.
#[derive(Debug, Clone, Copy)]
pub struct AuditRequest<'a> {
    pub replay: &'a str,
    pub plan: &'a Plan,
    pub trajectory: &'a [HistoryEntry],
    /// Ground-truth goal; only scripted oracles in tests ever receive it.
    pub goal_known: Option<Position>,
}

/// A navigator session. One instance serves one episode.
pub trait Navigator {
    /// Look forward: break the instruction into an ordered plan.
    fn decompose(&mut self, instruction: &str, initial: &Observation) -> Result<Plan, NavigatorError>;

    /// Look now: pick the candidate that best advances `sub`.
    fn choose_waypoint(
        &mut self,
        sub: &SubInstruction,
        candidates: &[Candidate],
        history: &[HistoryEntry],
    ) -> Result<WaypointChoice, NavigatorError>;

    /// Look backward: judge the finished sub-instructions against the
    /// trajectory and pick a meta-action.
    fn audit(&mut self, request: &AuditRequest<'_>) -> Result<AuditVerdict, NavigatorError>;
}

impl<N: Navigator + ?Sized> Navigator for Box<N> {
    fn decompose(&mut self, instruction: &str, initial: &Observation) -> Result<Plan, NavigatorError> {
        (**self).decompose(instruction, initial)
    }

    fn choose_waypoint(
        &mut self,
        sub: &SubInstruction,
        candidates: &[Candidate],
        history: &[HistoryEntry],
    ) -> Result<WaypointChoice, NavigatorError> {
        (**self).choose_waypoint(sub, candidates, history)
    }

    fn audit(&mut self, request: &AuditRequest<'_>) -> Result<AuditVerdict, NavigatorError> {
        (**self).audit(request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn choice_bounds() {
        let c = WaypointChoice {
            candidate_index: 3,
            estimated_landmark_distance: 1.0,
            rationale: String::new(),
        };
        assert!(c.validate(3).is_ok());
        assert!(c.validate(2).is_err());
        let neg = WaypointChoice {
            estimated_landmark_distance: -0.1,
            ..c
        };
        assert!(neg.validate(3).is_err());
    }

    #[test]
    fn verdict_invariants() {
        let v = AuditVerdict {
            satisfied: vec![true, false],
            meta_action: MetaAction::Backtrack { target_index: 2 },
            rationale: String::new(),
            parse_fallback: false,
        };
        assert!(v.validate(2, 4).is_ok());
        assert!(v.validate(2, 3).is_err());
        assert!(v.validate(1, 4).is_err());
    }
}
