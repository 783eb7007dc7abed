use std::collections::HashMap;

use crate::instruction::{InstructionParser, Plan, SubInstruction};
use crate::navigator::{
    AuditRequest, AuditVerdict, HistoryEntry, MetaAction, Navigator, NavigatorError, WaypointChoice,
};
use crate::scene::{Candidate, Observation, Scene};

/// Scripted navigator with full knowledge of the scene graph.
///
/// Waypoints minimise the geodesic distance to the nearest node carrying the
/// sub-goal landmark. Audits accept a finished sub-instruction when, scanning
/// the trajectory in order, some waypoint lies within `audit_radius` of that
/// landmark.
pub struct GreedyOracle<'s> {
    scene: &'s Scene,
    parser: InstructionParser,
    audit_radius: f64,
    fields: HashMap<String, Vec<f64>>,
}

impl<'s> GreedyOracle<'s> {
    pub fn new(scene: &'s Scene, parser: InstructionParser, audit_radius: f64) -> Self {
        Self {
            scene,
            parser,
            audit_radius,
            fields: HashMap::new(),
        }
    }

    /// Geodesic distance from every node to the closest node carrying
    /// `landmark`; infinite everywhere when no node carries it.
    pub fn landmark_field(&mut self, landmark: &str) -> &[f64] {
        let key = landmark.to_lowercase();
        let scene = self.scene;
        self.fields.entry(key).or_insert_with_key(|key| {
            let sources: Vec<usize> = scene
                .nodes()
                .iter()
                .enumerate()
                .filter(|(_, n)| !key.is_empty() && n.carries(key))
                .map(|(i, _)| i)
                .collect();
            if sources.is_empty() {
                vec![f64::INFINITY; scene.nodes().len()]
            } else {
                scene.distances_from_set(&sources)
            }
        })
    }

    pub(crate) fn greedy_choice(
        &mut self,
        sub: &SubInstruction,
        candidates: &[Candidate],
    ) -> Result<WaypointChoice, NavigatorError> {
        if candidates.is_empty() {
            return Err(NavigatorError::NoCandidates);
        }
        let scene = self.scene;
        let field = self.landmark_field(&sub.landmark);
        let mut best: Option<(f64, &Candidate)> = None;
        for cand in candidates {
            let idx = scene
                .node_index(&cand.target_node)
                .ok_or_else(|| NavigatorError::Invalid(format!("unknown node {}", cand.target_node)))?;
            let d = field[idx];
            // strict comparison keeps the lowest index on ties
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, cand));
            }
        }
        let (d, cand) = best.expect("non-empty candidates");
        Ok(WaypointChoice {
            candidate_index: cand.index,
            estimated_landmark_distance: d,
            rationale: format!(
                "{} is {} from the {}",
                cand.target_node,
                fmt_dist(d),
                if sub.landmark.is_empty() { "goal" } else { &sub.landmark }
            ),
        })
    }

    fn audit_trajectory(&mut self, request: &AuditRequest<'_>) -> AuditVerdict {
        let scene = self.scene;
        let radius = self.audit_radius;
        let finished: Vec<&SubInstruction> = request.plan.finished().collect();
        let last_sub = request.plan.len().saturating_sub(1);
        let mut satisfied = Vec::with_capacity(finished.len());
        let mut cursor = 0usize;
        let mut reliable = 0usize;
        let mut failed = false;
        for sub in finished {
            if failed {
                satisfied.push(false);
                continue;
            }
            let hit = if sub.landmark.is_empty() {
                Some(cursor)
            } else {
                let field = self.landmark_field(&sub.landmark);
                request.trajectory[cursor..]
                    .iter()
                    .position(|h| scene.node_index(&h.node).is_some_and(|i| field[i] < radius))
                    .map(|off| cursor + off)
            };
            let hit = hit.filter(|_| match request.goal_known {
                Some(goal) if sub.index == last_sub => request
                    .trajectory
                    .last()
                    .and_then(|h| scene.geodesic(&h.node, &goal).ok())
                    .is_some_and(|d| d < radius),
                _ => true,
            });
            match hit {
                Some(i) => {
                    satisfied.push(true);
                    cursor = i;
                    reliable = i;
                }
                None => {
                    satisfied.push(false);
                    failed = true;
                }
            }
        }

        if !failed {
            return AuditVerdict {
                satisfied,
                meta_action: MetaAction::Continue,
                rationale: "every finished sub-instruction is matched along the trajectory".into(),
                parse_fallback: false,
            };
        }
        // latest waypoint before the current one whose prefix still covers
        // every sub-instruction matched so far
        let len = request.trajectory.len();
        let (meta_action, rationale) = if len >= 2 && reliable < len - 1 {
            let target_index = len - 2;
            (
                MetaAction::Backtrack { target_index },
                format!("sub-instruction unmatched; last reliable waypoint is trajectory index {target_index}"),
            )
        } else {
            (
                MetaAction::LookAround,
                "sub-instruction unmatched and no earlier reliable waypoint".to_string(),
            )
        };
        AuditVerdict {
            satisfied,
            meta_action,
            rationale,
            parse_fallback: false,
        }
    }
}

fn fmt_dist(d: f64) -> String {
    if d.is_finite() {
        format!("{d:.1} m")
    } else {
        "unreachable".into()
    }
}

impl Navigator for GreedyOracle<'_> {
    fn decompose(&mut self, instruction: &str, _initial: &Observation) -> Result<Plan, NavigatorError> {
        self.parser
            .plan(instruction)
            .map_err(|e| NavigatorError::Invalid(e.to_string()))
    }

    fn choose_waypoint(
        &mut self,
        sub: &SubInstruction,
        candidates: &[Candidate],
        _history: &[HistoryEntry],
    ) -> Result<WaypointChoice, NavigatorError> {
        self.greedy_choice(sub, candidates)
    }

    fn audit(&mut self, request: &AuditRequest<'_>) -> Result<AuditVerdict, NavigatorError> {
        Ok(self.audit_trajectory(request))
    }
}
