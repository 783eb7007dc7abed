use crate::instruction::Plan;
use crate::navigator::{HistoryEntry, MetaAction};
use crate::planner::{PlannerConfig, TrajectoryState};
use crate::scene::{Scene, SceneError};

/// What a meta-action did to the episode state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetaOutcome {
    /// The current sub-instruction was verified.
    Advanced { plan_complete: bool },
    /// The agent held position. `escalated` means the stay budget ran out and
    /// a look-around was forced; `rejected_backtrack` means an invalid
    /// backtrack was downgraded to a stay.
    Stayed { escalated: bool, rejected_backtrack: bool },
    BacktrackedTo(usize),
    BacktrackBudgetExhausted,
    LookedAround { visited: usize },
}

/// Executes one meta-action against the episode state.
pub fn apply_meta_action(
    action: MetaAction,
    state: &mut TrajectoryState,
    plan: &mut Plan,
    scene: &Scene,
    config: &PlannerConfig,
) -> Result<MetaOutcome, SceneError> {
    match action {
        MetaAction::Continue => {
            let plan_complete = plan.advance();
            state.consecutive_stays = 0;
            Ok(MetaOutcome::Advanced { plan_complete })
        }
        MetaAction::Stay => stay(state, scene, config, false),
        MetaAction::Backtrack { target_index } => {
            if target_index + 1 >= state.logical.len() {
                return stay(state, scene, config, true);
            }
            state.backtracks += 1;
            if state.backtracks > config.max_backtracks {
                return Ok(MetaOutcome::BacktrackBudgetExhausted);
            }
            let mut retraced = 0.0;
            for i in (target_index..state.logical.len() - 1).rev() {
                let target = state.logical[i].node.clone();
                let (pose, len) = scene.step_to(&state.pose, &target)?;
                state.pose = pose;
                state.odometry_total += len;
                state.physical_path.push(target);
                retraced += len;
            }
            state.logical.truncate(target_index + 1);
            plan.reopen();
            state.consecutive_stays = 0;
            let node = state.pose.node.clone();
            let landmarks_seen = scene.node(&node)?.landmarks();
            state.remember(HistoryEntry {
                step: 0,
                node,
                chosen_description: format!("backtracked to trajectory index {target_index}"),
                traveled: retraced,
                landmarks_seen,
            });
            Ok(MetaOutcome::BacktrackedTo(target_index))
        }
        MetaAction::LookAround => look_around(state, scene).map(|visited| MetaOutcome::LookedAround { visited }),
    }
}

fn stay(
    state: &mut TrajectoryState,
    scene: &Scene,
    config: &PlannerConfig,
    rejected_backtrack: bool,
) -> Result<MetaOutcome, SceneError> {
    state.consecutive_stays += 1;
    let escalated = state.consecutive_stays > config.max_consecutive_stays;
    if escalated {
        look_around(state, scene)?;
    }
    Ok(MetaOutcome::Stayed {
        escalated,
        rejected_backtrack,
    })
}

/// Visits every neighbor and returns; motion counts toward odometry but not
/// toward the logical trajectory. Returns the number of neighbors visited.
pub(crate) fn look_around(state: &mut TrajectoryState, scene: &Scene) -> Result<usize, SceneError> {
    let origin = state.pose.clone();
    let candidates = scene.candidates(&origin)?;
    for cand in &candidates {
        let (there, out) = scene.move_to(&origin, cand)?;
        state.odometry_total += out;
        state.physical_path.push(cand.target_node.clone());
        let view = scene.observe(&there)?;
        let landmarks_seen = scene.node(&cand.target_node)?.landmarks();
        let (_, back) = scene.step_to(&there, &origin.node)?;
        state.odometry_total += back;
        state.physical_path.push(origin.node.clone());
        state.remember(HistoryEntry {
            step: 0,
            node: cand.target_node.clone(),
            chosen_description: format!("looked around: {}", view.sectors[0].description),
            traveled: out + back,
            landmarks_seen,
        });
    }
    state.pose = origin;
    Ok(candidates.len())
}
