use std::fmt::Write;

use crate::instruction::Plan;
use crate::planner::TrajectoryState;

/// Chronological textual replay of the logical trajectory followed by the
/// finished sub-instructions. Byte-deterministic for equal inputs.
pub fn assemble_replay(state: &TrajectoryState, plan: &Plan) -> String {
    let mut out = String::new();
    for (i, entry) in state.logical.iter().enumerate() {
        let landmarks = if entry.landmarks_seen.is_empty() {
            "none".to_string()
        } else {
            entry.landmarks_seen.join(", ")
        };
        let _ = writeln!(
            out,
            "step {i}: node {} | landmarks: {landmarks} | traveled: {:.1} m",
            entry.node, entry.traveled
        );
    }
    out.push_str("finished sub-instructions:\n");
    for sub in plan.finished() {
        let _ = write!(out, "{}. {}", sub.index + 1, sub.text);
        if !sub.landmark.is_empty() {
            let _ = write!(out, " [landmark: {}]", sub.landmark);
        }
        out.push('\n');
    }
    out
}
