use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instruction::{Plan, SubInstruction};
use crate::navigator::{
    AuditRequest, AuditVerdict, GreedyOracle, HistoryEntry, Navigator, NavigatorError, WaypointChoice,
};
use crate::scene::{Candidate, Observation};

/// Fault-injecting navigator: with probability `p` it takes a uniformly random
/// non-greedy candidate, while still reporting the greedy landmark distance.
/// Decomposition and audits are the greedy oracle's.
pub struct DriftOracle<'s> {
    greedy: GreedyOracle<'s>,
    p: f64,
    rng: ChaCha8Rng,
}

impl<'s> DriftOracle<'s> {
    pub fn new(greedy: GreedyOracle<'s>, p: f64, seed: u64) -> Result<Self, NavigatorError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(NavigatorError::Invalid(format!("drift probability {p} outside [0, 1]")));
        }
        Ok(Self {
            greedy,
            p,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }
}

impl Navigator for DriftOracle<'_> {
    fn decompose(&mut self, instruction: &str, initial: &Observation) -> Result<Plan, NavigatorError> {
        self.greedy.decompose(instruction, initial)
    }

    fn choose_waypoint(
        &mut self,
        sub: &SubInstruction,
        candidates: &[Candidate],
        _history: &[HistoryEntry],
    ) -> Result<WaypointChoice, NavigatorError> {
        let mut choice = self.greedy.greedy_choice(sub, candidates)?;
        let n = candidates.len();
        if n >= 2 && self.rng.random_bool(self.p) {
            let greedy_pos = candidates
                .iter()
                .position(|c| c.index == choice.candidate_index)
                .expect("greedy choice comes from the list");
            let mut k = self.rng.random_range(0..n - 1);
            if k >= greedy_pos {
                k += 1;
            }
            choice.rationale = format!("drifted to {} instead of {}", candidates[k].target_node, candidates[greedy_pos].target_node);
            choice.candidate_index = candidates[k].index;
        }
        Ok(choice)
    }

    fn audit(&mut self, request: &AuditRequest<'_>) -> Result<AuditVerdict, NavigatorError> {
        self.greedy.audit(request)
    }
}
