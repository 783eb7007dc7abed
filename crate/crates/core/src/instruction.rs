//! Rule-based instruction decomposition: clause segmentation, landmark
//! extraction and the ordered sub-goal plan.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const DEFAULT_BOUNDARY: &str = include_str!("../data/boundary.txt");
const DEFAULT_LANDMARKS: &str = include_str!("../data/landmarks.txt");

#[derive(Debug, Error, PartialEq)]
pub enum InstructionError {
    #[error("instruction is empty")]
    Empty,
    #[error("plan needs at least one sub-instruction")]
    EmptyPlan,
    #[error("{fragments} fragments but {landmarks} landmarks")]
    LengthMismatch { fragments: usize, landmarks: usize },
    #[error("sub-instruction {0} has empty text")]
    EmptyFragment(usize),
    #[error("cannot read lexicon {path}: {message}")]
    Io { path: String, message: String },
}

/// A word list loaded from a plain-text file: one term per line, `#` starts a
/// comment. Terms are compared case-insensitively.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    terms: Vec<String>,
    tokens: Vec<Vec<String>>,
}

impl Lexicon {
    pub fn parse(text: &str) -> Self {
        let mut terms: Vec<String> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase())
            .filter(|l| !l.is_empty())
            .collect();
        // longest first so "and then" wins over "then"
        terms.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        terms.dedup();
        let tokens = terms.iter().map(|t| tokenize(t)).collect();
        Self { terms, tokens }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, InstructionError> {
        let path = path.as_ref();
        std::fs::read_to_string(path)
            .map(|t| Self::parse(&t))
            .map_err(|e| InstructionError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })
    }

    /// Connectives that open a new clause after a comma.
    pub fn default_boundary() -> Self {
        Self::parse(DEFAULT_BOUNDARY)
    }

    /// Household rooms, furniture and objects.
    pub fn default_landmarks() -> Self {
        Self::parse(DEFAULT_LANDMARKS)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn contains(&self, term: &str) -> bool {
        let t = term.to_lowercase();
        self.terms.contains(&t)
    }

    /// Byte length of the lexicon term that `text` starts with, if any.
    fn leading_term(&self, text: &str) -> Option<usize> {
        self.terms.iter().find_map(|term| {
            let head = text.get(..term.len())?;
            if !head.eq_ignore_ascii_case(term) {
                return None;
            }
            match text[term.len()..].chars().next() {
                Some(c) if c.is_alphanumeric() => None,
                _ => Some(term.len()),
            }
        })
    }
}

fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Splits an instruction into ordered clause fragments.
///
/// Sentence punctuation (`.`, `;`, `!`) always ends a fragment, except a
/// period between two digits. A comma ends a fragment only when the next word
/// is a boundary connective. Leading connectives are trimmed from every
/// fragment.
pub fn segment_instruction(instruction: &str, boundary: &Lexicon) -> Result<Vec<String>, InstructionError> {
    if !instruction.chars().any(char::is_alphanumeric) {
        return Err(InstructionError::Empty);
    }
    let chars: Vec<(usize, char)> = instruction.char_indices().collect();
    let mut pieces = Vec::new();
    let mut start = 0;
    for (k, &(pos, ch)) in chars.iter().enumerate() {
        let split = match ch {
            '.' => {
                let digit_at = |j: Option<usize>| {
                    j.and_then(|j| chars.get(j))
                        .is_some_and(|&(_, c)| c.is_ascii_digit())
                };
                !(digit_at(k.checked_sub(1)) && digit_at(Some(k + 1)))
            }
            ';' | '!' => true,
            ',' => boundary
                .leading_term(instruction[pos + 1..].trim_start())
                .is_some(),
            _ => false,
        };
        if split {
            pieces.push(&instruction[start..pos]);
            start = pos + ch.len_utf8();
        }
    }
    pieces.push(&instruction[start..]);

    let fragments: Vec<String> = pieces
        .into_iter()
        .map(|p| clean_fragment(p, boundary))
        .filter(|f| !f.is_empty())
        .collect();
    if fragments.is_empty() {
        // nothing but connectives; keep the text rather than lose the goal
        let whole = instruction.trim_matches(|c: char| c.is_whitespace() || ".;!,".contains(c));
        return Ok(vec![whole.to_string()]);
    }
    Ok(fragments)
}

fn clean_fragment(piece: &str, boundary: &Lexicon) -> String {
    let mut s = piece.trim_start_matches(|c: char| c.is_whitespace() || c == ',');
    while let Some(len) = boundary.leading_term(s) {
        s = s[len..].trim_start_matches(|c: char| c.is_whitespace() || c == ',');
    }
    s.trim_end_matches(|c: char| c.is_whitespace() || c == ',')
        .to_string()
}

/// The last lexicon term occurring in `fragment` (longest term wins when
/// several end at the same word). Empty when nothing matches.
pub fn extract_landmark(fragment: &str, landmarks: &Lexicon) -> String {
    let words = tokenize(fragment);
    let mut best: Option<(usize, usize, usize)> = None; // (end, len, term)
    for start in 0..words.len() {
        for (t, term) in landmarks.tokens.iter().enumerate() {
            if !term.is_empty() && words[start..].starts_with(term) {
                let key = (start + term.len(), term.len(), t);
                if best.is_none_or(|b| (key.0, key.1) > (b.0, b.1)) {
                    best = Some(key);
                }
            }
        }
    }
    best.map(|(_, _, t)| landmarks.terms[t].clone())
        .unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubStatus {
    Pending,
    Active,
    TentativelyDone,
    Verified,
}

impl SubStatus {
    /// Allowed moves: pending→active→tentatively-done→{verified, active}.
    pub fn can_become(self, next: SubStatus) -> bool {
        use SubStatus::*;
        matches!(
            (self, next),
            (Pending, Active) | (Active, TentativelyDone) | (TentativelyDone, Verified) | (TentativelyDone, Active)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubInstruction {
    pub index: usize,
    pub text: String,
    pub landmark: String,
    pub status: SubStatus,
}

impl SubInstruction {
    fn set_status(&mut self, next: SubStatus) {
        assert!(
            self.status.can_become(next),
            "illegal sub-instruction transition {:?} -> {:?}",
            self.status,
            next
        );
        self.status = next;
    }

    pub fn is_finished(&self) -> bool {
        matches!(self.status, SubStatus::TentativelyDone | SubStatus::Verified)
    }
}

/// Ordered sub-goals with a cursor on the one being pursued.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    sub_instructions: Vec<SubInstruction>,
    active_index: usize,
}

/// Pairs fragments with landmarks; the first sub-instruction starts active.
pub fn build_plan(fragments: Vec<String>, landmarks: Vec<String>) -> Result<Plan, InstructionError> {
    if fragments.len() != landmarks.len() {
        return Err(InstructionError::LengthMismatch {
            fragments: fragments.len(),
            landmarks: landmarks.len(),
        });
    }
    if fragments.is_empty() {
        return Err(InstructionError::EmptyPlan);
    }
    let sub_instructions = fragments
        .into_iter()
        .zip(landmarks)
        .enumerate()
        .map(|(index, (text, landmark))| {
            if text.trim().is_empty() {
                return Err(InstructionError::EmptyFragment(index));
            }
            Ok(SubInstruction {
                index,
                text,
                landmark,
                status: if index == 0 {
                    SubStatus::Active
                } else {
                    SubStatus::Pending
                },
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Plan {
        sub_instructions,
        active_index: 0,
    })
}

impl Plan {
    pub fn sub_instructions(&self) -> &[SubInstruction] {
        &self.sub_instructions
    }

    pub fn active_index(&self) -> usize {
        self.active_index
    }

    pub fn len(&self) -> usize {
        self.sub_instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sub_instructions.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.active_index >= self.sub_instructions.len()
    }

    /// The sub-instruction currently pursued (active or awaiting audit).
    pub fn current(&self) -> Option<&SubInstruction> {
        self.sub_instructions.get(self.active_index)
    }

    /// Sub-instructions judged done so far, in order.
    pub fn finished(&self) -> impl Iterator<Item = &SubInstruction> {
        self.sub_instructions.iter().filter(|s| s.is_finished())
    }

    pub fn finished_count(&self) -> usize {
        self.finished().count()
    }

    pub fn mark_tentatively_done(&mut self) {
        let k = self.active_index;
        if let Some(sub) = self.sub_instructions.get_mut(k) {
            if sub.status == SubStatus::Active {
                sub.set_status(SubStatus::TentativelyDone);
            }
        }
    }

    /// Verifies the current sub-instruction and activates the next one.
    /// Returns true when the plan is now complete.
    pub fn advance(&mut self) -> bool {
        let k = self.active_index;
        let Some(sub) = self.sub_instructions.get_mut(k) else {
            return true;
        };
        if sub.status == SubStatus::Active {
            sub.set_status(SubStatus::TentativelyDone);
        }
        sub.set_status(SubStatus::Verified);
        self.active_index += 1;
        if let Some(next) = self.sub_instructions.get_mut(self.active_index) {
            next.set_status(SubStatus::Active);
        }
        self.is_complete()
    }

    /// Returns a tentatively-done sub-instruction to active.
    pub fn reopen(&mut self) {
        let k = self.active_index;
        if let Some(sub) = self.sub_instructions.get_mut(k) {
            if sub.status == SubStatus::TentativelyDone {
                sub.set_status(SubStatus::Active);
            }
        }
    }

    /// Checks the status-machine invariant: everything before the cursor is
    /// verified, everything after is pending, the cursor itself is active or
    /// awaiting audit.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (i, sub) in self.sub_instructions.iter().enumerate() {
            let ok = match i.cmp(&self.active_index) {
                std::cmp::Ordering::Less => sub.status == SubStatus::Verified,
                std::cmp::Ordering::Equal => {
                    matches!(sub.status, SubStatus::Active | SubStatus::TentativelyDone)
                }
                std::cmp::Ordering::Greater => sub.status == SubStatus::Pending,
            };
            if !ok {
                return Err(format!(
                    "sub-instruction {i} is {:?} with active index {}",
                    sub.status, self.active_index
                ));
            }
        }
        Ok(())
    }
}

/// Segmenter plus landmark extractor over a pair of lexicons.
#[derive(Debug, Clone)]
pub struct InstructionParser {
    pub boundary: Lexicon,
    pub landmarks: Lexicon,
}

impl Default for InstructionParser {
    fn default() -> Self {
        Self {
            boundary: Lexicon::default_boundary(),
            landmarks: Lexicon::default_landmarks(),
        }
    }
}

impl InstructionParser {
    pub fn new(boundary: Lexicon, landmarks: Lexicon) -> Self {
        Self { boundary, landmarks }
    }

    pub fn segment(&self, instruction: &str) -> Result<Vec<String>, InstructionError> {
        segment_instruction(instruction, &self.boundary)
    }

    pub fn landmark(&self, fragment: &str) -> String {
        extract_landmark(fragment, &self.landmarks)
    }

    /// The deterministic look-forward plan.
    pub fn plan(&self, instruction: &str) -> Result<Plan, InstructionError> {
        let fragments = self.segment(instruction)?;
        let landmarks = fragments.iter().map(|f| self.landmark(f)).collect();
        build_plan(fragments, landmarks)
    }

    /// A one-step plan covering the whole instruction, anchored on its final
    /// landmark.
    pub fn single_step_plan(&self, instruction: &str) -> Result<Plan, InstructionError> {
        let text = instruction.trim();
        if !text.chars().any(char::is_alphanumeric) {
            return Err(InstructionError::Empty);
        }
        build_plan(vec![text.to_string()], vec![self.landmark(text)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(s: &str) -> Vec<String> {
        segment_instruction(s, &Lexicon::default_boundary()).unwrap()
    }

    #[test]
    fn splits_on_comma_connective_only() {
        assert_eq!(
            seg("Walk past the sofa until you reach the kitchen, then stop at the table."),
            ["Walk past the sofa until you reach the kitchen", "stop at the table"]
        );
        assert_eq!(seg("Go upstairs."), ["Go upstairs"]);
        assert_eq!(seg("Turn left, walk to the door"), ["Turn left, walk to the door"]);
    }

    #[test]
    fn sentence_punctuation_and_decimals() {
        assert_eq!(
            seg("Walk 2.5 meters forward; turn right! Then stop."),
            ["Walk 2.5 meters forward", "turn right", "stop"]
        );
        assert_eq!(seg("go ahead, and then wait"), ["go ahead", "wait"]);
    }

    #[test]
    fn empty_and_connective_only_input() {
        let b = Lexicon::default_boundary();
        assert_eq!(segment_instruction("", &b), Err(InstructionError::Empty));
        assert_eq!(segment_instruction(" .. ", &b), Err(InstructionError::Empty));
        assert_eq!(seg("then."), ["then"]);
    }

    #[test]
    fn connective_prefix_of_a_word_does_not_match() {
        assert_eq!(seg("Go on, thence to the hall"), ["Go on, thence to the hall"]);
    }

    #[test]
    fn landmark_examples() {
        let lex = Lexicon::default_landmarks();
        assert_eq!(extract_landmark("stop at the table", &lex), "table");
        assert_eq!(extract_landmark("turn left", &lex), "");
        assert_eq!(extract_landmark("walk past the sofa toward the kitchen", &lex), "kitchen");
        assert_eq!(extract_landmark("wait by the Dining Table", &lex), "dining table");
    }

    #[test]
    fn lexicon_comments_and_case() {
        let lex = Lexicon::parse("# rooms\nKitchen  # main\n\n  living   room\n");
        assert_eq!(lex.terms(), ["living room", "kitchen"]);
        assert!(lex.contains("KITCHEN"));
    }

    #[test]
    fn build_plan_contract() {
        let plan = build_plan(vec!["a".into(), "b".into()], vec!["sofa".into(), "".into()]).unwrap();
        assert_eq!(plan.len(), 2);
        assert_eq!(plan.active_index(), 0);
        assert_eq!(plan.sub_instructions()[0].status, SubStatus::Active);
        assert_eq!(plan.sub_instructions()[1].status, SubStatus::Pending);
        assert_eq!(plan.sub_instructions()[1].landmark, "");
        assert_eq!(build_plan(vec![], vec![]), Err(InstructionError::EmptyPlan));
        assert_eq!(
            build_plan(vec!["a".into()], vec![]),
            Err(InstructionError::LengthMismatch { fragments: 1, landmarks: 0 })
        );
    }

    #[test]
    fn status_machine() {
        let mut plan = build_plan(vec!["a".into(), "b".into()], vec!["".into(), "".into()]).unwrap();
        plan.mark_tentatively_done();
        plan.check_invariants().unwrap();
        plan.reopen();
        assert_eq!(plan.current().unwrap().status, SubStatus::Active);
        assert!(!plan.advance());
        plan.check_invariants().unwrap();
        assert_eq!(plan.finished_count(), 1);
        assert!(plan.advance());
        assert!(plan.is_complete());
        plan.check_invariants().unwrap();
        assert!(!SubStatus::Pending.can_become(SubStatus::Verified));
        assert!(!SubStatus::Verified.can_become(SubStatus::Active));
    }
}
