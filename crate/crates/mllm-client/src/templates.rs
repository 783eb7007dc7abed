//! Per-phase prompt templates with `{slot}` placeholders.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use crate::ClientError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Forward,
    Now,
    Backward,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Forward, Phase::Now, Phase::Backward];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Forward => "forward",
            Phase::Now => "now",
            Phase::Backward => "backward",
        }
    }

    /// Slots the phase fills; a template must reference all of them.
    pub fn slots(self) -> &'static [&'static str] {
        match self {
            Phase::Forward => &["instruction", "observation"],
            Phase::Now => &["sub_instruction", "candidates", "history"],
            Phase::Backward => &["replay", "finished_subs"],
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    pub phase: Phase,
    text: String,
}

/// `{identifier}` occurrences. Braces around anything else (JSON examples)
/// are literal text.
fn slot_names(text: &str) -> Vec<(usize, usize, &str)> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            let rest = &text[i + 1..];
            let len = rest.bytes().take_while(|b| b.is_ascii_lowercase() || *b == b'_').count();
            if len > 0 && rest.as_bytes().get(len) == Some(&b'}') {
                out.push((i, i + len + 2, &rest[..len]));
                i += len + 2;
                continue;
            }
        }
        i += 1;
    }
    out
}

impl PromptTemplate {
    pub fn new(phase: Phase, text: impl Into<String>) -> Result<Self, ClientError> {
        let text = text.into();
        let used: BTreeSet<&str> = slot_names(&text).into_iter().map(|(_, _, n)| n).collect();
        for name in &used {
            if !phase.slots().contains(name) {
                return Err(ClientError::Template(format!("{phase} template uses unknown slot `{{{name}}}`")));
            }
        }
        for name in phase.slots() {
            if !used.contains(name) {
                return Err(ClientError::Template(format!("{phase} template is missing slot `{{{name}}}`")));
            }
        }
        Ok(Self { phase, text })
    }

    /// Fills every slot; `values` must cover the phase's slots.
    pub fn render(&self, values: &[(&str, &str)]) -> Result<String, ClientError> {
        let mut out = String::with_capacity(self.text.len());
        let mut last = 0;
        for (start, end, name) in slot_names(&self.text) {
            let value = values
                .iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| ClientError::Template(format!("no value for slot `{name}`")))?;
            out.push_str(&self.text[last..start]);
            out.push_str(value);
            last = end;
        }
        out.push_str(&self.text[last..]);
        Ok(out)
    }
}

/// One template per phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Templates {
    pub forward: PromptTemplate,
    pub now: PromptTemplate,
    pub backward: PromptTemplate,
}

impl Templates {
    /// Loads `forward.txt`, `now.txt` and `backward.txt` from `dir`.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, ClientError> {
        let dir = dir.as_ref();
        let read = |phase: Phase| {
            let path = dir.join(format!("{}.txt", phase.name()));
            let text = std::fs::read_to_string(&path)
                .map_err(|e| ClientError::Template(format!("{}: {e}", path.display())))?;
            PromptTemplate::new(phase, text)
        };
        Ok(Self { forward: read(Phase::Forward)?, now: read(Phase::Now)?, backward: read(Phase::Backward)? })
    }

    pub fn get(&self, phase: Phase) -> &PromptTemplate {
        match phase {
            Phase::Forward => &self.forward,
            Phase::Now => &self.now,
            Phase::Backward => &self.backward,
        }
    }
}

impl Default for Templates {
    fn default() -> Self {
        Self {
            forward: PromptTemplate::new(Phase::Forward, include_str!("../templates/forward.txt")).expect("shipped"),
            now: PromptTemplate::new(Phase::Now, include_str!("../templates/now.txt")).expect("shipped"),
            backward: PromptTemplate::new(Phase::Backward, include_str!("../templates/backward.txt")).expect("shipped"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_templates_validate() {
        let t = Templates::default();
        assert_eq!(Templates::load(concat!(env!("CARGO_MANIFEST_DIR"), "/templates")).unwrap(), t);
    }

    #[test]
    fn missing_and_unknown_slots() {
        assert!(PromptTemplate::new(Phase::Backward, "{replay} only").is_err());
        assert!(PromptTemplate::new(Phase::Forward, "{instruction} {observation} {replay}").is_err());
        assert!(PromptTemplate::new(Phase::Forward, r#"{instruction} {observation} {"json": 1}"#).is_ok());
    }

    #[test]
    fn render_fills_slots_and_keeps_json() {
        let t = PromptTemplate::new(Phase::Backward, "R={replay}; F={finished_subs}; {\"satisfied\": []}").unwrap();
        let s = t.render(&[("replay", "r"), ("finished_subs", "{f}")]).unwrap();
        assert_eq!(s, "R=r; F={f}; {\"satisfied\": []}");
        assert!(t.render(&[("replay", "r")]).is_err());
    }
}
