//! Episode records: start pose, goal, instruction and reference path.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::{NodeId, Pose, Position, Scene};

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error("cannot read episodes file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("episodes file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("episode `{episode}`: {message}")]
    Invalid { episode: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub episode_id: String,
    pub scene_id: String,
    pub start_node: NodeId,
    pub start_heading_deg: f64,
    pub goal_position: Position,
    pub instruction: String,
    pub reference_path: Vec<NodeId>,
    pub seed: u64,
}

impl Episode {
    pub fn start_pose(&self) -> Pose {
        Pose::new(self.start_node.clone(), self.start_heading_deg)
    }

    /// Checks the episode against its scene: known nodes, a reference path
    /// that starts at the start node and only follows edges.
    pub fn validate(&self, scene: &Scene) -> Result<(), EpisodeError> {
        let invalid = |message: String| EpisodeError::Invalid {
            episode: self.episode_id.clone(),
            message,
        };
        if self.scene_id != scene.id() {
            return Err(invalid(format!(
                "references scene `{}` but was checked against `{}`",
                self.scene_id,
                scene.id()
            )));
        }
        if self.instruction.trim().is_empty() {
            return Err(invalid("empty instruction".into()));
        }
        if self.goal_position.iter().any(|c| !c.is_finite()) {
            return Err(invalid("non-finite goal position".into()));
        }
        scene
            .node(&self.start_node)
            .map_err(|_| invalid(format!("unknown start node `{}`", self.start_node)))?;
        match self.reference_path.first() {
            Some(first) if *first == self.start_node => {}
            Some(first) => {
                return Err(invalid(format!(
                    "reference path starts at `{first}` instead of `{}`",
                    self.start_node
                )))
            }
            None => return Err(invalid("empty reference path".into())),
        }
        for id in &self.reference_path {
            scene
                .node(id)
                .map_err(|_| invalid(format!("reference path node `{id}` does not exist")))?;
        }
        for pair in self.reference_path.windows(2) {
            if scene.edge_length(&pair[0], &pair[1]).is_none() {
                return Err(invalid(format!(
                    "reference path step {} -> {} is not an edge",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(())
    }
}

/// Parses newline-delimited episode records; blank lines are skipped.
pub fn parse_episodes(text: &str) -> Result<Vec<Episode>, EpisodeError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| EpisodeError::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn load_episodes(path: impl AsRef<Path>) -> Result<Vec<Episode>, EpisodeError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| EpisodeError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_episodes(&text)
}

pub fn episodes_to_jsonl(episodes: &[Episode]) -> String {
    let mut out = String::new();
    for ep in episodes {
        out.push_str(&serde_json::to_string(ep).expect("episode serializes"));
        out.push('\n');
    }
    out
}
