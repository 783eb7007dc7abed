//! Metric navigation graph standing in for a continuous indoor environment.
//!
//! A [`Scene`] is a connected, undirected graph whose nodes carry a 3-D
//! position and a twelve-sector textual panorama. Headings follow a compass
//! convention: 0° points along +y and angles grow clockwise.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of panorama sectors per node.
pub const SECTOR_COUNT: usize = 12;
/// Angular width of one panorama sector in degrees.
pub const SECTOR_WIDTH_DEG: f64 = 30.0;
/// Maximum relative deviation between an edge length and the straight-line
/// distance between its endpoints.
pub const EDGE_LENGTH_TOLERANCE: f64 = 0.05;

/// Position in meters.
pub type Position = [f64; 3];

/// Identifier of a graph node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("cannot read scene file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scene parse error at line {line}, column {column} (field `{field}`): {message}")]
    Parse {
        line: usize,
        column: usize,
        field: String,
        message: String,
    },
    #[error("invalid scene: {0}")]
    Invalid(String),
    #[error("unknown node `{0}`")]
    UnknownNode(NodeId),
    #[error("stale candidate: `{to}` is not adjacent to `{from}`")]
    StaleCandidate { from: NodeId, to: NodeId },
}

/// One 30° slice of a node's panorama.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub heading_deg: f64,
    pub description: String,
    #[serde(default)]
    pub landmarks: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub position: Position,
    pub sectors: Vec<Sector>,
}

impl Node {
    /// True when any sector of this node lists `landmark` (case-insensitive).
    pub fn carries(&self, landmark: &str) -> bool {
        self.sectors
            .iter()
            .flat_map(|s| s.landmarks.iter())
            .any(|l| l.eq_ignore_ascii_case(landmark))
    }

    /// Distinct landmark names visible from this node, in sector order.
    pub fn landmarks(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.sectors
            .iter()
            .flat_map(|s| s.landmarks.iter())
            .filter(|l| seen.insert(l.to_ascii_lowercase()))
            .cloned()
            .collect()
    }

    /// The sector whose centre is closest to `heading_deg`.
    pub fn sector_facing(&self, heading_deg: f64) -> &Sector {
        &self.sectors[sector_slot(heading_deg)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: NodeId,
    pub b: NodeId,
    pub length_m: f64,
}

/// On-disk scene document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneFile {
    pub scene_id: String,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

/// Agent position and orientation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub node: NodeId,
    pub heading_deg: f64,
}

impl Pose {
    pub fn new(node: impl Into<NodeId>, heading_deg: f64) -> Self {
        Self {
            node: node.into(),
            heading_deg: normalize_deg(heading_deg),
        }
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

/// A navigable option at the current pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// 1-based ordinal within the candidate list.
    pub index: usize,
    pub target_node: NodeId,
    pub relative_heading: f64,
    pub distance: f64,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
}

/// Panorama rotated so the first sector faces the agent's heading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub node: NodeId,
    pub heading_deg: f64,
    pub sectors: Vec<Sector>,
}

/// Validated, immutable navigation graph.
#[derive(Debug, Clone)]
pub struct Scene {
    scene_id: String,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    index: HashMap<NodeId, usize>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl Scene {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SceneError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: SceneFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            SceneError::Parse {
                line: inner.line(),
                column: inner.column(),
                field,
                message: inner.to_string(),
            }
        })?;
        Self::new(file)
    }

    /// Validates a scene document and builds the adjacency structure.
    pub fn new(file: SceneFile) -> Result<Self, SceneError> {
        let SceneFile {
            scene_id,
            mut nodes,
            edges,
        } = file;
        if nodes.is_empty() {
            return Err(SceneError::Invalid(format!("scene `{scene_id}` has no nodes")));
        }

        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter_mut().enumerate() {
            if index.insert(node.id.clone(), i).is_some() {
                return Err(SceneError::Invalid(format!("duplicate node id `{}`", node.id)));
            }
            if node.position.iter().any(|c| !c.is_finite()) {
                return Err(SceneError::Invalid(format!(
                    "node `{}` has a non-finite position",
                    node.id
                )));
            }
            validate_sectors(node)?;
        }

        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut seen_pairs = HashSet::new();
        for edge in &edges {
            let ia = *index.get(&edge.a).ok_or_else(|| {
                SceneError::Invalid(format!(
                    "edge {}-{} references missing node `{}`",
                    edge.a, edge.b, edge.a
                ))
            })?;
            let ib = *index.get(&edge.b).ok_or_else(|| {
                SceneError::Invalid(format!(
                    "edge {}-{} references missing node `{}`",
                    edge.a, edge.b, edge.b
                ))
            })?;
            if ia == ib {
                return Err(SceneError::Invalid(format!("edge {}-{} is a self-loop", edge.a, edge.b)));
            }
            if !seen_pairs.insert((ia.min(ib), ia.max(ib))) {
                return Err(SceneError::Invalid(format!("duplicate edge {}-{}", edge.a, edge.b)));
            }
            if !(edge.length_m > 0.0 && edge.length_m.is_finite()) {
                return Err(SceneError::Invalid(format!(
                    "edge {}-{} has non-positive length {}",
                    edge.a, edge.b, edge.length_m
                )));
            }
            let straight = euclidean(&nodes[ia].position, &nodes[ib].position);
            if (edge.length_m - straight).abs() > EDGE_LENGTH_TOLERANCE * straight {
                return Err(SceneError::Invalid(format!(
                    "edge {}-{} length {:.3} m deviates more than 5% from straight-line {:.3} m",
                    edge.a, edge.b, edge.length_m, straight
                )));
            }
            adjacency[ia].push((ib, edge.length_m));
            adjacency[ib].push((ia, edge.length_m));
        }

        let scene = Self {
            scene_id,
            nodes,
            edges,
            index,
            adjacency,
        };
        if let Some(orphan) = scene.first_unreachable() {
            return Err(SceneError::Invalid(format!(
                "scene is disconnected: node `{}` is unreachable from `{}`",
                scene.nodes[orphan].id, scene.nodes[0].id
            )));
        }
        Ok(scene)
    }

    fn first_unreachable(&self) -> Option<usize> {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for &(j, _) in &self.adjacency[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.iter().position(|s| !s)
    }

    pub fn to_file(&self) -> SceneFile {
        SceneFile {
            scene_id: self.scene_id.clone(),
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("scene serializes")
    }

    pub fn id(&self) -> &str {
        &self.scene_id
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_index(&self, id: &NodeId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn node(&self, id: &NodeId) -> Result<&Node, SceneError> {
        self.node_index(id)
            .map(|i| &self.nodes[i])
            .ok_or_else(|| SceneError::UnknownNode(id.clone()))
    }

    pub fn position(&self, id: &NodeId) -> Result<Position, SceneError> {
        self.node(id).map(|n| n.position)
    }

    /// Neighbors of the node at `idx` as `(neighbor index, edge length)`.
    pub fn neighbors(&self, idx: usize) -> &[(usize, f64)] {
        &self.adjacency[idx]
    }

    pub fn edge_length(&self, a: &NodeId, b: &NodeId) -> Option<f64> {
        let ia = self.node_index(a)?;
        let ib = self.node_index(b)?;
        self.adjacency[ia]
            .iter()
            .find(|&&(j, _)| j == ib)
            .map(|&(_, len)| len)
    }

    pub fn validate_pose(&self, pose: &Pose) -> Result<usize, SceneError> {
        self.node_index(&pose.node)
            .ok_or_else(|| SceneError::UnknownNode(pose.node.clone()))
    }

    /// Compass bearing of travel from `a` to `b`.
    pub fn bearing_between(&self, a: usize, b: usize) -> f64 {
        bearing(&self.nodes[a].position, &self.nodes[b].position)
    }

    /// One candidate per graph neighbor, sorted by heading relative to the
    /// agent (ascending, ties by neighbor id).
    pub fn candidates(&self, pose: &Pose) -> Result<Vec<Candidate>, SceneError> {
        let from = self.validate_pose(pose)?;
        let mut options: Vec<(f64, usize, f64)> = self.adjacency[from]
            .iter()
            .map(|&(to, len)| {
                let rel = normalize_deg(self.bearing_between(from, to) - pose.heading_deg);
                (rel, to, len)
            })
            .collect();
        options.sort_by(|x, y| {
            x.0.total_cmp(&y.0)
                .then_with(|| self.nodes[x.1].id.cmp(&self.nodes[y.1].id))
        });
        Ok(options
            .into_iter()
            .enumerate()
            .map(|(i, (rel, to, len))| {
                let travel = self.bearing_between(from, to);
                let sector = self.nodes[to].sector_facing(travel);
                Candidate {
                    index: i + 1,
                    target_node: self.nodes[to].id.clone(),
                    relative_heading: rel,
                    distance: len,
                    description: sector.description.clone(),
                    image_ref: sector.image_ref.clone(),
                }
            })
            .collect())
    }

    /// Moves along the candidate's edge. Returns the new pose and the distance
    /// traveled.
    pub fn move_to(&self, pose: &Pose, candidate: &Candidate) -> Result<(Pose, f64), SceneError> {
        self.step_to(pose, &candidate.target_node)
    }

    /// Moves from `pose` to an adjacent node, facing the direction of travel.
    pub fn step_to(&self, pose: &Pose, target: &NodeId) -> Result<(Pose, f64), SceneError> {
        let from = self.validate_pose(pose)?;
        let to = self.node_index(target).ok_or_else(|| SceneError::StaleCandidate {
            from: pose.node.clone(),
            to: target.clone(),
        })?;
        let len = self.adjacency[from]
            .iter()
            .find(|&&(j, _)| j == to)
            .map(|&(_, len)| len)
            .ok_or_else(|| SceneError::StaleCandidate {
                from: pose.node.clone(),
                to: target.clone(),
            })?;
        let heading = self.bearing_between(from, to);
        Ok((
            Pose {
                node: target.clone(),
                heading_deg: heading,
            },
            len,
        ))
    }

    /// The panorama at `pose`, rotated so sector 1 faces the current heading.
    pub fn observe(&self, pose: &Pose) -> Result<Observation, SceneError> {
        let node = self.node(&pose.node)?;
        let first = sector_slot(pose.heading_deg);
        let sectors = (0..SECTOR_COUNT)
            .map(|k| node.sectors[(first + k) % SECTOR_COUNT].clone())
            .collect();
        Ok(Observation {
            node: node.id.clone(),
            heading_deg: pose.heading_deg,
            sectors,
        })
    }

    /// Single-source shortest-path distances (meters) from node `source`.
    /// Unreachable nodes get `f64::INFINITY`.
    pub fn distances_from(&self, source: usize) -> Vec<f64> {
        self.distances_from_set(&[source])
    }

    /// Multi-source shortest-path distances.
    pub fn distances_from_set(&self, sources: &[usize]) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.nodes.len()];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            dist[s] = 0.0;
            heap.push(Frontier { cost: 0.0, node: s });
        }
        while let Some(Frontier { cost, node }) = heap.pop() {
            if cost > dist[node] {
                continue;
            }
            for &(next, len) in &self.adjacency[node] {
                let cand = cost + len;
                if cand < dist[next] {
                    dist[next] = cand;
                    heap.push(Frontier { cost: cand, node: next });
                }
            }
        }
        dist
    }

    /// Shortest path between two nodes as a node-id sequence. Ties between
    /// equal-cost predecessors resolve to the lower node index.
    pub fn shortest_path(&self, from: &NodeId, to: &NodeId) -> Result<Option<Vec<NodeId>>, SceneError> {
        let s = self.node_index(from).ok_or_else(|| SceneError::UnknownNode(from.clone()))?;
        let t = self.node_index(to).ok_or_else(|| SceneError::UnknownNode(to.clone()))?;
        let dist = self.distances_from(t);
        if !dist[s].is_finite() {
            return Ok(None);
        }
        let mut path = vec![self.nodes[s].id.clone()];
        let mut cur = s;
        while cur != t {
            let next = self.adjacency[cur]
                .iter()
                .filter(|&&(j, len)| (dist[j] + len - dist[cur]).abs() <= 1e-9 * (1.0 + dist[cur]))
                .map(|&(j, _)| j)
                .min()
                .expect("a predecessor exists on a finite shortest path");
            path.push(self.nodes[next].id.clone());
            cur = next;
        }
        Ok(Some(path))
    }

    /// Index of the node closest (Euclidean) to `position`; ties go to the
    /// lower index.
    pub fn nearest_node(&self, position: &Position) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, n) in self.nodes.iter().enumerate() {
            let d = euclidean(&n.position, position);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    /// Geodesic distance from a node to an arbitrary position: shortest path
    /// to the node nearest `to_position` plus the straight-line residual.
    /// Returns `f64::INFINITY` when that node is unreachable.
    pub fn geodesic(&self, from: &NodeId, to_position: &Position) -> Result<f64, SceneError> {
        let s = self.node_index(from).ok_or_else(|| SceneError::UnknownNode(from.clone()))?;
        let near = self.nearest_node(to_position);
        let path = self.distances_from(s)[near];
        if !path.is_finite() {
            return Ok(f64::INFINITY);
        }
        Ok(path + euclidean(&self.nodes[near].position, to_position))
    }
}

fn validate_sectors(node: &mut Node) -> Result<(), SceneError> {
    if node.sectors.len() != SECTOR_COUNT {
        return Err(SceneError::Invalid(format!(
            "node `{}` has {} sectors, expected {}",
            node.id,
            node.sectors.len(),
            SECTOR_COUNT
        )));
    }
    let mut slots = [false; SECTOR_COUNT];
    for sector in &node.sectors {
        let h = sector.heading_deg;
        let slot = (h / SECTOR_WIDTH_DEG).round();
        if !(0.0..360.0).contains(&h) || (h - slot * SECTOR_WIDTH_DEG).abs() > 1e-9 {
            return Err(SceneError::Invalid(format!(
                "node `{}` has sector heading {h}, expected a multiple of 30 in [0, 360)",
                node.id
            )));
        }
        let slot = slot as usize;
        if std::mem::replace(&mut slots[slot], true) {
            return Err(SceneError::Invalid(format!(
                "node `{}` has duplicate sector heading {h}",
                node.id
            )));
        }
        if sector.landmarks.iter().any(|l| l.trim().is_empty()) {
            return Err(SceneError::Invalid(format!(
                "node `{}` sector {h} has an empty landmark name",
                node.id
            )));
        }
    }
    node.sectors.sort_by(|a, b| a.heading_deg.total_cmp(&b.heading_deg));
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Frontier {
    cost: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn euclidean(a: &Position, b: &Position) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Compass bearing from `from` to `to`: 0° along +y, clockwise positive.
pub fn bearing(from: &Position, to: &Position) -> f64 {
    let dx = to[0] - from[0];
    let dy = to[1] - from[1];
    normalize_deg(dx.atan2(dy).to_degrees())
}

/// Wraps an angle into [0, 360).
pub fn normalize_deg(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

fn sector_slot(heading_deg: f64) -> usize {
    (normalize_deg(heading_deg) / SECTOR_WIDTH_DEG).round() as usize % SECTOR_COUNT
}

/// Twelve sectors with the same description, useful for fixtures and tests.
pub fn plain_sectors(description: &str) -> Vec<Sector> {
    (0..SECTOR_COUNT)
        .map(|k| Sector {
            heading_deg: k as f64 * SECTOR_WIDTH_DEG,
            description: description.to_string(),
            landmarks: Vec::new(),
            image_ref: None,
        })
        .collect()
}
