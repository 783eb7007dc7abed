//! Seeded generators for desk-scale scenes and episodes.
//!
//! Every generated episode carries a landmark-chain instruction that the
//! rule-based segmenter recovers exactly, and a reference path that the
//! greedy oracle under the full planner reproduces step for step.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::episode::{episodes_to_jsonl, Episode};
use crate::instruction::InstructionParser;
use crate::navigator::GreedyOracle;
use crate::planner::{Planner, PlannerConfig, StopReason};
use crate::scene::{bearing, Edge, Node, NodeId, Position, Scene, SceneError, SceneFile, Sector, SECTOR_COUNT, SECTOR_WIDTH_DEG};

/// Household objects used as sub-goal anchors. All appear in the default
/// landmark lexicon.
pub const OBJECT_NAMES: &[&str] = &[
    "sofa", "lamp", "table", "piano", "fireplace", "bookshelf", "television", "plant", "mirror", "painting",
    "armchair", "cabinet", "clock", "vase", "statue", "desk", "bench", "dresser", "wardrobe", "fridge", "stove",
    "sink", "rug", "chair", "bed",
];

const FIRST: &[&str] = &["Walk to the {}", "Head toward the {}", "Go to the {}"];
const MIDDLE: &[&str] = &["go to the {}", "continue until you reach the {}", "walk past the corridor to the {}"];
const LAST: &[&str] = &["stop at the {}", "wait by the {}", "stop in front of the {}"];

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("invalid fixture config: {0}")]
    Config(String),
    #[error("could not generate a valid episode for scene `{0}`")]
    Exhausted(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("cannot write fixtures: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureKind {
    GridMaze,
    Line,
    Star,
}

impl FromStr for FixtureKind {
    type Err = FixtureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "grid-maze" => Ok(Self::GridMaze),
            "line" => Ok(Self::Line),
            "star" => Ok(Self::Star),
            other => Err(FixtureError::Config(format!("unknown fixture kind `{other}`"))),
        }
    }
}

impl fmt::Display for FixtureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::GridMaze => "grid-maze",
            Self::Line => "line",
            Self::Star => "star",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureConfig {
    pub kind: FixtureKind,
    /// Number of scenes; each scene carries one episode.
    pub count: usize,
    pub seed: u64,
    /// Grid side, line length, or star arm length, in nodes.
    pub size: usize,
    /// Edge length in meters.
    pub spacing: f64,
    /// Probability that a grid episode gets a second instance of its final
    /// landmark placed where it misleads a planner that only knows the goal.
    pub distractor_rate: f64,
    /// Probability of opening an extra wall in the grid maze, creating loops.
    pub loop_rate: f64,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        Self {
            kind: FixtureKind::GridMaze,
            count: 20,
            seed: 1,
            size: 8,
            spacing: 4.0,
            distractor_rate: 0.0,
            loop_rate: 0.15,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FixtureSet {
    pub scenes: Vec<Scene>,
    pub episodes: Vec<Episode>,
}

impl FixtureSet {
    /// Writes `scenes/<scene_id>.json` and `episodes.jsonl` under `out_dir`.
    pub fn write(&self, out_dir: impl AsRef<Path>) -> Result<(), FixtureError> {
        let dir = out_dir.as_ref();
        let scenes = dir.join("scenes");
        std::fs::create_dir_all(&scenes)?;
        for scene in &self.scenes {
            std::fs::write(scenes.join(format!("{}.json", scene.id())), scene.to_json_pretty() + "\n")?;
        }
        std::fs::write(dir.join("episodes.jsonl"), episodes_to_jsonl(&self.episodes))?;
        Ok(())
    }
}

/// Bare graph before landmarks are attached.
struct Layout {
    ids: Vec<NodeId>,
    positions: Vec<Position>,
    edges: Vec<(usize, usize)>,
}

impl Layout {
    fn scene(&self, scene_id: &str, spacing: f64, landmarks: &HashMap<usize, Vec<(usize, String)>>) -> Result<Scene, SceneError> {
        let mut bearings: Vec<Vec<f64>> = vec![Vec::new(); self.ids.len()];
        for &(a, b) in &self.edges {
            bearings[a].push(bearing(&self.positions[a], &self.positions[b]));
            bearings[b].push(bearing(&self.positions[b], &self.positions[a]));
        }
        let nodes = (0..self.ids.len())
            .map(|i| {
                let sectors = (0..SECTOR_COUNT)
                    .map(|k| {
                        let heading = k as f64 * SECTOR_WIDTH_DEG;
                        let open = bearings[i].iter().any(|b| angle_gap(*b, heading) < SECTOR_WIDTH_DEG / 2.0);
                        let mut sector = Sector {
                            heading_deg: heading,
                            description: if open { "an open passage".into() } else { "a plain wall".into() },
                            landmarks: Vec::new(),
                            image_ref: None,
                        };
                        for (slot, name) in landmarks.get(&i).into_iter().flatten() {
                            if *slot == k {
                                sector.description = format!("{} with a {name}", sector.description);
                                sector.landmarks.push(name.clone());
                            }
                        }
                        sector
                    })
                    .collect();
                Node {
                    id: self.ids[i].clone(),
                    position: self.positions[i],
                    sectors,
                }
            })
            .collect();
        let edges = self
            .edges
            .iter()
            .map(|&(a, b)| Edge {
                a: self.ids[a].clone(),
                b: self.ids[b].clone(),
                length_m: spacing,
            })
            .collect();
        Scene::new(SceneFile {
            scene_id: scene_id.to_string(),
            nodes,
            edges,
        })
    }
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

fn grid_layout(size: usize, spacing: f64, loop_rate: f64, rng: &mut ChaCha8Rng) -> Layout {
    let idx = |x: usize, y: usize| y * size + x;
    let mut ids = Vec::with_capacity(size * size);
    let mut positions = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            ids.push(NodeId(format!("r{y}c{x}")));
            positions.push([x as f64 * spacing, y as f64 * spacing, 0.0]);
        }
    }
    let neighbors = |i: usize| {
        let (x, y) = (i % size, i / size);
        let mut out = Vec::with_capacity(4);
        if x > 0 {
            out.push(idx(x - 1, y));
        }
        if x + 1 < size {
            out.push(idx(x + 1, y));
        }
        if y > 0 {
            out.push(idx(x, y - 1));
        }
        if y + 1 < size {
            out.push(idx(x, y + 1));
        }
        out
    };

    // randomized depth-first spanning tree
    let mut edges = HashSet::new();
    let mut visited = vec![false; size * size];
    let first = rng.random_range(0..size * size);
    let mut stack = vec![first];
    visited[first] = true;
    while let Some(&cur) = stack.last() {
        let open: Vec<usize> = neighbors(cur).into_iter().filter(|&n| !visited[n]).collect();
        match open.choose(rng) {
            Some(&next) => {
                visited[next] = true;
                edges.insert((cur.min(next), cur.max(next)));
                stack.push(next);
            }
            None => {
                stack.pop();
            }
        }
    }
    for i in 0..size * size {
        for n in neighbors(i) {
            if n > i && !edges.contains(&(i, n)) && rng.random_bool(loop_rate) {
                edges.insert((i, n));
            }
        }
    }
    let mut edges: Vec<_> = edges.into_iter().collect();
    edges.sort_unstable();
    Layout { ids, positions, edges }
}

fn line_layout(size: usize, spacing: f64) -> Layout {
    Layout {
        ids: (0..size).map(|i| NodeId(format!("p{i}"))).collect(),
        positions: (0..size).map(|i| [0.0, i as f64 * spacing, 0.0]).collect(),
        edges: (1..size).map(|i| (i - 1, i)).collect(),
    }
}

fn star_layout(arm_len: usize, spacing: f64) -> Layout {
    let mut ids = vec![NodeId::new("hub")];
    let mut positions = vec![[0.0, 0.0, 0.0]];
    let mut edges = Vec::new();
    for arm in 0..4 {
        let theta = (arm as f64 * 90.0).to_radians();
        for step in 1..=arm_len {
            let r = step as f64 * spacing;
            ids.push(NodeId(format!("a{arm}s{step}")));
            positions.push([r * theta.sin(), r * theta.cos(), 0.0]);
            let prev = if step == 1 { 0 } else { ids.len() - 2 };
            edges.push((prev, ids.len() - 1));
        }
    }
    Layout { ids, positions, edges }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Template instruction for an ordered landmark chain.
pub fn chain_instruction(names: &[String], rng: &mut impl Rng) -> String {
    let n = names.len();
    let clauses: Vec<String> = names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let pool = if i + 1 == n && n > 1 {
                LAST
            } else if i == 0 {
                FIRST
            } else {
                MIDDLE
            };
            pool.choose(rng).expect("non-empty pool").replace("{}", name)
        })
        .collect();
    format!("{}.", capitalize(&clauses.join(", then ")))
}

pub fn generate(config: &FixtureConfig) -> Result<FixtureSet, FixtureError> {
    if config.count == 0 {
        return Err(FixtureError::Config("count must be at least 1".into()));
    }
    if !(config.spacing > 0.0) || !(0.0..=1.0).contains(&config.distractor_rate) || !(0.0..=1.0).contains(&config.loop_rate) {
        return Err(FixtureError::Config("spacing must be positive and rates within [0, 1]".into()));
    }
    let min_size = match config.kind {
        FixtureKind::GridMaze => 3,
        FixtureKind::Line => 3,
        FixtureKind::Star => 1,
    };
    if config.size < min_size {
        return Err(FixtureError::Config(format!("size {} too small for {}", config.size, config.kind)));
    }
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let mut scenes = Vec::with_capacity(config.count);
    let mut episodes = Vec::with_capacity(config.count);
    for i in 0..config.count {
        let scene_seed: u64 = master.random();
        let scene_id = format!("{}-s{}-{i:03}", config.kind, config.seed);
        let (scene, episode) = generate_one(config, &scene_id, scene_seed)?;
        scenes.push(scene);
        episodes.push(episode);
    }
    Ok(FixtureSet { scenes, episodes })
}

fn generate_one(config: &FixtureConfig, scene_id: &str, seed: u64) -> Result<(Scene, Episode), FixtureError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = match config.kind {
        FixtureKind::GridMaze => grid_layout(config.size, config.spacing, config.loop_rate, &mut rng),
        FixtureKind::Line => line_layout(config.size, config.spacing),
        FixtureKind::Star => star_layout(config.size, config.spacing),
    };
    let bare = layout.scene(scene_id, config.spacing, &HashMap::new())?;
    let n = layout.ids.len();

    for _attempt in 0..200 {
        let (start, goal) = match config.kind {
            FixtureKind::GridMaze => {
                let lo = (config.size * 3 / 4).max(2);
                let hi = config.size + 2;
                let s = rng.random_range(0..n);
                let g = rng.random_range(0..n);
                let hops = bare.distances_from(s)[g] / config.spacing;
                if s == g || hops < lo as f64 - 0.5 || hops > hi as f64 + 0.5 {
                    continue;
                }
                (s, g)
            }
            FixtureKind::Line => (0, n - 1),
            FixtureKind::Star => {
                let arm = rng.random_range(1..4);
                (config.size, arm * config.size + config.size)
            }
        };
        let route = bare
            .shortest_path(&layout.ids[start], &layout.ids[goal])?
            .expect("generated layouts are connected");
        let route: Vec<usize> = route.iter().map(|id| bare.node_index(id).expect("known")).collect();
        let hops = route.len() - 1;

        let subs = if config.kind == FixtureKind::GridMaze {
            rng.random_range(2..=4.min(hops))
        } else {
            rng.random_range(1..=3.min(hops))
        };
        let mut anchors: Vec<usize> = (1..hops).collect::<Vec<_>>();
        anchors.shuffle(&mut rng);
        anchors.truncate(subs - 1);
        anchors.sort_unstable();
        anchors.push(hops);
        let anchor_nodes: Vec<usize> = anchors.iter().map(|&k| route[k]).collect();

        let mut names: Vec<String> = OBJECT_NAMES.iter().map(|s| s.to_string()).collect();
        names.shuffle(&mut rng);
        let chain: Vec<String> = names.drain(..subs).collect();

        let mut landmarks: HashMap<usize, Vec<(usize, String)>> = HashMap::new();
        for (node, name) in anchor_nodes.iter().zip(&chain) {
            landmarks
                .entry(*node)
                .or_default()
                .push((rng.random_range(0..SECTOR_COUNT), name.clone()));
        }
        // unrelated objects for texture
        let on_route: HashSet<usize> = route.iter().copied().collect();
        let free: Vec<usize> = (0..n).filter(|i| !on_route.contains(i)).collect();
        let decoys = (n / 8).min(free.len());
        for (&node, name) in free.choose_multiple(&mut rng, decoys).zip(names.iter()) {
            landmarks
                .entry(node)
                .or_default()
                .push((rng.random_range(0..SECTOR_COUNT), name.clone()));
        }

        if config.kind == FixtureKind::GridMaze && subs >= 2 && rng.random_bool(config.distractor_rate) {
            let from_start = bare.distances_from(start);
            let penultimate = anchor_nodes[subs - 2];
            let from_pen = bare.distances_from(penultimate);
            let spots: Vec<usize> = (0..n)
                .filter(|i| !on_route.contains(i) && !landmarks.contains_key(i))
                .filter(|&i| from_start[i] < from_start[goal] && from_pen[goal] < from_pen[i])
                .collect();
            if let Some(&spot) = spots.choose(&mut rng) {
                landmarks
                    .entry(spot)
                    .or_default()
                    .push((rng.random_range(0..SECTOR_COUNT), chain[subs - 1].clone()));
            }
        }

        let scene = layout.scene(scene_id, config.spacing, &landmarks)?;
        let mut episode = Episode {
            episode_id: format!("{scene_id}-ep0"),
            scene_id: scene_id.to_string(),
            start_node: layout.ids[start].clone(),
            start_heading_deg: rng.random_range(0..SECTOR_COUNT) as f64 * SECTOR_WIDTH_DEG,
            goal_position: layout.positions[goal],
            instruction: chain_instruction(&chain, &mut rng),
            reference_path: vec![layout.ids[start].clone()],
            seed: rng.random(),
        };

        // the reference path is what the greedy oracle walks under the full
        // planner; keep it only if that walk is a shortest path to the goal
        let parser = InstructionParser::default();
        let planner = Planner::new(PlannerConfig::default(), parser.clone());
        let mut oracle = GreedyOracle::new(&scene, parser, planner.config.distance_threshold);
        let walk = match planner.run_episode(&scene, &episode, &mut oracle) {
            Ok(walk) => walk,
            Err(_) => continue,
        };
        let walked = walk.logical_path.len() - 1;
        if walk.stop_reason != StopReason::CompletedPlan
            || walk.logical_path.last() != Some(&layout.ids[goal])
            || walked != hops
            || walk.physical_path != walk.logical_path
        {
            continue;
        }
        episode.reference_path = walk.logical_path;
        return Ok((scene, episode));
    }
    Err(FixtureError::Exhausted(scene_id.to_string()))
}
