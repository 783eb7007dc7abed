//! Suite execution: many episodes, a worker pool, per-episode artifacts and
//! the summary table.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::episode::{load_episodes, Episode, EpisodeError};
use crate::instruction::InstructionParser;
use crate::metrics::{aggregate, evaluate, evaluate_path, summary_table, MetricsError, MetricsReport, SuiteSummary};
use crate::navigator::{DriftOracle, GreedyOracle, Navigator};
use crate::planner::{to_jsonl, Ablation, EpisodeResult, Planner};
use crate::scene::{Scene, SceneError};

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{0}")]
    Input(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Scenes keyed by id plus the episodes to run over them.
#[derive(Debug, Clone)]
pub struct Suite {
    pub scenes: BTreeMap<String, Scene>,
    pub episodes: Vec<Episode>,
}

impl Suite {
    /// Builds a suite and validates every episode against its scene.
    pub fn new(scenes: Vec<Scene>, episodes: Vec<Episode>) -> Result<Self, SuiteError> {
        if episodes.is_empty() {
            return Err(SuiteError::Input("no episodes to run".into()));
        }
        let mut map = BTreeMap::new();
        for scene in scenes {
            let id = scene.id().to_string();
            if map.insert(id.clone(), scene).is_some() {
                return Err(SuiteError::Input(format!("duplicate scene id `{id}`")));
            }
        }
        let mut ids = std::collections::HashSet::new();
        for ep in &episodes {
            if !ids.insert(ep.episode_id.as_str()) {
                return Err(SuiteError::Input(format!("duplicate episode id `{}`", ep.episode_id)));
            }
            let scene = map.get(&ep.scene_id).ok_or_else(|| {
                SuiteError::Input(format!(
                    "episode `{}` references missing scene `{}`",
                    ep.episode_id, ep.scene_id
                ))
            })?;
            ep.validate(scene)?;
        }
        Ok(Self { scenes: map, episodes })
    }

    /// Loads every `*.json` scene in `scene_dir` and the episodes file.
    pub fn load(scene_dir: impl AsRef<Path>, episodes_file: impl AsRef<Path>) -> Result<Self, SuiteError> {
        let dir = scene_dir.as_ref();
        let entries = std::fs::read_dir(dir)
            .map_err(|e| SuiteError::Input(format!("cannot read scene directory {}: {e}", dir.display())))?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let scenes = paths.iter().map(Scene::load).collect::<Result<Vec<_>, _>>()?;
        Self::new(scenes, load_episodes(episodes_file)?)
    }
}

/// Builds one navigator session per episode.
pub trait NavigatorFactory: Sync {
    fn create<'a>(&self, scene: &'a Scene, episode: &'a Episode) -> Result<Box<dyn Navigator + 'a>, String>;
}

/// Which scripted oracle to run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScriptedKind {
    Greedy,
    Drift(f64),
}

impl FromStr for ScriptedKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "greedy" {
            return Ok(Self::Greedy);
        }
        let p = s
            .strip_prefix("drift:")
            .ok_or_else(|| format!("unknown navigator `{s}`"))?
            .parse::<f64>()
            .map_err(|e| format!("bad drift probability in `{s}`: {e}"))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(format!("drift probability {p} outside [0, 1]"));
        }
        Ok(Self::Drift(p))
    }
}

/// Greedy or drift oracles; drift sessions are seeded from the run seed and
/// the episode seed.
#[derive(Debug, Clone)]
pub struct ScriptedNavigators {
    pub kind: ScriptedKind,
    pub seed: u64,
    pub parser: InstructionParser,
    pub audit_radius: f64,
}

impl ScriptedNavigators {
    pub fn new(kind: ScriptedKind, seed: u64, audit_radius: f64) -> Self {
        Self {
            kind,
            seed,
            parser: InstructionParser::default(),
            audit_radius,
        }
    }
}

/// Mixes two seeds into one (splitmix64 finaliser).
pub fn mix_seed(run_seed: u64, episode_seed: u64) -> u64 {
    let mut z = run_seed ^ episode_seed.rotate_left(32) ^ 0x9E37_79B9_7F4A_7C15;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl NavigatorFactory for ScriptedNavigators {
    fn create<'a>(&self, scene: &'a Scene, episode: &'a Episode) -> Result<Box<dyn Navigator + 'a>, String> {
        let greedy = GreedyOracle::new(scene, self.parser.clone(), self.audit_radius);
        Ok(match self.kind {
            ScriptedKind::Greedy => Box::new(greedy),
            ScriptedKind::Drift(p) => Box::new(
                DriftOracle::new(greedy, p, mix_seed(self.seed, episode.seed)).map_err(|e| e.to_string())?,
            ),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub episode_id: String,
    pub metrics: MetricsReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<EpisodeResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRun {
    pub method: String,
    /// Sorted by episode id.
    pub outcomes: Vec<EpisodeOutcome>,
    pub summary: SuiteSummary,
}

impl SuiteRun {
    pub fn failures(&self) -> usize {
        self.outcomes.iter().filter(|o| o.error.is_some()).count()
    }

    /// Writes `results/<id>.json`, `logs/<id>.jsonl`, `metrics.jsonl` and
    /// `summary.csv` under `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<(), SuiteError> {
        let dir = dir.as_ref();
        let results = dir.join("results");
        let logs = dir.join("logs");
        for d in [&results, &logs] {
            std::fs::create_dir_all(d).map_err(|source| SuiteError::Write {
                path: d.display().to_string(),
                source,
            })?;
        }
        let write = |path: &Path, text: String| {
            std::fs::write(path, text).map_err(|source| SuiteError::Write {
                path: path.display().to_string(),
                source,
            })
        };
        let mut metrics = String::new();
        for o in &self.outcomes {
            let json = serde_json::to_string_pretty(o).expect("outcome serializes");
            write(&results.join(format!("{}.json", o.episode_id)), json + "\n")?;
            let decisions = o.result.as_ref().map(|r| to_jsonl(&r.decisions)).unwrap_or_default();
            write(&logs.join(format!("{}.jsonl", o.episode_id)), decisions)?;
            metrics.push_str(
                &serde_json::to_string(&serde_json::json!({
                    "episode_id": o.episode_id,
                    "metrics": o.metrics,
                }))
                .expect("metrics serialize"),
            );
            metrics.push('\n');
        }
        write(&dir.join("metrics.jsonl"), metrics)?;
        write(&dir.join("summary.csv"), summary_table(std::slice::from_ref(&self.summary)))?;
        Ok(())
    }
}

fn run_one(
    suite: &Suite,
    planner: &Planner,
    factory: &dyn NavigatorFactory,
    episode: &Episode,
) -> Result<EpisodeOutcome, SuiteError> {
    let scene = &suite.scenes[&episode.scene_id];
    let attempt = factory
        .create(scene, episode)
        .and_then(|mut nav| planner.run_episode(scene, episode, nav.as_mut()).map_err(|e| e.to_string()));
    Ok(match attempt {
        Ok(result) => EpisodeOutcome {
            episode_id: episode.episode_id.clone(),
            metrics: evaluate(scene, episode, &result)?,
            error: None,
            result: Some(result),
        },
        Err(error) => EpisodeOutcome {
            // scored from where the agent stood: the start
            episode_id: episode.episode_id.clone(),
            metrics: evaluate_path(scene, episode, std::slice::from_ref(&episode.start_node), &episode.start_node)?,
            error: Some(error),
            result: None,
        },
    })
}

/// Runs every episode with up to `parallelism` workers. Output order does
/// not depend on scheduling.
pub fn run_suite(
    suite: &Suite,
    planner: &Planner,
    factory: &dyn NavigatorFactory,
    parallelism: usize,
    method: &str,
) -> Result<SuiteRun, SuiteError> {
    planner.config.validate().map_err(|e| SuiteError::Input(e.to_string()))?;
    let workers = parallelism.max(1).min(suite.episodes.len());
    let next = AtomicUsize::new(0);
    let collected: Mutex<Vec<Result<EpisodeOutcome, SuiteError>>> = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(ep) = suite.episodes.get(i) else { break };
                let outcome = run_one(suite, planner, factory, ep);
                collected.lock().expect("collector lock").push(outcome);
            });
        }
    });
    let mut outcomes = collected
        .into_inner()
        .expect("collector lock")
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    outcomes.sort_by(|a, b| a.episode_id.cmp(&b.episode_id));
    let reports: Vec<MetricsReport> = outcomes.iter().map(|o| o.metrics).collect();
    Ok(SuiteRun {
        method: method.to_string(),
        summary: aggregate(method, &reports)?,
        outcomes,
    })
}

/// Runs the suite as full planner, without look-backward, and local-only.
pub fn compare_ablations(
    suite: &Suite,
    planner: &Planner,
    factory: &dyn NavigatorFactory,
    parallelism: usize,
) -> Result<Vec<SuiteRun>, SuiteError> {
    [Ablation::FULL, Ablation::NO_BACKWARD, Ablation::LOCAL_ONLY]
        .into_iter()
        .map(|ablation| {
            let mut variant = planner.clone();
            variant.config.ablation = ablation;
            run_suite(suite, &variant, factory, parallelism, ablation.label())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn navigator_spec_parsing() {
        assert_eq!("greedy".parse::<ScriptedKind>().unwrap(), ScriptedKind::Greedy);
        assert_eq!("drift:0.3".parse::<ScriptedKind>().unwrap(), ScriptedKind::Drift(0.3));
        assert!("drift:1.5".parse::<ScriptedKind>().is_err());
        assert!("drift:x".parse::<ScriptedKind>().is_err());
        assert!("random".parse::<ScriptedKind>().is_err());
    }

    #[test]
    fn empty_suite_rejected() {
        assert!(Suite::new(Vec::new(), Vec::new()).is_err());
    }

    #[test]
    fn seed_mixing_separates_inputs() {
        assert_ne!(mix_seed(1, 2), mix_seed(2, 1));
        assert_eq!(mix_seed(7, 9), mix_seed(7, 9));
    }
}
