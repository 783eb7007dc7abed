//! Path-quality metrics: TL, NE, nDTW, SR, OSR and SPL, plus suite averages.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::episode::Episode;
use crate::planner::EpisodeResult;
use crate::scene::{euclidean, NodeId, Position, Scene, SceneError};

/// Success radius in meters; also the nDTW normaliser.
pub const SUCCESS_RADIUS_M: f64 = 3.0;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("path is empty")]
    EmptyPath,
    #[error("path step {0} -> {1} is not an edge")]
    NotAdjacent(NodeId, NodeId),
    #[error("no reports to aggregate")]
    NoReports,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tl: f64,
    pub ne: f64,
    pub ndtw: f64,
    pub sr: bool,
    pub osr: bool,
    pub spl: f64,
}

/// Sum of edge lengths along a node path.
pub fn trajectory_length(path: &[NodeId], scene: &Scene) -> Result<f64, MetricsError> {
    if let Some(first) = path.first() {
        scene.node(first)?;
    }
    path.windows(2).try_fold(0.0, |acc, w| {
        scene
            .edge_length(&w[0], &w[1])
            .map(|len| acc + len)
            .ok_or_else(|| MetricsError::NotAdjacent(w[0].clone(), w[1].clone()))
    })
}

pub fn navigation_error(stop_node: &NodeId, goal: &Position, scene: &Scene) -> Result<f64, MetricsError> {
    Ok(scene.geodesic(stop_node, goal)?)
}

/// Strictly inside the success radius.
pub fn success(ne: f64) -> bool {
    ne < SUCCESS_RADIUS_M
}

/// True when any visited node came within the success radius of the goal.
pub fn oracle_success(path: &[NodeId], goal: &Position, scene: &Scene) -> Result<bool, MetricsError> {
    let near = scene.nearest_node(goal);
    let residual = euclidean(&scene.nodes()[near].position, goal);
    // undirected graph: distances from the goal's node equal distances to it
    let dist = scene.distances_from(near);
    for id in path {
        let i = scene
            .node_index(id)
            .ok_or_else(|| SceneError::UnknownNode(id.clone()))?;
        if success(dist[i] + residual) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Success weighted by path length.
pub fn spl(sr: bool, shortest: f64, actual_tl: f64) -> f64 {
    if !sr {
        return 0.0;
    }
    let denom = shortest.max(actual_tl);
    if denom <= 0.0 {
        1.0
    } else {
        shortest / denom
    }
}

/// Dynamic-time-warping cost between two polylines with Euclidean point
/// distance and steps (1,0), (0,1), (1,1).
pub fn dtw(p: &[Position], r: &[Position]) -> Result<f64, MetricsError> {
    if p.is_empty() || r.is_empty() {
        return Err(MetricsError::EmptyPath);
    }
    let m = r.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for pi in p {
        cur[0] = f64::INFINITY;
        for (j, rj) in r.iter().enumerate() {
            let best = prev[j].min(prev[j + 1]).min(cur[j]);
            cur[j + 1] = euclidean(pi, rj) + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m])
}

/// Normalised DTW: `exp(-DTW(P, R) / (|R| * 3 m))`.
pub fn ndtw(p: &[Position], r: &[Position]) -> Result<f64, MetricsError> {
    let cost = dtw(p, r)?;
    Ok((-cost / (r.len() as f64 * SUCCESS_RADIUS_M)).exp())
}

pub fn positions(path: &[NodeId], scene: &Scene) -> Result<Vec<Position>, MetricsError> {
    path.iter()
        .map(|id| scene.position(id).map_err(MetricsError::from))
        .collect()
}

/// Scores an executed physical path that ended at `stop_node`.
pub fn evaluate_path(
    scene: &Scene,
    episode: &Episode,
    physical_path: &[NodeId],
    stop_node: &NodeId,
) -> Result<MetricsReport, MetricsError> {
    let tl = trajectory_length(physical_path, scene)?;
    let ne = navigation_error(stop_node, &episode.goal_position, scene)?;
    let sr = success(ne);
    let osr = oracle_success(physical_path, &episode.goal_position, scene)?;
    let shortest = scene.geodesic(&episode.start_node, &episode.goal_position)?;
    let executed = positions(physical_path, scene)?;
    let reference = positions(&episode.reference_path, scene)?;
    Ok(MetricsReport {
        tl,
        ne,
        ndtw: ndtw(&executed, &reference)?,
        sr,
        osr,
        spl: spl(sr, shortest, tl),
    })
}

pub fn evaluate(scene: &Scene, episode: &Episode, result: &EpisodeResult) -> Result<MetricsReport, MetricsError> {
    evaluate_path(scene, episode, &result.physical_path, &result.stop_pose.node)
}

/// Suite-level means; SR and OSR as percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub method: String,
    pub count: usize,
    pub tl: f64,
    pub ne: f64,
    pub ndtw: f64,
    pub osr: f64,
    pub sr: f64,
    pub spl: f64,
}

pub const SUMMARY_HEADER: &str = "method,tl,ne,ndtw,osr,sr,spl";

impl SuiteSummary {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.4},{:.4},{:.4},{:.2},{:.2},{:.4}",
            self.method, self.tl, self.ne, self.ndtw, self.osr, self.sr, self.spl
        )
    }
}

pub fn summary_table(rows: &[SuiteSummary]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

pub fn aggregate(method: &str, reports: &[MetricsReport]) -> Result<SuiteSummary, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::NoReports);
    }
    let n = reports.len() as f64;
    let mean = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    Ok(SuiteSummary {
        method: method.to_string(),
        count: reports.len(),
        tl: mean(|r| r.tl),
        ne: mean(|r| r.ne),
        ndtw: mean(|r| r.ndtw),
        osr: 100.0 * mean(|r| f64::from(u8::from(r.osr))),
        sr: 100.0 * mean(|r| f64::from(u8::from(r.sr))),
        spl: mean(|r| r.spl),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{plain_sectors, Edge, Node, SceneFile};

    fn line() -> Scene {
        let node = |id: &str, y: f64| Node {
            id: id.into(),
            position: [0.0, y, 0.0],
            sectors: plain_sectors(id),
        };
        Scene::new(SceneFile {
            scene_id: "line".into(),
            nodes: vec![node("a", 0.0), node("b", 2.0), node("c", 4.5)],
            edges: vec![
                Edge { a: "a".into(), b: "b".into(), length_m: 2.0 },
                Edge { a: "b".into(), b: "c".into(), length_m: 2.5 },
            ],
        })
        .unwrap()
    }

    fn ids(v: &[&str]) -> Vec<NodeId> {
        v.iter().map(|s| NodeId::from(*s)).collect()
    }

    #[test]
    fn trajectory_length_cases() {
        let s = line();
        assert_eq!(trajectory_length(&ids(&["a"]), &s).unwrap(), 0.0);
        assert_eq!(trajectory_length(&ids(&["a", "b", "a"]), &s).unwrap(), 4.0);
        assert_eq!(trajectory_length(&ids(&["a", "b", "c", "b"]), &s).unwrap(), 7.0);
        assert!(trajectory_length(&ids(&["a", "c"]), &s).is_err());
    }

    #[test]
    fn success_boundary() {
        assert!(success(2.9));
        assert!(!success(3.0));
        assert!(success(0.0));
    }

    #[test]
    fn oracle_success_cases() {
        let s = line();
        let goal = [0.0, 4.5, 0.0];
        assert!(oracle_success(&ids(&["a", "b", "c", "b", "a"]), &goal, &s).unwrap());
        assert!(!oracle_success(&ids(&["a"]), &goal, &s).unwrap());
        // closest approach: b at 2.5 m
        assert!(oracle_success(&ids(&["a", "b", "a"]), &goal, &s).unwrap());
    }

    #[test]
    fn spl_cases() {
        assert_eq!(spl(false, 10.0, 10.0), 0.0);
        assert!((spl(true, 10.0, 12.5) - 0.8).abs() < 1e-15);
        assert_eq!(spl(true, 10.0, 9.0), 1.0);
        assert_eq!(spl(true, 0.0, 0.0), 1.0);
    }

    #[test]
    fn ndtw_cases() {
        let p = [[0.0, 0.0, 0.0], [1.0, 2.0, 0.0]];
        assert_eq!(ndtw(&p, &p).unwrap(), 1.0);
        let single = ndtw(&[[0.0, 0.0, 0.0]], &[[0.0, 0.0, 0.0], [3.0, 0.0, 0.0]]).unwrap();
        assert!((single - (-0.5f64).exp()).abs() < 1e-12);
        assert!(ndtw(&[], &p).is_err());
    }

    #[test]
    fn aggregate_cases() {
        let r = MetricsReport { tl: 5.0, ne: 1.0, ndtw: 0.9, sr: true, osr: true, spl: 0.8 };
        let one = aggregate("m", &[r]).unwrap();
        assert_eq!((one.tl, one.ne, one.ndtw, one.sr, one.osr, one.spl), (5.0, 1.0, 0.9, 100.0, 100.0, 0.8));
        let fail = MetricsReport { sr: false, spl: 0.0, ..r };
        assert_eq!(aggregate("m", &[r, fail]).unwrap().sr, 50.0);
        assert!(aggregate("m", &[]).is_err());
        assert_eq!(
            summary_table(&[one]).lines().next().unwrap(),
            "method,tl,ne,ndtw,osr,sr,spl"
        );
    }
}
