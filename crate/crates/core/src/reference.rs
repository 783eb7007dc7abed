//! Exhaustive reference implementations. Exponential; only for cross-checking
//! the fast paths on small inputs.

use crate::scene::{euclidean, NodeId, Position, Scene, SceneError};

/// DTW by enumerating every monotone alignment from (0,0) to the far corner.
pub fn dtw_exhaustive(p: &[Position], r: &[Position]) -> Option<f64> {
    fn walk(p: &[Position], r: &[Position], i: usize, j: usize, acc: f64, best: &mut f64) {
        let acc = acc + euclidean(&p[i], &r[j]);
        if i + 1 == p.len() && j + 1 == r.len() {
            *best = best.min(acc);
            return;
        }
        if i + 1 < p.len() {
            walk(p, r, i + 1, j, acc, best);
        }
        if j + 1 < r.len() {
            walk(p, r, i, j + 1, acc, best);
        }
        if i + 1 < p.len() && j + 1 < r.len() {
            walk(p, r, i + 1, j + 1, acc, best);
        }
    }
    if p.is_empty() || r.is_empty() {
        return None;
    }
    let mut best = f64::INFINITY;
    walk(p, r, 0, 0, 0.0, &mut best);
    Some(best)
}

pub fn ndtw_exhaustive(p: &[Position], r: &[Position]) -> Option<f64> {
    dtw_exhaustive(p, r).map(|d| (-d / (r.len() as f64 * crate::metrics::SUCCESS_RADIUS_M)).exp())
}

/// Shortest node-to-node distance by enumerating every simple path.
pub fn path_length_exhaustive(scene: &Scene, from: usize, to: usize) -> f64 {
    fn walk(scene: &Scene, at: usize, to: usize, seen: &mut [bool], acc: f64, best: &mut f64) {
        if at == to {
            *best = best.min(acc);
            return;
        }
        for &(next, len) in scene.neighbors(at) {
            if !seen[next] {
                seen[next] = true;
                walk(scene, next, to, seen, acc + len, best);
                seen[next] = false;
            }
        }
    }
    let mut seen = vec![false; scene.nodes().len()];
    seen[from] = true;
    let mut best = f64::INFINITY;
    walk(scene, from, to, &mut seen, 0.0, &mut best);
    best
}

/// Geodesic to a position via [`path_length_exhaustive`].
pub fn geodesic_exhaustive(scene: &Scene, from: &NodeId, to_position: &Position) -> Result<f64, SceneError> {
    let start = scene
        .node_index(from)
        .ok_or_else(|| SceneError::UnknownNode(from.clone()))?;
    let near = scene.nearest_node(to_position);
    Ok(path_length_exhaustive(scene, start, near) + euclidean(&scene.nodes()[near].position, to_position))
}
