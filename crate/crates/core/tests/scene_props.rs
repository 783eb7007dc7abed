use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vlnplan::reference::{geodesic_exhaustive, path_length_exhaustive};
use vlnplan::scene::{euclidean, plain_sectors, Edge, Node, NodeId, Pose, Scene, SceneFile};

/// Connected random graph: a random tree plus a few chords, positions in a
/// 20 m square, edge lengths equal to the Euclidean distance.
fn random_scene(seed: u64, n: usize, extra: usize) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions: Vec<[f64; 3]> = (0..n)
        .map(|_| [rng.random_range(0.0..20.0), rng.random_range(0.0..20.0), 0.0])
        .collect();
    let mut pairs = std::collections::BTreeSet::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        pairs.insert((j, i));
    }
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    let id = |i: usize| NodeId(format!("n{i}"));
    let nodes = positions
        .iter()
        .enumerate()
        .map(|(i, p)| Node {
            id: id(i),
            position: *p,
            sectors: plain_sectors("floor"),
        })
        .collect();
    let edges = pairs
        .into_iter()
        .filter(|&(a, b)| euclidean(&positions[a], &positions[b]) > 1e-6)
        .map(|(a, b)| Edge {
            a: id(a),
            b: id(b),
            length_m: euclidean(&positions[a], &positions[b]),
        })
        .collect();
    Scene::new(SceneFile {
        scene_id: format!("rand-{seed}"),
        nodes,
        edges,
    })
    .expect("random scene is valid")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn geodesic_matches_exhaustive_search(seed in any::<u64>(), n in 2usize..=20, extra in 0usize..6) {
        let scene = random_scene(seed, n, extra);
        for from in scene.nodes() {
            for to in scene.nodes() {
                let fast = scene.geodesic(&from.id, &to.position).unwrap();
                let slow = geodesic_exhaustive(&scene, &from.id, &to.position).unwrap();
                prop_assert!((fast - slow).abs() < 1e-9, "{} -> {}: {fast} vs {slow}", from.id, to.id);
            }
        }
    }

    #[test]
    fn geodesic_triangle_inequality(seed in any::<u64>(), n in 3usize..=12, extra in 0usize..6) {
        let scene = random_scene(seed, n, extra);
        let d: Vec<Vec<f64>> = (0..n).map(|i| scene.distances_from(i)).collect();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    prop_assert!(d[a][c] <= d[a][b] + d[b][c] + 1e-9);
                }
            }
        }
    }

    #[test]
    fn move_and_reverse_returns_home(seed in any::<u64>(), n in 2usize..=12, heading in 0.0f64..360.0) {
        let scene = random_scene(seed, n, 3);
        for node in scene.nodes() {
            let pose = Pose::new(node.id.clone(), heading);
            for cand in scene.candidates(&pose).unwrap() {
                let (there, out) = scene.move_to(&pose, &cand).unwrap();
                let back = scene
                    .candidates(&there)
                    .unwrap()
                    .into_iter()
                    .find(|c| c.target_node == node.id)
                    .expect("undirected edge offers the way back");
                let (home, ret) = scene.move_to(&there, &back).unwrap();
                prop_assert_eq!(&home.node, &node.id);
                prop_assert!((out - ret).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn observe_is_a_rotation(heading in 0.0f64..360.0) {
        let scene = random_scene(1, 3, 0);
        let pose = Pose::new(scene.nodes()[0].id.clone(), heading);
        let view = scene.observe(&pose).unwrap();
        let mut headings: Vec<u32> = view.sectors.iter().map(|s| s.heading_deg as u32).collect();
        prop_assert_eq!(headings.len(), 12);
        // consecutive sectors step 30 degrees clockwise
        for w in headings.windows(2) {
            prop_assert_eq!((w[0] + 30) % 360, w[1]);
        }
        headings.sort_unstable();
        prop_assert_eq!(headings, (0..12).map(|k| k * 30).collect::<Vec<u32>>());
    }
}

#[test]
fn exhaustive_path_length_on_line() {
    let scene = random_scene(9, 2, 0);
    let d = euclidean(&scene.nodes()[0].position, &scene.nodes()[1].position);
    assert!((path_length_exhaustive(&scene, 0, 1) - d).abs() < 1e-12);
}

#[test]
fn candidate_distances_match_edge_table() {
    let scene = vlnplan::fixtures::generate(&vlnplan::fixtures::FixtureConfig {
        count: 1,
        seed: 3,
        ..Default::default()
    })
    .unwrap()
    .scenes
    .remove(0);
    for node in scene.nodes() {
        let cands = scene.candidates(&Pose::new(node.id.clone(), 0.0)).unwrap();
        let idx = scene.node_index(&node.id).unwrap();
        assert_eq!(cands.len(), scene.neighbors(idx).len());
        for c in cands {
            assert_eq!(Some(c.distance), scene.edge_length(&node.id, &c.target_node));
        }
    }
}
