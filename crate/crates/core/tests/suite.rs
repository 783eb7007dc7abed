use vlnplan::fixtures::{generate, FixtureConfig};
use vlnplan::metrics::{aggregate, MetricsReport};
use vlnplan::suite::{compare_ablations, run_suite, ScriptedKind, ScriptedNavigators, Suite};
use vlnplan::Planner;

fn suite(seed: u64, count: usize) -> Suite {
    let set = generate(&FixtureConfig { count, seed, distractor_rate: 0.5, ..Default::default() }).unwrap();
    Suite::new(set.scenes, set.episodes).unwrap()
}

#[test]
fn parallel_equals_serial() {
    let s = suite(2, 12);
    let nav = ScriptedNavigators::new(ScriptedKind::Drift(0.3), 4, 3.0);
    let serial = run_suite(&s, &Planner::default(), &nav, 1, "full").unwrap();
    let parallel = run_suite(&s, &Planner::default(), &nav, 6, "full").unwrap();
    assert_eq!(serial, parallel);
}

#[test]
fn summary_recomputes_from_disk() {
    let s = suite(4, 6);
    let nav = ScriptedNavigators::new(ScriptedKind::Drift(0.3), 1, 3.0);
    let run = run_suite(&s, &Planner::default(), &nav, 3, "full").unwrap();
    let dir = std::env::temp_dir().join(format!("vlnplan-suite-{}", std::process::id()));
    run.write(&dir).unwrap();
    let reports: Vec<MetricsReport> = std::fs::read_to_string(dir.join("metrics.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_value(serde_json::from_str::<serde_json::Value>(l).unwrap()["metrics"].clone()).unwrap())
        .collect();
    let again = aggregate("full", &reports).unwrap();
    let csv = std::fs::read_to_string(dir.join("summary.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), again.csv_row());
    assert_eq!(std::fs::read_dir(dir.join("results")).unwrap().count(), 6);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn greedy_ablations_all_succeed() {
    let set = generate(&FixtureConfig { count: 10, seed: 6, ..Default::default() }).unwrap();
    let s = Suite::new(set.scenes, set.episodes).unwrap();
    let nav = ScriptedNavigators::new(ScriptedKind::Greedy, 1, 3.0);
    let rows = compare_ablations(&s, &Planner::default(), &nav, 4).unwrap();
    let labels: Vec<&str> = rows.iter().map(|r| r.method.as_str()).collect();
    assert_eq!(labels, ["full", "no-backward", "local-only"]);
    for r in rows {
        assert_eq!(r.summary.sr, 100.0, "{}", r.method);
    }
}

#[test]
fn missing_scene_is_rejected() {
    let mut set = generate(&FixtureConfig { count: 2, seed: 1, ..Default::default() }).unwrap();
    set.scenes.pop();
    assert!(Suite::new(set.scenes, set.episodes).is_err());
}
