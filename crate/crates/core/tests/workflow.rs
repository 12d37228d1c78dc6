use trilayer::fixtures;
use trilayer::harness::{cmd_plan, cmd_run, parse_scenario, records_from_csv, records_to_csv, RunMode};
use trilayer::mapio::{load_map, save_map};
use trilayer::pipeline::{Outcome, PipelineConfig};
use trilayer::primitives::PrimitiveSet;

#[test]
fn saved_fixture_plans_like_the_original() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures::door_with_boxes();
    let sidecar = save_map(&f.world, dir.path(), "door").unwrap();
    let loaded = load_map(&sidecar).unwrap();
    assert_eq!(loaded, f.world);

    let prims = PrimitiveSet::builtin(0.1);
    let cfg = PipelineConfig::default();
    let a = cmd_plan("a", &f.world, f.start, f.goal, &prims, &cfg).unwrap().record;
    let b = cmd_plan("a", &loaded, f.start, f.goal, &prims, &cfg).unwrap().record;
    assert_eq!(a.outcome, Outcome::Ok);
    assert_eq!((a.expanded_states, a.graph_size, a.path_cost), (b.expanded_states, b.graph_size, b.path_cost));

    let back = records_from_csv(&records_to_csv(&[a.clone()]).unwrap()).unwrap();
    assert_eq!(back[0].path_cost, a.path_cost);
    assert_eq!(back[0].outcome, a.outcome);
}

#[test]
fn sealing_the_corridor_mid_run_ends_without_a_path() {
    let dir = tempfile::tempdir().unwrap();
    // Wall across the lower leg of the corridor at x = 5..5.5 m, appearing at t = 2 s.
    let text = "map: fixture:corridor\nedit: 2 100 0 110 40 occupied\n";
    let spec = parse_scenario(text, dir.path(), "sealed").unwrap();
    let out = cmd_run(&spec, RunMode::Deterministic).unwrap();
    assert_eq!(out.result.outcome, Outcome::NoPath);
    let t = out.result.failure_time.unwrap();
    assert!((2.0..3.0).contains(&t), "{t}");
    assert!(out.result.min_clearance >= spec.config.footprint.inscribed_radius());
}
