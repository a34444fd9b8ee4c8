use alloc::sync::Arc;
use alloc::vec::Vec;

use super::*;
use crate::roadnet::{generate_scenario, two_way_road, ScenarioKind, ScenarioParams};

fn road() -> Arc<RoadMap> {
    Arc::new(two_way_road(300.0, 3.5).unwrap())
}

fn config(n: usize) -> SimConfig {
    SimConfig { target_count: n, ..Default::default() }
}

fn car_on_lane(map: &RoadMap, x: f64, speed: f64) -> AgentState {
    let seg = map.lanes.segment(1).unwrap();
    let arc = x;
    let mut s = AgentState::new(
        seg.centerline.point_at(arc),
        0.0,
        speed,
        Route::build(&map.lanes, LaneRef { segment: 1, arc }, &[1]),
    );
    s.progress = 0.0;
    s
}

#[test]
fn empty_world_only_advances_clock() {
    let mut w = World::new(road(), config(0), 1);
    w.step();
    assert_eq!(w.frame(), 1);
    assert!(w.agents().is_empty());
    assert!((w.time() - 0.05).abs() < 1e-15);
}

#[test]
fn lone_agent_advances() {
    let map = road();
    let mut w = World::empty(Arc::clone(&map), config(0), 1);
    let car = AgentProfile::default_for(AgentClass::Car);
    let id = w.add_agent(car, car_on_lane(&map, 50.0, 6.0), Behavior::Gamma, None);
    w.step();
    let a = w.agent(id).unwrap();
    assert!((a.state.position - Vec2::new(50.0 + 6.0 * 0.05, -1.75)).norm() < 1e-9);
}

#[test]
fn traces_are_deterministic() {
    let p = ScenarioParams::default();
    let map = Arc::new(generate_scenario(ScenarioKind::Intersection, &p, 4).unwrap());
    let run = || {
        let mut w = World::new(Arc::clone(&map), config(25), 9);
        let mut log: Vec<(AgentId, u64, u64)> = Vec::new();
        for _ in 0..1000 {
            w.step();
            for a in w.agents() {
                log.push((a.id, a.state.position.x.to_bits(), a.state.position.y.to_bits()));
            }
        }
        log
    };
    assert_eq!(run(), run());
}

#[test]
fn jammed_agent_is_removed_and_counted() {
    let map = road();
    let mut w = World::empty(Arc::clone(&map), SimConfig { t_jam: 30.0, ..config(1) }, 2);
    let car = AgentProfile::default_for(AgentClass::Car);
    // a 1 mm route: the agent reaches its end at once and stays there
    let id = w.add_agent(car, car_on_lane(&map, 100.0, 0.0), Behavior::Ttc, None);
    w.agent_mut(id).unwrap().state.route = Route::from_polyline(
        crate::geom::Polyline::new(alloc::vec![Vec2::new(100.0, -1.75), Vec2::new(100.001, -1.75)]).unwrap(),
    );
    let mut removed_at = None;
    for f in 0..700 {
        w.step();
        if w.agent(id).is_none() {
            removed_at = Some(f);
            break;
        }
    }
    let f = removed_at.expect("removed");
    assert!((f as f64 + 1.0) * 0.05 >= 30.0 - 1e-9 && (f as f64) * 0.05 <= 31.0, "frame {f}");
    let m = w.metrics().trailing(1e9);
    assert_eq!(m.jammed, 1);
    assert_eq!(w.agents().len(), 1, "replacement spawned");
}

#[test]
fn leaving_region_triggers_replacement() {
    let map = road();
    let mut w = World::empty(Arc::clone(&map), config(1), 3);
    let car = AgentProfile::default_for(AgentClass::Car);
    let id = w.add_agent(car, car_on_lane(&map, 299.9, 6.0), Behavior::Gamma, None);
    w.agent_mut(id).unwrap().state.position = Vec2::new(305.0, -1.75);
    w.step();
    assert!(w.agent(id).is_none());
    assert_eq!(w.agents().len(), 1);
    assert_eq!(w.metrics().trailing(1e9).jammed, 0);
}

#[test]
fn spawns_do_not_overlap() {
    let p = ScenarioParams { lanes: 2, ..Default::default() };
    let map = Arc::new(generate_scenario(ScenarioKind::Intersection, &p, 1).unwrap());
    for seed in 0..5 {
        let w = World::new(Arc::clone(&map), config(80), seed);
        assert!(w.agents().len() <= 80);
        if w.spawn_starved() == 0 {
            assert_eq!(w.agents().len(), 80);
        }
        assert!(w.colliding_pairs().is_empty());
        assert!(w.agents().iter().any(|a| a.profile.class == AgentClass::Pedestrian));
    }
}
