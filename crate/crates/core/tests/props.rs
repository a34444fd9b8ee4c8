mod support;

use std::collections::BTreeSet;
use std::sync::Arc;

use crowdsim_core::agents::{AgentClass, AgentProfile, AgentState};
use crowdsim_core::belief::{init_belief, MotionContext, DEFAULT_SIGMA};
use crowdsim_core::gamma::{
    gamma_step, geometric_halfplanes, kinematic_set, preferred_velocity, GammaParams, Neighbor,
};
use crowdsim_core::geom::{
    solve_or_fallback, solve_velocity_program, solve_velocity_program_seeded, ConvexPolygon, HalfPlane, Polyline, Vec2,
};
use crowdsim_core::roadnet::{
    generate_scenario, route_candidates, two_way_road, LaneRef, Route, ScenarioKind, ScenarioParams,
};
use crowdsim_core::sim::{Behavior, SimConfig, World};
use crowdsim_core::ttc::{advance_on_route, ttc_step, TtcParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::grid_oracle::instances::random_instance;

fn kind() -> impl Strategy<Value = ScenarioKind> {
    prop_oneof![Just(ScenarioKind::Highway), Just(ScenarioKind::Roundabout), Just(ScenarioKind::Intersection)]
}

fn line(a: Vec2, b: Vec2) -> Route {
    Route::from_polyline(Polyline::new(vec![a, b]).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lp_result_is_feasible(seed in 0u64..1_000_000) {
        let inst = random_instance(seed);
        if let Ok(v) = solve_velocity_program(&inst.kin, &inst.planes, inst.target) {
            for p in &inst.planes {
                prop_assert!(p.normal().dot(v) >= p.offset() - 1e-7);
            }
            prop_assert!(inst.kin.contains(v, 1e-7));
        }
        prop_assert!(!inst.feasible_by_construction || solve_velocity_program(&inst.kin, &inst.planes, inst.target).is_ok());
    }

    #[test]
    fn feasible_preference_is_returned(seed in 0u64..1_000_000, n in 0usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kin = ConvexPolygon::regular(Vec2::ZERO, rng.random_range(1.0..10.0), rng.random_range(3..16), rng.random_range(0.0..1.0)).unwrap();
        let w: Vec<f64> = kin.vertices().iter().map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = w.iter().sum();
        let target = kin.vertices().iter().zip(&w).fold(Vec2::ZERO, |acc, (v, w)| acc + *v * (*w / total));
        let planes: Vec<HalfPlane> = (0..n)
            .map(|_| {
                let normal = Vec2::from_angle(rng.random_range(0.0..std::f64::consts::TAU));
                HalfPlane::new(normal, normal.dot(target) - rng.random_range(0.0..2.0)).unwrap()
            })
            .collect();
        let v = solve_velocity_program(&kin, &planes, target).unwrap();
        prop_assert!((v - target).norm() <= 1e-9);
    }

    #[test]
    fn lp_is_bitwise_deterministic(seed in 0u64..1_000_000, lp_seed in any::<u64>()) {
        let inst = random_instance(seed);
        let a = solve_velocity_program_seeded(&inst.kin, &inst.planes, inst.target, lp_seed);
        let b = solve_velocity_program_seeded(&inst.kin, &inst.planes, inst.target, lp_seed);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert!(a.x.to_bits() == b.x.to_bits() && a.y.to_bits() == b.y.to_bits()),
            (a, b) => prop_assert_eq!(a.is_ok(), b.is_ok()),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_networks_are_connected_and_covered(kind in kind(), seed in 0u64..1000, lanes in 2usize..=5) {
        let map = generate_scenario(kind, &ScenarioParams { lanes, ..ScenarioParams::default() }, seed).unwrap();
        let mut seen: BTreeSet<u32> = map.spawn_segments.iter().copied().collect();
        let mut stack: Vec<u32> = seen.iter().copied().collect();
        while let Some(id) = stack.pop() {
            for &s in &map.lanes.segment(id).unwrap().successors {
                if seen.insert(s) {
                    stack.push(s);
                }
            }
        }
        for seg in map.lanes.segments() {
            prop_assert!(seen.contains(&seg.id), "segment {} unreachable", seg.id);
            let len = seg.centerline.length();
            for k in 0..=20 {
                let p = seg.centerline.point_at(len * k as f64 / 20.0);
                prop_assert!(map.occupancy.contains(p), "segment {} point {:?} outside occupancy", seg.id, p);
            }
        }
    }

    #[test]
    fn route_candidates_are_continuous(kind in kind(), seed in 0u64..1000, pick in any::<prop::sample::Index>()) {
        let map = generate_scenario(kind, &ScenarioParams::default(), seed).unwrap();
        let start = map.spawn_segments[pick.index(map.spawn_segments.len())];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let routes = route_candidates(&map.lanes, LaneRef { segment: start, arc: 0.0 }, 150.0, 8, &mut rng);
        prop_assert!(!routes.is_empty());
        for r in &routes {
            for pair in r.segments().windows(2) {
                let a = &map.lanes.segment(pair[0]).unwrap().centerline;
                let b = &map.lanes.segment(pair[1]).unwrap().centerline;
                let end = a.point_at(a.length());
                prop_assert!(end.distance(b.point_at(0.0)) < 1e-6);
                prop_assert!(r.polyline().project(end).distance < 1e-6);
            }
        }
    }

    #[test]
    fn point_symmetric_pair_avoids_reciprocally(
        gap in 6.0f64..20.0,
        offset in 0.0f64..1.5,
        speed in 0.5f64..4.0,
        class in prop_oneof![Just(AgentClass::Car), Just(AgentClass::Pedestrian), Just(AgentClass::Bicycle)],
    ) {
        let prof = AgentProfile::default_for(class);
        let params = GammaParams::default();
        let a = AgentState::new(Vec2::new(-gap, offset), 0.0, speed, line(Vec2::new(-gap, offset), Vec2::new(200.0, offset)));
        let b = AgentState::new(Vec2::new(gap, -offset), std::f64::consts::PI, speed, line(Vec2::new(gap, -offset), Vec2::new(-200.0, -offset)));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let solve = |me: &AgentState, other: &AgentState, rng: &mut ChaCha8Rng| {
            let planes = geometric_halfplanes(me, &prof, &[Neighbor::of(other, &prof)], &params, rng);
            solve_or_fallback(&kinematic_set(me, &prof, params.dt), &planes, preferred_velocity(me, &prof, &params)).0
        };
        let da = solve(&a, &b, &mut rng) - a.velocity;
        let db = solve(&b, &a, &mut rng) - b.velocity;
        prop_assert!((da.norm() - db.norm()).abs() < 1e-6, "{:?} {:?}", da, db);
        // point symmetry: B's change is A's rotated by pi
        prop_assert!((da + db).norm() < 1e-6, "{:?} {:?}", da, db);
        prop_assert!(da.y.abs() < 1e-9 || da.y.signum() != db.y.signum());
    }

    #[test]
    fn gamma_velocity_satisfies_every_plane(seed in any::<u64>(), n in 0usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = two_way_road(300.0, 3.5).unwrap();
        let params = GammaParams::default();
        let classes = [AgentClass::Car, AgentClass::Bicycle, AgentClass::Motorcycle, AgentClass::Bus];
        let prof = AgentProfile::default_for(classes[rng.random_range(0..classes.len())]);
        let y = -1.75 + rng.random_range(-0.5..0.5);
        let me = AgentState::new(Vec2::new(100.0, y), rng.random_range(-0.2..0.2), rng.random_range(0.0..5.0), line(Vec2::new(100.0, -1.75), Vec2::new(290.0, -1.75)));
        let neighbors: Vec<Neighbor> = (0..n)
            .map(|_| {
                let p = Vec2::new(rng.random_range(85.0..130.0), rng.random_range(-3.5..3.5));
                let h = if rng.random_bool(0.5) { 0.0 } else { std::f64::consts::PI };
                let s = AgentState::new(p, h, rng.random_range(0.0..5.0), line(p, p + Vec2::from_angle(h)));
                Neighbor::of(&s, &AgentProfile::default_for(classes[rng.random_range(0..classes.len())]))
            })
            .collect();
        let out = gamma_step(&map, &me, &prof, &neighbors, None, &params, &mut rng);
        if !out.fallback {
            for p in &out.planes {
                prop_assert!(p.violation(out.velocity) <= 1e-7, "{:?} {:?}", p, out.velocity);
            }
            prop_assert!(kinematic_set(&me, &prof, params.dt).contains(out.velocity, 1e-7));
        }
    }

    #[test]
    fn ttc_speed_is_bounded_and_stays_on_route(
        seed in any::<u64>(),
        n in 0usize..6,
        speed in 0.0f64..6.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prof = AgentProfile::default_for(AgentClass::Car);
        let route = Route::from_polyline(
            Polyline::new(vec![Vec2::ZERO, Vec2::new(40.0, 0.0), Vec2::new(70.0, 25.0), Vec2::new(70.0, 120.0)]).unwrap(),
        );
        let mut me = AgentState::new(Vec2::ZERO, 0.0, speed, route);
        let params = TtcParams::default();
        for _ in 0..40 {
            let others: Vec<Neighbor> = (0..n)
                .map(|_| {
                    let p = Vec2::new(rng.random_range(-20.0..90.0), rng.random_range(-20.0..60.0));
                    let s = AgentState::new(p, rng.random_range(-3.2..3.2), rng.random_range(0.0..5.0), line(p, p + Vec2::new(1.0, 0.0)));
                    Neighbor::of(&s, &prof)
                })
                .collect();
            let v = ttc_step(&me, &prof, &others, &params);
            prop_assert!((0.0..=prof.pref_speed()).contains(&v), "{}", v);
            me = advance_on_route(&me, v, 0.05);
            prop_assert!(me.route.polyline().project(me.position).distance < 1e-6);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn spawning_respects_target_and_footprints(
        kind in kind(),
        seed in 0u64..1000,
        target in 1usize..60,
        ttc in any::<bool>(),
    ) {
        let map = Arc::new(generate_scenario(kind, &ScenarioParams::default(), seed).unwrap());
        let model = if ttc { Behavior::Ttc } else { Behavior::Gamma };
        let mut w = World::new(map, SimConfig { target_count: target, model, ..SimConfig::default() }, seed);
        let mut ids: BTreeSet<u32> = BTreeSet::new();
        for _ in 0..200 {
            let starved = w.spawn_starved();
            let frame = w.frame();
            if frame > 0 {
                w.step();
            }
            prop_assert!(w.agents().len() <= target);
            if w.spawn_starved() == starved && frame > 0 {
                prop_assert_eq!(w.agents().len(), target);
            }
            let pairs = w.colliding_pairs();
            for a in w.agents().iter().filter(|a| !ids.contains(&a.id)) {
                prop_assert!(!pairs.iter().any(|&(x, y)| x == a.id || y == a.id), "agent {} spawned overlapping", a.id);
            }
            ids = w.agents().iter().map(|a| a.id).collect();
        }
    }

    #[test]
    fn traces_are_a_function_of_seed_and_config(kind in kind(), seed in 0u64..1000) {
        let map = Arc::new(generate_scenario(kind, &ScenarioParams::default(), seed).unwrap());
        let run = || {
            let mut w = World::new(map.clone(), SimConfig { target_count: 25, ..SimConfig::default() }, seed);
            let mut out = Vec::new();
            for _ in 0..100 {
                w.step();
                out.extend(w.agents().iter().map(|a| (a.id, a.state.position.x.to_bits(), a.state.position.y.to_bits())));
            }
            out
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn posterior_stays_normalized(seed in any::<u64>(), steps in 1usize..30, jitter in 0.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = generate_scenario(ScenarioKind::Intersection, &ScenarioParams::default(), 0).unwrap();
        let seg = map.lanes.segment(map.spawn_segments[rng.random_range(0..map.spawn_segments.len())]).unwrap();
        let arc = seg.centerline.length() - 8.0;
        let prof = AgentProfile::default_for(AgentClass::Car);
        let gamma = GammaParams::default();
        let mut state = AgentState::new(
            seg.centerline.point_at(arc),
            seg.centerline.tangent_at(arc).angle(),
            3.0,
            Route::from_polyline(seg.centerline.clone()),
        );
        let mut belief = init_belief(&state, &map, 4, &mut rng).unwrap();
        let ctx = MotionContext { map: &map, profile: &prof, neighbors: &[], gamma: &gamma };
        for _ in 0..steps {
            let observed = state.position + state.velocity / 3.0
                + Vec2::new(rng.random_range(-jitter..=jitter), rng.random_range(-jitter..=jitter));
            belief = belief.update(&state, observed, &ctx, 1.0 / 3.0, DEFAULT_SIGMA);
            let sum: f64 = belief.probs().iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-9, "{}", sum);
            prop_assert!(belief.probs().iter().all(|p| *p >= 0.0));
            state.position = observed;
        }
    }
}
