use std::process::Command;
use std::sync::Arc;

use crowdsim::bench::{self, DriveSetup};
use crowdsim::config::RunConfig;
use crowdsim::runner::{self, RunError};
use crowdsim_core::planner::{DriverKind, SearchConfig};
use crowdsim_core::roadnet::{generate_scenario, ScenarioKind, ScenarioParams};
use crowdsim_core::sim::SimConfig;

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crowdsim"))
}

fn config(text: &str) -> RunConfig {
    let c = RunConfig::from_json(text).unwrap();
    c.validate().unwrap();
    c
}

fn simulate(c: &RunConfig) -> (Vec<u8>, Vec<u8>) {
    let (mut trace, mut metrics) = (Vec::new(), Vec::new());
    runner::simulate(c, &mut trace, &mut metrics).unwrap();
    (trace, metrics)
}

#[test]
fn highway_run_writes_one_line_per_frame() {
    let c = config(r#"{"scenario": {"kind": "highway"}, "agents": 20, "duration": 10}"#);
    let (trace, metrics) = simulate(&c);
    let lines: Vec<&str> = std::str::from_utf8(&trace).unwrap().lines().collect();
    assert_eq!(lines.len(), 200);
    for (i, l) in lines.iter().enumerate() {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        assert_eq!(v["frame"], (i + 1) as u64);
        assert!(v["agents"].as_array().unwrap().len() <= 20);
        assert!(v.get("planner").is_none());
    }
    let mut r = csv::Reader::from_reader(metrics.as_slice());
    assert_eq!(r.headers().unwrap(), vec!["time", "class", "avg_speed", "congestion_factor", "frame_ms"]);
    let rows: Vec<(f64, String, f64, f64, f64)> = r.deserialize().map(Result::unwrap).collect();
    let mut times: Vec<f64> = rows.iter().map(|r| r.0).collect();
    times.dedup();
    assert_eq!(times.len(), 10);
    assert!(rows.iter().all(|r| r.2 >= 0.0 && (0.0..=1.0).contains(&r.3)));
}

#[test]
fn same_seed_same_trace() {
    let c = config(r#"{"scenario": {"kind": "roundabout"}, "agents": 25, "duration": 5, "seed": 4}"#);
    assert_eq!(simulate(&c).0, simulate(&c).0);
    let other = RunConfig { seed: 5, ..c.clone() };
    assert_ne!(simulate(&c).0, simulate(&other).0);
}

#[test]
fn driver_runs_log_planner_records() {
    let c = config(r#"{"agents": 10, "duration": 2, "driver": "gamma", "planner": {"num_scenarios": 5}}"#);
    let (trace, _) = simulate(&c);
    let lines: Vec<serde_json::Value> =
        std::str::from_utf8(&trace).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len() as u64, c.frames());
    let records: Vec<&serde_json::Value> = lines.iter().filter_map(|l| l.get("planner")).collect();
    assert!(!records.is_empty());
    let ego = lines[0]["agents"].as_array().unwrap().iter().filter(|a| a["behavior"] == "ego").count();
    assert_eq!(ego, 1);
    for r in records {
        assert!(["ACC", "MAINTAIN", "DEC"].contains(&r["action"].as_str().unwrap()), "{r}");
    }
}

#[test]
fn config_errors_exit_with_2() {
    let out = cli().args(["run", "--scenario", "bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
    let out = cli().args(["run", "--config", "/nonexistent.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(RunError::Runtime("x".into()).exit_code(), 3);
}

#[test]
fn cli_run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = cli()
            .args(["run", "--scenario", "intersection", "--agents", "15", "--duration", "3", "--seed", "2", "--out"])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out.join("trace.jsonl")).unwrap()
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    assert_eq!(a.iter().filter(|&&b| b == b'\n').count(), 60);
}

#[test]
fn gen_scenario_writes_a_loadable_network() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ring.json");
    let status = cli()
        .args(["gen-scenario", "--kind", "roundabout", "--radius", "40", "--seed", "2", "--out"])
        .arg(&path)
        .status()
        .unwrap();
    assert!(status.success());
    let map = crowdsim::netfile::load(&path).unwrap();
    let want =
        generate_scenario(ScenarioKind::Roundabout, &ScenarioParams { radius: 40.0, ..ScenarioParams::default() }, 2)
            .unwrap();
    assert_eq!(crowdsim::netfile::to_string(&map), crowdsim::netfile::to_string(&want));
}

#[test]
fn harness_row_counts_match_request() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("scaling.csv");
    let status = cli()
        .args(["bench-scaling", "--counts", "10,20", "--duration", "0.5", "--warmup", "0.5", "--repeats", "1"])
        .args(["--scenario", "highway", "--out"])
        .arg(&csv_path)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(csv::Reader::from_path(&csv_path).unwrap().records().count(), 2);

    let out = cli()
        .args(["compare-drivers", "--seeds", "2", "--drivers", "gamma,rollout", "--duration", "1", "--warmup", "0.5"])
        .args(["--agents", "5"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    let rows: Vec<(u64, String)> = r
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].to_string())
        })
        .collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0], (0, "gamma".into()));
    assert_eq!(rows[3], (1, "rollout".into()));
}

#[test]
fn empty_road_every_driver_reaches_top_speed() {
    let map = Arc::new(generate_scenario(ScenarioKind::Highway, &ScenarioParams::default(), 0).unwrap());
    let search = SearchConfig { num_scenarios: 20, ..SearchConfig::default() };
    let setup = DriveSetup {
        map,
        sim: SimConfig { target_count: 0, ..SimConfig::default() },
        search,
        warmup_frames: 0,
        duration: 10.0,
    };
    for row in bench::compare_drivers(&setup, &[0, 1], &DriverKind::ALL) {
        assert_eq!(row.collision_per_step, 0.0, "{row:?}");
        assert!(row.avg_speed > 0.5 * search.v_max, "{row:?}");
    }
    // speed after the run, not the average including the ramp-up
    for kind in DriverKind::ALL {
        let mut w = crowdsim_core::sim::World::new(setup.map.clone(), setup.sim.clone(), 0);
        let mut d = crowdsim_core::planner::EgoDriver::spawn(&mut w, kind, search, setup.map.spawn_segments[0], 0);
        let mut last = None;
        for _ in 0..30 {
            last = Some(d.step(&mut w));
        }
        let s = last.unwrap();
        assert!((s.speed - search.v_max).abs() < 0.3, "{kind:?} {}", s.speed);
    }
}
