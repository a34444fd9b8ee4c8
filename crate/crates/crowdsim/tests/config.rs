use std::path::PathBuf;

use crowdsim::config::{ConfigError, GeneratedScenario, Overrides, RunConfig, ScenarioSource};

fn write(text: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, text).unwrap();
    (dir, path)
}

#[test]
fn defaults_without_file_or_flags() {
    let c = RunConfig::resolve(None, &Overrides::default()).unwrap();
    assert_eq!(c, RunConfig::default());
    assert_eq!(c.frames(), 1200);
}

#[test]
fn flags_beat_file_beat_defaults() {
    let (_d, path) = write(r#"{"seed": 5, "duration": 30, "agents": 12, "model": "ttc", "driver": "rollout"}"#);
    let file_only = RunConfig::resolve(Some(&path), &Overrides::default()).unwrap();
    assert_eq!((file_only.seed, file_only.duration, file_only.agents), (5, 30.0, 12));
    assert_eq!(file_only.model, "ttc");
    assert_eq!(file_only.dt, RunConfig::default().dt);

    let flags = Overrides {
        seed: Some(9),
        agents: Some(3),
        driver: Some("pomdp".into()),
        out: Some("elsewhere".into()),
        ..Overrides::default()
    };
    let c = RunConfig::resolve(Some(&path), &flags).unwrap();
    assert_eq!((c.seed, c.duration, c.agents), (9, 30.0, 3));
    assert_eq!(c.driver, "pomdp");
    assert_eq!(c.model, "ttc");
    assert_eq!(c.out, PathBuf::from("elsewhere"));
}

#[test]
fn scenario_flag_keeps_file_geometry() {
    let (_d, path) = write(r#"{"scenario": {"kind": "intersection", "lanes": 3, "length": 200}}"#);
    let c = RunConfig::resolve(Some(&path), &Overrides { scenario: Some("highway".into()), ..Overrides::default() })
        .unwrap();
    match c.scenario {
        ScenarioSource::Generated(GeneratedScenario { ref kind, lanes, length, .. }) => {
            assert_eq!((kind.as_str(), lanes, length), ("highway", 3, 200.0));
        }
        ref s => panic!("{s:?}"),
    }
    let c =
        RunConfig::resolve(Some(&path), &Overrides { scenario: Some("maps/net.json".into()), ..Overrides::default() })
            .unwrap();
    assert_eq!(c.scenario, ScenarioSource::File { network: "maps/net.json".into() });
}

#[test]
fn network_file_scenarios_parse() {
    let c = RunConfig::from_json(r#"{"scenario": {"network": "a.json"}}"#).unwrap();
    assert_eq!(c.scenario, ScenarioSource::File { network: "a.json".into() });
}

#[test]
fn bad_values_are_rejected() {
    for text in [
        r#"{"agents": 0}"#,
        r#"{"duration": -1}"#,
        r#"{"model": "orca"}"#,
        r#"{"driver": "human"}"#,
        r#"{"scenario": {"kind": "maze"}}"#,
        r#"{"class_mix": {"tram": 1.0}}"#,
        r#"{"profiles": {"car": {"max_speed": -2}}}"#,
        r#"{"gamma": {"disc_model": "square"}}"#,
    ] {
        let c = RunConfig::from_json(text).unwrap();
        assert!(matches!(c.validate(), Err(ConfigError::Invalid(_))), "{text}");
    }
    assert!(matches!(RunConfig::from_json(r#"{"agnets": 3}"#), Err(ConfigError::Parse(_))));
    assert!(matches!(RunConfig::from_json("[1, 2]"), Err(ConfigError::Parse(_))));
}

#[test]
fn missing_file_is_an_io_error() {
    let r = RunConfig::resolve(Some("/nonexistent/run.json".as_ref()), &Overrides::default());
    assert!(matches!(r, Err(ConfigError::Io { .. })));
}

#[test]
fn class_mix_and_profiles_reach_the_simulation() {
    let c =
        RunConfig::from_json(r#"{"class_mix": {"car": 2.0, "bicycle": 1.0}, "profiles": {"car": {"max_speed": 4.0}}}"#)
            .unwrap();
    let sim = c.sim_config().unwrap();
    assert_eq!(sim.class_mix.iter().filter(|w| **w > 0.0).count(), 2);
    assert_eq!(sim.profiles.get(crowdsim_core::agents::AgentClass::Car).max_speed, 4.0);
}
