//! Regression check of a full Table-I channel matrix against a stored dump.

use lcx_aperture::channel::composite_channel;
use lcx_aperture::scenario::{sample_scenario_with_seed, ScenarioConfig};
use num_complex::Complex64;

const FIXTURE: &str = include_str!("fixtures/channel_seed42.csv");

#[test]
fn default_scenario_seed_42_matches_fixture() {
    let cfg = ScenarioConfig::default();
    let channel = composite_channel(&sample_scenario_with_seed(&cfg, 42).unwrap()).unwrap();
    let mut lines = FIXTURE.lines();
    assert_eq!(lines.next(), Some("k,n,re,im"));
    let mut rows = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let k: usize = f[0].parse().unwrap();
        let n: usize = f[1].parse().unwrap();
        let stored = Complex64::new(f[2].parse().unwrap(), f[3].parse().unwrap());
        let now = channel.get(k - 1, n - 1);
        assert!(
            (now - stored).norm() <= 1e-12 * stored.norm(),
            "entry ({k},{n}): {now} vs {stored}"
        );
        rows += 1;
    }
    assert_eq!(rows, cfg.num_slots * cfg.num_users);
}

#[test]
fn dump_round_trips_through_text() {
    let cfg = ScenarioConfig::default();
    let channel = composite_channel(&sample_scenario_with_seed(&cfg, 42).unwrap()).unwrap();
    assert_eq!(channel.to_csv_string(), FIXTURE);
}
