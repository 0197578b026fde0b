#![allow(dead_code)]

use std::path::PathBuf;

use backhaul_core::io::parse_scenario;
use backhaul_core::model::Scenario;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn fixture(name: &str) -> Scenario {
    let bytes = std::fs::read(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    parse_scenario(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Fixtures the planner must solve.
pub const FEASIBLE: [&str; 6] = [
    "single_link.json",
    "single_link_degraded_3db.json",
    "zero_demand.json",
    "relay_chain_fd.json",
    "relay_chain_si_0db.json",
    "two_node_fd.json",
];

/// Closed-form minimum power of a noise-limited link.
pub fn x_star(noise: f64, rate: f64, bandwidth: f64, lambda: f64) -> f64 {
    noise * (2f64.powf(rate / bandwidth) - 1.0) / lambda
}
