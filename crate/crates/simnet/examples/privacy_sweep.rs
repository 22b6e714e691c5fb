//! The headline experiment in-process: ten hosts, rising share of private
//! services, falling multicast load. Equivalent to
//! `simnet sweep scenarios/privacy_ratio.ini --vary private_service_ratio ...`.
//!
//!     cargo run --example privacy_sweep

use std::path::Path;

use simnet::experiment::run_scenario;
use simnet::scenario::ScenarioConfig;

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/privacy_ratio.ini");
    let cfg = ScenarioConfig::load(&path).unwrap();
    println!(
        "{} hosts, {:.0} s simulated, seed {}\n",
        cfg.mdns.num_resolvers, cfg.duration, cfg.seed
    );
    println!("ratio   mcast bytes   ucast bytes   total    vs baseline");

    let mut baseline = None;
    for ratio in ["0.0", "0.25", "0.5", "0.75", "1.0"] {
        let mut point = cfg.clone();
        point.set_param("private_service_ratio", ratio).unwrap();
        let result = run_scenario(&point, cfg.seed, false).unwrap();
        assert!(result.violations.is_empty(), "private names stayed off multicast");
        let total = result.aggregate.total_bytes();
        let base = *baseline.get_or_insert(total);
        println!(
            "{ratio:>5}   {:>11}   {:>11}   {:>6}   {:>6.1}%",
            result.aggregate.mcast_bytes,
            result.aggregate.ucast_bytes,
            total,
            100.0 * total as f64 / base as f64
        );
    }
}
