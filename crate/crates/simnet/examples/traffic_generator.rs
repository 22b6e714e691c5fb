//! A stub client replaying a query list against the campus hierarchy:
//! every `period * (1 +/- jitter)` seconds it draws a random line and
//! resolves it. Prints the outcome mix and cache effectiveness.
//!
//!     cargo run --example traffic_generator

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use simnet::{
    CacheStore, DnsClient, DnsServer, RootHints, SimBuilder, SimTime, TraffGenConfig, ZoneConfig,
};

fn zone(rel: &str) -> ZoneConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(rel);
    ZoneConfig::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn main() {
    let mut b = SimBuilder::new(99);
    b.set_default_delay(Duration::from_millis(5));

    b.add_node(
        "root-a",
        "10.0.0.1".parse().unwrap(),
        Box::new(DnsServer::auth(zone("zones/root.zone"))),
    );
    b.add_node(
        "de-ns",
        "10.0.0.2".parse().unwrap(),
        Box::new(DnsServer::auth(zone("zones/de.zone"))),
    );
    b.add_node(
        "campus-ns",
        "134.34.3.3".parse().unwrap(),
        Box::new(DnsServer::auth(zone("zones/uni-konstanz.de.sim.zone"))),
    );
    let mut hints = RootHints::new();
    hints.push("a.root-net.sim".parse().unwrap(), "10.0.0.1".parse().unwrap());
    let resolver = b.add_node(
        "resolver",
        "10.0.1.1".parse().unwrap(),
        Box::new(DnsServer::caching(CacheStore::new_ttl(512), hints)),
    );

    let queries_file = Path::new(env!("CARGO_MANIFEST_DIR")).join("queries/campus.txt");
    let queries =
        TraffGenConfig::parse_queries(&std::fs::read_to_string(queries_file).unwrap()).unwrap();
    let client = DnsClient::new("10.0.1.1".parse().unwrap())
        .with_traffgen(TraffGenConfig::new(queries, 5.0, 0.2));
    let stub = b.add_node("stub", "10.0.9.1".parse().unwrap(), Box::new(client));

    let mut sim = b.build();
    sim.run_until(SimTime::from_secs(600)).unwrap();

    let outcomes = sim.node::<DnsClient>(stub).unwrap().outcomes();
    let mut per_name: BTreeMap<String, u32> = BTreeMap::new();
    for o in outcomes {
        *per_name.entry(format!("{} {}", o.qname, o.qtype)).or_default() += 1;
    }
    println!("{} resolutions over 600 s:", outcomes.len());
    for (what, count) in per_name {
        println!("  {count:4}  {what}");
    }
    let s = sim.stats(resolver);
    println!(
        "\nresolver: {} cache hits / {} misses ({} upstream queries)",
        s.cache_hits, s.cache_misses, s.queries_sent
    );
    println!(
        "stub traffic: {} packets, {} bytes received",
        sim.stats(stub).total_pkts(),
        sim.stats(stub).total_bytes()
    );
}
