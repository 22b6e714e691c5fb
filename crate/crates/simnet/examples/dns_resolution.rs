//! A three-level DNS hierarchy resolved end to end: the caching server
//! walks root -> registry -> campus for a cold name, then answers the
//! second lookup from cache.
//!
//!     cargo run --example dns_resolution

use std::path::Path;
use std::time::Duration;

use simnet::{
    CacheStore, DnsClient, DnsServer, RRType, RootHints, SimBuilder, SimTime, ZoneConfig,
};

fn zone(rel: &str) -> ZoneConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(rel);
    ZoneConfig::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn main() {
    let mut b = SimBuilder::new(4);
    b.set_default_delay(Duration::from_millis(10));
    b.enable_trace();
    b.enable_assertions();

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

    let mut client = DnsClient::new("10.0.1.1".parse().unwrap());
    let qname: simnet::DomainName = "www.uni-konstanz.de".parse().unwrap();
    client.resolve_at(SimTime::from_secs(1), qname.clone(), RRType::A);
    client.resolve_at(SimTime::from_secs(30), qname, RRType::A);
    let stub = b.add_node("stub", "10.0.9.1".parse().unwrap(), Box::new(client));

    let mut sim = b.build();
    sim.run_until(SimTime::from_secs(60)).unwrap();

    println!("event trace:");
    for line in sim.trace() {
        println!("  {line}");
    }

    println!("\noutcomes:");
    for o in sim.node::<DnsClient>(stub).unwrap().outcomes() {
        println!(
            "  {} {} -> {:?} in {:?}",
            o.qname,
            o.qtype,
            o.rcode.unwrap(),
            o.rtt
        );
        for rr in &o.answers {
            println!("    {} {} {:?}", rr.owner, rr.ttl, rr.rdata);
        }
    }
    let s = sim.stats(resolver);
    println!(
        "\nresolver: {} hits, {} misses, {} queries sent upstream",
        s.cache_hits, s.cache_misses, s.queries_sent
    );
}
