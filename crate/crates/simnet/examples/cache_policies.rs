//! The record cache's two eviction policies side by side: TTL-ordered
//! eviction always drops the entry closest to expiry, the simple policy
//! drops a seeded-random one.
//!
//!     cargo run --example cache_policies

use simnet::kernel::rng_stream;
use simnet::{CacheKey, CacheStore, RRType, Rdata, ResourceRecord, SimTime};

fn entry(host: &str, ttl: u32) -> (CacheKey, Vec<ResourceRecord>) {
    let name: simnet::DomainName = format!("{host}.example").parse().unwrap();
    let rr = ResourceRecord::new(name.clone(), ttl, Rdata::A("10.0.0.1".parse().unwrap()));
    (CacheKey::new(name, RRType::A), vec![rr])
}

fn main() {
    let now = SimTime::ZERO;

    println!("TTL policy, capacity 3:");
    let mut ttl_cache = CacheStore::new_ttl(3);
    for (host, ttl) in [("a", 300), ("b", 60), ("c", 900)] {
        let (k, rrs) = entry(host, ttl);
        ttl_cache.put(k, rrs, now);
        println!("  put {host}.example ttl {ttl}");
    }
    let (k, rrs) = entry("d", 120);
    let evicted = ttl_cache.put(k, rrs, now);
    println!("  put d.example ttl 120 -> evicted {}", evicted[0].name);
    println!("  (b.example expires first, so it goes)\n");

    println!("simple policy, capacity 3, two identical runs:");
    for run in 1..=2 {
        let mut cache = CacheStore::new_simple(3, rng_stream("example:cache", 42));
        let mut log = Vec::new();
        for host in ["a", "b", "c", "d", "e", "f"] {
            let (k, rrs) = entry(host, 600);
            log.extend(cache.put(k, rrs, now).into_iter().map(|k| k.name.to_string()));
        }
        println!("  run {run}: evicted {}", log.join(", "));
    }

    println!("\nTTLs decay on read:");
    let mut cache = CacheStore::new_ttl(3);
    let (k, rrs) = entry("decay", 100);
    cache.put(k.clone(), rrs, now);
    for secs in [0, 40, 99, 100] {
        let at = SimTime::from_secs(secs);
        match cache.get(&k, at) {
            Some(rrs) => println!("  t={secs:3}s -> hit, ttl {}", rrs[0].ttl),
            None => println!("  t={secs:3}s -> miss (expiry is exclusive)"),
        }
    }
}
