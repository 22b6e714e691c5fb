//! Service discovery on a multicast link: three hosts announce services,
//! a fourth asks for printers and reads the answers out of its cache.
//!
//!     cargo run --example mdns_discovery

use std::time::Duration;

use simnet::mdns::{MdnsHost, MdnsParams, ServiceInstance};
use simnet::{RRType, Rdata, SimBuilder, SimTime};

fn main() {
    let mut b = SimBuilder::new(21);
    b.set_default_delay(Duration::from_millis(1));
    b.enable_assertions();
    let lan = b.new_group();

    let services: [&[(&str, &str, u16)]; 4] = [
        &[("front desk", "_ipp._tcp", 631), ("intranet", "_http._tcp", 80)],
        &[("lab printer", "_ipp._tcp", 631)],
        &[("build box", "_ssh._tcp", 22)],
        &[],
    ];
    let mut ids = Vec::new();
    for (i, list) in services.iter().enumerate() {
        let mut host = MdnsHost::new(lan, MdnsParams::default());
        for (instance, stype, port) in *list {
            host.add_service(ServiceInstance::new(instance, stype, *port));
        }
        if list.is_empty() {
            // The service-less host goes looking for printers instead.
            host.schedule_query(
                SimTime::from_secs(5),
                "_ipp._tcp.local".parse().unwrap(),
                RRType::Ptr,
            );
        }
        let id = b.add_node(
            format!("host{i}"),
            format!("10.1.0.{}", i + 1).parse().unwrap(),
            Box::new(host),
        );
        b.join_group(lan, id);
        ids.push(id);
    }

    let mut sim = b.build();
    sim.run_until(SimTime::from_secs(10)).unwrap();

    let seeker = sim.node::<MdnsHost>(ids[3]).unwrap();
    let now = sim.now();
    println!("host3's view of the network after 10 s:");
    for key in seeker.cache().keys(now) {
        println!("  {} {}", key.name, key.rtype);
    }

    let ptr_key = simnet::CacheKey::new("_ipp._tcp.local".parse().unwrap(), RRType::Ptr);
    if let Some(entry) = seeker.cache().peek(&ptr_key, now) {
        println!("\nprinters found:");
        for rr in &entry.records {
            if let Rdata::Ptr(instance) = &rr.rdata {
                println!("  {instance}");
            }
        }
    }

    println!("\nper-host traffic:");
    for (i, &id) in ids.iter().enumerate() {
        let s = sim.stats(id);
        println!(
            "  host{i}: {:5} bytes received, {} queries, {} responses, {} suppressed",
            s.total_bytes(),
            s.queries_sent,
            s.responses_sent,
            s.suppressed_queries + s.suppressed_responses
        );
    }
}
