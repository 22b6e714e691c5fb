//! Private service discovery between paired hosts: the hidden service
//! never touches multicast, yet the friend learns it over the private
//! channel. A third, unpaired host sees nothing.
//!
//!     cargo run --example private_services

use std::time::Duration;

use simnet::kernel::NodeId;
use simnet::mdns::{MdnsHost, MdnsParams, ServiceInstance};
use simnet::privacy::{audit_sim, pairing_id, Pairing};
use simnet::{SimBuilder, SimTime};

fn main() {
    let mut b = SimBuilder::new(33);
    b.set_default_delay(Duration::from_millis(1));
    b.enable_capture();
    b.enable_assertions();
    let lan = b.new_group();

    // alice and bob are friends; carol is a stranger on the same link.
    let topology = [
        ("alice", Some(("bob", 1usize))),
        ("bob", Some(("alice", 0usize))),
        ("carol", None),
    ];
    let mut ids = Vec::new();
    for (i, (who, friend)) in topology.iter().enumerate() {
        let mut host = MdnsHost::new(lan, MdnsParams::default());
        host.add_service(ServiceInstance::new(&format!("{who} files"), "_smb._tcp", 445).private());
        host.add_service(ServiceInstance::new(&format!("{who} web"), "_http._tcp", 80));
        if let Some((peer, peer_idx)) = friend {
            host.add_pairing(Pairing::new(
                NodeId::from_index(*peer_idx),
                pairing_id(who, peer),
            ));
        }
        let id = b.add_node(
            *who,
            format!("10.1.0.{}", i + 1).parse().unwrap(),
            Box::new(host),
        );
        b.join_group(lan, id);
        ids.push(id);
    }

    let mut sim = b.build();
    sim.run_until(SimTime::from_secs(30)).unwrap();
    let now = sim.now();

    for (i, (who, _)) in topology.iter().enumerate() {
        let host = sim.node::<MdnsHost>(ids[i]).unwrap();
        println!("{who}'s private cache:");
        let keys = host.private_cache().keys(now);
        if keys.is_empty() {
            println!("  (empty)");
        }
        for key in keys {
            println!("  {} {}", key.name, key.rtype);
        }
        let public_smb = host
            .cache()
            .keys(now)
            .iter()
            .filter(|k| k.name.to_string().contains("files"))
            .count();
        println!("  file shares visible via multicast: {public_smb}\n");
    }

    let violations = audit_sim(&sim);
    println!("multicast audit over {} captured packets:", sim.capture().len());
    if violations.is_empty() {
        println!("  no private name ever left over multicast");
    }
    for v in &violations {
        println!("  LEAK: {v}");
    }
}
