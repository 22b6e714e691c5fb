//! The privacy side of service discovery: pairings, the meta-service
//! through which paired devices learn each other's private channel, and the
//! run auditor that proves private names never touched the multicast link.
//!
//! Cryptography is out of scope: pairings are pre-established identifiers,
//! and the meta-service match is a plain identifier comparison.

use std::collections::BTreeSet;
use std::net::Ipv4Addr;

use crate::kernel::{CapturedPacket, NodeId, Sim, Transport};
use crate::mdns::MdnsHost;
use crate::name::DomainName;
use crate::time::SimTime;
use crate::wire::{DnsMessage, Rdata, ResourceRecord};

/// Service type under which the meta-service is announced.
pub const META_TYPE: &str = "_privacy._udp";

/// Port the private unicast channel stands on.
pub const META_PORT: u16 = 5354;

/// A pre-established trust relation with one peer. Symmetric by
/// construction: both ends carry the same identifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pairing {
    pub peer: NodeId,
    pub id: String,
    pub established: bool,
}

impl Pairing {
    pub fn new(peer: NodeId, id: String) -> Self {
        Pairing {
            peer,
            id,
            established: true,
        }
    }
}

/// The shared identifier for a host pair, the same on both ends regardless
/// of who derives it.
pub fn pairing_id(a: &str, b: &str) -> String {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    format!("pair:{lo}:{hi}")
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// TXT data of the meta-service: the channel port and a digest over the
/// pairing identifiers. The identifiers themselves are never multicast.
pub fn meta_txt(port: u16, pairings: &[Pairing]) -> Vec<Vec<u8>> {
    let mut ids: Vec<&str> = pairings.iter().map(|p| p.id.as_str()).collect();
    ids.sort_unstable();
    let digest = fnv1a(ids.join(",").as_bytes());
    vec![
        format!("port={port}").into_bytes(),
        format!("pid={digest:016x}").into_bytes(),
    ]
}

/// TXT strings a querier attaches to a meta-service query to prove the
/// pairing.
pub fn pairing_payload(id: &str) -> Vec<Vec<u8>> {
    vec![format!("pairing={id}").into_bytes()]
}

/// The pairing identifier carried in a meta-service query, if any.
pub fn extract_pairing_id(msg: &DnsMessage) -> Option<String> {
    for rr in msg.records() {
        if let Rdata::Txt(strings) = &rr.rdata {
            for s in strings {
                if let Some(id) = s.strip_prefix(b"pairing=".as_slice()) {
                    return String::from_utf8(id.to_vec()).ok();
                }
            }
        }
    }
    None
}

/// TXT data of a successful meta-service reply: where the private channel
/// listens.
pub fn channel_params_txt(addr: Ipv4Addr, port: u16) -> Vec<Vec<u8>> {
    vec![
        format!("addr={addr}").into_bytes(),
        format!("port={port}").into_bytes(),
    ]
}

/// One leak found by the auditor.
#[derive(Debug, Clone)]
pub struct PrivacyViolation {
    pub time: SimTime,
    pub src: String,
    pub owner: DomainName,
    pub detail: String,
}

impl std::fmt::Display for PrivacyViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}ns {} leaked {} ({})",
            self.time, self.src, self.owner, self.detail
        )
    }
}

fn rdata_name(rdata: &Rdata) -> Option<&DomainName> {
    match rdata {
        Rdata::Ns(n) | Rdata::Cname(n) | Rdata::Ptr(n) => Some(n),
        Rdata::Mx { exchange, .. } => Some(exchange),
        Rdata::Srv { target, .. } => Some(target),
        _ => None,
    }
}

/// Scans captured multicast traffic for any mention of a private service
/// name, in questions, record owners or record data. An empty result means
/// privacy held.
pub fn audit_privacy(
    capture: &[CapturedPacket],
    topology_names: &dyn Fn(NodeId) -> String,
    private_names: &BTreeSet<DomainName>,
) -> Vec<PrivacyViolation> {
    let mut violations = Vec::new();
    for cap in capture {
        if cap.pkt.transport != Transport::Multicast {
            continue;
        }
        let src = topology_names(cap.pkt.src);
        let msg = &cap.pkt.payload;
        for q in &msg.questions {
            if private_names.contains(&q.qname) {
                violations.push(PrivacyViolation {
                    time: cap.time,
                    src: src.clone(),
                    owner: q.qname.clone(),
                    detail: "question".to_string(),
                });
            }
        }
        let record = |rr: &ResourceRecord, section: &str, out: &mut Vec<PrivacyViolation>| {
            if private_names.contains(&rr.owner) {
                out.push(PrivacyViolation {
                    time: cap.time,
                    src: src.clone(),
                    owner: rr.owner.clone(),
                    detail: format!("{section} owner, type {}", rr.rtype()),
                });
            } else if let Some(name) = rdata_name(&rr.rdata) {
                if private_names.contains(name) {
                    out.push(PrivacyViolation {
                        time: cap.time,
                        src: src.clone(),
                        owner: name.clone(),
                        detail: format!("{section} rdata of {}", rr.owner),
                    });
                }
            }
        };
        for rr in &msg.answers {
            record(rr, "answer", &mut violations);
        }
        for rr in &msg.authorities {
            record(rr, "authority", &mut violations);
        }
        for rr in &msg.additionals {
            record(rr, "additional", &mut violations);
        }
    }
    violations
}

/// Collects every private service instance name configured on any mDNS
/// host of the simulation.
pub fn private_instance_names(sim: &Sim) -> BTreeSet<DomainName> {
    let mut names = BTreeSet::new();
    for id in sim.topology().node_ids() {
        if let Some(host) = sim.node::<MdnsHost>(id) {
            names.extend(host.private_service_names());
        }
    }
    names
}

/// Runs the auditor against a finished simulation (capture must have been
/// enabled).
pub fn audit_sim(sim: &Sim) -> Vec<PrivacyViolation> {
    let names = private_instance_names(sim);
    let topo = sim.topology();
    audit_privacy(
        sim.capture(),
        &|id| topo.name(id).to_string(),
        &names,
    )
}
