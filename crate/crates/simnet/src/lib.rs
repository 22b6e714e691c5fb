//! Deterministic discrete-event simulator for DNS and mDNS/DNS-SD networks.
//!
//! The crate models a small internet: authoritative, caching and echo DNS
//! servers, stub clients with a file-driven traffic generator, and multicast
//! DNS responders that probe, announce and answer service-discovery queries.
//! Everything runs on a single-threaded event kernel with named, seedable
//! RNG streams, so a run is reproducible byte for byte from its seed.
//!
//! Layers, bottom to top:
//!
//! ```text
//!   name, wire          RFC 1035 message model, codec, name compression
//!   zone                BIND-style zone files (subset)
//!   cache               TTL-aware record cache, two eviction policies
//!   time, kernel        simulation clock, per-node event sets, topology
//!   server, client      DNS node behaviours (auth / caching / echo / stub)
//!   mdns                multicast DNS responder with DNS-SD records
//!   privacy             private service announcement over paired unicast
//!   scenario, experiment  scenario files, network builder, sweeps, CSV
//! ```
//!
//! The `examples/` directory contains one runnable program per capability;
//! `simnet` (the bundled binary) runs scenario files from the command line.

pub mod cache;
pub mod client;
pub mod experiment;
pub mod kernel;
pub mod mdns;
pub mod name;
pub mod privacy;
pub mod scenario;
pub mod server;
pub mod stats;
pub mod time;
pub mod wire;
pub mod zone;

pub use cache::{CacheKey, CachePolicy, CacheStore};
pub use client::{DnsClient, ResolveOutcome, TraffGenConfig};
pub use kernel::{
    GroupId, Node, NodeCtx, NodeError, NodeId, PacketDst, Sim, SimBuilder, SimError, SimPacket,
    Topology, Transport,
};
pub use name::DomainName;
pub use scenario::ScenarioConfig;
pub use server::{DnsServer, EchoConfig, RootHints};
pub use stats::TrafficStats;
pub use time::{SimTime, TimeEventSet};
pub use wire::{
    message_wire_size, parse_message, serialize_message, DnsMessage, DnsQuestion, MessageFlags,
    RRType, Rcode, Rdata, ResourceRecord,
};
pub use zone::{ZoneConfig, ZoneLookup};
