//! Per-node traffic statistics.

use std::ops::AddAssign;

/// Counters a node accumulates over a run. Byte and packet counters track
/// what the node *received*, split by transport; the remaining counters are
/// incremented by the node behaviours themselves.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrafficStats {
    pub mcast_bytes: u64,
    pub mcast_pkts: u64,
    pub ucast_bytes: u64,
    pub ucast_pkts: u64,
    pub queries_sent: u64,
    pub responses_sent: u64,
    pub cache_hits: u64,
    pub cache_misses: u64,
    pub suppressed_queries: u64,
    pub suppressed_responses: u64,
    pub stale_responses: u64,
    pub malformed: u64,
    pub drops_no_route: u64,
}

impl TrafficStats {
    pub fn total_bytes(&self) -> u64 {
        self.mcast_bytes + self.ucast_bytes
    }

    pub fn total_pkts(&self) -> u64 {
        self.mcast_pkts + self.ucast_pkts
    }
}

impl AddAssign for TrafficStats {
    fn add_assign(&mut self, rhs: TrafficStats) {
        self.mcast_bytes += rhs.mcast_bytes;
        self.mcast_pkts += rhs.mcast_pkts;
        self.ucast_bytes += rhs.ucast_bytes;
        self.ucast_pkts += rhs.ucast_pkts;
        self.queries_sent += rhs.queries_sent;
        self.responses_sent += rhs.responses_sent;
        self.cache_hits += rhs.cache_hits;
        self.cache_misses += rhs.cache_misses;
        self.suppressed_queries += rhs.suppressed_queries;
        self.suppressed_responses += rhs.suppressed_responses;
        self.stale_responses += rhs.stale_responses;
        self.malformed += rhs.malformed;
        self.drops_no_route += rhs.drops_no_route;
    }
}
