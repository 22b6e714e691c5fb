//! The discrete-event kernel: topology, packets, nodes, and the event loop.
//!
//! All behaviour lives in nodes; the kernel owns the clock, the global event
//! queue, link delays, traffic accounting, named RNG streams, and the
//! optional trace and packet capture.
//!
//! Wakeup discipline: a node keeps its timers in its own `TimeEventSet` and
//! the kernel holds at most one pending wakeup per node, always at that
//! set's head expiry. Nodes re-synchronize the wakeup after every mutation;
//! with assertions enabled the kernel verifies the invariant after every
//! processed event.

use std::any::Any;
use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::net::Ipv4Addr;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::stats::TrafficStats;
use crate::time::SimTime;
use crate::wire::{message_wire_size, DnsMessage, WireError};

/// Index of a node in the topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(u32);

impl NodeId {
    pub fn from_index(i: usize) -> Self {
        NodeId(i as u32)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Index of a multicast group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupId(u32);

#[derive(Debug, Clone)]
struct NodeInfo {
    name: String,
    addr: Ipv4Addr,
}

/// Static network shape: nodes, link delays, multicast groups.
#[derive(Debug, Clone, Default)]
pub struct Topology {
    nodes: Vec<NodeInfo>,
    links: HashMap<(NodeId, NodeId), Duration>,
    default_delay: Duration,
    groups: Vec<BTreeSet<NodeId>>,
    by_addr: HashMap<Ipv4Addr, NodeId>,
}

impl Topology {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.nodes[id.index()].name
    }

    pub fn addr(&self, id: NodeId) -> Ipv4Addr {
        self.nodes[id.index()].addr
    }

    pub fn node_by_addr(&self, addr: Ipv4Addr) -> Option<NodeId> {
        self.by_addr.get(&addr).copied()
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.nodes
            .iter()
            .position(|n| n.name == name)
            .map(|i| NodeId(i as u32))
    }

    /// One-way delay from `src` to `dst`; explicit links override the
    /// default.
    pub fn link_delay(&self, src: NodeId, dst: NodeId) -> Duration {
        self.links
            .get(&(src, dst))
            .copied()
            .unwrap_or(self.default_delay)
    }

    pub fn group_members(&self, group: GroupId) -> &BTreeSet<NodeId> {
        &self.groups[group.0 as usize]
    }
}

/// Where a packet is headed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketDst {
    Node(NodeId),
    Group(GroupId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transport {
    Unicast,
    Multicast,
}

impl std::fmt::Display for Transport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Transport::Unicast => write!(f, "ucast"),
            Transport::Multicast => write!(f, "mcast"),
        }
    }
}

/// A DNS message in flight. The payload travels as a structured message;
/// `wire_bytes` carries the compressed serialized size, which is what the
/// traffic accounting charges.
#[derive(Debug, Clone)]
pub struct SimPacket {
    pub src: NodeId,
    pub dst: PacketDst,
    pub transport: Transport,
    pub payload: DnsMessage,
    pub wire_bytes: u32,
}

impl SimPacket {
    pub fn unicast(src: NodeId, dst: NodeId, payload: DnsMessage) -> Result<Self, WireError> {
        let wire_bytes = message_wire_size(&payload, true)? as u32;
        Ok(SimPacket {
            src,
            dst: PacketDst::Node(dst),
            transport: Transport::Unicast,
            payload,
            wire_bytes,
        })
    }

    pub fn multicast(src: NodeId, group: GroupId, payload: DnsMessage) -> Result<Self, WireError> {
        let wire_bytes = message_wire_size(&payload, true)? as u32;
        Ok(SimPacket {
            src,
            dst: PacketDst::Group(group),
            transport: Transport::Multicast,
            payload,
            wire_bytes,
        })
    }
}

/// One packet as captured at send time.
#[derive(Debug, Clone)]
pub struct CapturedPacket {
    pub time: SimTime,
    pub pkt: SimPacket,
    /// How many deliveries the send scheduled.
    pub copies: u32,
}

/// Error raised by a node handler; aborts the run.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{0}")]
pub struct NodeError(pub String);

impl NodeError {
    pub fn new(msg: impl Into<String>) -> Self {
        NodeError(msg.into())
    }
}

impl From<WireError> for NodeError {
    fn from(e: WireError) -> Self {
        NodeError(e.to_string())
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("node {node} failed at {time}ns while handling {event}: {source}")]
    NodeFailure {
        node: String,
        time: u64,
        event: String,
        #[source]
        source: NodeError,
    },
    #[error("wakeup invariant violated at {time}ns for node {node}: kernel {kernel:?}, set head {head:?}")]
    WakeupInvariant {
        node: String,
        time: u64,
        kernel: Option<SimTime>,
        head: Option<SimTime>,
    },
}

/// Behaviour attached to a topology node.
pub trait Node {
    /// Called once at t=0 before any event is processed.
    fn start(&mut self, _ctx: &mut NodeCtx<'_>) -> Result<(), NodeError> {
        Ok(())
    }

    /// A packet addressed (or multicast) to this node arrived.
    fn handle_packet(&mut self, ctx: &mut NodeCtx<'_>, pkt: &SimPacket) -> Result<(), NodeError>;

    /// The kernel wakeup for this node fired; drain due timers.
    fn handle_wakeup(&mut self, ctx: &mut NodeCtx<'_>) -> Result<(), NodeError>;

    /// Head expiry of this node's timer set, for the wakeup invariant.
    fn head_expiry(&self) -> Option<SimTime> {
        None
    }

    fn as_any(&self) -> &dyn Any;
    fn as_any_mut(&mut self) -> &mut dyn Any;
}

enum KernelEvent {
    Wakeup { node: NodeId, gen: u64 },
    Deliver { dst: NodeId, pkt: SimPacket },
}

struct QueuedEvent {
    time: SimTime,
    seq: u64,
    event: KernelEvent,
}

impl PartialEq for QueuedEvent {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}
impl Eq for QueuedEvent {}
impl PartialOrd for QueuedEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QueuedEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap and we want the earliest event.
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

/// Kernel state shared with nodes through `NodeCtx`.
pub struct Kernel {
    now: SimTime,
    queue: BinaryHeap<QueuedEvent>,
    next_seq: u64,
    topology: Topology,
    stats: Vec<TrafficStats>,
    wakeups: Vec<Option<(SimTime, u64)>>,
    wakeup_gen: Vec<u64>,
    streams: HashMap<String, ChaCha8Rng>,
    seed: u64,
    trace: Option<Vec<String>>,
    capture: Option<Vec<CapturedPacket>>,
    assertions: bool,
    /// Bytes scheduled for delivery, summed as wire_bytes x copies at send.
    pub sent_bytes_scheduled: u64,
    /// Bytes actually delivered to nodes.
    pub delivered_bytes: u64,
    pub delivered_pkts: u64,
}

/// Derives an independent, platform-stable RNG stream from a seed and a
/// stream name (FNV-1a over the name, splitmix64 expansion to a 256-bit
/// ChaCha8 key).
pub fn rng_stream(name: &str, seed: u64) -> ChaCha8Rng {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut state = seed ^ h;
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
        chunk.copy_from_slice(&z.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

impl Kernel {
    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The named RNG stream, created on first use from (name, run seed).
    pub fn rng(&mut self, name: &str) -> &mut ChaCha8Rng {
        let seed = self.seed;
        self.streams
            .entry(name.to_string())
            .or_insert_with(|| rng_stream(name, seed))
    }

    fn push(&mut self, time: SimTime, event: KernelEvent) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(QueuedEvent { time, seq, event });
    }

    /// Schedules deliveries for `pkt`. Unknown destinations count as routing
    /// drops against the sender. Returns how many copies were scheduled.
    pub fn send(&mut self, pkt: SimPacket) -> u32 {
        let src = pkt.src;
        let copies: Vec<NodeId> = match pkt.dst {
            PacketDst::Node(dst) => {
                if dst.index() < self.topology.node_count() {
                    vec![dst]
                } else {
                    Vec::new()
                }
            }
            PacketDst::Group(group) => {
                if (group.0 as usize) < self.topology.groups.len() {
                    self.topology
                        .group_members(group)
                        .iter()
                        .copied()
                        .filter(|&m| m != src)
                        .collect()
                } else {
                    Vec::new()
                }
            }
        };
        if copies.is_empty() {
            if matches!(pkt.dst, PacketDst::Node(_)) {
                self.stats[src.index()].drops_no_route += 1;
            }
            if let Some(cap) = self.capture.as_mut() {
                cap.push(CapturedPacket {
                    time: self.now,
                    pkt,
                    copies: 0,
                });
            }
            return 0;
        }
        self.sent_bytes_scheduled += pkt.wire_bytes as u64 * copies.len() as u64;
        if let Some(cap) = self.capture.as_mut() {
            cap.push(CapturedPacket {
                time: self.now,
                pkt: pkt.clone(),
                copies: copies.len() as u32,
            });
        }
        let n = copies.len() as u32;
        for dst in copies {
            let at = self.now + self.topology.link_delay(src, dst);
            self.push(
                at,
                KernelEvent::Deliver {
                    dst,
                    pkt: pkt.clone(),
                },
            );
        }
        n
    }

    /// Points the node's single wakeup at `at`, or clears it.
    pub fn set_wakeup(&mut self, node: NodeId, at: Option<SimTime>) {
        let idx = node.index();
        if self.wakeups[idx].map(|(t, _)| t) == at {
            return;
        }
        self.wakeup_gen[idx] += 1;
        let gen = self.wakeup_gen[idx];
        match at {
            Some(t) => {
                debug_assert!(t >= self.now, "wakeup scheduled in the past");
                self.wakeups[idx] = Some((t, gen));
                self.push(t, KernelEvent::Wakeup { node, gen });
            }
            None => self.wakeups[idx] = None,
        }
    }

    pub fn stats(&self, node: NodeId) -> &TrafficStats {
        &self.stats[node.index()]
    }

    pub fn stats_mut(&mut self, node: NodeId) -> &mut TrafficStats {
        &mut self.stats[node.index()]
    }

    pub fn trace_enabled(&self) -> bool {
        self.trace.is_some()
    }

    pub fn trace_push(&mut self, node: NodeId, kind: &str, detail: &str) {
        if let Some(trace) = self.trace.as_mut() {
            let name = &self.topology.nodes[node.index()].name;
            trace.push(format!("{}\t{}\t{}\t{}", self.now, name, kind, detail));
        }
    }
}

/// A node's view of the kernel while handling an event.
pub struct NodeCtx<'a> {
    kernel: &'a mut Kernel,
    pub id: NodeId,
}

impl<'a> NodeCtx<'a> {
    pub fn now(&self) -> SimTime {
        self.kernel.now()
    }

    pub fn addr(&self) -> Ipv4Addr {
        self.kernel.topology.addr(self.id)
    }

    pub fn name(&self) -> &str {
        self.kernel.topology.name(self.id)
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        self.kernel.topology.name(id)
    }

    pub fn node_addr(&self, id: NodeId) -> Ipv4Addr {
        self.kernel.topology.addr(id)
    }

    pub fn node_by_addr(&self, addr: Ipv4Addr) -> Option<NodeId> {
        self.kernel.topology.node_by_addr(addr)
    }

    pub fn send_unicast(&mut self, dst: NodeId, msg: DnsMessage) -> Result<(), NodeError> {
        let pkt = SimPacket::unicast(self.id, dst, msg)?;
        self.kernel.send(pkt);
        Ok(())
    }

    pub fn send_multicast(&mut self, group: GroupId, msg: DnsMessage) -> Result<(), NodeError> {
        let pkt = SimPacket::multicast(self.id, group, msg)?;
        self.kernel.send(pkt);
        Ok(())
    }

    pub fn set_wakeup(&mut self, at: Option<SimTime>) {
        self.kernel.set_wakeup(self.id, at);
    }

    pub fn rng(&mut self, stream: &str) -> &mut ChaCha8Rng {
        self.kernel.rng(stream)
    }

    pub fn stats_mut(&mut self) -> &mut TrafficStats {
        self.kernel.stats_mut(self.id)
    }

    pub fn trace_enabled(&self) -> bool {
        self.kernel.trace_enabled()
    }

    pub fn trace(&mut self, kind: &str, detail: &str) {
        self.kernel.trace_push(self.id, kind, detail);
    }
}

/// Builds a simulation: topology first, then behaviours.
pub struct SimBuilder {
    topology: Topology,
    nodes: Vec<Option<Box<dyn Node>>>,
    seed: u64,
    trace: bool,
    capture: bool,
    assertions: bool,
}

impl SimBuilder {
    pub fn new(seed: u64) -> Self {
        SimBuilder {
            topology: Topology::default(),
            nodes: Vec::new(),
            seed,
            trace: false,
            capture: false,
            assertions: false,
        }
    }

    pub fn add_node(
        &mut self,
        name: impl Into<String>,
        addr: Ipv4Addr,
        behaviour: Box<dyn Node>,
    ) -> NodeId {
        let id = NodeId(self.topology.nodes.len() as u32);
        let name = name.into();
        self.topology.nodes.push(NodeInfo {
            name,
            addr,
        });
        self.topology.by_addr.insert(addr, id);
        self.nodes.push(Some(behaviour));
        id
    }

    /// Directed link delay.
    pub fn set_link(&mut self, src: NodeId, dst: NodeId, delay: Duration) {
        self.topology.links.insert((src, dst), delay);
    }

    /// Symmetric link delay.
    pub fn set_link_sym(&mut self, a: NodeId, b: NodeId, delay: Duration) {
        self.set_link(a, b, delay);
        self.set_link(b, a, delay);
    }

    pub fn set_default_delay(&mut self, delay: Duration) {
        self.topology.default_delay = delay;
    }

    pub fn add_group(&mut self, members: &[NodeId]) -> GroupId {
        let id = GroupId(self.topology.groups.len() as u32);
        self.topology.groups.push(members.iter().copied().collect());
        id
    }

    /// An empty multicast group; nodes join as they are added.
    pub fn new_group(&mut self) -> GroupId {
        self.add_group(&[])
    }

    pub fn join_group(&mut self, group: GroupId, node: NodeId) {
        self.topology.groups[group.0 as usize].insert(node);
    }

    pub fn enable_trace(&mut self) {
        self.trace = true;
    }

    pub fn enable_capture(&mut self) {
        self.capture = true;
    }

    pub fn enable_assertions(&mut self) {
        self.assertions = true;
    }

    pub fn build(self) -> Sim {
        let n = self.nodes.len();
        Sim {
            kernel: Kernel {
                now: SimTime::ZERO,
                queue: BinaryHeap::new(),
                next_seq: 0,
                stats: vec![TrafficStats::default(); n],
                wakeups: vec![None; n],
                wakeup_gen: vec![0; n],
                topology: self.topology,
                streams: HashMap::new(),
                seed: self.seed,
                trace: if self.trace { Some(Vec::new()) } else { None },
                capture: if self.capture { Some(Vec::new()) } else { None },
                assertions: self.assertions,
                sent_bytes_scheduled: 0,
                delivered_bytes: 0,
                delivered_pkts: 0,
            },
            nodes: self.nodes,
            started: false,
        }
    }
}

/// A runnable simulation.
pub struct Sim {
    kernel: Kernel,
    nodes: Vec<Option<Box<dyn Node>>>,
    started: bool,
}

impl Sim {
    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn topology(&self) -> &Topology {
        &self.kernel.topology
    }

    pub fn now(&self) -> SimTime {
        self.kernel.now
    }

    pub fn stats(&self, node: NodeId) -> &TrafficStats {
        self.kernel.stats(node)
    }

    pub fn trace(&self) -> &[String] {
        self.kernel.trace.as_deref().unwrap_or(&[])
    }

    pub fn capture(&self) -> &[CapturedPacket] {
        self.kernel.capture.as_deref().unwrap_or(&[])
    }

    /// Typed access to a node's behaviour.
    pub fn node<T: Node + 'static>(&self, id: NodeId) -> Option<&T> {
        self.nodes[id.index()]
            .as_ref()
            .and_then(|n| n.as_any().downcast_ref())
    }

    pub fn node_mut<T: Node + 'static>(&mut self, id: NodeId) -> Option<&mut T> {
        self.nodes[id.index()]
            .as_mut()
            .and_then(|n| n.as_any_mut().downcast_mut())
    }

    /// Injects a pre-built packet, as a misbehaving node would.
    pub fn inject_packet(&mut self, pkt: SimPacket) -> u32 {
        self.kernel.send(pkt)
    }

    fn dispatch<F>(&mut self, node: NodeId, event_desc: &str, f: F) -> Result<(), SimError>
    where
        F: FnOnce(&mut dyn Node, &mut NodeCtx<'_>) -> Result<(), NodeError>,
    {
        let mut behaviour = self.nodes[node.index()]
            .take()
            .expect("node behaviours are only taken during dispatch");
        let mut ctx = NodeCtx {
            kernel: &mut self.kernel,
            id: node,
        };
        let result = f(behaviour.as_mut(), &mut ctx);
        self.nodes[node.index()] = Some(behaviour);
        result.map_err(|source| SimError::NodeFailure {
            node: self.kernel.topology.name(node).to_string(),
            time: self.kernel.now.as_nanos(),
            event: event_desc.to_string(),
            source,
        })
    }

    fn start_all(&mut self) -> Result<(), SimError> {
        self.started = true;
        for idx in 0..self.nodes.len() {
            let id = NodeId(idx as u32);
            self.dispatch(id, "start", |n, ctx| n.start(ctx))?;
        }
        Ok(())
    }

    fn check_wakeups(&self) -> Result<(), SimError> {
        for (idx, behaviour) in self.nodes.iter().enumerate() {
            let head = behaviour.as_ref().and_then(|n| n.head_expiry());
            let kernel = self.kernel.wakeups[idx].map(|(t, _)| t);
            if head != kernel {
                return Err(SimError::WakeupInvariant {
                    node: self.kernel.topology.nodes[idx].name.clone(),
                    time: self.kernel.now.as_nanos(),
                    kernel,
                    head,
                });
            }
        }
        Ok(())
    }

    /// Runs until the queue drains or the next event lies beyond `t_end`.
    /// The clock finishes at `t_end` even if the last event fired earlier.
    /// Returns the number of processed events.
    pub fn run_until(&mut self, t_end: SimTime) -> Result<u64, SimError> {
        if !self.started {
            self.start_all()?;
            if self.kernel.assertions {
                self.check_wakeups()?;
            }
        }
        let mut processed = 0u64;
        loop {
            let due = match self.kernel.queue.peek() {
                Some(ev) if ev.time <= t_end => true,
                _ => false,
            };
            if !due {
                break;
            }
            let ev = self.kernel.queue.pop().unwrap();
            debug_assert!(ev.time >= self.kernel.now, "clock never moves backward");
            self.kernel.now = ev.time;
            match ev.event {
                KernelEvent::Wakeup { node, gen } => {
                    let idx = node.index();
                    match self.kernel.wakeups[idx] {
                        Some((_, g)) if g == gen => {
                            self.kernel.wakeups[idx] = None;
                            self.kernel.trace_push(node, "wakeup", "");
                            self.dispatch(node, "wakeup", |n, ctx| n.handle_wakeup(ctx))?;
                            processed += 1;
                        }
                        // Stale generation: superseded or cancelled.
                        _ => continue,
                    }
                }
                KernelEvent::Deliver { dst, pkt } => {
                    {
                        let stats = &mut self.kernel.stats[dst.index()];
                        match pkt.transport {
                            Transport::Unicast => {
                                stats.ucast_bytes += pkt.wire_bytes as u64;
                                stats.ucast_pkts += 1;
                            }
                            Transport::Multicast => {
                                stats.mcast_bytes += pkt.wire_bytes as u64;
                                stats.mcast_pkts += 1;
                            }
                        }
                        self.kernel.delivered_bytes += pkt.wire_bytes as u64;
                        self.kernel.delivered_pkts += 1;
                    }
                    if self.kernel.trace_enabled() {
                        let q = pkt
                            .payload
                            .first_question()
                            .map(|q| format!("{} {}", q.qname, q.qtype))
                            .unwrap_or_else(|| "-".to_string());
                        let detail = format!(
                            "src={} {} bytes={} id={} qr={} q={}",
                            self.kernel.topology.name(pkt.src),
                            pkt.transport,
                            pkt.wire_bytes,
                            pkt.payload.id,
                            pkt.payload.flags.response as u8,
                            q
                        );
                        self.kernel.trace_push(dst, "deliver", &detail);
                    }
                    self.dispatch(dst, "packet", |n, ctx| n.handle_packet(ctx, &pkt))?;
                    processed += 1;
                }
            }
            if self.kernel.assertions {
                self.check_wakeups()?;
            }
        }
        if t_end > self.kernel.now {
            self.kernel.now = t_end;
        }
        Ok(processed)
    }
}
