//! DNS server node behaviours: the authoritative server, the caching
//! recursive server (which resolves iteratively upstream), and the echo
//! server that answers from data encoded in the query name itself.
//!
//! `auth_handle_query` and `echo_handle_query` are pure functions of the
//! query (plus zone / querier address), so both are testable without a
//! running simulation; `DnsServer` wires them to the kernel.

use std::any::Any;
use std::collections::{BTreeSet, HashMap};
use std::net::Ipv4Addr;
use std::time::Duration;

use rand::Rng;

use crate::cache::{CacheKey, CacheStore};
use crate::kernel::{Node, NodeCtx, NodeError, NodeId, SimPacket};
use crate::name::DomainName;
use crate::time::TimeEventSet;
use crate::wire::{DnsMessage, DnsQuestion, RRType, Rcode, Rdata, ResourceRecord};
use crate::zone::{ZoneConfig, ZoneLookup};

/// How far a CNAME chain is followed before giving up.
pub const CNAME_CHASE_MAX: usize = 8;

/// How many nested helper resolutions (glueless NS lookups) are tolerated.
const TASK_DEPTH_MAX: u8 = 8;

/// Root server addresses: the starting point of every iterative resolution.
#[derive(Debug, Clone, Default)]
pub struct RootHints {
    pub servers: Vec<(DomainName, Ipv4Addr)>,
}

impl RootHints {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: DomainName, addr: Ipv4Addr) {
        self.servers.push((name, addr));
    }

    pub fn is_empty(&self) -> bool {
        self.servers.is_empty()
    }

    pub fn first_addr(&self) -> Option<Ipv4Addr> {
        self.servers.first().map(|(_, a)| *a)
    }
}

/// Echo server parameters. The marker labels `00` (address echo) and `cca`
/// (querier reflection) are fixed; the suffix names the domain the server
/// is reached under.
#[derive(Debug, Clone)]
pub struct EchoConfig {
    pub suffix: DomainName,
    /// TTL on echo-domain A answers, large so downstream caches retain them.
    pub echo_ttl: u32,
}

impl EchoConfig {
    pub fn new(suffix: DomainName) -> Self {
        EchoConfig {
            suffix,
            echo_ttl: 604_800,
        }
    }
}

/// Upstream retransmission: resend after `timeout`, `retries` times, then
/// give up with SERVFAIL.
#[derive(Debug, Clone, Copy)]
pub struct RetxConfig {
    pub timeout: Duration,
    pub retries: u32,
}

impl Default for RetxConfig {
    fn default() -> Self {
        RetxConfig {
            timeout: Duration::from_secs(1),
            retries: 2,
        }
    }
}

fn supported_qtype(qtype: RRType) -> bool {
    matches!(
        qtype,
        RRType::A | RRType::Aaaa | RRType::Ns | RRType::Mx | RRType::Cname | RRType::Any
    )
}

fn in_zone(zone: &ZoneConfig, name: &DomainName) -> bool {
    name == &zone.origin || name.is_subdomain_of(&zone.origin)
}

/// The uppermost delegation cut at or below `qname`, excluding the apex.
fn referral_for<'a>(zone: &'a ZoneConfig, qname: &DomainName) -> Option<&'a [ResourceRecord]> {
    let k = zone.origin.label_count();
    let l = qname.label_count();
    for depth in (k + 1)..=l {
        let cut = qname.suffix(l - depth);
        let ns = zone.rrset(&cut, RRType::Ns);
        if !ns.is_empty() {
            return Some(ns);
        }
    }
    None
}

fn push_unique(msg: &DnsMessage, out: &mut Vec<ResourceRecord>, rr: &ResourceRecord) {
    let seen = msg
        .records()
        .chain(out.iter())
        .any(|r| r.owner == rr.owner && r.rdata == rr.rdata);
    if !seen {
        out.push(rr.clone());
    }
}

/// In-zone A/AAAA records for each NS target, deduplicated against `msg`.
fn glue_for(zone: &ZoneConfig, ns_set: &[ResourceRecord], msg: &DnsMessage) -> Vec<ResourceRecord> {
    let mut glue = Vec::new();
    for ns in ns_set {
        if let Rdata::Ns(target) = &ns.rdata {
            for rr in zone.rrset(target, RRType::A) {
                push_unique(msg, &mut glue, rr);
            }
            for rr in zone.rrset(target, RRType::Aaaa) {
                push_unique(msg, &mut glue, rr);
            }
        }
    }
    glue
}

/// Adds the apex NS set to the authority section (with glue in additional)
/// unless the answer already carries it.
fn attach_zone_authority(zone: &ZoneConfig, resp: &mut DnsMessage) {
    let ns_set = zone.rrset(&zone.origin, RRType::Ns);
    if ns_set.is_empty()
        || resp
            .answers
            .iter()
            .any(|r| r.rtype() == RRType::Ns && r.owner == zone.origin)
    {
        return;
    }
    let glue = glue_for(zone, ns_set, resp);
    resp.authorities.extend_from_slice(ns_set);
    resp.additionals.extend(glue);
}

/// Answers `msg` from `zone` alone. Precedence: malformed questions, then
/// delegation (referrals are type-independent), then the supported-type
/// check, then the zone lookup itself.
pub fn auth_handle_query(zone: &ZoneConfig, msg: &DnsMessage) -> DnsMessage {
    if msg.questions.len() != 1 {
        return DnsMessage::response_to(msg, Rcode::FormErr);
    }
    let q = msg.questions[0].clone();
    if !in_zone(zone, &q.qname) {
        // A question this server holds no data for; nothing sensible to say.
        return DnsMessage::response_to(msg, Rcode::ServFail);
    }
    if let Some(ns_set) = referral_for(zone, &q.qname) {
        let ns_set = ns_set.to_vec();
        let mut resp = DnsMessage::response_to(msg, Rcode::NoError);
        let glue = glue_for(zone, &ns_set, &resp);
        resp.authorities = ns_set;
        resp.additionals = glue;
        return resp;
    }
    if !supported_qtype(q.qtype) {
        return DnsMessage::response_to(msg, Rcode::NotImp);
    }
    let mut resp = DnsMessage::response_to(msg, Rcode::NoError);
    resp.flags.authoritative = true;
    match zone.lookup(&q.qname, q.qtype) {
        ZoneLookup::Match(records) => {
            resp.answers = records;
            attach_zone_authority(zone, &mut resp);
        }
        ZoneLookup::Cname(cname) => {
            let mut target = match &cname.rdata {
                Rdata::Cname(t) => t.clone(),
                _ => unreachable!("Cname lookup yields a CNAME record"),
            };
            resp.answers.push(cname);
            for _ in 0..CNAME_CHASE_MAX {
                if !in_zone(zone, &target) {
                    break;
                }
                match zone.lookup(&target, q.qtype) {
                    ZoneLookup::Match(mut records) => {
                        resp.answers.append(&mut records);
                        break;
                    }
                    ZoneLookup::Cname(next) => {
                        target = match &next.rdata {
                            Rdata::Cname(t) => t.clone(),
                            _ => unreachable!(),
                        };
                        resp.answers.push(next);
                    }
                    _ => break,
                }
            }
            attach_zone_authority(zone, &mut resp);
        }
        ZoneLookup::NoData => {
            resp.authorities.push(zone.soa.clone());
        }
        ZoneLookup::NxDomain => {
            resp.flags.rcode = Rcode::NxDomain;
            resp.authorities.push(zone.soa.clone());
        }
    }
    resp
}

fn parse_hex_addr(label: &[u8]) -> Option<Ipv4Addr> {
    if label.len() != 8 {
        return None;
    }
    let s = std::str::from_utf8(label).ok()?;
    let v = u32::from_str_radix(s, 16).ok()?;
    Some(Ipv4Addr::from(v))
}

/// Answers from data in the query name: the label left of a `00` marker is
/// eight hex digits naming an IPv4 address (answered as a long-lived A
/// record); a `cca` marker reflects the querier's address in a zero-TTL TXT
/// record. A pure function of (query name, querier address).
pub fn echo_handle_query(cfg: &EchoConfig, querier: Ipv4Addr, msg: &DnsMessage) -> DnsMessage {
    if msg.questions.len() != 1 {
        return DnsMessage::response_to(msg, Rcode::FormErr);
    }
    let q = msg.questions[0].clone();
    let mut resp = DnsMessage::response_to(msg, Rcode::NoError);
    resp.flags.authoritative = true;
    for (i, label) in q.qname.labels().iter().enumerate() {
        if label.as_slice() == b"00" {
            if i > 0 {
                if let Some(addr) = parse_hex_addr(&q.qname.labels()[i - 1]) {
                    resp.answers.push(ResourceRecord::new(
                        q.qname.clone(),
                        cfg.echo_ttl,
                        Rdata::A(addr),
                    ));
                    return resp;
                }
            }
            break;
        }
        if label.as_slice() == b"cca" {
            resp.answers.push(ResourceRecord::new(
                q.qname.clone(),
                0,
                Rdata::Txt(vec![querier.to_string().into_bytes()]),
            ));
            return resp;
        }
    }
    resp.flags.rcode = Rcode::NxDomain;
    resp
}

// ---------------------------------------------------------------------------
// Caching server internals

enum ServerTimer {
    Timeout { task: u64 },
}

enum Requester {
    /// An external client; `query` is its original message.
    Client { node: NodeId, query: DnsMessage },
    /// A parent task waiting for an NS host address.
    Task { parent: u64 },
}

/// One in-flight iterative resolution.
struct ResolutionTask {
    /// The question as the requester asked it.
    original: DnsQuestion,
    /// The name currently chased (retargeted by CNAMEs).
    current: DomainName,
    requester: Requester,
    server: Ipv4Addr,
    qid: u16,
    sends: u32,
    depth: u8,
    cname_depth: usize,
    visited: BTreeSet<DomainName>,
    /// Answer records accumulated so far (CNAME chain, then the final set).
    chain: Vec<ResourceRecord>,
    outstanding: bool,
}

struct CachingState {
    cache: CacheStore,
    hints: RootHints,
    retx: RetxConfig,
    events: TimeEventSet<ServerTimer>,
    timeouts: HashMap<u64, crate::time::EventHandle>,
    tasks: HashMap<u64, ResolutionTask>,
    next_task: u64,
}

enum ServerRole {
    Auth { zone: ZoneConfig },
    Caching(Box<CachingState>),
    Echo { config: EchoConfig },
}

/// A DNS server node in one of three roles.
pub struct DnsServer {
    role: ServerRole,
}

impl DnsServer {
    pub fn auth(zone: ZoneConfig) -> Self {
        DnsServer {
            role: ServerRole::Auth { zone },
        }
    }

    pub fn caching(cache: CacheStore, hints: RootHints) -> Self {
        DnsServer {
            role: ServerRole::Caching(Box::new(CachingState {
                cache,
                hints,
                retx: RetxConfig::default(),
                events: TimeEventSet::new(),
                timeouts: HashMap::new(),
                tasks: HashMap::new(),
                next_task: 0,
            })),
        }
    }

    pub fn echo(config: EchoConfig) -> Self {
        DnsServer {
            role: ServerRole::Echo { config },
        }
    }

    pub fn with_retx(mut self, retx: RetxConfig) -> Self {
        if let ServerRole::Caching(st) = &mut self.role {
            st.retx = retx;
        }
        self
    }

    /// The cache, when this server is a caching one.
    pub fn cache(&self) -> Option<&CacheStore> {
        match &self.role {
            ServerRole::Caching(st) => Some(&st.cache),
            _ => None,
        }
    }

    pub fn pending_resolutions(&self) -> usize {
        match &self.role {
            ServerRole::Caching(st) => st.tasks.len(),
            _ => 0,
        }
    }
}

impl CachingState {
    fn sync_wakeup(&self, ctx: &mut NodeCtx<'_>) {
        ctx.set_wakeup(self.events.head_expiry());
    }

    /// Deepest cached NS with a cached address; root hints otherwise.
    fn best_nameserver(
        &mut self,
        qname: &DomainName,
        now: crate::time::SimTime,
    ) -> Option<(Ipv4Addr, DomainName)> {
        let l = qname.label_count();
        for skip in 0..=l {
            let anc = qname.suffix(skip);
            let Some(ns_set) = self.cache.get(&CacheKey::new(anc.clone(), RRType::Ns), now) else {
                continue;
            };
            for ns in &ns_set {
                let Rdata::Ns(target) = &ns.rdata else {
                    continue;
                };
                let key = CacheKey::new(target.clone(), RRType::A);
                if let Some(a_set) = self.cache.get(&key, now) {
                    for rr in &a_set {
                        if let Rdata::A(addr) = rr.rdata {
                            return Some((addr, anc));
                        }
                    }
                }
            }
        }
        self.hints.first_addr().map(|a| (a, DomainName::root()))
    }

    /// Full cache walk for a question; `Some` means every link of the CNAME
    /// chain down to the final records was live in cache.
    fn cache_answer(
        &mut self,
        q: &DnsQuestion,
        now: crate::time::SimTime,
    ) -> Option<Vec<ResourceRecord>> {
        if q.qtype == RRType::Any {
            return None;
        }
        let mut chain = Vec::new();
        let mut current = q.qname.clone();
        for _ in 0..=CNAME_CHASE_MAX {
            if let Some(records) = self.cache.get(&CacheKey::new(current.clone(), q.qtype), now) {
                chain.extend(records);
                return Some(chain);
            }
            if q.qtype == RRType::Cname {
                return None;
            }
            let cnames = self
                .cache
                .get(&CacheKey::new(current.clone(), RRType::Cname), now)?;
            let Rdata::Cname(target) = cnames[0].rdata.clone() else {
                return None;
            };
            chain.push(cnames[0].clone());
            current = target;
        }
        None
    }

    fn start_task(
        &mut self,
        ctx: &mut NodeCtx<'_>,
        original: DnsQuestion,
        current: DomainName,
        requester: Requester,
        chain: Vec<ResourceRecord>,
        depth: u8,
    ) {
        let Some((server, start_cut)) = self.best_nameserver(&current, ctx.now()) else {
            self.conclude(ctx, requester, Rcode::ServFail, chain, Vec::new());
            return;
        };
        let id = self.next_task;
        self.next_task += 1;
        let mut visited = BTreeSet::new();
        visited.insert(start_cut);
        self.tasks.insert(
            id,
            ResolutionTask {
                original,
                current,
                requester,
                server,
                qid: 0,
                sends: 0,
                depth,
                cname_depth: 0,
                visited,
                chain,
                outstanding: false,
            },
        );
        self.send_upstream(ctx, id);
    }

    fn send_upstream(&mut self, ctx: &mut NodeCtx<'_>, id: u64) {
        let stream = format!("resolver:{}", ctx.name());
        let qid: u16 = ctx.rng(&stream).gen();
        let task = self.tasks.get_mut(&id).expect("task exists while sending");
        task.qid = qid;
        task.sends += 1;
        task.outstanding = true;
        let query = DnsMessage::query(qid, task.current.clone(), task.original.qtype, false);
        let server = task.server;
        let deadline = ctx.now() + self.retx.timeout;
        if let Some(dst) = ctx.node_by_addr(server) {
            if ctx.trace_enabled() {
                let detail = format!("{} {} to {}", task.current, task.original.qtype, server);
                ctx.trace("upstream", &detail);
            }
            ctx.stats_mut().queries_sent += 1;
            if let Err(e) = ctx.send_unicast(dst, query) {
                ctx.trace("senderr", &e.to_string());
            }
        } else {
            ctx.stats_mut().drops_no_route += 1;
        }
        let handle = self.events.insert(deadline, ServerTimer::Timeout { task: id });
        self.timeouts.insert(id, handle);
        self.sync_wakeup(ctx);
    }

    fn on_timeout(&mut self, ctx: &mut NodeCtx<'_>, id: u64) {
        self.timeouts.remove(&id);
        let Some(task) = self.tasks.get_mut(&id) else {
            return;
        };
        task.outstanding = false;
        if task.sends <= self.retx.retries {
            ctx.trace("retx", &format!("{}", task.current));
            self.send_upstream(ctx, id);
        } else {
            ctx.trace("giveup", &format!("{}", task.current));
            self.finish(ctx, id, Rcode::ServFail, Vec::new());
        }
    }

    /// Routes a finished task's outcome: answer the client, or resume the
    /// parent task that was waiting for a nameserver address.
    fn conclude(
        &mut self,
        ctx: &mut NodeCtx<'_>,
        requester: Requester,
        rcode: Rcode,
        answers: Vec<ResourceRecord>,
        authorities: Vec<ResourceRecord>,
    ) {
        match requester {
            Requester::Client { node, query } => {
                let mut resp = DnsMessage::response_to(&query, rcode);
                resp.flags.recursion_available = true;
                resp.answers = answers;
                resp.authorities = authorities;
                ctx.stats_mut().responses_sent += 1;
                if let Err(e) = ctx.send_unicast(node, resp) {
                    ctx.trace("senderr", &e.to_string());
                }
            }
            Requester::Task { parent } => {
                let addr = answers.iter().find_map(|rr| match rr.rdata {
                    Rdata::A(a) => Some(a),
                    _ => None,
                });
                match (rcode, addr) {
                    (Rcode::NoError, Some(addr)) => {
                        if let Some(parent_task) = self.tasks.get_mut(&parent) {
                            parent_task.server = addr;
                            self.send_upstream(ctx, parent);
                        }
                    }
                    _ => self.finish(ctx, parent, Rcode::ServFail, Vec::new()),
                }
            }
        }
    }

    fn finish(
        &mut self,
        ctx: &mut NodeCtx<'_>,
        id: u64,
        rcode: Rcode,
        authorities: Vec<ResourceRecord>,
    ) {
        if let Some(handle) = self.timeouts.remove(&id) {
            self.events.cancel(handle);
            self.sync_wakeup(ctx);
        }
        let Some(task) = self.tasks.remove(&id) else {
            return;
        };
        self.conclude(ctx, task.requester, rcode, task.chain, authorities);
    }

    fn on_client_query(&mut self, ctx: &mut NodeCtx<'_>, src: NodeId, msg: &DnsMessage) {
        if msg.questions.len() != 1 {
            let resp = DnsMessage::response_to(msg, Rcode::FormErr);
            ctx.stats_mut().responses_sent += 1;
            let _ = ctx.send_unicast(src, resp);
            return;
        }
        let q = msg.questions[0].clone();
        if !msg.flags.recursion_desired {
            // No recursion requested: say who we are and nothing more.
            let mut resp = DnsMessage::response_to(msg, Rcode::NoError);
            resp.flags.recursion_available = true;
            ctx.stats_mut().responses_sent += 1;
            let _ = ctx.send_unicast(src, resp);
            return;
        }
        if let Some(chain) = self.cache_answer(&q, ctx.now()) {
            ctx.stats_mut().cache_hits += 1;
            ctx.trace("cachehit", &format!("{} {}", q.qname, q.qtype));
            let mut resp = DnsMessage::response_to(msg, Rcode::NoError);
            resp.flags.recursion_available = true;
            resp.answers = chain;
            ctx.stats_mut().responses_sent += 1;
            let _ = ctx.send_unicast(src, resp);
            return;
        }
        ctx.stats_mut().cache_misses += 1;
        let requester = Requester::Client {
            node: src,
            query: msg.clone(),
        };
        self.start_task(ctx, q.clone(), q.qname, requester, Vec::new(), 0);
    }

    fn cache_response_rrsets(&mut self, msg: &DnsMessage, now: crate::time::SimTime) {
        let mut sets: Vec<((DomainName, RRType), Vec<ResourceRecord>)> = Vec::new();
        for rr in msg.answers.iter().chain(&msg.authorities) {
            let key = (rr.owner.clone(), rr.rtype());
            match sets.iter_mut().find(|(k, _)| *k == key) {
                Some((_, v)) => v.push(rr.clone()),
                None => sets.push((key, vec![rr.clone()])),
            }
        }
        for ((owner, rtype), records) in sets {
            if rtype == RRType::Any {
                continue;
            }
            self.cache.put(CacheKey::new(owner, rtype), records, now);
        }
    }

    fn on_response(&mut self, ctx: &mut NodeCtx<'_>, msg: &DnsMessage) {
        let Some(q) = msg.first_question() else {
            ctx.stats_mut().stale_responses += 1;
            return;
        };
        let matching = self.tasks.iter().find_map(|(id, t)| {
            (t.outstanding
                && t.qid == msg.id
                && t.current == q.qname
                && t.original.qtype == q.qtype)
                .then_some(*id)
        });
        let Some(id) = matching else {
            ctx.stats_mut().stale_responses += 1;
            return;
        };
        if let Some(handle) = self.timeouts.remove(&id) {
            self.events.cancel(handle);
            self.sync_wakeup(ctx);
        }
        self.tasks.get_mut(&id).unwrap().outstanding = false;
        self.cache_response_rrsets(msg, ctx.now());
        match msg.flags.rcode {
            Rcode::NoError => {}
            Rcode::NxDomain => {
                let soa: Vec<ResourceRecord> = msg
                    .authorities
                    .iter()
                    .filter(|r| r.rtype() == RRType::Soa)
                    .cloned()
                    .collect();
                self.finish(ctx, id, Rcode::NxDomain, soa);
                return;
            }
            _ => {
                self.finish(ctx, id, Rcode::ServFail, Vec::new());
                return;
            }
        }

        // Walk the answer section: collect final records or follow CNAMEs.
        let qtype = self.tasks[&id].original.qtype;
        let mut current = self.tasks[&id].current.clone();
        let mut new_chain: Vec<ResourceRecord> = Vec::new();
        let mut cname_steps = 0usize;
        let outcome = loop {
            let finals: Vec<ResourceRecord> = msg
                .answers
                .iter()
                .filter(|rr| {
                    rr.owner == current && (qtype == RRType::Any || rr.rtype() == qtype)
                })
                .cloned()
                .collect();
            if !finals.is_empty() {
                new_chain.extend(finals);
                break Some(Ok(()));
            }
            let cname = msg
                .answers
                .iter()
                .find(|rr| rr.owner == current && rr.rtype() == RRType::Cname);
            match cname {
                Some(rr) => {
                    let Rdata::Cname(target) = rr.rdata.clone() else {
                        break Some(Err(()));
                    };
                    new_chain.push(rr.clone());
                    current = target;
                    cname_steps += 1;
                    let total = self.tasks[&id].cname_depth + cname_steps;
                    if total > CNAME_CHASE_MAX {
                        break Some(Err(()));
                    }
                }
                None => break None,
            }
        };
        match outcome {
            Some(Ok(())) => {
                let task = self.tasks.get_mut(&id).unwrap();
                task.chain.extend(new_chain);
                self.finish(ctx, id, Rcode::NoError, Vec::new());
            }
            Some(Err(())) => {
                self.finish(ctx, id, Rcode::ServFail, Vec::new());
            }
            None => {
                // No usable answer; either a referral or a dead end.
                {
                    let task = self.tasks.get_mut(&id).unwrap();
                    task.chain.extend(new_chain);
                    task.cname_depth += cname_steps;
                    task.current = current;
                }
                self.follow_authority(ctx, id, msg);
            }
        }
    }

    fn follow_authority(&mut self, ctx: &mut NodeCtx<'_>, id: u64, msg: &DnsMessage) {
        let ns_set: Vec<ResourceRecord> = msg
            .authorities
            .iter()
            .filter(|r| r.rtype() == RRType::Ns)
            .cloned()
            .collect();
        if ns_set.is_empty() {
            // NODATA: pass the SOA through so the requester sees the proof.
            let soa: Vec<ResourceRecord> = msg
                .authorities
                .iter()
                .filter(|r| r.rtype() == RRType::Soa)
                .cloned()
                .collect();
            self.finish(ctx, id, Rcode::NoError, soa);
            return;
        }
        let cut = ns_set[0].owner.clone();
        {
            let task = self.tasks.get_mut(&id).unwrap();
            if task.visited.contains(&cut) {
                ctx.trace("loop", &format!("{cut}"));
                self.finish(ctx, id, Rcode::ServFail, Vec::new());
                return;
            }
            task.visited.insert(cut);
        }
        let Some(Rdata::Ns(ns_name)) = ns_set.first().map(|r| r.rdata.clone()) else {
            self.finish(ctx, id, Rcode::ServFail, Vec::new());
            return;
        };
        // Glue from the referral, then cache, then a helper resolution.
        let glue = msg.additionals.iter().find_map(|rr| {
            (rr.owner == ns_name)
                .then(|| match rr.rdata {
                    Rdata::A(a) => Some(a),
                    _ => None,
                })
                .flatten()
        });
        let addr = glue.or_else(|| {
            let key = CacheKey::new(ns_name.clone(), RRType::A);
            self.cache.get(&key, ctx.now()).and_then(|set| {
                set.iter().find_map(|rr| match rr.rdata {
                    Rdata::A(a) => Some(a),
                    _ => None,
                })
            })
        });
        match addr {
            Some(addr) => {
                let task = self.tasks.get_mut(&id).unwrap();
                task.server = addr;
                self.send_upstream(ctx, id);
            }
            None => {
                let depth = self.tasks[&id].depth;
                if depth >= TASK_DEPTH_MAX {
                    self.finish(ctx, id, Rcode::ServFail, Vec::new());
                    return;
                }
                ctx.trace("glueless", &format!("{ns_name}"));
                let q = DnsQuestion::new(ns_name.clone(), RRType::A);
                self.start_task(
                    ctx,
                    q,
                    ns_name,
                    Requester::Task { parent: id },
                    Vec::new(),
                    depth + 1,
                );
            }
        }
    }
}

impl Node for DnsServer {
    fn handle_packet(&mut self, ctx: &mut NodeCtx<'_>, pkt: &SimPacket) -> Result<(), NodeError> {
        let msg = &pkt.payload;
        match &mut self.role {
            ServerRole::Auth { zone } => {
                if msg.flags.response {
                    ctx.stats_mut().stale_responses += 1;
                    return Ok(());
                }
                let resp = auth_handle_query(zone, msg);
                ctx.stats_mut().responses_sent += 1;
                ctx.send_unicast(pkt.src, resp)?;
            }
            ServerRole::Echo { config } => {
                if msg.flags.response {
                    ctx.stats_mut().stale_responses += 1;
                    return Ok(());
                }
                let querier = ctx.node_addr(pkt.src);
                let resp = echo_handle_query(config, querier, msg);
                ctx.stats_mut().responses_sent += 1;
                ctx.send_unicast(pkt.src, resp)?;
            }
            ServerRole::Caching(st) => {
                if msg.flags.response {
                    st.on_response(ctx, msg);
                } else {
                    st.on_client_query(ctx, pkt.src, msg);
                }
            }
        }
        Ok(())
    }

    fn handle_wakeup(&mut self, ctx: &mut NodeCtx<'_>) -> Result<(), NodeError> {
        if let ServerRole::Caching(st) = &mut self.role {
            while let Some((_, timer)) = st.events.pop_due(ctx.now()) {
                match timer {
                    ServerTimer::Timeout { task } => st.on_timeout(ctx, task),
                }
            }
            st.sync_wakeup(ctx);
        }
        Ok(())
    }

    fn head_expiry(&self) -> Option<crate::time::SimTime> {
        match &self.role {
            ServerRole::Caching(st) => st.events.head_expiry(),
            _ => None,
        }
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn name(s: &str) -> DomainName {
        s.parse().unwrap()
    }

    const CAMPUS: &str = "\
$TTL 86400
$ORIGIN uni-konstanz.de.
@   IN SOA pan.rz.uni-konstanz.de. hostmaster.uni-konstanz.de. (
        20030808000 172800 1209600 3600 )
    IN NS pan.rz.uni-konstanz.de.
    IN NS uranos.rz.uni-konstanz.de.
    IN MX imap.uni-konstanz.de.
    IN A  134.34.240.80
pan.rz       IN A 134.34.3.3
uranos.rz    IN A 134.34.3.2
imap         IN A 134.34.240.42
www          IN CNAME proxy-neu.rz
proxy-neu.rz IN A 134.34.240.1
";

    const PARENT: &str = "\
$TTL 86400
$ORIGIN de.
@ IN SOA ns.de. hostmaster.de. (1 7200 3600 604800)
@ IN NS ns.de.
ns IN A 10.0.0.2
uni-konstanz IN NS pan.rz.uni-konstanz.de.
uni-konstanz IN NS uranos.rz.uni-konstanz.de.
pan.rz.uni-konstanz IN A 134.34.3.3
uranos.rz.uni-konstanz IN A 134.34.3.2
";

    fn campus() -> ZoneConfig {
        ZoneConfig::parse(CAMPUS).unwrap()
    }

    fn query(qname: &str, qtype: RRType) -> DnsMessage {
        DnsMessage::query(0x1234, name(qname), qtype, false)
    }

    #[test]
    fn exact_match_carries_authority_and_glue() {
        let resp = auth_handle_query(&campus(), &query("pan.rz.uni-konstanz.de", RRType::A));
        assert_eq!(resp.flags.rcode, Rcode::NoError);
        assert!(resp.flags.authoritative);
        assert_eq!(resp.id, 0x1234);
        assert_eq!(
            resp.answers,
            vec![ResourceRecord::new(
                name("pan.rz.uni-konstanz.de"),
                86400,
                Rdata::A(Ipv4Addr::new(134, 34, 3, 3)),
            )]
        );
        assert_eq!(resp.authorities.len(), 2);
        assert!(resp
            .authorities
            .iter()
            .all(|r| r.rtype() == RRType::Ns && r.owner == name("uni-konstanz.de")));
        // pan.rz's own address already sits in the answer; only the other
        // nameserver's address is added as glue.
        assert_eq!(
            resp.additionals,
            vec![ResourceRecord::new(
                name("uranos.rz.uni-konstanz.de"),
                86400,
                Rdata::A(Ipv4Addr::new(134, 34, 3, 2)),
            )]
        );
    }

    #[test]
    fn cname_is_chased_within_the_zone() {
        let resp = auth_handle_query(&campus(), &query("www.uni-konstanz.de", RRType::A));
        assert_eq!(resp.flags.rcode, Rcode::NoError);
        assert_eq!(resp.answers.len(), 2);
        assert_eq!(
            resp.answers[0].rdata,
            Rdata::Cname(name("proxy-neu.rz.uni-konstanz.de"))
        );
        assert_eq!(
            resp.answers[1],
            ResourceRecord::new(
                name("proxy-neu.rz.uni-konstanz.de"),
                86400,
                Rdata::A(Ipv4Addr::new(134, 34, 240, 1)),
            )
        );
    }

    #[test]
    fn any_at_apex_returns_all_five_records() {
        let resp = auth_handle_query(&campus(), &query("uni-konstanz.de", RRType::Any));
        assert_eq!(resp.flags.rcode, Rcode::NoError);
        assert_eq!(resp.answers.len(), 5);
        let mut types: Vec<RRType> = resp.answers.iter().map(|r| r.rtype()).collect();
        types.sort_by_key(|t| t.code());
        assert_eq!(
            types,
            vec![RRType::A, RRType::Ns, RRType::Ns, RRType::Soa, RRType::Mx]
        );
        // The apex NS set is already in the answer; no duplicate authority.
        assert!(resp.authorities.is_empty());
    }

    #[test]
    fn nxdomain_and_nodata_carry_the_soa() {
        let resp = auth_handle_query(&campus(), &query("nope.uni-konstanz.de", RRType::A));
        assert_eq!(resp.flags.rcode, Rcode::NxDomain);
        assert!(resp.answers.is_empty());
        assert_eq!(resp.authorities.len(), 1);
        assert_eq!(resp.authorities[0].rtype(), RRType::Soa);

        // rz.uni-konstanz.de exists only as an empty non-terminal.
        let resp = auth_handle_query(&campus(), &query("rz.uni-konstanz.de", RRType::A));
        assert_eq!(resp.flags.rcode, Rcode::NoError);
        assert!(resp.answers.is_empty());
        assert_eq!(resp.authorities[0].rtype(), RRType::Soa);
    }

    #[test]
    fn unsupported_type_is_notimp() {
        let resp = auth_handle_query(&campus(), &query("pan.rz.uni-konstanz.de", RRType::Txt));
        assert_eq!(resp.flags.rcode, Rcode::NotImp);
        let resp = auth_handle_query(&campus(), &query("uni-konstanz.de", RRType::Soa));
        assert_eq!(resp.flags.rcode, Rcode::NotImp);
    }

    #[test]
    fn multi_question_is_formerr_and_out_of_zone_servfail() {
        let mut msg = query("pan.rz.uni-konstanz.de", RRType::A);
        msg.questions.push(DnsQuestion::new(name("x.de"), RRType::A));
        assert_eq!(
            auth_handle_query(&campus(), &msg).flags.rcode,
            Rcode::FormErr
        );
        let resp = auth_handle_query(&campus(), &query("example.com", RRType::A));
        assert_eq!(resp.flags.rcode, Rcode::ServFail);
    }

    #[test]
    fn delegation_beats_lookup_and_is_type_independent() {
        let parent = ZoneConfig::parse(PARENT).unwrap();
        for qtype in [RRType::A, RRType::Txt] {
            let resp = auth_handle_query(&parent, &query("somehost.uni-konstanz.de", qtype));
            assert_eq!(resp.flags.rcode, Rcode::NoError);
            assert!(!resp.flags.authoritative);
            assert!(resp.answers.is_empty());
            assert_eq!(resp.authorities.len(), 2);
            assert!(resp
                .authorities
                .iter()
                .all(|r| r.owner == name("uni-konstanz.de") && r.rtype() == RRType::Ns));
            assert_eq!(resp.additionals.len(), 2, "glue for both nameservers");
        }
        // The cut name itself is referred too.
        let resp = auth_handle_query(&parent, &query("uni-konstanz.de", RRType::Ns));
        assert!(resp.answers.is_empty());
        assert_eq!(resp.authorities.len(), 2);
    }

    #[test]
    fn echo_domain_decodes_hex_addresses() {
        let cfg = EchoConfig::new(name("echo.example"));
        let resp = echo_handle_query(
            &cfg,
            Ipv4Addr::new(10, 0, 0, 7),
            &query("86220303.00.echo.example", RRType::A),
        );
        assert_eq!(resp.flags.rcode, Rcode::NoError);
        assert_eq!(
            resp.answers,
            vec![ResourceRecord::new(
                name("86220303.00.echo.example"),
                604_800,
                Rdata::A(Ipv4Addr::new(134, 34, 3, 3)),
            )]
        );
    }

    #[test]
    fn cca_reflects_the_querier() {
        let cfg = EchoConfig::new(name("echo.example"));
        let resp = echo_handle_query(
            &cfg,
            Ipv4Addr::new(10, 0, 0, 7),
            &query("x.cca.echo.example", RRType::Txt),
        );
        assert_eq!(resp.answers.len(), 1);
        assert_eq!(resp.answers[0].ttl, 0);
        assert_eq!(
            resp.answers[0].rdata,
            Rdata::Txt(vec![b"10.0.0.7".to_vec()])
        );
        // Pure function: identical inputs, identical responses.
        let again = echo_handle_query(
            &cfg,
            Ipv4Addr::new(10, 0, 0, 7),
            &query("x.cca.echo.example", RRType::Txt),
        );
        assert_eq!(resp, again);
    }

    #[test]
    fn echo_rejects_malformed_and_markerless_names() {
        let cfg = EchoConfig::new(name("echo.example"));
        for qname in ["zz.00.echo.example", "00.echo.example", "plain.echo.example"] {
            let resp = echo_handle_query(&cfg, Ipv4Addr::new(10, 0, 0, 7), &query(qname, RRType::A));
            assert_eq!(resp.flags.rcode, Rcode::NxDomain, "{qname}");
            assert!(resp.answers.is_empty());
        }
    }

    #[test]
    fn referral_for_finds_the_uppermost_cut() {
        let parent = ZoneConfig::parse(PARENT).unwrap();
        assert!(referral_for(&parent, &name("de")).is_none());
        assert!(referral_for(&parent, &name("ns.de")).is_none());
        let cut = referral_for(&parent, &name("a.b.uni-konstanz.de")).unwrap();
        assert_eq!(cut.len(), 2);
        assert_eq!(cut[0].owner, name("uni-konstanz.de"));
    }
}
