//! The stub client node: callback-style resolution against a recursive
//! server, plus the file-driven periodic traffic generator.

use std::any::Any;
use std::collections::HashMap;
use std::net::Ipv4Addr;
use std::time::Duration;

use rand::Rng;

use crate::kernel::{Node, NodeCtx, NodeError, SimPacket};
use crate::name::DomainName;
use crate::server::RetxConfig;
use crate::time::{EventHandle, SimTime, TimeEventSet};
use crate::wire::{DnsMessage, RRType, Rcode, ResourceRecord};

/// Invoked exactly once per request, when its outcome is known.
pub type ResolveCallback = Box<dyn FnMut(&ResolveOutcome)>;

/// What became of one resolve request.
#[derive(Debug, Clone)]
pub struct ResolveOutcome {
    pub qname: DomainName,
    pub qtype: RRType,
    /// `None` when the request timed out after all retransmissions.
    pub rcode: Option<Rcode>,
    pub answers: Vec<ResourceRecord>,
    pub issued_at: SimTime,
    pub rtt: Duration,
}

impl ResolveOutcome {
    pub fn timed_out(&self) -> bool {
        self.rcode.is_none()
    }
}

/// Periodic query generator: draws a random line from the query list every
/// `period * (1 ± jitter)` seconds.
#[derive(Debug, Clone)]
pub struct TraffGenConfig {
    pub queries: Vec<(DomainName, RRType)>,
    pub period: f64,
    pub jitter: f64,
}

impl TraffGenConfig {
    pub fn new(queries: Vec<(DomainName, RRType)>, period: f64, jitter: f64) -> Self {
        assert!(period > 0.0, "period must be positive");
        assert!((0.0..1.0).contains(&jitter), "jitter is a fraction below 1");
        assert!(!queries.is_empty(), "query list must not be empty");
        TraffGenConfig {
            queries,
            period,
            jitter,
        }
    }

    /// Parses query-file text: one `name type` pair per line, `#` comments.
    pub fn parse_queries(text: &str) -> Result<Vec<(DomainName, RRType)>, String> {
        let mut out = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(name), Some(rtype), None) = (parts.next(), parts.next(), parts.next())
            else {
                return Err(format!("line {}: expected `name type`", i + 1));
            };
            let qname: DomainName = name
                .parse()
                .map_err(|e| format!("line {}: bad name {name}: {e}", i + 1))?;
            let qtype: RRType = rtype
                .parse()
                .map_err(|_| format!("line {}: unknown type {rtype}", i + 1))?;
            out.push((qname, qtype));
        }
        if out.is_empty() {
            return Err("query file holds no queries".to_string());
        }
        Ok(out)
    }
}

enum ClientTimer {
    Issue(usize),
    Retx(u16),
    Tick,
}

struct Pending {
    qname: DomainName,
    qtype: RRType,
    issued_at: SimTime,
    sends: u32,
    retx: EventHandle,
    callback: Option<ResolveCallback>,
}

/// A DNS stub client. Requests come from a scripted plan, the traffic
/// generator, or both; every request ends in exactly one `ResolveOutcome`.
pub struct DnsClient {
    server: Ipv4Addr,
    retx: RetxConfig,
    plan: Vec<(SimTime, DomainName, RRType, Option<ResolveCallback>)>,
    traffgen: Option<TraffGenConfig>,
    pending: HashMap<u16, Pending>,
    events: TimeEventSet<ClientTimer>,
    outcomes: Vec<ResolveOutcome>,
}

impl DnsClient {
    pub fn new(server: Ipv4Addr) -> Self {
        DnsClient {
            server,
            retx: RetxConfig::default(),
            plan: Vec::new(),
            traffgen: None,
            pending: HashMap::new(),
            events: TimeEventSet::new(),
            outcomes: Vec::new(),
        }
    }

    pub fn with_retx(mut self, retx: RetxConfig) -> Self {
        self.retx = retx;
        self
    }

    pub fn with_traffgen(mut self, cfg: TraffGenConfig) -> Self {
        self.traffgen = Some(cfg);
        self
    }

    /// Schedules a resolve at simulation time `at`.
    pub fn resolve_at(&mut self, at: SimTime, qname: DomainName, qtype: RRType) {
        self.plan.push((at, qname, qtype, None));
    }

    /// Same, with a callback fired once the outcome is known.
    pub fn resolve_at_with(
        &mut self,
        at: SimTime,
        qname: DomainName,
        qtype: RRType,
        callback: ResolveCallback,
    ) {
        self.plan.push((at, qname, qtype, Some(callback)));
    }

    /// Completed requests, in completion order.
    pub fn outcomes(&self) -> &[ResolveOutcome] {
        &self.outcomes
    }

    pub fn in_flight(&self) -> usize {
        self.pending.len()
    }

    fn sync_wakeup(&self, ctx: &mut NodeCtx<'_>) {
        ctx.set_wakeup(self.events.head_expiry());
    }

    fn send_query(&mut self, ctx: &mut NodeCtx<'_>, id: u16, qname: &DomainName, qtype: RRType) {
        let query = DnsMessage::query(id, qname.clone(), qtype, true);
        if let Some(dst) = ctx.node_by_addr(self.server) {
            ctx.stats_mut().queries_sent += 1;
            if let Err(e) = ctx.send_unicast(dst, query) {
                ctx.trace("senderr", &e.to_string());
            }
        } else {
            ctx.stats_mut().drops_no_route += 1;
        }
    }

    fn issue(
        &mut self,
        ctx: &mut NodeCtx<'_>,
        qname: DomainName,
        qtype: RRType,
        callback: Option<ResolveCallback>,
    ) {
        if self.pending.len() >= usize::from(u16::MAX) + 1 {
            // Id space exhausted; refuse rather than reuse an id.
            self.outcomes.push(ResolveOutcome {
                qname,
                qtype,
                rcode: None,
                answers: Vec::new(),
                issued_at: ctx.now(),
                rtt: Duration::ZERO,
            });
            return;
        }
        let stream = format!("client:{}", ctx.name());
        let mut id: u16 = ctx.rng(&stream).gen();
        while self.pending.contains_key(&id) {
            id = ctx.rng(&stream).gen();
        }
        let retx = self
            .events
            .insert(ctx.now() + self.retx.timeout, ClientTimer::Retx(id));
        self.pending.insert(
            id,
            Pending {
                qname: qname.clone(),
                qtype,
                issued_at: ctx.now(),
                sends: 1,
                retx,
                callback,
            },
        );
        ctx.trace("resolve", &format!("{qname} {qtype} id={id}"));
        self.send_query(ctx, id, &qname, qtype);
    }

    fn complete(
        &mut self,
        ctx: &mut NodeCtx<'_>,
        id: u16,
        rcode: Option<Rcode>,
        answers: Vec<ResourceRecord>,
    ) {
        let Some(mut pending) = self.pending.remove(&id) else {
            return;
        };
        self.events.cancel(pending.retx);
        let outcome = ResolveOutcome {
            qname: pending.qname,
            qtype: pending.qtype,
            rcode,
            answers,
            issued_at: pending.issued_at,
            rtt: ctx.now().saturating_duration_since(pending.issued_at),
        };
        if let Some(cb) = pending.callback.as_mut() {
            cb(&outcome);
        }
        self.outcomes.push(outcome);
    }

    fn tick(&mut self, ctx: &mut NodeCtx<'_>) {
        let Some(cfg) = self.traffgen.clone() else {
            return;
        };
        let stream = format!("traffgen:{}", ctx.name());
        let idx = ctx.rng(&stream).gen_range(0..cfg.queries.len());
        let (qname, qtype) = cfg.queries[idx].clone();
        self.issue(ctx, qname, qtype, None);
        let next = self.next_gap(ctx, &cfg);
        self.events.insert(ctx.now() + next, ClientTimer::Tick);
    }

    fn next_gap(&self, ctx: &mut NodeCtx<'_>, cfg: &TraffGenConfig) -> Duration {
        let stream = format!("traffgen:{}", ctx.name());
        let u: f64 = if cfg.jitter > 0.0 {
            ctx.rng(&stream).gen_range(-1.0..=1.0)
        } else {
            0.0
        };
        Duration::from_secs_f64(cfg.period * (1.0 + cfg.jitter * u))
    }
}

impl Node for DnsClient {
    fn start(&mut self, ctx: &mut NodeCtx<'_>) -> Result<(), NodeError> {
        for (i, (at, ..)) in self.plan.iter().enumerate() {
            self.events.insert(*at, ClientTimer::Issue(i));
        }
        if let Some(cfg) = self.traffgen.clone() {
            let first = self.next_gap(ctx, &cfg);
            self.events.insert(ctx.now() + first, ClientTimer::Tick);
        }
        self.sync_wakeup(ctx);
        Ok(())
    }

    fn handle_packet(&mut self, ctx: &mut NodeCtx<'_>, pkt: &SimPacket) -> Result<(), NodeError> {
        let msg = &pkt.payload;
        if !msg.flags.response {
            return Ok(());
        }
        let matched = self.pending.get(&msg.id).is_some_and(|p| {
            msg.first_question()
                .is_some_and(|q| q.qname == p.qname && q.qtype == p.qtype)
        });
        if !matched {
            ctx.stats_mut().stale_responses += 1;
            return Ok(());
        }
        self.complete(ctx, msg.id, Some(msg.flags.rcode), msg.answers.clone());
        self.sync_wakeup(ctx);
        Ok(())
    }

    fn handle_wakeup(&mut self, ctx: &mut NodeCtx<'_>) -> Result<(), NodeError> {
        while let Some((_, timer)) = self.events.pop_due(ctx.now()) {
            match timer {
                ClientTimer::Issue(i) => {
                    let (_, qname, qtype, callback) = &mut self.plan[i];
                    let (qname, qtype, callback) = (qname.clone(), *qtype, callback.take());
                    self.issue(ctx, qname, qtype, callback);
                }
                ClientTimer::Retx(id) => {
                    let Some(pending) = self.pending.get_mut(&id) else {
                        continue;
                    };
                    if pending.sends <= self.retx.retries {
                        pending.sends += 1;
                        let (qname, qtype) = (pending.qname.clone(), pending.qtype);
                        pending.retx = self
                            .events
                            .insert(ctx.now() + self.retx.timeout, ClientTimer::Retx(id));
                        ctx.trace("retx", &format!("{qname} {qtype} id={id}"));
                        self.send_query(ctx, id, &qname, qtype);
                    } else {
                        ctx.trace("timeout", &format!("id={id}"));
                        self.complete(ctx, id, None, Vec::new());
                    }
                }
                ClientTimer::Tick => self.tick(ctx),
            }
        }
        self.sync_wakeup(ctx);
        Ok(())
    }

    fn head_expiry(&self) -> Option<SimTime> {
        self.events.head_expiry()
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}
