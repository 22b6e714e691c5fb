//! Multicast DNS with DNS-SD service records.
//!
//! Each host runs a service announcer (probe, announce, reannounce) and
//! three schedulers that make mDNS frugal on a shared link:
//!
//! * probes pool for up to 250 ms and leave in one packet,
//! * queries pool for 20-120 ms, drop when the same question was heard
//!   within the last second, and carry known answers so responders can
//!   stay silent,
//! * responses pool for 20-120 ms and drop records another host already
//!   multicast with at least half our TTL.
//!
//! Shared records (PTR) may be owned by several hosts at once; unique
//! records (SRV, TXT, host A) are defended by probing and renamed on
//! conflict. Private services never appear on the multicast link: their
//! records travel in unicast bundles to paired peers, and the public
//! meta-service tells paired peers where that channel lives.

use std::any::Any;
use std::collections::{BTreeSet, HashMap};
use std::time::Duration;

use rand::Rng;

use crate::cache::{CacheKey, CacheStore};
use crate::kernel::{GroupId, Node, NodeCtx, NodeError, NodeId, SimPacket, Transport};
use crate::name::DomainName;
use crate::privacy::{self, Pairing};
use crate::time::{SimTime, TimeEventSet};
use crate::wire::{DnsMessage, DnsQuestion, MessageFlags, RRType, Rcode, Rdata, ResourceRecord};

/// Scheduler and announcer timing. Defaults follow RFC 6762 and the Avahi
/// implementation; every value is a scenario parameter.
#[derive(Debug, Clone)]
pub struct MdnsParams {
    pub probe_count: u32,
    pub probe_spacing: Duration,
    /// Upper bound of the random initial probe delay. The draw excludes
    /// zero so two hosts never probe at the exact same instant by default.
    pub probe_delay_max: Duration,
    pub announce_count: u32,
    pub announce_spacing: Duration,
    pub first_announce_delay: Duration,
    pub response_delay_min: Duration,
    pub response_delay_max: Duration,
    pub query_delay_min: Duration,
    pub query_delay_max: Duration,
    pub dup_question_window: Duration,
    pub reannounce_interval: Duration,
    pub max_renames: u32,
    pub cache_capacity: usize,
    /// TTL for shared records (PTR).
    pub shared_ttl: u32,
    /// TTL for unique records (SRV, TXT, host A).
    pub unique_ttl: u32,
}

impl Default for MdnsParams {
    fn default() -> Self {
        MdnsParams {
            probe_count: 3,
            probe_spacing: Duration::from_millis(250),
            probe_delay_max: Duration::from_millis(250),
            announce_count: 2,
            announce_spacing: Duration::from_secs(1),
            first_announce_delay: Duration::from_millis(250),
            response_delay_min: Duration::from_millis(20),
            response_delay_max: Duration::from_millis(120),
            query_delay_min: Duration::from_millis(20),
            query_delay_max: Duration::from_millis(120),
            dup_question_window: Duration::from_secs(1),
            reannounce_interval: Duration::from_secs(60),
            max_renames: 16,
            cache_capacity: 512,
            shared_ttl: 4500,
            unique_ttl: 120,
        }
    }
}

/// One configured service. The derived record set (PTR, SRV, TXT, plus the
/// host A record) is regenerated deterministically from these fields.
#[derive(Debug, Clone)]
pub struct ServiceInstance {
    pub instance: String,
    /// Service type, e.g. `_http._tcp`.
    pub stype: String,
    pub port: u16,
    pub txt: Vec<Vec<u8>>,
    /// Private services are never multicast; they travel unicast to paired
    /// peers only.
    pub private: bool,
    /// When the announcer picks the service up; zero means at start.
    pub start_at: SimTime,
    /// Fixed initial probe delay instead of the random draw. Useful for
    /// reproducing exact probe timings.
    pub probe_delay: Option<Duration>,
}

impl ServiceInstance {
    pub fn new(instance: &str, stype: &str, port: u16) -> Self {
        ServiceInstance {
            instance: instance.to_string(),
            stype: stype.to_string(),
            port,
            txt: Vec::new(),
            private: false,
            start_at: SimTime::ZERO,
            probe_delay: None,
        }
    }

    pub fn with_txt(mut self, strings: &[&str]) -> Self {
        self.txt = strings.iter().map(|s| s.as_bytes().to_vec()).collect();
        self
    }

    pub fn private(mut self) -> Self {
        self.private = true;
        self
    }

    pub fn starting_at(mut self, at: SimTime) -> Self {
        self.start_at = at;
        self
    }

    pub fn with_probe_delay(mut self, d: Duration) -> Self {
        self.probe_delay = Some(d);
        self
    }
}

/// Announcer progression for one service. Forward-only, except that a
/// conflict during probing renames the service and re-enters `Probing`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnouncerState {
    /// Not yet picked up (delayed start).
    Idle,
    Probing { round: u32 },
    Announcing { sent: u32 },
    Established,
    /// Given up after too many conflicts.
    Withdrawn,
}

/// A record a host owns, with the shared/unique distinction that drives
/// duplicate-answer suppression and conflict defense.
#[derive(Debug, Clone)]
pub struct MdnsRecord {
    pub rr: ResourceRecord,
    pub shared: bool,
}

#[derive(Debug)]
struct ServiceRuntime {
    svc: ServiceInstance,
    /// Current instance label; renames append " #n".
    label: String,
    state: AnnouncerState,
    renames: u32,
    is_meta: bool,
    probe_enqueued: SimTime,
    probe_deadline: Option<SimTime>,
    next_announce: Option<SimTime>,
    established_at: Option<SimTime>,
}

/// Externally visible per-service status.
#[derive(Debug, Clone)]
pub struct ServiceStatus {
    pub name: DomainName,
    pub state: AnnouncerState,
    pub private: bool,
    pub renames: u32,
    pub established_at: Option<SimTime>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum MdnsTimer {
    ServiceStart(usize),
    ProbeFlush,
    Announce,
    Reannounce,
    QueryFlush,
    ResponseFlush,
    OneShot(usize),
    PrivateRound,
}

struct PendingAnswer {
    rr: ResourceRecord,
    shared: bool,
}

struct PendingQuery {
    question: DnsQuestion,
    enqueued_at: SimTime,
    deadline: SimTime,
}

/// An mDNS/DNS-SD host on one multicast link.
pub struct MdnsHost {
    group: GroupId,
    params: MdnsParams,
    domain: DomainName,
    hostname: String,
    rng_stream: String,
    services: Vec<ServiceRuntime>,
    pairings: Vec<Pairing>,
    cache: CacheStore,
    /// Records learned over the private unicast channel. Never consulted
    /// for known-answer sections, so private knowledge cannot shape
    /// multicast traffic.
    private_cache: CacheStore,
    events: TimeEventSet<MdnsTimer>,
    resp_pending: Vec<PendingAnswer>,
    resp_flush_at: Option<SimTime>,
    query_pending: Vec<PendingQuery>,
    one_shots: Vec<(SimTime, DomainName, RRType)>,
    observed_questions: HashMap<(DomainName, RRType), SimTime>,
    meta_done: BTreeSet<NodeId>,
    meta_rejects: u64,
    reannounce_started: bool,
    private_round_scheduled: bool,
    max_probe_latency: Duration,
}

impl MdnsHost {
    pub fn new(group: GroupId, params: MdnsParams) -> Self {
        let cache = CacheStore::new_ttl(params.cache_capacity);
        let private_cache = CacheStore::new_ttl(params.cache_capacity);
        MdnsHost {
            group,
            params,
            domain: DomainName::parse("local").expect("static name"),
            hostname: String::new(),
            rng_stream: String::new(),
            services: Vec::new(),
            pairings: Vec::new(),
            cache,
            private_cache,
            events: TimeEventSet::new(),
            resp_pending: Vec::new(),
            resp_flush_at: None,
            query_pending: Vec::new(),
            one_shots: Vec::new(),
            observed_questions: HashMap::new(),
            meta_done: BTreeSet::new(),
            meta_rejects: 0,
            reannounce_started: false,
            private_round_scheduled: false,
            max_probe_latency: Duration::ZERO,
        }
    }

    /// Registers a service. Call before the simulation starts.
    pub fn add_service(&mut self, svc: ServiceInstance) {
        let label = svc.instance.clone();
        self.services.push(ServiceRuntime {
            svc,
            label,
            state: AnnouncerState::Idle,
            renames: 0,
            is_meta: false,
            probe_enqueued: SimTime::ZERO,
            probe_deadline: None,
            next_announce: None,
            established_at: None,
        });
    }

    /// Registers a pairing. Call before the simulation starts; the
    /// configurator keeps pairings symmetric.
    pub fn add_pairing(&mut self, pairing: Pairing) {
        self.pairings.push(pairing);
    }

    /// Schedules a one-shot query. Call before the simulation starts.
    pub fn schedule_query(&mut self, at: SimTime, qname: DomainName, qtype: RRType) {
        self.one_shots.push((at, qname, qtype));
    }

    pub fn cache(&self) -> &CacheStore {
        &self.cache
    }

    pub fn private_cache(&self) -> &CacheStore {
        &self.private_cache
    }

    pub fn max_probe_latency(&self) -> Duration {
        self.max_probe_latency
    }

    pub fn meta_rejects(&self) -> u64 {
        self.meta_rejects
    }

    pub fn service_status(&self) -> Vec<ServiceStatus> {
        self.services
            .iter()
            .map(|rt| ServiceStatus {
                name: self.instance_name(rt),
                state: rt.state,
                private: rt.svc.private,
                renames: rt.renames,
                established_at: rt.established_at,
            })
            .collect()
    }

    /// Full instance names of this host's private services.
    pub fn private_service_names(&self) -> Vec<DomainName> {
        self.services
            .iter()
            .filter(|rt| rt.svc.private)
            .map(|rt| self.instance_name(rt))
            .collect()
    }

    // -- name and record derivation --------------------------------------

    fn host_name(&self) -> DomainName {
        self.domain
            .prepend(&self.hostname)
            .expect("host label fits")
    }

    fn type_name(&self, stype: &str) -> DomainName {
        let mut labels: Vec<Vec<u8>> = stype.split('.').map(|l| l.as_bytes().to_vec()).collect();
        labels.extend(self.domain.labels().iter().cloned());
        DomainName::from_labels(labels).expect("service type fits")
    }

    fn enum_name(&self) -> DomainName {
        self.type_name("_services._dns-sd._udp")
    }

    fn instance_name(&self, rt: &ServiceRuntime) -> DomainName {
        let mut labels: Vec<Vec<u8>> = vec![rt.label.as_bytes().to_vec()];
        labels.extend(
            rt.svc
                .stype
                .split('.')
                .map(|l| l.as_bytes().to_vec()),
        );
        labels.extend(self.domain.labels().iter().cloned());
        DomainName::from_labels(labels).expect("instance name fits")
    }

    fn host_a(&self, ctx: &NodeCtx<'_>) -> MdnsRecord {
        MdnsRecord {
            rr: ResourceRecord::new(
                self.host_name(),
                self.params.unique_ttl,
                Rdata::A(ctx.node_addr(ctx.id)),
            ),
            shared: false,
        }
    }

    /// PTR, SRV, TXT for one service, in that order.
    fn service_records(&self, rt: &ServiceRuntime) -> Vec<MdnsRecord> {
        let instance = self.instance_name(rt);
        let txt = if rt.svc.txt.is_empty() {
            vec![Vec::new()]
        } else {
            rt.svc.txt.clone()
        };
        vec![
            MdnsRecord {
                rr: ResourceRecord::new(
                    self.type_name(&rt.svc.stype),
                    self.params.shared_ttl,
                    Rdata::Ptr(instance.clone()),
                ),
                shared: true,
            },
            MdnsRecord {
                rr: ResourceRecord::new(
                    instance.clone(),
                    self.params.unique_ttl,
                    Rdata::Srv {
                        priority: 0,
                        weight: 0,
                        port: rt.svc.port,
                        target: self.host_name(),
                    },
                ),
                shared: false,
            },
            MdnsRecord {
                rr: ResourceRecord::new(instance, self.params.unique_ttl, Rdata::Txt(txt)),
                shared: false,
            },
        ]
    }

    /// Proposed unique records defended while probing.
    fn probe_records(&self, rt: &ServiceRuntime) -> Vec<ResourceRecord> {
        self.service_records(rt)
            .into_iter()
            .filter(|r| !r.shared)
            .map(|r| r.rr)
            .collect()
    }

    fn is_active(rt: &ServiceRuntime) -> bool {
        !rt.svc.private
            && matches!(
                rt.state,
                AnnouncerState::Announcing { .. } | AnnouncerState::Established
            )
    }

    /// Owned records matching one question: direct matches plus the DNS-SD
    /// record bundle (a PTR answer drags SRV, TXT and the host address
    /// along). The service-type enumeration name answers with one shared
    /// PTR per active type; those records exist only in responses.
    fn owned_matching(&self, ctx: &NodeCtx<'_>, q: &DnsQuestion) -> Vec<MdnsRecord> {
        let mut out: Vec<MdnsRecord> = Vec::new();
        let push = |out: &mut Vec<MdnsRecord>, rec: MdnsRecord| {
            if !out
                .iter()
                .any(|r| r.rr.owner == rec.rr.owner && r.rr.rdata == rec.rr.rdata)
            {
                out.push(rec);
            }
        };
        let wants = |rtype: RRType| q.qtype == RRType::Any || q.qtype == rtype;
        let mut any_active = false;
        for rt in self.services.iter().filter(|rt| Self::is_active(rt)) {
            any_active = true;
            let records = self.service_records(rt);
            let ptr_hit = records[0].rr.owner == q.qname && wants(RRType::Ptr);
            if ptr_hit {
                for rec in &records {
                    push(&mut out, rec.clone());
                }
                push(&mut out, self.host_a(ctx));
            } else {
                for rec in &records {
                    if rec.rr.owner == q.qname && wants(rec.rr.rtype()) {
                        push(&mut out, rec.clone());
                        if rec.rr.rtype() == RRType::Srv {
                            push(&mut out, self.host_a(ctx));
                        }
                    }
                }
            }
            if q.qname == self.enum_name() && wants(RRType::Ptr) {
                push(
                    &mut out,
                    MdnsRecord {
                        rr: ResourceRecord::new(
                            self.enum_name(),
                            self.params.shared_ttl,
                            Rdata::Ptr(self.type_name(&rt.svc.stype)),
                        ),
                        shared: true,
                    },
                );
            }
        }
        if any_active && q.qname == self.host_name() && wants(RRType::A) {
            push(&mut out, self.host_a(ctx));
        }
        out
    }

    // -- announcer --------------------------------------------------------

    fn draw_delay(&self, ctx: &mut NodeCtx<'_>, lo: Duration, hi: Duration) -> Duration {
        let lo = lo.as_nanos() as u64;
        let hi = hi.as_nanos() as u64;
        Duration::from_nanos(ctx.rng(&self.rng_stream).gen_range(lo..=hi))
    }

    /// Initial probe delay: the configured override, or uniform in
    /// (0, probe_delay_max].
    fn initial_probe_delay(&self, ctx: &mut NodeCtx<'_>, idx: usize) -> Duration {
        if let Some(d) = self.services[idx].svc.probe_delay {
            return d;
        }
        let hi = self.params.probe_delay_max.as_nanos() as u64;
        Duration::from_nanos(ctx.rng(&self.rng_stream).gen_range(1..=hi))
    }

    fn activate_service(&mut self, ctx: &mut NodeCtx<'_>, idx: usize) {
        let now = ctx.now();
        if self.services[idx].svc.private {
            self.services[idx].state = AnnouncerState::Established;
            self.services[idx].established_at = Some(now);
            if !self.private_round_scheduled && !self.pairings.is_empty() {
                self.private_round_scheduled = true;
                let d = self.draw_delay(ctx, Duration::from_nanos(1), self.params.probe_delay_max);
                self.events.insert(now + d, MdnsTimer::PrivateRound);
            }
            return;
        }
        self.begin_probing(ctx, idx);
    }

    fn begin_probing(&mut self, ctx: &mut NodeCtx<'_>, idx: usize) {
        let now = ctx.now();
        let d = self.initial_probe_delay(ctx, idx);
        let rt = &mut self.services[idx];
        rt.state = AnnouncerState::Probing { round: 0 };
        rt.probe_enqueued = now;
        rt.probe_deadline = Some(now + d);
        self.events.insert(now + d, MdnsTimer::ProbeFlush);
    }

    /// Sends every pending probe in one packet: questions for the probed
    /// names, proposed records in the authority section. Fires only when at
    /// least one probe is due, then packs all of them, so a later-enqueued
    /// probe may leave early (never late).
    fn flush_probes(&mut self, ctx: &mut NodeCtx<'_>) -> Result<(), NodeError> {
        let now = ctx.now();
        let due = self.services.iter().any(|rt| {
            matches!(rt.state, AnnouncerState::Probing { .. })
                && rt.probe_deadline.is_some_and(|d| d <= now)
        });
        if !due {
            return Ok(());
        }
        let batch: Vec<usize> = (0..self.services.len())
            .filter(|&i| {
                matches!(self.services[i].state, AnnouncerState::Probing { .. })
                    && self.services[i].probe_deadline.is_some()
            })
            .collect();
        let mut msg = DnsMessage::default();
        let bound = self.params.probe_delay_max.max(self.params.probe_spacing);
        for &i in &batch {
            let rt = &self.services[i];
            let latency = now.saturating_duration_since(rt.probe_enqueued);
            assert!(latency <= bound, "probe left the schedule late");
            if latency > self.max_probe_latency {
                self.max_probe_latency = latency;
            }
            let name = self.instance_name(rt);
            if !msg.questions.iter().any(|q| q.qname == name) {
                msg.questions.push(DnsQuestion::new(name, RRType::Any));
            }
            msg.authorities.extend(self.probe_records(rt));
        }
        ctx.trace("probe", &format!("{} names", msg.questions.len()));
        ctx.send_multicast(self.group, msg)?;
        ctx.stats_mut().queries_sent += 1;
        for &i in &batch {
            let rt = &mut self.services[i];
            let AnnouncerState::Probing { round } = rt.state else {
                continue;
            };
            if round + 1 >= self.params.probe_count {
                rt.state = AnnouncerState::Announcing { sent: 0 };
                rt.probe_deadline = None;
                let at = now + self.params.first_announce_delay;
                rt.next_announce = Some(at);
                self.events.insert(at, MdnsTimer::Announce);
            } else {
                rt.state = AnnouncerState::Probing { round: round + 1 };
                rt.probe_enqueued = now;
                let at = now + self.params.probe_spacing;
                rt.probe_deadline = Some(at);
                self.events.insert(at, MdnsTimer::ProbeFlush);
            }
        }
        Ok(())
    }

    /// One unsolicited multicast response carrying all derived records of
    /// every service whose announcement is due.
    fn flush_announcements(&mut self, ctx: &mut NodeCtx<'_>) -> Result<(), NodeError> {
        let now = ctx.now();
        let batch: Vec<usize> = (0..self.services.len())
            .filter(|&i| {
                matches!(self.services[i].state, AnnouncerState::Announcing { .. })
                    && self.services[i].next_announce.is_some_and(|a| a <= now)
            })
            .collect();
        if batch.is_empty() {
            return Ok(());
        }
        let mut records = Vec::new();
        for &i in &batch {
            for rec in self.service_records(&self.services[i]) {
                push_unique_rr(&mut records, rec.rr);
            }
        }
        push_unique_rr(&mut records, self.host_a(ctx).rr);
        let msg = unsolicited_response(records);
        ctx.trace("announce", &format!("{} services", batch.len()));
        ctx.send_multicast(self.group, msg)?;
        ctx.stats_mut().responses_sent += 1;
        let mut established_public = false;
        for &i in &batch {
            let rt = &mut self.services[i];
            let AnnouncerState::Announcing { sent } = rt.state else {
                continue;
            };
            if sent + 1 >= self.params.announce_count {
                rt.state = AnnouncerState::Established;
                rt.established_at = Some(now);
                rt.next_announce = None;
                if !rt.is_meta {
                    established_public = true;
                }
            } else {
                rt.state = AnnouncerState::Announcing { sent: sent + 1 };
                let at = now + self.params.announce_spacing;
                rt.next_announce = Some(at);
                self.events.insert(at, MdnsTimer::Announce);
            }
        }
        if established_public && !self.reannounce_started {
            self.reannounce_started = true;
            self.events
                .insert(now + self.params.reannounce_interval, MdnsTimer::Reannounce);
        }
        Ok(())
    }

    /// Periodic reannouncement of established services. The meta-service is
    /// announced once and excluded here; its records are static and paired
    /// peers have long since queried it.
    fn reannounce(&mut self, ctx: &mut NodeCtx<'_>) -> Result<(), NodeError> {
        let now = ctx.now();
        let mut records = Vec::new();
        let mut count = 0usize;
        for rt in &self.services {
            if rt.is_meta || rt.svc.private || rt.state != AnnouncerState::Established {
                continue;
            }
            count += 1;
            for rec in self.service_records(rt) {
                push_unique_rr(&mut records, rec.rr);
            }
        }
        if count > 0 {
            push_unique_rr(&mut records, self.host_a(ctx).rr);
            let msg = unsolicited_response(records);
            ctx.trace("reannounce", &format!("{count} services"));
            ctx.send_multicast(self.group, msg)?;
            ctx.stats_mut().responses_sent += 1;
        }
        self.events
            .insert(now + self.params.reannounce_interval, MdnsTimer::Reannounce);
        Ok(())
    }

    // -- query scheduler --------------------------------------------------

    fn question_observed(&self, qname: &DomainName, qtype: RRType, now: SimTime) -> bool {
        self.observed_questions
            .get(&(qname.clone(), qtype))
            .is_some_and(|&t| now < t + self.params.dup_question_window)
    }

    fn post_query(&mut self, ctx: &mut NodeCtx<'_>, qname: DomainName, qtype: RRType) {
        let now = ctx.now();
        if self.question_observed(&qname, qtype, now) {
            ctx.trace("suppress-query", &format!("{qname} {qtype}"));
            ctx.stats_mut().suppressed_queries += 1;
            return;
        }
        let delay = self.draw_delay(ctx, self.params.query_delay_min, self.params.query_delay_max);
        let deadline = now + delay;
        self.query_pending.push(PendingQuery {
            question: DnsQuestion::new(qname, qtype),
            enqueued_at: now,
            deadline,
        });
        self.events.insert(deadline, MdnsTimer::QueryFlush);
    }

    /// Known answers for one question: cached records with at least half
    /// their original TTL left, carried so responders can omit them.
    fn known_answers(&self, q: &DnsQuestion, now: SimTime) -> Vec<ResourceRecord> {
        if q.qtype == RRType::Any {
            return Vec::new();
        }
        let key = CacheKey::new(q.qname.clone(), q.qtype);
        let Some(entry) = self.cache.peek(&key, now) else {
            return Vec::new();
        };
        entry
            .records
            .iter()
            .filter_map(|rr| {
                let remaining = entry.remaining_secs(rr, now);
                (remaining * 2 >= rr.ttl as u64).then(|| ResourceRecord {
                    ttl: remaining as u32,
                    ..rr.clone()
                })
            })
            .collect()
    }

    fn flush_queries(&mut self, ctx: &mut NodeCtx<'_>) -> Result<(), NodeError> {
        let now = ctx.now();
        if !self.query_pending.iter().any(|p| p.deadline <= now) {
            return Ok(());
        }
        let pending = std::mem::take(&mut self.query_pending);
        let mut msg = DnsMessage::default();
        for p in pending {
            assert!(
                now.saturating_duration_since(p.enqueued_at) <= self.params.query_delay_max,
                "query left the schedule late"
            );
            // The link may have answered the question while this one waited.
            if self.question_observed(&p.question.qname, p.question.qtype, now) {
                ctx.trace(
                    "suppress-query",
                    &format!("{} {}", p.question.qname, p.question.qtype),
                );
                ctx.stats_mut().suppressed_queries += 1;
                continue;
            }
            if msg.questions.contains(&p.question) {
                continue;
            }
            for known in self.known_answers(&p.question, now) {
                push_unique_rr(&mut msg.answers, known);
            }
            msg.questions.push(p.question);
        }
        if msg.questions.is_empty() {
            return Ok(());
        }
        for q in &msg.questions {
            self.observed_questions
                .insert((q.qname.clone(), q.qtype), now);
        }
        ctx.trace("query", &format!("{} questions", msg.questions.len()));
        ctx.send_multicast(self.group, msg)?;
        ctx.stats_mut().queries_sent += 1;
        Ok(())
    }

    // -- response scheduler -----------------------------------------------

    fn post_answers(&mut self, ctx: &mut NodeCtx<'_>, query: &DnsMessage) {
        let now = ctx.now();
        let mut posted = false;
        for q in &query.questions {
            for rec in self.owned_matching(ctx, q) {
                let listed = query.answers.iter().any(|qa| {
                    qa.owner == rec.rr.owner
                        && qa.rdata == rec.rr.rdata
                        && (qa.ttl as u64) * 2 >= rec.rr.ttl as u64
                });
                if listed {
                    ctx.trace("suppress-response", &format!("known {}", rec.rr.owner));
                    ctx.stats_mut().suppressed_responses += 1;
                    continue;
                }
                if self
                    .resp_pending
                    .iter()
                    .any(|p| p.rr.owner == rec.rr.owner && p.rr.rdata == rec.rr.rdata)
                {
                    continue;
                }
                self.resp_pending.push(PendingAnswer {
                    rr: rec.rr,
                    shared: rec.shared,
                });
                posted = true;
            }
        }
        if posted && self.resp_flush_at.is_none() {
            let delay = self.draw_delay(
                ctx,
                self.params.response_delay_min,
                self.params.response_delay_max,
            );
            let at = now + delay;
            self.resp_flush_at = Some(at);
            self.events.insert(at, MdnsTimer::ResponseFlush);
        }
    }

    fn flush_responses(&mut self, ctx: &mut NodeCtx<'_>) -> Result<(), NodeError> {
        let now = ctx.now();
        let Some(at) = self.resp_flush_at else {
            return Ok(());
        };
        if now < at {
            return Ok(());
        }
        self.resp_flush_at = None;
        if self.resp_pending.is_empty() {
            return Ok(());
        }
        let records: Vec<ResourceRecord> =
            self.resp_pending.drain(..).map(|p| p.rr).collect();
        let msg = unsolicited_response(records);
        ctx.trace("response", &format!("{} records", msg.answers.len()));
        ctx.send_multicast(self.group, msg)?;
        ctx.stats_mut().responses_sent += 1;
        Ok(())
    }

    // -- incoming traffic -------------------------------------------------

    fn on_mcast_query(&mut self, ctx: &mut NodeCtx<'_>, msg: &DnsMessage) {
        let now = ctx.now();
        if msg.questions.is_empty() {
            ctx.stats_mut().malformed += 1;
            return;
        }
        for q in &msg.questions {
            self.observed_questions
                .insert((q.qname.clone(), q.qtype), now);
        }
        // Probe-vs-probe conflict: both sides still probing the same name
        // with different data. The lexicographically greater record wins;
        // the loser renames.
        if !msg.authorities.is_empty() {
            let probing: Vec<usize> = (0..self.services.len())
                .filter(|&i| matches!(self.services[i].state, AnnouncerState::Probing { .. }))
                .collect();
            for i in probing {
                let name = self.instance_name(&self.services[i]);
                let ours = self.probe_records(&self.services[i]);
                let lost = msg.authorities.iter().any(|theirs| {
                    theirs.owner == name
                        && ours.iter().any(|our| {
                            our.rtype() == theirs.rtype()
                                && our.rdata != theirs.rdata
                                && theirs.rdata_wire() > our.rdata_wire()
                        })
                });
                if lost {
                    self.rename(ctx, i);
                }
            }
        }
        self.post_answers(ctx, msg);
    }

    fn on_mcast_response(&mut self, ctx: &mut NodeCtx<'_>, src: NodeId, msg: &DnsMessage) {
        let now = ctx.now();
        if msg.records().next().is_none() {
            ctx.stats_mut().malformed += 1;
            return;
        }
        // Duplicate-answer suppression: a shared record another host just
        // multicast with at least half our TTL need not be repeated.
        let mut kept = Vec::with_capacity(self.resp_pending.len());
        for p in self.resp_pending.drain(..) {
            let covered = p.shared
                && msg.records().any(|rr| {
                    rr.owner == p.rr.owner
                        && rr.rdata == p.rr.rdata
                        && (rr.ttl as u64) * 2 >= p.rr.ttl as u64
                });
            if covered {
                ctx.trace("suppress-response", &format!("dup {}", p.rr.owner));
                ctx.stats_mut().suppressed_responses += 1;
            } else {
                kept.push(p);
            }
        }
        self.resp_pending = kept;
        // Conflict detection: someone answers authoritatively with our
        // probed name but different data. The established owner wins.
        let probing: Vec<usize> = (0..self.services.len())
            .filter(|&i| matches!(self.services[i].state, AnnouncerState::Probing { .. }))
            .collect();
        for i in probing {
            let name = self.instance_name(&self.services[i]);
            let ours = self.probe_records(&self.services[i]);
            let conflict = msg.records().any(|rr| {
                rr.owner == name
                    && ours
                        .iter()
                        .any(|our| our.rtype() == rr.rtype() && our.rdata != rr.rdata)
            });
            if conflict {
                self.rename(ctx, i);
            }
        }
        self.merge_into_cache(msg, now);
        self.maybe_meta_query(ctx, src, msg);
    }

    /// Merges each incoming RRset with still-live cached records of the same
    /// set, so a shared RRset accumulates members from several hosts.
    fn merge_into_cache(&mut self, msg: &DnsMessage, now: SimTime) {
        let mut sets: Vec<((DomainName, RRType), Vec<ResourceRecord>)> = Vec::new();
        for rr in msg.records() {
            let k = (rr.owner.clone(), rr.rtype());
            match sets.iter_mut().find(|(key, _)| *key == k) {
                Some((_, v)) => v.push(rr.clone()),
                None => sets.push((k, vec![rr.clone()])),
            }
        }
        for ((name, rtype), mut records) in sets {
            let key = CacheKey::new(name, rtype);
            if let Some(entry) = self.cache.peek(&key, now) {
                let old: Vec<(ResourceRecord, u64)> = entry
                    .records
                    .iter()
                    .map(|rr| (rr.clone(), entry.remaining_secs(rr, now)))
                    .collect();
                for (rr, remaining) in old {
                    if remaining > 0 && !records.iter().any(|r| r.rdata == rr.rdata) {
                        records.push(ResourceRecord {
                            ttl: remaining as u32,
                            ..rr
                        });
                    }
                }
            }
            self.cache.put(key, records, now);
        }
    }

    /// On seeing a paired peer's meta-service, query it once over unicast,
    /// carrying our pairing identifier as proof.
    fn maybe_meta_query(&mut self, ctx: &mut NodeCtx<'_>, src: NodeId, msg: &DnsMessage) {
        let Some(pairing) = self.pairings.iter().find(|p| p.peer == src && p.established) else {
            return;
        };
        if self.meta_done.contains(&src) {
            return;
        }
        let meta_type = self.type_name(privacy::META_TYPE);
        let own_meta = self
            .services
            .iter()
            .find(|rt| rt.is_meta)
            .map(|rt| self.instance_name(rt));
        let peer_meta = msg.records().find_map(|rr| {
            if rr.owner.is_subdomain_of(&meta_type) && Some(&rr.owner) != own_meta.as_ref() {
                return Some(rr.owner.clone());
            }
            if rr.owner == meta_type {
                if let Rdata::Ptr(target) = &rr.rdata {
                    if Some(target) != own_meta.as_ref() {
                        return Some(target.clone());
                    }
                }
            }
            None
        });
        let Some(peer_meta) = peer_meta else {
            return;
        };
        self.meta_done.insert(src);
        let mut query = DnsMessage::query(0, peer_meta.clone(), RRType::Txt, false);
        query.answers.push(ResourceRecord::new(
            peer_meta.clone(),
            0,
            Rdata::Txt(privacy::pairing_payload(&pairing.id)),
        ));
        ctx.trace("meta-query", &format!("{peer_meta}"));
        if ctx.send_unicast(src, query).is_ok() {
            ctx.stats_mut().queries_sent += 1;
        }
    }

    /// A unicast query can only be a meta-service request. Paired queriers
    /// with the right identifier get the private channel parameters;
    /// everyone else gets silence.
    fn on_ucast_query(&mut self, ctx: &mut NodeCtx<'_>, src: NodeId, msg: &DnsMessage) {
        let Some(q) = msg.first_question() else {
            ctx.stats_mut().malformed += 1;
            return;
        };
        let own_meta = self
            .services
            .iter()
            .find(|rt| rt.is_meta)
            .map(|rt| self.instance_name(rt));
        if own_meta.as_ref() != Some(&q.qname)
            || !(q.qtype == RRType::Txt || q.qtype == RRType::Any)
        {
            return;
        }
        let authorized = match privacy::extract_pairing_id(msg) {
            Some(id) => self
                .pairings
                .iter()
                .any(|p| p.peer == src && p.id == id && p.established),
            None => false,
        };
        if !authorized {
            self.meta_rejects += 1;
            let who = ctx.node_name(src).to_string();
            ctx.trace("meta-reject", &who);
            return;
        }
        let mut reply = DnsMessage::response_to(msg, Rcode::NoError);
        reply.flags.authoritative = true;
        reply.answers.push(ResourceRecord::new(
            q.qname.clone(),
            self.params.unique_ttl,
            Rdata::Txt(privacy::channel_params_txt(ctx.addr(), privacy::META_PORT)),
        ));
        let who = ctx.node_name(src).to_string();
        ctx.trace("meta-reply", &who);
        if ctx.send_unicast(src, reply).is_ok() {
            ctx.stats_mut().responses_sent += 1;
        }
    }

    /// Unicast responses arrive over the private channel from paired peers;
    /// their records live in the private cache, which never feeds multicast
    /// behaviour.
    fn on_ucast_response(&mut self, ctx: &mut NodeCtx<'_>, src: NodeId, msg: &DnsMessage) {
        if !self.pairings.iter().any(|p| p.peer == src && p.established) {
            ctx.stats_mut().stale_responses += 1;
            return;
        }
        let now = ctx.now();
        let mut sets: Vec<((DomainName, RRType), Vec<ResourceRecord>)> = Vec::new();
        for rr in msg.records() {
            let k = (rr.owner.clone(), rr.rtype());
            match sets.iter_mut().find(|(key, _)| *key == k) {
                Some((_, v)) => v.push(rr.clone()),
                None => sets.push((k, vec![rr.clone()])),
            }
        }
        for ((name, rtype), records) in sets {
            self.private_cache
                .put(CacheKey::new(name, rtype), records, now);
        }
    }

    // -- conflicts and privacy rounds --------------------------------------

    fn rename(&mut self, ctx: &mut NodeCtx<'_>, idx: usize) {
        let now = ctx.now();
        let old = self.instance_name(&self.services[idx]);
        self.services[idx].renames += 1;
        let renames = self.services[idx].renames;
        if renames > self.params.max_renames {
            let rt = &mut self.services[idx];
            rt.state = AnnouncerState::Withdrawn;
            rt.probe_deadline = None;
            rt.next_announce = None;
            ctx.trace("withdraw", &format!("{old} after {renames} conflicts"));
            return;
        }
        self.services[idx].label =
            format!("{} #{}", self.services[idx].svc.instance, renames + 1);
        ctx.trace(
            "conflict",
            &format!("{old} renamed to {}", self.services[idx].label),
        );
        let d = self.initial_probe_delay(ctx, idx);
        let rt = &mut self.services[idx];
        rt.state = AnnouncerState::Probing { round: 0 };
        rt.probe_enqueued = now;
        rt.probe_deadline = Some(now + d);
        self.events.insert(now + d, MdnsTimer::ProbeFlush);
    }

    /// Sends the full private record bundle unicast to every paired peer.
    /// Re-sent on the reannounce interval, mirroring public reannouncement.
    fn private_round(&mut self, ctx: &mut NodeCtx<'_>) -> Result<(), NodeError> {
        let now = ctx.now();
        let mut records = Vec::new();
        for rt in &self.services {
            if !rt.svc.private || rt.state != AnnouncerState::Established {
                continue;
            }
            for rec in self.service_records(rt) {
                push_unique_rr(&mut records, rec.rr);
            }
        }
        if !records.is_empty() {
            push_unique_rr(&mut records, self.host_a(ctx).rr);
            let peers: Vec<NodeId> = self
                .pairings
                .iter()
                .filter(|p| p.established)
                .map(|p| p.peer)
                .collect();
            for peer in peers {
                let msg = unsolicited_response(records.clone());
                let who = ctx.node_name(peer).to_string();
                ctx.trace("bundle", &who);
                if ctx.send_unicast(peer, msg).is_ok() {
                    ctx.stats_mut().responses_sent += 1;
                }
            }
        }
        self.events
            .insert(now + self.params.reannounce_interval, MdnsTimer::PrivateRound);
        Ok(())
    }

    fn sync(&self, ctx: &mut NodeCtx<'_>) {
        ctx.set_wakeup(self.events.head_expiry());
    }
}

fn push_unique_rr(records: &mut Vec<ResourceRecord>, rr: ResourceRecord) {
    if !records
        .iter()
        .any(|r| r.owner == rr.owner && r.rdata == rr.rdata)
    {
        records.push(rr);
    }
}

/// An unsolicited (or pooled) multicast response: no question, records in
/// the answer section, authoritative bit set.
fn unsolicited_response(records: Vec<ResourceRecord>) -> DnsMessage {
    DnsMessage {
        id: 0,
        flags: MessageFlags {
            response: true,
            authoritative: true,
            ..MessageFlags::default()
        },
        answers: records,
        ..DnsMessage::default()
    }
}

impl Node for MdnsHost {
    fn start(&mut self, ctx: &mut NodeCtx<'_>) -> Result<(), NodeError> {
        self.hostname = ctx.name().to_string();
        self.rng_stream = format!("mdns:{}", self.hostname);
        if self.services.iter().any(|rt| rt.svc.private)
            && !self.services.iter().any(|rt| rt.is_meta)
        {
            let meta = ServiceInstance {
                instance: self.hostname.clone(),
                stype: privacy::META_TYPE.to_string(),
                port: privacy::META_PORT,
                txt: privacy::meta_txt(privacy::META_PORT, &self.pairings),
                private: false,
                start_at: SimTime::ZERO,
                probe_delay: None,
            };
            self.add_service(meta);
            self.services.last_mut().expect("just pushed").is_meta = true;
        }
        let now = ctx.now();
        for idx in 0..self.services.len() {
            let at = self.services[idx].svc.start_at;
            if at > now {
                self.events.insert(at, MdnsTimer::ServiceStart(idx));
            } else {
                self.activate_service(ctx, idx);
            }
        }
        for (i, (at, _, _)) in self.one_shots.iter().enumerate() {
            self.events.insert((*at).max(now), MdnsTimer::OneShot(i));
        }
        self.sync(ctx);
        Ok(())
    }

    fn handle_packet(&mut self, ctx: &mut NodeCtx<'_>, pkt: &SimPacket) -> Result<(), NodeError> {
        match (pkt.transport, pkt.payload.flags.response) {
            (Transport::Multicast, false) => self.on_mcast_query(ctx, &pkt.payload),
            (Transport::Multicast, true) => self.on_mcast_response(ctx, pkt.src, &pkt.payload),
            (Transport::Unicast, false) => self.on_ucast_query(ctx, pkt.src, &pkt.payload),
            (Transport::Unicast, true) => self.on_ucast_response(ctx, pkt.src, &pkt.payload),
        }
        self.sync(ctx);
        Ok(())
    }

    fn handle_wakeup(&mut self, ctx: &mut NodeCtx<'_>) -> Result<(), NodeError> {
        while let Some((_, timer)) = self.events.pop_due(ctx.now()) {
            match timer {
                MdnsTimer::ServiceStart(idx) => self.activate_service(ctx, idx),
                MdnsTimer::ProbeFlush => self.flush_probes(ctx)?,
                MdnsTimer::Announce => self.flush_announcements(ctx)?,
                MdnsTimer::Reannounce => self.reannounce(ctx)?,
                MdnsTimer::QueryFlush => self.flush_queries(ctx)?,
                MdnsTimer::ResponseFlush => self.flush_responses(ctx)?,
                MdnsTimer::OneShot(i) => {
                    let (_, qname, qtype) = self.one_shots[i].clone();
                    self.post_query(ctx, qname, qtype);
                }
                MdnsTimer::PrivateRound => self.private_round(ctx)?,
            }
        }
        self.sync(ctx);
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
