//! The release gate: one test per acceptance criterion. Each prints a
//! `criterion NN (...): PASS` line (visible with `--nocapture`); a failed
//! criterion fails its test.

use std::collections::BTreeMap;
use std::net::{Ipv4Addr, Ipv6Addr};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use simnet::cache::{CacheKey, CacheStore};
use simnet::client::DnsClient;
use simnet::experiment::{build_sim, run_csv, run_scenario, sweep, sweep_csv};
use simnet::kernel::{rng_stream, GroupId, NodeId, Sim, SimBuilder, SimPacket};
use simnet::mdns::{MdnsHost, MdnsParams, ServiceInstance};
use simnet::name::DomainName;
use simnet::privacy::audit_sim;
use simnet::scenario::ScenarioConfig;
use simnet::server::{DnsServer, RootHints};
use simnet::time::SimTime;
use simnet::wire::{
    message_wire_size, parse_message, serialize_message, DnsMessage, DnsQuestion, MessageFlags,
    RRType, Rcode, Rdata, ResourceRecord,
};
use simnet::zone::ZoneConfig;

fn pass(n: u32, label: &str) {
    println!("criterion {n:02} ({label}): PASS");
}

fn name(s: &str) -> DomainName {
    s.parse().unwrap()
}

fn ip(a: u8, b: u8, c: u8, d: u8) -> Ipv4Addr {
    Ipv4Addr::new(a, b, c, d)
}

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn load_scenario(rel: &str) -> ScenarioConfig {
    ScenarioConfig::load(&fixture(rel)).unwrap()
}

fn load_zone(rel: &str) -> ZoneConfig {
    let text = std::fs::read_to_string(fixture(rel)).unwrap();
    ZoneConfig::parse(&text).unwrap()
}

// ---------------------------------------------------------------------------
// 1. Zone fidelity

#[test]
fn criterion_01_zone_fidelity() {
    let zone = load_zone("zones/uni-konstanz.de.zone");
    assert_eq!(zone.record_count(), 10);
    assert!(zone.iter_records().all(|rr| rr.ttl == 86400));

    let a_of = |owner: &str| -> Ipv4Addr {
        let set = zone.rrset(&name(owner), RRType::A);
        assert_eq!(set.len(), 1, "{owner} has one address record");
        match set[0].rdata {
            Rdata::A(addr) => addr,
            ref other => panic!("unexpected rdata {other:?}"),
        }
    };
    assert_eq!(a_of("pan.rz.uni-konstanz.de"), ip(134, 34, 3, 3));
    assert_eq!(a_of("uranos.rz.uni-konstanz.de"), ip(134, 34, 3, 2));
    assert_eq!(a_of("imap.uni-konstanz.de"), ip(134, 34, 240, 42));
    assert_eq!(a_of("uni-konstanz.de"), ip(134, 34, 240, 80));

    let ns: Vec<&Rdata> = zone
        .rrset(&name("uni-konstanz.de"), RRType::Ns)
        .iter()
        .map(|rr| &rr.rdata)
        .collect();
    assert_eq!(
        ns,
        vec![
            &Rdata::Ns(name("pan.rz.uni-konstanz.de")),
            &Rdata::Ns(name("uranos.rz.uni-konstanz.de")),
        ]
    );
    let mx = zone.rrset(&name("uni-konstanz.de"), RRType::Mx);
    assert_eq!(
        mx[0].rdata,
        Rdata::Mx {
            preference: 0,
            exchange: name("imap.uni-konstanz.de")
        }
    );
    let cname = zone.rrset(&name("www.uni-konstanz.de"), RRType::Cname);
    assert_eq!(cname[0].rdata, Rdata::Cname(name("proxy-neu.rz.uni-konstanz.de")));
    match &zone.soa.rdata {
        Rdata::Soa { mname, serial, .. } => {
            assert_eq!(mname, &name("pan.rz.uni-konstanz.de"));
            assert_eq!(*serial, 20030808000);
        }
        other => panic!("unexpected rdata {other:?}"),
    }
    pass(1, "zone fidelity");
}

// ---------------------------------------------------------------------------
// 2. Wire round-trip

const NAME_LABELS: &[&str] = &[
    "local", "example", "de", "www", "mail", "rz", "uni-konstanz", "host", "service", "_tcp",
    "_udp", "a",
];

fn random_name(rng: &mut ChaCha8Rng, pool: &mut Vec<DomainName>) -> DomainName {
    // Reuse earlier names often so compression has targets.
    if !pool.is_empty() && rng.gen_bool(0.4) {
        return pool[rng.gen_range(0..pool.len())].clone();
    }
    let count = rng.gen_range(1..=4);
    let labels: Vec<&str> = (0..count)
        .map(|_| NAME_LABELS[rng.gen_range(0..NAME_LABELS.len())])
        .collect();
    let n = DomainName::from_labels(labels).unwrap();
    pool.push(n.clone());
    n
}

fn random_rdata(rng: &mut ChaCha8Rng, pool: &mut Vec<DomainName>) -> Rdata {
    match rng.gen_range(0..9) {
        0 => Rdata::A(Ipv4Addr::from(rng.gen::<u32>())),
        1 => Rdata::Aaaa(Ipv6Addr::from(rng.gen::<u128>())),
        2 => Rdata::Ns(random_name(rng, pool)),
        3 => Rdata::Cname(random_name(rng, pool)),
        4 => Rdata::Ptr(random_name(rng, pool)),
        5 => Rdata::Mx {
            preference: rng.gen(),
            exchange: random_name(rng, pool),
        },
        6 => Rdata::Soa {
            mname: random_name(rng, pool),
            rname: random_name(rng, pool),
            serial: rng.gen::<u32>() as u64,
            refresh: rng.gen(),
            retry: rng.gen(),
            expire: rng.gen(),
            minimum: rng.gen(),
        },
        7 => Rdata::Txt(
            (0..rng.gen_range(1..=3))
                .map(|_| (0..rng.gen_range(0..=12)).map(|_| rng.gen()).collect())
                .collect(),
        ),
        _ => Rdata::Srv {
            priority: rng.gen(),
            weight: rng.gen(),
            port: rng.gen(),
            target: random_name(rng, pool),
        },
    }
}

fn random_message(rng: &mut ChaCha8Rng) -> DnsMessage {
    const QTYPES: &[RRType] = &[
        RRType::A,
        RRType::Aaaa,
        RRType::Ns,
        RRType::Ptr,
        RRType::Srv,
        RRType::Cname,
        RRType::Txt,
        RRType::Mx,
        RRType::Soa,
        RRType::Any,
    ];
    const RCODES: &[Rcode] = &[
        Rcode::NoError,
        Rcode::FormErr,
        Rcode::ServFail,
        Rcode::NxDomain,
        Rcode::NotImp,
    ];
    let mut pool = Vec::new();
    let mut m = DnsMessage {
        id: rng.gen(),
        flags: MessageFlags {
            response: rng.gen_bool(0.5),
            opcode: rng.gen_range(0..16),
            authoritative: rng.gen_bool(0.3),
            truncated: rng.gen_bool(0.1),
            recursion_desired: rng.gen_bool(0.5),
            recursion_available: rng.gen_bool(0.5),
            rcode: RCODES[rng.gen_range(0..RCODES.len())],
        },
        ..DnsMessage::default()
    };
    for _ in 0..rng.gen_range(0..=2) {
        m.questions.push(DnsQuestion::new(
            random_name(rng, &mut pool),
            QTYPES[rng.gen_range(0..QTYPES.len())],
        ));
    }
    let ttl_cap = i32::MAX as u32;
    for _ in 0..rng.gen_range(0..=3) {
        let rdata = random_rdata(rng, &mut pool);
        m.answers.push(ResourceRecord::new(
            random_name(rng, &mut pool),
            rng.gen_range(0..=ttl_cap),
            rdata,
        ));
    }
    for _ in 0..rng.gen_range(0..=2) {
        let rdata = random_rdata(rng, &mut pool);
        m.authorities.push(ResourceRecord::new(
            random_name(rng, &mut pool),
            rng.gen_range(0..=ttl_cap),
            rdata,
        ));
    }
    for _ in 0..rng.gen_range(0..=2) {
        let rdata = random_rdata(rng, &mut pool);
        m.additionals.push(ResourceRecord::new(
            random_name(rng, &mut pool),
            rng.gen_range(0..=ttl_cap),
            rdata,
        ));
    }
    m
}

#[test]
fn criterion_02_wire_round_trip() {
    let started = Instant::now();
    let mut rng = rng_stream("acceptance:wire", 2);
    for _ in 0..10_000 {
        let m = random_message(&mut rng);
        let plain = serialize_message(&m, false).unwrap();
        let packed = serialize_message(&m, true).unwrap();
        assert!(packed.len() <= plain.len(), "compression never grows a message");
        assert_eq!(parse_message(&plain).unwrap(), m);
        assert_eq!(parse_message(&packed).unwrap(), m);
    }
    assert!(started.elapsed() < Duration::from_secs(30));
    pass(2, "wire round-trip");
}

// ---------------------------------------------------------------------------
// 3. Compression arithmetic

#[test]
fn criterion_03_compression_arithmetic() {
    // The owner repeats the question name, so compressing it replaces a
    // 17-byte encoding with a 2-byte pointer: 15 bytes saved, exactly.
    let mut m = DnsMessage::query(0x2b2b, name("uni-konstanz.de"), RRType::A, false);
    m.flags.response = true;
    m.flags.authoritative = true;
    m.answers.push(ResourceRecord::new(
        name("uni-konstanz.de"),
        86400,
        Rdata::A(ip(134, 34, 240, 80)),
    ));
    let plain = message_wire_size(&m, false).unwrap();
    let packed = message_wire_size(&m, true).unwrap();
    assert_eq!(plain - packed, 15);
    pass(3, "compression arithmetic");
}

// ---------------------------------------------------------------------------
// 4. Resolution trace

#[test]
fn criterion_04_resolution_trace() {
    let mut b = SimBuilder::new(4);
    b.set_default_delay(Duration::from_millis(5));
    b.enable_capture();
    b.enable_assertions();
    b.add_node(
        "root-a",
        ip(10, 0, 0, 1),
        Box::new(DnsServer::auth(load_zone("zones/root.zone"))),
    );
    b.add_node(
        "de-ns",
        ip(10, 0, 0, 2),
        Box::new(DnsServer::auth(load_zone("zones/de.zone"))),
    );
    b.add_node(
        "campus-ns",
        ip(134, 34, 3, 3),
        Box::new(DnsServer::auth(load_zone("zones/uni-konstanz.de.sim.zone"))),
    );
    let mut hints = RootHints::new();
    hints.push(name("a.root-net.sim"), ip(10, 0, 0, 1));
    let resolver = b.add_node(
        "resolver",
        ip(10, 0, 1, 1),
        Box::new(DnsServer::caching(CacheStore::new_ttl(512), hints)),
    );
    let mut client = DnsClient::new(ip(10, 0, 1, 1));
    client.resolve_at(
        SimTime::from_secs(1),
        name("somehost.uni-konstanz.de"),
        RRType::A,
    );
    client.resolve_at(
        SimTime::from_secs(5),
        name("somehost.uni-konstanz.de"),
        RRType::A,
    );
    let stub = b.add_node("stub", ip(10, 0, 9, 1), Box::new(client));

    let mut sim = b.build();
    sim.run_until(SimTime::from_secs(10)).unwrap();

    let upstream = |from: SimTime, to: SimTime| {
        sim.capture()
            .iter()
            .filter(|c| {
                c.pkt.src == resolver
                    && !c.pkt.payload.flags.response
                    && c.time >= from
                    && c.time < to
            })
            .count()
    };
    // Cold lookup walks root -> de -> campus: one query each.
    assert_eq!(upstream(SimTime::ZERO, SimTime::from_secs(5)), 3);
    // The warm lookup is served from cache: no upstream traffic at all.
    assert_eq!(upstream(SimTime::from_secs(5), SimTime::from_secs(10)), 0);

    let outcomes = sim.node::<DnsClient>(stub).unwrap().outcomes();
    assert_eq!(outcomes.len(), 2);
    for o in outcomes {
        assert_eq!(o.rcode, Some(Rcode::NoError));
        assert_eq!(o.answers[0].rdata, Rdata::A(ip(134, 34, 10, 9)));
    }
    assert!(sim.stats(resolver).cache_hits >= 1);
    pass(4, "resolution trace");
}

// ---------------------------------------------------------------------------
// 5. Cache policies

#[test]
fn criterion_05_cache_policies() {
    // TTL policy against a brute-force oracle over 10^4 operations: every
    // eviction victim must hold the minimal expiry of the moment.
    let mut rng = rng_stream("acceptance:cache", 5);
    let capacity = 16;
    let mut store = CacheStore::new_ttl(capacity);
    let mut shadow: BTreeMap<CacheKey, SimTime> = BTreeMap::new();
    let mut now = SimTime::ZERO;
    let keyspace: Vec<CacheKey> = (0..48)
        .map(|i| CacheKey::new(name(&format!("h{i}.example")), RRType::A))
        .collect();
    for _ in 0..10_000 {
        now = now + Duration::from_millis(rng.gen_range(0..2_000));
        let k = keyspace[rng.gen_range(0..keyspace.len())].clone();
        if rng.gen_bool(0.7) {
            let ttl = rng.gen_range(1..=60u32);
            let records = vec![ResourceRecord::new(
                k.name.clone(),
                ttl,
                Rdata::A(ip(10, 9, 9, 9)),
            )];
            let expect_eviction = !shadow.contains_key(&k) && shadow.len() == capacity;
            let min_expiry = shadow.values().min().copied();
            let evicted = store.put(k.clone(), records, now);
            if expect_eviction {
                assert_eq!(evicted.len(), 1);
                let victim_expiry = shadow.remove(&evicted[0]).expect("victim was cached");
                assert_eq!(Some(victim_expiry), min_expiry, "victim holds the minimal expiry");
            } else {
                assert!(evicted.is_empty());
            }
            shadow.insert(k, now + Duration::from_secs(ttl as u64));
        } else {
            let hit = store.get(&k, now);
            match shadow.get(&k) {
                Some(&expiry) if now < expiry => {
                    let got = hit.expect("oracle says live");
                    let remaining =
                        (expiry.as_nanos() - now.as_nanos()).div_ceil(1_000_000_000) as u32;
                    assert_eq!(got[0].ttl, remaining, "hits decay to the remaining TTL");
                }
                Some(_) => {
                    assert!(hit.is_none(), "expired entries never hit");
                    shadow.remove(&k);
                }
                None => assert!(hit.is_none()),
            }
        }
    }

    // The random policy replays identically from its seed.
    let simple_run = || {
        let mut store = CacheStore::new_simple(8, rng_stream("acceptance:simple", 55));
        let mut ops = rng_stream("acceptance:simple-ops", 55);
        let mut log = Vec::new();
        for step in 0..10_000u64 {
            let k = keyspace[ops.gen_range(0..keyspace.len())].clone();
            let t = SimTime::from_millis(step * 10);
            let records = vec![ResourceRecord::new(
                k.name.clone(),
                ops.gen_range(1..=300u32),
                Rdata::A(ip(10, 9, 9, 9)),
            )];
            log.extend(store.put(k, records, t));
        }
        log
    };
    let first = simple_run();
    assert_eq!(first, simple_run(), "seeded eviction replays identically");
    assert!(!first.is_empty());

    // Expiry is exclusive: alive one nanosecond before, gone at the instant.
    let mut store = CacheStore::new_ttl(4);
    let k = keyspace[0].clone();
    let t0 = SimTime::from_secs(100);
    store.put(
        k.clone(),
        vec![ResourceRecord::new(k.name.clone(), 30, Rdata::A(ip(1, 1, 1, 1)))],
        t0,
    );
    let boundary = t0 + Duration::from_secs(30);
    assert!(store
        .get(&k, SimTime::from_nanos(boundary.as_nanos() - 1))
        .is_some());
    assert!(store.get(&k, boundary).is_none());
    assert!(!store.contains(&k), "expired entry is dropped on access");
    pass(5, "cache policies");
}

// ---------------------------------------------------------------------------
// mDNS test-bed helper

struct MdnsNet {
    sim: Sim,
    group: GroupId,
    hosts: Vec<NodeId>,
}

fn mdns_net_delayed(
    seed: u64,
    n: usize,
    delay: Duration,
    mut setup: impl FnMut(usize, &mut MdnsHost),
) -> MdnsNet {
    let mut b = SimBuilder::new(seed);
    b.set_default_delay(delay);
    b.enable_capture();
    b.enable_assertions();
    let group = b.new_group();
    let mut hosts = Vec::new();
    for i in 0..n {
        let mut host = MdnsHost::new(group, MdnsParams::default());
        setup(i, &mut host);
        let id = b.add_node(
            format!("mdns{i}"),
            ip(10, 1, 0, (i + 1) as u8),
            Box::new(host),
        );
        b.join_group(group, id);
        hosts.push(id);
    }
    MdnsNet {
        sim: b.build(),
        group,
        hosts,
    }
}

fn mdns_net(seed: u64, n: usize, setup: impl FnMut(usize, &mut MdnsHost)) -> MdnsNet {
    mdns_net_delayed(seed, n, Duration::from_millis(1), setup)
}

// ---------------------------------------------------------------------------
// 6. Probe aggregation

#[test]
fn criterion_06_probe_aggregation() {
    // Two probes enqueued 100 ms apart leave in one packet: the second
    // service rides along with the first one's flush instead of waiting
    // out its own timer.
    let mut net = mdns_net(6, 2, |i, host| {
        if i == 0 {
            host.add_service(
                ServiceInstance::new("alpha", "_http._tcp", 80)
                    .with_probe_delay(Duration::from_millis(250)),
            );
            host.add_service(
                ServiceInstance::new("beta", "_ipp._tcp", 631)
                    .starting_at(SimTime::from_millis(100)),
            );
        }
    });
    net.sim.run_until(SimTime::from_secs(5)).unwrap();
    let probes: Vec<&DnsMessage> = net
        .sim
        .capture()
        .iter()
        .filter(|c| !c.pkt.payload.flags.response && !c.pkt.payload.authorities.is_empty())
        .map(|c| &c.pkt.payload)
        .collect();
    assert_eq!(probes.len(), 3, "both services share all three probe rounds");
    for probe in probes {
        let qnames: Vec<String> = probe.questions.iter().map(|q| q.qname.to_string()).collect();
        assert!(qnames.iter().any(|q| q.starts_with("alpha.")));
        assert!(qnames.iter().any(|q| q.starts_with("beta.")));
    }

    // Pooling never defers a probe by more than the allowed window, in any
    // scenario: the responder asserts the bound internally on every flush
    // (the kernel runs with assertions on) and reports the worst case seen.
    let bound = Duration::from_millis(250);
    for id in net.hosts {
        let host = net.sim.node::<MdnsHost>(id).unwrap();
        assert!(host.max_probe_latency() <= bound);
    }
    let mut stagger = mdns_net(66, 6, |i, host| {
        for j in 0..3 {
            host.add_service(
                ServiceInstance::new(&format!("svc{i}-{j}"), "_http._tcp", 80)
                    .starting_at(SimTime::from_millis(37 * i as u64 + 113 * j as u64)),
            );
        }
    });
    stagger.sim.run_until(SimTime::from_secs(20)).unwrap();
    let mut saw_latency = Duration::ZERO;
    for id in stagger.hosts {
        let host = stagger.sim.node::<MdnsHost>(id).unwrap();
        assert!(host.max_probe_latency() <= bound);
        saw_latency = saw_latency.max(host.max_probe_latency());
    }
    assert!(saw_latency > Duration::ZERO, "pooling actually deferred probes");
    for cfg_file in ["scenarios/mdns_basic.ini", "scenarios/privacy_ratio.ini"] {
        let cfg = load_scenario(cfg_file);
        let (mut sim, _) = build_sim(&cfg, cfg.seed, false).unwrap();
        sim.run_until(SimTime::from_secs_f64(cfg.duration)).unwrap();
        for id in sim.topology().node_ids().collect::<Vec<_>>() {
            if let Some(host) = sim.node::<MdnsHost>(id) {
                assert!(host.max_probe_latency() <= bound);
            }
        }
    }
    pass(6, "probe aggregation");
}

// ---------------------------------------------------------------------------
// 7. Suppression economy

#[test]
fn criterion_07_suppression_economy() {
    // Five hosts ask for the same service type at the same instant; the
    // first query on the wire silences the rest.
    let qname = name("_http._tcp.local");
    let mut net = mdns_net(7, 6, |i, host| {
        if i == 0 {
            host.add_service(ServiceInstance::new("shared web", "_http._tcp", 80));
        } else {
            host.schedule_query(SimTime::from_secs(5), name("_http._tcp.local"), RRType::Ptr);
        }
    });
    net.sim.run_until(SimTime::from_secs(8)).unwrap();
    let type_queries = net
        .sim
        .capture()
        .iter()
        .filter(|c| {
            !c.pkt.payload.flags.response
                && c.pkt
                    .payload
                    .questions
                    .iter()
                    .any(|q| q.qname == qname && q.qtype == RRType::Ptr)
        })
        .count();
    assert!(type_queries >= 1);
    assert!(type_queries < 5, "five askers sent {type_queries} packets");
    let suppressed: u64 = net
        .hosts
        .iter()
        .map(|&id| net.sim.stats(id).suppressed_queries)
        .sum();
    assert_eq!(type_queries as u64 + suppressed, 5, "every asker sent or suppressed");

    // Duplicate-answer suppression: all five hosts own the identical
    // service-type enumeration record, one query for it draws exactly one
    // response packet. Switched-LAN delay, so responses spread over the
    // 100 ms jitter window propagate long before the next one flushes.
    let enum_name = name("_services._dns-sd._udp.local");
    let mut net = mdns_net_delayed(77, 5, Duration::from_micros(10), |i, host| {
        host.add_service(ServiceInstance::new(
            &format!("web {i}"),
            "_http._tcp",
            80,
        ));
        if i == 0 {
            host.schedule_query(SimTime::from_secs(10), name("_services._dns-sd._udp.local"), RRType::Ptr);
        }
    });
    net.sim.run_until(SimTime::from_secs(30)).unwrap();
    let enum_responses: Vec<NodeId> = net
        .sim
        .capture()
        .iter()
        .filter(|c| {
            c.pkt.payload.flags.response
                && c.pkt.payload.answers.iter().any(|rr| rr.owner == enum_name)
        })
        .map(|c| c.pkt.src)
        .collect();
    assert_eq!(enum_responses.len(), 1, "exactly one response for the shared record");
    assert_ne!(enum_responses[0], net.hosts[0], "someone else answered the asker");
    let suppressed: u64 = net
        .hosts
        .iter()
        .map(|&id| net.sim.stats(id).suppressed_responses)
        .sum();
    assert!(suppressed >= 3, "the other owners stayed silent");
    pass(7, "suppression economy");
}

// ---------------------------------------------------------------------------
// 8. Privacy replication

#[test]
fn criterion_08_privacy_replication() {
    let started = Instant::now();
    let cfg = load_scenario("scenarios/privacy_ratio.ini");
    assert_eq!(cfg.mdns.num_resolvers, 10);
    assert_eq!(cfg.duration, 300.0);
    let mut totals = Vec::new();
    for ratio in ["0", "0.25", "0.5", "0.75", "1.0"] {
        let mut point = cfg.clone();
        point.set_param("private_service_ratio", ratio).unwrap();
        let result = run_scenario(&point, cfg.seed, false).unwrap();
        assert!(result.violations.is_empty());
        totals.push(result.aggregate.total_bytes());
    }
    assert!(
        totals.windows(2).all(|w| w[1] <= w[0]),
        "total bytes fall monotonically: {totals:?}"
    );
    assert!(
        2 * totals[4] < totals[0],
        "all-private traffic {} is not under half the baseline {}",
        totals[4],
        totals[0]
    );
    assert!(started.elapsed() < Duration::from_secs(60));
    pass(8, "privacy replication");
}

// ---------------------------------------------------------------------------
// 9. Zero-leak audit

fn paired_private_net() -> MdnsNet {
    mdns_net(9, 2, |i, host| {
        host.add_service(
            ServiceInstance::new(&format!("secret files {i}"), "_smb._tcp", 445).private(),
        );
        host.add_service(ServiceInstance::new(&format!("open web {i}"), "_http._tcp", 80));
        let peer = 1 - i;
        host.add_pairing(simnet::privacy::Pairing::new(
            NodeId::from_index(peer),
            simnet::privacy::pairing_id(&format!("mdns{i}"), &format!("mdns{peer}")),
        ));
    })
}

#[test]
fn criterion_09_zero_leak_audit() {
    // Every privacy scenario in the suite audits clean.
    for (file, ratio) in [
        ("scenarios/privacy_ratio.ini", Some("0.5")),
        ("scenarios/privacy_ratio.ini", Some("1.0")),
        ("scenarios/mdns_basic.ini", None),
    ] {
        let mut cfg = load_scenario(file);
        if let Some(r) = ratio {
            cfg.set_param("private_service_ratio", r).unwrap();
        }
        let result = run_scenario(&cfg, cfg.seed, false).unwrap();
        assert!(result.violations.is_empty(), "{file} ratio {ratio:?} leaked");
    }
    let mut net = paired_private_net();
    net.sim.run_until(SimTime::from_secs(120)).unwrap();
    assert!(audit_sim(&net.sim).is_empty());
    // Both peers privately learned each other's hidden service.
    for (i, &id) in net.hosts.iter().enumerate() {
        let host = net.sim.node::<MdnsHost>(id).unwrap();
        let other = format!("secret files {}", 1 - i);
        assert!(
            host.private_cache()
                .keys(net.sim.now())
                .iter()
                .any(|k| k.name.to_string().starts_with(&other)),
            "host {i} never learned the peer's private service"
        );
    }

    // Fault injection: leaking one private SRV record over multicast is
    // caught as exactly one violation.
    let mut net = paired_private_net();
    net.sim.run_until(SimTime::from_secs(20)).unwrap();
    let private_owner = net
        .sim
        .node::<MdnsHost>(net.hosts[0])
        .unwrap()
        .private_service_names()[0]
        .clone();
    let mut leak = DnsMessage::default();
    leak.flags.response = true;
    leak.flags.authoritative = true;
    leak.answers.push(ResourceRecord::new(
        private_owner.clone(),
        120,
        Rdata::Srv {
            priority: 0,
            weight: 0,
            port: 445,
            target: name("mdns0.local"),
        },
    ));
    let pkt = SimPacket::multicast(net.hosts[0], net.group, leak).unwrap();
    net.sim.inject_packet(pkt);
    net.sim.run_until(SimTime::from_secs(21)).unwrap();
    let violations = audit_sim(&net.sim);
    assert_eq!(violations.len(), 1);
    assert_eq!(violations[0].owner, private_owner);
    pass(9, "zero-leak audit");
}

// ---------------------------------------------------------------------------
// 10. Determinism

#[test]
fn criterion_10_determinism() {
    for file in [
        "scenarios/dns_campus.ini",
        "scenarios/mdns_basic.ini",
        "scenarios/privacy_ratio.ini",
    ] {
        let cfg = load_scenario(file);
        // Kernel assertions (single wakeup per node, ledger conservation)
        // are always on in these runs.
        let a = run_scenario(&cfg, cfg.seed, true).unwrap();
        let b = run_scenario(&cfg, cfg.seed, true).unwrap();
        assert!(!a.trace.is_empty());
        assert_eq!(a.trace, b.trace, "{file}: traces diverged");
        assert_eq!(run_csv(&a), run_csv(&b), "{file}: CSV diverged");
    }
    let cfg = load_scenario("scenarios/privacy_ratio.ini");
    let values: Vec<String> = ["0", "0.5", "1.0"].iter().map(|s| s.to_string()).collect();
    let s1 = sweep_csv(&sweep(&cfg, "private_service_ratio", &values).unwrap());
    let s2 = sweep_csv(&sweep(&cfg, "private_service_ratio", &values).unwrap());
    assert_eq!(s1, s2);
    pass(10, "determinism");
}

// ---------------------------------------------------------------------------
// 11. Backward compatibility

#[test]
fn criterion_11_backward_compatibility() {
    // Privacy machinery enabled but unused (ten privacy-capable hosts,
    // zero private services) must leave the wire exactly as a plain run.
    let cfg = load_scenario("scenarios/privacy_ratio.ini");
    assert_eq!(cfg.mdns.private_service_ratio, 0.0);
    assert_eq!(cfg.mdns.num_private_resolvers, 10);
    let with_privacy = run_scenario(&cfg, cfg.seed, false).unwrap();

    let mut plain_cfg = cfg.clone();
    plain_cfg.set_param("num_private_resolvers", "0").unwrap();
    plain_cfg.set_param("min_friends", "0").unwrap();
    plain_cfg.set_param("max_friends", "0").unwrap();
    let plain = run_scenario(&plain_cfg, cfg.seed, false).unwrap();

    assert_eq!(with_privacy.names, plain.names);
    for (i, name) in with_privacy.names.iter().enumerate() {
        assert_eq!(
            with_privacy.stats[i].mcast_bytes, plain.stats[i].mcast_bytes,
            "{name}: multicast bytes differ"
        );
        assert_eq!(
            with_privacy.stats[i].mcast_pkts, plain.stats[i].mcast_pkts,
            "{name}: multicast packets differ"
        );
    }
    assert_eq!(with_privacy.stats, plain.stats, "all counters match");
    pass(11, "backward compatibility");
}
