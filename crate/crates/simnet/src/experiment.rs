//! Batch experiments: build a network from a [`ScenarioConfig`], run it,
//! collect per-node statistics, render CSV.
//!
//! mDNS hosts are generated from the `[mdns]` section: host `mdns<i>` gets
//! address `10.1.0.<i+1>`, a uniformly drawn number of services from a small
//! pool of realistic types, and, if it is one of the first
//! `num_private_resolvers` hosts, a drawn number of friends among the other
//! private hosts. Service and friend assignment draw from their own RNG
//! streams (`config:services`, `config:friends`), so changing one generator
//! parameter does not reshuffle unrelated draws. DNS nodes come only from
//! explicit `[dns]` declarations.

use std::collections::BTreeSet;
use std::net::Ipv4Addr;
use std::time::Duration;

use thiserror::Error;

use crate::cache::CacheStore;
use crate::client::{DnsClient, TraffGenConfig};
use crate::kernel::{rng_stream, NodeId, Sim, SimBuilder, SimError};
use crate::mdns::{MdnsHost, MdnsParams, ServiceInstance};
use crate::name::DomainName;
use crate::privacy::{audit_sim, pairing_id, Pairing, PrivacyViolation};
use crate::scenario::{host_index, ScenarioConfig, ScenarioError};
use crate::server::{DnsServer, EchoConfig, RootHints};
use crate::stats::TrafficStats;
use crate::time::SimTime;
use crate::zone::{ZoneConfig, ZoneError};

use rand::Rng;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{path}: {source}")]
    Zone { path: String, source: ZoneError },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl ExperimentError {
    /// True for faults in the scenario itself (bad files, bad references);
    /// the CLI maps these to a different exit code than runtime failures.
    pub fn is_scenario_fault(&self) -> bool {
        !matches!(self, ExperimentError::Sim(_))
    }
}

fn invalid(msg: String) -> ExperimentError {
    ExperimentError::Scenario(ScenarioError::Invalid(msg))
}

fn parse_name(s: &str) -> Result<DomainName, ExperimentError> {
    s.parse()
        .map_err(|e| invalid(format!("bad domain name {s}: {e}")))
}

/// The pool generated hosts draw services from: short name, type, port and
/// a plausible TXT payload.
const SERVICE_POOL: &[(&str, &str, u16, &[&str])] = &[
    (
        "printer",
        "_ipp._tcp",
        631,
        &[
            "rp=printers/main",
            "pdl=application/pdf,image/urf",
            "note=third floor",
        ],
    ),
    (
        "web",
        "_http._tcp",
        80,
        &["path=/", "server=simnet/1.0", "note=internal dashboard"],
    ),
    (
        "shell",
        "_ssh._tcp",
        22,
        &["os=linux", "auth=publickey", "fingerprint=5f3a9c21"],
    ),
    (
        "files",
        "_smb._tcp",
        445,
        &["share=public", "proto=3.1.1", "note=scratch space"],
    ),
    (
        "music",
        "_daap._tcp",
        3689,
        &["txtvers=1", "database=media", "note=shared library"],
    ),
    (
        "sync",
        "_workstation._tcp",
        9,
        &["model=generic", "role=desktop", "note=presence record"],
    ),
];

/// Everything a finished run reports.
#[derive(Debug, Clone)]
pub struct RunResult {
    /// Node names, indexed by node id.
    pub names: Vec<String>,
    /// Final per-node counters, same order as `names`.
    pub stats: Vec<TrafficStats>,
    /// Column-wise sum over all nodes.
    pub aggregate: TrafficStats,
    /// Multicast leaks of private names found by the audit (expected empty).
    pub violations: Vec<PrivacyViolation>,
    /// Event trace, if tracing was requested.
    pub trace: Vec<String>,
    /// Non-fatal anomalies from network construction.
    pub warnings: Vec<String>,
}

/// Builds the simulation a scenario describes without running it. Capture
/// and kernel assertions are always on; `trace` additionally records the
/// event log. Returns construction warnings alongside the sim.
pub fn build_sim(
    cfg: &ScenarioConfig,
    seed: u64,
    trace: bool,
) -> Result<(Sim, Vec<String>), ExperimentError> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    let mut builder = SimBuilder::new(seed);
    builder.set_default_delay(Duration::from_secs_f64(cfg.link_delay));
    builder.enable_capture();
    builder.enable_assertions();
    if trace {
        builder.enable_trace();
    }
    let mut addrs: BTreeSet<Ipv4Addr> = BTreeSet::new();
    let mut claim = |addr: Ipv4Addr| -> Result<Ipv4Addr, ExperimentError> {
        if addrs.insert(addr) {
            Ok(addr)
        } else {
            Err(invalid(format!("duplicate node address {addr}")))
        }
    };

    let m = &cfg.mdns;
    let n = m.num_resolvers as usize;
    let p = m.num_private_resolvers as usize;
    let group = builder.new_group();
    let params = MdnsParams {
        reannounce_interval: Duration::from_secs_f64(m.reannounce_interval),
        ..MdnsParams::default()
    };

    // Per-host service lists: generated first, explicit declarations after.
    let mut services: Vec<Vec<ServiceInstance>> = (0..n).map(|_| Vec::new()).collect();
    let mut svc_rng = rng_stream("config:services", seed);
    for (i, host_services) in services.iter_mut().enumerate() {
        let count = svc_rng.gen_range(m.min_services..=m.max_services) as usize;
        let private_count = if i < p {
            (m.private_service_ratio * count as f64).ceil() as usize
        } else {
            0
        };
        let mut seen = [0u32; SERVICE_POOL.len()];
        for j in 0..count {
            let pick = svc_rng.gen_range(0..SERVICE_POOL.len());
            let (nick, stype, port, txt) = SERVICE_POOL[pick];
            seen[pick] += 1;
            let instance = if seen[pick] > 1 {
                format!("{nick} mdns{i} {}", seen[pick])
            } else {
                format!("{nick} mdns{i}")
            };
            let mut svc = ServiceInstance::new(&instance, stype, port).with_txt(txt);
            if j < private_count {
                svc = svc.private();
            }
            host_services.push(svc);
        }
    }
    for decl in &m.services {
        let i = host_index(&decl.host).expect("validated host name");
        let txt: Vec<&str> = decl.txt.iter().map(String::as_str).collect();
        let mut svc = ServiceInstance::new(&decl.instance, &decl.stype, decl.port).with_txt(&txt);
        if decl.private {
            svc = svc.private();
        }
        services[i].push(svc);
    }

    // Friendship edges as index pairs (a < b): drawn among the private
    // hosts, then explicit declarations merged in.
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    if p >= 2 && m.max_friends > 0 {
        let mut rng = rng_stream("config:friends", seed);
        let cap = (p - 1) as u32;
        let mut capped = false;
        let degrees: Vec<u32> = (0..p)
            .map(|_| {
                let d = rng.gen_range(m.min_friends..=m.max_friends);
                if d > cap {
                    capped = true;
                    cap
                } else {
                    d
                }
            })
            .collect();
        if capped {
            warnings.push(format!(
                "friend counts capped at {cap}: only {p} private hosts"
            ));
        }
        if realize_degrees(&degrees, &mut pairs) {
            warnings.push("friend degrees not realizable; adjusted downward".to_string());
        }
    } else if p == 1 && m.min_friends > 0 {
        warnings.push("a single private host gets no friends".to_string());
    }
    for (a, b) in &m.friends {
        let (a, b) = (
            host_index(a).expect("validated host name"),
            host_index(b).expect("validated host name"),
        );
        pairs.insert((a.min(b), a.max(b)));
    }

    // One-shot queries per host.
    let mut queries: Vec<Vec<(SimTime, DomainName, crate::wire::RRType)>> =
        (0..n).map(|_| Vec::new()).collect();
    for q in &m.queries {
        let i = host_index(&q.host).expect("validated host name");
        queries[i].push((SimTime::from_secs_f64(q.at), parse_name(&q.qname)?, q.qtype));
    }

    for (i, host_services) in services.into_iter().enumerate() {
        let mut host = MdnsHost::new(group, params.clone());
        for svc in host_services {
            host.add_service(svc);
        }
        let name = format!("mdns{i}");
        for &(a, b) in &pairs {
            let peer = if a == i {
                b
            } else if b == i {
                a
            } else {
                continue;
            };
            let id = pairing_id(&name, &format!("mdns{peer}"));
            host.add_pairing(Pairing::new(NodeId::from_index(peer), id));
        }
        for (at, qname, qtype) in queries[i].drain(..) {
            host.schedule_query(at, qname, qtype);
        }
        let addr = claim(Ipv4Addr::new(10, 1, 0, (i + 1) as u8))?;
        let id = builder.add_node(name, addr, Box::new(host));
        assert_eq!(id, NodeId::from_index(i), "mdns hosts are added first");
        builder.join_group(group, id);
    }

    // The DNS side is declared explicitly.
    let d = &cfg.dns;
    let mut hints = RootHints::new();
    for (name, addr) in &d.roots {
        hints.push(parse_name(name)?, *addr);
    }
    for a in &d.auths {
        let path = cfg.resolve_path(&a.zone_file);
        let text = std::fs::read_to_string(&path).map_err(|source| ExperimentError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let zone = ZoneConfig::parse(&text).map_err(|source| ExperimentError::Zone {
            path: path.display().to_string(),
            source,
        })?;
        builder.add_node(a.name.clone(), claim(a.addr)?, Box::new(DnsServer::auth(zone)));
    }
    for c in &d.cachings {
        let cache = if c.simple_policy {
            CacheStore::new_simple(c.capacity, rng_stream(&format!("cache:{}", c.name), seed))
        } else {
            CacheStore::new_ttl(c.capacity)
        };
        builder.add_node(
            c.name.clone(),
            claim(c.addr)?,
            Box::new(DnsServer::caching(cache, hints.clone())),
        );
    }
    for e in &d.echoes {
        let suffix = parse_name(&e.suffix)?;
        builder.add_node(
            e.name.clone(),
            claim(e.addr)?,
            Box::new(DnsServer::echo(EchoConfig::new(suffix))),
        );
    }
    for cl in &d.clients {
        let server_addr = d
            .cachings
            .iter()
            .find(|s| s.name == cl.server)
            .expect("validated server name")
            .addr;
        let mut client = DnsClient::new(server_addr);
        if let Some(qf) = &cl.queries_file {
            let path = cfg.resolve_path(qf);
            let text = std::fs::read_to_string(&path).map_err(|source| ExperimentError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let list = TraffGenConfig::parse_queries(&text)
                .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            client = client.with_traffgen(TraffGenConfig::new(list, cl.period, cl.jitter));
        }
        for r in d.resolves.iter().filter(|r| r.client == cl.name) {
            client.resolve_at(SimTime::from_secs_f64(r.at), parse_name(&r.qname)?, r.qtype);
        }
        builder.add_node(cl.name.clone(), claim(cl.addr)?, Box::new(client));
    }

    Ok((builder.build(), warnings))
}

/// Turns a degree sequence into concrete edges: repeatedly connect the
/// vertex with the largest remaining degree to the next-largest ones.
/// Returns true if some degree could not be met (the sequence was not
/// graphical); the excess is silently dropped.
fn realize_degrees(degrees: &[u32], edges: &mut BTreeSet<(usize, usize)>) -> bool {
    let mut rem: Vec<(u32, usize)> = degrees.iter().copied().zip(0..).map(|(d, i)| (d, i)).collect();
    let mut shortfall = false;
    loop {
        rem.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        let (want, v) = rem[0];
        if want == 0 {
            return shortfall;
        }
        rem[0].0 = 0;
        let mut connected = 0;
        for slot in rem.iter_mut().skip(1) {
            if connected == want {
                break;
            }
            if slot.0 > 0 {
                let fresh = edges.insert((v.min(slot.1), v.max(slot.1)));
                debug_assert!(fresh, "each vertex is processed once");
                slot.0 -= 1;
                connected += 1;
            }
        }
        if connected < want {
            shortfall = true;
        }
    }
}

/// Builds and runs one scenario to completion.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    seed: u64,
    trace: bool,
) -> Result<RunResult, ExperimentError> {
    let (mut sim, warnings) = build_sim(cfg, seed, trace)?;
    sim.run_until(SimTime::from_secs_f64(cfg.duration))?;
    let topo = sim.topology();
    let names: Vec<String> = topo.node_ids().map(|id| topo.name(id).to_string()).collect();
    let stats: Vec<TrafficStats> = topo.node_ids().map(|id| *sim.stats(id)).collect();
    let mut aggregate = TrafficStats::default();
    for s in &stats {
        aggregate += *s;
    }
    let kernel = sim.kernel();
    assert_eq!(
        aggregate.total_bytes(),
        kernel.delivered_bytes,
        "conservation: bytes received must match the kernel ledger"
    );
    assert_eq!(
        aggregate.total_pkts(),
        kernel.delivered_pkts,
        "conservation: packets received must match the kernel ledger"
    );
    let violations = audit_sim(&sim);
    Ok(RunResult {
        names,
        stats,
        aggregate,
        violations,
        trace: sim.trace().to_vec(),
        warnings,
    })
}

/// Runs the scenario once per value of `key`. Point `i` uses seed
/// `master ^ i`, so points are independent but reproducible, and a
/// single-value sweep equals a plain run.
pub fn sweep(
    cfg: &ScenarioConfig,
    key: &str,
    values: &[String],
) -> Result<Vec<(String, RunResult)>, ExperimentError> {
    let mut rows = Vec::with_capacity(values.len());
    for (i, value) in values.iter().enumerate() {
        let mut point = cfg.clone();
        point.set_param(key, value)?;
        let seed = point.seed ^ i as u64;
        rows.push((value.clone(), run_scenario(&point, seed, false)?));
    }
    Ok(rows)
}

const CSV_COLUMNS: &str = "mcast_bytes,ucast_bytes,total_bytes,mcast_pkts,ucast_pkts,\
queries_sent,responses_sent,cache_hits,cache_misses,suppressed_queries,suppressed_responses";

fn csv_cells(s: &TrafficStats) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        s.mcast_bytes,
        s.ucast_bytes,
        s.total_bytes(),
        s.mcast_pkts,
        s.ucast_pkts,
        s.queries_sent,
        s.responses_sent,
        s.cache_hits,
        s.cache_misses,
        s.suppressed_queries,
        s.suppressed_responses
    )
}

/// One run as CSV: a row per node plus an `all` aggregate row.
pub fn run_csv(result: &RunResult) -> String {
    let mut out = format!("node_id,{CSV_COLUMNS}\n");
    for (name, s) in result.names.iter().zip(&result.stats) {
        out.push_str(&format!("{name},{}\n", csv_cells(s)));
    }
    out.push_str(&format!("all,{}\n", csv_cells(&result.aggregate)));
    out
}

/// A sweep as CSV: per-node and aggregate rows for every parameter value,
/// in the order the values were given.
pub fn sweep_csv(rows: &[(String, RunResult)]) -> String {
    let mut out = format!("param_value,node_id,{CSV_COLUMNS}\n");
    for (value, result) in rows {
        for (name, s) in result.names.iter().zip(&result.stats) {
            out.push_str(&format!("{value},{name},{}\n", csv_cells(s)));
        }
        out.push_str(&format!("{value},all,{}\n", csv_cells(&result.aggregate)));
    }
    out
}
