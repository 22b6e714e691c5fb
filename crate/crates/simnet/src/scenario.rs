//! Scenario files: INI-style sections describing one simulation run.
//!
//! ```ini
//! # ten hosts, everything private
//! [experiment]
//! seed = 42
//! duration = 300
//!
//! [topology]
//! link_delay = 0.001
//!
//! [mdns]
//! num_resolvers = 10
//! num_private_resolvers = 10
//! min_services = 2
//! max_services = 4
//! min_friends = 1
//! max_friends = 2
//! private_service_ratio = 1.0
//! ```
//!
//! The `[mdns]` section may also declare hosts' services, friendships and
//! one-shot queries explicitly; the `[dns]` section declares a DNS
//! hierarchy (authoritative/caching/echo servers and stub clients). Keys
//! that take several lines (`service`, `zone`, `client`, ...) repeat.
//! Unknown sections or keys are errors, so `simnet validate` catches typos.

use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::wire::RRType;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// One explicitly declared service.
#[derive(Debug, Clone)]
pub struct ServiceDecl {
    pub host: String,
    pub instance: String,
    pub stype: String,
    pub port: u16,
    pub txt: Vec<String>,
    pub private: bool,
}

/// A one-shot query issued by a host at a given time.
#[derive(Debug, Clone)]
pub struct QueryDecl {
    pub host: String,
    pub at: f64,
    pub qname: String,
    pub qtype: RRType,
}

/// The `[mdns]` section: generator parameters plus explicit declarations.
#[derive(Debug, Clone)]
pub struct MdnsSection {
    pub num_resolvers: u32,
    pub num_private_resolvers: u32,
    pub min_services: u32,
    pub max_services: u32,
    pub min_friends: u32,
    pub max_friends: u32,
    pub private_service_ratio: f64,
    pub reannounce_interval: f64,
    pub services: Vec<ServiceDecl>,
    pub friends: Vec<(String, String)>,
    pub queries: Vec<QueryDecl>,
}

impl Default for MdnsSection {
    fn default() -> Self {
        MdnsSection {
            num_resolvers: 0,
            num_private_resolvers: 0,
            min_services: 0,
            max_services: 0,
            min_friends: 0,
            max_friends: 0,
            private_service_ratio: 0.0,
            reannounce_interval: 60.0,
            services: Vec::new(),
            friends: Vec::new(),
            queries: Vec::new(),
        }
    }
}

/// An authoritative server with its zone file.
#[derive(Debug, Clone)]
pub struct AuthDecl {
    pub name: String,
    pub addr: Ipv4Addr,
    pub zone_file: PathBuf,
}

/// A caching (recursive) server.
#[derive(Debug, Clone)]
pub struct CachingDecl {
    pub name: String,
    pub addr: Ipv4Addr,
    pub capacity: usize,
    pub simple_policy: bool,
}

/// An echo-domain server.
#[derive(Debug, Clone)]
pub struct EchoDecl {
    pub name: String,
    pub addr: Ipv4Addr,
    pub suffix: String,
}

/// A stub client, optionally running the file-driven traffic generator.
#[derive(Debug, Clone)]
pub struct ClientDecl {
    pub name: String,
    pub addr: Ipv4Addr,
    pub server: String,
    pub queries_file: Option<PathBuf>,
    pub period: f64,
    pub jitter: f64,
}

/// A single resolution a client issues at a given time.
#[derive(Debug, Clone)]
pub struct ResolveDecl {
    pub client: String,
    pub qname: String,
    pub qtype: RRType,
    pub at: f64,
}

/// The `[dns]` section: an explicitly declared hierarchy.
#[derive(Debug, Clone, Default)]
pub struct DnsSection {
    pub auths: Vec<AuthDecl>,
    pub roots: Vec<(String, Ipv4Addr)>,
    pub cachings: Vec<CachingDecl>,
    pub echoes: Vec<EchoDecl>,
    pub clients: Vec<ClientDecl>,
    pub resolves: Vec<ResolveDecl>,
}

/// A parsed and validated scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub duration: f64,
    pub link_delay: f64,
    pub mdns: MdnsSection,
    pub dns: DnsSection,
    /// Directory the scenario file lives in; relative paths resolve here.
    pub base_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            duration: 0.0,
            link_delay: 0.001,
            mdns: MdnsSection::default(),
            dns: DnsSection::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base_dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        cfg.base_dir = base_dir;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str, path: &str) -> Result<Self, ScenarioError> {
        let mut cfg = ScenarioConfig::default();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let err = |msg: String| ScenarioError::Parse {
                path: path.to_string(),
                line: lineno,
                msg,
            };
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err("unterminated section header".into()))?;
                match name {
                    "experiment" | "topology" | "mdns" | "dns" => section = name.to_string(),
                    other => return Err(err(format!("unknown section [{other}]"))),
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected key = value".into()))?;
            let key = key.trim();
            let value = value.trim();
            match section.as_str() {
                "experiment" => cfg.set_experiment_key(key, value).map_err(err)?,
                "topology" => cfg.set_topology_key(key, value).map_err(err)?,
                "mdns" => cfg.set_mdns_key(key, value).map_err(err)?,
                "dns" => cfg.set_dns_key(key, value).map_err(err)?,
                _ => return Err(err(format!("key {key} outside any section"))),
            }
        }
        Ok(cfg)
    }

    fn set_experiment_key(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "seed" => self.seed = parse_num(key, value)?,
            "duration" => self.duration = parse_num(key, value)?,
            other => return Err(format!("unknown key {other} in [experiment]")),
        }
        Ok(())
    }

    fn set_topology_key(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "link_delay" => self.link_delay = parse_num(key, value)?,
            other => return Err(format!("unknown key {other} in [topology]")),
        }
        Ok(())
    }

    fn set_mdns_key(&mut self, key: &str, value: &str) -> Result<(), String> {
        let m = &mut self.mdns;
        match key {
            "num_resolvers" => m.num_resolvers = parse_num(key, value)?,
            "num_private_resolvers" => m.num_private_resolvers = parse_num(key, value)?,
            "min_services" => m.min_services = parse_num(key, value)?,
            "max_services" => m.max_services = parse_num(key, value)?,
            "min_friends" => m.min_friends = parse_num(key, value)?,
            "max_friends" => m.max_friends = parse_num(key, value)?,
            "private_service_ratio" => m.private_service_ratio = parse_num(key, value)?,
            "reannounce_interval" => m.reannounce_interval = parse_num(key, value)?,
            "service" => m.services.push(parse_service(value)?),
            "friends" => {
                let mut parts = value.split_whitespace();
                let host = parts
                    .next()
                    .ok_or_else(|| "friends needs: <host> <peer,peer,...>".to_string())?;
                let list = parts
                    .next()
                    .ok_or_else(|| "friends needs: <host> <peer,peer,...>".to_string())?;
                if parts.next().is_some() {
                    return Err("friends takes exactly two fields".into());
                }
                for peer in list.split(',').filter(|p| !p.is_empty()) {
                    m.friends.push((host.to_string(), peer.to_string()));
                }
            }
            "query" => {
                let parts: Vec<&str> = value.split_whitespace().collect();
                let [host, at, qname, qtype] = parts.as_slice() else {
                    return Err("query needs: <host> <at-secs> <qname> <qtype>".into());
                };
                m.queries.push(QueryDecl {
                    host: host.to_string(),
                    at: parse_num("at", at)?,
                    qname: qname.to_string(),
                    qtype: qtype.parse()?,
                });
            }
            other => return Err(format!("unknown key {other} in [mdns]")),
        }
        Ok(())
    }

    fn set_dns_key(&mut self, key: &str, value: &str) -> Result<(), String> {
        let d = &mut self.dns;
        let parts: Vec<&str> = value.split_whitespace().collect();
        match key {
            "auth" => {
                let [name, addr, zone_file] = parts.as_slice() else {
                    return Err("auth needs: <name> <addr> <zonefile>".into());
                };
                d.auths.push(AuthDecl {
                    name: name.to_string(),
                    addr: parse_addr(addr)?,
                    zone_file: PathBuf::from(zone_file),
                });
            }
            "root" => {
                let [name, addr] = parts.as_slice() else {
                    return Err("root needs: <name> <addr>".into());
                };
                d.roots.push((name.to_string(), parse_addr(addr)?));
            }
            "caching" => {
                let (required, options) = parts.split_at(parts.len().min(2));
                let [name, addr] = required else {
                    return Err("caching needs: <name> <addr> [capacity=N] [policy=ttl|simple]".into());
                };
                let mut decl = CachingDecl {
                    name: name.to_string(),
                    addr: parse_addr(addr)?,
                    capacity: 512,
                    simple_policy: false,
                };
                for opt in options {
                    match opt.split_once('=') {
                        Some(("capacity", v)) => decl.capacity = parse_num("capacity", v)?,
                        Some(("policy", "ttl")) => decl.simple_policy = false,
                        Some(("policy", "simple")) => decl.simple_policy = true,
                        _ => return Err(format!("unknown caching option {opt}")),
                    }
                }
                d.cachings.push(decl);
            }
            "echo" => {
                let [name, addr, suffix] = parts.as_slice() else {
                    return Err("echo needs: <name> <addr> <suffix>".into());
                };
                d.echoes.push(EchoDecl {
                    name: name.to_string(),
                    addr: parse_addr(addr)?,
                    suffix: suffix.to_string(),
                });
            }
            "client" => {
                let (required, options) = parts.split_at(parts.len().min(3));
                let [name, addr, server] = required else {
                    return Err(
                        "client needs: <name> <addr> <server> [queries=path] [period=S] [jitter=J]"
                            .into(),
                    );
                };
                let mut decl = ClientDecl {
                    name: name.to_string(),
                    addr: parse_addr(addr)?,
                    server: server.to_string(),
                    queries_file: None,
                    period: 10.0,
                    jitter: 0.1,
                };
                for opt in options {
                    match opt.split_once('=') {
                        Some(("queries", v)) => decl.queries_file = Some(PathBuf::from(v)),
                        Some(("period", v)) => decl.period = parse_num("period", v)?,
                        Some(("jitter", v)) => decl.jitter = parse_num("jitter", v)?,
                        _ => return Err(format!("unknown client option {opt}")),
                    }
                }
                d.clients.push(decl);
            }
            "resolve" => {
                let (required, options) = parts.split_at(parts.len().min(3));
                let [client, qname, qtype] = required else {
                    return Err("resolve needs: <client> <qname> <qtype> [at=secs]".into());
                };
                let mut decl = ResolveDecl {
                    client: client.to_string(),
                    qname: qname.to_string(),
                    qtype: qtype.parse()?,
                    at: 0.0,
                };
                for opt in options {
                    match opt.split_once('=') {
                        Some(("at", v)) => decl.at = parse_num("at", v)?,
                        _ => return Err(format!("unknown resolve option {opt}")),
                    }
                }
                d.resolves.push(decl);
            }
            other => return Err(format!("unknown key {other} in [dns]")),
        }
        Ok(())
    }

    /// Overrides one parameter, as `simnet sweep --vary` does. Accepts the
    /// keys in [`SWEEPABLE_KEYS`].
    pub fn set_param(&mut self, key: &str, value: &str) -> Result<(), ScenarioError> {
        let result = match key {
            "seed" | "duration" => self.set_experiment_key(key, value),
            "link_delay" => self.set_topology_key(key, value),
            "num_resolvers" | "num_private_resolvers" | "min_services" | "max_services"
            | "min_friends" | "max_friends" | "private_service_ratio" | "reannounce_interval" => {
                self.set_mdns_key(key, value)
            }
            other => Err(format!("not a sweepable parameter: {other}")),
        };
        result.map_err(ScenarioError::Invalid)?;
        self.validate()
    }

    /// Structural checks that need the whole file.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fail = |msg: String| Err(ScenarioError::Invalid(msg));
        let m = &self.mdns;
        if self.duration < 0.0 {
            return fail("duration must be non-negative".into());
        }
        if self.link_delay <= 0.0 {
            return fail("link_delay must be positive".into());
        }
        if m.num_resolvers > 200 {
            return fail("num_resolvers is limited to 200 (one /24 of addresses)".into());
        }
        if m.num_private_resolvers > m.num_resolvers {
            return fail(format!(
                "num_private_resolvers ({}) exceeds num_resolvers ({})",
                m.num_private_resolvers, m.num_resolvers
            ));
        }
        if m.min_services > m.max_services {
            return fail("min_services exceeds max_services".into());
        }
        if m.min_friends > m.max_friends {
            return fail("min_friends exceeds max_friends".into());
        }
        if !(0.0..=1.0).contains(&m.private_service_ratio) {
            return fail(format!(
                "private_service_ratio {} outside [0, 1]",
                m.private_service_ratio
            ));
        }
        if m.reannounce_interval <= 0.0 {
            return fail("reannounce_interval must be positive".into());
        }
        let host_known = |h: &str| -> bool {
            host_index(h).is_some_and(|i| (i as u32) < m.num_resolvers)
        };
        for s in &m.services {
            if !host_known(&s.host) {
                return fail(format!("service host {} is not an mdns host", s.host));
            }
        }
        for (a, b) in &m.friends {
            if !host_known(a) || !host_known(b) {
                return fail(format!("friends pair {a}/{b} names unknown hosts"));
            }
            if a == b {
                return fail(format!("{a} cannot befriend itself"));
            }
        }
        for q in &m.queries {
            if !host_known(&q.host) {
                return fail(format!("query host {} is not an mdns host", q.host));
            }
        }
        for c in &self.dns.clients {
            let server_known = self.dns.cachings.iter().any(|s| s.name == c.server);
            if !server_known {
                return fail(format!(
                    "client {} points at unknown caching server {}",
                    c.name, c.server
                ));
            }
            if c.period <= 0.0 {
                return fail(format!("client {}: period must be positive", c.name));
            }
            if !(0.0..1.0).contains(&c.jitter) {
                return fail(format!("client {}: jitter must be in [0, 1)", c.name));
            }
        }
        for r in &self.dns.resolves {
            if !self.dns.clients.iter().any(|c| c.name == r.client) {
                return fail(format!("resolve names unknown client {}", r.client));
            }
        }
        let mut names: Vec<&str> = self.node_names();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return fail("node names must be unique".into());
        }
        Ok(())
    }

    fn node_names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        let d = &self.dns;
        names.extend(d.auths.iter().map(|a| a.name.as_str()));
        names.extend(d.cachings.iter().map(|c| c.name.as_str()));
        names.extend(d.echoes.iter().map(|e| e.name.as_str()));
        names.extend(d.clients.iter().map(|c| c.name.as_str()));
        names
    }

    /// Resolves a scenario-relative path.
    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

/// mDNS hosts are named `mdns0`, `mdns1`, ...; this maps a name back to its
/// index.
pub fn host_index(name: &str) -> Option<usize> {
    name.strip_prefix("mdns")?.parse().ok()
}

/// The scalar parameters a sweep may vary.
pub const SWEEPABLE_KEYS: &[&str] = &[
    "seed",
    "duration",
    "link_delay",
    "num_resolvers",
    "num_private_resolvers",
    "min_services",
    "max_services",
    "min_friends",
    "max_friends",
    "private_service_ratio",
    "reannounce_interval",
];

pub fn sweepable(key: &str) -> bool {
    SWEEPABLE_KEYS.contains(&key)
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("invalid value for {key}: {value}"))
}

fn parse_addr(s: &str) -> Result<Ipv4Addr, String> {
    s.parse().map_err(|_| format!("invalid address {s}"))
}

/// Whitespace tokenizer with double quotes, so instance names may hold
/// spaces the way generated ones do (`"front desk" _ipp._tcp ...`).
fn tokenize(value: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut rest = value.trim_start();
    while !rest.is_empty() {
        if let Some(tail) = rest.strip_prefix('"') {
            let end = tail
                .find('"')
                .ok_or_else(|| "unterminated quote".to_string())?;
            out.push(tail[..end].to_string());
            rest = tail[end + 1..].trim_start();
        } else {
            let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
            out.push(rest[..end].to_string());
            rest = rest[end..].trim_start();
        }
    }
    Ok(out)
}

fn parse_service(value: &str) -> Result<ServiceDecl, String> {
    let parts = tokenize(value)?;
    if parts.len() < 4 {
        return Err(
            "service needs: <host> <instance> <type> <port> [txt=k=v;k=v] [private]".into(),
        );
    }
    let mut decl = ServiceDecl {
        host: parts[0].clone(),
        instance: parts[1].clone(),
        stype: parts[2].clone(),
        port: parse_num("port", &parts[3])?,
        txt: Vec::new(),
        private: false,
    };
    for opt in &parts[4..] {
        if opt == "private" {
            decl.private = true;
        } else if let Some(v) = opt.strip_prefix("txt=") {
            decl.txt = v.split(';').map(str::to_string).collect();
        } else {
            return Err(format!("unknown service option {opt}"));
        }
    }
    Ok(decl)
}
