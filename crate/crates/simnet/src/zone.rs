//! BIND-style zone files, restricted to the features the simulator needs.
//!
//! Supported grammar: `;` comments, `$TTL`, `$ORIGIN`, `@` for the origin,
//! a blank owner column meaning "previous owner", parenthesized multi-line
//! records (the SOA in practice), relative names qualified against the
//! origin, and the record types SOA, NS, MX, A, AAAA, CNAME, PTR, SRV, TXT.
//! Class is always IN. An MX line may omit the preference, which then
//! defaults to 0. An SOA may carry four numeric fields instead of five;
//! they are read positionally (serial, refresh, retry, expire) and the
//! minimum defaults to 0.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::net::{Ipv4Addr, Ipv6Addr};

use thiserror::Error;

use crate::name::DomainName;
use crate::wire::{RRType, Rdata, ResourceRecord};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ZoneError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown record type '{token}'")]
    UnknownType { line: usize, token: String },
    #[error("line {line}: bad address '{token}'")]
    BadAddress { line: usize, token: String },
    #[error("line {line}: bad name '{token}': {msg}")]
    BadName {
        line: usize,
        token: String,
        msg: String,
    },
    #[error("line {line}: owner {owner} lies outside the zone origin")]
    OutOfZone { line: usize, owner: String },
    #[error("unbalanced parentheses starting at line {line}")]
    UnbalancedParens { line: usize },
    #[error("zone has no SOA record")]
    MissingSoa,
    #[error("line {line}: second SOA record")]
    DuplicateSoa { line: usize },
    #[error("zone has no $TTL and line {line} carries no explicit ttl")]
    MissingTtl { line: usize },
    #[error("line {line}: relative name used before $ORIGIN")]
    MissingOrigin { line: usize },
}

/// A parsed zone: origin, default TTL, the SOA, and all records grouped by
/// owner and type in a deterministic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZoneConfig {
    pub origin: DomainName,
    pub default_ttl: u32,
    pub soa: ResourceRecord,
    records: BTreeMap<(DomainName, RRType), Vec<ResourceRecord>>,
}

/// Outcome of a zone lookup, distinguishing the cases a server must answer
/// differently.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ZoneLookup {
    /// Records of the queried type (all records for an ANY query).
    Match(Vec<ResourceRecord>),
    /// The name exists, the type does not, but a CNAME is present.
    Cname(ResourceRecord),
    /// The name exists (possibly only as an empty non-terminal) but has no
    /// records of the queried type.
    NoData,
    /// The name does not exist at all.
    NxDomain,
}

impl ZoneConfig {
    /// Parses zone file text.
    pub fn parse(text: &str) -> Result<ZoneConfig, ZoneError> {
        Parser::default().run(text)
    }

    pub fn record_count(&self) -> usize {
        self.records.values().map(Vec::len).sum()
    }

    /// All records in (owner, type) order, insertion order within a set.
    pub fn iter_records(&self) -> impl Iterator<Item = &ResourceRecord> {
        self.records.values().flatten()
    }

    pub fn rrset(&self, owner: &DomainName, rtype: RRType) -> &[ResourceRecord] {
        self.records
            .get(&(owner.clone(), rtype))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Exact-match lookup; no CNAME chasing, no delegation logic.
    pub fn lookup(&self, qname: &DomainName, qtype: RRType) -> ZoneLookup {
        if qtype == RRType::Any {
            let all: Vec<ResourceRecord> = self
                .records
                .range((qname.clone(), RRType::A)..=(qname.clone(), RRType::Any))
                .flat_map(|(_, v)| v.iter().cloned())
                .collect();
            if !all.is_empty() {
                return ZoneLookup::Match(all);
            }
        } else {
            let set = self.rrset(qname, qtype);
            if !set.is_empty() {
                return ZoneLookup::Match(set.to_vec());
            }
            let cname = self.rrset(qname, RRType::Cname);
            if qtype != RRType::Cname && !cname.is_empty() {
                return ZoneLookup::Cname(cname[0].clone());
            }
        }
        let exists = self.records.keys().any(|(owner, _)| {
            owner == qname || owner.is_subdomain_of(qname)
        });
        if exists {
            ZoneLookup::NoData
        } else {
            ZoneLookup::NxDomain
        }
    }

    /// Renders the zone canonically: `$TTL`, `$ORIGIN`, then every record
    /// with a fully qualified owner. `parse(render(zone))` reproduces the
    /// zone.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "$TTL {}", self.default_ttl);
        let _ = writeln!(out, "$ORIGIN {}", self.origin);
        for rr in self.iter_records() {
            let mut line = format!("{} ", rr.owner);
            if rr.ttl != self.default_ttl {
                let _ = write!(line, "{} ", rr.ttl);
            }
            let _ = write!(line, "IN {} ", rr.rtype());
            match &rr.rdata {
                Rdata::A(a) => {
                    let _ = write!(line, "{a}");
                }
                Rdata::Aaaa(a) => {
                    let _ = write!(line, "{a}");
                }
                Rdata::Ns(n) | Rdata::Cname(n) | Rdata::Ptr(n) => {
                    let _ = write!(line, "{n}");
                }
                Rdata::Mx {
                    preference,
                    exchange,
                } => {
                    let _ = write!(line, "{preference} {exchange}");
                }
                Rdata::Soa {
                    mname,
                    rname,
                    serial,
                    refresh,
                    retry,
                    expire,
                    minimum,
                } => {
                    let _ = write!(
                        line,
                        "{mname} {rname} ( {serial} {refresh} {retry} {expire} {minimum} )"
                    );
                }
                Rdata::Txt(strings) => {
                    for s in strings {
                        let _ = write!(line, "\"{}\" ", String::from_utf8_lossy(s));
                    }
                    line.truncate(line.trim_end().len());
                }
                Rdata::Srv {
                    priority,
                    weight,
                    port,
                    target,
                } => {
                    let _ = write!(line, "{priority} {weight} {port} {target}");
                }
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }
}

#[derive(Clone)]
struct Token {
    text: String,
}

struct LogicalLine {
    number: usize,
    leading_ws: bool,
    tokens: Vec<Token>,
}

#[derive(Default)]
struct Parser {
    origin: Option<DomainName>,
    default_ttl: Option<u32>,
    prev_owner: Option<DomainName>,
    soa: Option<ResourceRecord>,
    soa_line: usize,
    records: BTreeMap<(DomainName, RRType), Vec<ResourceRecord>>,
}

impl Parser {
    fn run(mut self, text: &str) -> Result<ZoneConfig, ZoneError> {
        for line in tokenize(text)? {
            self.line(line)?;
        }
        let soa = self.soa.ok_or(ZoneError::MissingSoa)?;
        let origin = self.origin.expect("origin set when soa parsed");
        let default_ttl = self.default_ttl.unwrap_or(soa.ttl);
        for ((owner, _), _) in self.records.iter() {
            if !(owner == &origin || owner.is_subdomain_of(&origin)) {
                return Err(ZoneError::OutOfZone {
                    line: self.soa_line,
                    owner: owner.to_string(),
                });
            }
        }
        Ok(ZoneConfig {
            origin,
            default_ttl,
            soa,
            records: self.records,
        })
    }

    fn line(&mut self, line: LogicalLine) -> Result<(), ZoneError> {
        let n = line.number;
        let mut toks = line.tokens.into_iter().peekable();
        let first = match toks.peek() {
            Some(t) => t.clone(),
            None => return Ok(()),
        };
        if !line.leading_ws && first.text.starts_with('$') {
            toks.next();
            return self.directive(n, &first.text, &mut toks);
        }

        // Owner column.
        let owner = if line.leading_ws {
            self.prev_owner
                .clone()
                .ok_or_else(|| syntax(n, "blank owner with no previous record"))?
        } else {
            let t = toks.next().unwrap();
            self.name(n, &t.text)?
        };
        self.prev_owner = Some(owner.clone());

        // Optional TTL and class, in either order, then the type.
        let mut ttl: Option<u32> = None;
        let rtype: RRType;
        loop {
            let t = toks
                .next()
                .ok_or_else(|| syntax(n, "record line ends before a type"))?;
            if t.text.eq_ignore_ascii_case("IN") {
                continue;
            }
            if let Ok(v) = t.text.parse::<u32>() {
                if ttl.replace(v).is_some() {
                    return Err(syntax(n, "two ttl fields"));
                }
                continue;
            }
            match t.text.parse::<RRType>() {
                Ok(RRType::Any) => {
                    return Err(ZoneError::UnknownType {
                        line: n,
                        token: t.text,
                    })
                }
                Ok(rt) => {
                    rtype = rt;
                    break;
                }
                Err(_) => {
                    return Err(ZoneError::UnknownType {
                        line: n,
                        token: t.text,
                    })
                }
            }
        }
        let ttl = match ttl.or(self.default_ttl) {
            Some(v) => v,
            None => return Err(ZoneError::MissingTtl { line: n }),
        };

        let rdata = self.rdata(n, rtype, &mut toks)?;
        if let Some(extra) = toks.next() {
            return Err(syntax(n, &format!("unexpected token '{}'", extra.text)));
        }
        let rr = ResourceRecord::new(owner.clone(), ttl, rdata);
        if rtype == RRType::Soa {
            if self.soa.is_some() {
                return Err(ZoneError::DuplicateSoa { line: n });
            }
            let origin = self
                .origin
                .clone()
                .ok_or(ZoneError::MissingOrigin { line: n })?;
            if owner != origin {
                return Err(syntax(n, "SOA owner must be the zone origin"));
            }
            self.soa = Some(rr.clone());
            self.soa_line = n;
        }
        self.records
            .entry((owner, rtype))
            .or_default()
            .push(rr);
        Ok(())
    }

    fn directive<I: Iterator<Item = Token>>(
        &mut self,
        n: usize,
        name: &str,
        toks: &mut I,
    ) -> Result<(), ZoneError> {
        let arg = toks
            .next()
            .ok_or_else(|| syntax(n, &format!("{name} needs an argument")))?;
        match name.to_ascii_uppercase().as_str() {
            "$TTL" => {
                let v = arg
                    .text
                    .parse::<u32>()
                    .map_err(|_| syntax(n, "bad $TTL value"))?;
                self.default_ttl = Some(v);
            }
            "$ORIGIN" => {
                // The argument is absolute whether or not it carries the
                // trailing dot.
                let origin = DomainName::parse(&arg.text).map_err(|e| ZoneError::BadName {
                    line: n,
                    token: arg.text.clone(),
                    msg: e.to_string(),
                })?;
                self.origin = Some(origin);
            }
            other => return Err(syntax(n, &format!("unknown directive {other}"))),
        }
        Ok(())
    }

    fn name(&self, n: usize, token: &str) -> Result<DomainName, ZoneError> {
        if token == "@" {
            return self
                .origin
                .clone()
                .ok_or(ZoneError::MissingOrigin { line: n });
        }
        let parsed = DomainName::parse(token).map_err(|e| ZoneError::BadName {
            line: n,
            token: token.to_string(),
            msg: e.to_string(),
        })?;
        if token.ends_with('.') {
            Ok(parsed)
        } else {
            let origin = self
                .origin
                .clone()
                .ok_or(ZoneError::MissingOrigin { line: n })?;
            parsed.join(&origin).map_err(|e| ZoneError::BadName {
                line: n,
                token: token.to_string(),
                msg: e.to_string(),
            })
        }
    }

    fn rdata<I: Iterator<Item = Token>>(
        &mut self,
        n: usize,
        rtype: RRType,
        toks: &mut I,
    ) -> Result<Rdata, ZoneError> {
        let mut next = |what: &str| -> Result<Token, ZoneError> {
            toks.next()
                .ok_or_else(|| syntax(n, &format!("missing {what}")))
        };
        let num = |t: &Token, what: &str| -> Result<u32, ZoneError> {
            t.text
                .parse::<u32>()
                .map_err(|_| syntax(n, &format!("bad {what} '{}'", t.text)))
        };
        Ok(match rtype {
            RRType::A => {
                let t = next("address")?;
                Rdata::A(t.text.parse::<Ipv4Addr>().map_err(|_| {
                    ZoneError::BadAddress {
                        line: n,
                        token: t.text.clone(),
                    }
                })?)
            }
            RRType::Aaaa => {
                let t = next("address")?;
                Rdata::Aaaa(t.text.parse::<Ipv6Addr>().map_err(|_| {
                    ZoneError::BadAddress {
                        line: n,
                        token: t.text.clone(),
                    }
                })?)
            }
            RRType::Ns => Rdata::Ns(self.name(n, &next("nameserver")?.text)?),
            RRType::Cname => Rdata::Cname(self.name(n, &next("target")?.text)?),
            RRType::Ptr => Rdata::Ptr(self.name(n, &next("target")?.text)?),
            RRType::Mx => {
                // Both `MX <pref> <exchange>` and `MX <exchange>`.
                let t = next("exchange")?;
                match t.text.parse::<u16>() {
                    Ok(preference) => Rdata::Mx {
                        preference,
                        exchange: self.name(n, &next("exchange")?.text)?,
                    },
                    Err(_) => Rdata::Mx {
                        preference: 0,
                        exchange: self.name(n, &t.text)?,
                    },
                }
            }
            RRType::Soa => {
                let mname = self.name(n, &next("mname")?.text)?;
                let rname = self.name(n, &next("rname")?.text)?;
                let mut nums = Vec::new();
                for t in toks.by_ref() {
                    nums.push(
                        t.text
                            .parse::<u64>()
                            .map_err(|_| syntax(n, &format!("bad SOA field '{}'", t.text)))?,
                    );
                }
                if nums.len() < 4 || nums.len() > 5 {
                    return Err(syntax(
                        n,
                        &format!("SOA carries {} numeric fields, expected 4 or 5", nums.len()),
                    ));
                }
                let as32 = |v: u64, what: &str| -> Result<u32, ZoneError> {
                    u32::try_from(v).map_err(|_| syntax(n, &format!("{what} out of range")))
                };
                Rdata::Soa {
                    mname,
                    rname,
                    serial: nums[0],
                    refresh: as32(nums[1], "refresh")?,
                    retry: as32(nums[2], "retry")?,
                    expire: as32(nums[3], "expire")?,
                    minimum: if nums.len() == 5 {
                        as32(nums[4], "minimum")?
                    } else {
                        0
                    },
                }
            }
            RRType::Txt => {
                let mut strings = Vec::new();
                for t in toks.by_ref() {
                    strings.push(t.text.into_bytes());
                }
                if strings.is_empty() {
                    return Err(syntax(n, "TXT needs at least one string"));
                }
                Rdata::Txt(strings)
            }
            RRType::Srv => {
                let p = next("priority")?;
                let w = next("weight")?;
                let port = next("port")?;
                Rdata::Srv {
                    priority: num(&p, "priority")? as u16,
                    weight: num(&w, "weight")? as u16,
                    port: num(&port, "port")? as u16,
                    target: self.name(n, &next("target")?.text)?,
                }
            }
            RRType::Any => unreachable!("rejected by caller"),
        })
    }
}

fn syntax(line: usize, msg: &str) -> ZoneError {
    ZoneError::Syntax {
        line,
        msg: msg.to_string(),
    }
}

/// Splits the file into logical lines: comments stripped, parenthesized
/// groups merged, quoted strings kept whole.
fn tokenize(text: &str) -> Result<Vec<LogicalLine>, ZoneError> {
    let mut lines = Vec::new();
    let mut current: Option<LogicalLine> = None;
    let mut depth = 0usize;
    let mut open_line = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let number = idx + 1;
        let leading_ws = raw.starts_with(|c: char| c == ' ' || c == '\t');
        let mut tokens = Vec::new();
        let mut chars = raw.chars().peekable();
        let mut buf = String::new();
        let mut in_quotes = false;
        // `quoted` keeps empty strings ("" is a valid TXT string).
        let flush = |buf: &mut String, tokens: &mut Vec<Token>, quoted: bool| {
            if !buf.is_empty() || quoted {
                tokens.push(Token {
                    text: std::mem::take(buf),
                });
            }
        };
        while let Some(c) = chars.next() {
            match c {
                '"' => {
                    if in_quotes {
                        flush(&mut buf, &mut tokens, true);
                        in_quotes = false;
                    } else {
                        flush(&mut buf, &mut tokens, false);
                        in_quotes = true;
                    }
                }
                _ if in_quotes => buf.push(c),
                ';' => {
                    // Comment to end of line.
                    while chars.next().is_some() {}
                }
                '(' => {
                    flush(&mut buf, &mut tokens, false);
                    if depth == 0 {
                        open_line = number;
                    }
                    depth += 1;
                }
                ')' => {
                    flush(&mut buf, &mut tokens, false);
                    if depth == 0 {
                        return Err(ZoneError::UnbalancedParens { line: number });
                    }
                    depth -= 1;
                }
                c if c.is_whitespace() => flush(&mut buf, &mut tokens, false),
                c => buf.push(c),
            }
        }
        if in_quotes {
            return Err(syntax(number, "unterminated string"));
        }
        flush(&mut buf, &mut tokens, false);

        match current.as_mut() {
            Some(line) => line.tokens.extend(tokens),
            None => {
                current = Some(LogicalLine {
                    number,
                    leading_ws,
                    tokens,
                })
            }
        }
        if depth == 0 {
            if let Some(line) = current.take() {
                if !line.tokens.is_empty() {
                    lines.push(line);
                }
            }
        }
    }
    if depth != 0 {
        return Err(ZoneError::UnbalancedParens { line: open_line });
    }
    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn name(s: &str) -> DomainName {
        s.parse().unwrap()
    }

    const CAMPUS: &str = r#"
$TTL 86400 ; 24 hours
$ORIGIN uni-konstanz.de.
@   IN SOA pan.rz.uni-konstanz.de. hostmaster.uni-konstanz.de. (
        20030808000 ; serial
        172800      ; refresh = 2d
        1209600     ; retry
        3600 )      ; expire
    IN NS pan.rz.uni-konstanz.de.
    IN NS uranos.rz.uni-konstanz.de.
    IN MX imap.uni-konstanz.de.
    IN A  134.34.240.80
pan.rz       IN A 134.34.3.3
uranos.rz    IN A 134.34.3.2
imap         IN A 134.34.240.42
www          IN CNAME proxy-neu.rz
proxy-neu.rz IN A 134.34.240.1
"#;

    #[test]
    fn campus_zone_parses() {
        let zone = ZoneConfig::parse(CAMPUS).unwrap();
        assert_eq!(zone.default_ttl, 86400);
        assert_eq!(zone.origin, name("uni-konstanz.de"));
        assert_eq!(zone.record_count(), 10);
        match &zone.soa.rdata {
            Rdata::Soa {
                mname,
                serial,
                refresh,
                retry,
                expire,
                ..
            } => {
                assert_eq!(mname, &name("pan.rz.uni-konstanz.de"));
                assert_eq!(*serial, 20030808000);
                assert_eq!(*refresh, 172800);
                assert_eq!(*retry, 1209600);
                assert_eq!(*expire, 3600);
            }
            other => panic!("unexpected rdata {other:?}"),
        }
        assert!(zone.iter_records().all(|rr| rr.ttl == 86400));
    }

    #[test]
    fn relative_names_are_qualified() {
        let zone = ZoneConfig::parse(CAMPUS).unwrap();
        let set = zone.rrset(&name("pan.rz.uni-konstanz.de"), RRType::A);
        assert_eq!(set.len(), 1);
        assert_eq!(set[0].rdata, Rdata::A("134.34.3.3".parse().unwrap()));
        let cname = zone.rrset(&name("www.uni-konstanz.de"), RRType::Cname);
        assert_eq!(
            cname[0].rdata,
            Rdata::Cname(name("proxy-neu.rz.uni-konstanz.de"))
        );
    }

    #[test]
    fn mx_preference_defaults_to_zero() {
        let zone = ZoneConfig::parse(CAMPUS).unwrap();
        let mx = zone.rrset(&name("uni-konstanz.de"), RRType::Mx);
        assert_eq!(
            mx[0].rdata,
            Rdata::Mx {
                preference: 0,
                exchange: name("imap.uni-konstanz.de")
            }
        );
        let explicit = "$TTL 60\n$ORIGIN x.\n@ IN SOA ns.x. h.x. (1 2 3 4 5)\n@ IN MX 10 mail.x.\n";
        let zone = ZoneConfig::parse(explicit).unwrap();
        let mx = zone.rrset(&name("x"), RRType::Mx);
        assert_eq!(
            mx[0].rdata,
            Rdata::Mx {
                preference: 10,
                exchange: name("mail.x")
            }
        );
    }

    #[test]
    fn lookup_distinguishes_outcomes() {
        let zone = ZoneConfig::parse(CAMPUS).unwrap();
        match zone.lookup(&name("uni-konstanz.de"), RRType::Ns) {
            ZoneLookup::Match(set) => assert_eq!(set.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
        match zone.lookup(&name("www.uni-konstanz.de"), RRType::A) {
            ZoneLookup::Cname(rr) => {
                assert_eq!(rr.rdata, Rdata::Cname(name("proxy-neu.rz.uni-konstanz.de")))
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            zone.lookup(&name("pan.rz.uni-konstanz.de"), RRType::Mx),
            ZoneLookup::NoData
        );
        // "rz.uni-konstanz.de" exists only as an empty non-terminal.
        assert_eq!(
            zone.lookup(&name("rz.uni-konstanz.de"), RRType::A),
            ZoneLookup::NoData
        );
        assert_eq!(
            zone.lookup(&name("nosuch.uni-konstanz.de"), RRType::A),
            ZoneLookup::NxDomain
        );
    }

    #[test]
    fn any_lookup_returns_all_records() {
        let zone = ZoneConfig::parse(CAMPUS).unwrap();
        match zone.lookup(&name("uni-konstanz.de"), RRType::Any) {
            ZoneLookup::Match(set) => {
                assert_eq!(set.len(), 5); // SOA, 2 NS, MX, A
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn render_round_trips() {
        let zone = ZoneConfig::parse(CAMPUS).unwrap();
        let rendered = zone.render();
        let reparsed = ZoneConfig::parse(&rendered).unwrap();
        assert_eq!(zone, reparsed);
    }

    #[test]
    fn render_round_trips_all_types() {
        let text = concat!(
            "$TTL 300\n$ORIGIN zoo.example.\n",
            "@ IN SOA ns.zoo.example. admin.zoo.example. ( 7 60 30 90 15 )\n",
            "@ IN NS ns\n",
            "ns IN A 10.0.0.9\n",
            "ns IN AAAA 2001:db8::9\n",
            "@ 120 IN MX 5 mail\n",
            "mail IN A 10.0.0.10\n",
            "alias IN CNAME ns\n",
            "_svc._tcp IN SRV 0 5 8080 ns\n",
            "txt IN TXT \"hello world\" \"k=v\"\n",
            "9.0.0.10.in-addr.arpa. IN PTR ns.zoo.example.\n",
        );
        // The PTR owner is out of zone, so qualify it inside the zone
        // instead.
        let text = text.replace("9.0.0.10.in-addr.arpa.", "ptr");
        let zone = ZoneConfig::parse(&text).unwrap();
        let reparsed = ZoneConfig::parse(&zone.render()).unwrap();
        assert_eq!(zone, reparsed);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let missing_soa = "$TTL 60\n$ORIGIN x.\nhost IN A 10.0.0.1\n";
        assert_eq!(
            ZoneConfig::parse(missing_soa).unwrap_err(),
            ZoneError::MissingSoa
        );
        let unknown = "$TTL 60\n$ORIGIN x.\n@ IN SOA ns.x. h.x. (1 2 3 4 5)\nhost IN WKS data\n";
        assert_eq!(
            ZoneConfig::parse(unknown).unwrap_err(),
            ZoneError::UnknownType {
                line: 4,
                token: "WKS".into()
            }
        );
        let bad_addr = "$TTL 60\n$ORIGIN x.\n@ IN SOA ns.x. h.x. (1 2 3 4 5)\nhost IN A 10.0.0\n";
        assert_eq!(
            ZoneConfig::parse(bad_addr).unwrap_err(),
            ZoneError::BadAddress {
                line: 4,
                token: "10.0.0".into()
            }
        );
        let unbalanced = "$TTL 60\n$ORIGIN x.\n@ IN SOA ns.x. h.x. (1 2 3 4 5\n";
        assert_eq!(
            ZoneConfig::parse(unbalanced).unwrap_err(),
            ZoneError::UnbalancedParens { line: 3 }
        );
        let out_of_zone =
            "$TTL 60\n$ORIGIN x.\n@ IN SOA ns.x. h.x. (1 2 3 4 5)\nhost.other. IN A 10.0.0.1\n";
        assert!(matches!(
            ZoneConfig::parse(out_of_zone).unwrap_err(),
            ZoneError::OutOfZone { .. }
        ));
    }

    #[test]
    fn soa_accepts_four_or_five_fields() {
        let four = "$TTL 60\n$ORIGIN x.\n@ IN SOA ns.x. h.x. (1 2 3 4)\n";
        let zone = ZoneConfig::parse(four).unwrap();
        match &zone.soa.rdata {
            Rdata::Soa {
                serial,
                refresh,
                retry,
                expire,
                minimum,
                ..
            } => {
                assert_eq!(
                    (*serial, *refresh, *retry, *expire, *minimum),
                    (1, 2, 3, 4, 0)
                );
            }
            other => panic!("unexpected rdata {other:?}"),
        }
    }

    #[test]
    fn explicit_ttl_overrides_default() {
        let text = "$TTL 60\n$ORIGIN x.\n@ IN SOA ns.x. h.x. (1 2 3 4 5)\nhost 120 IN A 10.0.0.1\n";
        let zone = ZoneConfig::parse(text).unwrap();
        assert_eq!(zone.rrset(&name("host.x"), RRType::A)[0].ttl, 120);
    }
}
