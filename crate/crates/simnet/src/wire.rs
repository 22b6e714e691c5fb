//! DNS message model and wire codec.
//!
//! The codec covers the classic RFC 1035 layout: a 12-byte header followed by
//! question, answer, authority and additional sections. Name compression is
//! optional at serialization time and transparent at parse time.
//!
//! Compression policy: owner names and question names always take part in
//! compression. Inside RDATA only the types whose names were compressible in
//! the original specification do (NS, CNAME, PTR, MX, SOA); an SRV target is
//! written uncompressed, though later names may still point into it.

use std::collections::HashMap;
use std::fmt;
use std::net::{Ipv4Addr, Ipv6Addr};
use std::str::FromStr;

use thiserror::Error;

use crate::name::{DomainName, NameError};

/// Hard ceiling on a serialized message; guards the 16-bit wire fields.
pub const MAX_MESSAGE_LEN: usize = 65535;
/// Largest TTL representable on the wire (31 bits).
pub const MAX_TTL: u32 = 0x7fff_ffff;
/// Offsets at or above this cannot be compression targets (14-bit field).
const MAX_POINTER_TARGET: usize = 0x4000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("truncated message at byte {offset}")]
    Truncated { offset: usize },
    #[error("reserved label type at byte {offset}")]
    BadLabel { offset: usize },
    #[error("compression pointer at byte {offset} does not strictly decrease")]
    BadPointer { offset: usize },
    #[error("unknown record type {code} at byte {offset}")]
    UnknownType { code: u16, offset: usize },
    #[error("record type {code} is query-only and cannot appear in a record at byte {offset}")]
    QueryOnlyType { code: u16, offset: usize },
    #[error("unsupported class {code} at byte {offset}")]
    UnknownClass { code: u16, offset: usize },
    #[error("unknown response code {code} at byte {offset}")]
    UnknownRcode { code: u8, offset: usize },
    #[error("rdata length mismatch at byte {offset}")]
    RdataLength { offset: usize },
    #[error("trailing bytes after message at byte {offset}")]
    TrailingBytes { offset: usize },
    #[error("ttl {ttl} exceeds the 31-bit wire limit")]
    TtlTooLarge { ttl: u32 },
    #[error("message exceeds {MAX_MESSAGE_LEN} bytes")]
    MessageTooLarge,
    #[error(transparent)]
    Name(#[from] NameError),
}

/// Response codes used by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Rcode {
    #[default]
    NoError,
    FormErr,
    ServFail,
    NxDomain,
    NotImp,
}

impl Rcode {
    pub fn code(self) -> u8 {
        match self {
            Rcode::NoError => 0,
            Rcode::FormErr => 1,
            Rcode::ServFail => 2,
            Rcode::NxDomain => 3,
            Rcode::NotImp => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Rcode::NoError),
            1 => Some(Rcode::FormErr),
            2 => Some(Rcode::ServFail),
            3 => Some(Rcode::NxDomain),
            4 => Some(Rcode::NotImp),
            _ => None,
        }
    }
}

impl fmt::Display for Rcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rcode::NoError => "NOERROR",
            Rcode::FormErr => "FORMERR",
            Rcode::ServFail => "SERVFAIL",
            Rcode::NxDomain => "NXDOMAIN",
            Rcode::NotImp => "NOTIMP",
        };
        write!(f, "{s}")
    }
}

/// Record types known to the simulator. `Any` is query-only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RRType {
    A,
    Ns,
    Cname,
    Soa,
    Ptr,
    Mx,
    Txt,
    Aaaa,
    Srv,
    Any,
}

impl RRType {
    pub fn code(self) -> u16 {
        match self {
            RRType::A => 1,
            RRType::Ns => 2,
            RRType::Cname => 5,
            RRType::Soa => 6,
            RRType::Ptr => 12,
            RRType::Mx => 15,
            RRType::Txt => 16,
            RRType::Aaaa => 28,
            RRType::Srv => 33,
            RRType::Any => 255,
        }
    }

    pub fn from_code(code: u16) -> Option<Self> {
        match code {
            1 => Some(RRType::A),
            2 => Some(RRType::Ns),
            5 => Some(RRType::Cname),
            6 => Some(RRType::Soa),
            12 => Some(RRType::Ptr),
            15 => Some(RRType::Mx),
            16 => Some(RRType::Txt),
            28 => Some(RRType::Aaaa),
            33 => Some(RRType::Srv),
            255 => Some(RRType::Any),
            _ => None,
        }
    }

    pub fn is_query_only(self) -> bool {
        self == RRType::Any
    }
}

impl fmt::Display for RRType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RRType::A => "A",
            RRType::Ns => "NS",
            RRType::Cname => "CNAME",
            RRType::Soa => "SOA",
            RRType::Ptr => "PTR",
            RRType::Mx => "MX",
            RRType::Txt => "TXT",
            RRType::Aaaa => "AAAA",
            RRType::Srv => "SRV",
            RRType::Any => "ANY",
        };
        write!(f, "{s}")
    }
}

impl FromStr for RRType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(RRType::A),
            "NS" => Ok(RRType::Ns),
            "CNAME" => Ok(RRType::Cname),
            "SOA" => Ok(RRType::Soa),
            "PTR" => Ok(RRType::Ptr),
            "MX" => Ok(RRType::Mx),
            "TXT" => Ok(RRType::Txt),
            "AAAA" => Ok(RRType::Aaaa),
            "SRV" => Ok(RRType::Srv),
            "ANY" => Ok(RRType::Any),
            other => Err(format!("unknown record type {other}")),
        }
    }
}

/// Typed RDATA. The variant determines the record type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Rdata {
    A(Ipv4Addr),
    Aaaa(Ipv6Addr),
    Ns(DomainName),
    Cname(DomainName),
    Ptr(DomainName),
    Mx {
        preference: u16,
        exchange: DomainName,
    },
    /// The serial is kept wider than the wire field; it is written modulo
    /// 2^32, which lets zone files carry oversized serials unchanged.
    Soa {
        mname: DomainName,
        rname: DomainName,
        serial: u64,
        refresh: u32,
        retry: u32,
        expire: u32,
        minimum: u32,
    },
    Txt(Vec<Vec<u8>>),
    Srv {
        priority: u16,
        weight: u16,
        port: u16,
        target: DomainName,
    },
}

impl Rdata {
    pub fn rtype(&self) -> RRType {
        match self {
            Rdata::A(_) => RRType::A,
            Rdata::Aaaa(_) => RRType::Aaaa,
            Rdata::Ns(_) => RRType::Ns,
            Rdata::Cname(_) => RRType::Cname,
            Rdata::Ptr(_) => RRType::Ptr,
            Rdata::Mx { .. } => RRType::Mx,
            Rdata::Soa { .. } => RRType::Soa,
            Rdata::Txt(_) => RRType::Txt,
            Rdata::Srv { .. } => RRType::Srv,
        }
    }
}

/// A resource record: owner name, TTL in seconds, typed RDATA.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ResourceRecord {
    pub owner: DomainName,
    pub ttl: u32,
    pub rdata: Rdata,
}

impl ResourceRecord {
    pub fn new(owner: DomainName, ttl: u32, rdata: Rdata) -> Self {
        ResourceRecord { owner, ttl, rdata }
    }

    pub fn rtype(&self) -> RRType {
        self.rdata.rtype()
    }

    /// Uncompressed wire image of the RDATA, prefixed with the type code.
    /// Used as a deterministic comparison key (conflict tie-breaking).
    pub fn rdata_wire(&self) -> Vec<u8> {
        let mut sink = VecSink::default();
        sink.put_u16(self.rtype().code());
        let mut ctx = NameOffsets::default();
        write_rdata(&mut sink, &self.rdata, &mut ctx, false).expect("uncompressed rdata");
        sink.0
    }
}

/// A question: name plus query type (class is always IN).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DnsQuestion {
    pub qname: DomainName,
    pub qtype: RRType,
}

impl DnsQuestion {
    pub fn new(qname: DomainName, qtype: RRType) -> Self {
        DnsQuestion { qname, qtype }
    }
}

/// Header flags. Opcode is carried verbatim; the simulator only uses 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct MessageFlags {
    pub response: bool,
    pub opcode: u8,
    pub authoritative: bool,
    pub truncated: bool,
    pub recursion_desired: bool,
    pub recursion_available: bool,
    pub rcode: Rcode,
}

/// A complete DNS message.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DnsMessage {
    pub id: u16,
    pub flags: MessageFlags,
    pub questions: Vec<DnsQuestion>,
    pub answers: Vec<ResourceRecord>,
    pub authorities: Vec<ResourceRecord>,
    pub additionals: Vec<ResourceRecord>,
}

impl DnsMessage {
    /// A plain query for one question.
    pub fn query(id: u16, qname: DomainName, qtype: RRType, recursion_desired: bool) -> Self {
        DnsMessage {
            id,
            flags: MessageFlags {
                recursion_desired,
                ..MessageFlags::default()
            },
            questions: vec![DnsQuestion::new(qname, qtype)],
            ..DnsMessage::default()
        }
    }

    /// A response skeleton echoing `query`'s id and question.
    pub fn response_to(query: &DnsMessage, rcode: Rcode) -> Self {
        DnsMessage {
            id: query.id,
            flags: MessageFlags {
                response: true,
                opcode: query.flags.opcode,
                recursion_desired: query.flags.recursion_desired,
                rcode,
                ..MessageFlags::default()
            },
            questions: query.questions.clone(),
            ..DnsMessage::default()
        }
    }

    pub fn records(&self) -> impl Iterator<Item = &ResourceRecord> {
        self.answers
            .iter()
            .chain(&self.authorities)
            .chain(&self.additionals)
    }

    pub fn first_question(&self) -> Option<&DnsQuestion> {
        self.questions.first()
    }
}

// ---------------------------------------------------------------------------
// Serialization

/// Known name suffixes and their offsets, shared across one message.
#[derive(Default)]
pub struct NameOffsets {
    map: HashMap<DomainName, u16>,
}

trait WireSink {
    fn pos(&self) -> usize;
    fn put(&mut self, bytes: &[u8]);
    fn patch_u16(&mut self, at: usize, value: u16);

    fn put_u8(&mut self, v: u8) {
        self.put(&[v]);
    }
    fn put_u16(&mut self, v: u16) {
        self.put(&v.to_be_bytes());
    }
    fn put_u32(&mut self, v: u32) {
        self.put(&v.to_be_bytes());
    }
}

#[derive(Default)]
struct VecSink(Vec<u8>);

impl WireSink for VecSink {
    fn pos(&self) -> usize {
        self.0.len()
    }
    fn put(&mut self, bytes: &[u8]) {
        self.0.extend_from_slice(bytes);
    }
    fn patch_u16(&mut self, at: usize, value: u16) {
        self.0[at..at + 2].copy_from_slice(&value.to_be_bytes());
    }
}

#[derive(Default)]
struct CountSink(usize);

impl WireSink for CountSink {
    fn pos(&self) -> usize {
        self.0
    }
    fn put(&mut self, bytes: &[u8]) {
        self.0 += bytes.len();
    }
    fn patch_u16(&mut self, _at: usize, _value: u16) {}
}

fn encode_name_sink<S: WireSink>(
    name: &DomainName,
    sink: &mut S,
    offsets: &mut NameOffsets,
    allow_compression: bool,
) -> Result<usize, WireError> {
    let start = sink.pos();
    for skip in 0..name.label_count() {
        let suffix = name.suffix(skip);
        if allow_compression {
            if let Some(&off) = offsets.map.get(&suffix) {
                sink.put_u16(0xc000 | off);
                return Ok(sink.pos() - start);
            }
        }
        let here = sink.pos();
        if here < MAX_POINTER_TARGET {
            offsets.map.entry(suffix).or_insert(here as u16);
        }
        let label = &name.labels()[skip];
        sink.put_u8(label.len() as u8);
        sink.put(label);
    }
    sink.put_u8(0);
    Ok(sink.pos() - start)
}

/// Encodes one name into `out`, registering and (when permitted) reusing
/// suffixes through `offsets`. Returns the number of bytes written.
pub fn encode_name(
    name: &DomainName,
    out: &mut Vec<u8>,
    offsets: &mut NameOffsets,
    allow_compression: bool,
) -> Result<usize, WireError> {
    let mut sink = VecSink(std::mem::take(out));
    let n = encode_name_sink(name, &mut sink, offsets, allow_compression)?;
    *out = sink.0;
    Ok(n)
}

fn write_rdata<S: WireSink>(
    sink: &mut S,
    rdata: &Rdata,
    ctx: &mut NameOffsets,
    compress: bool,
) -> Result<(), WireError> {
    match rdata {
        Rdata::A(addr) => sink.put(&addr.octets()),
        Rdata::Aaaa(addr) => sink.put(&addr.octets()),
        Rdata::Ns(name) | Rdata::Cname(name) | Rdata::Ptr(name) => {
            encode_name_sink(name, sink, ctx, compress)?;
        }
        Rdata::Mx {
            preference,
            exchange,
        } => {
            sink.put_u16(*preference);
            encode_name_sink(exchange, sink, ctx, compress)?;
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
            encode_name_sink(mname, sink, ctx, compress)?;
            encode_name_sink(rname, sink, ctx, compress)?;
            sink.put_u32((*serial % (1u64 << 32)) as u32);
            sink.put_u32(*refresh);
            sink.put_u32(*retry);
            sink.put_u32(*expire);
            sink.put_u32(*minimum);
        }
        Rdata::Txt(strings) => {
            for s in strings {
                sink.put_u8(s.len() as u8);
                sink.put(s);
            }
        }
        Rdata::Srv {
            priority,
            weight,
            port,
            target,
        } => {
            sink.put_u16(*priority);
            sink.put_u16(*weight);
            sink.put_u16(*port);
            // SRV targets are never compressed, but their labels still
            // register as targets for later names.
            encode_name_sink(target, sink, ctx, false)?;
        }
    }
    Ok(())
}

fn write_record<S: WireSink>(
    sink: &mut S,
    rr: &ResourceRecord,
    ctx: &mut NameOffsets,
    compress: bool,
) -> Result<(), WireError> {
    if rr.ttl > MAX_TTL {
        return Err(WireError::TtlTooLarge { ttl: rr.ttl });
    }
    encode_name_sink(&rr.owner, sink, ctx, compress)?;
    sink.put_u16(rr.rtype().code());
    sink.put_u16(1); // class IN
    sink.put_u32(rr.ttl);
    let len_at = sink.pos();
    sink.put_u16(0);
    let rdata_start = sink.pos();
    write_rdata(sink, &rr.rdata, ctx, compress)?;
    sink.patch_u16(len_at, (sink.pos() - rdata_start) as u16);
    Ok(())
}

fn flags_word(flags: &MessageFlags) -> u16 {
    let mut w = 0u16;
    if flags.response {
        w |= 1 << 15;
    }
    w |= ((flags.opcode & 0x0f) as u16) << 11;
    if flags.authoritative {
        w |= 1 << 10;
    }
    if flags.truncated {
        w |= 1 << 9;
    }
    if flags.recursion_desired {
        w |= 1 << 8;
    }
    if flags.recursion_available {
        w |= 1 << 7;
    }
    w | flags.rcode.code() as u16
}

fn write_message<S: WireSink>(sink: &mut S, msg: &DnsMessage, compress: bool) -> Result<(), WireError> {
    let mut ctx = NameOffsets::default();
    sink.put_u16(msg.id);
    sink.put_u16(flags_word(&msg.flags));
    sink.put_u16(msg.questions.len() as u16);
    sink.put_u16(msg.answers.len() as u16);
    sink.put_u16(msg.authorities.len() as u16);
    sink.put_u16(msg.additionals.len() as u16);
    for q in &msg.questions {
        encode_name_sink(&q.qname, sink, &mut ctx, compress)?;
        sink.put_u16(q.qtype.code());
        sink.put_u16(1);
    }
    for section in [&msg.answers, &msg.authorities, &msg.additionals] {
        for rr in section {
            write_record(sink, rr, &mut ctx, compress)?;
        }
    }
    if sink.pos() > MAX_MESSAGE_LEN {
        return Err(WireError::MessageTooLarge);
    }
    Ok(())
}

/// Serializes a message, with or without name compression.
pub fn serialize_message(msg: &DnsMessage, compress: bool) -> Result<Vec<u8>, WireError> {
    let mut sink = VecSink::default();
    write_message(&mut sink, msg, compress)?;
    Ok(sink.0)
}

/// Computes the serialized size without materializing bytes. Equal to
/// `serialize_message(msg, compress)?.len()` by construction: both run the
/// same encoder against different sinks.
pub fn message_wire_size(msg: &DnsMessage, compress: bool) -> Result<usize, WireError> {
    let mut sink = CountSink::default();
    write_message(&mut sink, msg, compress)?;
    Ok(sink.0)
}

// ---------------------------------------------------------------------------
// Parsing

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn need(&self, n: usize) -> Result<(), WireError> {
        if self.pos + n > self.buf.len() {
            Err(WireError::Truncated { offset: self.pos })
        } else {
            Ok(())
        }
    }

    fn read_u8(&mut self) -> Result<u8, WireError> {
        self.need(1)?;
        let v = self.buf[self.pos];
        self.pos += 1;
        Ok(v)
    }

    fn read_u16(&mut self) -> Result<u16, WireError> {
        self.need(2)?;
        let v = u16::from_be_bytes([self.buf[self.pos], self.buf[self.pos + 1]]);
        self.pos += 2;
        Ok(v)
    }

    fn read_u32(&mut self) -> Result<u32, WireError> {
        self.need(4)?;
        let mut b = [0u8; 4];
        b.copy_from_slice(&self.buf[self.pos..self.pos + 4]);
        self.pos += 4;
        Ok(u32::from_be_bytes(b))
    }

    fn read_bytes(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        self.need(n)?;
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    /// Reads a possibly compressed name. Every pointer must target an offset
    /// strictly below the previous jump (or below its own position for the
    /// first), which rules out loops and forward references.
    fn read_name(&mut self) -> Result<DomainName, WireError> {
        let mut labels: Vec<Vec<u8>> = Vec::new();
        let mut wire_len = 1usize;
        let mut pos = self.pos;
        let mut resume: Option<usize> = None;
        let mut barrier: Option<usize> = None;
        loop {
            if pos >= self.buf.len() {
                return Err(WireError::Truncated { offset: pos });
            }
            let b = self.buf[pos];
            match b & 0xc0 {
                0x00 => {
                    if b == 0 {
                        pos += 1;
                        break;
                    }
                    let len = b as usize;
                    if pos + 1 + len > self.buf.len() {
                        return Err(WireError::Truncated { offset: pos });
                    }
                    wire_len += 1 + len;
                    if wire_len > crate::name::MAX_NAME_WIRE_LEN {
                        return Err(WireError::Name(NameError::NameTooLong));
                    }
                    labels.push(self.buf[pos + 1..pos + 1 + len].to_vec());
                    pos += 1 + len;
                }
                0xc0 => {
                    if pos + 2 > self.buf.len() {
                        return Err(WireError::Truncated { offset: pos });
                    }
                    let target = (((b & 0x3f) as usize) << 8) | self.buf[pos + 1] as usize;
                    let limit = barrier.unwrap_or(pos);
                    if target >= limit {
                        return Err(WireError::BadPointer { offset: pos });
                    }
                    if resume.is_none() {
                        resume = Some(pos + 2);
                    }
                    barrier = Some(target);
                    pos = target;
                }
                _ => return Err(WireError::BadLabel { offset: pos }),
            }
        }
        self.pos = resume.unwrap_or(pos);
        DomainName::from_labels(labels).map_err(WireError::Name)
    }
}

fn parse_question(r: &mut Reader<'_>) -> Result<DnsQuestion, WireError> {
    let qname = r.read_name()?;
    let type_at = r.pos;
    let code = r.read_u16()?;
    let qtype = RRType::from_code(code).ok_or(WireError::UnknownType {
        code,
        offset: type_at,
    })?;
    let class_at = r.pos;
    let class = r.read_u16()?;
    if class != 1 {
        return Err(WireError::UnknownClass {
            code: class,
            offset: class_at,
        });
    }
    Ok(DnsQuestion { qname, qtype })
}

fn parse_record(r: &mut Reader<'_>) -> Result<ResourceRecord, WireError> {
    let owner = r.read_name()?;
    let type_at = r.pos;
    let code = r.read_u16()?;
    let rtype = RRType::from_code(code).ok_or(WireError::UnknownType {
        code,
        offset: type_at,
    })?;
    if rtype.is_query_only() {
        return Err(WireError::QueryOnlyType {
            code,
            offset: type_at,
        });
    }
    let class_at = r.pos;
    let class = r.read_u16()?;
    if class != 1 {
        return Err(WireError::UnknownClass {
            code: class,
            offset: class_at,
        });
    }
    let ttl = r.read_u32()?;
    if ttl > MAX_TTL {
        return Err(WireError::TtlTooLarge { ttl });
    }
    let rdlength = r.read_u16()? as usize;
    let rdata_start = r.pos;
    r.need(rdlength)?;
    let rdata = match rtype {
        RRType::A => {
            let b = r.read_bytes(4)?;
            Rdata::A(Ipv4Addr::new(b[0], b[1], b[2], b[3]))
        }
        RRType::Aaaa => {
            let b = r.read_bytes(16)?;
            let mut o = [0u8; 16];
            o.copy_from_slice(b);
            Rdata::Aaaa(Ipv6Addr::from(o))
        }
        RRType::Ns => Rdata::Ns(r.read_name()?),
        RRType::Cname => Rdata::Cname(r.read_name()?),
        RRType::Ptr => Rdata::Ptr(r.read_name()?),
        RRType::Mx => Rdata::Mx {
            preference: r.read_u16()?,
            exchange: r.read_name()?,
        },
        RRType::Soa => Rdata::Soa {
            mname: r.read_name()?,
            rname: r.read_name()?,
            serial: r.read_u32()? as u64,
            refresh: r.read_u32()?,
            retry: r.read_u32()?,
            expire: r.read_u32()?,
            minimum: r.read_u32()?,
        },
        RRType::Txt => {
            let mut strings = Vec::new();
            while r.pos < rdata_start + rdlength {
                let len = r.read_u8()? as usize;
                if r.pos + len > rdata_start + rdlength {
                    return Err(WireError::RdataLength { offset: r.pos });
                }
                strings.push(r.read_bytes(len)?.to_vec());
            }
            Rdata::Txt(strings)
        }
        RRType::Srv => Rdata::Srv {
            priority: r.read_u16()?,
            weight: r.read_u16()?,
            port: r.read_u16()?,
            target: r.read_name()?,
        },
        RRType::Any => unreachable!("rejected above"),
    };
    if r.pos != rdata_start + rdlength {
        return Err(WireError::RdataLength { offset: r.pos });
    }
    Ok(ResourceRecord { owner, ttl, rdata })
}

/// Parses a complete message, resolving compression pointers.
pub fn parse_message(wire: &[u8]) -> Result<DnsMessage, WireError> {
    let mut r = Reader::new(wire);
    let id = r.read_u16()?;
    let flags_at = r.pos;
    let w = r.read_u16()?;
    let rcode_raw = (w & 0x0f) as u8;
    let rcode = Rcode::from_code(rcode_raw).ok_or(WireError::UnknownRcode {
        code: rcode_raw,
        offset: flags_at,
    })?;
    let flags = MessageFlags {
        response: w & (1 << 15) != 0,
        opcode: ((w >> 11) & 0x0f) as u8,
        authoritative: w & (1 << 10) != 0,
        truncated: w & (1 << 9) != 0,
        recursion_desired: w & (1 << 8) != 0,
        recursion_available: w & (1 << 7) != 0,
        rcode,
    };
    let qd = r.read_u16()?;
    let an = r.read_u16()?;
    let ns = r.read_u16()?;
    let ar = r.read_u16()?;
    let mut msg = DnsMessage {
        id,
        flags,
        ..DnsMessage::default()
    };
    for _ in 0..qd {
        msg.questions.push(parse_question(&mut r)?);
    }
    for _ in 0..an {
        msg.answers.push(parse_record(&mut r)?);
    }
    for _ in 0..ns {
        msg.authorities.push(parse_record(&mut r)?);
    }
    for _ in 0..ar {
        msg.additionals.push(parse_record(&mut r)?);
    }
    if r.pos != wire.len() {
        return Err(WireError::TrailingBytes { offset: r.pos });
    }
    Ok(msg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn name(s: &str) -> DomainName {
        s.parse().unwrap()
    }

    fn a_record(owner: &str, ttl: u32, addr: [u8; 4]) -> ResourceRecord {
        ResourceRecord::new(
            name(owner),
            ttl,
            Rdata::A(Ipv4Addr::new(addr[0], addr[1], addr[2], addr[3])),
        )
    }

    #[test]
    fn encode_name_writes_labels_and_zero() {
        let mut out = Vec::new();
        let mut ctx = NameOffsets::default();
        let n = encode_name(&name("pan.rz.uni-konstanz.de"), &mut out, &mut ctx, true).unwrap();
        assert_eq!(n, 24);
        assert_eq!(out[0], 3);
        assert_eq!(&out[1..4], b"pan");
        assert_eq!(*out.last().unwrap(), 0);
    }

    #[test]
    fn encode_name_reuses_suffixes() {
        let mut out = Vec::new();
        let mut ctx = NameOffsets::default();
        // Padding puts the first name at offset 12, as in a real message.
        out.extend_from_slice(&[0u8; 12]);
        encode_name(&name("pan.rz.uni-konstanz.de"), &mut out, &mut ctx, true).unwrap();
        let n = encode_name(&name("uranos.rz.uni-konstanz.de"), &mut out, &mut ctx, true).unwrap();
        // One 6-byte label, its length octet, and a 2-byte pointer.
        assert_eq!(n, 9);
        let tail = &out[out.len() - 2..];
        let ptr = u16::from_be_bytes([tail[0], tail[1]]);
        assert_eq!(ptr & 0xc000, 0xc000);
        assert_eq!(ptr & 0x3fff, 16); // "rz.uni-konstanz.de" starts after "pan"
    }

    #[test]
    fn root_name_is_one_zero_byte() {
        let mut out = Vec::new();
        let mut ctx = NameOffsets::default();
        let n = encode_name(&DomainName::root(), &mut out, &mut ctx, true).unwrap();
        assert_eq!(n, 1);
        assert_eq!(out, vec![0]);
    }

    #[test]
    fn empty_message_is_twelve_bytes() {
        let msg = DnsMessage::default();
        let wire = serialize_message(&msg, true).unwrap();
        assert_eq!(wire.len(), 12);
        assert_eq!(message_wire_size(&msg, true).unwrap(), 12);
        assert_eq!(parse_message(&wire).unwrap(), msg);
    }

    #[test]
    fn a_rdata_encodes_address_octets() {
        let rr = a_record("pan.rz.uni-konstanz.de", 86400, [134, 34, 3, 3]);
        let msg = DnsMessage {
            answers: vec![rr],
            ..DnsMessage::default()
        };
        let wire = serialize_message(&msg, false).unwrap();
        assert_eq!(&wire[wire.len() - 4..], &[0x86, 0x22, 0x03, 0x03]);
    }

    #[test]
    fn repeated_owner_saves_fifteen_bytes() {
        let mk = |_| a_record("uni-konstanz.de", 60, [134, 34, 240, 80]);
        let msg = DnsMessage {
            answers: (0..2).map(mk).collect(),
            ..DnsMessage::default()
        };
        let plain = serialize_message(&msg, false).unwrap();
        let packed = serialize_message(&msg, true).unwrap();
        // The 17-byte owner name of the second record shrinks to a 2-byte
        // pointer.
        assert_eq!(plain.len() - packed.len(), 15);
        assert_eq!(parse_message(&packed).unwrap(), parse_message(&plain).unwrap());
    }

    #[test]
    fn srv_target_is_not_compressed() {
        let target = name("host.example");
        let msg = DnsMessage {
            answers: vec![
                ResourceRecord::new(name("host.example"), 60, Rdata::A(Ipv4Addr::LOCALHOST)),
                ResourceRecord::new(
                    name("svc.example"),
                    60,
                    Rdata::Srv {
                        priority: 0,
                        weight: 0,
                        port: 80,
                        target: target.clone(),
                    },
                ),
            ],
            ..DnsMessage::default()
        };
        let wire = serialize_message(&msg, true).unwrap();
        // The SRV rdata must end with the full uncompressed target name.
        let suffix: &[u8] = b"\x04host\x07example\x00";
        assert!(wire.windows(suffix.len()).filter(|w| *w == suffix).count() >= 2);
        assert_eq!(parse_message(&wire).unwrap(), msg);
    }

    #[test]
    fn self_pointer_is_rejected() {
        // Header + one question whose name is a pointer to itself at offset 12.
        let mut wire = vec![0u8; 12];
        wire[5] = 1; // qdcount
        wire.extend_from_slice(&[0xc0, 0x0c, 0x00, 0x01, 0x00, 0x01]);
        assert_eq!(
            parse_message(&wire).unwrap_err(),
            WireError::BadPointer { offset: 12 }
        );
    }

    #[test]
    fn forward_pointer_is_rejected() {
        let mut wire = vec![0u8; 12];
        wire[5] = 1;
        wire.extend_from_slice(&[0xc0, 0x20, 0x00, 0x01, 0x00, 0x01]);
        assert_eq!(
            parse_message(&wire).unwrap_err(),
            WireError::BadPointer { offset: 12 }
        );
    }

    #[test]
    fn unknown_type_reports_offset() {
        let msg = DnsMessage::query(7, name("x.example"), RRType::A, false);
        let mut wire = serialize_message(&msg, false).unwrap();
        let type_at = wire.len() - 4;
        wire[type_at] = 0x00;
        wire[type_at + 1] = 99;
        assert_eq!(
            parse_message(&wire).unwrap_err(),
            WireError::UnknownType {
                code: 99,
                offset: type_at
            }
        );
    }

    #[test]
    fn any_is_query_only() {
        let q = DnsMessage::query(1, name("uni-konstanz.de"), RRType::Any, false);
        let wire = serialize_message(&q, true).unwrap();
        assert_eq!(parse_message(&wire).unwrap(), q);
        // The same code in a record section is rejected.
        let mut bad = vec![0u8; 12];
        bad[7] = 1; // ancount
        bad.extend_from_slice(&[0x00]); // root owner
        let type_at = bad.len();
        bad.extend_from_slice(&[0x00, 0xff, 0x00, 0x01, 0, 0, 0, 0, 0x00, 0x00]);
        assert_eq!(
            parse_message(&bad).unwrap_err(),
            WireError::QueryOnlyType {
                code: 255,
                offset: type_at
            }
        );
    }

    #[test]
    fn ttl_cap_enforced_both_ways() {
        let rr = a_record("x.example", MAX_TTL + 1, [1, 2, 3, 4]);
        let msg = DnsMessage {
            answers: vec![rr],
            ..DnsMessage::default()
        };
        assert_eq!(
            serialize_message(&msg, true).unwrap_err(),
            WireError::TtlTooLarge { ttl: MAX_TTL + 1 }
        );
    }

    #[test]
    fn soa_serial_truncates_modulo_2_32() {
        let soa = ResourceRecord::new(
            name("uni-konstanz.de"),
            86400,
            Rdata::Soa {
                mname: name("pan.rz.uni-konstanz.de"),
                rname: name("hostmaster.uni-konstanz.de"),
                serial: 20030808000,
                refresh: 172800,
                retry: 1209600,
                expire: 3600,
                minimum: 0,
            },
        );
        let msg = DnsMessage {
            answers: vec![soa],
            ..DnsMessage::default()
        };
        let wire = serialize_message(&msg, false).unwrap();
        let parsed = parse_message(&wire).unwrap();
        match &parsed.answers[0].rdata {
            Rdata::Soa { serial, .. } => assert_eq!(*serial, 20030808000u64 % (1 << 32)),
            other => panic!("unexpected rdata {other:?}"),
        }
    }

    #[test]
    fn truncated_input_reports_offset() {
        let msg = DnsMessage::query(3, name("x.example"), RRType::A, true);
        let wire = serialize_message(&msg, false).unwrap();
        let cut = &wire[..wire.len() - 3];
        assert!(matches!(
            parse_message(cut).unwrap_err(),
            WireError::Truncated { .. }
        ));
    }

    #[test]
    fn size_matches_serialization_for_both_modes() {
        let msg = DnsMessage {
            id: 77,
            flags: MessageFlags {
                response: true,
                authoritative: true,
                ..MessageFlags::default()
            },
            questions: vec![DnsQuestion::new(name("uni-konstanz.de"), RRType::Mx)],
            answers: vec![ResourceRecord::new(
                name("uni-konstanz.de"),
                86400,
                Rdata::Mx {
                    preference: 0,
                    exchange: name("imap.uni-konstanz.de"),
                },
            )],
            authorities: vec![ResourceRecord::new(
                name("uni-konstanz.de"),
                86400,
                Rdata::Ns(name("pan.rz.uni-konstanz.de")),
            )],
            additionals: vec![a_record("pan.rz.uni-konstanz.de", 86400, [134, 34, 3, 3])],
        };
        for compress in [false, true] {
            let wire = serialize_message(&msg, compress).unwrap();
            assert_eq!(message_wire_size(&msg, compress).unwrap(), wire.len());
            assert_eq!(parse_message(&wire).unwrap(), msg);
        }
        assert!(
            message_wire_size(&msg, true).unwrap() < message_wire_size(&msg, false).unwrap()
        );
    }
}
