//! Load the campus zone file and watch the authoritative server answer
//! different kinds of questions: a plain match, a CNAME chase, an empty
//! answer and a nonexistent name.
//!
//!     cargo run --example zone_lookup

use std::path::Path;

use simnet::server::auth_handle_query;
use simnet::{DnsMessage, RRType, ZoneConfig};

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("zones/uni-konstanz.de.zone");
    let text = std::fs::read_to_string(path).unwrap();
    let zone = ZoneConfig::parse(&text).unwrap();
    println!(
        "zone {} loaded: {} records, default ttl {}\n",
        zone.origin,
        zone.record_count(),
        zone.default_ttl
    );

    let asks = [
        ("pan.rz.uni-konstanz.de", RRType::A),
        ("www.uni-konstanz.de", RRType::A),
        ("uni-konstanz.de", RRType::Aaaa),
        ("gone.uni-konstanz.de", RRType::A),
        ("uni-konstanz.de", RRType::Mx),
    ];
    for (i, (qname, qtype)) in asks.iter().enumerate() {
        let query = DnsMessage::query(i as u16, qname.parse().unwrap(), *qtype, false);
        let resp = auth_handle_query(&zone, &query);
        println!("{qname} {qtype} -> {:?}", resp.flags.rcode);
        for rr in &resp.answers {
            println!("  answer    {} {} {:?}", rr.owner, rr.ttl, rr.rdata);
        }
        for rr in &resp.authorities {
            println!("  authority {} {} {}", rr.owner, rr.ttl, rr.rtype());
        }
    }
}
