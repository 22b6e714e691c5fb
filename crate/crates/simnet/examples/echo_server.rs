//! The echo-style server answers from the question itself: one marker
//! label decodes an address out of the name, the other reflects the
//! querier's own address back as TXT.
//!
//!     cargo run --example echo_server

use std::time::Duration;

use simnet::server::EchoConfig;
use simnet::{DnsClient, DnsServer, RRType, SimBuilder, SimTime};

fn main() {
    let mut b = SimBuilder::new(1);
    b.set_default_delay(Duration::from_millis(5));
    b.add_node(
        "echo-ns",
        "10.0.3.1".parse().unwrap(),
        Box::new(DnsServer::echo(EchoConfig::new("echo.sim".parse().unwrap()))),
    );

    let mut client = DnsClient::new("10.0.3.1".parse().unwrap());
    // 86 22 f0 50 is 134.34.240.80: the answer is baked into the name.
    client.resolve_at(
        SimTime::from_secs(1),
        "8622f050.00.echo.sim".parse().unwrap(),
        RRType::A,
    );
    // The cca marker echoes whoever asks.
    client.resolve_at(
        SimTime::from_secs(2),
        "cca.echo.sim".parse().unwrap(),
        RRType::Txt,
    );
    // No marker: the server has nothing to say.
    client.resolve_at(
        SimTime::from_secs(3),
        "plain.echo.sim".parse().unwrap(),
        RRType::A,
    );
    let stub = b.add_node("stub", "10.0.9.1".parse().unwrap(), Box::new(client));

    let mut sim = b.build();
    sim.run_until(SimTime::from_secs(5)).unwrap();

    for o in sim.node::<DnsClient>(stub).unwrap().outcomes() {
        println!("{} {} -> {:?}", o.qname, o.qtype, o.rcode.unwrap());
        for rr in &o.answers {
            match &rr.rdata {
                simnet::Rdata::Txt(strings) => {
                    for s in strings {
                        println!("  TXT \"{}\" (ttl {})", String::from_utf8_lossy(s), rr.ttl);
                    }
                }
                other => println!("  {other:?} (ttl {})", rr.ttl),
            }
        }
    }
}
