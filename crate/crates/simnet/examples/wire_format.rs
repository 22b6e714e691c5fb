//! Build a DNS response, serialize it with and without name compression,
//! and parse it back.
//!
//!     cargo run --example wire_format

use simnet::{
    parse_message, serialize_message, DnsMessage, RRType, Rdata, ResourceRecord,
};

fn main() {
    let qname = "www.uni-konstanz.de".parse().unwrap();
    let mut msg = DnsMessage::query(0x1d06, qname, RRType::A, true);
    msg.flags.response = true;
    msg.flags.authoritative = true;
    msg.answers.push(ResourceRecord::new(
        "www.uni-konstanz.de".parse().unwrap(),
        86400,
        Rdata::Cname("proxy-neu.rz.uni-konstanz.de".parse().unwrap()),
    ));
    msg.answers.push(ResourceRecord::new(
        "proxy-neu.rz.uni-konstanz.de".parse().unwrap(),
        86400,
        Rdata::A("134.34.240.1".parse().unwrap()),
    ));

    let plain = serialize_message(&msg, false).unwrap();
    let packed = serialize_message(&msg, true).unwrap();
    println!("uncompressed: {:4} bytes", plain.len());
    println!("compressed:   {:4} bytes", packed.len());
    println!("saved:        {:4} bytes", plain.len() - packed.len());

    // Both images decode to the same message.
    assert_eq!(parse_message(&plain).unwrap(), msg);
    assert_eq!(parse_message(&packed).unwrap(), msg);

    println!("\ncompressed wire image:");
    for chunk in packed.chunks(16) {
        let hex: Vec<String> = chunk.iter().map(|b| format!("{b:02x}")).collect();
        let text: String = chunk
            .iter()
            .map(|&b| if b.is_ascii_graphic() { b as char } else { '.' })
            .collect();
        println!("  {:48} {text}", hex.join(" "));
    }
}
