//! Drive the event kernel with custom node behaviours: a pinger with a
//! jittered timer and a responder, tracing every event. Shows timers,
//! named RNG streams, the single-wakeup contract and per-node statistics.
//!
//!     cargo run --example event_kernel

use std::any::Any;
use std::time::Duration;

use rand::Rng;

use simnet::{
    DnsMessage, DnsQuestion, Node, NodeCtx, NodeError, NodeId, RRType, Rcode, SimBuilder, SimTime,
    TimeEventSet,
};

/// Sends a question every 1-2 s and counts the echoes that come back.
struct Pinger {
    peer: NodeId,
    timers: TimeEventSet<u16>,
    next_id: u16,
    echoes: u32,
}

impl Pinger {
    fn new(peer: NodeId) -> Self {
        Pinger {
            peer,
            timers: TimeEventSet::new(),
            next_id: 0,
            echoes: 0,
        }
    }

    fn arm(&mut self, ctx: &mut NodeCtx<'_>) {
        let jitter_ms = ctx.rng("pinger").gen_range(1_000..=2_000);
        let at = ctx.now() + Duration::from_millis(jitter_ms);
        self.timers.insert(at, self.next_id);
        self.next_id += 1;
        // One wakeup per node: always re-arm to the head of the timer set.
        ctx.set_wakeup(self.timers.head_expiry());
    }
}

impl Node for Pinger {
    fn start(&mut self, ctx: &mut NodeCtx<'_>) -> Result<(), NodeError> {
        self.arm(ctx);
        Ok(())
    }

    fn handle_packet(
        &mut self,
        ctx: &mut NodeCtx<'_>,
        pkt: &simnet::SimPacket,
    ) -> Result<(), NodeError> {
        if pkt.payload.flags.response {
            self.echoes += 1;
            ctx.trace("echo", &format!("id={}", pkt.payload.id));
        }
        Ok(())
    }

    fn handle_wakeup(&mut self, ctx: &mut NodeCtx<'_>) -> Result<(), NodeError> {
        while let Some((_, id)) = self.timers.pop_due(ctx.now()) {
            let q = DnsMessage::query(id, "ping.example".parse().unwrap(), RRType::Txt, false);
            ctx.send_unicast(self.peer, q)?;
            ctx.stats_mut().queries_sent += 1;
        }
        self.arm(ctx);
        Ok(())
    }

    fn head_expiry(&self) -> Option<SimTime> {
        self.timers.head_expiry()
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}

/// Echoes every question straight back.
struct Responder;

impl Node for Responder {
    fn handle_packet(
        &mut self,
        ctx: &mut NodeCtx<'_>,
        pkt: &simnet::SimPacket,
    ) -> Result<(), NodeError> {
        let mut resp = DnsMessage::response_to(&pkt.payload, Rcode::NoError);
        resp.questions = vec![DnsQuestion::new(
            "ping.example".parse().unwrap(),
            RRType::Txt,
        )];
        ctx.stats_mut().responses_sent += 1;
        ctx.send_unicast(pkt.src, resp)
    }

    fn handle_wakeup(&mut self, _ctx: &mut NodeCtx<'_>) -> Result<(), NodeError> {
        Ok(())
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}

fn main() {
    let mut b = SimBuilder::new(7);
    b.set_default_delay(Duration::from_millis(20));
    b.enable_trace();
    b.enable_assertions();
    let responder = b.add_node("responder", "10.0.0.2".parse().unwrap(), Box::new(Responder));
    let pinger = b.add_node(
        "pinger",
        "10.0.0.1".parse().unwrap(),
        Box::new(Pinger::new(responder)),
    );

    let mut sim = b.build();
    let events = sim.run_until(SimTime::from_secs(10)).unwrap();

    println!("first trace lines:");
    for line in sim.trace().iter().take(12) {
        println!("  {line}");
    }
    println!("  ... ({} lines total)", sim.trace().len());

    let node = sim.node::<Pinger>(pinger).unwrap();
    println!("\n{events} events in 10 s; {} echoes received", node.echoes);
    println!(
        "pinger stats:    {} queries sent, {} bytes received",
        sim.stats(pinger).queries_sent,
        sim.stats(pinger).total_bytes()
    );
    println!(
        "responder stats: {} responses sent, {} bytes received",
        sim.stats(responder).responses_sent,
        sim.stats(responder).total_bytes()
    );
}
