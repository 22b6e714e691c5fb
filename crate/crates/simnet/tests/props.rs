//! Property tests: name normalization, wire round-trips against both
//! serializers, the cache against a reference model, and whole random
//! networks against the kernel's own conservation checks.

use std::collections::BTreeMap;

use proptest::prelude::*;

use simnet::cache::{CacheKey, CacheStore};
use simnet::experiment::run_scenario;
use simnet::name::DomainName;
use simnet::scenario::ScenarioConfig;
use simnet::time::SimTime;
use simnet::wire::{
    parse_message, serialize_message, DnsMessage, DnsQuestion, MessageFlags, RRType, Rcode, Rdata,
    ResourceRecord,
};

fn label() -> impl Strategy<Value = String> {
    "[a-z0-9_][a-z0-9-]{0,14}"
}

fn domain_name() -> impl Strategy<Value = DomainName> {
    prop::collection::vec(label(), 1..5).prop_map(|ls| {
        ls.join(".")
            .parse()
            .expect("generated labels are always valid")
    })
}

fn rrtype() -> impl Strategy<Value = RRType> {
    prop::sample::select(vec![
        RRType::A,
        RRType::Aaaa,
        RRType::Ns,
        RRType::Cname,
        RRType::Soa,
        RRType::Ptr,
        RRType::Mx,
        RRType::Txt,
        RRType::Srv,
    ])
}

fn rdata() -> impl Strategy<Value = Rdata> {
    prop_oneof![
        any::<[u8; 4]>().prop_map(|o| Rdata::A(o.into())),
        any::<[u8; 16]>().prop_map(|o| Rdata::Aaaa(o.into())),
        domain_name().prop_map(Rdata::Ns),
        domain_name().prop_map(Rdata::Cname),
        domain_name().prop_map(Rdata::Ptr),
        (any::<u16>(), domain_name()).prop_map(|(preference, exchange)| Rdata::Mx {
            preference,
            exchange
        }),
        (
            domain_name(),
            domain_name(),
            // Serials wider than 32 bits are written modulo 2^32, so only
            // in-range values can survive a round trip unchanged.
            any::<u32>(),
            any::<u32>(),
            any::<u32>(),
            any::<u32>(),
            any::<u32>()
        )
            .prop_map(|(mname, rname, serial, refresh, retry, expire, minimum)| {
                Rdata::Soa {
                    mname,
                    rname,
                    serial: serial as u64,
                    refresh,
                    retry,
                    expire,
                    minimum,
                }
            }),
        prop::collection::vec(prop::collection::vec(any::<u8>(), 0..24), 1..4)
            .prop_map(Rdata::Txt),
        (any::<u16>(), any::<u16>(), any::<u16>(), domain_name()).prop_map(
            |(priority, weight, port, target)| Rdata::Srv {
                priority,
                weight,
                port,
                target
            }
        ),
    ]
}

fn record() -> impl Strategy<Value = ResourceRecord> {
    (domain_name(), 0u32..=2_147_483_647, rdata())
        .prop_map(|(owner, ttl, rdata)| ResourceRecord::new(owner, ttl, rdata))
}

fn flags() -> impl Strategy<Value = MessageFlags> {
    (
        any::<bool>(),
        0u8..16,
        any::<bool>(),
        any::<bool>(),
        any::<bool>(),
        any::<bool>(),
        prop::sample::select(vec![
            Rcode::NoError,
            Rcode::FormErr,
            Rcode::ServFail,
            Rcode::NxDomain,
            Rcode::NotImp,
        ]),
    )
        .prop_map(
            |(response, opcode, authoritative, truncated, rd, ra, rcode)| MessageFlags {
                response,
                opcode,
                authoritative,
                truncated,
                recursion_desired: rd,
                recursion_available: ra,
                rcode,
            },
        )
}

fn message() -> impl Strategy<Value = DnsMessage> {
    (
        any::<u16>(),
        flags(),
        prop::collection::vec((domain_name(), rrtype()), 0..3),
        prop::collection::vec(record(), 0..4),
        prop::collection::vec(record(), 0..3),
        prop::collection::vec(record(), 0..3),
    )
        .prop_map(|(id, flags, qs, answers, authorities, additionals)| DnsMessage {
            id,
            flags,
            questions: qs
                .into_iter()
                .map(|(qname, qtype)| DnsQuestion { qname, qtype })
                .collect(),
            answers,
            authorities,
            additionals,
        })
}

proptest! {
    #[test]
    fn name_display_parse_round_trip(name in domain_name()) {
        let text = name.to_string();
        let back: DomainName = text.parse().unwrap();
        prop_assert_eq!(&back, &name);
        // Display is idempotent through a second round.
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn name_comparison_ignores_case(name in domain_name()) {
        let upper: DomainName = name.to_string().to_ascii_uppercase().parse().unwrap();
        prop_assert_eq!(&upper, &name);
        prop_assert_eq!(upper.cmp(&name), std::cmp::Ordering::Equal);
        let mut h1 = std::collections::hash_map::DefaultHasher::new();
        let mut h2 = h1.clone();
        use std::hash::{Hash, Hasher};
        name.hash(&mut h1);
        upper.hash(&mut h2);
        prop_assert_eq!(h1.finish(), h2.finish());
    }

    #[test]
    fn wire_round_trips_in_both_modes(msg in message()) {
        let plain = serialize_message(&msg, false).unwrap();
        let packed = serialize_message(&msg, true).unwrap();
        prop_assert!(packed.len() <= plain.len());
        prop_assert_eq!(&parse_message(&plain).unwrap(), &msg);
        prop_assert_eq!(&parse_message(&packed).unwrap(), &msg);
    }

    #[test]
    fn truncating_a_message_never_panics(msg in message(), cut in 0usize..64) {
        let packed = serialize_message(&msg, true).unwrap();
        let keep = packed.len().saturating_sub(cut);
        // Parsing may fail, but must fail cleanly.
        let _ = parse_message(&packed[..keep]);
    }
}

#[derive(Debug, Clone)]
enum CacheOp {
    Put { key: usize, ttl: u32 },
    Get { key: usize },
}

fn cache_op() -> impl Strategy<Value = CacheOp> {
    prop_oneof![
        3 => (0usize..12, 1u32..4).prop_map(|(key, ttl)| CacheOp::Put { key, ttl }),
        2 => (0usize..12).prop_map(|key| CacheOp::Get { key }),
    ]
}

proptest! {
    /// The TTL cache against a reference model: same hits, same decayed
    /// TTLs, same evictions, same size, over arbitrary operation mixes.
    #[test]
    fn ttl_cache_matches_reference_model(ops in prop::collection::vec(cache_op(), 1..200)) {
        const CAPACITY: usize = 4;
        let keys: Vec<CacheKey> = (0..12)
            .map(|i| CacheKey::new(format!("host{i}.lan").parse().unwrap(), RRType::A))
            .collect();

        let mut cache = CacheStore::new_ttl(CAPACITY);
        // Reference: key index -> (expiry, insertion sequence).
        let mut model: BTreeMap<usize, (SimTime, u64)> = BTreeMap::new();
        let mut seq = 0u64;

        for (step, op) in ops.into_iter().enumerate() {
            let now = SimTime::from_millis(700 * step as u64);
            match op {
                CacheOp::Put { key, ttl } => {
                    let expiry = now + std::time::Duration::from_secs(ttl as u64);
                    let expect_eviction =
                        !model.contains_key(&key) && model.len() == CAPACITY;
                    let evicted = cache.put(
                        keys[key].clone(),
                        vec![ResourceRecord::new(
                            keys[key].name.clone(),
                            ttl,
                            Rdata::A([10, 0, 0, key as u8].into()),
                        )],
                        now,
                    );
                    if expect_eviction {
                        let victim = *model
                            .iter()
                            .min_by_key(|(_, &(exp, s))| (exp, s))
                            .map(|(k, _)| k)
                            .unwrap();
                        prop_assert_eq!(evicted.len(), 1);
                        prop_assert_eq!(&evicted[0], &keys[victim]);
                        model.remove(&victim);
                    } else {
                        prop_assert!(evicted.is_empty());
                    }
                    model.insert(key, (expiry, seq));
                    seq += 1;
                }
                CacheOp::Get { key } => {
                    let got = cache.get(&keys[key], now);
                    match model.get(&key) {
                        Some(&(expiry, _)) if now < expiry => {
                            let records = got.expect("model says live");
                            let remaining = expiry.as_nanos() - now.as_nanos();
                            prop_assert_eq!(
                                records[0].ttl as u64,
                                remaining.div_ceil(1_000_000_000)
                            );
                        }
                        Some(_) => {
                            // Expired: a miss, and the entry is gone.
                            prop_assert!(got.is_none());
                            model.remove(&key);
                        }
                        None => prop_assert!(got.is_none()),
                    }
                }
            }
            prop_assert_eq!(cache.len(), model.len());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Random small networks run to completion with no privacy leaks; the
    /// conservation assertions inside `run_scenario` hold throughout.
    #[test]
    fn random_networks_conserve_traffic_and_stay_private(
        seed in 0u64..1000,
        hosts in 2u32..6,
        private in 0u32..6,
        max_services in 1u32..4,
        ratio in 0.0f64..=1.0,
        friends in 0u32..3,
        duration in 10.0f64..90.0,
    ) {
        let mut cfg = ScenarioConfig::default();
        cfg.duration = duration;
        cfg.mdns.num_resolvers = hosts;
        cfg.mdns.num_private_resolvers = private.min(hosts);
        cfg.mdns.min_services = 1;
        cfg.mdns.max_services = max_services;
        cfg.mdns.min_friends = 0;
        cfg.mdns.max_friends = friends;
        cfg.mdns.private_service_ratio = ratio;
        let result = run_scenario(&cfg, seed, false).unwrap();
        prop_assert!(result.violations.is_empty(), "{:?}", result.violations);
        prop_assert_eq!(result.names.len(), hosts as usize);
        // Announcements happen no matter what, so traffic is never zero.
        prop_assert!(result.aggregate.total_bytes() > 0);
    }
}
