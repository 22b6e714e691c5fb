//! A record cache keyed by (name, type) with TTL-based expiry.
//!
//! Two eviction policies: `Simple` throws out a uniformly random entry,
//! `Ttl` the entry closest to expiry (ties broken by insertion order). An
//! entry is valid strictly before its expiry instant; reads return records
//! whose TTL has been decayed to the time remaining.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::name::DomainName;
use crate::time::SimTime;
use crate::wire::{RRType, ResourceRecord};

/// Cache key. ANY is a question type, never a cache key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CacheKey {
    pub name: DomainName,
    pub rtype: RRType,
}

impl CacheKey {
    pub fn new(name: DomainName, rtype: RRType) -> Self {
        debug_assert!(rtype != RRType::Any, "ANY cannot be cached");
        CacheKey { name, rtype }
    }
}

/// One cached RRset. Original TTL is the minimum over the records.
#[derive(Debug, Clone)]
pub struct CacheEntry {
    pub records: Vec<ResourceRecord>,
    pub inserted_at: SimTime,
    pub original_ttl: u32,
    seq: u64,
}

impl CacheEntry {
    pub fn expiry(&self) -> SimTime {
        self.inserted_at + std::time::Duration::from_secs(self.original_ttl as u64)
    }

    /// Seconds a record of this entry has left at `now`, by its own original
    /// TTL. Saturates at zero.
    pub fn remaining_secs(&self, rr: &ResourceRecord, now: SimTime) -> u64 {
        (rr.ttl as u64).saturating_sub(now.secs_since(self.inserted_at))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CachePolicy {
    Simple { capacity: usize },
    Ttl { capacity: usize },
}

impl CachePolicy {
    pub fn capacity(&self) -> usize {
        match self {
            CachePolicy::Simple { capacity } | CachePolicy::Ttl { capacity } => *capacity,
        }
    }
}

/// The cache store. Iteration orders are deterministic throughout, so a
/// seeded random eviction is reproducible.
pub struct CacheStore {
    policy: CachePolicy,
    entries: BTreeMap<CacheKey, CacheEntry>,
    by_expiry: BTreeSet<(SimTime, u64, CacheKey)>,
    next_seq: u64,
    rng: Option<ChaCha8Rng>,
}

impl CacheStore {
    /// A store with TTL-ordered eviction.
    pub fn new_ttl(capacity: usize) -> Self {
        Self::new(CachePolicy::Ttl { capacity }, None)
    }

    /// A store evicting uniformly at random, drawing from `rng`.
    pub fn new_simple(capacity: usize, rng: ChaCha8Rng) -> Self {
        Self::new(CachePolicy::Simple { capacity }, Some(rng))
    }

    fn new(policy: CachePolicy, rng: Option<ChaCha8Rng>) -> Self {
        assert!(policy.capacity() > 0, "capacity must be positive");
        CacheStore {
            policy,
            entries: BTreeMap::new(),
            by_expiry: BTreeSet::new(),
            next_seq: 0,
            rng,
        }
    }

    pub fn policy(&self) -> CachePolicy {
        self.policy
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, key: &CacheKey) -> bool {
        self.entries.contains_key(key)
    }

    /// Stores an RRset, replacing any entry under the same key. When the
    /// store is full a victim is evicted first, per policy. Returns the
    /// evicted keys.
    pub fn put(
        &mut self,
        key: CacheKey,
        records: Vec<ResourceRecord>,
        now: SimTime,
    ) -> Vec<CacheKey> {
        assert!(!records.is_empty(), "an rrset has at least one record");
        let mut evicted = Vec::new();
        if !self.entries.contains_key(&key) && self.entries.len() == self.policy.capacity() {
            if let Some(victim) = self.pick_victim() {
                self.remove(&victim);
                evicted.push(victim);
            }
        }
        self.remove(&key);
        let original_ttl = records.iter().map(|r| r.ttl).min().unwrap_or(0);
        let seq = self.next_seq;
        self.next_seq += 1;
        let entry = CacheEntry {
            records,
            inserted_at: now,
            original_ttl,
            seq,
        };
        self.by_expiry.insert((entry.expiry(), seq, key.clone()));
        self.entries.insert(key, entry);
        evicted
    }

    fn pick_victim(&mut self) -> Option<CacheKey> {
        match self.policy {
            CachePolicy::Ttl { .. } => self
                .by_expiry
                .iter()
                .next()
                .map(|(_, _, key)| key.clone()),
            CachePolicy::Simple { .. } => {
                let rng = self
                    .rng
                    .as_mut()
                    .expect("simple policy carries its rng stream");
                let idx = rng.gen_range(0..self.entries.len());
                self.entries.keys().nth(idx).cloned()
            }
        }
    }

    fn remove(&mut self, key: &CacheKey) -> Option<CacheEntry> {
        let entry = self.entries.remove(key)?;
        self.by_expiry.remove(&(entry.expiry(), entry.seq, key.clone()));
        Some(entry)
    }

    /// Looks up a live entry. A hit returns the records with TTLs decayed to
    /// the remaining lifetime, rounded up so a hit's TTL is always positive.
    /// An expired entry is removed on access and reported as a miss.
    pub fn get(&mut self, key: &CacheKey, now: SimTime) -> Option<Vec<ResourceRecord>> {
        let entry = self.entries.get(key)?;
        let expiry = entry.expiry();
        if now >= expiry {
            self.remove(key);
            return None;
        }
        let remaining_ns = expiry.as_nanos() - now.as_nanos();
        let remaining = remaining_ns.div_ceil(1_000_000_000) as u32;
        Some(
            entry
                .records
                .iter()
                .map(|rr| ResourceRecord {
                    ttl: remaining,
                    ..rr.clone()
                })
                .collect(),
        )
    }

    /// A live entry with its original records and insertion time, without
    /// decaying or touching hit accounting.
    pub fn peek(&self, key: &CacheKey, now: SimTime) -> Option<&CacheEntry> {
        let entry = self.entries.get(key)?;
        if now >= entry.expiry() {
            return None;
        }
        Some(entry)
    }

    /// Live keys in deterministic order.
    pub fn keys(&self, now: SimTime) -> Vec<CacheKey> {
        self.entries
            .iter()
            .filter(|(_, e)| now < e.expiry())
            .map(|(k, _)| k.clone())
            .collect()
    }

    /// Removes every entry whose expiry is at or before `now`. Returns how
    /// many were purged.
    pub fn sweep(&mut self, now: SimTime) -> usize {
        let dead: Vec<CacheKey> = self
            .by_expiry
            .iter()
            .take_while(|(expiry, _, _)| *expiry <= now)
            .map(|(_, _, key)| key.clone())
            .collect();
        for key in &dead {
            self.remove(key);
        }
        dead.len()
    }
}
