//! Simulation time and per-node timer sets.
//!
//! `SimTime` is an absolute instant in integer nanoseconds, so time
//! arithmetic is exact and platform independent. Durations are plain
//! `std::time::Duration`.
//!
//! A `TimeEventSet` holds a node's pending timers ordered by expiry, ties
//! broken by insertion order. The kernel keeps at most one wakeup per node,
//! always at the set's head expiry; nodes drain everything due when the
//! wakeup fires.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign};
use std::time::Duration;

use thiserror::Error;

/// An absolute simulation instant in nanoseconds since the run began.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_nanos(ns: u64) -> Self {
        SimTime(ns)
    }

    pub fn from_micros(us: u64) -> Self {
        SimTime(us * 1_000)
    }

    pub fn from_millis(ms: u64) -> Self {
        SimTime(ms * 1_000_000)
    }

    pub fn from_secs(s: u64) -> Self {
        SimTime(s * 1_000_000_000)
    }

    pub fn from_secs_f64(s: f64) -> Self {
        SimTime(Duration::from_secs_f64(s).as_nanos() as u64)
    }

    pub fn as_nanos(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e9
    }

    /// Whole seconds elapsed since `earlier`, rounded down.
    pub fn secs_since(self, earlier: SimTime) -> u64 {
        (self.0.saturating_sub(earlier.0)) / 1_000_000_000
    }

    pub fn saturating_duration_since(self, earlier: SimTime) -> Duration {
        Duration::from_nanos(self.0.saturating_sub(earlier.0))
    }
}

impl Add<Duration> for SimTime {
    type Output = SimTime;

    fn add(self, rhs: Duration) -> SimTime {
        SimTime(self.0 + rhs.as_nanos() as u64)
    }
}

impl AddAssign<Duration> for SimTime {
    fn add_assign(&mut self, rhs: Duration) {
        self.0 += rhs.as_nanos() as u64;
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("expiry {expiry} lies before the current time {now}")]
pub struct SchedulePastError {
    pub now: SimTime,
    pub expiry: SimTime,
}

/// Handle to one scheduled event, usable to cancel it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventHandle {
    expiry: SimTime,
    seq: u64,
}

impl EventHandle {
    pub fn expiry(&self) -> SimTime {
        self.expiry
    }
}

/// Pending timers ordered by (expiry, insertion).
#[derive(Debug)]
pub struct TimeEventSet<P> {
    events: BTreeMap<(SimTime, u64), P>,
    next_seq: u64,
}

impl<P> Default for TimeEventSet<P> {
    fn default() -> Self {
        TimeEventSet {
            events: BTreeMap::new(),
            next_seq: 0,
        }
    }
}

impl<P> TimeEventSet<P> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts an event due at `expiry`.
    pub fn insert(&mut self, expiry: SimTime, payload: P) -> EventHandle {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.events.insert((expiry, seq), payload);
        EventHandle { expiry, seq }
    }

    /// Like `insert`, but rejects expiries before `now`.
    pub fn schedule(
        &mut self,
        now: SimTime,
        expiry: SimTime,
        payload: P,
    ) -> Result<EventHandle, SchedulePastError> {
        if expiry < now {
            return Err(SchedulePastError { now, expiry });
        }
        Ok(self.insert(expiry, payload))
    }

    /// Removes the event behind `handle`. Returns whether it was present.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        self.events.remove(&(handle.expiry, handle.seq)).is_some()
    }

    /// Earliest pending expiry.
    pub fn head_expiry(&self) -> Option<SimTime> {
        self.events.keys().next().map(|(t, _)| *t)
    }

    pub fn head(&self) -> Option<(EventHandle, &P)> {
        self.events
            .iter()
            .next()
            .map(|(&(expiry, seq), p)| (EventHandle { expiry, seq }, p))
    }

    /// Pops the head if it is due at or before `now`.
    pub fn pop_due(&mut self, now: SimTime) -> Option<(SimTime, P)> {
        let &(expiry, seq) = self.events.keys().next()?;
        if expiry > now {
            return None;
        }
        let p = self.events.remove(&(expiry, seq)).unwrap();
        Some((expiry, p))
    }

    /// Drops every event whose payload fails the predicate.
    pub fn retain<F: FnMut(&P) -> bool>(&mut self, mut f: F) {
        self.events.retain(|_, p| f(p));
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}
