//! Deterministic discrete-event core.
//!
//! Events are ordered by `(fire_time, kind rank, insertion sequence)`, which is
//! a total order: two runs that schedule the same events in the same order
//! dispatch them identically. Periodic concerns (mobility, measurement and
//! load reporting) are realized as self-rescheduling tick events.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Virtual time in seconds.
pub type SimTime = f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    FrameSend,
    UplinkArrival,
    ServiceComplete,
    DownlinkArrival,
    MobilityTick,
    MeasurementReportTick,
    LoadReportTick,
    HandoffComplete,
    MetricsFlush,
}

impl EventKind {
    /// Same-instant ordering: completions free queue slots before arrivals,
    /// arrivals precede new sends, and ticks observe the settled state.
    pub fn rank(self) -> u8 {
        match self {
            EventKind::ServiceComplete => 0,
            EventKind::UplinkArrival => 1,
            EventKind::DownlinkArrival => 2,
            EventKind::FrameSend => 3,
            EventKind::HandoffComplete => 4,
            EventKind::MobilityTick => 5,
            EventKind::MeasurementReportTick => 6,
            EventKind::LoadReportTick => 7,
            EventKind::MetricsFlush => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EventKind::FrameSend => "FrameSend",
            EventKind::UplinkArrival => "UplinkArrival",
            EventKind::ServiceComplete => "ServiceComplete",
            EventKind::DownlinkArrival => "DownlinkArrival",
            EventKind::MobilityTick => "MobilityTick",
            EventKind::MeasurementReportTick => "MeasurementReportTick",
            EventKind::LoadReportTick => "LoadReportTick",
            EventKind::HandoffComplete => "HandoffComplete",
            EventKind::MetricsFlush => "MetricsFlush",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Kind-specific identifiers carried by an event.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Payload {
    pub ue: Option<usize>,
    pub mec: Option<usize>,
    pub job: Option<usize>,
}

impl Payload {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn ue(ue: usize) -> Self {
        Self {
            ue: Some(ue),
            ..Self::default()
        }
    }

    pub fn mec(mec: usize) -> Self {
        Self {
            mec: Some(mec),
            ..Self::default()
        }
    }

    pub fn job(job: usize) -> Self {
        Self {
            job: Some(job),
            ..Self::default()
        }
    }

    pub fn with_mec(mut self, mec: usize) -> Self {
        self.mec = Some(mec);
        self
    }

    pub fn with_job(mut self, job: usize) -> Self {
        self.job = Some(job);
        self
    }
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn id(v: Option<usize>) -> String {
            v.map(|x| x.to_string()).unwrap_or_else(|| "-".to_string())
        }
        write!(f, "ue={} mec={} job={}", id(self.ue), id(self.mec), id(self.job))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEvent {
    pub fire_time: SimTime,
    pub kind: EventKind,
    pub payload: Payload,
}

impl SimEvent {
    pub fn new(fire_time: SimTime, kind: EventKind, payload: Payload) -> Self {
        Self {
            fire_time,
            kind,
            payload,
        }
    }
}

/// Opaque handle returned by [`EventQueue::schedule`], usable for cancellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventHandle(u64);

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("event {kind} scheduled at t={at} but clock is already at t={now}")]
    ScheduledInPast {
        kind: EventKind,
        at: SimTime,
        now: SimTime,
    },
    #[error("non-finite fire time for event {kind}")]
    NonFiniteTime { kind: EventKind },
    #[error("run_until({t_end}) is before the current clock {now}")]
    HorizonInPast { t_end: SimTime, now: SimTime },
    #[error("handler fault at t={} on {} ({}): {message}", .event.fire_time, .event.kind, .event.payload)]
    HandlerFault { event: SimEvent, message: String },
}

struct Entry {
    event: SimEvent,
    seq: u64,
}

impl Entry {
    fn key(&self) -> (SimTime, u8, u64) {
        (self.event.fire_time, self.event.kind.rank(), self.seq)
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // BinaryHeap is a max-heap; invert so the earliest key pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        let (ta, ra, sa) = self.key();
        let (tb, rb, sb) = other.key();
        tb.total_cmp(&ta).then(rb.cmp(&ra)).then(sb.cmp(&sa))
    }
}

/// Pending-event set plus the virtual clock.
#[derive(Default)]
pub struct EventQueue {
    heap: BinaryHeap<Entry>,
    cancelled: HashSet<u64>,
    next_seq: u64,
    now: SimTime,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Number of pending, non-cancelled events.
    pub fn len(&self) -> usize {
        self.heap.len() - self.cancelled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn schedule(&mut self, event: SimEvent) -> Result<EventHandle, EngineError> {
        if !event.fire_time.is_finite() {
            return Err(EngineError::NonFiniteTime { kind: event.kind });
        }
        if event.fire_time < self.now {
            return Err(EngineError::ScheduledInPast {
                kind: event.kind,
                at: event.fire_time,
                now: self.now,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry { event, seq });
        Ok(EventHandle(seq))
    }

    /// Schedules `kind` at `now + delay`.
    pub fn schedule_in(
        &mut self,
        delay: SimTime,
        kind: EventKind,
        payload: Payload,
    ) -> Result<EventHandle, EngineError> {
        let at = self.now + delay;
        self.schedule(SimEvent::new(at, kind, payload))
    }

    /// Cancels a pending event. Returns false if it already fired or was
    /// cancelled before.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        if !self.heap.iter().any(|e| e.seq == handle.0) {
            return false;
        }
        self.cancelled.insert(handle.0)
    }

    fn pop_due(&mut self, t_end: SimTime) -> Option<SimEvent> {
        loop {
            let top = self.heap.peek()?;
            if top.event.fire_time > t_end {
                return None;
            }
            let entry = self.heap.pop().expect("peeked");
            if self.cancelled.remove(&entry.seq) {
                continue;
            }
            self.now = entry.event.fire_time;
            return Some(entry.event);
        }
    }
}

/// Receives dispatched events. Handlers schedule follow-up events through
/// the queue they are handed.
pub trait Handler {
    fn handle(&mut self, event: &SimEvent, queue: &mut EventQueue) -> Result<(), String>;
}

/// One line of the dispatch log.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchRecord {
    pub time: SimTime,
    pub kind: EventKind,
    pub payload: Payload,
}

impl DispatchRecord {
    /// Tab-separated trace line: time, kind, ue, mec, job.
    pub fn to_tsv(&self) -> String {
        fn id(v: Option<usize>) -> String {
            v.map(|x| x.to_string()).unwrap_or_else(|| "-".into())
        }
        format!(
            "{:.9}\t{}\t{}\t{}\t{}",
            self.time,
            self.kind,
            id(self.payload.ue),
            id(self.payload.mec),
            id(self.payload.job)
        )
    }
}

/// Event queue, run loop and optional dispatch log.
#[derive(Default)]
pub struct Engine {
    pub queue: EventQueue,
    dispatched: u64,
    log: Option<Vec<DispatchRecord>>,
}

impl Engine {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_log() -> Self {
        Self {
            log: Some(Vec::new()),
            ..Self::default()
        }
    }

    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    pub fn log(&self) -> Option<&[DispatchRecord]> {
        self.log.as_deref()
    }

    pub fn take_log(&mut self) -> Option<Vec<DispatchRecord>> {
        self.log.take()
    }

    /// Dispatches every event with `fire_time <= t_end`, then sets the clock
    /// to `t_end`.
    pub fn run_until<H: Handler>(&mut self, t_end: SimTime, handler: &mut H) -> Result<SimTime, EngineError> {
        let now = self.queue.now();
        if t_end < now {
            return Err(EngineError::HorizonInPast { t_end, now });
        }
        while let Some(event) = self.queue.pop_due(t_end) {
            self.dispatched += 1;
            if let Some(log) = self.log.as_mut() {
                log.push(DispatchRecord {
                    time: event.fire_time,
                    kind: event.kind,
                    payload: event.payload,
                });
            }
            handler
                .handle(&event, &mut self.queue)
                .map_err(|message| EngineError::HandlerFault { event, message })?;
        }
        self.queue.now = t_end;
        Ok(t_end)
    }
}

/// Randomness concerns; each draws from its own stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamId {
    Mobility,
    TrafficOffsets,
    ServiceJitter,
    Measurement,
}

impl StreamId {
    fn salt(self) -> u64 {
        match self {
            StreamId::Mobility => 0x6d6f_6269_6c69_7479,
            StreamId::TrafficOffsets => 0x7472_6166_6669_6321,
            StreamId::ServiceJitter => 0x7365_7276_6963_6521,
            StreamId::Measurement => 0x6d65_6173_7572_6521,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A seeded random stream for one concern.
pub struct RngStream {
    pub id: StreamId,
    pub seed: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(base_seed: u64, id: StreamId) -> Self {
        let seed = splitmix64(base_seed ^ id.salt());
        Self {
            id,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}
