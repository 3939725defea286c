//! MEC servers co-located one per sector.
//!
//! Each server has a fixed capacity (jobs waiting plus in service), one or
//! more FIFO queues with a deterministic non-preemptive service time, and
//! publishes periodic load reports to the base stations.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JobOutcome {
    Delivered,
    MecMobilityDiscard,
    QueueOverflow,
    RadioOutage,
    HandoffInterruption,
}

impl JobOutcome {
    pub const ALL: [JobOutcome; 5] = [
        JobOutcome::Delivered,
        JobOutcome::MecMobilityDiscard,
        JobOutcome::QueueOverflow,
        JobOutcome::RadioOutage,
        JobOutcome::HandoffInterruption,
    ];

    pub fn name(self) -> &'static str {
        match self {
            JobOutcome::Delivered => "delivered",
            JobOutcome::MecMobilityDiscard => "mec_mobility_discard",
            JobOutcome::QueueOverflow => "queue_overflow",
            JobOutcome::RadioOutage => "radio_outage",
            JobOutcome::HandoffInterruption => "handoff_interruption",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.name() == s)
    }
}

/// One offloaded frame through its lifecycle.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameJob {
    pub id: usize,
    pub ue: usize,
    /// Sector (and MEC) that received the uplink; `None` if the frame never
    /// left the UE.
    pub origin_sector: Option<usize>,
    pub sent_at: f64,
    pub uplink_arrived_at: Option<f64>,
    pub service_start: Option<f64>,
    pub service_end: Option<f64>,
    pub delivered_at: Option<f64>,
    pub uplink_bytes: u32,
    pub result_bytes: u32,
    pub uplink_sinr_db: Option<f64>,
    pub downlink_sinr_db: Option<f64>,
    pub uplink_tx_delay: Option<f64>,
    pub downlink_tx_delay: Option<f64>,
    /// `None` while the job is still in flight or queued.
    pub outcome: Option<JobOutcome>,
}

impl FrameJob {
    pub fn new(id: usize, ue: usize, sent_at: f64, uplink_bytes: u32, result_bytes: u32) -> Self {
        Self {
            id,
            ue,
            origin_sector: None,
            sent_at,
            uplink_arrived_at: None,
            service_start: None,
            service_end: None,
            delivered_at: None,
            uplink_bytes,
            result_bytes,
            uplink_sinr_db: None,
            downlink_sinr_db: None,
            uplink_tx_delay: None,
            downlink_tx_delay: None,
            outcome: None,
        }
    }

    /// Round-trip delay seen by the UE, for delivered jobs.
    pub fn experienced_delay(&self) -> Option<f64> {
        match (self.outcome, self.delivered_at) {
            (Some(JobOutcome::Delivered), Some(t)) => Some(t - self.sent_at),
            _ => None,
        }
    }

    pub fn queue_wait(&self) -> Option<f64> {
        Some(self.service_start? - self.uplink_arrived_at?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub mec: usize,
    /// Estimated maximum queuing time in seconds.
    pub queue_metric: f64,
    pub app_metadata: Vec<String>,
    pub timestamp: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum MecError {
    #[error("job {job} is not at the head of any queue of MEC {mec}")]
    NotAtHead { mec: usize, job: usize },
    #[error("invalid MEC configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Enqueued {
    /// Queue was idle; the job is in service and completes at the given time.
    Started {
        queue: usize,
        completes_at: f64,
    },
    Waiting {
        queue: usize,
    },
    Overflow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    /// UE still served by the originating sector: send the result down.
    Dispatch,
    /// UE moved away: the result is dropped.
    Discard,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Completion {
    pub job: usize,
    pub verdict: Verdict,
    /// Next job started on the freed queue and its completion time.
    pub next: Option<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct MecServer {
    pub id: usize,
    pub capacity: usize,
    pub service_time: f64,
    queues: Vec<VecDeque<usize>>,
    processed: u64,
    overflows: u64,
}

impl MecServer {
    pub fn new(id: usize, capacity: usize, n_queues: usize, service_time: f64) -> Result<Self, MecError> {
        if capacity == 0 {
            return Err(MecError::Invalid("capacity must be at least 1".into()));
        }
        if n_queues == 0 {
            return Err(MecError::Invalid("at least one queue is required".into()));
        }
        if !(service_time > 0.0) || !service_time.is_finite() {
            return Err(MecError::Invalid(format!(
                "service time must be positive, got {service_time}"
            )));
        }
        Ok(Self {
            id,
            capacity,
            service_time,
            queues: vec![VecDeque::new(); n_queues],
            processed: 0,
            overflows: 0,
        })
    }

    pub fn resident(&self) -> usize {
        self.queues.iter().map(VecDeque::len).sum()
    }

    pub fn processed(&self) -> u64 {
        self.processed
    }

    pub fn overflows(&self) -> u64 {
        self.overflows
    }

    pub fn queues(&self) -> &[VecDeque<usize>] {
        &self.queues
    }

    /// Jobs currently in service (queue heads).
    pub fn in_service(&self) -> impl Iterator<Item = usize> + '_ {
        self.queues.iter().filter_map(|q| q.front().copied())
    }

    fn shortest_queue(&self) -> usize {
        self.queues
            .iter()
            .enumerate()
            .min_by_key(|(i, q)| (q.len(), *i))
            .map(|(i, _)| i)
            .expect("at least one queue")
    }

    /// Admits an arrived job, or reports overflow when the server is full.
    pub fn enqueue(&mut self, job: &mut FrameJob, now: f64) -> Enqueued {
        if job.uplink_arrived_at.is_none() {
            job.uplink_arrived_at = Some(now);
        }
        if self.resident() >= self.capacity {
            self.overflows += 1;
            job.outcome = Some(JobOutcome::QueueOverflow);
            return Enqueued::Overflow;
        }
        let q = self.shortest_queue();
        self.queues[q].push_back(job.id);
        if self.queues[q].len() == 1 {
            job.service_start = Some(now);
            Enqueued::Started {
                queue: q,
                completes_at: now + self.service_time,
            }
        } else {
            Enqueued::Waiting { queue: q }
        }
    }

    /// Finishes the in-service job `job_id`, starts the next job on that
    /// queue, and decides the result's fate from the UE's current serving
    /// sector (`None` while detached during a handoff).
    pub fn complete_service(
        &mut self,
        jobs: &mut [FrameJob],
        job_id: usize,
        now: f64,
        ue_serving: Option<usize>,
    ) -> Result<Completion, MecError> {
        let q = self
            .queues
            .iter()
            .position(|q| q.front() == Some(&job_id))
            .ok_or(MecError::NotAtHead {
                mec: self.id,
                job: job_id,
            })?;
        self.queues[q].pop_front();
        self.processed += 1;

        let job = &mut jobs[job_id];
        job.service_end = Some(now);
        let verdict = if ue_serving == job.origin_sector && ue_serving.is_some() {
            Verdict::Dispatch
        } else {
            job.outcome = Some(JobOutcome::MecMobilityDiscard);
            Verdict::Discard
        };

        let next = self.queues[q].front().copied().map(|next| {
            jobs[next].service_start = Some(now);
            (next, now + self.service_time)
        });
        Ok(Completion {
            job: job_id,
            verdict,
            next,
        })
    }

    /// Load as an estimated queuing time: jobs in the shortest queue times
    /// the service time.
    pub fn report_load(&self, now: f64) -> LoadReport {
        let min_len = self.queues.iter().map(VecDeque::len).min().unwrap_or(0);
        LoadReport {
            mec: self.id,
            queue_metric: min_len as f64 * self.service_time,
            app_metadata: vec!["mar-object-detection".to_string()],
            timestamp: now,
        }
    }
}

/// Load reports in flight to, and last received by, base stations. All base
/// stations sit at the same link latency from every MEC, so one board serves
/// them all.
#[derive(Debug, Clone, Default)]
pub struct LoadBoard {
    slots: Vec<BoardSlot>,
}

#[derive(Debug, Clone, Default)]
struct BoardSlot {
    visible: Option<LoadReport>,
    in_flight: VecDeque<(f64, LoadReport)>,
}

impl LoadBoard {
    pub fn new(n_mecs: usize) -> Self {
        Self {
            slots: vec![BoardSlot::default(); n_mecs],
        }
    }

    pub fn publish(&mut self, report: LoadReport, deliver_at: f64) {
        self.slots[report.mec].in_flight.push_back((deliver_at, report));
    }

    /// Latest report from `mec` that reached the base stations by `now`.
    pub fn latest(&mut self, mec: usize, now: f64) -> Option<&LoadReport> {
        let slot = &mut self.slots[mec];
        while slot.in_flight.front().is_some_and(|(t, _)| *t <= now) {
            let (_, r) = slot.in_flight.pop_front().expect("checked");
            slot.visible = Some(r);
        }
        slot.visible.as_ref()
    }

    pub fn snapshot(&mut self, now: f64) -> Vec<Option<LoadReport>> {
        (0..self.slots.len())
            .map(|m| self.latest(m, now).cloned())
            .collect()
    }
}
