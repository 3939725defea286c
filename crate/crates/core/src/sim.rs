//! One simulation run: the world state, its event handler, and the run
//! output (packet ledger, handoff log, conservation counters).

use rand::Rng;

use crate::engine::{
    DispatchRecord, Engine, EventHandle, EventKind, EventQueue, Handler, Payload, RngStream, SimEvent,
    StreamId,
};
use crate::geometry::{Area, Point, Sector};
use crate::handoff::{
    a2a4_decide, a3_decide, comp_ho_decide, A3State, Algorithm, CellMeasurement, Execution, HandoffParams,
    MeasurementReport, UeAttachment,
};
use crate::mec::{Enqueued, FrameJob, JobOutcome, LoadBoard, MecServer, Verdict};
use crate::metrics::{summarize, PacketRecord, RunSummary, SummaryContext};
use crate::mobility::{gauss_markov_step, rwp_step, GaussMarkovParams, MobilityModel, MobilityState};
use crate::radio::{all_links, tx_delay, Direction, LinkSample, RadioError, RadioParams};
use crate::scenario::{Scenario, ScenarioError};

/// Delay assigned to unusable (outage) links in the oracle's delay matrix.
pub const OUTAGE_DELAY_S: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct HandoffRecord {
    pub time: f64,
    pub ue: usize,
    pub source: usize,
    pub target: usize,
    pub algorithm: Algorithm,
    pub reason: &'static str,
    pub f_source: f64,
    pub f_target: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub time: f64,
    pub ue: usize,
    pub x: f64,
    pub y: f64,
}

/// Live job accounting, kept independently of the ledger.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Conservation {
    pub sent: u64,
    pub delivered: u64,
    pub mec_mobility_discards: u64,
    pub overflows: u64,
    pub radio_outages: u64,
    pub handoff_interruptions: u64,
    pub in_flight_uplink: u64,
    pub in_flight_downlink: u64,
    /// Filled at the end of the run from the servers.
    pub resident_at_end: u64,
}

impl Conservation {
    pub fn unresolved(&self) -> u64 {
        self.in_flight_uplink + self.in_flight_downlink + self.resident_at_end
    }

    pub fn holds(&self) -> bool {
        self.sent
            == self.delivered
                + self.mec_mobility_discards
                + self.overflows
                + self.radio_outages
                + self.handoff_interruptions
                + self.unresolved()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub trace: bool,
    pub trajectories: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub records: Vec<PacketRecord>,
    pub handoffs: Vec<HandoffRecord>,
    pub conservation: Conservation,
    pub summary: RunSummary,
    pub trace: Option<Vec<DispatchRecord>>,
    pub trajectory: Vec<TrajectoryPoint>,
    /// UEs attached to each sector, one row per metrics flush.
    pub occupancy: Vec<Vec<usize>>,
    /// Comp-HO: candidates scored and candidates offered, summed over reports.
    pub candidates_scored: u64,
    pub candidates_offered: u64,
    pub mec_processed: u64,
    pub dispatched: u64,
}

struct Ue {
    mobility: MobilityState,
    attach: UeAttachment,
    a3: A3State,
    links: Vec<LinkSample>,
    links_epoch: u64,
    next_measurement: Option<EventHandle>,
}

/// World state of one run; implements the event handler.
pub struct World {
    algorithm: Algorithm,
    handoff: HandoffParams,
    radio: RadioParams,
    sectors: Vec<Sector>,
    area: Area,
    mobility_model: MobilityModel,
    speed: f64,
    gauss_markov: GaussMarkovParams,
    frame_period: f64,
    uplink_bytes: u32,
    result_bytes: u32,
    mobility_tick: f64,
    measurement_interval: f64,
    load_interval: f64,
    load_latency: f64,
    flush_interval: f64,

    servers: Vec<MecServer>,
    board: LoadBoard,
    jobs: Vec<FrameJob>,
    ues: Vec<Ue>,
    attached: Vec<usize>,
    epoch: u64,
    mobility_rng: RngStream,

    handoffs: Vec<HandoffRecord>,
    counters: Conservation,
    record_trajectories: bool,
    trajectory: Vec<TrajectoryPoint>,
    occupancy: Vec<Vec<usize>>,
    candidates_scored: u64,
    candidates_offered: u64,
}

fn need<T>(v: Option<T>, what: &str) -> Result<T, String> {
    v.ok_or_else(|| format!("event payload lacks {what}"))
}

impl World {
    pub fn serving(&self, ue: usize) -> Option<usize> {
        self.ues[ue].attach.serving()
    }

    pub fn ue_position(&self, ue: usize) -> Point {
        self.ues[ue].mobility.position
    }

    pub fn n_ues(&self) -> usize {
        self.ues.len()
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    pub fn attached_counts(&self) -> &[usize] {
        &self.attached
    }

    pub fn counters(&self) -> &Conservation {
        &self.counters
    }

    pub fn server(&self, mec: usize) -> &MecServer {
        &self.servers[mec]
    }

    fn links(&mut self, ue: usize, now: f64) -> &[LinkSample] {
        let u = &mut self.ues[ue];
        if u.links_epoch != self.epoch || u.links.is_empty() {
            u.links = all_links(ue, u.mobility.position, &self.sectors, &self.radio, now);
            u.links_epoch = self.epoch;
        }
        &self.ues[ue].links
    }

    fn move_all(&mut self, dt: f64) {
        for u in &mut self.ues {
            let rng = self.mobility_rng.rng();
            u.mobility = match self.mobility_model {
                MobilityModel::Rwp => rwp_step(&u.mobility, dt, self.speed, &self.area, rng),
                MobilityModel::GaussMarkov => {
                    gauss_markov_step(&u.mobility, dt, &self.gauss_markov, &self.area, rng)
                }
                MobilityModel::Static => u.mobility,
            };
        }
        self.epoch += 1;
    }

    fn resolve(&mut self, job: usize, outcome: JobOutcome) {
        self.jobs[job].outcome = Some(outcome);
        let c = &mut self.counters;
        match outcome {
            JobOutcome::Delivered => c.delivered += 1,
            JobOutcome::MecMobilityDiscard => c.mec_mobility_discards += 1,
            JobOutcome::QueueOverflow => c.overflows += 1,
            JobOutcome::RadioOutage => c.radio_outages += 1,
            JobOutcome::HandoffInterruption => c.handoff_interruptions += 1,
        }
    }

    fn on_frame_send(&mut self, ev: &SimEvent, q: &mut EventQueue) -> Result<(), String> {
        let ue = need(ev.payload.ue, "ue")?;
        let now = ev.fire_time;
        q.schedule_in(self.frame_period, EventKind::FrameSend, Payload::ue(ue))
            .map_err(|e| e.to_string())?;

        let id = self.jobs.len();
        self.jobs
            .push(FrameJob::new(id, ue, now, self.uplink_bytes, self.result_bytes));
        self.counters.sent += 1;

        let Some(serving) = self.serving(ue) else {
            self.resolve(id, JobOutcome::HandoffInterruption);
            return Ok(());
        };
        let sinr = self.links(ue, now)[serving].uplink_sinr_db;
        let n_active = self.attached[serving];
        let job = &mut self.jobs[id];
        job.origin_sector = Some(serving);
        job.uplink_sinr_db = Some(sinr);
        match tx_delay(self.uplink_bytes, sinr, n_active, Direction::Up, &self.radio) {
            Ok(d) => {
                job.uplink_tx_delay = Some(d);
                self.counters.in_flight_uplink += 1;
                q.schedule_in(d, EventKind::UplinkArrival, Payload::job(id).with_mec(serving))
                    .map_err(|e| e.to_string())?;
            }
            Err(RadioError::Outage { .. }) => self.resolve(id, JobOutcome::RadioOutage),
            Err(e) => return Err(e.to_string()),
        }
        Ok(())
    }

    fn on_uplink_arrival(&mut self, ev: &SimEvent, q: &mut EventQueue) -> Result<(), String> {
        let id = need(ev.payload.job, "job")?;
        let mec = need(ev.payload.mec, "mec")?;
        self.counters.in_flight_uplink -= 1;
        match self.servers[mec].enqueue(&mut self.jobs[id], ev.fire_time) {
            Enqueued::Started { completes_at, .. } => {
                q.schedule(SimEvent::new(
                    completes_at,
                    EventKind::ServiceComplete,
                    Payload::job(id).with_mec(mec),
                ))
                .map_err(|e| e.to_string())?;
            }
            Enqueued::Waiting { .. } => {}
            Enqueued::Overflow => self.resolve(id, JobOutcome::QueueOverflow),
        }
        Ok(())
    }

    fn on_service_complete(&mut self, ev: &SimEvent, q: &mut EventQueue) -> Result<(), String> {
        let id = need(ev.payload.job, "job")?;
        let mec = need(ev.payload.mec, "mec")?;
        let now = ev.fire_time;
        let ue = self.jobs[id].ue;
        let serving = self.serving(ue);
        let done = self.servers[mec]
            .complete_service(&mut self.jobs, id, now, serving)
            .map_err(|e| e.to_string())?;
        if let Some((next, at)) = done.next {
            q.schedule(SimEvent::new(
                at,
                EventKind::ServiceComplete,
                Payload::job(next).with_mec(mec),
            ))
            .map_err(|e| e.to_string())?;
        }
        match done.verdict {
            Verdict::Discard => {
                // complete_service already marked the outcome.
                self.jobs[id].outcome = None;
                self.resolve(id, JobOutcome::MecMobilityDiscard);
            }
            Verdict::Dispatch => {
                let sector = serving.expect("dispatch implies attached");
                let sinr = self.links(ue, now)[sector].sinr_db;
                let n_active = self.attached[sector];
                self.jobs[id].downlink_sinr_db = Some(sinr);
                match tx_delay(self.result_bytes, sinr, n_active, Direction::Down, &self.radio) {
                    Ok(d) => {
                        self.jobs[id].downlink_tx_delay = Some(d);
                        self.counters.in_flight_downlink += 1;
                        q.schedule_in(d, EventKind::DownlinkArrival, Payload::job(id).with_mec(mec))
                            .map_err(|e| e.to_string())?;
                    }
                    Err(RadioError::Outage { .. }) => self.resolve(id, JobOutcome::RadioOutage),
                    Err(e) => return Err(e.to_string()),
                }
            }
        }
        Ok(())
    }

    fn on_downlink_arrival(&mut self, ev: &SimEvent) -> Result<(), String> {
        let id = need(ev.payload.job, "job")?;
        self.counters.in_flight_downlink -= 1;
        self.jobs[id].delivered_at = Some(ev.fire_time);
        self.resolve(id, JobOutcome::Delivered);
        Ok(())
    }

    /// Probeable cells of one UE: the serving cell and every cell above the
    /// probe floor.
    pub fn measurement_report(&mut self, ue: usize, now: f64) -> Option<MeasurementReport> {
        let serving = self.serving(ue)?;
        let floor = self.handoff.probe_floor_dbm;
        let outage = self.radio.outage_sinr_db;
        // A sector the UE cannot hold a link with in either direction is not probeable.
        let probeable =
            |l: &LinkSample| l.rsrp_dbm >= floor && l.sinr_db >= outage && l.uplink_sinr_db >= outage;
        let samples: Vec<CellMeasurement> = self
            .links(ue, now)
            .iter()
            .filter(|l| l.sector == serving || probeable(l))
            .map(|l| CellMeasurement {
                sector: l.sector,
                rsrq_db: l.rsrq_db,
                rsrp_dbm: l.rsrp_dbm,
            })
            .collect();
        MeasurementReport::new(ue, serving, samples, now).ok()
    }

    fn on_measurement(&mut self, ev: &SimEvent, q: &mut EventQueue) -> Result<(), String> {
        let ue = need(ev.payload.ue, "ue")?;
        let now = ev.fire_time;
        let next = q
            .schedule_in(
                self.measurement_interval,
                EventKind::MeasurementReportTick,
                Payload::ue(ue),
            )
            .map_err(|e| e.to_string())?;
        self.ues[ue].next_measurement = Some(next);

        let Some(report) = self.measurement_report(ue, now) else {
            return Ok(());
        };
        let decision = match self.algorithm {
            Algorithm::CompHo => {
                let loads = self.board.snapshot(now);
                let eval = comp_ho_decide(&report, &loads, &self.handoff);
                if rsrq_gate_open(&report, &self.handoff, &loads) {
                    self.candidates_scored += eval.evaluated as u64;
                    self.candidates_offered += report.samples.len() as u64;
                }
                eval.decision
            }
            Algorithm::A2A4Rsrq => a2a4_decide(&report, &self.handoff),
            Algorithm::A3Rsrp => a3_decide(&report, &self.handoff, &mut self.ues[ue].a3),
            Algorithm::NoHo => None,
        };
        let Some(mut decision) = decision else {
            return Ok(());
        };

        let n_sectors = self.sectors.len();
        let exec = self.handoff.execution_time_s;
        let outcome = self.ues[ue]
            .attach
            .execute_handoff(&mut decision, now, exec, n_sectors);
        let Ok(execution) = outcome else { return Ok(()) };
        self.attached[decision.source] -= 1;
        self.ues[ue].a3.reset();
        self.handoffs.push(HandoffRecord {
            time: now,
            ue,
            source: decision.source,
            target: decision.target,
            algorithm: self.algorithm,
            reason: decision.reason.name(),
            f_source: decision.score_source,
            f_target: decision.score_target,
        });
        match execution {
            Execution::Immediate => self.attached[decision.target] += 1,
            Execution::CompletesAt(until) => {
                // No measurements while detached; resumed on completion.
                if let Some(h) = self.ues[ue].next_measurement.take() {
                    q.cancel(h);
                }
                q.schedule(SimEvent::new(until, EventKind::HandoffComplete, Payload::ue(ue)))
                    .map_err(|e| e.to_string())?;
            }
        }
        Ok(())
    }

    fn on_handoff_complete(&mut self, ev: &SimEvent, q: &mut EventQueue) -> Result<(), String> {
        let ue = need(ev.payload.ue, "ue")?;
        let target = self.ues[ue]
            .attach
            .complete_handoff()
            .ok_or_else(|| format!("UE {ue} completed a handoff it never started"))?;
        self.attached[target] += 1;
        let next = q
            .schedule_in(
                self.measurement_interval,
                EventKind::MeasurementReportTick,
                Payload::ue(ue),
            )
            .map_err(|e| e.to_string())?;
        self.ues[ue].next_measurement = Some(next);
        Ok(())
    }

    fn on_load_report(&mut self, ev: &SimEvent, q: &mut EventQueue) -> Result<(), String> {
        let now = ev.fire_time;
        for s in &self.servers {
            self.board.publish(s.report_load(now), now + self.load_latency);
        }
        q.schedule_in(self.load_interval, EventKind::LoadReportTick, Payload::none())
            .map_err(|e| e.to_string())?;
        Ok(())
    }

    fn on_flush(&mut self, ev: &SimEvent, q: &mut EventQueue) -> Result<(), String> {
        self.occupancy.push(self.attached.clone());
        if self.record_trajectories {
            for u in &self.ues {
                self.trajectory.push(TrajectoryPoint {
                    time: ev.fire_time,
                    ue: u.mobility.ue,
                    x: u.mobility.position.x,
                    y: u.mobility.position.y,
                });
            }
        }
        q.schedule_in(self.flush_interval, EventKind::MetricsFlush, Payload::none())
            .map_err(|e| e.to_string())?;
        Ok(())
    }

    /// Estimated experienced delay of every UE at every MEC: uplink delay
    /// over that sector's link with the UE added to its contention, plus the
    /// last reported queuing time and one service time.
    pub fn delay_matrix(&mut self, now: f64) -> Vec<Vec<f64>> {
        let loads = self.board.snapshot(now);
        let service = self.servers.first().map(|s| s.service_time).unwrap_or(0.0);
        (0..self.ues.len())
            .map(|ue| {
                let serving = self.serving(ue);
                let links = self.links(ue, now).to_vec();
                links
                    .iter()
                    .map(|l| {
                        let extra = usize::from(serving != Some(l.sector));
                        let n = self.attached[l.sector] + extra;
                        let q = loads[l.sector].as_ref().map(|r| r.queue_metric).unwrap_or(0.0);
                        match tx_delay(self.uplink_bytes, l.uplink_sinr_db, n, Direction::Up, &self.radio) {
                            Ok(d) => d + q + service,
                            Err(_) => OUTAGE_DELAY_S,
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Whether Comp-HO scores candidates for this report (the gate of
/// `comp_ho_decide`).
fn rsrq_gate_open(
    report: &MeasurementReport,
    params: &HandoffParams,
    loads: &[Option<crate::mec::LoadReport>],
) -> bool {
    let s = report.serving_sample();
    let signal_low = crate::radio::rsrq_index(s.rsrq_db) < params.theta;
    let overloaded = match (
        params.overload_trigger,
        loads.get(s.sector).and_then(|l| l.as_ref()),
    ) {
        (Some(th), Some(l)) => l.queue_metric >= th,
        _ => false,
    };
    signal_low || overloaded
}

impl Handler for World {
    fn handle(&mut self, ev: &SimEvent, q: &mut EventQueue) -> Result<(), String> {
        match ev.kind {
            EventKind::FrameSend => self.on_frame_send(ev, q),
            EventKind::UplinkArrival => self.on_uplink_arrival(ev, q),
            EventKind::ServiceComplete => self.on_service_complete(ev, q),
            EventKind::DownlinkArrival => self.on_downlink_arrival(ev),
            EventKind::MobilityTick => {
                self.move_all(self.mobility_tick);
                q.schedule_in(self.mobility_tick, EventKind::MobilityTick, Payload::none())
                    .map(|_| ())
                    .map_err(|e| e.to_string())
            }
            EventKind::MeasurementReportTick => self.on_measurement(ev, q),
            EventKind::LoadReportTick => self.on_load_report(ev, q),
            EventKind::HandoffComplete => self.on_handoff_complete(ev, q),
            EventKind::MetricsFlush => self.on_flush(ev, q),
        }
    }
}

/// A prepared run: engine plus world, steppable for inspection.
pub struct Simulation {
    pub engine: Engine,
    pub world: World,
    scenario: Scenario,
    seed: u64,
}

impl Simulation {
    pub fn new(
        scenario: &Scenario,
        algorithm: Algorithm,
        seed: u64,
        options: RunOptions,
    ) -> Result<Self, ScenarioError> {
        scenario.validate()?;
        let layout = scenario.layout()?;
        let radio = scenario.radio();
        let area = scenario.area();
        let gm = scenario.gauss_markov();
        let mut mobility_rng = RngStream::new(seed, StreamId::Mobility);
        let mut offsets = RngStream::new(seed, StreamId::TrafficOffsets);
        let mut measurement = RngStream::new(seed, StreamId::Measurement);

        let servers = layout
            .sectors
            .iter()
            .map(|s| {
                MecServer::new(
                    s.mec_id(),
                    scenario.mec_capacity,
                    scenario.mec_queues,
                    scenario.service_time_s,
                )
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ScenarioError::Invalid {
                key: "mec".into(),
                line: None,
                message: e.to_string(),
            })?;

        let mut attached = vec![0usize; layout.sectors.len()];
        let mut ues = Vec::with_capacity(scenario.n_ues);
        for ue in 0..scenario.n_ues {
            let mobility = if let Some(p) = &scenario.ue_positions {
                let pos = Point::new(p[ue][0], p[ue][1]);
                match scenario.mobility {
                    MobilityModel::Static => MobilityState::stationary(ue, pos),
                    MobilityModel::Rwp => {
                        let mut s =
                            MobilityState::rwp_initial(ue, &area, scenario.speed_mps, mobility_rng.rng());
                        s.position = pos;
                        s
                    }
                    MobilityModel::GaussMarkov => {
                        let mut s = MobilityState::gauss_markov_initial(ue, &area, &gm, mobility_rng.rng());
                        s.position = pos;
                        s
                    }
                }
            } else {
                match scenario.mobility {
                    MobilityModel::Rwp => {
                        MobilityState::rwp_initial(ue, &area, scenario.speed_mps, mobility_rng.rng())
                    }
                    MobilityModel::GaussMarkov => {
                        MobilityState::gauss_markov_initial(ue, &area, &gm, mobility_rng.rng())
                    }
                    MobilityModel::Static => {
                        let r = mobility_rng.rng();
                        let pos = Point::new(r.random::<f64>() * area.width, r.random::<f64>() * area.height);
                        MobilityState::stationary(ue, pos)
                    }
                }
            };
            let links = all_links(ue, mobility.position, &layout.sectors, &radio, 0.0);
            // Initial attach: strongest downlink SINR, lowest id on ties.
            let best = links
                .iter()
                .fold(None::<&LinkSample>, |b, l| match b {
                    Some(b) if b.sinr_db >= l.sinr_db => Some(b),
                    _ => Some(l),
                })
                .map(|l| l.sector)
                .expect("layout has sectors");
            attached[best] += 1;
            ues.push(Ue {
                mobility,
                attach: UeAttachment::new(ue, best),
                a3: A3State::default(),
                links,
                links_epoch: 0,
                next_measurement: None,
            });
        }

        let mut engine = if options.trace {
            Engine::with_log()
        } else {
            Engine::new()
        };
        let q = &mut engine.queue;
        let sched = |q: &mut EventQueue, t: f64, kind: EventKind, p: Payload| {
            q.schedule(SimEvent::new(t, kind, p))
                .map(|_| ())
                .map_err(|e| ScenarioError::Invalid {
                    key: "schedule".into(),
                    line: None,
                    message: e.to_string(),
                })
        };
        let period = scenario.frame_period();
        for (ue, u) in ues.iter_mut().enumerate() {
            let offset = offsets.rng().random::<f64>() * period;
            sched(q, offset, EventKind::FrameSend, Payload::ue(ue))?;
            let m = measurement.rng().random::<f64>() * scenario.measurement_interval_s;
            u.next_measurement = Some(
                q.schedule(SimEvent::new(
                    m,
                    EventKind::MeasurementReportTick,
                    Payload::ue(ue),
                ))
                .expect("future time"),
            );
        }
        sched(
            q,
            scenario.mobility_tick_s,
            EventKind::MobilityTick,
            Payload::none(),
        )?;
        sched(q, 0.0, EventKind::LoadReportTick, Payload::none())?;
        sched(q, 0.0, EventKind::MetricsFlush, Payload::none())?;

        let world = World {
            algorithm,
            handoff: scenario.handoff_params(algorithm),
            radio,
            sectors: layout.sectors.clone(),
            area,
            mobility_model: scenario.mobility,
            speed: scenario.speed_mps,
            gauss_markov: gm,
            frame_period: period,
            uplink_bytes: scenario.uplink_bytes,
            result_bytes: scenario.result_bytes,
            mobility_tick: scenario.mobility_tick_s,
            measurement_interval: scenario.measurement_interval_s,
            load_interval: scenario.load_report_interval_s,
            load_latency: scenario.load_report_latency_s,
            flush_interval: scenario.flush_interval_s,
            board: LoadBoard::new(servers.len()),
            servers,
            jobs: Vec::new(),
            ues,
            attached,
            epoch: 0,
            mobility_rng,
            handoffs: Vec::new(),
            counters: Conservation::default(),
            record_trajectories: options.trajectories,
            trajectory: Vec::new(),
            occupancy: Vec::new(),
            candidates_scored: 0,
            candidates_offered: 0,
        };
        Ok(Self {
            engine,
            world,
            scenario: scenario.clone(),
            seed,
        })
    }

    pub fn run_until(&mut self, t: f64) -> Result<f64, crate::engine::EngineError> {
        self.engine.run_until(t, &mut self.world)
    }

    /// Runs to the scenario's end time and collects the output.
    pub fn run(mut self) -> Result<RunOutput, crate::engine::EngineError> {
        let end = self.scenario.sim_time_s;
        self.run_until(end)?;
        Ok(self.finish())
    }

    fn finish(mut self) -> RunOutput {
        let w = &mut self.world;
        w.counters.resident_at_end = w.servers.iter().map(|s| s.resident() as u64).sum();
        let records: Vec<PacketRecord> = w.jobs.iter().map(PacketRecord::from_job).collect();
        let sc = &self.scenario;
        let ctx = SummaryContext {
            algorithm: w.algorithm.name().to_string(),
            seed: self.seed.to_string(),
            warmup: sc.warmup_s,
            end: sc.sim_time_s,
            handoffs: count_handoffs(&w.handoffs, sc.warmup_s, sc.sim_time_s),
        };
        let table = sc.impairment_table().expect("validated");
        let summary = summarize(&records, &ctx, &table);
        RunOutput {
            algorithm: w.algorithm,
            seed: self.seed,
            summary,
            records,
            handoffs: std::mem::take(&mut w.handoffs),
            conservation: w.counters.clone(),
            trace: self.engine.take_log(),
            trajectory: std::mem::take(&mut w.trajectory),
            occupancy: std::mem::take(&mut w.occupancy),
            candidates_scored: w.candidates_scored,
            candidates_offered: w.candidates_offered,
            mec_processed: w.servers.iter().map(|s| s.processed()).sum(),
            dispatched: self.engine.dispatched(),
        }
    }
}

pub fn count_handoffs(log: &[HandoffRecord], start: f64, end: f64) -> u64 {
    log.iter().filter(|h| h.time >= start && h.time < end).count() as u64
}

/// Builds and runs one (algorithm, seed) simulation.
pub fn run_once(
    scenario: &Scenario,
    algorithm: Algorithm,
    seed: u64,
    options: RunOptions,
) -> Result<RunOutput, SimError> {
    let sim = Simulation::new(scenario, algorithm, seed, options)?;
    Ok(sim.run()?)
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Engine(#[from] crate::engine::EngineError),
}
