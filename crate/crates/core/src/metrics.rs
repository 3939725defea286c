//! Per-packet ledger and run statistics.
//!
//! Every aggregate in [`RunSummary`] is computed from a slice of
//! [`PacketRecord`]s (plus the handoff count), so pooled statistics across
//! seeds are obtained by concatenating ledgers.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mec::{FrameJob, JobOutcome};
use crate::radio::Direction;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("{0} needs at least {1} sample(s)")]
    TooFewSamples(&'static str, usize),
    #[error("impairment table invalid: {0}")]
    BadImpairmentTable(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PacketRecord {
    pub job: usize,
    pub ue: usize,
    pub origin_sector: Option<usize>,
    pub sent_at: f64,
    pub uplink_arrived_at: Option<f64>,
    pub service_start: Option<f64>,
    pub service_end: Option<f64>,
    pub delivered_at: Option<f64>,
    pub uplink_bytes: u32,
    pub result_bytes: u32,
    /// `None` for jobs still unresolved when the run ended.
    pub outcome: Option<JobOutcome>,
    pub uplink_sinr_db: Option<f64>,
    pub downlink_sinr_db: Option<f64>,
}

impl PacketRecord {
    pub fn from_job(job: &FrameJob) -> Self {
        Self {
            job: job.id,
            ue: job.ue,
            origin_sector: job.origin_sector,
            sent_at: job.sent_at,
            uplink_arrived_at: job.uplink_arrived_at,
            service_start: job.service_start,
            service_end: job.service_end,
            delivered_at: job.delivered_at,
            uplink_bytes: job.uplink_bytes,
            result_bytes: job.result_bytes,
            outcome: job.outcome,
            uplink_sinr_db: job.uplink_sinr_db,
            downlink_sinr_db: job.downlink_sinr_db,
        }
    }

    pub fn is_delivered(&self) -> bool {
        self.outcome == Some(JobOutcome::Delivered)
    }

    pub fn experienced_delay(&self) -> Option<f64> {
        if self.is_delivered() {
            Some(self.delivered_at? - self.sent_at)
        } else {
            None
        }
    }

    pub fn uplink_tx_delay(&self) -> Option<f64> {
        Some(self.uplink_arrived_at? - self.sent_at)
    }

    pub fn queue_wait(&self) -> Option<f64> {
        Some(self.service_start? - self.uplink_arrived_at?)
    }

    pub fn service_duration(&self) -> Option<f64> {
        Some(self.service_end? - self.service_start?)
    }

    pub fn downlink_tx_delay(&self) -> Option<f64> {
        Some(self.delivered_at? - self.service_end?)
    }

    /// Whether the frame went over the air (it was not lost at the UE).
    pub fn transmitted_uplink(&self) -> bool {
        self.uplink_arrived_at.is_some()
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(xs: &[f64]) -> f64 {
    percentile(xs, 50.0)
}

/// Linear-interpolated percentile, `p` in [0, 100].
pub fn percentile(xs: &[f64], p: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let v = sorted(xs);
    let rank = (p / 100.0).clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (rank - lo as f64)
}

/// Median absolute deviation from the median.
pub fn mad_jitter(delays: &[f64]) -> Result<f64, MetricsError> {
    if delays.is_empty() {
        return Err(MetricsError::TooFewSamples("mad_jitter", 1));
    }
    let m = median(delays);
    let dev: Vec<f64> = delays.iter().map(|x| (x - m).abs()).collect();
    Ok(median(&dev))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutlierMean {
    pub value: f64,
    pub retained: usize,
    /// Every sample was excluded and the raw mean was returned instead.
    pub fell_back: bool,
}

/// Mean of the samples within one (population) standard deviation of the
/// overall mean.
pub fn outlier_excluded_mean(samples: &[f64]) -> Result<OutlierMean, MetricsError> {
    if samples.len() < 2 {
        return Err(MetricsError::TooFewSamples("outlier_excluded_mean", 2));
    }
    let m = mean(samples);
    let sd = std_dev(samples);
    let kept: Vec<f64> = samples.iter().copied().filter(|x| (x - m).abs() <= sd).collect();
    if kept.is_empty() {
        return Ok(OutlierMean {
            value: m,
            retained: 0,
            fell_back: true,
        });
    }
    Ok(OutlierMean {
        value: mean(&kept),
        retained: kept.len(),
        fell_back: false,
    })
}

/// Throughput in Mbit/s over `[start, end)`. Uplink counts frames put on the
/// air; downlink counts results received by the UE.
pub fn throughput(records: &[PacketRecord], direction: Direction, start: f64, end: f64) -> f64 {
    let window = end - start;
    if !(window > 0.0) {
        return 0.0;
    }
    let in_window = |t: f64| t >= start && t < end;
    let bytes: u64 = match direction {
        Direction::Up => records
            .iter()
            .filter(|r| r.transmitted_uplink() && in_window(r.sent_at))
            .map(|r| r.uplink_bytes as u64)
            .sum(),
        Direction::Down => records
            .iter()
            .filter(|r| r.is_delivered() && r.delivered_at.is_some_and(in_window))
            .map(|r| r.result_bytes as u64)
            .sum(),
    };
    bytes as f64 * 8.0 / window / 1e6
}

/// Piecewise-linear map from delay to an AR task score in [0, 1], 1 best.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpairmentTable {
    /// `(delay seconds, score)` knots, delays increasing.
    pub knots: Vec<(f64, f64)>,
}

impl Default for ImpairmentTable {
    fn default() -> Self {
        Self {
            knots: vec![(0.050, 1.0), (0.250, 0.5), (0.500, 0.0)],
        }
    }
}

impl ImpairmentTable {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self, MetricsError> {
        let t = Self { knots };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.knots.is_empty() {
            return Err(MetricsError::BadImpairmentTable("no knots".into()));
        }
        for (d, s) in &self.knots {
            if !d.is_finite() || !(0.0..=1.0).contains(s) {
                return Err(MetricsError::BadImpairmentTable(format!(
                    "knot ({d}, {s}) outside delay >= 0, score in [0, 1]"
                )));
            }
        }
        for w in self.knots.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(MetricsError::BadImpairmentTable("delays must increase".into()));
            }
            if w[1].1 > w[0].1 {
                return Err(MetricsError::BadImpairmentTable(
                    "scores must be non-increasing".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn score(&self, delay: f64) -> f64 {
        let k = &self.knots;
        if delay <= k[0].0 {
            return k[0].1;
        }
        for w in k.windows(2) {
            let ((d0, s0), (d1, s1)) = (w[0], w[1]);
            if delay <= d1 {
                return s0 + (s1 - s0) * (delay - d0) / (d1 - d0);
            }
        }
        k[k.len() - 1].1
    }
}

pub const IMPAIRMENT_BINS: usize = 10;

/// Score histogram over `IMPAIRMENT_BINS` equal bins on [0, 1]; a score of
/// exactly 1 lands in the top bin. Also returns the full-impairment
/// (score 0) fraction.
pub fn impairment_distribution(delays: &[f64], table: &ImpairmentTable) -> (Vec<f64>, f64) {
    let mut hist = vec![0.0; IMPAIRMENT_BINS];
    if delays.is_empty() {
        return (hist, f64::NAN);
    }
    let mut zeros = 0usize;
    for &d in delays {
        let s = table.score(d);
        if s <= 0.0 {
            zeros += 1;
        }
        let bin = ((s * IMPAIRMENT_BINS as f64) as usize).min(IMPAIRMENT_BINS - 1);
        hist[bin] += 1.0;
    }
    let n = delays.len() as f64;
    hist.iter_mut().for_each(|h| *h /= n);
    (hist, zeros as f64 / n)
}

/// Window and labels for one summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryContext {
    pub algorithm: String,
    pub seed: String,
    /// Statistics cover jobs sent in `[warmup, end)`.
    pub warmup: f64,
    pub end: f64,
    pub handoffs: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeCounts {
    pub sent: u64,
    pub delivered: u64,
    pub mec_mobility_discards: u64,
    pub overflows: u64,
    pub radio_outages: u64,
    pub handoff_interruptions: u64,
    pub unresolved: u64,
}

impl OutcomeCounts {
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a PacketRecord>) -> Self {
        let mut c = OutcomeCounts {
            sent: 0,
            delivered: 0,
            mec_mobility_discards: 0,
            overflows: 0,
            radio_outages: 0,
            handoff_interruptions: 0,
            unresolved: 0,
        };
        for r in records {
            c.sent += 1;
            match r.outcome {
                Some(JobOutcome::Delivered) => c.delivered += 1,
                Some(JobOutcome::MecMobilityDiscard) => c.mec_mobility_discards += 1,
                Some(JobOutcome::QueueOverflow) => c.overflows += 1,
                Some(JobOutcome::RadioOutage) => c.radio_outages += 1,
                Some(JobOutcome::HandoffInterruption) => c.handoff_interruptions += 1,
                None => c.unresolved += 1,
            }
        }
        c
    }

    /// `sent == delivered + discards + overflows + outages + interruptions + unresolved`.
    pub fn conserved(&self) -> bool {
        self.sent
            == self.delivered
                + self.mec_mobility_discards
                + self.overflows
                + self.radio_outages
                + self.handoff_interruptions
                + self.unresolved
    }

    fn ratio(&self, n: u64) -> f64 {
        if self.sent == 0 {
            0.0
        } else {
            n as f64 / self.sent as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub algorithm: String,
    pub seed: String,
    pub counts: OutcomeCounts,
    /// Jobs whose service completed at a MEC.
    pub processed: u64,
    pub handoffs: u64,
    pub delay_mean: f64,
    pub delay_median: f64,
    pub delay_p95: f64,
    pub delay_p99: f64,
    pub delay_mean_excl: f64,
    pub delay_median_excl: f64,
    pub delay_p95_excl: f64,
    pub delay_p99_excl: f64,
    pub mad_jitter: f64,
    pub ul_tx_delay_mean: f64,
    pub ul_tx_std_jitter: f64,
    pub dl_tx_delay_mean: f64,
    pub dl_tx_std_jitter: f64,
    pub ul_sinr_mean_db: f64,
    pub dl_sinr_mean_db: f64,
    pub ul_tx_mbps: f64,
    pub dl_rx_mbps: f64,
    pub mec_mobility_loss_ratio: f64,
    pub overflow_ratio: f64,
    pub radio_outage_ratio: f64,
    pub handoff_interruption_ratio: f64,
    pub full_impairment_fraction: f64,
    pub impairment_mean: f64,
    pub impairment_hist: Vec<f64>,
}

/// Aggregates one ledger (or several concatenated ledgers). Jobs sent
/// before the warm-up cut are ignored.
pub fn summarize(records: &[PacketRecord], ctx: &SummaryContext, table: &ImpairmentTable) -> RunSummary {
    let window: Vec<&PacketRecord> = records
        .iter()
        .filter(|r| r.sent_at >= ctx.warmup && r.sent_at < ctx.end)
        .collect();
    let counts = OutcomeCounts::from_records(window.iter().copied());
    let delays: Vec<f64> = window.iter().filter_map(|r| r.experienced_delay()).collect();
    let ul: Vec<f64> = window.iter().filter_map(|r| r.uplink_tx_delay()).collect();
    let dl: Vec<f64> = window
        .iter()
        .filter(|r| r.is_delivered())
        .filter_map(|r| r.downlink_tx_delay())
        .collect();
    let ul_sinr: Vec<f64> = window
        .iter()
        .filter(|r| r.transmitted_uplink())
        .filter_map(|r| r.uplink_sinr_db)
        .collect();
    let dl_sinr: Vec<f64> = window.iter().filter_map(|r| r.downlink_sinr_db).collect();

    let (excl, excl_set) = match outlier_excluded_mean(&delays) {
        Ok(o) => {
            let m = mean(&delays);
            let sd = std_dev(&delays);
            let kept: Vec<f64> = if o.fell_back {
                delays.clone()
            } else {
                delays.iter().copied().filter(|x| (x - m).abs() <= sd).collect()
            };
            (o.value, kept)
        }
        Err(_) => (mean(&delays), delays.clone()),
    };
    let (hist, full) = impairment_distribution(&delays, table);
    let scores: Vec<f64> = delays.iter().map(|&d| table.score(d)).collect();
    let owned: Vec<PacketRecord> = window.iter().map(|r| (*r).clone()).collect();

    RunSummary {
        algorithm: ctx.algorithm.clone(),
        seed: ctx.seed.clone(),
        processed: window.iter().filter(|r| r.service_end.is_some()).count() as u64,
        handoffs: ctx.handoffs,
        delay_mean: mean(&delays),
        delay_median: median(&delays),
        delay_p95: percentile(&delays, 95.0),
        delay_p99: percentile(&delays, 99.0),
        delay_mean_excl: excl,
        delay_median_excl: median(&excl_set),
        delay_p95_excl: percentile(&excl_set, 95.0),
        delay_p99_excl: percentile(&excl_set, 99.0),
        mad_jitter: mad_jitter(&delays).unwrap_or(f64::NAN),
        ul_tx_delay_mean: mean(&ul),
        ul_tx_std_jitter: std_dev(&ul),
        dl_tx_delay_mean: mean(&dl),
        dl_tx_std_jitter: std_dev(&dl),
        ul_sinr_mean_db: mean(&ul_sinr),
        dl_sinr_mean_db: mean(&dl_sinr),
        ul_tx_mbps: throughput(&owned, Direction::Up, ctx.warmup, ctx.end),
        dl_rx_mbps: throughput(&owned, Direction::Down, ctx.warmup, ctx.end),
        mec_mobility_loss_ratio: counts.ratio(counts.mec_mobility_discards),
        overflow_ratio: counts.ratio(counts.overflows),
        radio_outage_ratio: counts.ratio(counts.radio_outages),
        handoff_interruption_ratio: counts.ratio(counts.handoff_interruptions),
        full_impairment_fraction: full,
        impairment_mean: mean(&scores),
        impairment_hist: hist,
        counts,
    }
}

/// Formats like C's `%.6g`: six significant digits, trailing zeros dropped.
pub fn fmt_sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let m = trim_zeros(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt_f(v: Option<f64>) -> String {
    v.map(fmt_sig6).unwrap_or_default()
}

fn opt_u(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const PACKET_COLUMNS: [&str; 18] = [
    "job",
    "ue",
    "origin_sector",
    "sent_at",
    "uplink_arrived_at",
    "service_start",
    "service_end",
    "delivered_at",
    "uplink_bytes",
    "result_bytes",
    "outcome",
    "experienced_delay",
    "uplink_tx_delay",
    "queue_wait",
    "service_duration",
    "downlink_tx_delay",
    "uplink_sinr_db",
    "downlink_sinr_db",
];

pub fn packet_row(r: &PacketRecord) -> Vec<String> {
    vec![
        r.job.to_string(),
        r.ue.to_string(),
        opt_u(r.origin_sector),
        fmt_sig6(r.sent_at),
        opt_f(r.uplink_arrived_at),
        opt_f(r.service_start),
        opt_f(r.service_end),
        opt_f(r.delivered_at),
        r.uplink_bytes.to_string(),
        r.result_bytes.to_string(),
        r.outcome.map(|o| o.name()).unwrap_or("unresolved").to_string(),
        opt_f(r.experienced_delay()),
        opt_f(r.uplink_tx_delay()),
        opt_f(r.queue_wait()),
        opt_f(r.service_duration()),
        opt_f(r.downlink_tx_delay()),
        opt_f(r.uplink_sinr_db),
        opt_f(r.downlink_sinr_db),
    ]
}

/// Parses a `packets.csv` row written by [`packet_row`].
pub fn parse_packet_row(fields: &[&str]) -> Option<PacketRecord> {
    if fields.len() != PACKET_COLUMNS.len() {
        return None;
    }
    let of = |s: &str| -> Option<Option<f64>> {
        if s.is_empty() {
            Some(None)
        } else {
            s.parse().ok().map(Some)
        }
    };
    let ou = |s: &str| -> Option<Option<usize>> {
        if s.is_empty() {
            Some(None)
        } else {
            s.parse().ok().map(Some)
        }
    };
    Some(PacketRecord {
        job: fields[0].parse().ok()?,
        ue: fields[1].parse().ok()?,
        origin_sector: ou(fields[2])?,
        sent_at: fields[3].parse().ok()?,
        uplink_arrived_at: of(fields[4])?,
        service_start: of(fields[5])?,
        service_end: of(fields[6])?,
        delivered_at: of(fields[7])?,
        uplink_bytes: fields[8].parse().ok()?,
        result_bytes: fields[9].parse().ok()?,
        outcome: match fields[10] {
            "unresolved" => None,
            s => Some(JobOutcome::parse(s)?),
        },
        uplink_sinr_db: of(fields[16])?,
        downlink_sinr_db: of(fields[17])?,
    })
}

pub fn summary_columns() -> Vec<String> {
    let mut cols: Vec<String> = [
        "algorithm",
        "seed",
        "jobs_sent",
        "delivered",
        "mec_mobility_discards",
        "queue_overflows",
        "radio_outages",
        "handoff_interruptions",
        "unresolved",
        "mec_processed",
        "handoffs",
        "delay_mean",
        "delay_median",
        "delay_p95",
        "delay_p99",
        "delay_mean_excl",
        "delay_median_excl",
        "delay_p95_excl",
        "delay_p99_excl",
        "mad_jitter",
        "ul_tx_delay_mean",
        "ul_tx_std_jitter",
        "dl_tx_delay_mean",
        "dl_tx_std_jitter",
        "ul_sinr_mean_db",
        "dl_sinr_mean_db",
        "ul_tx_mbps",
        "dl_rx_mbps",
        "mec_mobility_loss_ratio",
        "overflow_ratio",
        "radio_outage_ratio",
        "handoff_interruption_ratio",
        "full_impairment_fraction",
        "impairment_mean",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for b in 0..IMPAIRMENT_BINS {
        cols.push(format!("impairment_bin_{b}"));
    }
    cols
}

impl RunSummary {
    pub fn row(&self) -> Vec<String> {
        let c = &self.counts;
        let mut row = vec![
            self.algorithm.clone(),
            self.seed.clone(),
            c.sent.to_string(),
            c.delivered.to_string(),
            c.mec_mobility_discards.to_string(),
            c.overflows.to_string(),
            c.radio_outages.to_string(),
            c.handoff_interruptions.to_string(),
            c.unresolved.to_string(),
            self.processed.to_string(),
            self.handoffs.to_string(),
        ];
        row.extend(
            [
                self.delay_mean,
                self.delay_median,
                self.delay_p95,
                self.delay_p99,
                self.delay_mean_excl,
                self.delay_median_excl,
                self.delay_p95_excl,
                self.delay_p99_excl,
                self.mad_jitter,
                self.ul_tx_delay_mean,
                self.ul_tx_std_jitter,
                self.dl_tx_delay_mean,
                self.dl_tx_std_jitter,
                self.ul_sinr_mean_db,
                self.dl_sinr_mean_db,
                self.ul_tx_mbps,
                self.dl_rx_mbps,
                self.mec_mobility_loss_ratio,
                self.overflow_ratio,
                self.radio_outage_ratio,
                self.handoff_interruption_ratio,
                self.full_impairment_fraction,
                self.impairment_mean,
            ]
            .iter()
            .map(|v| fmt_sig6(*v)),
        );
        row.extend(self.impairment_hist.iter().map(|v| fmt_sig6(*v)));
        row
    }

    /// One-line human-readable digest.
    pub fn digest(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{:<8} seed={:<4} delay(excl)={:>8.1} ms  median={:>8.1} ms  processed={:>6}  \
             handoffs={:>4}  mec-mob-loss={:>5.2}%  full-impairment={:>5.2}%",
            self.algorithm,
            self.seed,
            self.delay_mean_excl * 1e3,
            self.delay_median * 1e3,
            self.processed,
            self.handoffs,
            self.mec_mobility_loss_ratio * 100.0,
            self.full_impairment_fraction * 100.0,
        );
        s
    }
}

pub const HANDOFF_COLUMNS: [&str; 8] = [
    "time",
    "ue",
    "source",
    "target",
    "algorithm",
    "reason",
    "f_source",
    "f_target",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mad_cases() {
        assert_eq!(mad_jitter(&[4.0; 7]).unwrap(), 0.0);
        assert_eq!(mad_jitter(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap(), 1.0);
        assert!(mad_jitter(&[]).is_err());
    }

    #[test]
    fn mad_is_robust_std_is_not() {
        let base: Vec<f64> = (0..99).map(|i| i as f64).collect();
        let mut spiked = base.clone();
        spiked.push(1e6);
        let m0 = mad_jitter(&base).unwrap();
        let m1 = mad_jitter(&spiked).unwrap();
        assert!((m1 - m0).abs() / m0 < 0.05, "{m0} -> {m1}");
        assert!(std_dev(&spiked) > 100.0 * std_dev(&base) / 10.0);
        assert!(std_dev(&spiked) / std_dev(&base) > 300.0);
    }

    #[test]
    fn outlier_mean_cases() {
        let o = outlier_excluded_mean(&[5.0, 5.0, 5.0]).unwrap();
        assert_eq!((o.value, o.retained, o.fell_back), (5.0, 3, false));
        let o = outlier_excluded_mean(&[0.0, 0.0, 0.0, 0.0, 100.0]).unwrap();
        assert_eq!((o.value, o.retained), (0.0, 4));
        assert!(outlier_excluded_mean(&[1.0]).is_err());
    }

    #[test]
    fn throughput_cases() {
        assert_eq!(throughput(&[], Direction::Up, 0.0, 30.0), 0.0);
        let recs: Vec<PacketRecord> = (0..1000)
            .map(|i| {
                let mut j = FrameJob::new(i, 0, i as f64 * 0.03, 12_000, 60);
                j.uplink_arrived_at = Some(j.sent_at + 0.03);
                PacketRecord::from_job(&j)
            })
            .collect();
        assert!((throughput(&recs, Direction::Up, 0.0, 30.0) - 3.2).abs() < 1e-12);
        // Nothing delivered, nothing received.
        assert_eq!(throughput(&recs, Direction::Down, 0.0, 30.0), 0.0);
    }

    #[test]
    fn impairment_default_table() {
        let t = ImpairmentTable::default();
        assert_eq!(t.score(0.010), 1.0);
        assert_eq!(t.score(0.600), 0.0);
        assert!((t.score(0.150) - 0.75).abs() < 1e-12);
        let mut prev = 1.0;
        for k in 0..1000 {
            let s = t.score(k as f64 * 0.001);
            assert!(s <= prev);
            prev = s;
        }
    }

    #[test]
    fn impairment_table_rejects_increasing_scores() {
        assert!(ImpairmentTable::new(vec![(0.1, 0.5), (0.2, 0.7)]).is_err());
        assert!(ImpairmentTable::new(vec![(0.2, 0.5), (0.1, 0.4)]).is_err());
        assert!(ImpairmentTable::new(vec![]).is_err());
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(fmt_sig6(0.0), "0");
        assert_eq!(fmt_sig6(1.0), "1");
        assert_eq!(fmt_sig6(0.032), "0.032");
        assert_eq!(fmt_sig6(29.1234567), "29.1235");
        assert_eq!(fmt_sig6(123456789.0), "1.23457e+08");
        assert_eq!(fmt_sig6(0.0000123456789), "1.23457e-05");
        assert_eq!(fmt_sig6(-4.5), "-4.5");
        assert_eq!(fmt_sig6(999999.7), "1e+06");
        assert_eq!(fmt_sig6(f64::NAN), "nan");
    }

    #[test]
    fn packet_row_round_trip() {
        let mut j = FrameJob::new(3, 1, 2.5, 12_000, 60);
        j.origin_sector = Some(4);
        j.uplink_arrived_at = Some(2.53);
        j.service_start = Some(2.54);
        j.service_end = Some(2.56);
        j.delivered_at = Some(2.562);
        j.outcome = Some(JobOutcome::Delivered);
        j.uplink_sinr_db = Some(12.25);
        let r = PacketRecord::from_job(&j);
        let row = packet_row(&r);
        let parsed = parse_packet_row(&row.iter().map(String::as_str).collect::<Vec<_>>()).unwrap();
        assert_eq!(parsed, r);
    }
}
