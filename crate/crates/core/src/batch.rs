//! Multi-run batches (algorithm x seed), parameter sweeps, and file export.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::Layout;
use crate::handoff::Algorithm;
use crate::metrics::{
    fmt_sig6, packet_row, summarize, summary_columns, PacketRecord, RunSummary, SummaryContext,
    HANDOFF_COLUMNS, PACKET_COLUMNS,
};
use crate::radio::sinr_map;
use crate::scenario::{Scenario, ScenarioError, SWEEP_AXES};
use crate::sim::{count_handoffs, run_once, RunOptions, RunOutput, SimError};

#[derive(Debug, Error)]
pub enum BatchError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("unknown sweep axis `{axis}`; valid axes: {}", SWEEP_AXES.join(", "))]
    UnknownAxis { axis: String },
    #[error("sweep over `{axis}` has no values")]
    EmptySweep { axis: String },
}

#[derive(Debug, Clone)]
pub struct Batch {
    pub scenario: Scenario,
    /// Ordered by algorithm (scenario order), then seed.
    pub runs: Vec<RunOutput>,
}

/// Runs every (algorithm, seed) pair of the scenario, in parallel.
pub fn run_batch(scenario: &Scenario, options: RunOptions) -> Result<Batch, BatchError> {
    scenario.validate()?;
    let jobs: Vec<(Algorithm, u64)> = scenario
        .algorithms
        .iter()
        .flat_map(|&a| scenario.seeds.iter().map(move |&s| (a, s)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(a, s)| run_once(scenario, a, s, options))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Batch {
        scenario: scenario.clone(),
        runs,
    })
}

impl Batch {
    pub fn runs_of(&self, algorithm: Algorithm) -> impl Iterator<Item = &RunOutput> {
        self.runs.iter().filter(move |r| r.algorithm == algorithm)
    }

    pub fn run(&self, algorithm: Algorithm, seed: u64) -> Option<&RunOutput> {
        self.runs
            .iter()
            .find(|r| r.algorithm == algorithm && r.seed == seed)
    }

    /// Statistics over the concatenated ledgers of all seeds of one algorithm.
    pub fn pooled(&self, algorithm: Algorithm) -> Option<RunSummary> {
        let runs: Vec<&RunOutput> = self.runs_of(algorithm).collect();
        if runs.is_empty() {
            return None;
        }
        let records: Vec<PacketRecord> = runs.iter().flat_map(|r| r.records.iter().cloned()).collect();
        let sc = &self.scenario;
        let handoffs = runs
            .iter()
            .map(|r| count_handoffs(&r.handoffs, sc.warmup_s, sc.sim_time_s))
            .sum();
        let ctx = SummaryContext {
            algorithm: algorithm.name().to_string(),
            seed: "pooled".into(),
            warmup: sc.warmup_s,
            end: sc.sim_time_s,
            handoffs,
        };
        let table = sc.impairment_table().expect("validated");
        let mut s = summarize(&records, &ctx, &table);
        // Throughput is per run: average rather than sum across seeds.
        s.ul_tx_mbps /= runs.len() as f64;
        s.dl_rx_mbps /= runs.len() as f64;
        Some(s)
    }

    /// Rows of the cross-algorithm comparison, in scenario order.
    pub fn comparison(&self) -> Vec<RunSummary> {
        self.scenario
            .algorithms
            .iter()
            .filter_map(|&a| self.pooled(a))
            .collect()
    }

    /// Relative reduction of Comp-HO's outlier-excluded mean delay against
    /// `baseline`: `1 - comp / baseline`.
    pub fn delay_reduction_vs(&self, baseline: Algorithm) -> Option<f64> {
        let comp = self.pooled(Algorithm::CompHo)?;
        let base = self.pooled(baseline)?;
        Some(1.0 - comp.delay_mean_excl / base.delay_mean_excl)
    }
}

fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Writes `bytes` next to `path` and renames into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), BatchError> {
    let err = |source| BatchError::Write {
        path: path.display().to_string(),
        source,
    };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(err)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(err)?;
    f.write_all(bytes).map_err(err)?;
    f.sync_all().map_err(err)?;
    fs::rename(&tmp, path).map_err(err)?;
    Ok(())
}

pub fn packets_csv(records: &[PacketRecord]) -> Vec<u8> {
    let header: Vec<String> = PACKET_COLUMNS.iter().map(|s| s.to_string()).collect();
    csv_bytes(&header, records.iter().map(packet_row))
}

pub fn handoffs_csv(run: &RunOutput) -> Vec<u8> {
    let header: Vec<String> = HANDOFF_COLUMNS.iter().map(|s| s.to_string()).collect();
    csv_bytes(
        &header,
        run.handoffs.iter().map(|h| {
            vec![
                fmt_sig6(h.time),
                h.ue.to_string(),
                h.source.to_string(),
                h.target.to_string(),
                h.algorithm.name().to_string(),
                h.reason.to_string(),
                fmt_sig6(h.f_source),
                fmt_sig6(h.f_target),
            ]
        }),
    )
}

pub fn summaries_csv<'a>(summaries: impl IntoIterator<Item = &'a RunSummary>) -> Vec<u8> {
    csv_bytes(&summary_columns(), summaries.into_iter().map(RunSummary::row))
}

pub fn comparison_csv(batch: &Batch) -> Vec<u8> {
    let mut header = summary_columns();
    header.push("comp_ho_delay_reduction".into());
    let rows = batch.comparison().into_iter().map(|s| {
        let mut row = s.row();
        let alg = Algorithm::parse(&s.algorithm).expect("own name");
        row.push(batch.delay_reduction_vs(alg).map(fmt_sig6).unwrap_or_default());
        row
    });
    csv_bytes(&header, rows)
}

pub fn trace_tsv(run: &RunOutput) -> Option<Vec<u8>> {
    let log = run.trace.as_ref()?;
    let mut out = String::from("time\tkind\tue\tmec\tjob\n");
    for r in log {
        out.push_str(&r.to_tsv());
        out.push('\n');
    }
    Some(out.into_bytes())
}

pub fn trajectory_csv(run: &RunOutput) -> Vec<u8> {
    let header: Vec<String> = ["time", "ue", "x", "y"].iter().map(|s| s.to_string()).collect();
    csv_bytes(
        &header,
        run.trajectory
            .iter()
            .map(|p| vec![fmt_sig6(p.time), p.ue.to_string(), fmt_sig6(p.x), fmt_sig6(p.y)]),
    )
}

pub fn run_dir_name(run: &RunOutput) -> String {
    format!("{}_seed{}", run.algorithm.name(), run.seed)
}

/// Writes the resolved scenario, per-run ledgers and the summary tables.
/// Everything is rendered in memory first so a failing run leaves nothing.
pub fn export_batch(batch: &Batch, out: &Path, options: RunOptions) -> Result<(), BatchError> {
    let mut files: Vec<(PathBuf, Vec<u8>)> = Vec::new();
    files.push((
        out.join("scenario.toml"),
        batch.scenario.to_toml_string().into_bytes(),
    ));
    for run in &batch.runs {
        let dir = out.join("runs").join(run_dir_name(run));
        files.push((dir.join("packets.csv"), packets_csv(&run.records)));
        files.push((dir.join("handoffs.csv"), handoffs_csv(run)));
        if let Some(t) = trace_tsv(run) {
            files.push((dir.join("trace.tsv"), t));
        }
        if options.trajectories {
            files.push((dir.join("trajectories.csv"), trajectory_csv(run)));
        }
    }
    files.push((
        out.join("run_summary.csv"),
        summaries_csv(batch.runs.iter().map(|r| &r.summary)),
    ));
    files.push((out.join("comparison.csv"), comparison_csv(batch)));
    for (path, bytes) in files {
        write_atomic(&path, &bytes)?;
    }
    Ok(())
}

pub fn sinr_map_csv(layout: &Layout, scenario: &Scenario, step: f64) -> Vec<u8> {
    let header: Vec<String> = ["x", "y", "best_sector", "sinr_db"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let cells = sinr_map(&layout.area, step, &layout.sectors, &scenario.radio());
    csv_bytes(
        &header,
        cells.iter().map(|c| {
            vec![
                fmt_sig6(c.x),
                fmt_sig6(c.y),
                c.best_sector.to_string(),
                fmt_sig6(c.sinr_db),
            ]
        }),
    )
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub batch: Batch,
}

pub fn parse_sweep(text: &str) -> Result<(String, Vec<f64>), BatchError> {
    let (axis, values) = text.split_once('=').unwrap_or((text, ""));
    let axis = axis.trim().to_string();
    if !SWEEP_AXES.contains(&axis.as_str()) {
        return Err(BatchError::UnknownAxis { axis });
    }
    let values: Vec<f64> = values
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse::<f64>().map_err(|_| {
                BatchError::Scenario(ScenarioError::Invalid {
                    key: axis.clone(),
                    line: None,
                    message: format!("`{v}` is not a number"),
                })
            })
        })
        .collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err(BatchError::EmptySweep { axis });
    }
    Ok((axis, values))
}

/// One batch per axis value.
pub fn run_sweep(
    scenario: &Scenario,
    axis: &str,
    values: &[f64],
    options: RunOptions,
) -> Result<Vec<SweepPoint>, BatchError> {
    if !SWEEP_AXES.contains(&axis) {
        return Err(BatchError::UnknownAxis {
            axis: axis.to_string(),
        });
    }
    if values.is_empty() {
        return Err(BatchError::EmptySweep {
            axis: axis.to_string(),
        });
    }
    values
        .iter()
        .map(|&v| {
            let mut s = scenario.clone();
            s.set(axis, v)?;
            Ok(SweepPoint {
                value: v,
                batch: run_batch(&s, options)?,
            })
        })
        .collect()
}

pub fn sweep_csv(axis: &str, points: &[SweepPoint]) -> Vec<u8> {
    let mut header = vec![axis.to_string()];
    header.extend(summary_columns());
    let rows = points.iter().flat_map(|p| {
        p.batch.comparison().into_iter().map(move |s| {
            let mut row = vec![fmt_sig6(p.value)];
            row.extend(s.row());
            row
        })
    });
    csv_bytes(&header, rows)
}

pub fn export_sweep(
    scenario: &Scenario,
    axis: &str,
    points: &[SweepPoint],
    out: &Path,
) -> Result<(), BatchError> {
    write_atomic(&out.join("scenario.toml"), scenario.to_toml_string().as_bytes())?;
    write_atomic(&out.join(format!("sweep_{axis}.csv")), &sweep_csv(axis, points))?;
    let header = {
        let mut h = vec![axis.to_string()];
        h.extend(summary_columns());
        h
    };
    let rows = points.iter().flat_map(|p| {
        p.batch.runs.iter().map(move |r| {
            let mut row = vec![fmt_sig6(p.value)];
            row.extend(r.summary.row());
            row
        })
    });
    write_atomic(&out.join("run_summary.csv"), &csv_bytes(&header, rows))?;
    Ok(())
}
